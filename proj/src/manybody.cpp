#include "phonoloc/manybody.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "phonoloc/errors.hpp"
#include "phonoloc/linalg.hpp"

namespace phonoloc::manybody {

namespace {

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
    return a > std::numeric_limits<std::uint64_t>::max() - b ? std::numeric_limits<std::uint64_t>::max() : a + b;
}

void enumerate(std::size_t site, std::size_t left, std::size_t cap, Occupation& occ, std::vector<Occupation>& out) {
    if (site + 1 == occ.size()) {
        if (left <= cap) {
            occ[site] = static_cast<std::uint16_t>(left);
            out.push_back(occ);
        }
        return;
    }
    for (std::size_t n = std::min(left, cap) + 1; n-- > 0;) {
        occ[site] = static_cast<std::uint16_t>(n);
        enumerate(site + 1, left - n, cap, occ, out);
    }
    occ[site] = 0;
}

struct Lowest {
    double energy;
    Eigen::VectorXd vector;
    double residual;
};

Lowest dense_lowest(const Eigen::SparseMatrix<double>& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver{Eigen::MatrixXd(h)};
    Lowest out{solver.eigenvalues()(0), solver.eigenvectors().col(0), 0.0};
    out.residual = (h * out.vector - out.energy * out.vector).norm();
    return out;
}

// Restarted Lanczos with full reorthogonalization; each restart begins from
// the current lowest Ritz vector.
Lowest lanczos_lowest(const Eigen::SparseMatrix<double>& h, const SolverOptions& opt) {
    const Eigen::Index dim = h.rows();
    const Eigen::Index m = std::min<Eigen::Index>(dim, static_cast<Eigen::Index>(std::max<std::size_t>(opt.krylov_dim, 2)));

    std::mt19937_64 gen(0x5eed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Eigen::VectorXd start(dim);
    for (Eigen::Index i = 0; i < dim; ++i) start(i) = uni(gen);
    start.normalize();

    Lowest best{0.0, start, std::numeric_limits<double>::infinity()};
    for (std::size_t restart = 0; restart <= opt.max_restarts; ++restart) {
        Eigen::MatrixXd v(dim, m);
        Eigen::VectorXd alpha(m), beta(m);
        v.col(0) = start;
        Eigen::Index k = 0;
        for (; k < m; ++k) {
            Eigen::VectorXd w = h * v.col(k);
            alpha(k) = v.col(k).dot(w);
            for (int pass = 0; pass < 2; ++pass) w -= v.leftCols(k + 1) * (v.leftCols(k + 1).transpose() * w);
            beta(k) = w.norm();
            if (k + 1 == m || beta(k) < 1e-13 * std::max(1.0, std::abs(alpha(k)))) break;
            v.col(k + 1) = w / beta(k);
        }
        const Eigen::Index size = std::min(k + 1, m);
        Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(size, size);
        for (Eigen::Index i = 0; i < size; ++i) {
            tri(i, i) = alpha(i);
            if (i + 1 < size) tri(i, i + 1) = tri(i + 1, i) = beta(i);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(tri);
        Eigen::VectorXd x = v.leftCols(size) * ritz.eigenvectors().col(0);
        x.normalize();
        const double theta = x.dot(h * x);
        const double residual = (h * x - theta * x).norm();
        best = {theta, x, residual};
        if (residual <= opt.tolerance * std::max(1.0, std::abs(theta))) return best;
        start = x;
    }
    std::ostringstream msg;
    msg << "Lanczos did not converge after " << opt.max_restarts << " restarts (residual " << best.residual << ")";
    throw ConvergenceFailure(msg.str(), best.residual);
}

}  // namespace

std::uint64_t FockBasis::count(std::size_t n_sites, std::size_t n_bosons, std::optional<std::size_t> max_occ) {
    // ways[m] = number of occupations of the sites seen so far holding m bosons
    std::vector<std::uint64_t> ways(n_bosons + 1, 0);
    ways[0] = 1;
    const std::size_t cap = max_occ.value_or(n_bosons);
    for (std::size_t s = 0; s < n_sites; ++s) {
        std::vector<std::uint64_t> next(n_bosons + 1, 0);
        for (std::size_t m = 0; m <= n_bosons; ++m) {
            for (std::size_t n = 0; n <= std::min(cap, m); ++n) next[m] = saturating_add(next[m], ways[m - n]);
        }
        ways.swap(next);
    }
    return ways[n_bosons];
}

FockBasis::FockBasis(std::size_t n_sites, std::size_t n_bosons, std::optional<std::size_t> max_occ, std::size_t cap)
    : n_sites_(n_sites), n_bosons_(n_bosons), max_occ_(max_occ) {
    if (n_sites < 1) throw InvalidArgument("Fock basis needs at least one site");
    if (n_bosons > std::numeric_limits<std::uint16_t>::max()) throw InvalidArgument("too many bosons");
    const auto dim = count(n_sites, n_bosons, max_occ);
    if (dim > cap) {
        std::ostringstream msg;
        msg << "Fock basis for N=" << n_sites << ", M=" << n_bosons << " has dimension " << dim << " > cap " << cap;
        throw TooLarge(msg.str());
    }
    if (dim == 0) throw InvalidArgument("no occupation fits the requested sector");
    states_.reserve(dim);
    Occupation occ(n_sites, 0);
    enumerate(0, n_bosons, max_occ.value_or(n_bosons), occ, states_);
}

std::optional<std::size_t> FockBasis::index_of(const Occupation& occ) const {
    const auto it = std::lower_bound(states_.begin(), states_.end(), occ, std::greater<>());
    if (it == states_.end() || *it != occ) return std::nullopt;
    return static_cast<std::size_t>(it - states_.begin());
}

double ManyBodyHamiltonian::asymmetry() const {
    const Eigen::SparseMatrix<double> t = matrix.transpose();
    const Eigen::SparseMatrix<double> diff = matrix - t;
    double worst = 0.0;
    for (Eigen::Index c = 0; c < diff.outerSize(); ++c) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(diff, c); it; ++it) worst = std::max(worst, std::abs(it.value()));
    }
    return worst;
}

ManyBodyHamiltonian build_bose_hubbard(std::shared_ptr<const FockBasis> basis, const disorder::OnsiteEnergies& eps,
                                       const chain::LocalModeParams& local, double U_int) {
    if (!basis) throw InvalidArgument("missing Fock basis");
    const std::size_t n = basis->n_sites();
    if (n != local.size() || static_cast<std::size_t>(eps.eps.size()) != n) {
        throw InvalidArgument("Fock basis, on-site energies and chain size disagree");
    }
    const std::size_t cap = basis->max_occ().value_or(basis->n_bosons());
    const auto dim = static_cast<Eigen::Index>(basis->dimension());

    std::vector<Eigen::Triplet<double>> entries;
    for (Eigen::Index i = 0; i < dim; ++i) {
        const Occupation& occ = basis->state(static_cast<std::size_t>(i));
        double diag = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double nj = occ[j];
            diag += eps.eps(static_cast<Eigen::Index>(j)) * nj + U_int * nj * (nj - 1.0);
        }
        entries.emplace_back(i, i, diag);

        Occupation hop = occ;
        for (std::size_t k = 0; k < n; ++k) {
            if (occ[k] == 0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                const double tjk = local.hopping(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
                if (j == k || tjk == 0.0 || occ[j] >= cap) continue;
                --hop[k];
                ++hop[j];
                const auto target = basis->index_of(hop);
                ++hop[k];
                --hop[j];
                const double amp = std::sqrt(static_cast<double>(occ[k]) * static_cast<double>(occ[j] + 1));
                entries.emplace_back(static_cast<Eigen::Index>(*target), i, tjk * amp);
            }
        }
    }

    ManyBodyHamiltonian h;
    h.basis = std::move(basis);
    h.matrix.resize(dim, dim);
    h.matrix.setFromTriplets(entries.begin(), entries.end());
    h.matrix.makeCompressed();
    h.eps = eps.eps;
    h.hopping = local.hopping;
    h.U_int = U_int;
    return h;
}

GroundStateResult ground_state(const ManyBodyHamiltonian& h, const SolverOptions& options) {
    if (!h.basis) throw InvalidArgument("Hamiltonian has no basis");
    const std::size_t dim = h.basis->dimension();
    Solver method = options.solver;
    if (method == Solver::automatic) method = dim <= options.dense_limit ? Solver::dense : Solver::lanczos;
    Lowest low = method == Solver::dense || dim < 3 ? dense_lowest(h.matrix) : lanczos_lowest(h.matrix, options);

    GroundStateResult out;
    linalg::fix_gauge(low.vector);
    out.energy = low.energy;
    out.residual = low.residual;
    out.method = method;
    out.density = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(h.basis->n_sites()));
    for (std::size_t i = 0; i < dim; ++i) {
        const double p = low.vector(static_cast<Eigen::Index>(i)) * low.vector(static_cast<Eigen::Index>(i));
        const Occupation& occ = h.basis->state(i);
        for (std::size_t j = 0; j < occ.size(); ++j) out.density(static_cast<Eigen::Index>(j)) += p * occ[j];
    }
    out.vector = std::move(low.vector);
    return out;
}

double SectorEnergies::kappa() const {
    const double gap = charge_gap();
    return gap > 0.0 ? 2.0 / gap : std::numeric_limits<double>::infinity();
}

SectorEnergies sector_energies(const disorder::OnsiteEnergies& eps, const chain::LocalModeParams& local, double U_int,
                               std::size_t n_bosons, std::optional<std::size_t> max_occ,
                               const SolverOptions& options) {
    if (n_bosons < 1) throw InvalidArgument("charge gap needs at least one boson");
    auto energy = [&](std::size_t m) {
        auto basis = std::make_shared<const FockBasis>(local.size(), m, max_occ);
        return ground_state(build_bose_hubbard(std::move(basis), eps, local, U_int), options).energy;
    };
    return {energy(n_bosons - 1), energy(n_bosons), energy(n_bosons + 1)};
}

double weighted_median(const std::vector<double>& values, const std::vector<double>& weights) {
    if (values.empty() || values.size() != weights.size()) throw InvalidArgument("median needs matching, non-empty inputs");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double running = 0.0;
    for (auto i : order) {
        running += weights[i];
        if (running >= 0.5 * total * (1.0 - 1e-12)) return values[i];
    }
    return values[order.back()];
}

CompressibilityStats compressibility_proxy(const disorder::DisorderModel& model, const chain::LocalModeParams& local,
                                           double U, double U_int, std::size_t n_bosons, const SamplingPlan& plan,
                                           std::optional<std::size_t> max_occ, const SolverOptions& options) {
    if (model.n_sites() != local.size()) throw InvalidArgument("disorder model does not match the chain size");
    FockBasis upper_probe(local.size(), n_bosons + 1, max_occ);  // fail early on an oversized sector

    struct Acc {
        std::vector<std::size_t> index;
        std::vector<double> gap, weight;
    };
    const RealizationSource source(model, plan);
    auto accumulate = [&](Acc& acc, const disorder::SpinConfig& config, std::size_t k) {
        const auto e = sector_energies(disorder::onsite_energies(config, local, U), local, U_int, n_bosons, max_occ,
                                       options);
        acc.index.push_back(k);
        acc.gap.push_back(e.charge_gap());
        acc.weight.push_back(config.weight);
    };
    auto merge = [](Acc& into, const Acc& from) {
        into.index.insert(into.index.end(), from.index.begin(), from.index.end());
        into.gap.insert(into.gap.end(), from.gap.begin(), from.gap.end());
        into.weight.insert(into.weight.end(), from.weight.begin(), from.weight.end());
    };
    const auto acc = reduce_realizations<Acc>(source, plan.threads, [] { return Acc{}; }, accumulate, merge);

    CompressibilityStats out;
    out.gaps = acc.gap;
    out.weights = acc.weight;
    out.n_samples = source.size();
    out.exact = source.exact();
    ScalarMoments gap, kappa;
    std::vector<double> kappas;
    for (std::size_t i = 0; i < acc.gap.size(); ++i) {
        const double g = acc.gap[i];
        const double kc = g > 0.0 ? 2.0 / g : std::numeric_limits<double>::infinity();
        gap.add(g, acc.weight[i]);
        kappa.add(kc, acc.weight[i]);
        kappas.push_back(kc);
    }
    out.mean_gap = gap.mean();
    out.gap_std_error = gap.standard_error(source.exact());
    out.median_gap = weighted_median(acc.gap, acc.weight);
    out.mean_kappa = kappa.mean();
    out.median_kappa = weighted_median(kappas, acc.weight);
    return out;
}

}  // namespace phonoloc::manybody
