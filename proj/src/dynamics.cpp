#include "phonoloc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include "phonoloc/errors.hpp"

namespace phonoloc::dynamics {

namespace {

struct SeriesAcc {
    std::vector<VectorMoments> per_time;
};

std::vector<Eigen::VectorXcd> amplitudes_at(const Eigen::VectorXd& evals, const Eigen::MatrixXd& evecs,
                                           std::size_t source, std::span<const double> times) {
    const Eigen::VectorXd overlap = evecs.row(static_cast<Eigen::Index>(source)).transpose();
    const Eigen::MatrixXcd basis = evecs.cast<std::complex<double>>();
    std::vector<Eigen::VectorXcd> out;
    out.reserve(times.size());
    for (double t : times) {
        Eigen::VectorXcd phase(evals.size());
        for (Eigen::Index n = 0; n < evals.size(); ++n) phase(n) = std::polar(overlap(n), -evals(n) * t);
        out.push_back(basis * phase);
    }
    return out;
}

std::vector<Eigen::VectorXd> densities_at(const Eigen::VectorXd& evals, const Eigen::MatrixXd& evecs,
                                          std::size_t source, std::span<const double> times) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(times.size());
    for (const auto& psi : amplitudes_at(evals, evecs, source, times)) out.push_back(psi.cwiseAbs2());
    return out;
}

}  // namespace

double LocalizationFit::value() const {
    if (!valid) throw FitInvalid(diagnostic.empty() ? "localization fit rejected" : diagnostic);
    return xi;
}

SinglePhononHamiltonian build_hamiltonian(const disorder::OnsiteEnergies& eps, const chain::LocalModeParams& local) {
    if (static_cast<std::size_t>(eps.eps.size()) != local.size()) {
        throw InvalidArgument("on-site energies do not match the chain size");
    }
    SinglePhononHamiltonian h{local.hopping};
    h.matrix.diagonal() = eps.eps;
    return h;
}

std::vector<Eigen::VectorXcd> evolve_amplitudes(const SinglePhononHamiltonian& h, std::size_t source_site,
                                                std::span<const double> times) {
    if (source_site >= static_cast<std::size_t>(h.matrix.rows())) throw InvalidArgument("source site out of range");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.matrix);
    return amplitudes_at(solver.eigenvalues(), solver.eigenvectors(), source_site, times);
}

std::vector<DensityProfile> evolve_single_phonon(const SinglePhononHamiltonian& h, std::size_t source_site,
                                                 std::span<const double> times) {
    if (source_site >= static_cast<std::size_t>(h.matrix.rows())) throw InvalidArgument("source site out of range");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.matrix);
    auto dens = densities_at(solver.eigenvalues(), solver.eigenvectors(), source_site, times);
    std::vector<DensityProfile> out;
    out.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        DensityProfile p;
        p.values = std::move(dens[i]);
        p.std_error = Eigen::VectorXd::Zero(p.values.size());
        p.time = times[i];
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<DensityProfile> average_density_series(const disorder::DisorderModel& model,
                                                   const chain::LocalModeParams& local, double U,
                                                   std::size_t source_site, std::span<const double> times,
                                                   const SamplingPlan& plan) {
    const auto n = static_cast<Eigen::Index>(local.size());
    if (model.n_sites() != local.size()) throw InvalidArgument("disorder model does not match the chain size");
    if (source_site >= local.size()) throw InvalidArgument("source site out of range");

    const RealizationSource source(model, plan);
    auto make = [&] {
        SeriesAcc acc;
        acc.per_time.assign(times.size(), VectorMoments(n));
        return acc;
    };
    auto accumulate = [&](SeriesAcc& acc, const disorder::SpinConfig& config, std::size_t) {
        const auto h = build_hamiltonian(disorder::onsite_energies(config, local, U), local);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.matrix);
        const auto dens = densities_at(solver.eigenvalues(), solver.eigenvectors(), source_site, times);
        for (std::size_t i = 0; i < times.size(); ++i) acc.per_time[i].add(dens[i], config.weight);
    };
    auto merge = [](SeriesAcc& into, const SeriesAcc& from) {
        for (std::size_t i = 0; i < into.per_time.size(); ++i) into.per_time[i].merge(from.per_time[i]);
    };
    const auto total = reduce_realizations<SeriesAcc>(source, plan.threads, make, accumulate, merge);

    std::vector<DensityProfile> out;
    out.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        DensityProfile p;
        p.values = total.per_time[i].mean();
        p.std_error = total.per_time[i].standard_error(source.exact());
        p.time = times[i];
        p.n_samples = source.size();
        p.exact = source.exact();
        out.push_back(std::move(p));
    }
    return out;
}

DensityProfile average_density(const disorder::DisorderModel& model, const chain::LocalModeParams& local, double U,
                               std::size_t source_site, double t_final, const SamplingPlan& plan) {
    const double times[] = {t_final};
    return std::move(average_density_series(model, local, U, source_site, times, plan).front());
}

std::vector<double> tail_profile(const DensityProfile& profile, std::size_t source_site) {
    const std::size_t n = static_cast<std::size_t>(profile.values.size());
    if (source_site >= n) throw InvalidArgument("source site out of range");
    const std::size_t reach = std::max(source_site, n - 1 - source_site);
    std::vector<double> tail(reach + 1, 0.0);
    tail[0] = profile.values(static_cast<Eigen::Index>(source_site));
    for (std::size_t d = 1; d <= reach; ++d) {
        double sum = 0.0;
        int sides = 0;
        if (d <= source_site) {
            sum += profile.values(static_cast<Eigen::Index>(source_site - d));
            ++sides;
        }
        if (source_site + d < n) {
            sum += profile.values(static_cast<Eigen::Index>(source_site + d));
            ++sides;
        }
        tail[d] = sum / sides;
    }
    return tail;
}

LocalizationFit fit_localization_length(const DensityProfile& profile, std::size_t source_site,
                                        const FitOptions& options) {
    const auto tail = tail_profile(profile, source_site);
    const std::size_t reach = tail.size() - 1;
    LocalizationFit fit;

    std::vector<std::size_t> distances;
    if (options.window) {
        const std::size_t lo = std::max<std::size_t>(1, options.window->min_distance);
        const std::size_t hi = std::min(reach, options.window->max_distance);
        for (std::size_t d = lo; d <= hi; ++d) {
            if (!(tail[d] > 0.0)) {
                fit.window_shrunk = true;
                break;
            }
            distances.push_back(d);
        }
    } else {
        const double peak = profile.values.maxCoeff();
        for (std::size_t d = 1; d <= reach; ++d) {
            const double y = tail[d];
            if (y > 0.0 && y >= options.floor_fraction * peak && y <= options.ceiling_fraction * peak) {
                distances.push_back(d);
            }
        }
    }

    fit.n_points = distances.size();
    if (!distances.empty()) fit.fit_window = {distances.front(), distances.back()};
    const std::size_t needed = options.window ? std::size_t{4} : std::max<std::size_t>(4, options.min_points);
    if (distances.size() < needed) {
        std::ostringstream msg;
        msg << "fit window has " << distances.size() << " usable points, need " << needed;
        fit.diagnostic = msg.str();
        return fit;
    }

    double sx = 0, sy = 0;
    for (auto d : distances) {
        sx += static_cast<double>(d);
        sy += std::log(tail[d]);
    }
    const double k = static_cast<double>(distances.size());
    const double mx = sx / k, my = sy / k;
    double sxx = 0, sxy = 0, syy = 0;
    for (auto d : distances) {
        const double dx = static_cast<double>(d) - mx;
        const double dy = std::log(tail[d]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 0.0;
    fit.xi = fit.slope < 0.0 ? -1.0 / fit.slope : 0.0;

    std::ostringstream msg;
    if (fit.slope >= 0.0) {
        msg << "tail does not decay (slope " << fit.slope << ")";
    } else if (fit.r_squared < options.min_r_squared) {
        msg << "tail is not exponential: r^2 = " << fit.r_squared << " < " << options.min_r_squared;
    } else {
        fit.valid = true;
    }
    fit.diagnostic = msg.str();
    return fit;
}

double participation_ratio(const Eigen::Ref<const Eigen::VectorXd>& v) {
    return 1.0 / v.array().square().square().sum();
}

double spatial_variance(const DensityProfile& profile) {
    const double total = profile.values.sum();
    double mean = 0.0;
    for (Eigen::Index j = 0; j < profile.values.size(); ++j) mean += static_cast<double>(j) * profile.values(j);
    mean /= total;
    double var = 0.0;
    for (Eigen::Index j = 0; j < profile.values.size(); ++j) {
        const double d = static_cast<double>(j) - mean;
        var += d * d * profile.values(j);
    }
    return var / total;
}

}  // namespace phonoloc::dynamics
