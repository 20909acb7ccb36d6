#include "phonoloc/spectroscopy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "phonoloc/dynamics.hpp"
#include "phonoloc/errors.hpp"
#include "phonoloc/linalg.hpp"

namespace phonoloc::spectroscopy {

namespace {

struct GridAcc {
    Eigen::VectorXd density;
    double total = 0.0;
    double outside = 0.0;
};

void deposit(GridAcc& acc, const FrequencyGrid& grid, Kernel kernel, double gamma, double x, double w) {
    acc.total += w;
    const auto bin = grid.bin_of(x);
    if (!bin) acc.outside += w;
    if (kernel == Kernel::binned) {
        if (bin) acc.density(static_cast<Eigen::Index>(*bin)) += w / grid.width();
        return;
    }
    for (std::size_t i = 0; i < grid.bins; ++i) {
        const double d = grid.center(i) - x;
        acc.density(static_cast<Eigen::Index>(i)) += w * gamma / (std::numbers::pi * (d * d + gamma * gamma));
    }
}

double resolve_gamma(const SpectrumRequest& request, const FrequencyGrid& grid, double U) {
    if (request.kernel != Kernel::lorentzian) return 0.0;
    if (request.gamma > 0.0) return request.gamma;
    if (request.gamma < 0.0) throw InvalidArgument("Lorentzian width must be positive");
    return U != 0.0 ? 0.25 * std::abs(U) : 2.0 * grid.width();
}

// Shared driver for fluorescence and LDOS spectra; `line_weight` maps a
// realization's modes to per-mode weights.
template <class LineWeight>
Spectrum averaged_spectrum(const disorder::DisorderModel& model, const chain::LocalModeParams& local, double U,
                           const SpectrumRequest& request, const SamplingPlan& plan, double prefactor,
                           bool mirror_red, LineWeight line_weight) {
    if (model.n_sites() != local.size()) throw InvalidArgument("disorder model does not match the chain size");
    if (request.nbar < 0.0) throw InvalidArgument("mean phonon number must be non-negative");
    const FrequencyGrid grid = request.grid ? *request.grid : default_grid(local, U, request.bins);
    if (grid.bins == 0 || !(grid.hi > grid.lo)) throw InvalidArgument("frequency grid is empty");
    const double gamma = resolve_gamma(request, grid, U);

    const RealizationSource source(model, plan);
    auto make = [&] { return GridAcc{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.bins))}; };
    auto accumulate = [&](GridAcc& acc, const disorder::SpinConfig& config, std::size_t) {
        const auto modes = mode_weights(config, disorder::onsite_energies(config, local, U), local);
        const Eigen::VectorXd w = line_weight(config, modes);
        for (Eigen::Index n = 0; n < w.size(); ++n) {
            deposit(acc, grid, request.kernel, gamma, modes.frequencies(n), config.weight * w(n));
        }
    };
    auto merge = [](GridAcc& into, const GridAcc& from) {
        into.density += from.density;
        into.total += from.total;
        into.outside += from.outside;
    };
    const auto acc = reduce_realizations<GridAcc>(source, plan.threads, make, accumulate, merge);

    Spectrum out;
    out.prefactor = prefactor;
    out.total_weight = acc.total;
    out.weight_outside = acc.outside;
    out.gamma = gamma;
    out.n_samples = source.size();
    out.exact = source.exact();
    out.frequencies.resize(static_cast<Eigen::Index>(grid.bins));
    for (std::size_t i = 0; i < grid.bins; ++i) out.frequencies(static_cast<Eigen::Index>(i)) = grid.center(i);
    out.intensities = prefactor * acc.density;
    if (mirror_red) {
        out.frequencies = (-out.frequencies).reverse().eval();
        out.intensities = out.intensities.reverse().eval();
    }
    return out;
}

}  // namespace

std::optional<std::size_t> FrequencyGrid::bin_of(double x) const {
    if (!(x >= lo && x <= hi)) return std::nullopt;
    const auto i = static_cast<std::size_t>((x - lo) / width());
    return std::min(i, bins - 1);
}

double Spectrum::bin_width() const {
    return frequencies.size() > 1 ? std::abs(frequencies(1) - frequencies(0)) : 0.0;
}

double Spectrum::integrated() const {
    return intensities.sum() * bin_width();
}

ModeWeights mode_weights(const disorder::SpinConfig& config, const disorder::OnsiteEnergies& eps,
                         const chain::LocalModeParams& local) {
    if (config.size() != local.size()) throw InvalidArgument("spin configuration does not match the chain size");
    const auto h = dynamics::build_hamiltonian(eps, local);
    auto eig = linalg::symmetric_eigensystem(h.matrix);
    Eigen::VectorXd s(static_cast<Eigen::Index>(config.size()));
    for (std::size_t j = 0; j < config.size(); ++j) s(static_cast<Eigen::Index>(j)) = config.bits[j];
    ModeWeights out;
    out.weights = (eig.vectors.transpose() * s).array().square();
    out.frequencies = std::move(eig.values);
    out.wavefunctions = std::move(eig.vectors);
    return out;
}

FrequencyGrid default_grid(const chain::LocalModeParams& local, double U, std::size_t bins) {
    const double u = std::abs(U);
    double lo = local.omega_t, hi = local.omega_t, widest_row = 0.0;
    for (Eigen::Index j = 0; j < local.onsite.size(); ++j) {
        const double row = local.hopping.row(j).cwiseAbs().sum();
        widest_row = std::max(widest_row, row);
        lo = std::min(lo, local.onsite(j) - row - u);
        hi = std::max(hi, local.onsite(j) + row + u);
    }
    lo = std::min(lo, local.omega_t - 4.0 * u - 2.0 * widest_row);
    hi = std::max(hi, local.omega_t + 4.0 * u);
    const double pad = std::max(0.01 * (hi - lo), 1e-3 * local.omega_t);
    return {lo - pad, hi + pad, bins};
}

Spectrum fluorescence_spectrum(const disorder::DisorderModel& model, const chain::LocalModeParams& local, double U,
                               const SpectrumRequest& request, const SamplingPlan& plan) {
    return averaged_spectrum(model, local, U, request, plan, request.prefactor(), request.sideband == Sideband::red,
                             [](const disorder::SpinConfig&, const ModeWeights& m) { return m.weights; });
}

Spectrum ldos(const disorder::DisorderModel& model, const chain::LocalModeParams& local, double U, std::size_t site,
              const SpectrumRequest& request, const SamplingPlan& plan) {
    if (site >= local.size()) throw InvalidArgument("LDOS site out of range");
    const auto row = static_cast<Eigen::Index>(site);
    return averaged_spectrum(model, local, U, request, plan, 1.0, false,
                             [row](const disorder::SpinConfig&, const ModeWeights& m) {
                                 return Eigen::VectorXd(m.wavefunctions.row(row).transpose().array().square());
                             });
}

ComPeak com_peak_weight(const disorder::DisorderModel& model, const chain::LocalModeParams& local, double U,
                        const SamplingPlan& plan, double window_halfwidth, bool analytic_fast_path) {
    if (!(window_halfwidth > 0.0)) throw InvalidArgument("COM window halfwidth must be positive");
    if (model.n_sites() != local.size()) throw InvalidArgument("disorder model does not match the chain size");
    const auto n = static_cast<double>(local.size());
    const double omega_com = local.omega_t;

    ComPeak out;
    if (U == 0.0) {
        const auto clean = linalg::symmetric_eigensystem(chain::phonon_hamiltonian(local));
        std::size_t intruders = 0;
        for (Eigen::Index m = 1; m < clean.values.size(); ++m) {
            if (std::abs(clean.values(m) - omega_com) <= window_halfwidth) ++intruders;
        }
        if (intruders > 0) {
            std::ostringstream msg;
            msg << "WindowContaminated: " << intruders << " non-COM mode(s) within " << window_halfwidth
                << " of the COM frequency";
            out.warnings.push_back(msg.str());
        }
        if (analytic_fast_path) {
            out.weight = model.second_moments().sum() / n;
            out.integrated_weight = out.weight;
            out.mean_modes_in_window = 1.0;
            out.analytic = true;
            return out;
        }
    }

    struct Acc {
        ScalarMoments line, summed, count;
    };
    const RealizationSource source(model, plan);
    auto accumulate = [&](Acc& acc, const disorder::SpinConfig& config, std::size_t) {
        const auto modes = mode_weights(config, disorder::onsite_energies(config, local, U), local);
        double sum = 0.0;
        std::size_t k = 0;
        for (Eigen::Index m = 0; m < modes.frequencies.size(); ++m) {
            if (std::abs(modes.frequencies(m) - omega_com) <= window_halfwidth) {
                sum += modes.weights(m);
                ++k;
            }
        }
        acc.line.add(k > 0 ? sum / static_cast<double>(k) : 0.0, config.weight);
        acc.summed.add(sum, config.weight);
        acc.count.add(static_cast<double>(k), config.weight);
    };
    auto merge = [](Acc& into, const Acc& from) {
        into.line.merge(from.line);
        into.summed.merge(from.summed);
        into.count.merge(from.count);
    };
    const auto acc = reduce_realizations<Acc>(source, plan.threads, [] { return Acc{}; }, accumulate, merge);
    out.weight = acc.line.mean();
    out.std_error = acc.line.standard_error(source.exact());
    out.integrated_weight = acc.summed.mean();
    out.mean_modes_in_window = acc.count.mean();
    out.n_samples = source.size();
    return out;
}

ParticipationStats weighted_mode_participation(const disorder::DisorderModel& model,
                                               const chain::LocalModeParams& local, double U, double fraction,
                                               const SamplingPlan& plan) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("mode fraction must lie in (0, 1]");
    if (model.n_sites() != local.size()) throw InvalidArgument("disorder model does not match the chain size");
    const std::size_t n = local.size();
    const std::size_t keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * n - 1e-9)));

    const RealizationSource source(model, plan);
    auto accumulate = [&](ScalarMoments& acc, const disorder::SpinConfig& config, std::size_t) {
        const auto modes = mode_weights(config, disorder::onsite_energies(config, local, U), local);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return modes.weights(static_cast<Eigen::Index>(a)) > modes.weights(static_cast<Eigen::Index>(b));
        });
        double pr = 0.0;
        for (std::size_t i = 0; i < keep; ++i) {
            pr += dynamics::participation_ratio(modes.wavefunctions.col(static_cast<Eigen::Index>(order[i])));
        }
        acc.add(pr / static_cast<double>(keep), config.weight);
    };
    const auto acc = reduce_realizations<ScalarMoments>(
        source, plan.threads, [] { return ScalarMoments{}; }, accumulate,
        [](ScalarMoments& into, const ScalarMoments& from) { into.merge(from); });
    return {acc.mean(), acc.standard_error(source.exact()), source.size()};
}

}  // namespace phonoloc::spectroscopy
