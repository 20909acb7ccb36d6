#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phonoloc/chain_modes.hpp"
#include "phonoloc/disorder.hpp"
#include "phonoloc/sampling.hpp"

namespace phonoloc::spectroscopy {

// Blue sideband (omega - omega_L = +Omega_n) carries S0 * (nbar + 1); the red
// one (omega - omega_L = -Omega_n) carries S0 * nbar.
enum class Sideband { blue, red };

enum class Kernel { binned, lorentzian };

/// Uniform grid over |omega - omega_L| in units of omega_t.
struct FrequencyGrid {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t bins = 1000;

    double width() const { return (hi - lo) / static_cast<double>(bins); }
    double center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * width(); }
    /// Bin holding x, or nullopt outside [lo, hi]. x == hi falls in the last bin.
    std::optional<std::size_t> bin_of(double x) const;
};

inline constexpr double kDefaultNbar = 10.0;

struct SpectrumRequest {
    Sideband sideband = Sideband::blue;
    double nbar = kDefaultNbar;
    Kernel kernel = Kernel::binned;
    double gamma = 0.0;  // Lorentzian HWHM; 0 picks 0.25 |U| (or two bins when U = 0)
    std::optional<FrequencyGrid> grid;
    std::size_t bins = 1000;

    /// S0^+/- in units of S0.
    double prefactor() const { return sideband == Sideband::blue ? nbar + 1.0 : nbar; }
};

struct Spectrum {
    Eigen::VectorXd frequencies;  // omega - omega_L, ascending
    Eigen::VectorXd intensities;  // spectral density in units of S0 per omega_t
    double prefactor = 1.0;
    double total_weight = 0.0;    // averaged sum of line weights, prefactor excluded
    double weight_outside = 0.0;  // averaged line weight that fell off the grid
    double gamma = 0.0;           // 0 for binned spectra
    std::size_t n_samples = 0;
    bool exact = false;

    double bin_width() const;
    /// Integral of intensities over the grid.
    double integrated() const;
};

/// Eigenmodes of one realization with their fluorescence weights
/// w_n = |sum_j s_j M_jn|^2. Frequencies are descending.
struct ModeWeights {
    Eigen::VectorXd frequencies;
    Eigen::VectorXd weights;
    Eigen::MatrixXd wavefunctions;
};

ModeWeights mode_weights(const disorder::SpinConfig& config, const disorder::OnsiteEnergies& eps,
                         const chain::LocalModeParams& local);

/// Grid spanning every eigenfrequency a realization can have, padded by 1%.
FrequencyGrid default_grid(const chain::LocalModeParams& local, double U, std::size_t bins);

Spectrum fluorescence_spectrum(const disorder::DisorderModel& model, const chain::LocalModeParams& local, double U,
                               const SpectrumRequest& request, const SamplingPlan& plan);

/// Disorder-averaged local density of states at one site, sideband-free
/// (omega - omega_L = +Omega_n, unit prefactor).
Spectrum ldos(const disorder::DisorderModel& model, const chain::LocalModeParams& local, double U, std::size_t site,
              const SpectrumRequest& request, const SamplingPlan& plan);

struct ComPeak {
    double weight = 0.0;              // mean line weight inside the window
    double std_error = 0.0;
    double integrated_weight = 0.0;   // summed line weight inside the window
    double mean_modes_in_window = 0.0;
    std::size_t n_samples = 0;
    bool analytic = false;
    std::vector<std::string> warnings;
};

/// Intensity of the fluorescence line at the COM frequency omega_t.
///
/// Per realization, the modes with |Omega_n - omega_t| <= window_halfwidth
/// are collected and their mean weight is taken as the line intensity; an
/// empty window contributes zero. The summed weight in the window is
/// reported alongside. With U = 0 and `analytic_fast_path` the exact second
/// moment sum_jl E[s_j s_l] / N of the isolated COM mode is returned instead.
ComPeak com_peak_weight(const disorder::DisorderModel& model, const chain::LocalModeParams& local, double U,
                        const SamplingPlan& plan, double window_halfwidth, bool analytic_fast_path = true);

struct ParticipationStats {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
};

/// Mean participation ratio of the ceil(fraction * N) modes carrying the
/// largest fluorescence weight, averaged over realizations.
ParticipationStats weighted_mode_participation(const disorder::DisorderModel& model,
                                               const chain::LocalModeParams& local, double U, double fraction,
                                               const SamplingPlan& plan);

}  // namespace phonoloc::spectroscopy
