#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phonoloc/chain_modes.hpp"
#include "phonoloc/disorder.hpp"
#include "phonoloc/sampling.hpp"

namespace phonoloc::dynamics {

/// H_jk = t_jk off the diagonal, H_jj = eps_j. Single-phonon sector.
struct SinglePhononHamiltonian {
    Eigen::MatrixXd matrix;
};

struct DensityProfile {
    Eigen::VectorXd values;     // <n_j>
    Eigen::VectorXd std_error;  // per site, zero for exact averages
    double time = 0.0;          // units of 1/omega_t
    std::size_t n_samples = 1;
    bool exact = true;

    double total() const { return values.sum(); }
};

struct FitWindow {
    std::size_t min_distance = 1;
    std::size_t max_distance = 0;
};

/// Exponential-tail fit settings.
///
/// Without an explicit window the fit uses every distance d >= 1 whose
/// two-sided mean occupation lies in [floor_fraction, ceiling_fraction]
/// times the profile maximum, and needs `min_points` of them.
struct FitOptions {
    std::optional<FitWindow> window;
    double floor_fraction = 1e-6;
    double ceiling_fraction = 1.0;
    std::size_t min_points = 6;
    double min_r_squared = 0.8;
};

struct LocalizationFit {
    double xi = 0.0;
    double slope = 0.0;  // d ln<n> / d distance, equals -1/xi
    double intercept = 0.0;
    double r_squared = 0.0;
    FitWindow fit_window;
    std::size_t n_points = 0;
    bool valid = false;
    bool window_shrunk = false;
    std::string diagnostic;

    /// xi, or FitInvalid when the fit was rejected.
    double value() const;
};

SinglePhononHamiltonian build_hamiltonian(const disorder::OnsiteEnergies& eps, const chain::LocalModeParams& local);

/// Amplitudes exp(-iHt) e_source at each requested time.
std::vector<Eigen::VectorXcd> evolve_amplitudes(const SinglePhononHamiltonian& h, std::size_t source_site,
                                                std::span<const double> times);

std::vector<DensityProfile> evolve_single_phonon(const SinglePhononHamiltonian& h, std::size_t source_site,
                                                 std::span<const double> times);

/// Disorder-averaged <n_j(t)> for every requested time.
std::vector<DensityProfile> average_density_series(const disorder::DisorderModel& model,
                                                   const chain::LocalModeParams& local, double U,
                                                   std::size_t source_site, std::span<const double> times,
                                                   const SamplingPlan& plan);

DensityProfile average_density(const disorder::DisorderModel& model, const chain::LocalModeParams& local, double U,
                               std::size_t source_site, double t_final, const SamplingPlan& plan);

LocalizationFit fit_localization_length(const DensityProfile& profile, std::size_t source_site,
                                        const FitOptions& options = {});

/// Two-sided mean of the profile at each distance 1..max from the source;
/// distances reached on one side only use that side.
std::vector<double> tail_profile(const DensityProfile& profile, std::size_t source_site);

/// 1 / sum_j |v_j|^4 for a normalized vector.
double participation_ratio(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Variance of the site index under the normalized profile.
double spatial_variance(const DensityProfile& profile);

inline std::size_t center_site(std::size_t n) { return n / 2; }

/// Long-time reference time 10^3 / (beta omega_t).
inline double default_final_time(const chain::ChainParams& p) { return 1e3 / (p.beta * p.omega_t); }

}  // namespace phonoloc::dynamics
