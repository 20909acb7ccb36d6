#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace phonoloc::chain {

/// Radial-mode description of an equally spaced ion chain.
///
/// Frequencies are measured in units of the trap frequency, so omega_t is 1
/// unless a caller deliberately rescales.
struct ChainParams {
    std::size_t n_ions = 1;
    double beta = 0.05;  // Coulomb-to-trap energy ratio
    double omega_t = 1.0;

    /// Throws InvalidArgument on a hard violation; returns soft warnings
    /// (currently only the weak-coupling threshold beta > 0.2).
    std::vector<std::string> validate() const;
};

inline constexpr double kWeakCouplingBetaLimit = 0.2;

struct CouplingMatrix {
    Eigen::MatrixXd entries;
};

struct ModeData {
    ChainParams params;
    Eigen::VectorXd frequencies;      // Omega_n / omega_t, descending
    Eigen::MatrixXd wavefunctions;    // M_jn, column n is mode n
    Eigen::VectorXd mode_eigenvalues; // eigenvalues of V, same order
};

/// Local-oscillator picture: on-site frequencies and the dipolar hopping
/// t_jk = t / |j-k|^3 with t = beta * omega_t.
struct LocalModeParams {
    Eigen::VectorXd onsite;
    Eigen::MatrixXd hopping;  // zero diagonal
    double t = 0.0;
    double omega_t = 1.0;
    std::size_t hopping_range = 0;  // 0 keeps every pair

    std::size_t size() const { return static_cast<std::size_t>(onsite.size()); }
};

/// Red-sideband drive. All frequencies in units of omega_t.
struct LaserParams {
    double rabi = 0.0;        // Omega_L
    double lamb_dicke = 0.1;  // eta_L = k_L / sqrt(2 m omega_t)
    double detuning = 0.1;    // delta = omega_L - omega_0 + omega_t

    double coupling() const { return 0.5 * rabi * lamb_dicke; }  // F
};

inline constexpr double kMaxDriveRatio = 0.3;

/// Second-order couplings generated by the multimode sideband drive.
///
/// The mode-resolved tensors are stored densely; `lambda(j, k, n)` and
/// `kappa(j, n, m)` index them.
struct EffectiveCouplings {
    std::size_t n = 0;
    Eigen::MatrixXcd drive;             // F_jn
    Eigen::VectorXd mode_detunings;     // delta_n
    std::vector<std::complex<double>> lambda_tensor;
    std::vector<std::complex<double>> kappa_tensor;
    Eigen::MatrixXcd spin_spin;         // J_jk = sum_n lambda_jkn
    double U = 0.0;                     // -F^2 / delta
    double J = 0.0;                     // (F / delta)^2 beta omega_t
    double max_drive_ratio = 0.0;       // max |F_jn| / |delta_n|
    std::vector<std::string> warnings;

    std::complex<double> lambda(std::size_t j, std::size_t k, std::size_t mode) const {
        return lambda_tensor[(j * n + k) * n + mode];
    }
    std::complex<double> kappa(std::size_t j, std::size_t mode_a, std::size_t mode_b) const {
        return kappa_tensor[(j * n + mode_a) * n + mode_b];
    }
    /// Stark shift felt by local mode j: sum_nm kappa_jnm M_jn M_jm.
    std::complex<double> local_shift(std::size_t j, const Eigen::MatrixXd& wavefunctions) const;
};

inline constexpr std::size_t kMaxTensorIons = 256;

/// V_jk = |j-k|^-3 off the diagonal, diagonal = minus the off-diagonal row
/// sum. A nonzero `range` keeps only pairs with |j-k| <= range.
CouplingMatrix build_coupling_matrix(const ChainParams& params, std::size_t range = 0);

/// Throws InstabilityError when 1 + beta * min(V_n) <= 0.
ModeData diagonalize_modes(const CouplingMatrix& coupling, const ChainParams& params);

LocalModeParams local_mode_params(const ChainParams& params, std::size_t hopping_range = 0);

/// H_p assembled as an N x N matrix: onsite on the diagonal, hopping off it.
Eigen::MatrixXd phonon_hamiltonian(const LocalModeParams& local);

/// Throws DivergentDetuning if some delta_n vanishes and TooLarge when the
/// chain exceeds kMaxTensorIons.
EffectiveCouplings effective_couplings(const LaserParams& laser, const ModeData& modes);

}  // namespace phonoloc::chain
