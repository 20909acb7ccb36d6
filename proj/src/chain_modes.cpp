#include "phonoloc/chain_modes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "phonoloc/errors.hpp"
#include "phonoloc/linalg.hpp"

namespace phonoloc::chain {

namespace {

double inverse_cube(std::size_t j, std::size_t k) {
    const double d = static_cast<double>(j > k ? j - k : k - j);
    return 1.0 / (d * d * d);
}

bool within_range(std::size_t j, std::size_t k, std::size_t range) {
    return range == 0 || (j > k ? j - k : k - j) <= range;
}

}  // namespace

std::vector<std::string> ChainParams::validate() const {
    if (n_ions < 1) throw InvalidArgument("chain needs at least one ion");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be positive and finite");
    if (!(omega_t > 0.0) || !std::isfinite(omega_t)) throw InvalidArgument("omega_t must be positive");
    std::vector<std::string> warnings;
    if (beta > kWeakCouplingBetaLimit) {
        std::ostringstream msg;
        msg << "weak-coupling assumption violated: beta = " << beta << " > " << kWeakCouplingBetaLimit;
        warnings.push_back(msg.str());
    }
    return warnings;
}

CouplingMatrix build_coupling_matrix(const ChainParams& params, std::size_t range) {
    const std::size_t n = params.n_ions;
    if (n < 1) throw InvalidArgument("chain needs at least one ion");
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double row = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k == j || !within_range(j, k, range)) continue;
            v(j, k) = inverse_cube(j, k);
            row += v(j, k);
        }
        v(j, j) = -row;
    }
    return {std::move(v)};
}

ModeData diagonalize_modes(const CouplingMatrix& coupling, const ChainParams& params) {
    params.validate();
    const auto& v = coupling.entries;
    if (v.rows() != static_cast<Eigen::Index>(params.n_ions) || v.cols() != v.rows()) {
        throw InvalidArgument("coupling matrix does not match the chain size");
    }
    if ((v - v.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        throw InvalidArgument("coupling matrix is not symmetric");
    }

    auto eig = linalg::symmetric_eigensystem(v);
    const double lowest = eig.values.minCoeff();
    if (1.0 + params.beta * lowest <= 0.0) {
        const double critical = -1.0 / lowest;
        std::ostringstream msg;
        msg << "radial instability: 1 + beta * V_min = " << 1.0 + params.beta * lowest
            << " <= 0 (critical beta = " << critical << ")";
        throw InstabilityError(msg.str(), critical);
    }

    ModeData out;
    out.params = params;
    out.mode_eigenvalues = eig.values;
    out.wavefunctions = std::move(eig.vectors);
    out.frequencies = (1.0 + params.beta * out.mode_eigenvalues.array()).sqrt() * params.omega_t;
    return out;
}

LocalModeParams local_mode_params(const ChainParams& params, std::size_t hopping_range) {
    params.validate();
    const std::size_t n = params.n_ions;
    LocalModeParams local;
    local.t = params.beta * params.omega_t;
    local.omega_t = params.omega_t;
    local.hopping_range = hopping_range;
    local.hopping = Eigen::MatrixXd::Zero(n, n);
    local.onsite = Eigen::VectorXd::Constant(n, params.omega_t);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
            if (k == j || !within_range(j, k, hopping_range)) continue;
            local.hopping(j, k) = local.t * inverse_cube(j, k);
            local.onsite(j) -= local.hopping(j, k);
        }
    }
    return local;
}

Eigen::MatrixXd phonon_hamiltonian(const LocalModeParams& local) {
    Eigen::MatrixXd h = local.hopping;
    h.diagonal() = local.onsite;
    return h;
}

std::complex<double> EffectiveCouplings::local_shift(std::size_t j, const Eigen::MatrixXd& m) const {
    std::complex<double> sum = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) sum += kappa(j, a, b) * m(j, a) * m(j, b);
    }
    return sum;
}

EffectiveCouplings effective_couplings(const LaserParams& laser, const ModeData& modes) {
    const std::size_t n = static_cast<std::size_t>(modes.frequencies.size());
    if (n > kMaxTensorIons) {
        throw TooLarge("effective coupling tensors are limited to " + std::to_string(kMaxTensorIons) + " ions");
    }
    if (laser.detuning == 0.0) throw DivergentDetuning("sideband detuning delta is zero");

    const double omega_t = modes.params.omega_t;
    EffectiveCouplings out;
    out.n = n;
    out.mode_detunings.resize(n);
    out.drive.resize(n, n);

    // omega_L - omega_0 = -Omega_n + delta_n, delta = omega_L - omega_0 + omega_t.
    for (std::size_t m = 0; m < n; ++m) {
        const double dn = laser.detuning - (omega_t - modes.frequencies(m));
        if (std::abs(dn) < 1e-14 * std::max(1.0, std::abs(laser.detuning))) {
            throw DivergentDetuning("mode " + std::to_string(m) + " is resonant with the drive (delta_n = 0)");
        }
        out.mode_detunings(m) = dn;
        const double eta_n = laser.lamb_dicke * std::sqrt(omega_t / modes.frequencies(m));
        for (std::size_t j = 0; j < n; ++j) {
            out.drive(j, m) = std::complex<double>(0.0, 0.5 * laser.rabi * eta_n * modes.wavefunctions(j, m));
        }
    }

    for (std::size_t m = 0; m < n; ++m) {
        for (std::size_t j = 0; j < n; ++j) {
            out.max_drive_ratio = std::max(out.max_drive_ratio, std::abs(out.drive(j, m)) / std::abs(out.mode_detunings(m)));
        }
    }

    out.lambda_tensor.assign(n * n * n, 0.0);
    out.kappa_tensor.assign(n * n * n, 0.0);
    out.spin_spin = Eigen::MatrixXcd::Zero(n, n);
    const auto& f = out.drive;
    const auto& d = out.mode_detunings;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t m = 0; m < n; ++m) {
                const auto value = 2.0 * f(j, m) * std::conj(f(k, m)) / d(m);
                out.lambda_tensor[(j * n + k) * n + m] = value;
                out.spin_spin(j, k) += value;
            }
        }
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) {
                out.kappa_tensor[(j * n + a) * n + b] =
                    -f(j, a) * std::conj(f(j, b)) * (d(a) + d(b)) / (2.0 * d(a) * d(b));
            }
        }
    }

    const double big_f = laser.coupling();
    out.U = -big_f * big_f / laser.detuning;
    out.J = (big_f / laser.detuning) * (big_f / laser.detuning) * modes.params.beta * omega_t;

    if (out.max_drive_ratio > kMaxDriveRatio) {
        std::ostringstream msg;
        msg << "second-order expansion questionable: max |F_jn|/|delta_n| = " << out.max_drive_ratio << " > "
            << kMaxDriveRatio;
        out.warnings.push_back(msg.str());
    }
    return out;
}

}  // namespace phonoloc::chain
