#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "phonoloc/chain_modes.hpp"
#include "phonoloc/disorder.hpp"
#include "phonoloc/sampling.hpp"

namespace phonoloc::manybody {

inline constexpr std::size_t kDefaultBasisCap = 200000;

using Occupation = std::vector<std::uint16_t>;

/// Fixed-boson-number sector. States are sorted in descending lexicographic
/// order, so for two sites and two bosons: (2,0), (1,1), (0,2).
class FockBasis {
public:
    FockBasis(std::size_t n_sites, std::size_t n_bosons, std::optional<std::size_t> max_occ = std::nullopt,
              std::size_t cap = kDefaultBasisCap);

    std::size_t n_sites() const { return n_sites_; }
    std::size_t n_bosons() const { return n_bosons_; }
    std::optional<std::size_t> max_occ() const { return max_occ_; }
    std::size_t dimension() const { return states_.size(); }
    const Occupation& state(std::size_t i) const { return states_[i]; }
    std::optional<std::size_t> index_of(const Occupation& occ) const;

    /// Sector size without building it; saturates at UINT64_MAX.
    static std::uint64_t count(std::size_t n_sites, std::size_t n_bosons, std::optional<std::size_t> max_occ);

private:
    std::size_t n_sites_;
    std::size_t n_bosons_;
    std::optional<std::size_t> max_occ_;
    std::vector<Occupation> states_;
};

struct ManyBodyHamiltonian {
    std::shared_ptr<const FockBasis> basis;
    Eigen::SparseMatrix<double> matrix;
    Eigen::VectorXd eps;
    Eigen::MatrixXd hopping;
    double U_int = 0.0;

    /// max |H - H^T|; zero by construction.
    double asymmetry() const;
};

/// sum_jk t_jk a_j^+ a_k + sum_j eps_j n_j + U_int sum_j n_j (n_j - 1).
ManyBodyHamiltonian build_bose_hubbard(std::shared_ptr<const FockBasis> basis, const disorder::OnsiteEnergies& eps,
                                       const chain::LocalModeParams& local, double U_int);

enum class Solver { automatic, dense, lanczos };

struct SolverOptions {
    Solver solver = Solver::automatic;
    std::size_t dense_limit = 256;  // automatic picks dense up to this dimension
    std::size_t krylov_dim = 120;
    std::size_t max_restarts = 60;
    double tolerance = 1e-10;  // residual |Hx - Ex| relative to max(1, |E|)
};

struct GroundStateResult {
    double energy = 0.0;
    Eigen::VectorXd density;  // <n_j>
    Eigen::VectorXd vector;
    double residual = 0.0;
    Solver method = Solver::dense;
};

GroundStateResult ground_state(const ManyBodyHamiltonian& h, const SolverOptions& options = {});

struct SectorEnergies {
    double lower = 0.0;  // E(M-1)
    double middle = 0.0; // E(M)
    double upper = 0.0;  // E(M+1)

    double charge_gap() const { return upper + lower - 2.0 * middle; }
    /// 2 / gap; infinite for a gapless sector triple.
    double kappa() const;
};

SectorEnergies sector_energies(const disorder::OnsiteEnergies& eps, const chain::LocalModeParams& local, double U_int,
                               std::size_t n_bosons, std::optional<std::size_t> max_occ = std::nullopt,
                               const SolverOptions& options = {});

struct CompressibilityStats {
    double mean_gap = 0.0;
    double gap_std_error = 0.0;
    double median_gap = 0.0;
    double mean_kappa = 0.0;  // may be infinite when some realization is gapless
    double median_kappa = 0.0;
    std::vector<double> gaps;     // per realization, in realization order
    std::vector<double> weights;
    std::size_t n_samples = 0;
    bool exact = false;
};

/// Disorder statistics of the charge gap E(M+1) + E(M-1) - 2E(M) and of
/// kappa_c = 2 / gap on the chain described by `local`.
CompressibilityStats compressibility_proxy(const disorder::DisorderModel& model, const chain::LocalModeParams& local,
                                           double U, double U_int, std::size_t n_bosons, const SamplingPlan& plan,
                                           std::optional<std::size_t> max_occ = std::nullopt,
                                           const SolverOptions& options = {});

/// Median under the given weights: smallest value whose cumulative weight reaches half.
double weighted_median(const std::vector<double>& values, const std::vector<double>& weights);

}  // namespace phonoloc::manybody
