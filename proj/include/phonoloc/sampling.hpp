#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "phonoloc/disorder.hpp"

namespace phonoloc {

/// How a disorder average is taken.
///
/// When the model's support fits under `enumeration_cap` the average is
/// exact (every configuration, exact weights) and `n_samples` is ignored;
/// set the cap to 0 to force Monte Carlo.
struct SamplingPlan {
    std::size_t n_samples = 1;
    std::uint64_t seed = 0;
    std::size_t enumeration_cap = 1024;
    unsigned threads = 1;
};

/// The list of realizations a disorder average runs over, either the full
/// enumerated support or `n_samples` seeded draws.
class RealizationSource {
public:
    RealizationSource(const disorder::DisorderModel& model, const SamplingPlan& plan);

    std::size_t size() const { return count_; }
    bool exact() const { return exact_; }
    /// Configuration k together with its weight in the average.
    disorder::SpinConfig at(std::size_t k) const;

private:
    const disorder::DisorderModel* model_;
    std::uint64_t seed_;
    bool exact_;
    std::size_t count_;
    std::vector<disorder::SpinConfig> enumerated_;
};

// Realizations are reduced in fixed-size blocks; each block is folded in
// index order and blocks are merged in index order, so the floating-point
// result does not depend on the number of workers.
inline constexpr std::size_t kReductionBlock = 16;

template <class Acc, class MakeAcc, class Accumulate, class Merge>
Acc reduce_realizations(const RealizationSource& source, unsigned threads, MakeAcc make_acc, Accumulate accumulate,
                        Merge merge) {
    const std::size_t n = source.size();
    const std::size_t n_blocks = (n + kReductionBlock - 1) / kReductionBlock;
    std::vector<Acc> partial;
    partial.reserve(n_blocks);
    for (std::size_t b = 0; b < n_blocks; ++b) partial.push_back(make_acc());

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= n_blocks) return;
            try {
                const std::size_t end = std::min(n, (b + 1) * kReductionBlock);
                for (std::size_t k = b * kReductionBlock; k < end; ++k) accumulate(partial[b], source.at(k), k);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n_blocks);
                return;
            }
        }
    };

    const unsigned workers = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(n_blocks)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    Acc total = make_acc();
    for (auto& p : partial) merge(total, p);
    return total;
}

/// Weighted first and second moments of a vector-valued observable.
struct VectorMoments {
    Eigen::VectorXd sum;
    Eigen::VectorXd sum_sq;
    double weight = 0.0;
    std::size_t count = 0;

    explicit VectorMoments(Eigen::Index n = 0) : sum(Eigen::VectorXd::Zero(n)), sum_sq(Eigen::VectorXd::Zero(n)) {}

    void add(const Eigen::VectorXd& x, double w) {
        sum += w * x;
        sum_sq += w * x.cwiseProduct(x);
        weight += w;
        ++count;
    }
    void merge(const VectorMoments& o) {
        sum += o.sum;
        sum_sq += o.sum_sq;
        weight += o.weight;
        count += o.count;
    }
    Eigen::VectorXd mean() const { return sum / weight; }
    /// Standard error of the mean for equal-weight samples; zero for an
    /// exact (enumerated) average.
    Eigen::VectorXd standard_error(bool exact) const {
        if (exact || count < 2) return Eigen::VectorXd::Zero(sum.size());
        const Eigen::VectorXd m = mean();
        const Eigen::VectorXd var = (sum_sq / weight - m.cwiseProduct(m)).cwiseMax(0.0);
        return (var / static_cast<double>(count - 1)).cwiseSqrt();
    }
};

/// Scalar version of VectorMoments.
struct ScalarMoments {
    double sum = 0.0;
    double sum_sq = 0.0;
    double weight = 0.0;
    std::size_t count = 0;

    void add(double x, double w) {
        sum += w * x;
        sum_sq += w * x * x;
        weight += w;
        ++count;
    }
    void merge(const ScalarMoments& o) {
        sum += o.sum;
        sum_sq += o.sum_sq;
        weight += o.weight;
        count += o.count;
    }
    double mean() const { return sum / weight; }
    double standard_error(bool exact) const;
};

}  // namespace phonoloc
