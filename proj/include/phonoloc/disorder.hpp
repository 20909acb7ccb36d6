#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "phonoloc/chain_modes.hpp"

namespace phonoloc::disorder {

using Bits = std::vector<std::uint8_t>;

/// One frozen spin background s in {0,1}^N and its probability |c_s|^2.
struct SpinConfig {
    Bits bits;
    double weight = 1.0;

    std::size_t size() const { return bits.size(); }
    std::size_t ones() const;
    std::string to_string() const;
    static SpinConfig parse(const std::string& bits, double weight);
};

struct Product {
    std::vector<double> p;  // probability of s_j = 1
};

// Bell pairs on sites (0,1), (2,3), ...; an unpaired last site is fair i.i.d.
struct DimerBell {
    std::size_t n_sites = 0;
};

struct Explicit {
    std::vector<SpinConfig> configs;
};

struct Clean {
    std::size_t n_sites = 0;
    std::uint8_t value = 0;
};

/// Probability law over spin configurations induced by a spin preparation.
/// Only |c_s|^2 is stored; relative phases never enter an observable.
class DisorderModel {
public:
    using Variant = std::variant<Product, DimerBell, Explicit, Clean>;

    static DisorderModel product(std::size_t n, double p);
    static DisorderModel product(std::vector<double> p);
    static DisorderModel dimer_bell(std::size_t n);
    static DisorderModel explicit_list(std::vector<SpinConfig> configs);
    static DisorderModel clean(std::size_t n, std::uint8_t value = 0);

    const Variant& variant() const { return law_; }
    std::size_t n_sites() const;
    std::string kind() const;

    /// Number of configurations with nonzero probability, or nullopt when it
    /// does not fit in 64 bits.
    std::optional<std::uint64_t> support_size() const;

    /// E[s_j].
    Eigen::VectorXd first_moments() const;
    /// E[s_j s_l].
    Eigen::MatrixXd second_moments() const;

private:
    explicit DisorderModel(Variant law) : law_(std::move(law)) {}
    Variant law_;
};

/// Counter-based stream: realization k of a run seeded with `seed` always
/// sees the same numbers, whatever order realizations are processed in.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t index);
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();

private:
    std::mt19937_64 engine_;
};

SpinConfig sample_realization(const DisorderModel& model, RngStream& rng);
SpinConfig sample_realization(const DisorderModel& model, std::uint64_t seed, std::uint64_t index);

/// Complete support with exact weights. Throws TooLarge above `max_dim`.
std::vector<SpinConfig> enumerate_realizations(const DisorderModel& model, std::size_t max_dim);

struct OnsiteEnergies {
    Eigen::VectorXd eps;
};

/// s_j = 0 gives omega_j + U, s_j = 1 gives omega_j - U.
OnsiteEnergies onsite_energies(const SpinConfig& config, const chain::LocalModeParams& local, double U);

/// {"configs": [{"bits": "0110", "weight": 0.25}, ...]}
DisorderModel explicit_from_json(const nlohmann::json& doc);
DisorderModel load_explicit(const std::filesystem::path& path);

}  // namespace phonoloc::disorder
