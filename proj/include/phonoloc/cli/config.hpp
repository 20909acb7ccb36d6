#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "phonoloc/chain_modes.hpp"
#include "phonoloc/disorder.hpp"
#include "phonoloc/dynamics.hpp"
#include "phonoloc/manybody.hpp"
#include "phonoloc/sampling.hpp"
#include "phonoloc/spectroscopy.hpp"

namespace phonoloc::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kExitConfig = 2;
inline constexpr int kExitCompute = 3;
inline constexpr int kExitIo = 4;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parsed config document before validation. `lines` maps dotted key paths
/// to source lines when the document came from TOML.
struct RawConfig {
    Json doc = Json::object();
    std::string origin = "<config>";
    std::filesystem::path base_dir;
    std::map<std::string, long> lines;
};

/// TOML by default; `.json` files are read as JSON. A manifest written by a
/// previous run is accepted and its recorded config is used.
RawConfig load_config(const std::filesystem::path& path);
RawConfig parse_toml(const std::string& text, const std::string& origin);
RawConfig parse_json(const std::string& text, const std::string& origin);

inline const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds{"modes",      "dynamics", "localization", "spectrum",
                                                "com-scaling", "ldos",     "manybody"};
    return kinds;
}

struct DisorderSpec {
    std::string model = "product";  // product | dimer | clean | explicit
    double p = 0.5;
    int value = 0;
    std::filesystem::path file;
    std::vector<double> U_over_t{0.0};
};

struct DynamicsSpec {
    std::optional<double> t_final;
    std::vector<double> times;
    std::optional<std::size_t> source;
};

struct FitSpec {
    std::optional<dynamics::FitWindow> window;
    double floor_fraction = 1e-6;
    double ceiling_fraction = 1.0;
    std::size_t min_points = 6;
};

struct SpectrumSpec {
    spectroscopy::Sideband sideband = spectroscopy::Sideband::blue;
    double nbar = spectroscopy::kDefaultNbar;
    spectroscopy::Kernel kernel = spectroscopy::Kernel::binned;
    double gamma_over_t = 0.0;  // 0 keeps the library default
    std::size_t bins = 1000;
    std::optional<double> lo;
    std::optional<double> hi;
};

struct ComSpec {
    std::vector<std::size_t> n_values;
    std::optional<double> window_over_t;  // default |U|, or 1e-3 t for a clean chain
    bool analytic = true;
};

struct LdosSpec {
    std::optional<std::size_t> site;
    std::vector<std::string> models;
    std::vector<std::size_t> pr_sizes;
    double pr_fraction = 0.1;
};

struct ManyBodySpec {
    std::size_t n_bosons = 0;  // 0 means unit filling
    double U_int_over_t = 10.0;
    std::optional<std::size_t> max_occ;
    manybody::Solver solver = manybody::Solver::automatic;
};

struct LaserSpec {
    double rabi = 0.0;
    double lamb_dicke = 0.1;
    double detuning = 0.1;
};

struct RunConfig {
    std::string experiment;
    chain::ChainParams chain;
    std::size_t hopping_range = 0;
    DisorderSpec disorder;
    SamplingPlan sampling;
    std::filesystem::path out = "results";
    DynamicsSpec dynamics;
    FitSpec fit;
    SpectrumSpec spectrum;
    ComSpec com;
    LdosSpec ldos;
    ManyBodySpec manybody;
    std::optional<LaserSpec> laser;
    std::optional<double> omega_t_hz;
    std::vector<std::string> warnings;

    double t() const { return chain.beta * chain.omega_t; }
};

/// Validates every field and fills defaults. Unknown keys, wrong types and
/// out-of-range values raise ConfigError naming the key and its location.
/// `experiment` overrides (and must agree with) the document's own entry.
RunConfig resolve(const RawConfig& raw, const std::optional<std::string>& experiment = std::nullopt);

/// Canonical document for a resolved config; resolving it again yields the
/// same RunConfig.
Json to_json(const RunConfig& config);

}  // namespace phonoloc::cli
