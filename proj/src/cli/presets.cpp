#include "phonoloc/cli/presets.hpp"

#include <map>

namespace phonoloc::cli {

namespace {

const std::map<std::string, std::string>& table() {
    static const std::map<std::string, std::string> presets{
        {"fig2", R"(experiment = "localization"
out = "results/fig2"

[chain]
n_ions = 50
beta = 0.05

[disorder]
model = "product"
p = 0.5
U_over_t = 0.75

[sampling]
samples = 500
seed = 1
)"},
        {"fig2-clean", R"(experiment = "localization"
out = "results/fig2-clean"

[chain]
n_ions = 50
beta = 0.05

[disorder]
model = "clean"
U_over_t = 0.0

[sampling]
samples = 1
seed = 1
)"},
        {"fig3b", R"(experiment = "spectrum"
out = "results/fig3b"

[chain]
n_ions = 100
beta = 0.05

[disorder]
model = "product"
p = 0.5
U_over_t = [0.0, 0.25]

[sampling]
samples = 300
seed = 3

[spectrum]
sideband = "blue"
nbar = 10
kernel = "lorentzian"
bins = 1200
)"},
        {"fig3c", R"(experiment = "com-scaling"
out = "results/fig3c"

[chain]
beta = 0.05

[disorder]
model = "product"
p = 0.5
U_over_t = [0.0, 0.25]

[sampling]
samples = 300
seed = 5

[com]
n_values = [1, 5, 10, 20, 30, 40, 60, 80, 100]
)"},
        {"rdm", R"(experiment = "ldos"
out = "results/rdm"

[chain]
n_ions = 80
beta = 0.05

[disorder]
model = "dimer"
U_over_t = 0.25

[sampling]
samples = 300
seed = 7

[spectrum]
bins = 400

[ldos]
models = ["product", "dimer"]
pr_sizes = [40, 80, 160]
pr_fraction = 0.1
)"},
        {"boseglass", R"(experiment = "manybody"
out = "results/boseglass"

[chain]
n_ions = 6
beta = 0.05

[disorder]
model = "product"
p = 0.5
U_over_t = 2.0

[sampling]
samples = 200
seed = 11
enumeration_cap = 0

[manybody]
n_bosons = 6
U_int_over_t = 10.0
)"},
        {"table1", R"(experiment = "modes"
out = "results/table1"

[chain]
n_ions = 2
beta = 0.05

[laser]
rabi = 0.2
lamb_dicke = 0.1
detuning = 0.1

[units]
omega_t_hz = 1.0e7
)"},
    };
    return presets;
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const auto& [name, _] : table()) out.push_back(name);
    return out;
}

std::string preset_source(const std::string& name) {
    const auto it = table().find(name);
    if (it == table().end()) {
        std::string known;
        for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
        throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
    }
    return it->second;
}

RawConfig preset(const std::string& name) {
    return parse_toml(preset_source(name), "preset:" + name);
}

}  // namespace phonoloc::cli
