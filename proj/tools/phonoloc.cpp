// phonoloc: run trapped-ion phonon localization experiments from a config
// file or a built-in preset.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "phonoloc/cli/config.hpp"
#include "phonoloc/cli/presets.hpp"
#include "phonoloc/cli/runner.hpp"

namespace {

using namespace phonoloc::cli;

struct Args {
    std::string config;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::optional<unsigned> threads;
    std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Args& args) {
    auto* cfg = cmd->add_option("--config,-c", args.config, "TOML or JSON config (a manifest.json also works)");
    auto* pre = cmd->add_option("--preset,-p", args.preset, "built-in config instead of --config");
    cfg->excludes(pre);
    cmd->add_option("--seed", args.seed, "master seed");
    cmd->add_option("--samples", args.samples, "disorder realizations");
    cmd->add_option("--threads", args.threads, "worker threads (default: PHONOLOC_THREADS, then all cores)");
    cmd->add_option("--out", args.out, "output directory");
}

unsigned thread_count(const Args& args) {
    if (args.threads) return std::max(1U, *args.threads);
    if (const char* env = std::getenv("PHONOLOC_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
        std::cerr << "warning: ignoring PHONOLOC_THREADS='" << env << "'\n";
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

RunConfig load(const Args& args, const std::optional<std::string>& experiment) {
    if (args.config.empty() && args.preset.empty()) throw ConfigError("one of --config or --preset is required");
    const RawConfig raw = args.preset.empty() ? load_config(args.config) : preset(args.preset);
    RunConfig cfg = resolve(raw, experiment);
    Overrides o;
    o.seed = args.seed;
    o.samples = args.samples;
    o.threads = thread_count(args);
    if (args.out) o.out = *args.out;
    apply(cfg, o);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phonon localization in trapped-ion chains with spin-controlled disorder"};
    app.set_version_flag("--version", tool_version());
    app.require_subcommand(1);

    Args args;
    std::optional<std::string> experiment;
    for (const auto& kind : experiment_kinds()) {
        auto* cmd = app.add_subcommand(kind, "run the " + kind + " experiment");
        add_common(cmd, args);
        cmd->callback([&experiment, kind] { experiment = kind; });
    }
    auto* run_cmd = app.add_subcommand("run", "run whatever experiment the config names");
    add_common(run_cmd, args);
    auto* validate_cmd = app.add_subcommand("validate", "print the resolved config, derived quantities and warnings");
    add_common(validate_cmd, args);
    bool list_sources = false;
    auto* presets_cmd = app.add_subcommand("presets", "list built-in presets");
    presets_cmd->add_flag("--show", list_sources, "print each preset's TOML");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    if (presets_cmd->parsed()) {
        for (const auto& name : preset_names()) {
            std::cout << name << "\n";
            if (list_sources) std::cout << preset_source(name) << "\n";
        }
        return 0;
    }

    RunConfig cfg;
    try {
        cfg = load(args, experiment);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    if (validate_cmd->parsed()) return validate(cfg, std::cout);
    return run(cfg, std::cerr);
}
