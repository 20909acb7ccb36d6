#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "phonoloc/cli/config.hpp"
#include "phonoloc/cli/output.hpp"

namespace phonoloc::cli {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::optional<unsigned> threads;
    std::optional<std::filesystem::path> out;
};

/// Applies command-line overrides on top of a resolved config.
void apply(RunConfig& config, const Overrides& overrides);

/// Runs the experiment and returns its result files without touching disk.
/// `progress` receives human-readable status lines.
OutputSet compute(const RunConfig& config, std::ostream& progress);

/// Metadata block of manifest.json (outputs are appended by OutputSet).
Json manifest_header(const RunConfig& config, double wall_seconds);

/// compute + commit, mapping failures to exit codes 2/3/4.
int run(const RunConfig& config, std::ostream& progress);

/// Prints the resolved config with derived quantities and validity
/// warnings. Returns 0, or 3 when a derived quantity cannot be evaluated.
int validate(const RunConfig& config, std::ostream& out);

std::string tool_version();

}  // namespace phonoloc::cli
