#pragma once

#include <string>
#include <vector>

#include "phonoloc/cli/config.hpp"

namespace phonoloc::cli {

std::vector<std::string> preset_names();

/// Built-in config by name; ConfigError for an unknown name.
RawConfig preset(const std::string& name);

/// TOML source of a preset, for `--print-preset` style inspection.
std::string preset_source(const std::string& name);

}  // namespace phonoloc::cli
