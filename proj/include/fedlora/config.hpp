#pragma once

#include <stdexcept>
#include <string>

#include "fedlora/federation.hpp"

namespace fedlora {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sectioned key = value text format; '#' and ';' start comments. Unknown
// sections or keys are errors, as are malformed or out-of-range values —
// each diagnostic carries the line number.
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "<string>");
ExperimentConfig parse_config(const std::string& path);

// Every documented key with its effective value, in the same format
// parse_config_text accepts (round-trips exactly).
std::string emit_effective_config(const ExperimentConfig& cfg);

}  // namespace fedlora
