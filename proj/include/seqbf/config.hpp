#pragma once

#include "seqbf/design.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqbf {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SweepSpec {
    std::vector<double> n_max;
    std::vector<int> m;
    std::vector<DesignPrior> priors;
};

struct RunConfig {
    std::string design_id;
    SequentialDesign design;
    Tolerance mvn_tol;
    std::uint64_t seed;
    std::optional<SweepSpec> sweep;
};

// Strict parse: unknown keys are rejected, errors carry the JSON-pointer-style
// path of the offending key. Throws ConfigError only.
RunConfig parse_config(const std::string& json_text, const std::string& fallback_id);
RunConfig load_config_file(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

}  // namespace seqbf
