#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sparsehw/simulation.hpp"

namespace sparsehw {

struct TailGridSpec {
    double min = 0.0;  // 0 means "derive from the scenario scale"
    double max = 0.0;
    int count = 40;
    bool log_scale = true;

    std::vector<double> build(double reference_scale) const;
};

struct Constants {
    double c = 0.0625;      // exponential rate of the tail bounds
    double d = 0.0;         // leading multiplier; 0 means "2 centered, 8 non-centered"
    double C = 1.0;         // threshold constant
    double d_cond = 1.0;    // sample-size condition constant
    bool calibrated = false;  // when true, C multiplies the rate factor alone
};

// One experiment, fully resolved: every optional key filled with its default.
struct ExperimentConfig {
    ScenarioKind kind = ScenarioKind::complete;
    Eigen::Index n = 0;
    Eigen::Index p = 0;
    Eigen::Index q = 0;
    double alpha = 0.05;
    std::int64_t reps = 10000;
    std::uint64_t seed = 0;
    int workers = 1;
    Eigen::Index entry_k = 0;
    Eigen::Index entry_l = 0;
    TailGridSpec t_grid;
    Constants constants;
    std::string out_dir = "sparsehw-out";

    Scenario scenario;  // validated, ready to run

    // Canonical JSON of the resolved config (sorted keys, deterministic).
    std::string resolved_json() const;
    // FNV-1a hash of resolved_json(), hex-encoded.
    std::string content_hash() const;

    double default_d() const;  // 2 when both mean vectors vanish, 8 otherwise
};

// Seed resolution order: --seed flag > config key > SPARSEHW_SEED env >
// built-in default.
struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> reps;
    std::optional<std::string> out_dir;
    std::optional<int> workers;
};

ExperimentConfig parse_config(const std::filesystem::path& path,
                              const CliOverrides& overrides = {});
ExperimentConfig parse_config_text(const std::string& text, const CliOverrides& overrides = {},
                                   const std::string& origin = "<string>");

}  // namespace sparsehw
