#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sparsehw/config.hpp"

namespace sparsehw {

struct RunResult {
    bool pass = false;
    std::string summary;  // JSON text, also persisted as summary.json
    std::vector<std::filesystem::path> artifacts;
};

// command is one of: tail, calibrate, fwer, norms, check-mgf. Artifacts are
// written under cfg.out_dir; on error every file created by this run is
// removed before the exception propagates.
RunResult run_command(const ExperimentConfig& cfg, const std::string& command);

// The scenario-scale reference used for derived t grids: scale * rate, i.e.
// the cutoff magnitude at C = 1.
double reference_scale(const ExperimentConfig& cfg);

// Entrywise deviation bound for the configured (k, l): E1/E2 and the d
// matching the scenario (2 for centered settings, 8 for non-centered).
BoundEvaluation entry_bound(const ExperimentConfig& cfg);

// Per-replicate deviation est(k,l) - sigma(k,l) of the configured entry.
std::function<double(Rng&)> entry_deviation_statistic(const ExperimentConfig& cfg);

}  // namespace sparsehw
