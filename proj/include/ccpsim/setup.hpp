#pragma once

#include <functional>
#include <string>

#include "ccpsim/config.hpp"
#include "ccpsim/engine.hpp"

namespace ccpsim {

using LogFn = std::function<void(const std::string&)>;

/// Builds the immutable per-experiment state: member profiles and weights,
/// notional fits and randomized positions, benchmark sets, the synthetic
/// margin history, time-zero margins and default funds.
/// Barriers are left unreachable; run calibrateBarriers afterwards for modes
/// with defaults.
ExperimentSetup buildExperimentSetup(const RunConfig& config, const InputData& data, int threads = 1,
                                     const LogFn& log = {});

struct CalibrationReport {
    std::vector<std::string> memberIds;
    std::vector<double> barriers;
    std::vector<double> achievedProb;
    std::vector<double> targetProb;
};

/// Calibrates per-member default barriers against the target one-year
/// probabilities, with clearing flows and feedback disabled.
CalibrationReport calibrateBarriers(ExperimentSetup& setup, const RunConfig& config, const InputData& data,
                                    int threads = 1, const LogFn& log = {});

} // namespace ccpsim
