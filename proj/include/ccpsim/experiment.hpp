#pragma once

#include <map>
#include <string>
#include <vector>

#include "ccpsim/config.hpp"
#include "ccpsim/engine.hpp"
#include "ccpsim/setup.hpp"

namespace ccpsim {

struct ExperimentResult {
    std::vector<SimMode> modes;
    std::map<SimMode, std::vector<PathResult>> results;
    double reweightTheta = 0.0;
    double reweightTarget = 0.0;
    bool reweighted = false;
};

std::vector<SimMode> modesFor(RunMode mode);

/// Runs the requested modes over a common seed range and, when both the
/// feedback and default-only configurations are present (or an explicit
/// target is given), tilts the feedback paths so the expected terminal
/// stress indicator matches.
ExperimentResult runModes(const ExperimentSetup& setup, const RunConfig& config, int threads, const LogFn& log = {});

/// Writes paths_<mode>.csv, loss_ccdf.csv, im_drain_ccdf.csv, manifest.json
/// and the optional margin snapshot into `outDir`. Returns the files
/// written. On error the partially written files are removed.
std::vector<std::string> writeExperimentOutputs(const std::string& outDir, const RunConfig& config,
                                                const ExperimentSetup& setup, const ExperimentResult& result);

void writeCalibrationReport(const std::string& outDir, const CalibrationReport& report);

/// Reads paths_*.csv from `dir` and rewrites the two CCDF tables.
std::vector<std::string> reaggregateCcdf(const std::string& dir, int ccdfPoints);

} // namespace ccpsim
