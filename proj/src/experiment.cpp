#include "ccpsim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ccpsim/csv.hpp"
#include "ccpsim/errors.hpp"

namespace ccpsim {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::vector<SimMode> modesFor(RunMode mode) {
    switch (mode) {
    case RunMode::Feedback: return {SimMode::Feedback};
    case RunMode::DefaultOnly: return {SimMode::DefaultOnly};
    case RunMode::NoDefault: return {SimMode::NoDefault};
    case RunMode::All: return {SimMode::Feedback, SimMode::DefaultOnly, SimMode::NoDefault};
    }
    return {SimMode::Feedback};
}

ExperimentResult runModes(const ExperimentSetup& setup, const RunConfig& cfg, int threads, const LogFn& log) {
    ExperimentResult out;
    out.modes = modesFor(cfg.mode);
    for (SimMode mode : out.modes) {
        if (log) log("running " + simModeLabel(mode) + ": " + std::to_string(cfg.paths) + " paths");
        out.results[mode] = runPaths(setup, mode, cfg.paths, threads);
    }

    const bool haveFeedback = out.results.count(SimMode::Feedback) > 0;
    const bool haveBaseline = out.results.count(SimMode::DefaultOnly) > 0;
    if (haveFeedback && (cfg.reweightTarget || haveBaseline)) {
        double target;
        if (cfg.reweightTarget) {
            target = *cfg.reweightTarget;
        } else {
            double sum = 0.0;
            for (const auto& r : out.results[SimMode::DefaultOnly]) sum += r.xi1;
            target = sum / static_cast<double>(out.results[SimMode::DefaultOnly].size());
        }
        out.reweightTarget = target;
        out.reweightTheta = reweightPaths(out.results[SimMode::Feedback], target);
        out.reweighted = true;
        if (log)
            log("reweighting: target E[xi1]=" + std::to_string(target) + " theta=" +
                std::to_string(out.reweightTheta));
    }
    return out;
}

namespace {

std::string pathsFileName(SimMode mode) { return "paths_" + simModeLabel(mode) + ".csv"; }

void writePathsCsv(const std::string& path, const std::vector<PathResult>& results) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SimulationError("cannot write '" + path + "'");
    out << "seed,loss_ratio,im_drain_ratio,defaults,xi1,weight\n";
    for (const auto& r : results) {
        out << r.seed << ',' << formatDouble(r.lossRatio) << ',' << formatDouble(r.imDrainRatio) << ',' << r.defaults
            << ',' << formatDouble(r.xi1) << ',' << formatDouble(r.weight) << '\n';
    }
}

std::vector<double> thresholdGrid(double maxValue, int points) {
    if (!(maxValue > 0.0)) return {0.0};
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(points) + 1);
    for (int i = 0; i <= points; ++i) grid.push_back(maxValue * static_cast<double>(i) / points);
    return grid;
}

void writeCcdfCsv(const std::string& path, PathField field, const std::vector<SimMode>& modes,
                  const std::map<SimMode, std::vector<PathResult>>& results, int points) {
    double maxValue = 0.0;
    for (SimMode mode : modes)
        for (const auto& r : results.at(mode)) maxValue = std::max(maxValue, pathFieldValue(r, field));
    const std::vector<double> grid = thresholdGrid(maxValue, points);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw SimulationError("cannot write '" + path + "'");
    out << "threshold";
    for (SimMode mode : modes) out << ",ccdf_" << simModeLabel(mode);
    out << '\n';
    std::vector<std::vector<double>> columns;
    for (SimMode mode : modes) columns.push_back(aggregateCcdf(results.at(mode), field, grid));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out << formatDouble(grid[i]);
        for (const auto& column : columns) out << ',' << formatDouble(column[i]);
        out << '\n';
    }
}

} // namespace

std::vector<std::string> writeExperimentOutputs(const std::string& outDir, const RunConfig& cfg,
                                                const ExperimentSetup& setup, const ExperimentResult& result) {
    fs::create_directories(outDir);
    std::vector<std::string> written;
    try {
        for (SimMode mode : result.modes) {
            const std::string path = (fs::path(outDir) / pathsFileName(mode)).string();
            writePathsCsv(path, result.results.at(mode));
            written.push_back(path);
        }
        const std::string lossPath = (fs::path(outDir) / "loss_ccdf.csv").string();
        writeCcdfCsv(lossPath, PathField::LossRatio, result.modes, result.results, cfg.outputs.ccdfPoints);
        written.push_back(lossPath);
        const std::string drainPath = (fs::path(outDir) / "im_drain_ccdf.csv").string();
        writeCcdfCsv(drainPath, PathField::ImDrainRatio, result.modes, result.results, cfg.outputs.ccdfPoints);
        written.push_back(drainPath);

        if (cfg.outputs.marginSnapshotPath >= 0 && cfg.outputs.marginSnapshotPath < cfg.paths) {
            for (SimMode mode : result.modes) {
                std::vector<MarginSnapshotRow> rows;
                runPath(setup, cfg.seed + static_cast<std::uint64_t>(cfg.outputs.marginSnapshotPath), mode, nullptr,
                        &rows);
                const std::string path =
                    (fs::path(outDir) / ("margins_" + simModeLabel(mode) + "_path" +
                                         std::to_string(cfg.outputs.marginSnapshotPath) + ".csv"))
                        .string();
                std::ofstream out(path, std::ios::binary);
                if (!out) throw SimulationError("cannot write '" + path + "'");
                out << "step,ccp,member,im,df,vm_increment\n";
                for (const auto& row : rows)
                    out << row.step << ',' << row.ccp << ',' << row.member << ',' << formatDouble(row.im) << ','
                        << formatDouble(row.df) << ',' << formatDouble(row.vmIncrement) << '\n';
                written.push_back(path);
            }
        }

        ordered_json manifest;
        manifest["version"] = "ccpsim 0.1.0";
        manifest["config_hash"] = configHash(cfg);
        manifest["seed"] = cfg.seed;
        manifest["paths"] = cfg.paths;
        manifest["seed_range"] = {cfg.seed, cfg.seed + static_cast<std::uint64_t>(cfg.paths)};
        manifest["modes"] = ordered_json::array();
        for (SimMode mode : result.modes) manifest["modes"].push_back(simModeLabel(mode));
        if (result.reweighted) {
            manifest["reweight"] = {{"target", result.reweightTarget}, {"theta", result.reweightTheta}};
        } else {
            manifest["reweight"] = nullptr;
        }
        manifest["config"] = configToJson(cfg);
        const std::string manifestPath = (fs::path(outDir) / "manifest.json").string();
        std::ofstream out(manifestPath, std::ios::binary);
        if (!out) throw SimulationError("cannot write '" + manifestPath + "'");
        out << manifest.dump(2) << '\n';
        written.push_back(manifestPath);
    } catch (...) {
        for (const auto& path : written) {
            std::error_code ec;
            fs::remove(path, ec);
        }
        throw;
    }
    return written;
}

void writeCalibrationReport(const std::string& outDir, const CalibrationReport& report) {
    fs::create_directories(outDir);
    const std::string path = (fs::path(outDir) / "calibration.csv").string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SimulationError("cannot write '" + path + "'");
    out << "member,barrier,achieved_prob,target_prob\n";
    for (std::size_t k = 0; k < report.memberIds.size(); ++k)
        out << report.memberIds[k] << ',' << formatDouble(report.barriers[k]) << ','
            << formatDouble(report.achievedProb[k]) << ',' << formatDouble(report.targetProb[k]) << '\n';
}

std::vector<std::string> reaggregateCcdf(const std::string& dir, int ccdfPoints) {
    std::map<SimMode, std::vector<PathResult>> results;
    std::vector<SimMode> modes;
    for (SimMode mode : {SimMode::Feedback, SimMode::DefaultOnly, SimMode::NoDefault}) {
        const fs::path path = fs::path(dir) / pathsFileName(mode);
        if (!fs::exists(path)) continue;
        CsvTable table = readCsv(path.string());
        requireColumns(table, {"seed", "loss_ratio", "im_drain_ratio", "defaults", "xi1", "weight"}, path.string());
        std::vector<PathResult> rows;
        for (const auto& row : table.rows) {
            PathResult r;
            r.seed = static_cast<std::uint64_t>(parseInt(row[0], path.string()));
            r.lossRatio = parseDouble(row[1], path.string());
            r.imDrainRatio = parseDouble(row[2], path.string());
            r.defaults = static_cast<int>(parseInt(row[3], path.string()));
            r.xi1 = parseDouble(row[4], path.string());
            r.weight = parseDouble(row[5], path.string());
            rows.push_back(std::move(r));
        }
        results[mode] = std::move(rows);
        modes.push_back(mode);
    }
    if (modes.empty()) throw ConfigError("[CFG-MISSING-FILE]", "no paths_*.csv files found in '" + dir + "'");
    std::vector<std::string> written;
    const std::string lossPath = (fs::path(dir) / "loss_ccdf.csv").string();
    writeCcdfCsv(lossPath, PathField::LossRatio, modes, results, ccdfPoints);
    written.push_back(lossPath);
    const std::string drainPath = (fs::path(dir) / "im_drain_ccdf.csv").string();
    writeCcdfCsv(drainPath, PathField::ImDrainRatio, modes, results, ccdfPoints);
    written.push_back(drainPath);
    return written;
}

} // namespace ccpsim
