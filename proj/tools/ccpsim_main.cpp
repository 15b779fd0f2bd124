#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ccpsim/config.hpp"
#include "ccpsim/errors.hpp"
#include "ccpsim/experiment.hpp"
#include "ccpsim/setup.hpp"

namespace {

using namespace ccpsim;

class PhaseTimer {
public:
    explicit PhaseTimer(std::string name) : name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
    ~PhaseTimer() {
        const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        std::cerr << "[ccpsim] " << name_ << " finished in " << elapsed << "s\n";
    }

private:
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

void logLine(const std::string& message) { std::cerr << "[ccpsim] " << message << "\n"; }

std::string configDir(const std::string& configPath) {
    const auto dir = std::filesystem::path(configPath).parent_path();
    return dir.empty() ? std::string(".") : dir.string();
}

struct CliOverrides {
    std::string mode;
    int paths = -1;
    long long seed = -1;
    int threads = -1;
};

RunConfig loadAndOverride(const std::string& configPath, const CliOverrides& overrides) {
    RunConfig cfg = loadConfig(configPath);
    if (!overrides.mode.empty()) cfg.mode = parseRunMode(overrides.mode);
    if (overrides.paths > 0) cfg.paths = overrides.paths;
    if (overrides.seed >= 0) cfg.seed = static_cast<std::uint64_t>(overrides.seed);
    if (overrides.threads >= 0) cfg.threads = overrides.threads;
    return cfg;
}

int commandValidate(const std::string& configPath) {
    RunConfig cfg = loadConfig(configPath);
    validateConfig(cfg);
    const InputData data = loadInputData(cfg, configDir(configPath));
    validateInputs(cfg, data);
    std::cout << configToJson(cfg).dump(2) << "\n";
    logLine("config ok, hash " + configHash(cfg));
    return 0;
}

int commandCalibrate(const std::string& configPath, const std::string& outDir, const CliOverrides& overrides) {
    const RunConfig cfg = loadAndOverride(configPath, overrides);
    validateConfig(cfg);
    const InputData data = loadInputData(cfg, configDir(configPath));
    const int threads = cfg.threads;
    ExperimentSetup setup;
    {
        PhaseTimer timer("setup");
        setup = buildExperimentSetup(cfg, data, threads, logLine);
    }
    CalibrationReport report;
    {
        PhaseTimer timer("barrier calibration");
        report = calibrateBarriers(setup, cfg, data, threads, logLine);
    }
    writeCalibrationReport(outDir, report);
    logLine("wrote " + outDir + "/calibration.csv");
    return 0;
}

int commandRun(const std::string& configPath, const std::string& outDir, const CliOverrides& overrides) {
    const RunConfig cfg = loadAndOverride(configPath, overrides);
    validateConfig(cfg);
    const InputData data = loadInputData(cfg, configDir(configPath));
    const int threads = cfg.threads;
    logLine("seed range [" + std::to_string(cfg.seed) + ", " + std::to_string(cfg.seed + cfg.paths) + ")");
    ExperimentSetup setup;
    {
        PhaseTimer timer("setup");
        setup = buildExperimentSetup(cfg, data, threads, logLine);
    }
    const bool needBarriers = cfg.mode != RunMode::NoDefault;
    if (needBarriers) {
        PhaseTimer timer("barrier calibration");
        const CalibrationReport report = calibrateBarriers(setup, cfg, data, threads, logLine);
        writeCalibrationReport(outDir, report);
    }
    ExperimentResult result;
    {
        PhaseTimer timer("simulation");
        result = runModes(setup, cfg, threads, logLine);
    }
    const auto files = writeExperimentOutputs(outDir, cfg, setup, result);
    for (const auto& f : files) logLine("wrote " + f);
    return 0;
}

int commandCcdf(const std::string& dir, int points) {
    const auto files = reaggregateCcdf(dir, points);
    for (const auto& f : files) logLine("wrote " + f);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clearing-network default and liquidity risk simulator"};
    app.require_subcommand(1);

    std::string configPath;
    std::string outDir = "out";
    CliOverrides overrides;
    int ccdfPoints = 200;

    auto* init = app.add_subcommand("init", "write a template config and synthetic data files");
    init->add_option("--out", outDir, "output directory")->capture_default_str();

    auto* validate = app.add_subcommand("validate", "check a config and echo it with defaults resolved");
    validate->add_option("--config", configPath, "config file")->required();

    auto* calibrate = app.add_subcommand("calibrate", "calibrate default barriers and write the report");
    calibrate->add_option("--config", configPath, "config file")->required();
    calibrate->add_option("--out", outDir, "output directory")->capture_default_str();
    calibrate->add_option("--threads", overrides.threads, "worker threads (0 = hardware)");
    calibrate->add_option("--seed", overrides.seed, "seed override");

    auto* run = app.add_subcommand("run", "run the configured experiment");
    run->add_option("--config", configPath, "config file")->required();
    run->add_option("--out", outDir, "output directory")->capture_default_str();
    run->add_option("--mode", overrides.mode, "feedback|default-only|no-default|all");
    run->add_option("--paths", overrides.paths, "path count override");
    run->add_option("--seed", overrides.seed, "seed override");
    run->add_option("--threads", overrides.threads, "worker threads (0 = hardware)");

    auto* ccdf = app.add_subcommand("ccdf", "re-aggregate CCDF tables from existing path summaries");
    ccdf->add_option("--out", outDir, "directory holding paths_*.csv")->capture_default_str();
    ccdf->add_option("--points", ccdfPoints, "threshold grid points")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (init->parsed()) {
            const auto files = ccpsim::writeTemplate(outDir);
            for (const auto& f : files) logLine("wrote " + f);
            return 0;
        }
        if (validate->parsed()) return commandValidate(configPath);
        if (calibrate->parsed()) return commandCalibrate(configPath, outDir, overrides);
        if (run->parsed()) return commandRun(configPath, outDir, overrides);
        if (ccdf->parsed()) return commandCcdf(outDir, ccdfPoints);
    } catch (const ccpsim::ConfigError& e) {
        std::cerr << "[ccpsim] config error: " << e.what() << "\n";
        return 2;
    } catch (const ccpsim::CalibrationError& e) {
        std::cerr << "[ccpsim] calibration error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "[ccpsim] error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
