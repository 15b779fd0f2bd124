#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccpsim/margining.hpp"
#include "ccpsim/market.hpp"
#include "ccpsim/network.hpp"

namespace ccpsim {

enum class RunMode { Feedback, DefaultOnly, NoDefault, All };

RunMode parseRunMode(const std::string& label);
std::string runModeLabel(RunMode mode);

struct EconomyConfig {
    std::string currency;
    PiecewiseConstant drift; // initial-curve fit
    PiecewiseConstant vol;
    double theta1 = 0.05;
    double theta2 = 0.5;
    double volRatio = 1.0;
    double correlation = 0.0;
    double systemicBeta = 0.0;
    JumpSpec idioJump;
};

struct FxConfig {
    std::string base;
    std::string quote;
    double spot = 1.0;
    PiecewiseConstant vol;
    double systemicBeta = 0.0;
    JumpSpec idioJump;
};

struct MemberTypeParams {
    double assetVol = 0.02;
    double systemicBeta = 0.5;
    JumpSpec idioJump;
};

struct ImConfig {
    double varQuantile = 0.99;
    int histScenarios = 250;
    double addOnRate = 0.10;
    bool volRatioInDrain = false; // scale IM by the regime multiplier when true
};

struct BarrierConfig {
    int paths = 20000;
};

struct OutputConfig {
    int marginSnapshotPath = -1; // path index to dump per-step margins for; -1 disables
    int ccdfPoints = 200;
};

struct StressScenarioConfig {
    std::string id;
    std::map<std::string, EconomyShift> economyShifts; // by currency
    std::map<std::string, double> fxShifts;            // by "BASEQUOTE", relative
};

struct CcpConfig {
    std::string id;
    double skinInTheGame = 0.0;
    std::vector<StressScenarioConfig> scenarios;
};

struct FileRefs {
    std::string members = "members.csv";
    std::string categories = "categories.csv";
    std::string aggregates = "aggregates.csv";
    std::string knownPositions = "known_positions.csv";
};

struct RunConfig {
    double horizonYears = 1.0;
    int stepDays = 5;
    int businessDaysPerYear = 260;
    int paths = 10000;
    std::uint64_t seed = 42;
    int threads = 0; // 0 = hardware parallelism
    RunMode mode = RunMode::All;
    std::optional<double> reweightTarget;
    double xyzEquity = 2e11;
    double deltaLimit = 0.1;
    double allocationPrecision = 0.01;
    std::string reportingCurrency = "USD";
    RegimeConfig regime;
    JumpSpec systemicJump;
    ImConfig im;
    BarrierConfig barrier;
    OutputConfig outputs;
    std::vector<EconomyConfig> economies;
    std::vector<FxConfig> fxPairs;
    std::map<std::string, MemberTypeParams> memberTypes;
    std::vector<CcpConfig> ccps;
    FileRefs files;

    double dt() const { return static_cast<double>(stepDays) / businessDaysPerYear; }
    int stepCount() const;
};

struct MemberRow {
    std::string id;
    int rank = 0;
    double assets = 0.0;
    double equity = 0.0;
    std::string type;
    double targetDefaultProb = 0.0;
    bool known = false;
};

struct CategoryRow {
    std::string ccp;
    std::string category;
    std::string currency;
    std::string tenorBucket;
    double representativeTenor = 0.0;
};

struct AggregateRow {
    std::string ccp;
    std::string category;
    double totalGross = 0.0;
    double knownGross = 0.0;
};

struct KnownPositionRow {
    std::string ccp;
    std::string category;
    std::string member;
    double delta = 0.0;
};

struct InputData {
    std::vector<MemberRow> members;
    std::vector<CategoryRow> categories;
    std::vector<AggregateRow> aggregates;
    std::vector<KnownPositionRow> knownPositions;
};

/// Parses the JSON run configuration; every absent field takes its default
/// so the echoed configuration is fully explicit.
RunConfig loadConfig(const std::string& path);
RunConfig configFromJson(const nlohmann::json& j);

/// Lossless echo of the resolved configuration, defaults included.
nlohmann::ordered_json configToJson(const RunConfig& config);

/// FNV-1a hash of the canonical configuration echo.
std::string configHash(const RunConfig& config);

/// Eager cross-module invariant checks; throws ConfigError with a
/// diagnostic code and field path.
void validateConfig(const RunConfig& config);

InputData loadInputData(const RunConfig& config, const std::string& baseDir);
void validateInputs(const RunConfig& config, const InputData& data, std::vector<std::string>* warnings = nullptr);

/// Writes a ready-to-run configuration plus synthetic member/category/
/// aggregate data into `dir`.
std::vector<std::string> writeTemplate(const std::string& dir);

} // namespace ccpsim
