#include "ccpsim/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ccpsim/csv.hpp"
#include "ccpsim/errors.hpp"

namespace ccpsim {

using nlohmann::json;
using nlohmann::ordered_json;

RunMode parseRunMode(const std::string& label) {
    if (label == "feedback") return RunMode::Feedback;
    if (label == "default-only") return RunMode::DefaultOnly;
    if (label == "no-default") return RunMode::NoDefault;
    if (label == "all") return RunMode::All;
    throw ConfigError("[CFG-SCHEMA]", "mode: expected feedback|default-only|no-default|all, got '" + label + "'");
}

std::string runModeLabel(RunMode mode) {
    switch (mode) {
    case RunMode::Feedback: return "feedback";
    case RunMode::DefaultOnly: return "default-only";
    case RunMode::NoDefault: return "no-default";
    case RunMode::All: return "all";
    }
    return "all";
}

int RunConfig::stepCount() const {
    const double exact = horizonYears / dt();
    const int steps = static_cast<int>(std::llround(exact));
    if (steps <= 0 || std::fabs(exact - steps) > 1e-9)
        throw ConfigError("[CFG-INVARIANT]",
                          "horizon_years must be a whole number of steps of step_days business days");
    return steps;
}

namespace {

const json& fieldAt(const json& j, const std::string& key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError("[CFG-SCHEMA]", "missing field '" + path + key + "'");
    return *it;
}

double numberAt(const json& j, const std::string& key, const std::string& path) {
    const json& v = fieldAt(j, key, path);
    if (!v.is_number()) throw ConfigError("[CFG-SCHEMA]", "field '" + path + key + "' must be a number");
    return v.get<double>();
}

double numberOr(const json& j, const std::string& key, double fallback, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number()) throw ConfigError("[CFG-SCHEMA]", "field '" + path + key + "' must be a number");
    return it->get<double>();
}

std::string stringAt(const json& j, const std::string& key, const std::string& path) {
    const json& v = fieldAt(j, key, path);
    if (!v.is_string()) throw ConfigError("[CFG-SCHEMA]", "field '" + path + key + "' must be a string");
    return v.get<std::string>();
}

PiecewiseConstant curveFrom(const json& v, const std::string& path) {
    if (v.is_number()) return PiecewiseConstant(v.get<double>());
    if (v.is_object()) {
        std::vector<double> times, values;
        for (const auto& t : fieldAt(v, "times", path + ".")) times.push_back(t.get<double>());
        for (const auto& x : fieldAt(v, "values", path + ".")) values.push_back(x.get<double>());
        try {
            return PiecewiseConstant(times, values);
        } catch (const ConfigError& e) {
            throw ConfigError("[CFG-SCHEMA]", path + ": " + e.what());
        }
    }
    throw ConfigError("[CFG-SCHEMA]", path + ": expected a number or {times, values}");
}

PiecewiseConstant curveAt(const json& j, const std::string& key, double fallback, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) return PiecewiseConstant(fallback);
    return curveFrom(*it, path + key);
}

JumpSpec jumpFrom(const json& v, const std::string& path) {
    JumpSpec spec;
    spec.intensity = numberAt(v, "intensity", path + ".");
    spec.logMean = numberAt(v, "log_mean", path + ".");
    spec.logStd = numberAt(v, "log_std", path + ".");
    return spec;
}

JumpSpec jumpAt(const json& j, const std::string& key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) return JumpSpec{};
    return jumpFrom(*it, path + key);
}

ordered_json curveTo(const PiecewiseConstant& curve) {
    ordered_json j;
    j["times"] = curve.times();
    j["values"] = curve.values();
    return j;
}

ordered_json jumpTo(const JumpSpec& spec) {
    ordered_json j;
    j["intensity"] = spec.intensity;
    j["log_mean"] = spec.logMean;
    j["log_std"] = spec.logStd;
    return j;
}

} // namespace

RunConfig configFromJson(const json& j) {
    RunConfig cfg;
    cfg.horizonYears = numberOr(j, "horizon_years", cfg.horizonYears, "");
    cfg.stepDays = static_cast<int>(numberOr(j, "step_days", cfg.stepDays, ""));
    cfg.businessDaysPerYear = static_cast<int>(numberOr(j, "business_days_per_year", cfg.businessDaysPerYear, ""));
    cfg.paths = static_cast<int>(numberOr(j, "paths", cfg.paths, ""));
    cfg.seed = static_cast<std::uint64_t>(numberOr(j, "seed", static_cast<double>(cfg.seed), ""));
    cfg.threads = static_cast<int>(numberOr(j, "threads", cfg.threads, ""));
    if (j.contains("mode")) cfg.mode = parseRunMode(stringAt(j, "mode", ""));
    if (j.contains("reweight_target") && !j["reweight_target"].is_null())
        cfg.reweightTarget = numberAt(j, "reweight_target", "");
    cfg.xyzEquity = numberOr(j, "xyz_equity", cfg.xyzEquity, "");
    cfg.deltaLimit = numberOr(j, "delta_limit", cfg.deltaLimit, "");
    cfg.allocationPrecision = numberOr(j, "allocation_precision", cfg.allocationPrecision, "");
    if (j.contains("reporting_currency")) cfg.reportingCurrency = stringAt(j, "reporting_currency", "");

    if (j.contains("regime")) {
        const json& r = j["regime"];
        cfg.regime.thresholds.clear();
        cfg.regime.multipliers.clear();
        for (const auto& v : fieldAt(r, "thresholds", "regime.")) cfg.regime.thresholds.push_back(v.get<double>());
        for (const auto& v : fieldAt(r, "multipliers", "regime.")) cfg.regime.multipliers.push_back(v.get<double>());
        cfg.regime.meanReversion = numberOr(r, "mean_reversion", 1.0, "regime.");
    } else {
        cfg.regime.thresholds = {0.05, 1.0};
        cfg.regime.multipliers = {1.0, 2.0};
        cfg.regime.meanReversion = 1.0;
    }
    cfg.systemicJump = jumpAt(j, "systemic_jump", "");

    if (j.contains("im")) {
        const json& im = j["im"];
        cfg.im.varQuantile = numberOr(im, "var_quantile", cfg.im.varQuantile, "im.");
        cfg.im.histScenarios = static_cast<int>(numberOr(im, "hist_scenarios", cfg.im.histScenarios, "im."));
        cfg.im.addOnRate = numberOr(im, "addon_rate", cfg.im.addOnRate, "im.");
        if (im.contains("vol_ratio_in_drain")) cfg.im.volRatioInDrain = im["vol_ratio_in_drain"].get<bool>();
    }
    if (j.contains("barrier"))
        cfg.barrier.paths = static_cast<int>(numberOr(j["barrier"], "paths", cfg.barrier.paths, "barrier."));
    if (j.contains("outputs")) {
        const json& o = j["outputs"];
        cfg.outputs.marginSnapshotPath =
            static_cast<int>(numberOr(o, "margin_snapshot_path", cfg.outputs.marginSnapshotPath, "outputs."));
        cfg.outputs.ccdfPoints = static_cast<int>(numberOr(o, "ccdf_points", cfg.outputs.ccdfPoints, "outputs."));
    }

    for (const auto& e : fieldAt(j, "economies", "")) {
        EconomyConfig eco;
        eco.currency = stringAt(e, "currency", "economies[].");
        eco.drift = curveAt(e, "drift", 0.02, "economies[].");
        eco.vol = curveAt(e, "vol", 0.008, "economies[].");
        eco.theta1 = numberAt(e, "theta1", "economies[].");
        eco.theta2 = numberAt(e, "theta2", "economies[].");
        eco.volRatio = numberAt(e, "vol_ratio", "economies[].");
        eco.correlation = numberAt(e, "correlation", "economies[].");
        eco.systemicBeta = numberAt(e, "systemic_beta", "economies[].");
        eco.idioJump = jumpAt(e, "idio_jump", "economies[].");
        cfg.economies.push_back(std::move(eco));
    }
    if (j.contains("fx_pairs")) {
        for (const auto& p : j["fx_pairs"]) {
            FxConfig fx;
            fx.base = stringAt(p, "base", "fx_pairs[].");
            fx.quote = stringAt(p, "quote", "fx_pairs[].");
            fx.spot = numberAt(p, "spot", "fx_pairs[].");
            fx.vol = curveAt(p, "vol", 0.1, "fx_pairs[].");
            fx.systemicBeta = numberAt(p, "systemic_beta", "fx_pairs[].");
            fx.idioJump = jumpAt(p, "idio_jump", "fx_pairs[].");
            cfg.fxPairs.push_back(std::move(fx));
        }
    }
    for (const auto& [label, t] : fieldAt(j, "member_types", "").items()) {
        MemberTypeParams params;
        params.assetVol = numberAt(t, "asset_vol", "member_types." + label + ".");
        params.systemicBeta = numberAt(t, "systemic_beta", "member_types." + label + ".");
        params.idioJump = jumpAt(t, "idio_jump", "member_types." + label + ".");
        cfg.memberTypes[label] = params;
    }
    for (const auto& c : fieldAt(j, "ccps", "")) {
        CcpConfig ccp;
        ccp.id = stringAt(c, "id", "ccps[].");
        ccp.skinInTheGame = numberAt(c, "skin_in_the_game", "ccps[].");
        for (const auto& s : fieldAt(c, "stress_scenarios", "ccps[].")) {
            StressScenarioConfig sc;
            sc.id = stringAt(s, "id", "ccps[].stress_scenarios[].");
            if (s.contains("economy_shifts")) {
                for (const auto& [ccy, shift] : s["economy_shifts"].items()) {
                    EconomyShift es;
                    es.dX1 = numberOr(shift, "dx1", 0.0, "ccps[].stress_scenarios[].economy_shifts.");
                    es.dX2 = numberOr(shift, "dx2", 0.0, "ccps[].stress_scenarios[].economy_shifts.");
                    es.dShift = numberOr(shift, "dshift", 0.0, "ccps[].stress_scenarios[].economy_shifts.");
                    sc.economyShifts[ccy] = es;
                }
            }
            if (s.contains("fx_shifts")) {
                for (const auto& [pair, rel] : s["fx_shifts"].items()) sc.fxShifts[pair] = rel.get<double>();
            }
            ccp.scenarios.push_back(std::move(sc));
        }
        cfg.ccps.push_back(std::move(ccp));
    }
    if (j.contains("files")) {
        const json& f = j["files"];
        if (f.contains("members")) cfg.files.members = stringAt(f, "members", "files.");
        if (f.contains("categories")) cfg.files.categories = stringAt(f, "categories", "files.");
        if (f.contains("aggregates")) cfg.files.aggregates = stringAt(f, "aggregates", "files.");
        if (f.contains("known_positions")) cfg.files.knownPositions = stringAt(f, "known_positions", "files.");
    }
    return cfg;
}

RunConfig loadConfig(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("[CFG-MISSING-FILE]", "cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("[CFG-SCHEMA]", "config '" + path + "' is not valid JSON: " + e.what());
    }
    return configFromJson(j);
}

ordered_json configToJson(const RunConfig& cfg) {
    ordered_json j;
    j["horizon_years"] = cfg.horizonYears;
    j["step_days"] = cfg.stepDays;
    j["business_days_per_year"] = cfg.businessDaysPerYear;
    j["paths"] = cfg.paths;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["mode"] = runModeLabel(cfg.mode);
    if (cfg.reweightTarget)
        j["reweight_target"] = *cfg.reweightTarget;
    else
        j["reweight_target"] = nullptr;
    j["xyz_equity"] = cfg.xyzEquity;
    j["delta_limit"] = cfg.deltaLimit;
    j["allocation_precision"] = cfg.allocationPrecision;
    j["reporting_currency"] = cfg.reportingCurrency;
    j["regime"] = {{"thresholds", cfg.regime.thresholds},
                   {"multipliers", cfg.regime.multipliers},
                   {"mean_reversion", cfg.regime.meanReversion}};
    j["systemic_jump"] = jumpTo(cfg.systemicJump);
    j["im"] = {{"var_quantile", cfg.im.varQuantile},
               {"hist_scenarios", cfg.im.histScenarios},
               {"addon_rate", cfg.im.addOnRate},
               {"vol_ratio_in_drain", cfg.im.volRatioInDrain}};
    j["barrier"] = {{"paths", cfg.barrier.paths}};
    j["outputs"] = {{"margin_snapshot_path", cfg.outputs.marginSnapshotPath},
                    {"ccdf_points", cfg.outputs.ccdfPoints}};
    j["economies"] = ordered_json::array();
    for (const auto& e : cfg.economies) {
        ordered_json eco;
        eco["currency"] = e.currency;
        eco["drift"] = curveTo(e.drift);
        eco["vol"] = curveTo(e.vol);
        eco["theta1"] = e.theta1;
        eco["theta2"] = e.theta2;
        eco["vol_ratio"] = e.volRatio;
        eco["correlation"] = e.correlation;
        eco["systemic_beta"] = e.systemicBeta;
        eco["idio_jump"] = jumpTo(e.idioJump);
        j["economies"].push_back(std::move(eco));
    }
    j["fx_pairs"] = ordered_json::array();
    for (const auto& p : cfg.fxPairs) {
        ordered_json fx;
        fx["base"] = p.base;
        fx["quote"] = p.quote;
        fx["spot"] = p.spot;
        fx["vol"] = curveTo(p.vol);
        fx["systemic_beta"] = p.systemicBeta;
        fx["idio_jump"] = jumpTo(p.idioJump);
        j["fx_pairs"].push_back(std::move(fx));
    }
    j["member_types"] = ordered_json::object();
    for (const auto& [label, t] : cfg.memberTypes) {
        ordered_json mt;
        mt["asset_vol"] = t.assetVol;
        mt["systemic_beta"] = t.systemicBeta;
        mt["idio_jump"] = jumpTo(t.idioJump);
        j["member_types"][label] = std::move(mt);
    }
    j["ccps"] = ordered_json::array();
    for (const auto& c : cfg.ccps) {
        ordered_json ccp;
        ccp["id"] = c.id;
        ccp["skin_in_the_game"] = c.skinInTheGame;
        ccp["stress_scenarios"] = ordered_json::array();
        for (const auto& s : c.scenarios) {
            ordered_json sc;
            sc["id"] = s.id;
            sc["economy_shifts"] = ordered_json::object();
            for (const auto& [ccy, shift] : s.economyShifts)
                sc["economy_shifts"][ccy] = {{"dx1", shift.dX1}, {"dx2", shift.dX2}, {"dshift", shift.dShift}};
            sc["fx_shifts"] = ordered_json::object();
            for (const auto& [pair, rel] : s.fxShifts) sc["fx_shifts"][pair] = rel;
            ccp["stress_scenarios"].push_back(std::move(sc));
        }
        j["ccps"].push_back(std::move(ccp));
    }
    j["files"] = {{"members", cfg.files.members},
                  {"categories", cfg.files.categories},
                  {"aggregates", cfg.files.aggregates},
                  {"known_positions", cfg.files.knownPositions}};
    return j;
}

std::string configHash(const RunConfig& cfg) {
    const std::string dump = configToJson(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void validateConfig(const RunConfig& cfg) {
    if (cfg.paths <= 0) throw ConfigError("[CFG-INVARIANT]", "paths must be positive");
    if (cfg.stepDays <= 0 || cfg.businessDaysPerYear <= 0)
        throw ConfigError("[CFG-INVARIANT]", "step_days and business_days_per_year must be positive");
    cfg.stepCount();
    if (!(cfg.xyzEquity > 0.0)) throw ConfigError("[CFG-INVARIANT]", "xyz_equity must be positive");
    if (!(cfg.deltaLimit > 0.0) || cfg.deltaLimit > 1.0)
        throw ConfigError("[CFG-INVARIANT]", "delta_limit must lie in (0,1]");
    if (!(cfg.allocationPrecision > 0.0))
        throw ConfigError("[CFG-INVARIANT]", "allocation_precision must be positive");
    cfg.regime.validate();
    auto checkJump = [](const JumpSpec& jump, const std::string& path) {
        if (jump.intensity < 0.0) throw ConfigError("[CFG-INVARIANT]", path + ".intensity must be non-negative");
        if (jump.logStd < 0.0) throw ConfigError("[CFG-INVARIANT]", path + ".log_std must be non-negative");
    };
    checkJump(cfg.systemicJump, "systemic_jump");
    if (cfg.economies.empty()) throw ConfigError("[CFG-SCHEMA]", "at least one economy is required");
    std::set<std::string> currencies;
    for (std::size_t i = 0; i < cfg.economies.size(); ++i) {
        const auto& e = cfg.economies[i];
        const std::string path = "economies[" + std::to_string(i) + "]";
        if (!currencies.insert(e.currency).second)
            throw ConfigError("[CFG-INVARIANT]", path + ": duplicate currency '" + e.currency + "'");
        if (!(e.theta1 > 0.0) || !(e.theta2 > 0.0))
            throw ConfigError("[CFG-INVARIANT]", path + ": theta1 and theta2 must be positive");
        if (std::fabs(e.correlation) > 1.0)
            throw ConfigError("[CFG-INVARIANT]", path + ": correlation must lie in [-1,1]");
        for (double v : e.vol.values())
            if (v < 0.0) throw ConfigError("[CFG-INVARIANT]", path + ": vol must be non-negative");
        checkJump(e.idioJump, path + ".idio_jump");
    }
    for (std::size_t i = 0; i < cfg.fxPairs.size(); ++i) {
        const auto& p = cfg.fxPairs[i];
        const std::string path = "fx_pairs[" + std::to_string(i) + "]";
        if (!(p.spot > 0.0)) throw ConfigError("[CFG-INVARIANT]", path + ": spot must be positive");
        if (p.quote != cfg.reportingCurrency)
            throw ConfigError("[CFG-INVARIANT]", path + ": quote currency must be the reporting currency");
        for (double v : p.vol.values())
            if (v < 0.0) throw ConfigError("[CFG-INVARIANT]", path + ": vol must be non-negative");
        if (p.systemicBeta < 0.0 || p.systemicBeta > 1.0)
            throw ConfigError("[CFG-INVARIANT]", path + ": systemic_beta must lie in [0,1] to preserve positivity");
        checkJump(p.idioJump, path + ".idio_jump");
    }
    for (const auto& [label, t] : cfg.memberTypes) {
        parseMemberType(label);
        if (t.assetVol < 0.0)
            throw ConfigError("[CFG-INVARIANT]", "member_types." + label + ".asset_vol must be non-negative");
        if (t.systemicBeta < 0.0 || t.systemicBeta > 1.0)
            throw ConfigError("[CFG-INVARIANT]",
                              "member_types." + label + ".systemic_beta must lie in [0,1] to preserve positivity");
        checkJump(t.idioJump, "member_types." + label + ".idio_jump");
    }
    if (cfg.ccps.empty()) throw ConfigError("[CFG-SCHEMA]", "at least one ccp is required");
    std::set<std::string> ccpIds;
    for (const auto& c : cfg.ccps) {
        if (!ccpIds.insert(c.id).second)
            throw ConfigError("[CFG-INVARIANT]", "duplicate ccp id '" + c.id + "'");
        if (c.skinInTheGame < 0.0)
            throw ConfigError("[CFG-INVARIANT]", "ccps." + c.id + ": skin_in_the_game must be non-negative");
        if (c.scenarios.size() < 2)
            throw ConfigError("[CFG-INVARIANT]", "ccps." + c.id + ": at least two stress scenarios are required");
    }
    if (!(cfg.im.varQuantile > 0.0) || !(cfg.im.varQuantile < 1.0))
        throw ConfigError("[CFG-INVARIANT]", "im.var_quantile must lie in (0,1)");
    const int q = static_cast<int>(std::ceil((1.0 - cfg.im.varQuantile) * cfg.im.histScenarios));
    if (cfg.im.histScenarios < 2 || q < 1 || q + 1 > cfg.im.histScenarios)
        throw ConfigError("[CFG-INVARIANT]", "im.hist_scenarios is too small for the VaR quantile");
    if (cfg.im.addOnRate < 0.0) throw ConfigError("[CFG-INVARIANT]", "im.addon_rate must be non-negative");
    if (cfg.barrier.paths < 100) throw ConfigError("[CFG-INVARIANT]", "barrier.paths must be at least 100");
}

InputData loadInputData(const RunConfig& cfg, const std::string& baseDir) {
    namespace fs = std::filesystem;
    auto resolve = [&](const std::string& file) {
        fs::path p(file);
        if (p.is_absolute()) return p.string();
        return (fs::path(baseDir) / p).string();
    };
    InputData data;

    const std::string membersPath = resolve(cfg.files.members);
    CsvTable members = readCsv(membersPath);
    requireColumns(members, {"id", "rank", "assets", "equity", "type", "target_default_prob", "known_member"},
                   membersPath);
    for (const auto& row : members.rows) {
        MemberRow m;
        m.id = row[static_cast<std::size_t>(members.column("id"))];
        m.rank = static_cast<int>(parseInt(row[static_cast<std::size_t>(members.column("rank"))], membersPath));
        m.assets = parseDouble(row[static_cast<std::size_t>(members.column("assets"))], membersPath);
        m.equity = parseDouble(row[static_cast<std::size_t>(members.column("equity"))], membersPath);
        m.type = row[static_cast<std::size_t>(members.column("type"))];
        m.targetDefaultProb =
            parseDouble(row[static_cast<std::size_t>(members.column("target_default_prob"))], membersPath);
        m.known = parseInt(row[static_cast<std::size_t>(members.column("known_member"))], membersPath) != 0;
        data.members.push_back(std::move(m));
    }

    const std::string categoriesPath = resolve(cfg.files.categories);
    CsvTable categories = readCsv(categoriesPath);
    requireColumns(categories, {"ccp", "category", "currency", "tenor_bucket", "representative_tenor"},
                   categoriesPath);
    for (const auto& row : categories.rows) {
        CategoryRow c;
        c.ccp = row[static_cast<std::size_t>(categories.column("ccp"))];
        c.category = row[static_cast<std::size_t>(categories.column("category"))];
        c.currency = row[static_cast<std::size_t>(categories.column("currency"))];
        c.tenorBucket = row[static_cast<std::size_t>(categories.column("tenor_bucket"))];
        c.representativeTenor =
            parseDouble(row[static_cast<std::size_t>(categories.column("representative_tenor"))], categoriesPath);
        data.categories.push_back(std::move(c));
    }

    const std::string aggregatesPath = resolve(cfg.files.aggregates);
    CsvTable aggregates = readCsv(aggregatesPath);
    requireColumns(aggregates, {"ccp", "category", "total_gross", "known_gross"}, aggregatesPath);
    for (const auto& row : aggregates.rows) {
        AggregateRow a;
        a.ccp = row[static_cast<std::size_t>(aggregates.column("ccp"))];
        a.category = row[static_cast<std::size_t>(aggregates.column("category"))];
        a.totalGross = parseDouble(row[static_cast<std::size_t>(aggregates.column("total_gross"))], aggregatesPath);
        a.knownGross = parseDouble(row[static_cast<std::size_t>(aggregates.column("known_gross"))], aggregatesPath);
        data.aggregates.push_back(std::move(a));
    }

    const std::string knownPath = resolve(cfg.files.knownPositions);
    CsvTable known = readCsv(knownPath);
    requireColumns(known, {"ccp", "category", "member", "delta"}, knownPath);
    for (const auto& row : known.rows) {
        KnownPositionRow k;
        k.ccp = row[static_cast<std::size_t>(known.column("ccp"))];
        k.category = row[static_cast<std::size_t>(known.column("category"))];
        k.member = row[static_cast<std::size_t>(known.column("member"))];
        k.delta = parseDouble(row[static_cast<std::size_t>(known.column("delta"))], knownPath);
        data.knownPositions.push_back(std::move(k));
    }
    return data;
}

void validateInputs(const RunConfig& cfg, const InputData& data, std::vector<std::string>* warnings) {
    const std::size_t n = data.members.size();
    if (n < 3) throw ConfigError("[CFG-INVARIANT]", "members: at least three members are required");
    std::set<std::string> ids;
    std::vector<char> rankSeen(n + 1, 0);
    bool anyKnown = false;
    for (const auto& m : data.members) {
        if (!ids.insert(m.id).second)
            throw ConfigError("[CFG-INVARIANT]", "members: duplicate id '" + m.id + "'");
        if (m.rank < 1 || m.rank > static_cast<int>(n) || rankSeen[static_cast<std::size_t>(m.rank)])
            throw ConfigError("[CFG-INVARIANT]", "members: ranks must be a permutation of 1..n");
        rankSeen[static_cast<std::size_t>(m.rank)] = 1;
        if (!(m.assets > 0.0))
            throw ConfigError("[CFG-INVARIANT]", "members: '" + m.id + "' needs positive assets");
        if (!(m.targetDefaultProb > 0.0) || !(m.targetDefaultProb < 1.0))
            throw ConfigError("[CFG-INVARIANT]", "members: '" + m.id + "' target_default_prob must lie in (0,1)");
        if (cfg.memberTypes.find(m.type) == cfg.memberTypes.end())
            throw ConfigError("[CFG-INVARIANT]", "members: '" + m.id + "' has type '" + m.type +
                                                     "' with no member_types entry");
        anyKnown = anyKnown || m.known;
    }
    if (!anyKnown) throw ConfigError("[CFG-INVARIANT]", "members: at least one known member is required");

    std::set<std::string> ccpIds;
    for (const auto& c : cfg.ccps) ccpIds.insert(c.id);
    std::set<std::pair<std::string, std::string>> catKeys;
    std::set<std::string> currencies;
    for (const auto& e : cfg.economies) currencies.insert(e.currency);
    for (const auto& c : data.categories) {
        if (ccpIds.find(c.ccp) == ccpIds.end())
            throw ConfigError("[CFG-INVARIANT]", "categories: unknown ccp '" + c.ccp + "'");
        if (!catKeys.insert({c.ccp, c.category}).second)
            throw ConfigError("[CFG-INVARIANT]", "categories: duplicate (" + c.ccp + ", " + c.category + ")");
        if (currencies.find(c.currency) == currencies.end())
            throw ConfigError("[CFG-INVARIANT]", "categories: '" + c.category + "' references unknown currency '" +
                                                     c.currency + "'");
        if (!(c.representativeTenor > 0.0))
            throw ConfigError("[CFG-INVARIANT]", "categories: '" + c.category + "' needs a positive tenor");
    }
    for (const auto& c : cfg.ccps) {
        bool any = false;
        for (const auto& cat : data.categories) any = any || cat.ccp == c.id;
        if (!any) throw ConfigError("[CFG-INVARIANT]", "categories: ccp '" + c.id + "' has no categories");
    }

    std::set<std::pair<std::string, std::string>> aggKeys;
    for (const auto& a : data.aggregates) {
        if (catKeys.find({a.ccp, a.category}) == catKeys.end())
            throw ConfigError("[CFG-INVARIANT]",
                              "aggregates: unknown category (" + a.ccp + ", " + a.category + ")");
        if (!aggKeys.insert({a.ccp, a.category}).second)
            throw ConfigError("[CFG-INVARIANT]", "aggregates: duplicate (" + a.ccp + ", " + a.category + ")");
        if (!(a.knownGross > 0.0) || !(a.knownGross < a.totalGross))
            throw ConfigError("[CFG-INVARIANT]", "aggregates: (" + a.ccp + ", " + a.category +
                                                     ") must satisfy 0 < known_gross < total_gross");
    }
    for (const auto& key : catKeys)
        if (aggKeys.find(key) == aggKeys.end())
            throw ConfigError("[CFG-INVARIANT]",
                              "aggregates: missing row for (" + key.first + ", " + key.second + ")");

    for (const auto& k : data.knownPositions) {
        if (catKeys.find({k.ccp, k.category}) == catKeys.end())
            throw ConfigError("[CFG-INVARIANT]",
                              "known_positions: unknown category (" + k.ccp + ", " + k.category + ")");
        bool found = false;
        for (const auto& m : data.members)
            if (m.id == k.member) {
                if (!m.known)
                    throw ConfigError("[CFG-INVARIANT]", "known_positions: member '" + k.member +
                                                             "' is not flagged known_member");
                found = true;
                break;
            }
        if (!found)
            throw ConfigError("[CFG-INVARIANT]", "known_positions: unknown member '" + k.member + "'");
    }
    (void)warnings;
}

namespace {

void writeFile(const std::string& path, const std::string& content, std::vector<std::string>& written) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("[CFG-MISSING-FILE]", "cannot write '" + path + "'");
    out << content;
    written.push_back(path);
}

} // namespace

std::vector<std::string> writeTemplate(const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> written;

    RunConfig cfg;
    cfg.mode = RunMode::All;
    cfg.paths = 10000;
    cfg.seed = 20160401;
    cfg.regime.thresholds = {0.05, 1.0};
    cfg.regime.multipliers = {1.0, 2.0};
    cfg.regime.meanReversion = 1.0;
    cfg.systemicJump = JumpSpec{0.6, -0.07, 0.05};

    EconomyConfig usd;
    usd.currency = "USD";
    usd.drift = PiecewiseConstant(0.025);
    usd.vol = PiecewiseConstant(0.0085);
    usd.theta1 = 0.03;
    usd.theta2 = 0.55;
    usd.volRatio = 0.65;
    usd.correlation = -0.3;
    usd.systemicBeta = 0.5;
    usd.idioJump = JumpSpec{0.3, -0.05, 0.2};
    cfg.economies.push_back(usd);
    EconomyConfig eur = usd;
    eur.currency = "EUR";
    eur.drift = PiecewiseConstant(0.015);
    eur.vol = PiecewiseConstant(0.0075);
    eur.systemicBeta = 0.45;
    cfg.economies.push_back(eur);

    FxConfig eurusd;
    eurusd.base = "EUR";
    eurusd.quote = "USD";
    eurusd.spot = 1.10;
    eurusd.vol = PiecewiseConstant(0.09);
    eurusd.systemicBeta = 0.45;
    eurusd.idioJump = JumpSpec{0.3, -0.02, 0.08};
    cfg.fxPairs.push_back(eurusd);

    cfg.memberTypes["diversified"] = MemberTypeParams{0.018, 0.9, JumpSpec{0.1, -0.04, 0.05}};
    cfg.memberTypes["markets_driven"] = MemberTypeParams{0.035, 0.85, JumpSpec{0.25, -0.06, 0.08}};
    cfg.memberTypes["trading_house"] = MemberTypeParams{0.05, 0.75, JumpSpec{0.5, -0.09, 0.1}};

    auto makeScenarios = []() {
        std::vector<StressScenarioConfig> scenarios;
        auto rates = [](const std::string& id, double dx1) {
            StressScenarioConfig s;
            s.id = id;
            s.economyShifts["USD"] = EconomyShift{dx1, 0.0, 0.0};
            s.economyShifts["EUR"] = EconomyShift{dx1, 0.0, 0.0};
            return s;
        };
        auto steep = [](const std::string& id, double dx2) {
            StressScenarioConfig s;
            s.id = id;
            s.economyShifts["USD"] = EconomyShift{0.0, dx2, 0.0};
            s.economyShifts["EUR"] = EconomyShift{0.0, dx2, 0.0};
            return s;
        };
        auto fx = [](const std::string& id, double rel) {
            StressScenarioConfig s;
            s.id = id;
            s.fxShifts["EURUSD"] = rel;
            return s;
        };
        scenarios.push_back(rates("rates_up_200", 0.02));
        scenarios.push_back(rates("rates_down_200", -0.02));
        scenarios.push_back(steep("steepen_100", 0.01));
        scenarios.push_back(steep("flatten_100", -0.01));
        scenarios.push_back(fx("fx_up_20", 0.20));
        scenarios.push_back(fx("fx_down_20", -0.20));
        StressScenarioConfig comboDown;
        comboDown.id = "rates_down_fx_down";
        comboDown.economyShifts["USD"] = EconomyShift{-0.02, 0.0, 0.0};
        comboDown.economyShifts["EUR"] = EconomyShift{-0.02, 0.0, 0.0};
        comboDown.fxShifts["EURUSD"] = -0.20;
        scenarios.push_back(comboDown);
        StressScenarioConfig comboUp;
        comboUp.id = "rates_up_fx_up";
        comboUp.economyShifts["USD"] = EconomyShift{0.02, 0.0, 0.0};
        comboUp.economyShifts["EUR"] = EconomyShift{0.02, 0.0, 0.0};
        comboUp.fxShifts["EURUSD"] = 0.20;
        scenarios.push_back(comboUp);
        return scenarios;
    };
    CcpConfig lch;
    lch.id = "LCH";
    lch.skinInTheGame = 2.0e8;
    lch.scenarios = makeScenarios();
    cfg.ccps.push_back(lch);
    CcpConfig cme;
    cme.id = "CME";
    cme.skinInTheGame = 1.5e8;
    cme.scenarios = makeScenarios();
    cfg.ccps.push_back(cme);

    ordered_json j = configToJson(cfg);
    j["_units"] = {{"horizon_years", "years"},
                   {"step_days", "business days per remargining period"},
                   {"xyz_equity", "reporting currency"},
                   {"delta_limit", "max |net| / fitted gross per member and category"},
                   {"economies[].drift", "rate per year (initial curve)"},
                   {"economies[].vol", "absolute rate vol per sqrt(year)"},
                   {"fx_pairs[].vol", "relative vol per sqrt(year)"},
                   {"member_types.*.asset_vol", "relative vol per sqrt(year)"},
                   {"*_jump.intensity", "events per year before regime scaling"},
                   {"*_jump.log_mean/log_std", "parameters of Z; jump size is exp(Z)-1"},
                   {"ccps[].skin_in_the_game", "reporting currency"},
                   {"stress_scenarios.economy_shifts", "absolute factor shifts (dx1, dx2, dshift)"},
                   {"stress_scenarios.fx_shifts", "relative spot shocks"}};
    writeFile((fs::path(dir) / "config.json").string(), j.dump(2) + "\n", written);

    // Synthetic member table: ranks order cleared activity, balance sheet
    // scale decays with rank and depends on the business model.
    std::ostringstream members;
    members << "id,rank,assets,equity,type,target_default_prob,known_member\n";
    for (int rank = 1; rank <= 101; ++rank) {
        std::string id;
        std::string type;
        double prob;
        bool known = false;
        if (rank <= 15) {
            type = "diversified";
            prob = 0.01;
        } else if (rank <= 55) {
            type = "markets_driven";
            prob = 0.035;
        } else {
            type = "trading_house";
            prob = 0.05;
        }
        if (rank == 2) {
            id = "XYZ_A";
            known = true;
            prob = 0.005;
        } else if (rank == 6) {
            id = "XYZ_B";
            known = true;
            prob = 0.005;
        } else {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "GCM%03d", rank);
            id = buf;
        }
        const double mult = type == "diversified" ? 1.0 : (type == "markets_driven" ? 0.9 : 0.3);
        const double assets = 2.6e12 * std::exp(-0.02 * (rank - 1)) * mult;
        const double equity = 0.08 * assets;
        members << id << ',' << rank << ',' << formatDouble(assets) << ',' << formatDouble(equity) << ',' << type
                << ',' << formatDouble(prob) << ',' << (known ? 1 : 0) << '\n';
    }
    writeFile((fs::path(dir) / "members.csv").string(), members.str(), written);

    struct CatDef {
        const char* ccp;
        const char* id;
        const char* ccy;
        const char* bucket;
        double tenor;
        double gross;
    };
    const CatDef cats[] = {
        {"LCH", "USD_IRS_2_5", "USD", "2y-5y", 3.5, 60e12},   {"LCH", "USD_IRS_5_10", "USD", "5y-10y", 7.5, 45e12},
        {"LCH", "USD_IRS_10_30", "USD", "10y-30y", 20.0, 25e12}, {"LCH", "EUR_IRS_2_5", "EUR", "2y-5y", 3.5, 40e12},
        {"LCH", "EUR_IRS_5_10", "EUR", "5y-10y", 7.5, 30e12}, {"LCH", "EUR_IRS_10_30", "EUR", "10y-30y", 20.0, 15e12},
        {"CME", "USD_IRS_2_5", "USD", "2y-5y", 3.5, 25e12},   {"CME", "USD_IRS_5_10", "USD", "5y-10y", 7.5, 18e12},
        {"CME", "EUR_IRS_2_5", "EUR", "2y-5y", 3.5, 10e12},   {"CME", "EUR_IRS_5_10", "EUR", "5y-10y", 7.5, 8e12},
    };
    std::ostringstream categories, aggregates, knownPositions;
    categories << "ccp,category,currency,tenor_bucket,representative_tenor\n";
    aggregates << "ccp,category,total_gross,known_gross\n";
    knownPositions << "ccp,category,member,delta\n";
    for (const auto& c : cats) {
        categories << c.ccp << ',' << c.id << ',' << c.ccy << ',' << c.bucket << ',' << formatDouble(c.tenor) << '\n';
        aggregates << c.ccp << ',' << c.id << ',' << formatDouble(c.gross) << ',' << formatDouble(0.035 * c.gross)
                   << '\n';
        const bool usd = std::string(c.ccy) == "USD";
        const double deltaA = (usd ? 0.0008 : -0.0005) * c.gross;
        const double deltaB = (usd ? -0.0003 : 0.0004) * c.gross;
        knownPositions << c.ccp << ',' << c.id << ',' << "XYZ_A" << ',' << formatDouble(deltaA) << '\n';
        knownPositions << c.ccp << ',' << c.id << ',' << "XYZ_B" << ',' << formatDouble(deltaB) << '\n';
    }
    writeFile((fs::path(dir) / "categories.csv").string(), categories.str(), written);
    writeFile((fs::path(dir) / "aggregates.csv").string(), aggregates.str(), written);
    writeFile((fs::path(dir) / "known_positions.csv").string(), knownPositions.str(), written);
    return written;
}

} // namespace ccpsim
