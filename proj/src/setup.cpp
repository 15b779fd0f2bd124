#include "ccpsim/setup.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "ccpsim/errors.hpp"

namespace ccpsim {

namespace {

void logLine(const LogFn& log, const std::string& message) {
    if (log) log(message);
}

int economyIndexFor(const std::vector<EconomySetup>& economies, const std::string& currency,
                    const std::string& context) {
    for (std::size_t e = 0; e < economies.size(); ++e)
        if (economies[e].currency == currency) return static_cast<int>(e);
    throw ConfigError("[CFG-INVARIANT]", context + ": unknown currency '" + currency + "'");
}

StressScenario resolveScenario(const StressScenarioConfig& sc, const ExperimentSetup& setup) {
    StressScenario scenario;
    scenario.id = sc.id;
    scenario.economyShifts.assign(setup.economies.size(), EconomyShift{});
    scenario.fxRelative.assign(setup.fxPairs.size(), 0.0);
    for (const auto& [ccy, shift] : sc.economyShifts) {
        const int e = economyIndexFor(setup.economies, ccy, "stress scenario '" + sc.id + "'");
        scenario.economyShifts[static_cast<std::size_t>(e)] = shift;
    }
    for (const auto& [pair, rel] : sc.fxShifts) {
        bool found = false;
        for (std::size_t p = 0; p < setup.fxPairs.size(); ++p) {
            if (setup.fxPairs[p].base + setup.fxPairs[p].quote == pair) {
                scenario.fxRelative[p] = rel;
                found = true;
                break;
            }
        }
        if (!found)
            throw ConfigError("[CFG-INVARIANT]", "stress scenario '" + sc.id + "': unknown fx pair '" + pair + "'");
    }
    return scenario;
}

// Benchmark basis per economy block: the block's first category as a unit
// portfolio, then adjacent-tenor steepeners. Square and invertible, so
// member portfolios reproduce exactly and spread risk is represented.
std::vector<std::vector<double>> buildBenchmarkPortfolios(const CcpSetup& ccp, int economyCount) {
    const int nCat = static_cast<int>(ccp.categories.size());
    std::vector<std::vector<double>> portfolios;
    for (int e = 0; e < economyCount; ++e) {
        std::vector<int> block;
        for (int c = 0; c < nCat; ++c)
            if (ccp.categoryEconomy[static_cast<std::size_t>(c)] == e) block.push_back(c);
        if (block.empty()) continue;
        std::vector<double> unit(static_cast<std::size_t>(nCat), 0.0);
        unit[static_cast<std::size_t>(block[0])] = 1.0;
        portfolios.push_back(unit);
        for (std::size_t i = 1; i < block.size(); ++i) {
            std::vector<double> steepener(static_cast<std::size_t>(nCat), 0.0);
            steepener[static_cast<std::size_t>(block[i])] = 1.0;
            steepener[static_cast<std::size_t>(block[i - 1])] = -1.0;
            portfolios.push_back(steepener);
        }
    }
    return portfolios;
}

// Synthetic remargining-period history: each scenario is one base-regime
// step of the whole market from the time-zero state, recorded as
// per-benchmark losses.
ScenarioPool buildHistoryPool(const ExperimentSetup& setup, const CcpSetup& ccp, int count, Rng& rng) {
    ScenarioPool pool;
    const std::vector<EconomyState> base(setup.economies.size());
    std::vector<double> baseFx(setup.fxPairs.size());
    for (std::size_t p = 0; p < setup.fxPairs.size(); ++p) baseFx[p] = setup.fxPairs[p].params.spot0;
    const std::vector<double> unitBase = ccpUnitValues(setup, ccp, base, baseFx, 0.0);
    const double dt = setup.dt;
    for (int s = 0; s < count; ++s) {
        const JumpDraw systemic = sampleJumpDraw(rng, 1, dt, setup.systemicJump, setup.regime);
        std::vector<EconomyState> shifted(setup.economies.size());
        for (std::size_t e = 0; e < setup.economies.size(); ++e) {
            RatesShocks shocks;
            shocks.dW1 = regimeWienerIncrement(rng, 1, dt, setup.regime);
            shocks.dW2 = regimeWienerIncrement(rng, 1, dt, setup.regime);
            const JumpDraw idio = sampleJumpDraw(rng, 1, dt, setup.economies[e].params.idioJump, setup.regime);
            shocks.systemic = &systemic;
            shocks.idio = &idio;
            shifted[e] = stepRates(base[e], 0.0, dt, setup.economies[e].params, shocks);
        }
        std::vector<double> fx(baseFx);
        for (std::size_t p = 0; p < setup.fxPairs.size(); ++p) {
            const double dW = regimeWienerIncrement(rng, 1, dt, setup.regime);
            const JumpDraw idio = sampleJumpDraw(rng, 1, dt, setup.fxPairs[p].params.idioJump, setup.regime);
            fx[p] = stepProportional(baseFx[p], 0.0, dt, setup.fxPairs[p].params.vol, 1, setup.regime, dW,
                                     setup.fxPairs[p].params.systemicBeta, systemic, idio);
        }
        const std::vector<double> unitShifted = ccpUnitValues(setup, ccp, shifted, fx, 0.0);
        pool.append(benchmarkLossVector(ccp, unitBase, unitShifted));
    }
    return pool;
}

} // namespace

ExperimentSetup buildExperimentSetup(const RunConfig& cfg, const InputData& data, int threads, const LogFn& log) {
    validateConfig(cfg);
    std::vector<std::string> warnings;
    validateInputs(cfg, data, &warnings);

    ExperimentSetup setup;
    setup.regime = cfg.regime;
    setup.systemicJump = cfg.systemicJump;
    setup.dt = cfg.dt();
    setup.steps = cfg.stepCount();
    setup.xyzEquity = cfg.xyzEquity;
    setup.volRatioEnabled = cfg.im.volRatioInDrain;
    setup.allocationPrecision = cfg.allocationPrecision;
    setup.masterSeed = cfg.seed;

    for (const auto& fx : cfg.fxPairs) {
        FxSetup f;
        f.base = fx.base;
        f.quote = fx.quote;
        f.params.spot0 = fx.spot;
        f.params.vol = fx.vol;
        f.params.systemicBeta = fx.systemicBeta;
        f.params.idioJump = fx.idioJump;
        setup.fxPairs.push_back(std::move(f));
    }
    for (const auto& eco : cfg.economies) {
        EconomySetup e;
        e.currency = eco.currency;
        e.params.drift = eco.drift;
        e.params.vol = eco.vol;
        e.params.theta1 = eco.theta1;
        e.params.theta2 = eco.theta2;
        e.params.volRatio = eco.volRatio;
        e.params.correlation = eco.correlation;
        e.params.systemicBeta = eco.systemicBeta;
        e.params.idioJump = eco.idioJump;
        e.fxPairIndex = -1;
        if (eco.currency != cfg.reportingCurrency) {
            for (std::size_t p = 0; p < setup.fxPairs.size(); ++p)
                if (setup.fxPairs[p].base == eco.currency && setup.fxPairs[p].quote == cfg.reportingCurrency)
                    e.fxPairIndex = static_cast<int>(p);
            if (e.fxPairIndex < 0)
                throw ConfigError("[CFG-INVARIANT]", "economy '" + eco.currency +
                                                         "': no fx pair converts to the reporting currency");
        }
        setup.economies.push_back(std::move(e));
    }

    for (std::size_t k = 0; k < data.members.size(); ++k) {
        const auto& row = data.members[k];
        MemberProfile profile;
        profile.id = row.id;
        profile.rank = row.rank;
        profile.balanceSheetAssets = row.assets;
        profile.equity = row.equity;
        profile.type = parseMemberType(row.type);
        profile.targetDefaultProb = row.targetDefaultProb;
        profile.knownMember = row.known;
        setup.members.push_back(std::move(profile));
        if (row.known) setup.xyzMembers.push_back(static_cast<int>(k));

        const MemberTypeParams& preset = cfg.memberTypes.at(row.type);
        AssetParams ap;
        ap.initialAssets = row.assets;
        ap.vol = PiecewiseConstant(preset.assetVol);
        ap.systemicBeta = preset.systemicBeta;
        ap.idioJump = preset.idioJump;
        setup.assetParams.push_back(std::move(ap));
    }
    setup.weights = assignWeights(setup.members);
    setup.barriers.assign(setup.members.size(), -std::numeric_limits<double>::max());

    const int nMem = static_cast<int>(setup.members.size());
    std::vector<int> ranks(static_cast<std::size_t>(nMem));
    std::vector<char> known(static_cast<std::size_t>(nMem));
    for (int k = 0; k < nMem; ++k) {
        ranks[static_cast<std::size_t>(k)] = setup.members[static_cast<std::size_t>(k)].rank;
        known[static_cast<std::size_t>(k)] = setup.members[static_cast<std::size_t>(k)].knownMember ? 1 : 0;
    }
    const int quantileRank =
        std::max(1, static_cast<int>(std::ceil((1.0 - cfg.im.varQuantile) * cfg.im.histScenarios)));

    for (std::size_t ci = 0; ci < cfg.ccps.size(); ++ci) {
        const CcpConfig& cc = cfg.ccps[ci];
        CcpSetup ccp;
        ccp.id = cc.id;
        ccp.params.id = cc.id;
        ccp.params.skinInTheGame = cc.skinInTheGame;
        ccp.quantileRank = quantileRank;

        for (const auto& cat : data.categories) {
            if (cat.ccp != cc.id) continue;
            Category category;
            category.id = cat.category;
            category.currency = cat.currency;
            category.tenorBucket = cat.tenorBucket;
            category.representativeTenor = cat.representativeTenor;
            ccp.categories.push_back(std::move(category));
            ccp.categoryEconomy.push_back(economyIndexFor(setup.economies, cat.currency, "category " + cat.category));
        }
        const int nCat = static_cast<int>(ccp.categories.size());
        for (int c = 0; c < nCat; ++c)
            ccp.swaps.push_back(makeSwapSpec(c, ccp.categoryEconomy[static_cast<std::size_t>(c)],
                                             ccp.categories[static_cast<std::size_t>(c)].representativeTenor,
                                             setup.economies[static_cast<std::size_t>(
                                                                 ccp.categoryEconomy[static_cast<std::size_t>(c)])]
                                                 .params));
        ccp.benchmarks = BenchmarkSet(nCat, buildBenchmarkPortfolios(ccp, static_cast<int>(setup.economies.size())));
        for (const auto& sc : cc.scenarios) ccp.params.scenarios.push_back(resolveScenario(sc, setup));

        // Position generation: fit the disclosed aggregates, fix the known
        // rows and randomize the rest within the delta limit.
        ccp.positions0.assign(static_cast<std::size_t>(nMem), std::vector<double>(static_cast<std::size_t>(nCat), 0.0));
        Rng positionRng = Rng::forStream(cfg.seed, ci, stream::kPositions);
        for (int c = 0; c < nCat; ++c) {
            const AggregateRow* agg = nullptr;
            for (const auto& a : data.aggregates)
                if (a.ccp == cc.id && a.category == ccp.categories[static_cast<std::size_t>(c)].id) agg = &a;
            const NotionalFit fit = fitExponential(agg->totalGross, agg->knownGross, ranks, known);
            std::vector<double> deltas(static_cast<std::size_t>(nMem), 0.0);
            for (const auto& kp : data.knownPositions) {
                if (kp.ccp != cc.id || kp.category != ccp.categories[static_cast<std::size_t>(c)].id) continue;
                for (int k = 0; k < nMem; ++k)
                    if (setup.members[static_cast<std::size_t>(k)].id == kp.member)
                        deltas[static_cast<std::size_t>(k)] = kp.delta;
            }
            for (int k = 0; k < nMem; ++k) {
                if (!known[static_cast<std::size_t>(k)]) continue;
                const double limit = cfg.deltaLimit * fit.fitted[static_cast<std::size_t>(k)];
                if (std::fabs(deltas[static_cast<std::size_t>(k)]) > limit)
                    std::cerr << "[setup] warning: known position of '" << setup.members[static_cast<std::size_t>(k)].id
                              << "' in " << cc.id << "/" << ccp.categories[static_cast<std::size_t>(c)].id
                              << " exceeds the delta limit\n";
            }
            const std::vector<double> net =
                randomizeNetPositions(positionRng, fit.fitted, known, deltas, cfg.deltaLimit,
                                      cc.id + "/" + ccp.categories[static_cast<std::size_t>(c)].id);
            for (int k = 0; k < nMem; ++k) ccp.positions0[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)] = net[static_cast<std::size_t>(k)];
        }

        Rng histRng = Rng::forStream(cfg.seed, ci, stream::kHistScenarios);
        ccp.histPool = buildHistoryPool(setup, ccp, cfg.im.histScenarios, histRng);

        // Time-zero margins: regression coefficients, VaR state, frozen
        // add-on, then the cover-2 default fund allocated by IM.
        ccp.coeffs0.resize(static_cast<std::size_t>(nMem));
        ccp.varStates0.resize(static_cast<std::size_t>(nMem));
        ccp.im0.resize(static_cast<std::size_t>(nMem));
        ccp.addOn0.resize(static_cast<std::size_t>(nMem));
        for (int k = 0; k < nMem; ++k) {
            ccp.coeffs0[static_cast<std::size_t>(k)] = ccp.benchmarks.fit(ccp.positions0[static_cast<std::size_t>(k)]);
            ccp.varStates0[static_cast<std::size_t>(k)] =
                initVarState(ccp.histPool, ccp.coeffs0[static_cast<std::size_t>(k)], quantileRank);
            const double core = ccp.varStates0[static_cast<std::size_t>(k)].varCore();
            ccp.addOn0[static_cast<std::size_t>(k)] = cfg.im.addOnRate * core;
            ccp.im0[static_cast<std::size_t>(k)] =
                imValue(ccp.varStates0[static_cast<std::size_t>(k)], ccp.addOn0[static_cast<std::size_t>(k)]);
        }

        const std::vector<EconomyState> base(setup.economies.size());
        std::vector<double> baseFx(setup.fxPairs.size());
        for (std::size_t p = 0; p < setup.fxPairs.size(); ++p) baseFx[p] = setup.fxPairs[p].params.spot0;
        const std::vector<double> unitBase = ccpUnitValues(setup, ccp, base, baseFx, 0.0);
        std::vector<std::vector<double>> loims(ccp.params.scenarios.size());
        for (std::size_t s = 0; s < ccp.params.scenarios.size(); ++s) {
            const std::vector<double> stressed =
                stressedUnitValues(setup, ccp, base, baseFx, 0.0, ccp.params.scenarios[s]);
            loims[s].resize(static_cast<std::size_t>(nMem));
            for (int k = 0; k < nMem; ++k) {
                double loss = 0.0;
                const auto& pos = ccp.positions0[static_cast<std::size_t>(k)];
                for (int c = 0; c < nCat; ++c)
                    loss += pos[static_cast<std::size_t>(c)] *
                            (unitBase[static_cast<std::size_t>(c)] - stressed[static_cast<std::size_t>(c)]);
                loims[s][static_cast<std::size_t>(k)] =
                    std::max(0.0, loss - ccp.im0[static_cast<std::size_t>(k)]);
            }
        }
        ccp.df0 = coverTwoDefaultFund(loims, ccp.params.skinInTheGame);
        ccp.dfAlloc0 = allocateByIm(ccp.df0, ccp.im0, cfg.allocationPrecision);
        logLine(log, "setup: " + cc.id + " categories=" + std::to_string(nCat) +
                         " df0=" + std::to_string(ccp.df0));
        setup.ccps.push_back(std::move(ccp));
    }
    (void)threads;
    return setup;
}

CalibrationReport calibrateBarriers(ExperimentSetup& setup, const RunConfig& cfg, const InputData& data, int threads,
                                    const LogFn& log) {
    const int nMem = static_cast<int>(setup.members.size());
    CalibrationReport report;
    report.memberIds.resize(static_cast<std::size_t>(nMem));
    report.barriers.resize(static_cast<std::size_t>(nMem));
    report.achievedProb.resize(static_cast<std::size_t>(nMem));
    report.targetProb.resize(static_cast<std::size_t>(nMem));
    (void)data;

    std::vector<std::string> failures(static_cast<std::size_t>(nMem));
    parallelFor(nMem, threads, [&](int k) {
        const auto& member = setup.members[static_cast<std::size_t>(k)];
        try {
            const std::vector<double> minima = simulateAssetLogMinima(
                setup.assetParams[static_cast<std::size_t>(k)], setup.systemicJump, setup.regime,
                setup.dt * setup.steps, setup.steps, cfg.barrier.paths,
                Rng::forStream(cfg.seed, static_cast<std::uint64_t>(k), stream::barrier(k)).nextU64());
            const BarrierCalibration cal = calibrateBarrier(minima, member.targetDefaultProb, member.id);
            setup.barriers[static_cast<std::size_t>(k)] = cal.barrier;
            report.memberIds[static_cast<std::size_t>(k)] = member.id;
            report.barriers[static_cast<std::size_t>(k)] = cal.barrier;
            report.achievedProb[static_cast<std::size_t>(k)] = cal.achievedProb;
            report.targetProb[static_cast<std::size_t>(k)] = member.targetDefaultProb;
        } catch (const std::exception& e) {
            failures[static_cast<std::size_t>(k)] = e.what();
        }
    });
    for (const auto& failure : failures)
        if (!failure.empty()) throw CalibrationError(failure);
    logLine(log, "calibration: " + std::to_string(nMem) + " members at " + std::to_string(cfg.barrier.paths) +
                     " paths each");
    return report;
}

} // namespace ccpsim
