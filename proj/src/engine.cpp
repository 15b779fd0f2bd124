#include "ccpsim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "ccpsim/errors.hpp"
#include "ccpsim/rootfind.hpp"

namespace ccpsim {

std::string simModeLabel(SimMode mode) {
    switch (mode) {
    case SimMode::Feedback: return "feedback";
    case SimMode::DefaultOnly: return "default_only";
    case SimMode::NoDefault: return "no_default";
    }
    return "feedback";
}

MarketState ExperimentSetup::initialMarketState() const {
    MarketState state;
    state.time = 0.0;
    state.economies.assign(economies.size(), EconomyState{});
    state.fxSpots.resize(fxPairs.size());
    for (std::size_t p = 0; p < fxPairs.size(); ++p) state.fxSpots[p] = fxPairs[p].params.spot0;
    state.assets.resize(members.size());
    for (std::size_t k = 0; k < members.size(); ++k) state.assets[k] = assetParams[k].initialAssets;
    state.stress.resize(members.size());
    return state;
}

namespace {

double fxFactor(const ExperimentSetup& setup, const std::vector<double>& fxSpots, int economy) {
    const int pair = setup.economies[static_cast<std::size_t>(economy)].fxPairIndex;
    return pair < 0 ? 1.0 : fxSpots[static_cast<std::size_t>(pair)];
}

} // namespace

std::vector<double> ccpUnitValues(const ExperimentSetup& setup, const CcpSetup& ccp,
                                  const std::vector<EconomyState>& economies, const std::vector<double>& fxSpots,
                                  double t) {
    std::vector<double> values(ccp.swaps.size(), 0.0);
    for (std::size_t c = 0; c < ccp.swaps.size(); ++c) {
        const int e = ccp.categoryEconomy[c];
        const auto& params = setup.economies[static_cast<std::size_t>(e)].params;
        values[c] = valueSwap(ccp.swaps[c], params, economies[static_cast<std::size_t>(e)], t) *
                    fxFactor(setup, fxSpots, e);
    }
    return values;
}

std::vector<double> stressedUnitValues(const ExperimentSetup& setup, const CcpSetup& ccp,
                                       const std::vector<EconomyState>& economies,
                                       const std::vector<double>& fxSpots, double t,
                                       const StressScenario& scenario) {
    std::vector<EconomyState> shifted = economies;
    for (std::size_t e = 0; e < shifted.size() && e < scenario.economyShifts.size(); ++e) {
        shifted[e].x1 += scenario.economyShifts[e].dX1;
        shifted[e].x2 += scenario.economyShifts[e].dX2;
        shifted[e].jumpShift += scenario.economyShifts[e].dShift;
    }
    std::vector<double> fx = fxSpots;
    for (std::size_t p = 0; p < fx.size() && p < scenario.fxRelative.size(); ++p)
        fx[p] *= 1.0 + scenario.fxRelative[p];
    return ccpUnitValues(setup, ccp, shifted, fx, t);
}

std::vector<double> benchmarkLossVector(const CcpSetup& ccp, const std::vector<double>& unitOld,
                                        const std::vector<double>& unitNew) {
    const auto& portfolios = ccp.benchmarks.portfolios();
    std::vector<double> losses(portfolios.size(), 0.0);
    for (std::size_t b = 0; b < portfolios.size(); ++b) {
        double loss = 0.0;
        for (std::size_t c = 0; c < portfolios[b].size(); ++c)
            loss += portfolios[b][c] * (unitOld[c] - unitNew[c]);
        losses[b] = loss;
    }
    return losses;
}

namespace {

VarState initVarStateFromPools(const ScenarioPool& base, const ScenarioPool& extra,
                               std::span<const double> coefficients, int quantileRank) {
    std::vector<double> losses = portfolioScenarioLosses(base, coefficients);
    const std::vector<double> more = portfolioScenarioLosses(extra, coefficients);
    losses.insert(losses.end(), more.begin(), more.end());
    const std::size_t keep = std::min<std::size_t>(losses.size(), static_cast<std::size_t>(quantileRank) + 1);
    std::partial_sort(losses.begin(), losses.begin() + static_cast<std::ptrdiff_t>(keep), losses.end(),
                      std::greater<double>());
    VarState state;
    state.quantileRank = quantileRank;
    state.topLosses.assign(losses.begin(), losses.begin() + static_cast<std::ptrdiff_t>(keep));
    return state;
}

struct CcpPathState {
    bool alive = true;
    std::vector<std::vector<double>> positions;
    std::vector<MarginAccount> accounts;
    std::vector<std::vector<double>> coeffs;
    std::vector<VarState> varStates;
    ScenarioPool extra;
    std::vector<double> unitValues;
};

struct PathRngs {
    std::uint64_t master;
    std::uint64_t pathSeed;
    Rng systemic;
    std::vector<Rng> ratesW1, ratesW2, ratesJ;
    std::vector<Rng> fxW, fxJ;
    std::vector<Rng> assetW, assetJ, bridge;

    PathRngs(const ExperimentSetup& setup, std::uint64_t seed)
        : master(setup.masterSeed), pathSeed(seed),
          systemic(Rng::forStream(master, seed, stream::kSystemicJump)) {
        const int nEcon = static_cast<int>(setup.economies.size());
        const int nFx = static_cast<int>(setup.fxPairs.size());
        const int nMem = static_cast<int>(setup.members.size());
        for (int e = 0; e < nEcon; ++e) {
            ratesW1.push_back(Rng::forStream(master, seed, stream::ratesW1(e)));
            ratesW2.push_back(Rng::forStream(master, seed, stream::ratesW2(e)));
            ratesJ.push_back(Rng::forStream(master, seed, stream::ratesJump(e)));
        }
        for (int p = 0; p < nFx; ++p) {
            fxW.push_back(Rng::forStream(master, seed, stream::fxW(p)));
            fxJ.push_back(Rng::forStream(master, seed, stream::fxJump(p)));
        }
        for (int k = 0; k < nMem; ++k) {
            assetW.push_back(Rng::forStream(master, seed, stream::assetW(k)));
            assetJ.push_back(Rng::forStream(master, seed, stream::assetJump(k)));
            bridge.push_back(Rng::forStream(master, seed, stream::assetBridge(k)));
        }
    }
};

} // namespace

PathResult runPath(const ExperimentSetup& setup, std::uint64_t pathSeed, SimMode mode, StepTrace* trace,
                   std::vector<MarginSnapshotRow>* snapshot) {
    const int nMem = static_cast<int>(setup.members.size());
    const int nCcp = static_cast<int>(setup.ccps.size());
    const double dt = setup.dt;

    PathRngs rngs(setup, pathSeed);
    MarketState mkt = setup.initialMarketState();

    std::vector<LedgerEntry> ledger(static_cast<std::size_t>(nMem));
    std::vector<char> alive(static_cast<std::size_t>(nMem), 1);
    std::vector<double> defaultTime(static_cast<std::size_t>(nMem), std::numeric_limits<double>::quiet_NaN());
    std::vector<double> transactionalCash(static_cast<std::size_t>(nMem), 0.0);

    std::vector<CcpPathState> ccps(static_cast<std::size_t>(nCcp));
    for (int c = 0; c < nCcp; ++c) {
        const CcpSetup& cs = setup.ccps[static_cast<std::size_t>(c)];
        CcpPathState& ps = ccps[static_cast<std::size_t>(c)];
        ps.positions = cs.positions0;
        ps.coeffs = cs.coeffs0;
        ps.varStates = cs.varStates0;
        ps.accounts.resize(static_cast<std::size_t>(nMem));
        for (int k = 0; k < nMem; ++k) {
            ps.accounts[static_cast<std::size_t>(k)].im = cs.im0[static_cast<std::size_t>(k)];
            ps.accounts[static_cast<std::size_t>(k)].addOn = cs.addOn0[static_cast<std::size_t>(k)];
            ps.accounts[static_cast<std::size_t>(k)].dfContribution = cs.dfAlloc0[static_cast<std::size_t>(k)];
        }
        ps.unitValues = ccpUnitValues(setup, cs, mkt.economies, mkt.fxSpots, 0.0);
    }

    PathResult result;
    result.seed = pathSeed;
    result.xiPath.reserve(static_cast<std::size_t>(setup.steps));
    if (trace) trace->steps.resize(static_cast<std::size_t>(setup.steps));

    std::vector<double> dVm(static_cast<std::size_t>(nCcp) * nMem, 0.0);
    std::vector<double> imNew(static_cast<std::size_t>(nCcp) * nMem, 0.0);

    for (int step = 0; step < setup.steps; ++step) {
        const int regime = (mode == SimMode::Feedback) ? mkt.stress.regime : 1;
        const double volRatio = setup.volRatioEnabled ? setup.regime.multiplier(regime) : 1.0;
        const double t = mkt.time;
        const double tNew = t + dt;
        StepTrace::Step* ts = trace ? &trace->steps[static_cast<std::size_t>(step)] : nullptr;
        if (ts) ts->ccps.resize(static_cast<std::size_t>(nCcp));

        // (1) market evolution; the regime is frozen for the step.
        const JumpDraw systemic = sampleJumpDraw(rngs.systemic, regime, dt, setup.systemicJump, setup.regime);
        std::vector<EconomyState> econNew(setup.economies.size());
        for (std::size_t e = 0; e < setup.economies.size(); ++e) {
            const auto& eco = setup.economies[e];
            RatesShocks shocks;
            shocks.dW1 = regimeWienerIncrement(rngs.ratesW1[e], regime, dt, setup.regime);
            shocks.dW2 = regimeWienerIncrement(rngs.ratesW2[e], regime, dt, setup.regime);
            const JumpDraw idio = sampleJumpDraw(rngs.ratesJ[e], regime, dt, eco.params.idioJump, setup.regime);
            shocks.systemic = &systemic;
            shocks.idio = &idio;
            econNew[e] = stepRates(mkt.economies[e], t, dt, eco.params, shocks);
        }
        std::vector<double> fxNew(setup.fxPairs.size());
        for (std::size_t p = 0; p < setup.fxPairs.size(); ++p) {
            const auto& fx = setup.fxPairs[p];
            const double dW = regimeWienerIncrement(rngs.fxW[p], regime, dt, setup.regime);
            const JumpDraw idio = sampleJumpDraw(rngs.fxJ[p], regime, dt, fx.params.idioJump, setup.regime);
            fxNew[p] = stepProportional(mkt.fxSpots[p], t, dt, fx.params.vol, regime, setup.regime, dW,
                                        fx.params.systemicBeta, systemic, idio);
        }
        std::vector<double> assetsNew(static_cast<std::size_t>(nMem));
        for (int k = 0; k < nMem; ++k) {
            const auto& ap = setup.assetParams[static_cast<std::size_t>(k)];
            const double dW = regimeWienerIncrement(rngs.assetW[static_cast<std::size_t>(k)], regime, dt, setup.regime);
            const JumpDraw idio =
                sampleJumpDraw(rngs.assetJ[static_cast<std::size_t>(k)], regime, dt, ap.idioJump, setup.regime);
            assetsNew[static_cast<std::size_t>(k)] = stepProportional(mkt.assets[static_cast<std::size_t>(k)], t, dt,
                                                                      ap.vol, regime, setup.regime, dW,
                                                                      ap.systemicBeta, systemic, idio);
        }

        // (2) variation margin and IM updates per member and CCP.
        std::vector<std::vector<double>> unitNew(static_cast<std::size_t>(nCcp));
        for (int c = 0; c < nCcp; ++c) {
            CcpPathState& ps = ccps[static_cast<std::size_t>(c)];
            if (!ps.alive) continue;
            const CcpSetup& cs = setup.ccps[static_cast<std::size_t>(c)];
            unitNew[static_cast<std::size_t>(c)] = ccpUnitValues(setup, cs, econNew, fxNew, tNew);
            const std::vector<double> realizedBench =
                benchmarkLossVector(cs, ps.unitValues, unitNew[static_cast<std::size_t>(c)]);
            ps.extra.append(realizedBench);
            for (int k = 0; k < nMem; ++k) {
                if (!alive[static_cast<std::size_t>(k)]) continue;
                const auto& pos = ps.positions[static_cast<std::size_t>(k)];
                double vm = 0.0;
                for (std::size_t cat = 0; cat < pos.size(); ++cat)
                    vm += pos[cat] * (unitNew[static_cast<std::size_t>(c)][cat] - ps.unitValues[cat]);
                dVm[static_cast<std::size_t>(c) * nMem + k] = vm;
                if (ts) {
                    ts->ccps[static_cast<std::size_t>(c)].vmSum += vm;
                    ts->ccps[static_cast<std::size_t>(c)].vmScale += std::fabs(vm);
                }
                double realized = 0.0;
                const auto& a = ps.coeffs[static_cast<std::size_t>(k)];
                for (std::size_t b = 0; b < a.size(); ++b) realized += a[b] * realizedBench[b];
                updateVarState(ps.varStates[static_cast<std::size_t>(k)], realized, volRatio);
                imNew[static_cast<std::size_t>(c) * nMem + k] =
                    imValue(ps.varStates[static_cast<std::size_t>(k)],
                            ps.accounts[static_cast<std::size_t>(k)].addOn);
            }
        }

        // (3) default tests. The hypothetical cash position includes this
        // step's margin flows; intra-step breaches are detected through the
        // diffusion bridge of the asset level against the start-of-step cash.
        std::vector<int> newDefaults;
        for (int k = 0; k < nMem; ++k) {
            if (!alive[static_cast<std::size_t>(k)]) continue;
            double dVmTot = 0.0;
            double dImTot = 0.0;
            for (int c = 0; c < nCcp; ++c) {
                if (!ccps[static_cast<std::size_t>(c)].alive) continue;
                dVmTot += dVm[static_cast<std::size_t>(c) * nMem + k];
                dImTot += imNew[static_cast<std::size_t>(c) * nMem + k] -
                          ccps[static_cast<std::size_t>(c)].accounts[static_cast<std::size_t>(k)].im;
            }
            const double barrier = setup.barriers[static_cast<std::size_t>(k)];
            const double cashStart = ledger[static_cast<std::size_t>(k)].cashTotal();
            const double cashHyp = cashStart + dVmTot - dImTot;
            bool hit = false;
            if (mode != SimMode::NoDefault) {
                hit = cashHyp + assetsNew[static_cast<std::size_t>(k)] <= barrier;
            }
            if (!hit && mode != SimMode::NoDefault) {
                const double effBarrier = barrier - cashStart;
                if (effBarrier > 0.0) {
                    const auto& ap = setup.assetParams[static_cast<std::size_t>(k)];
                    const double sigma = ap.vol.value(t) * setup.regime.multiplier(regime);
                    const double bridgeMin =
                        sampleBridgeMin(rngs.bridge[static_cast<std::size_t>(k)],
                                        std::log(mkt.assets[static_cast<std::size_t>(k)]),
                                        std::log(assetsNew[static_cast<std::size_t>(k)]), sigma * sigma * dt);
                    hit = bridgeMin <= std::log(effBarrier);
                }
            }
            if (hit) {
                // The member fails to meet this step's calls: its ledger
                // stops at the start-of-step values and its margin is seized.
                alive[static_cast<std::size_t>(k)] = 0;
                defaultTime[static_cast<std::size_t>(k)] = tNew;
                newDefaults.push_back(k);
            } else {
                ledger[static_cast<std::size_t>(k)].vmCumulative += dVmTot;
                ledger[static_cast<std::size_t>(k)].imDelta += dImTot;
                transactionalCash[static_cast<std::size_t>(k)] += dVmTot - dImTot;
                for (int c = 0; c < nCcp; ++c) {
                    if (!ccps[static_cast<std::size_t>(c)].alive) continue;
                    ccps[static_cast<std::size_t>(c)].accounts[static_cast<std::size_t>(k)].im =
                        imNew[static_cast<std::size_t>(c) * nMem + k];
                }
            }
        }
        mkt.assets = assetsNew;
        mkt.economies = econNew;
        mkt.fxSpots = fxNew;

        // (4)-(6) loss waterfall, allocation and porting per CCP.
        for (int c = 0; c < nCcp; ++c) {
            CcpPathState& ps = ccps[static_cast<std::size_t>(c)];
            if (!ps.alive || newDefaults.empty()) continue;
            const CcpSetup& cs = setup.ccps[static_cast<std::size_t>(c)];
            StepTrace::CcpStep* tc = ts ? &ts->ccps[static_cast<std::size_t>(c)] : nullptr;

            double lossTotal = 0.0;
            for (int l : newDefaults) {
                const double dv = dVm[static_cast<std::size_t>(c) * nMem + l];
                const auto& acct = ps.accounts[static_cast<std::size_t>(l)];
                lossTotal += lossBeyondCollateral(dv, acct.im, acct.dfContribution);
            }
            if (tc) tc->lossTotal = lossTotal;

            // Defaulters' margin is consumed; remove them from the pool.
            for (int l : newDefaults) {
                ps.accounts[static_cast<std::size_t>(l)].im = 0.0;
                ps.accounts[static_cast<std::size_t>(l)].dfContribution = 0.0;
            }

            std::vector<int> survivors;
            double imSum = 0.0;
            double dfSurvivors = 0.0;
            for (int k = 0; k < nMem; ++k) {
                if (!alive[static_cast<std::size_t>(k)]) continue;
                survivors.push_back(k);
                imSum += ps.accounts[static_cast<std::size_t>(k)].im;
                dfSurvivors += ps.accounts[static_cast<std::size_t>(k)].dfContribution;
            }

            if (static_cast<int>(survivors.size()) < 2) {
                // Wind-down: positions cancelled at par, margin returned.
                for (int k : survivors) {
                    auto& acct = ps.accounts[static_cast<std::size_t>(k)];
                    ledger[static_cast<std::size_t>(k)].imDelta -= acct.im;
                    transactionalCash[static_cast<std::size_t>(k)] += acct.im;
                    ledger[static_cast<std::size_t>(k)].dfDelta -= acct.dfContribution;
                    acct.im = 0.0;
                    acct.dfContribution = 0.0;
                    std::fill(ps.positions[static_cast<std::size_t>(k)].begin(),
                              ps.positions[static_cast<std::size_t>(k)].end(), 0.0);
                }
                for (int l : newDefaults)
                    std::fill(ps.positions[static_cast<std::size_t>(l)].begin(),
                              ps.positions[static_cast<std::size_t>(l)].end(), 0.0);
                ps.alive = false;
                if (tc) tc->absorbed = lossTotal;
                continue;
            }

            if (lossTotal > dfSurvivors + cs.params.skinInTheGame) {
                // End of the waterfall: survivors' contributions are consumed
                // first, the residual is split by closing IM, trades unwind
                // at par and initial margin is handed back.
                const double residual = lossTotal - cs.params.skinInTheGame - dfSurvivors;
                std::vector<double> keys(survivors.size());
                for (std::size_t i = 0; i < survivors.size(); ++i)
                    keys[i] = ps.accounts[static_cast<std::size_t>(survivors[i])].im;
                const std::vector<double> shares = allocateByIm(residual, keys, setup.allocationPrecision);
                double allocated = 0.0;
                for (std::size_t i = 0; i < survivors.size(); ++i) {
                    const int k = survivors[i];
                    auto& acct = ps.accounts[static_cast<std::size_t>(k)];
                    const double loss = acct.dfContribution + shares[i];
                    ledger[static_cast<std::size_t>(k)].allocatedLosses += loss;
                    transactionalCash[static_cast<std::size_t>(k)] -= loss;
                    ledger[static_cast<std::size_t>(k)].dfDelta -= acct.dfContribution;
                    ledger[static_cast<std::size_t>(k)].imDelta -= acct.im;
                    transactionalCash[static_cast<std::size_t>(k)] += acct.im;
                    allocated += loss;
                    acct.dfContribution = 0.0;
                    acct.im = 0.0;
                    std::fill(ps.positions[static_cast<std::size_t>(k)].begin(),
                              ps.positions[static_cast<std::size_t>(k)].end(), 0.0);
                }
                for (int l : newDefaults)
                    std::fill(ps.positions[static_cast<std::size_t>(l)].begin(),
                              ps.positions[static_cast<std::size_t>(l)].end(), 0.0);
                ps.alive = false;
                if (tc) {
                    tc->allocated = allocated;
                    tc->absorbed = cs.params.skinInTheGame;
                }
                continue;
            }

            if (lossTotal > 0.0) {
                std::vector<double> keys(survivors.size());
                for (std::size_t i = 0; i < survivors.size(); ++i)
                    keys[i] = ps.accounts[static_cast<std::size_t>(survivors[i])].im;
                const std::vector<double> shares = allocateByIm(lossTotal, keys, setup.allocationPrecision);
                for (std::size_t i = 0; i < survivors.size(); ++i) {
                    ledger[static_cast<std::size_t>(survivors[i])].allocatedLosses += shares[i];
                    transactionalCash[static_cast<std::size_t>(survivors[i])] -= shares[i];
                    if (tc) tc->allocated += shares[i];
                }
            }

            // Porting: defaulters' positions move to survivors by IM share
            // (equal split if every surviving IM is zero), preserving
            // per-category totals; the enlarged portfolios feed the next
            // step's margin call.
            for (int l : newDefaults) {
                auto& dead = ps.positions[static_cast<std::size_t>(l)];
                for (std::size_t cat = 0; cat < dead.size(); ++cat) {
                    const double amount = dead[cat];
                    if (amount == 0.0) continue;
                    for (int k : survivors) {
                        const double share = imSum > 0.0
                                                 ? ps.accounts[static_cast<std::size_t>(k)].im / imSum
                                                 : 1.0 / static_cast<double>(survivors.size());
                        ps.positions[static_cast<std::size_t>(k)][cat] += amount * share;
                    }
                    dead[cat] = 0.0;
                }
            }
            for (int k : survivors) {
                ps.coeffs[static_cast<std::size_t>(k)] =
                    cs.benchmarks.fit(ps.positions[static_cast<std::size_t>(k)]);
                ps.varStates[static_cast<std::size_t>(k)] = initVarStateFromPools(
                    cs.histPool, ps.extra, ps.coeffs[static_cast<std::size_t>(k)], cs.quantileRank);
                ps.varStates[static_cast<std::size_t>(k)].volRatio = volRatio;
            }
        }

        // (7) stress indicator and regime, first effective next step.
        mkt.stress = updateStress(mkt.stress, newDefaults, dt, setup.weights, setup.regime);
        mkt.time = tNew;
        result.xiPath.push_back(mkt.stress.indicator);

        // (8) default fund resize from the surviving book.
        for (int c = 0; c < nCcp; ++c) {
            CcpPathState& ps = ccps[static_cast<std::size_t>(c)];
            if (!ps.alive) continue;
            const CcpSetup& cs = setup.ccps[static_cast<std::size_t>(c)];
            std::vector<int> survivors;
            std::vector<double> ims;
            for (int k = 0; k < nMem; ++k)
                if (alive[static_cast<std::size_t>(k)]) {
                    survivors.push_back(k);
                    ims.push_back(ps.accounts[static_cast<std::size_t>(k)].im);
                }
            if (static_cast<int>(survivors.size()) < 2) continue;
            std::vector<std::vector<double>> loims(cs.params.scenarios.size());
            const auto& unit = unitNew[static_cast<std::size_t>(c)];
            for (std::size_t s = 0; s < cs.params.scenarios.size(); ++s) {
                const std::vector<double> stressed =
                    stressedUnitValues(setup, cs, mkt.economies, mkt.fxSpots, tNew, cs.params.scenarios[s]);
                loims[s].resize(survivors.size());
                for (std::size_t i = 0; i < survivors.size(); ++i) {
                    const auto& pos = ps.positions[static_cast<std::size_t>(survivors[i])];
                    double loss = 0.0;
                    for (std::size_t cat = 0; cat < pos.size(); ++cat) loss += pos[cat] * (unit[cat] - stressed[cat]);
                    loims[s][i] = std::max(0.0, loss - ims[i]);
                }
            }
            const double df = coverTwoDefaultFund(loims, cs.params.skinInTheGame);
            const std::vector<double> alloc = allocateByIm(df, ims, setup.allocationPrecision);
            for (std::size_t i = 0; i < survivors.size(); ++i) {
                auto& acct = ps.accounts[static_cast<std::size_t>(survivors[i])];
                ledger[static_cast<std::size_t>(survivors[i])].dfDelta += alloc[i] - acct.dfContribution;
                acct.dfContribution = alloc[i];
            }
        }

        for (int c = 0; c < nCcp; ++c) {
            if (!ccps[static_cast<std::size_t>(c)].alive) continue;
            ccps[static_cast<std::size_t>(c)].unitValues = unitNew[static_cast<std::size_t>(c)];
        }

        if (ts) {
            for (int c = 0; c < nCcp; ++c) {
                CcpPathState& ps = ccps[static_cast<std::size_t>(c)];
                auto& tc = ts->ccps[static_cast<std::size_t>(c)];
                const std::size_t nCat = setup.ccps[static_cast<std::size_t>(c)].categories.size();
                for (std::size_t cat = 0; cat < nCat; ++cat) {
                    double sum = 0.0, scale = 0.0;
                    for (int k = 0; k < nMem; ++k) {
                        sum += ps.positions[static_cast<std::size_t>(k)][cat];
                        scale += std::fabs(ps.positions[static_cast<std::size_t>(k)][cat]);
                    }
                    tc.parityGap = std::max(tc.parityGap, std::fabs(sum));
                    tc.parityScale = std::max(tc.parityScale, scale);
                }
            }
            for (int k = 0; k < nMem; ++k) {
                ts->cashIdentityGap =
                    std::max(ts->cashIdentityGap, std::fabs(transactionalCash[static_cast<std::size_t>(k)] -
                                                            ledger[static_cast<std::size_t>(k)].cashTotal()));
                ts->cashScale = std::max(ts->cashScale, std::fabs(transactionalCash[static_cast<std::size_t>(k)]));
            }
        }
        if (snapshot) {
            for (int c = 0; c < nCcp; ++c) {
                const CcpPathState& ps = ccps[static_cast<std::size_t>(c)];
                for (int k = 0; k < nMem; ++k) {
                    MarginSnapshotRow row;
                    row.step = step + 1;
                    row.ccp = setup.ccps[static_cast<std::size_t>(c)].id;
                    row.member = setup.members[static_cast<std::size_t>(k)].id;
                    row.im = ps.accounts[static_cast<std::size_t>(k)].im;
                    row.df = ps.accounts[static_cast<std::size_t>(k)].dfContribution;
                    row.vmIncrement = dVm[static_cast<std::size_t>(c) * nMem + k];
                    snapshot->push_back(row);
                }
            }
        }
        std::fill(dVm.begin(), dVm.end(), 0.0);
    }

    result.ledger = ledger;
    result.defaultTimes = defaultTime;
    result.xi1 = mkt.stress.indicator;
    for (int k = 0; k < nMem; ++k)
        if (alive[static_cast<std::size_t>(k)] == 0) ++result.defaults;
    double losses = 0.0, drain = 0.0;
    for (int k : setup.xyzMembers) {
        losses += ledger[static_cast<std::size_t>(k)].allocatedLosses;
        drain += ledger[static_cast<std::size_t>(k)].imDelta;
    }
    result.lossRatio = losses / setup.xyzEquity;
    result.imDrainRatio = drain / setup.xyzEquity;
    return result;
}

void parallelFor(int count, int threads, const std::function<void(int)>& body) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex errorMutex;
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(errorMutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(std::min(threads, count)));
    for (int w = 0; w < std::min(threads, count); ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

std::vector<PathResult> runPaths(const ExperimentSetup& setup, SimMode mode, int pathCount, int threads) {
    std::vector<PathResult> results(static_cast<std::size_t>(pathCount));
    parallelFor(pathCount, threads, [&](int p) {
        const std::uint64_t seed = setup.masterSeed + static_cast<std::uint64_t>(p);
        try {
            results[static_cast<std::size_t>(p)] = runPath(setup, seed, mode);
        } catch (const std::exception& e) {
            throw SimulationError("path seed " + std::to_string(seed) + ": " + e.what());
        }
    });
    return results;
}

double reweightPaths(std::vector<PathResult>& results, double targetStressMean) {
    CCPSIM_REQUIRE(!results.empty(), "reweighting needs at least one path");
    double lo = results.front().xi1, hi = results.front().xi1;
    for (const auto& r : results) {
        lo = std::min(lo, r.xi1);
        hi = std::max(hi, r.xi1);
    }
    const double n = static_cast<double>(results.size());
    if (hi == lo) {
        if (std::fabs(targetStressMean - lo) > 1e-12 * (1.0 + std::fabs(lo)))
            throw SimulationError("reweighting target outside the realized stress range");
        for (auto& r : results) r.weight = 1.0;
        return 0.0;
    }
    if (!(targetStressMean > lo) || !(targetStressMean < hi))
        throw SimulationError("reweighting target outside the realized stress range");

    auto weightedMean = [&](double theta) {
        double wSum = 0.0, xSum = 0.0;
        for (const auto& r : results) {
            const double w = std::exp(theta * (r.xi1 - hi));
            wSum += w;
            xSum += w * r.xi1;
        }
        return xSum / wSum - targetStressMean;
    };
    double bracket = 1.0;
    while (weightedMean(-bracket) * weightedMean(bracket) > 0.0 && bracket < 1e8) bracket *= 2.0;
    const auto theta = solveBracketed(weightedMean, -bracket, bracket, 1e-12);
    if (!theta) throw SimulationError("reweighting solve failed");

    double wSum = 0.0;
    for (const auto& r : results) wSum += std::exp(*theta * (r.xi1 - hi));
    for (auto& r : results) r.weight = n * std::exp(*theta * (r.xi1 - hi)) / wSum;
    return *theta;
}

double pathFieldValue(const PathResult& result, PathField field) {
    return field == PathField::LossRatio ? result.lossRatio : result.imDrainRatio;
}

std::vector<double> aggregateCcdf(const std::vector<PathResult>& results, PathField field,
                                  const std::vector<double>& thresholds) {
    CCPSIM_REQUIRE(!results.empty(), "ccdf aggregation needs results");
    std::vector<std::pair<double, double>> pts;
    pts.reserve(results.size());
    double wTotal = 0.0;
    for (const auto& r : results) {
        pts.emplace_back(pathFieldValue(r, field), r.weight);
        wTotal += r.weight;
    }
    std::sort(pts.begin(), pts.end());
    std::vector<double> ccdf(thresholds.size(), 0.0);
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        // weight strictly above the threshold
        auto it = std::upper_bound(pts.begin(), pts.end(), thresholds[i],
                                   [](double x, const std::pair<double, double>& p) { return x < p.first; });
        double w = 0.0;
        for (; it != pts.end(); ++it) w += it->second;
        ccdf[i] = w / wTotal;
    }
    return ccdf;
}

double weightedQuantile(const std::vector<PathResult>& results, PathField field, double level) {
    CCPSIM_REQUIRE(!results.empty(), "quantile needs results");
    std::vector<std::pair<double, double>> pts;
    pts.reserve(results.size());
    double wTotal = 0.0;
    for (const auto& r : results) {
        pts.emplace_back(pathFieldValue(r, field), r.weight);
        wTotal += r.weight;
    }
    std::sort(pts.begin(), pts.end());
    double acc = 0.0;
    for (const auto& [value, weight] : pts) {
        acc += weight;
        if (acc >= level * wTotal) return value;
    }
    return pts.back().first;
}

double weightedExceedance(const std::vector<PathResult>& results, PathField field, double threshold) {
    double wTotal = 0.0, wAbove = 0.0;
    for (const auto& r : results) {
        wTotal += r.weight;
        if (pathFieldValue(r, field) > threshold) wAbove += r.weight;
    }
    return wAbove / wTotal;
}

} // namespace ccpsim
