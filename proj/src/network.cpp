#include "ccpsim/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ccpsim/errors.hpp"
#include "ccpsim/rootfind.hpp"

namespace ccpsim {

MemberType parseMemberType(const std::string& label) {
    if (label == "diversified") return MemberType::Diversified;
    if (label == "markets_driven") return MemberType::MarketsDriven;
    if (label == "trading_house") return MemberType::TradingHouse;
    throw ConfigError("[CFG-SCHEMA]", "unknown member type '" + label + "'");
}

std::string memberTypeLabel(MemberType type) {
    switch (type) {
    case MemberType::Diversified: return "diversified";
    case MemberType::MarketsDriven: return "markets_driven";
    case MemberType::TradingHouse: return "trading_house";
    }
    return "diversified";
}

namespace {

// Known-to-total notional ratio implied by decay rate alpha, computed with
// the dominant rank factored out so it stays finite for large |alpha|.
double knownShare(double alpha, const std::vector<int>& ranks, const std::vector<char>& known) {
    int ref = ranks[0];
    if (alpha >= 0.0) {
        for (int r : ranks) ref = std::min(ref, r);
    } else {
        for (int r : ranks) ref = std::max(ref, r);
    }
    double all = 0.0, sub = 0.0;
    for (std::size_t k = 0; k < ranks.size(); ++k) {
        const double w = std::exp(-alpha * static_cast<double>(ranks[k] - ref));
        all += w;
        if (known[k]) sub += w;
    }
    return sub / all;
}

} // namespace

NotionalFit fitExponential(double totalNotional, double knownNotional, const std::vector<int>& ranks,
                           const std::vector<char>& known) {
    const std::size_t n = ranks.size();
    if (n == 0 || known.size() != n) throw ConfigError("[CFG-SCHEMA]", "rank/known size mismatch");
    std::size_t knownCount = 0;
    for (char c : known) knownCount += (c != 0);
    if (knownCount == 0)
        throw ConfigError("[NET-FIT]", "exponential fit needs at least one known member");
    if (knownCount == n)
        throw ConfigError("[NET-FIT]", "degenerate fit: every member is known, the subtotal adds no information");
    if (!(totalNotional > 0.0) || !(knownNotional > 0.0) || knownNotional >= totalNotional)
        throw ConfigError("[NET-FIT]", "aggregates must satisfy 0 < known < total");

    const double target = knownNotional / totalNotional;
    auto objective = [&](double alpha) { return knownShare(alpha, ranks, known) - target; };

    // The share-vs-decay curve may meet the target only on a narrow window
    // around an interior extremum, so a single coarse scan can miss every
    // sign change. Zoom towards the most promising grid point until a
    // bracket (or a tangential root) appears.
    constexpr double kAlphaMax = 37.0;
    constexpr int kGrid = 800;
    std::optional<double> alpha;
    double lo = -kAlphaMax, hi = kAlphaMax;
    for (int zoom = 0; zoom < 40 && !alpha; ++zoom) {
        double bestX = lo, bestAbs = std::fabs(objective(lo));
        double xPrev = lo, fPrev = objective(lo);
        for (int i = 1; i <= kGrid; ++i) {
            const double x = lo + (hi - lo) * static_cast<double>(i) / kGrid;
            const double fx = objective(x);
            if (fPrev == 0.0 || fPrev * fx < 0.0) {
                alpha = solveBracketed(objective, xPrev, x, 1e-14);
                break;
            }
            if (std::fabs(fx) < bestAbs) {
                bestAbs = std::fabs(fx);
                bestX = x;
            }
            xPrev = x;
            fPrev = fx;
        }
        if (alpha) break;
        if (bestAbs < 1e-11) {
            alpha = bestX;
            break;
        }
        const double cell = (hi - lo) / kGrid;
        lo = std::max(-kAlphaMax, bestX - 4.0 * cell);
        hi = std::min(kAlphaMax, bestX + 4.0 * cell);
    }
    if (!alpha)
        throw ConfigError("[NET-FIT]", "infeasible aggregates: no decay rate reproduces the known share");

    NotionalFit fit;
    fit.alpha = *alpha;
    int ref = ranks[0];
    if (fit.alpha >= 0.0) {
        for (int r : ranks) ref = std::min(ref, r);
    } else {
        for (int r : ranks) ref = std::max(ref, r);
    }
    double scaled = 0.0;
    for (int r : ranks) scaled += std::exp(-fit.alpha * static_cast<double>(r - ref));
    fit.beta = totalNotional / scaled * std::exp(fit.alpha * static_cast<double>(ref));
    fit.fitted.resize(n);
    for (std::size_t k = 0; k < n; ++k)
        fit.fitted[k] = totalNotional * std::exp(-fit.alpha * static_cast<double>(ranks[k] - ref)) / scaled;

    double sumAll = 0.0, sumKnown = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sumAll += fit.fitted[k];
        if (known[k]) sumKnown += fit.fitted[k];
    }
    if (std::fabs(sumAll - totalNotional) > 1e-8 * totalNotional ||
        std::fabs(sumKnown - knownNotional) > 1e-8 * knownNotional)
        throw ConfigError("[NET-FIT]", "exponential fit residual exceeds tolerance");
    return fit;
}

std::vector<double> randomizeNetPositions(Rng& rng, const std::vector<double>& fittedGross,
                                          const std::vector<char>& known, const std::vector<double>& knownDeltas,
                                          double deltaLimit, const std::string& categoryLabel, int* resampleCount) {
    const std::size_t n = fittedGross.size();
    CCPSIM_REQUIRE(known.size() == n && knownDeltas.size() == n, "randomization input size mismatch");

    double knownSum = 0.0;
    double unknownGross = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (known[k]) {
            knownSum += knownDeltas[k];
        } else {
            unknownGross += fittedGross[k];
        }
    }
    const double imbalance = -knownSum;
    const double ratio = imbalance / unknownGross;
    if (!(std::fabs(ratio) < deltaLimit))
        throw ConfigError("[NET-DELTA]", "category '" + categoryLabel +
                                             "': known positions leave imbalance ratio " + std::to_string(ratio) +
                                             " outside the delta limit " + std::to_string(deltaLimit));

    const double band = deltaLimit - std::fabs(ratio);
    std::vector<double> u(n, 0.0);
    for (int attempt = 0; attempt < 100; ++attempt) {
        double weightedSum = 0.0; // U
        for (std::size_t k = 0; k < n; ++k) {
            if (known[k]) continue;
            u[k] = band * (2.0 * rng.uniform() - 1.0);
            weightedSum += u[k] * fittedGross[k];
        }
        double sameSign = 0.0; // V: contributions sharing the sign of U
        if (weightedSum != 0.0) {
            for (std::size_t k = 0; k < n; ++k)
                if (!known[k] && u[k] * weightedSum > 0.0) sameSign += u[k] * fittedGross[k];
        }
        if (weightedSum != 0.0 && sameSign == 0.0) {
            if (resampleCount) ++(*resampleCount);
            continue;
        }
        const double reduction = (weightedSum != 0.0) ? weightedSum / sameSign : 0.0; // W in (0,1]
        std::vector<double> deltas(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            if (known[k]) {
                deltas[k] = knownDeltas[k];
            } else {
                const bool reduce = weightedSum != 0.0 && u[k] * weightedSum > 0.0;
                deltas[k] = (ratio + u[k] * (1.0 - (reduce ? reduction : 0.0))) * fittedGross[k];
            }
        }
        return deltas;
    }
    throw SimulationError("net position randomization failed to produce a valid draw for category '" +
                          categoryLabel + "'");
}

std::vector<double> assignWeights(const std::vector<MemberProfile>& profiles) {
    double total = 0.0;
    for (const auto& p : profiles) {
        if (!(p.balanceSheetAssets > 0.0))
            throw ConfigError("[CFG-INVARIANT]", "member '" + p.id + "' has non-positive balance sheet assets");
        total += p.balanceSheetAssets;
    }
    std::vector<double> weights(profiles.size(), 0.0);
    for (std::size_t k = 0; k < profiles.size(); ++k) weights[k] = profiles[k].balanceSheetAssets / total;
    return weights;
}

std::vector<double> simulateAssetLogMinima(const AssetParams& params, const JumpSpec& systemicJump,
                                           const RegimeConfig& regime, double horizon, int steps, int paths,
                                           std::uint64_t seed) {
    CCPSIM_REQUIRE(steps > 0 && paths > 0, "asset simulation needs positive steps and paths");
    const double dt = horizon / steps;
    std::vector<double> minima(static_cast<std::size_t>(paths), 0.0);
    for (int p = 0; p < paths; ++p) {
        Rng rng = Rng::forStream(seed, static_cast<std::uint64_t>(p), 0);
        double level = params.initialAssets;
        double minLog = std::log(level);
        double t = 0.0;
        for (int s = 0; s < steps; ++s) {
            const double dW = regimeWienerIncrement(rng, 1, dt, regime);
            const JumpDraw sys = sampleJumpDraw(rng, 1, dt, systemicJump, regime);
            const JumpDraw idio = sampleJumpDraw(rng, 1, dt, params.idioJump, regime);
            const double next = stepProportional(level, t, dt, params.vol, 1, regime, dW, params.systemicBeta, sys, idio);
            const double sigma = params.vol.value(t);
            const double bridge = sampleBridgeMin(rng, std::log(level), std::log(next), sigma * sigma * dt);
            minLog = std::min(minLog, bridge);
            level = next;
            t += dt;
        }
        minima[static_cast<std::size_t>(p)] = minLog;
    }
    std::sort(minima.begin(), minima.end());
    return minima;
}

BarrierCalibration calibrateBarrier(const std::vector<double>& sortedLogMinima, double targetProb,
                                    const std::string& memberId) {
    const std::size_t n = sortedLogMinima.size();
    if (!(targetProb > 0.0) || !(targetProb < 1.0))
        throw CalibrationError("member '" + memberId + "': target default probability must lie in (0,1)");
    const double rank = targetProb * static_cast<double>(n);
    if (rank < 1.0)
        throw CalibrationError("member '" + memberId + "': target probability " + std::to_string(targetProb) +
                               " is below the resolution of " + std::to_string(n) + " calibration paths");
    const std::size_t idx = std::min<std::size_t>(static_cast<std::size_t>(std::llround(rank)), n) - 1;
    BarrierCalibration out;
    out.barrier = std::exp(sortedLogMinima[idx]);
    out.achievedProb = static_cast<double>(idx + 1) / static_cast<double>(n);
    return out;
}

double hittingProbability(const std::vector<double>& sortedLogMinima, double barrier) {
    if (barrier <= 0.0) return 0.0;
    const double logB = std::log(barrier);
    const auto it = std::upper_bound(sortedLogMinima.begin(), sortedLogMinima.end(), logB);
    return static_cast<double>(it - sortedLogMinima.begin()) / static_cast<double>(sortedLogMinima.size());
}

} // namespace ccpsim
