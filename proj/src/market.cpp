#include "ccpsim/market.hpp"

#include <algorithm>
#include <cmath>

#include "ccpsim/errors.hpp"

namespace ccpsim {

void RegimeConfig::validate() const {
    if (thresholds.empty() || multipliers.empty() || thresholds.size() != multipliers.size())
        throw ConfigError("[CFG-SCHEMA]", "regime thresholds and multipliers must be non-empty and equal length");
    if (thresholds.back() != 1.0)
        throw ConfigError("[CFG-INVARIANT]", "regime thresholds must end at 1");
    if (multipliers.front() != 1.0)
        throw ConfigError("[CFG-INVARIANT]", "regime multipliers must start at 1");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (thresholds[i] <= 0.0 || thresholds[i] > 1.0)
            throw ConfigError("[CFG-INVARIANT]", "regime thresholds must lie in (0,1]");
        if (i > 0 && thresholds[i] <= thresholds[i - 1])
            throw ConfigError("[CFG-INVARIANT]", "regime thresholds must be strictly ascending");
        if (i > 0 && multipliers[i] <= multipliers[i - 1])
            throw ConfigError("[CFG-INVARIANT]", "regime multipliers must be strictly ascending");
    }
    if (meanReversion <= 0.0)
        throw ConfigError("[CFG-INVARIANT]", "stress mean reversion must be positive");
}

int regimeForIndicator(double indicator, const RegimeConfig& config) {
    // Regime 1 covers indicator <= m1, boundary inclusive.
    for (std::size_t i = 0; i < config.thresholds.size(); ++i)
        if (indicator <= config.thresholds[i]) return static_cast<int>(i) + 1;
    return config.stateCount();
}

StressState updateStress(const StressState& state, const std::vector<int>& newDefaults, double dt,
                         const std::vector<double>& weights, const RegimeConfig& config) {
    CCPSIM_REQUIRE(dt > 0.0, "stress update needs dt > 0");
    StressState next = state;
    next.time = state.time + dt;
    for (int member : newDefaults) {
        if (member < 0 || member >= static_cast<int>(weights.size()))
            throw ConfigError("[CFG-INVARIANT]", "unknown member id in default set");
        if (next.defaultTimes[static_cast<std::size_t>(member)])
            throw ConfigError("[CFG-INVARIANT]", "member reported as newly defaulted twice");
        next.defaultTimes[static_cast<std::size_t>(member)] = next.time;
    }
    double xi = 0.0;
    for (std::size_t k = 0; k < next.defaultTimes.size(); ++k) {
        if (!next.defaultTimes[k]) continue;
        xi += weights[k] * std::exp(-config.meanReversion * (next.time - *next.defaultTimes[k]));
    }
    next.indicator = xi;
    next.regime = regimeForIndicator(xi, config);
    return next;
}

double regimeWienerIncrement(Rng& rng, int regime, double dt, const RegimeConfig& config) {
    return config.multiplier(regime) * (std::sqrt(dt) * rng.normal());
}

JumpDraw sampleJumpDraw(Rng& rng, int regime, double dt, const JumpSpec& spec, const RegimeConfig& config) {
    JumpDraw draw;
    draw.meanCount = spec.intensity * config.multiplier(regime) * dt;
    draw.sizeMean = spec.sizeMean();
    const int n = rng.poisson(draw.meanCount);
    draw.count = std::min(n, JumpDraw::kMaxStored);
    for (int j = 0; j < draw.count; ++j) {
        const double z = spec.logMean + spec.logStd * rng.normal();
        draw.sizes[j] = std::expm1(z);
        draw.sumSizes += draw.sizes[j];
    }
    return draw;
}

EconomyState stepRates(const EconomyState& state, double t, double dt, const RatesParams& params,
                       const RatesShocks& shocks) {
    const double sigma = params.vol.value(t);
    EconomyState next = state;
    next.x1 = state.x1 - params.theta1 * state.x1 * dt + sigma * shocks.dW1;
    const double rho = params.correlation;
    next.x2 = state.x2 - params.theta2 * state.x2 * dt +
              params.volRatio * sigma * (rho * shocks.dW1 + std::sqrt(1.0 - rho * rho) * shocks.dW2);
    // Jumps act proportionally on the pre-step short rate and accumulate in
    // the non-reverting displacement.
    const double rPre = shortRate(state, t, params);
    double jump = 0.0;
    if (shocks.systemic) jump += params.systemicBeta * shocks.systemic->compensatedSum();
    if (shocks.idio) jump += shocks.idio->compensatedSum();
    next.jumpShift = state.jumpShift + rPre * jump;
    return next;
}

double shortRate(const EconomyState& state, double t, const RatesParams& params) {
    return params.drift.value(t) + state.x1 + state.x2 + state.jumpShift;
}

double stepProportional(double level, double t, double dt, const PiecewiseConstant& vol, int regime,
                        const RegimeConfig& config, double dW, double systemicBeta, const JumpDraw& systemic,
                        const JumpDraw& idio) {
    const double sigma = vol.value(t);
    const double lambda = config.multiplier(regime);
    const double effVar = sigma * sigma * lambda * lambda * dt;
    double next = level * std::exp(sigma * dW - 0.5 * effVar);
    double jumpFactor = 1.0;
    for (int j = 0; j < systemic.count; ++j)
        jumpFactor *= std::max(1.0 + systemicBeta * systemic.sizes[j], 1e-12);
    for (int j = 0; j < idio.count; ++j)
        jumpFactor *= std::max(1.0 + idio.sizes[j], 1e-12);
    jumpFactor *= std::exp(-systemicBeta * systemic.compensator() - idio.compensator());
    return next * jumpFactor;
}

double sampleBridgeMin(Rng& rng, double logStart, double logEnd, double varTotal) {
    if (varTotal <= 0.0) return std::min(logStart, logEnd);
    const double u = rng.uniform();
    const double c = -0.5 * varTotal * std::log(u);
    const double d = logStart - logEnd;
    return 0.5 * (logStart + logEnd - std::sqrt(d * d + 4.0 * c));
}

} // namespace ccpsim
