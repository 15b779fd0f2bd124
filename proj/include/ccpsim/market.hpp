#pragma once

#include <optional>
#include <vector>

#include "ccpsim/rng.hpp"
#include "ccpsim/termstructure.hpp"

namespace ccpsim {

/// Volatility-regime configuration: thresholds on the stress indicator and
/// the multiplier applied to diffusion volatility and jump intensity in each
/// state. Regimes are 1-based; regime 1 is the base state.
struct RegimeConfig {
    std::vector<double> thresholds{1.0};  // ascending, last entry must be 1
    std::vector<double> multipliers{1.0}; // ascending, first entry must be 1
    double meanReversion = 1.0;           // decay rate of the stress indicator, per year

    int stateCount() const { return static_cast<int>(multipliers.size()); }
    double multiplier(int regime) const { return multipliers[static_cast<std::size_t>(regime - 1)]; }
    void validate() const;
};

/// Materiality-weighted default stress. The indicator is the weighted sum of
/// exp(-theta*(t - tau_k)) over defaulted members, always in [0,1] when the
/// member weights sum to one.
struct StressState {
    double time = 0.0;
    double indicator = 0.0;
    int regime = 1;
    std::vector<std::optional<double>> defaultTimes; // per member

    void resize(std::size_t members) { defaultTimes.assign(members, std::nullopt); }
};

int regimeForIndicator(double indicator, const RegimeConfig& config);

/// Advances the stress state by dt. New defaults are stamped at the end of
/// the elapsed step, so they enter at full weight and first affect the next
/// step's regime.
StressState updateStress(const StressState& state, const std::vector<int>& newDefaults, double dt,
                         const std::vector<double>& weights, const RegimeConfig& config);

struct JumpSpec {
    double intensity = 0.0; // jumps per year, before regime scaling
    double logMean = 0.0;   // mu of Z; jump size is e^Z - 1
    double logStd = 0.0;

    // E[e^Z - 1]
    double sizeMean() const { return std::exp(logMean + 0.5 * logStd * logStd) - 1.0; }
};

/// One step's worth of compound-Poisson activity. Individual sizes are kept
/// so consumers with different loadings can apply the same events.
struct JumpDraw {
    static constexpr int kMaxStored = 32;
    int count = 0;
    double sizes[kMaxStored] = {}; // e^Z - 1 per event
    double sumSizes = 0.0;
    double meanCount = 0.0; // lambda * Lambda_regime * dt
    double sizeMean = 0.0;  // E[e^Z - 1]

    double compensator() const { return meanCount * sizeMean; }
    double compensatedSum() const { return sumSizes - compensator(); }
};

/// Gaussian increment with variance (Lambda_regime)^2 * dt. The draw is a
/// single scaled standard normal, so the same underlying uniform yields
/// increments that differ across regime settings exactly by the multiplier.
double regimeWienerIncrement(Rng& rng, int regime, double dt, const RegimeConfig& config);

/// Compound Poisson increment at regime-scaled intensity, compensated so the
/// conditional mean of compensatedSum() is zero.
JumpDraw sampleJumpDraw(Rng& rng, int regime, double dt, const JumpSpec& spec, const RegimeConfig& config);

struct RatesParams {
    PiecewiseConstant drift;      // phi_t, fits the initial curve
    double theta1 = 0.05;
    double theta2 = 0.5;
    PiecewiseConstant vol;        // sigma_t
    double volRatio = 1.0;        // second-factor volatility scale
    double correlation = 0.0;     // rho between the two factor drivers
    double systemicBeta = 0.0;
    JumpSpec idioJump;
};

struct FxParams {
    double spot0 = 1.0;
    PiecewiseConstant vol;
    double systemicBeta = 0.0;
    JumpSpec idioJump;
};

struct AssetParams {
    double initialAssets = 1.0;
    PiecewiseConstant vol;
    double systemicBeta = 0.0;
    JumpSpec idioJump;
};

/// Two-factor rates state plus the accumulated jump displacement of the
/// short rate. The short rate is drift(t) + x1 + x2 + jumpShift; the jump
/// part carries no mean reversion and shifts the whole curve in valuation.
struct EconomyState {
    double x1 = 0.0;
    double x2 = 0.0;
    double jumpShift = 0.0;
};

struct RatesShocks {
    double dW1 = 0.0; // already regime-scaled
    double dW2 = 0.0;
    const JumpDraw* systemic = nullptr;
    const JumpDraw* idio = nullptr;
};

EconomyState stepRates(const EconomyState& state, double t, double dt, const RatesParams& params,
                       const RatesShocks& shocks);

double shortRate(const EconomyState& state, double t, const RatesParams& params);

/// One step of a proportional (FX or asset) process: log-Euler diffusion and
/// multiplicative jump factors, so the level stays strictly positive.
/// `dW` is the regime-scaled Wiener increment.
double stepProportional(double level, double t, double dt, const PiecewiseConstant& vol, int regime,
                        const RegimeConfig& config, double dW, double systemicBeta, const JumpDraw& systemic,
                        const JumpDraw& idio);

/// Minimum of a Brownian bridge between log-levels `logStart` and `logEnd`
/// with total variance `varTotal`, sampled by inversion. Used for
/// continuous barrier monitoring between remargining dates.
double sampleBridgeMin(Rng& rng, double logStart, double logEnd, double varTotal);

struct MarketState {
    double time = 0.0;
    std::vector<EconomyState> economies;
    std::vector<double> fxSpots;
    std::vector<double> assets;
    StressState stress;
};

} // namespace ccpsim
