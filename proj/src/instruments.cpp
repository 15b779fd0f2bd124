#include "ccpsim/instruments.hpp"

#include <cmath>

#include "ccpsim/errors.hpp"

namespace ccpsim {

double factorLoading(double theta, double s) {
    if (std::fabs(theta) < 1e-12) return s;
    return -std::expm1(-theta * s) / theta;
}

double discountFactor(const RatesParams& params, const EconomyState& state, double t, double s) {
    const double phi = params.drift.integral(t, t + s);
    const double b1 = factorLoading(params.theta1, s);
    const double b2 = factorLoading(params.theta2, s);
    return std::exp(-phi - b1 * state.x1 - b2 * state.x2 - s * state.jumpShift);
}

SwapSpec makeSwapSpec(int categoryIndex, int economyIndex, double tenor, const RatesParams& params) {
    CCPSIM_REQUIRE(tenor > 0.0, "representative tenor must be positive");
    SwapSpec spec;
    spec.categoryIndex = categoryIndex;
    spec.economyIndex = economyIndex;
    spec.tenor = tenor;
    // Annual fixed schedule built backwards from maturity; a short first
    // period absorbs any non-integer tenor.
    std::vector<double> offsets;
    for (double s = tenor; s > 1e-9; s -= 1.0) offsets.push_back(s);
    spec.paymentOffsets.assign(offsets.rbegin(), offsets.rend());
    spec.accruals.resize(spec.paymentOffsets.size());
    double prev = 0.0;
    for (std::size_t i = 0; i < spec.paymentOffsets.size(); ++i) {
        spec.accruals[i] = spec.paymentOffsets[i] - prev;
        prev = spec.paymentOffsets[i];
    }
    spec.fixedRate = parRate(spec, params, EconomyState{}, 0.0);
    return spec;
}

namespace {

struct Legs {
    double annuity = 0.0;
    double finalDiscount = 0.0;
    double annuityDx1 = 0.0;
    double annuityDx2 = 0.0;
    double finalDx1 = 0.0;
    double finalDx2 = 0.0;
};

Legs evaluateLegs(const SwapSpec& spec, const RatesParams& params, const EconomyState& state, double t) {
    Legs legs;
    for (std::size_t i = 0; i < spec.paymentOffsets.size(); ++i) {
        const double s = spec.paymentOffsets[i];
        const double p = discountFactor(params, state, t, s);
        const double b1 = factorLoading(params.theta1, s);
        const double b2 = factorLoading(params.theta2, s);
        legs.annuity += spec.accruals[i] * p;
        legs.annuityDx1 -= spec.accruals[i] * b1 * p;
        legs.annuityDx2 -= spec.accruals[i] * b2 * p;
        if (i + 1 == spec.paymentOffsets.size()) {
            legs.finalDiscount = p;
            legs.finalDx1 = -b1 * p;
            legs.finalDx2 = -b2 * p;
        }
    }
    return legs;
}

} // namespace

double parRate(const SwapSpec& spec, const RatesParams& params, const EconomyState& state, double t) {
    const Legs legs = evaluateLegs(spec, params, state, t);
    return (1.0 - legs.finalDiscount) / legs.annuity;
}

double valueSwap(const SwapSpec& spec, const RatesParams& params, const EconomyState& state, double t) {
    if (t > spec.tenor)
        throw SimulationError("stale instrument: valuation time beyond representative quote horizon");
    const Legs legs = evaluateLegs(spec, params, state, t);
    // Receiver of fixed: fixedRate * annuity - (1 - P(tenor)).
    return spec.fixedRate * legs.annuity - 1.0 + legs.finalDiscount;
}

SwapDelta swapStateDelta(const SwapSpec& spec, const RatesParams& params, const EconomyState& state, double t) {
    const Legs legs = evaluateLegs(spec, params, state, t);
    SwapDelta delta;
    delta.dX1 = spec.fixedRate * legs.annuityDx1 + legs.finalDx1;
    delta.dX2 = spec.fixedRate * legs.annuityDx2 + legs.finalDx2;
    return delta;
}

double portfolioValue(std::span<const double> positions, std::span<const double> unitValues) {
    CCPSIM_REQUIRE(positions.size() == unitValues.size(), "position/value size mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < positions.size(); ++i) total += positions[i] * unitValues[i];
    return total;
}

} // namespace ccpsim
