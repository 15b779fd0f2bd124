#include <cmath>
#include <doctest.h>

#include "ccpsim/errors.hpp"
#include "ccpsim/instruments.hpp"
#include "ccpsim/market.hpp"

using namespace ccpsim;

namespace {

RatesParams usdParams(double flatRate = 0.025) {
    RatesParams params;
    params.drift = PiecewiseConstant(flatRate);
    params.vol = PiecewiseConstant(0.0085);
    params.theta1 = 0.03;
    params.theta2 = 0.55;
    params.volRatio = 0.65;
    params.correlation = -0.3;
    return params;
}

} // namespace

TEST_CASE("par swap values zero at inception") {
    const RatesParams params = usdParams();
    for (double tenor : {1.0, 3.5, 7.5, 20.0}) {
        const SwapSpec spec = makeSwapSpec(0, 0, tenor, params);
        CHECK(std::fabs(valueSwap(spec, params, EconomyState{}, 0.0)) < 1e-14);
    }
}

TEST_CASE("unchanged flat curve keeps the par swap at zero for all times") {
    const RatesParams params = usdParams();
    const SwapSpec spec = makeSwapSpec(0, 0, 7.5, params);
    for (double t : {0.1, 0.37, 1.0, 2.5, 7.0}) {
        CHECK(std::fabs(valueSwap(spec, params, EconomyState{}, t)) < 1e-12);
    }
}

TEST_CASE("stale quote horizon") {
    const RatesParams params = usdParams();
    const SwapSpec spec = makeSwapSpec(0, 0, 3.5, params);
    CHECK_NOTHROW(valueSwap(spec, params, EconomyState{}, 3.5));
    CHECK_THROWS_AS(valueSwap(spec, params, EconomyState{}, 3.6), SimulationError);
}

TEST_CASE("receiver loses when the first factor rises; analytic deltas match finite differences") {
    const RatesParams params = usdParams();
    const SwapSpec spec = makeSwapSpec(0, 0, 7.5, params);
    EconomyState base{0.004, -0.002, 0.001};
    const double t = 0.25;
    const double v0 = valueSwap(spec, params, base, t);

    EconomyState bumped = base;
    bumped.x1 += 1e-4;
    CHECK(valueSwap(spec, params, bumped, t) < v0);

    const SwapDelta delta = swapStateDelta(spec, params, base, t);
    const double h = 1e-6;
    EconomyState up = base, down = base;
    up.x1 += h;
    down.x1 -= h;
    const double fd1 = (valueSwap(spec, params, up, t) - valueSwap(spec, params, down, t)) / (2 * h);
    CHECK(delta.dX1 == doctest::Approx(fd1).epsilon(1e-6));
    up = base;
    down = base;
    up.x2 += h;
    down.x2 -= h;
    const double fd2 = (valueSwap(spec, params, up, t) - valueSwap(spec, params, down, t)) / (2 * h);
    CHECK(delta.dX2 == doctest::Approx(fd2).epsilon(1e-6));
}

TEST_CASE("portfolio value is linear in positions") {
    const std::vector<double> unit = {0.013, -0.004, 0.021};

    SUBCASE("empty portfolio") {
        const std::vector<double> none = {0.0, 0.0, 0.0};
        CHECK(portfolioValue(none, unit) == 0.0);
    }
    SUBCASE("long and short net out") {
        const std::vector<double> net = {5e9, 0.0, 0.0};
        const std::vector<double> opposite = {-5e9, 0.0, 0.0};
        CHECK(portfolioValue(net, unit) + portfolioValue(opposite, unit) == 0.0);
    }
    SUBCASE("additivity across random positions") {
        Rng rng(17);
        for (int i = 0; i < 200; ++i) {
            std::vector<double> a(3), b(3), sum(3);
            for (int c = 0; c < 3; ++c) {
                a[static_cast<std::size_t>(c)] = 1e9 * (2 * rng.uniform() - 1);
                b[static_cast<std::size_t>(c)] = 1e9 * (2 * rng.uniform() - 1);
                sum[static_cast<std::size_t>(c)] = a[static_cast<std::size_t>(c)] + b[static_cast<std::size_t>(c)];
            }
            const double lhs = portfolioValue(sum, unit);
            const double rhs = portfolioValue(a, unit) + portfolioValue(b, unit);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        }
    }
}

TEST_CASE("delta-neutral steepener has spread risk only") {
    RegimeConfig regime;
    regime.thresholds = {1.0};
    regime.multipliers = {1.0};
    const RatesParams params = usdParams();
    const SwapSpec shortLeg = makeSwapSpec(0, 0, 3.5, params);
    const SwapSpec longLeg = makeSwapSpec(1, 0, 7.5, params);

    const SwapDelta dShort = swapStateDelta(shortLeg, params, EconomyState{}, 0.0);
    const SwapDelta dLong = swapStateDelta(longLeg, params, EconomyState{}, 0.0);
    // First-factor-neutral: w * dShort.dX1 + dLong.dX1 = 0.
    const double hedge = -dLong.dX1 / dShort.dX1;

    const double dt = 1.0 / 52;
    Rng rng(23);
    const int n = 20000;
    double sSpread = 0, ssSpread = 0, sA = 0, ssA = 0, sB = 0, ssB = 0;
    for (int i = 0; i < n; ++i) {
        RatesShocks shocks;
        shocks.dW1 = regimeWienerIncrement(rng, 1, dt, regime);
        shocks.dW2 = regimeWienerIncrement(rng, 1, dt, regime);
        const EconomyState next = stepRates(EconomyState{}, 0.0, dt, params, shocks);
        const double pnlShort = valueSwap(shortLeg, params, next, dt);
        const double pnlLong = valueSwap(longLeg, params, next, dt);
        const double spread = hedge * pnlShort + pnlLong;
        sSpread += spread;
        ssSpread += spread * spread;
        const double legA = hedge * pnlShort;
        const double legB = pnlLong;
        sA += legA;
        ssA += legA * legA;
        sB += legB;
        ssB += legB * legB;
    }
    const double varSpread = ssSpread / n - (sSpread / n) * (sSpread / n);
    const double varA = ssA / n - (sA / n) * (sA / n);
    const double varB = ssB / n - (sB / n) * (sB / n);
    CHECK(varSpread > 0.0);
    CHECK(varSpread < varA);
    CHECK(varSpread < varB);
    CHECK(varSpread < 0.25 * std::min(varA, varB)); // the level factor dominates each leg
}

TEST_CASE("discount factor responds to the curve displacement") {
    const RatesParams params = usdParams();
    EconomyState state;
    state.jumpShift = 0.01;
    const double p = discountFactor(params, state, 0.0, 5.0);
    const double pBase = discountFactor(params, EconomyState{}, 0.0, 5.0);
    CHECK(p == doctest::Approx(pBase * std::exp(-0.01 * 5.0)).epsilon(1e-12));
}
