#pragma once

#include <span>
#include <string>
#include <vector>

#include "ccpsim/market.hpp"

namespace ccpsim {

/// A disclosure category: trade type / currency / tenor bucket as published
/// by a clearing house. Positions and aggregates are keyed by category.
struct Category {
    std::string id;
    std::string currency;
    std::string tenorBucket;
    double representativeTenor = 0.0; // years, mid-bucket
};

/// Representative par swap for a category, struck at the initial par rate so
/// the value at time zero is exactly zero. The swap is quoted at constant
/// time-to-maturity; valuation is a pure function of the current rates state.
struct SwapSpec {
    int categoryIndex = -1;
    int economyIndex = -1;
    double tenor = 0.0;                // years; also the quote-staleness horizon
    double fixedRate = 0.0;
    std::vector<double> paymentOffsets; // years from valuation date, ascending
    std::vector<double> accruals;
};

/// Discount factor over [t, t+s] implied by the two-factor state: the
/// instantaneous forward at t+u is drift(t+u) + e^{-theta1 u} x1 +
/// e^{-theta2 u} x2 + jumpShift.
double discountFactor(const RatesParams& params, const EconomyState& state, double t, double s);

double factorLoading(double theta, double s);

SwapSpec makeSwapSpec(int categoryIndex, int economyIndex, double tenor, const RatesParams& params);

double parRate(const SwapSpec& spec, const RatesParams& params, const EconomyState& state, double t);

/// Value per unit notional of the receiver side. Throws past the quote
/// horizon (stale instrument).
double valueSwap(const SwapSpec& spec, const RatesParams& params, const EconomyState& state, double t);

struct SwapDelta {
    double dX1 = 0.0;
    double dX2 = 0.0;
};

/// Analytic sensitivities of valueSwap to the two factor states.
SwapDelta swapStateDelta(const SwapSpec& spec, const RatesParams& params, const EconomyState& state, double t);

/// Sum of position * unit value; exactly linear in the positions.
double portfolioValue(std::span<const double> positions, std::span<const double> unitValues);

} // namespace ccpsim
