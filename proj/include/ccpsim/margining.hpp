#pragma once

#include <span>
#include <string>
#include <vector>

#include "ccpsim/market.hpp"

namespace ccpsim {

struct MarginAccount {
    double im = 0.0;             // includes the frozen add-on
    double dfContribution = 0.0;
    double addOn = 0.0;          // frozen at its time-zero value
};

/// Small representative portfolios used by the margin regression. Portfolios
/// are vectors in category space; the design matrix must have full column
/// rank so in-span portfolios reproduce exactly.
class BenchmarkSet {
public:
    BenchmarkSet() = default;
    BenchmarkSet(int categoryCount, std::vector<std::vector<double>> portfolios);

    int categoryCount() const { return categoryCount_; }
    int size() const { return static_cast<int>(portfolios_.size()); }
    const std::vector<std::vector<double>>& portfolios() const { return portfolios_; }

    /// Least-squares coefficients of `positions` against the benchmark
    /// portfolios.
    std::vector<double> fit(std::span<const double> positions) const;

    /// positions implied by coefficients: sum_b a_b * portfolio_b.
    std::vector<double> combine(std::span<const double> coefficients) const;

private:
    int categoryCount_ = 0;
    std::vector<std::vector<double>> portfolios_;
    std::vector<double> gram_;     // Cholesky factor of D^T D, lower triangular, row-major
};

std::vector<double> fitRegression(std::span<const double> positions, const BenchmarkSet& benchmarks);

/// Retained margin scenarios, stored as per-benchmark loss vectors (currency
/// per unit benchmark coefficient, frozen when the scenario is created). The
/// loss of a regressed portfolio under scenario s is dot(a, row s). The pool
/// only ever grows: realized remargining moves join the history and never
/// roll off.
struct ScenarioPool {
    std::vector<std::vector<double>> benchLosses;

    void append(std::vector<double> losses) { benchLosses.push_back(std::move(losses)); }
    std::size_t size() const { return benchLosses.size(); }
};

std::vector<double> portfolioScenarioLosses(const ScenarioPool& pool, std::span<const double> coefficients);

/// Per member-and-CCP margin VaR state: the top retained portfolio losses
/// (descending, at most q+1 entries) plus the current-to-historic volatility
/// multiplier.
struct VarState {
    std::vector<double> topLosses;
    double volRatio = 1.0;
    int quantileRank = 1; // q

    /// q-th largest retained loss, floored at zero.
    double varCore() const;
};

VarState initVarState(const ScenarioPool& pool, std::span<const double> coefficients, int quantileRank);

/// IM = volRatio * (q-th largest scenario loss) + addOn.
double imValue(const VarState& state, double addOn);

/// Records the realized loss of one remargining period. The loss is
/// inserted when it exceeds the smallest retained top-q loss (the threshold
/// a one-parameter loss family fitted to the previous IM level implies);
/// otherwise only the volatility ratio moves. Returns true when the VaR
/// element changed, i.e. the next IM strictly ratchets up.
bool updateVarState(VarState& state, double realizedLoss, double volRatio);

/// Loss beyond IM under a stress scenario, floored at zero.
double lossOverIm(double baseValue, double stressedValue, double im);

/// A defaulter's step loss not covered by its margin: the negative part of
/// (portfolio value change + IM + DF contribution). Summed per defaulter,
/// with no netting across defaulters.
double lossBeyondCollateral(double valueChange, double im, double dfContribution);

/// Cover-2 default fund: worst surviving pair of losses-over-IM across the
/// stress scenario set, less the clearing house's own capital tranche.
/// `loimByScenario` is indexed [scenario][member].
double coverTwoDefaultFund(const std::vector<std::vector<double>>& loimByScenario, double skinInTheGame);

/// Pro-rata allocation of `total` by `keys` with a largest-remainder
/// correction at the given currency precision, so the shares sum to the
/// quantized total exactly.
std::vector<double> allocateProRata(double total, std::span<const double> keys, double precision = 0.01);

/// Pro-rata by IM; splits equally when every surviving IM is zero, and
/// allocates nothing for a zero total.
std::vector<double> allocateByIm(double total, std::span<const double> ims, double precision = 0.01);

struct EconomyShift {
    double dX1 = 0.0;
    double dX2 = 0.0;
    double dShift = 0.0; // parallel displacement of the curve
};

struct StressScenario {
    std::string id;
    std::vector<EconomyShift> economyShifts; // per economy
    std::vector<double> fxRelative;          // per FX pair, relative spot shock
};

struct CcpParams {
    std::string id;
    double skinInTheGame = 0.0;
    std::vector<StressScenario> scenarios;
    double varQuantile = 0.99;
    int horizonDays = 5;
};

} // namespace ccpsim
