#include "ccpsim/margining.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ccpsim/errors.hpp"

namespace ccpsim {

BenchmarkSet::BenchmarkSet(int categoryCount, std::vector<std::vector<double>> portfolios)
    : categoryCount_(categoryCount), portfolios_(std::move(portfolios)) {
    const int b = size();
    if (b == 0) throw ConfigError("[CFG-INVARIANT]", "benchmark set is empty");
    for (const auto& p : portfolios_)
        if (static_cast<int>(p.size()) != categoryCount_)
            throw ConfigError("[CFG-SCHEMA]", "benchmark portfolio has wrong category dimension");
    // Cholesky of the Gram matrix; breakdown means the benchmarks are
    // linearly dependent and the regression is ill-posed.
    gram_.assign(static_cast<std::size_t>(b) * b, 0.0);
    std::vector<double> g(static_cast<std::size_t>(b) * b, 0.0);
    for (int i = 0; i < b; ++i)
        for (int j = 0; j <= i; ++j) {
            double dot = 0.0;
            for (int c = 0; c < categoryCount_; ++c) dot += portfolios_[i][c] * portfolios_[j][c];
            g[static_cast<std::size_t>(i) * b + j] = dot;
            g[static_cast<std::size_t>(j) * b + i] = dot;
        }
    double scale = 0.0;
    for (int i = 0; i < b; ++i) scale = std::max(scale, g[static_cast<std::size_t>(i) * b + i]);
    for (int i = 0; i < b; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = g[static_cast<std::size_t>(i) * b + j];
            for (int k = 0; k < j; ++k)
                sum -= gram_[static_cast<std::size_t>(i) * b + k] * gram_[static_cast<std::size_t>(j) * b + k];
            if (i == j) {
                if (sum <= scale * 1e-12)
                    throw ConfigError("[CFG-INVARIANT]", "benchmark portfolios are rank deficient");
                gram_[static_cast<std::size_t>(i) * b + j] = std::sqrt(sum);
            } else {
                gram_[static_cast<std::size_t>(i) * b + j] = sum / gram_[static_cast<std::size_t>(j) * b + j];
            }
        }
    }
}

std::vector<double> BenchmarkSet::fit(std::span<const double> positions) const {
    CCPSIM_REQUIRE(static_cast<int>(positions.size()) == categoryCount_, "position vector has wrong dimension");
    const int b = size();
    // Normal equations: (D^T D) a = D^T p, solved with the cached factor.
    std::vector<double> rhs(static_cast<std::size_t>(b), 0.0);
    for (int i = 0; i < b; ++i) {
        double dot = 0.0;
        for (int c = 0; c < categoryCount_; ++c) dot += portfolios_[i][c] * positions[c];
        rhs[static_cast<std::size_t>(i)] = dot;
    }
    for (int i = 0; i < b; ++i) {
        double sum = rhs[static_cast<std::size_t>(i)];
        for (int k = 0; k < i; ++k) sum -= gram_[static_cast<std::size_t>(i) * b + k] * rhs[static_cast<std::size_t>(k)];
        rhs[static_cast<std::size_t>(i)] = sum / gram_[static_cast<std::size_t>(i) * b + i];
    }
    for (int i = b - 1; i >= 0; --i) {
        double sum = rhs[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < b; ++k) sum -= gram_[static_cast<std::size_t>(k) * b + i] * rhs[static_cast<std::size_t>(k)];
        rhs[static_cast<std::size_t>(i)] = sum / gram_[static_cast<std::size_t>(i) * b + i];
    }
    return rhs;
}

std::vector<double> BenchmarkSet::combine(std::span<const double> coefficients) const {
    CCPSIM_REQUIRE(static_cast<int>(coefficients.size()) == size(), "coefficient vector has wrong dimension");
    std::vector<double> positions(static_cast<std::size_t>(categoryCount_), 0.0);
    for (int i = 0; i < size(); ++i)
        for (int c = 0; c < categoryCount_; ++c) positions[static_cast<std::size_t>(c)] += coefficients[i] * portfolios_[i][c];
    return positions;
}

std::vector<double> fitRegression(std::span<const double> positions, const BenchmarkSet& benchmarks) {
    return benchmarks.fit(positions);
}

std::vector<double> portfolioScenarioLosses(const ScenarioPool& pool, std::span<const double> coefficients) {
    std::vector<double> losses(pool.size(), 0.0);
    for (std::size_t s = 0; s < pool.size(); ++s) {
        const auto& row = pool.benchLosses[s];
        CCPSIM_REQUIRE(row.size() == coefficients.size(), "scenario row/coefficient size mismatch");
        double loss = 0.0;
        for (std::size_t b = 0; b < row.size(); ++b) loss += coefficients[b] * row[b];
        losses[s] = loss;
    }
    return losses;
}

double VarState::varCore() const {
    if (topLosses.empty()) return 0.0;
    const std::size_t idx = std::min<std::size_t>(static_cast<std::size_t>(quantileRank), topLosses.size()) - 1;
    return std::max(topLosses[idx], 0.0);
}

VarState initVarState(const ScenarioPool& pool, std::span<const double> coefficients, int quantileRank) {
    CCPSIM_REQUIRE(quantileRank >= 1, "quantile rank must be at least 1");
    VarState state;
    state.quantileRank = quantileRank;
    std::vector<double> losses = portfolioScenarioLosses(pool, coefficients);
    const std::size_t keep = std::min<std::size_t>(losses.size(), static_cast<std::size_t>(quantileRank) + 1);
    std::partial_sort(losses.begin(), losses.begin() + static_cast<std::ptrdiff_t>(keep), losses.end(),
                      std::greater<double>());
    state.topLosses.assign(losses.begin(), losses.begin() + static_cast<std::ptrdiff_t>(keep));
    return state;
}

double imValue(const VarState& state, double addOn) {
    return state.volRatio * state.varCore() + addOn;
}

bool updateVarState(VarState& state, double realizedLoss, double volRatio) {
    state.volRatio = volRatio;
    if (state.topLosses.empty()) return false;
    const std::size_t q = std::min<std::size_t>(static_cast<std::size_t>(state.quantileRank), state.topLosses.size());
    const double threshold = state.topLosses[q - 1];
    // Ties keep the earlier scenario.
    if (realizedLoss <= threshold) return false;
    auto pos = std::upper_bound(state.topLosses.begin(), state.topLosses.end(), realizedLoss, std::greater<double>());
    state.topLosses.insert(pos, realizedLoss);
    if (state.topLosses.size() > static_cast<std::size_t>(state.quantileRank) + 1) state.topLosses.pop_back();
    return true;
}

double lossOverIm(double baseValue, double stressedValue, double im) {
    return std::max(baseValue - stressedValue - im, 0.0);
}

double lossBeyondCollateral(double valueChange, double im, double dfContribution) {
    return std::max(0.0, -(valueChange + im + dfContribution));
}

double coverTwoDefaultFund(const std::vector<std::vector<double>>& loimByScenario, double skinInTheGame) {
    CCPSIM_REQUIRE(!loimByScenario.empty(), "cover-2 needs at least one stress scenario");
    double df = 0.0;
    for (const auto& loims : loimByScenario) {
        if (loims.size() < 2) throw SimulationError("cover-2 needs at least two surviving members");
        double top1 = -1.0, top2 = -1.0;
        for (double v : loims) {
            if (v > top1) {
                top2 = top1;
                top1 = v;
            } else if (v > top2) {
                top2 = v;
            }
        }
        df = std::max(df, top1 + top2 - skinInTheGame);
    }
    return std::max(df, 0.0);
}

std::vector<double> allocateProRata(double total, std::span<const double> keys, double precision) {
    CCPSIM_REQUIRE(precision > 0.0, "allocation precision must be positive");
    CCPSIM_REQUIRE(total >= 0.0, "allocation total must be non-negative");
    double keySum = 0.0;
    for (double k : keys) {
        CCPSIM_REQUIRE(k >= 0.0, "allocation keys must be non-negative");
        keySum += k;
    }
    if (keys.empty()) return {};
    if (keySum <= 0.0) throw ConfigError("[CFG-INVARIANT]", "pro-rata allocation with zero total key");

    const long long totalUnits = std::llround(total / precision);
    std::vector<long long> units(keys.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders(keys.size());
    long long assigned = 0;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const double raw = static_cast<double>(totalUnits) * (keys[i] / keySum);
        units[i] = static_cast<long long>(std::floor(raw));
        assigned += units[i];
        remainders[i] = {raw - static_cast<double>(units[i]), i};
    }
    // Hand the leftover precision units to the largest remainders; ties go
    // to the lower index for determinism.
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    long long leftover = totalUnits - assigned;
    for (std::size_t i = 0; leftover > 0 && i < remainders.size(); ++i, --leftover) ++units[remainders[i].second];

    std::vector<double> shares(keys.size(), 0.0);
    for (std::size_t i = 0; i < keys.size(); ++i) shares[i] = static_cast<double>(units[i]) * precision;
    return shares;
}

std::vector<double> allocateByIm(double total, std::span<const double> ims, double precision) {
    if (!(total > 0.0)) return std::vector<double>(ims.size(), 0.0);
    double sum = 0.0;
    for (double v : ims) sum += v;
    if (sum > 0.0) return allocateProRata(total, ims, precision);
    return allocateProRata(total, std::vector<double>(ims.size(), 1.0), precision);
}

} // namespace ccpsim
