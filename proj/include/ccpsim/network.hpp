#pragma once

#include <string>
#include <vector>

#include "ccpsim/market.hpp"
#include "ccpsim/rng.hpp"

namespace ccpsim {

enum class MemberType { Diversified, MarketsDriven, TradingHouse };

MemberType parseMemberType(const std::string& label);
std::string memberTypeLabel(MemberType type);

struct MemberProfile {
    std::string id;
    int rank = 0; // 1 = largest cleared activity
    double balanceSheetAssets = 0.0;
    double equity = 0.0;
    MemberType type = MemberType::Diversified;
    double targetDefaultProb = 0.0; // one-year
    bool knownMember = false;       // position fixed from the reference group's books
};

/// Two-parameter exponential fit of per-member gross notionals to the
/// disclosed aggregates: sum_k beta*exp(-alpha*rank_k) matches the total and
/// the known-member subtotal simultaneously.
struct NotionalFit {
    double alpha = 0.0;
    double beta = 0.0;
    std::vector<double> fitted; // per member
};

NotionalFit fitExponential(double totalNotional, double knownNotional, const std::vector<int>& ranks,
                           const std::vector<char>& known);

/// Randomized net notionals for one category. Unknown members receive
/// uniform draws on the feasible band, with same-sign positions scaled down
/// so the whole category nets to zero exactly while every position stays
/// inside the delta limit. Known members keep their fixed positions.
std::vector<double> randomizeNetPositions(Rng& rng, const std::vector<double>& fittedGross,
                                          const std::vector<char>& known, const std::vector<double>& knownDeltas,
                                          double deltaLimit, const std::string& categoryLabel,
                                          int* resampleCount = nullptr);

/// Financial-significance weights, proportional to balance sheet assets and
/// normalized to sum to one.
std::vector<double> assignWeights(const std::vector<MemberProfile>& profiles);

/// Simulates the running minimum of the log asset level on the remargining
/// grid, with the intra-step diffusion minimum sampled from the Brownian
/// bridge so barrier monitoring is effectively continuous. Returns sorted
/// (ascending) log minima, one per path.
std::vector<double> simulateAssetLogMinima(const AssetParams& params, const JumpSpec& systemicJump,
                                           const RegimeConfig& regime, double horizon, int steps, int paths,
                                           std::uint64_t seed);

struct BarrierCalibration {
    double barrier = 0.0;      // asset-level barrier
    double achievedProb = 0.0; // empirical one-year hitting probability
};

/// Constant barrier matching the target one-year default probability on the
/// simulated minima (feedback and clearing flows disabled).
BarrierCalibration calibrateBarrier(const std::vector<double>& sortedLogMinima, double targetProb,
                                    const std::string& memberId);

double hittingProbability(const std::vector<double>& sortedLogMinima, double barrier);

} // namespace ccpsim
