#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ccpsim/instruments.hpp"
#include "ccpsim/margining.hpp"
#include "ccpsim/market.hpp"
#include "ccpsim/network.hpp"

namespace ccpsim {

enum class SimMode { Feedback, DefaultOnly, NoDefault };

std::string simModeLabel(SimMode mode);

/// Per-member cumulative clearing cash flows, decomposed. The net cash
/// position is the identity -imDelta + vmCumulative - allocatedLosses;
/// default-fund posting deltas are tracked separately as a liquidity item.
struct LedgerEntry {
    double imDelta = 0.0;          // sum over CCPs of IM(t) - IM(0)
    double vmCumulative = 0.0;     // variation margin received minus paid
    double allocatedLosses = 0.0;  // default losses allocated to this member
    double dfDelta = 0.0;          // sum over CCPs of DF(t) - DF(0)

    double cashTotal() const { return -imDelta + vmCumulative - allocatedLosses; }
};

struct EconomySetup {
    std::string currency;
    RatesParams params;
    int fxPairIndex = -1; // -1 when this is the reporting currency
};

struct FxSetup {
    std::string base;  // economy currency
    std::string quote; // reporting currency
    FxParams params;
};

struct CcpSetup {
    std::string id;
    CcpParams params;
    std::vector<Category> categories;
    std::vector<int> categoryEconomy;
    std::vector<SwapSpec> swaps;
    BenchmarkSet benchmarks;
    ScenarioPool histPool; // synthetic remargining-period history, shared by every path
    int quantileRank = 1;

    std::vector<std::vector<double>> positions0; // [member][category]
    std::vector<std::vector<double>> coeffs0;    // [member][benchmark]
    std::vector<VarState> varStates0;
    std::vector<double> im0;     // including the frozen add-on
    std::vector<double> addOn0;
    std::vector<double> dfAlloc0;
    double df0 = 0.0;
};

struct ExperimentSetup {
    RegimeConfig regime;
    JumpSpec systemicJump;
    std::vector<EconomySetup> economies;
    std::vector<FxSetup> fxPairs;
    std::vector<MemberProfile> members;
    std::vector<double> weights;
    std::vector<AssetParams> assetParams; // per member
    std::vector<double> barriers;         // per member, asset-level
    std::vector<int> xyzMembers;
    std::vector<CcpSetup> ccps;
    double dt = 1.0 / 52.0;
    int steps = 52;
    double xyzEquity = 2e11;
    bool volRatioEnabled = false;
    double allocationPrecision = 0.01;
    std::uint64_t masterSeed = 0;

    MarketState initialMarketState() const;
};

struct PathResult {
    std::uint64_t seed = 0;
    double lossRatio = 0.0;    // XYZ default losses / equity
    double imDrainRatio = 0.0; // XYZ terminal-minus-initial IM / equity
    int defaults = 0;
    double xi1 = 0.0; // stress indicator at the horizon
    double weight = 1.0;
    std::vector<LedgerEntry> ledger; // per member, terminal
    std::vector<double> defaultTimes; // per member, NaN while alive
    std::vector<double> xiPath;       // per step
};

/// Per-step diagnostics for conservation checks; populated only when a
/// collector is supplied.
struct StepTrace {
    struct CcpStep {
        double vmSum = 0.0;      // sum of settled-or-tested VM increments
        double vmScale = 0.0;    // sum of their magnitudes
        double lossTotal = 0.0;  // losses beyond IM and DF this step
        double allocated = 0.0;  // allocated to survivors
        double absorbed = 0.0;   // consumed by skin-in-the-game / wind-down
        double parityGap = 0.0;  // max per-category |sum of net positions|
        double parityScale = 0.0;
    };
    struct Step {
        std::vector<CcpStep> ccps;
        double cashIdentityGap = 0.0; // max |transactional C - ledger identity|
        double cashScale = 0.0;
    };
    std::vector<Step> steps;
};

struct MarginSnapshotRow {
    int step = 0;
    std::string ccp;
    std::string member;
    double im = 0.0;
    double df = 0.0;
    double vmIncrement = 0.0;
};

/// Unit value of every category of one CCP in the reporting currency.
std::vector<double> ccpUnitValues(const ExperimentSetup& setup, const CcpSetup& ccp,
                                  const std::vector<EconomyState>& economies, const std::vector<double>& fxSpots,
                                  double t);

std::vector<double> stressedUnitValues(const ExperimentSetup& setup, const CcpSetup& ccp,
                                       const std::vector<EconomyState>& economies,
                                       const std::vector<double>& fxSpots, double t,
                                       const StressScenario& scenario);

/// Per-benchmark losses implied by a move from `unitOld` to `unitNew`.
std::vector<double> benchmarkLossVector(const CcpSetup& ccp, const std::vector<double>& unitOld,
                                        const std::vector<double>& unitNew);

PathResult runPath(const ExperimentSetup& setup, std::uint64_t pathSeed, SimMode mode, StepTrace* trace = nullptr,
                   std::vector<MarginSnapshotRow>* snapshot = nullptr);

/// Runs `pathCount` paths with per-path seeds seedBase..seedBase+count-1.
/// Results are written by path index, so output is independent of the
/// thread count.
std::vector<PathResult> runPaths(const ExperimentSetup& setup, SimMode mode, int pathCount, int threads);

/// Minimal-entropy reweighting: weights proportional to exp(theta * xi1)
/// with theta solved so the weighted mean of xi1 equals the target; weights
/// are normalized to sum to the path count. Returns theta.
double reweightPaths(std::vector<PathResult>& results, double targetStressMean);

enum class PathField { LossRatio, ImDrainRatio };

double pathFieldValue(const PathResult& result, PathField field);

std::vector<double> aggregateCcdf(const std::vector<PathResult>& results, PathField field,
                                  const std::vector<double>& thresholds);

double weightedQuantile(const std::vector<PathResult>& results, PathField field, double level);

double weightedExceedance(const std::vector<PathResult>& results, PathField field, double threshold);

void parallelFor(int count, int threads, const std::function<void(int)>& body);

} // namespace ccpsim
