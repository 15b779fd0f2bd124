#include <cmath>
#include <doctest.h>

#include "ccpsim/errors.hpp"
#include "ccpsim/network.hpp"

using namespace ccpsim;

TEST_CASE("exponential notional fit") {
    SUBCASE("two-member system solves in closed form") {
        const NotionalFit fit = fitExponential(3.0, 2.0, {1, 2}, {1, 0});
        CHECK(fit.alpha == doctest::Approx(std::log(2.0)).epsilon(1e-8));
        CHECK(fit.beta == doctest::Approx(4.0).epsilon(1e-8));
        CHECK(fit.fitted[0] == doctest::Approx(2.0).epsilon(1e-8));
        CHECK(fit.fitted[1] == doctest::Approx(1.0).epsilon(1e-8));
    }

    SUBCASE("every member known is degenerate") {
        CHECK_THROWS_AS(fitExponential(3.0, 2.0, {1, 2}, {1, 1}), ConfigError);
    }

    SUBCASE("proportional subtotal recovers the flat limit") {
        // Known share equal to the member-count share forces alpha ~ 0 and
        // equal fitted notionals.
        const std::vector<int> ranks = {1, 2, 3, 4, 5};
        const std::vector<char> known = {0, 1, 0, 1, 0};
        const NotionalFit fit = fitExponential(10.0, 4.0, ranks, known);
        CHECK(std::fabs(fit.alpha) < 1e-7);
        for (double f : fit.fitted) CHECK(f == doctest::Approx(2.0).epsilon(1e-6));
    }

    SUBCASE("residuals within tolerance on random feasible systems") {
        Rng rng(3);
        for (int trial = 0; trial < 100; ++trial) {
            const int n = 3 + static_cast<int>(rng.uniform() * 27);
            std::vector<int> ranks(static_cast<std::size_t>(n));
            for (int k = 0; k < n; ++k) ranks[static_cast<std::size_t>(k)] = k + 1;
            std::vector<char> known(static_cast<std::size_t>(n), 0);
            int knownCount = 0;
            while (knownCount == 0 || knownCount == n) {
                knownCount = 0;
                for (int k = 0; k < n; ++k) {
                    known[static_cast<std::size_t>(k)] = rng.uniform() < 0.3 ? 1 : 0;
                    knownCount += known[static_cast<std::size_t>(k)];
                }
            }
            const double alpha = -0.5 + rng.uniform();
            const double beta = 1e9 * (0.5 + rng.uniform());
            double total = 0.0, sub = 0.0;
            for (int k = 0; k < n; ++k) {
                const double v = beta * std::exp(-alpha * ranks[static_cast<std::size_t>(k)]);
                total += v;
                if (known[static_cast<std::size_t>(k)]) sub += v;
            }
            const NotionalFit fit = fitExponential(total, sub, ranks, known);
            double fitTotal = 0.0, fitSub = 0.0;
            for (int k = 0; k < n; ++k) {
                fitTotal += fit.fitted[static_cast<std::size_t>(k)];
                if (known[static_cast<std::size_t>(k)]) fitSub += fit.fitted[static_cast<std::size_t>(k)];
            }
            CHECK(std::fabs(fitTotal - total) <= 1e-8 * total);
            CHECK(std::fabs(fitSub - sub) <= 1e-8 * sub);
        }
    }

    SUBCASE("infeasible aggregates are reported") {
        CHECK_THROWS_AS(fitExponential(3.0, 3.5, {1, 2}, {1, 0}), ConfigError);
        CHECK_THROWS_AS(fitExponential(3.0, -1.0, {1, 2}, {1, 0}), ConfigError);
    }
}

TEST_CASE("net position randomization") {
    Rng rng(5);
    const int n = 12;
    std::vector<double> gross(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) gross[static_cast<std::size_t>(k)] = 1e9 * std::exp(-0.2 * k);
    std::vector<char> known(static_cast<std::size_t>(n), 0);
    known[1] = 1;
    std::vector<double> deltas(static_cast<std::size_t>(n), 0.0);
    deltas[1] = 0.04 * gross[1];
    const double limit = 0.1;

    SUBCASE("parity, delta limit and fixed positions hold on every draw") {
        double grossTotal = 0.0;
        for (double g : gross) grossTotal += g;
        for (int trial = 0; trial < 2000; ++trial) {
            const auto net = randomizeNetPositions(rng, gross, known, deltas, limit, "test");
            double sum = 0.0;
            for (int k = 0; k < n; ++k) {
                sum += net[static_cast<std::size_t>(k)];
                CHECK(std::fabs(net[static_cast<std::size_t>(k)]) <=
                      limit * gross[static_cast<std::size_t>(k)] * (1 + 1e-12));
            }
            CHECK(std::fabs(sum) <= 1e-10 * grossTotal);
            CHECK(net[1] == deltas[1]);
        }
    }

    SUBCASE("zero known positions balance the unknown block alone") {
        std::vector<double> zeros(static_cast<std::size_t>(n), 0.0);
        const auto net = randomizeNetPositions(rng, gross, known, zeros, limit, "test");
        double unknownSum = 0.0;
        for (int k = 0; k < n; ++k)
            if (!known[static_cast<std::size_t>(k)]) unknownSum += net[static_cast<std::size_t>(k)];
        double grossTotal = 0.0;
        for (double g : gross) grossTotal += g;
        CHECK(std::fabs(unknownSum) <= 1e-12 * grossTotal);
    }

    SUBCASE("an oversized known imbalance is infeasible") {
        std::vector<double> big(static_cast<std::size_t>(n), 0.0);
        big[1] = 10.0 * gross[1];
        CHECK_THROWS_AS(randomizeNetPositions(rng, gross, known, big, limit, "cat"), ConfigError);
    }
}

TEST_CASE("balance-sheet weights") {
    auto profile = [](const std::string& id, double assets) {
        MemberProfile p;
        p.id = id;
        p.balanceSheetAssets = assets;
        return p;
    };

    SUBCASE("equal assets give equal weights") {
        const std::vector<MemberProfile> members = {profile("a", 5.0), profile("b", 5.0), profile("c", 5.0)};
        for (double w : assignWeights(members)) CHECK(w == doctest::Approx(1.0 / 3).epsilon(1e-15));
    }
    SUBCASE("worked example") {
        const std::vector<MemberProfile> members = {profile("a", 3.0), profile("b", 1.0), profile("c", 1.0),
                                                    profile("d", 1.0)};
        const auto w = assignWeights(members);
        CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(w[1] == doctest::Approx(1.0 / 6).epsilon(1e-15));
    }
    SUBCASE("invariant under rescaling") {
        const std::vector<MemberProfile> members = {profile("a", 2.0), profile("b", 7.0)};
        std::vector<MemberProfile> scaled = members;
        for (auto& m : scaled) m.balanceSheetAssets *= 1e6;
        const auto w1 = assignWeights(members);
        const auto w2 = assignWeights(scaled);
        CHECK(w1[0] == doctest::Approx(w2[0]).epsilon(1e-15));
    }
    SUBCASE("non-positive assets are rejected") {
        CHECK_THROWS_AS(assignWeights({profile("a", 0.0)}), ConfigError);
    }
}

TEST_CASE("barrier calibration") {
    RegimeConfig regime;
    regime.thresholds = {1.0};
    regime.multipliers = {1.0};

    AssetParams params;
    params.initialAssets = 100.0;
    params.vol = PiecewiseConstant(0.3);
    const JumpSpec noSystemic{};

    const auto minima = simulateAssetLogMinima(params, noSystemic, regime, 1.0, 52, 20000, 99);

    SUBCASE("unreachable and immediate barriers") {
        CHECK(hittingProbability(minima, 1e-12) == 0.0);
        CHECK(hittingProbability(minima, -5.0) == 0.0);
        CHECK(hittingProbability(minima, params.initialAssets + 1.0) == 1.0);
    }

    SUBCASE("calibrated barrier matches the diffusion first-passage law") {
        const double target = 0.02;
        const BarrierCalibration cal = calibrateBarrier(minima, target, "m");
        CHECK(std::fabs(cal.achievedProb - target) <= std::max(0.1 * target, 2.0 * std::sqrt(target / 20000)));
        // Reflection-principle probability for the log-level minimum.
        const double sigma = 0.3, horizon = 1.0;
        const double nu = -0.5 * sigma * sigma;
        const double b = std::log(cal.barrier / params.initialAssets);
        auto phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
        const double pClosed = phi((b - nu * horizon) / (sigma * std::sqrt(horizon))) +
                               std::exp(2.0 * nu * b / (sigma * sigma)) *
                                   phi((b + nu * horizon) / (sigma * std::sqrt(horizon)));
        const double se = std::sqrt(pClosed * (1.0 - pClosed) / 20000);
        CHECK(std::fabs(pClosed - target) < 3.0 * se);
    }

    SUBCASE("raising the barrier raises the hitting probability") {
        double previous = -1.0;
        for (double barrier : {50.0, 70.0, 80.0, 90.0, 99.0}) {
            const double p = hittingProbability(minima, barrier);
            CHECK(p >= previous);
            previous = p;
        }
    }

    SUBCASE("targets below the path resolution fail loudly") {
        CHECK_THROWS_AS(calibrateBarrier(minima, 1e-6, "m"), CalibrationError);
        CHECK_THROWS_AS(calibrateBarrier(minima, 1.5, "m"), CalibrationError);
    }
}
