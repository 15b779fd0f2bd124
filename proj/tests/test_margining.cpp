#include <algorithm>
#include <cmath>
#include <doctest.h>

#include "ccpsim/errors.hpp"
#include "ccpsim/margining.hpp"
#include "ccpsim/rng.hpp"

using namespace ccpsim;

namespace {

// Unit portfolio in the first category of each block plus adjacent-tenor
// steepeners: a basis of the four-category space.
BenchmarkSet sampleBenchmarks() {
    std::vector<std::vector<double>> portfolios = {
        {1, 0, 0, 0},
        {-1, 1, 0, 0},
        {0, -1, 1, 0},
        {0, 0, -1, 1},
    };
    return BenchmarkSet(4, std::move(portfolios));
}

ScenarioPool gaussianPool(Rng& rng, int scenarios, int benchmarks, double scale) {
    ScenarioPool pool;
    for (int s = 0; s < scenarios; ++s) {
        std::vector<double> row(static_cast<std::size_t>(benchmarks));
        for (auto& x : row) x = scale * rng.normal();
        pool.append(std::move(row));
    }
    return pool;
}

} // namespace

TEST_CASE("margin regression") {
    const BenchmarkSet benchmarks = sampleBenchmarks();

    SUBCASE("a benchmark portfolio reproduces as a unit coefficient vector") {
        const auto& third = benchmarks.portfolios()[2];
        const std::vector<double> a = fitRegression(third, benchmarks);
        for (int b = 0; b < benchmarks.size(); ++b)
            CHECK(a[static_cast<std::size_t>(b)] == doctest::Approx(b == 2 ? 1.0 : 0.0).scale(1.0).epsilon(1e-12));
    }

    SUBCASE("homogeneity") {
        std::vector<double> doubled = benchmarks.portfolios()[0];
        for (auto& x : doubled) x *= 2.0;
        const std::vector<double> a = fitRegression(doubled, benchmarks);
        CHECK(a[0] == doctest::Approx(2.0).epsilon(1e-12));
        for (int b = 1; b < benchmarks.size(); ++b)
            CHECK(std::fabs(a[static_cast<std::size_t>(b)]) < 1e-10);
    }

    SUBCASE("random in-span portfolios reconstruct to relative precision") {
        Rng rng(5);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<double> p(4);
            double norm = 0.0;
            for (auto& x : p) {
                x = 1e9 * (2 * rng.uniform() - 1);
                norm += x * x;
            }
            norm = std::sqrt(norm);
            const std::vector<double> a = fitRegression(p, benchmarks);
            const std::vector<double> back = benchmarks.combine(a);
            for (int c = 0; c < 4; ++c)
                CHECK(std::fabs(back[static_cast<std::size_t>(c)] - p[static_cast<std::size_t>(c)]) <= 1e-10 * norm);
        }
    }

    SUBCASE("rank-deficient benchmarks are rejected") {
        std::vector<std::vector<double>> bad = {{1, 0}, {2, 0}};
        CHECK_THROWS_AS(BenchmarkSet(2, std::move(bad)), ConfigError);
    }
}

TEST_CASE("im from the var state") {
    Rng rng(7);
    const int q = 3;
    const ScenarioPool pool = gaussianPool(rng, 100, 4, 1e8);

    SUBCASE("empty portfolio carries only the add-on") {
        const std::vector<double> zero(4, 0.0);
        const VarState state = initVarState(pool, zero, q);
        CHECK(imValue(state, 2.5e7) == 2.5e7);
    }

    SUBCASE("doubling the portfolio doubles the var component") {
        std::vector<double> a = {1.0, -0.5, 2.0, 0.25};
        std::vector<double> a2 = a;
        for (auto& x : a2) x *= 2.0;
        const double im1 = imValue(initVarState(pool, a, q), 0.0);
        const double im2 = imValue(initVarState(pool, a2, q), 0.0);
        CHECK(im2 == doctest::Approx(2.0 * im1).epsilon(1e-12));
    }

    SUBCASE("volatility ratio is multiplicative") {
        std::vector<double> a = {1.0, -0.5, 2.0, 0.25};
        VarState state = initVarState(pool, a, q);
        const double base = imValue(state, 0.0);
        state.volRatio = 2.0;
        CHECK(imValue(state, 0.0) == doctest::Approx(2.0 * base).epsilon(1e-15));
    }

    SUBCASE("positive homogeneity holds for a fixed var state") {
        Rng local(11);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> a(4);
            for (auto& x : a) x = 2 * local.uniform() - 1;
            const double c = 0.1 + 5.0 * local.uniform();
            std::vector<double> scaled = a;
            for (auto& x : scaled) x *= c;
            const double addOn = 1e6 * local.uniform();
            const double im = imValue(initVarState(pool, a, q), addOn);
            const double imScaled = imValue(initVarState(pool, scaled, q), addOn);
            CHECK(imScaled - addOn == doctest::Approx(c * (im - addOn)).epsilon(1e-10).scale(1e6));
        }
    }
}

TEST_CASE("var state updates") {
    const int q = 3;
    VarState state;
    state.quantileRank = q;
    state.topLosses = {100.0, 80.0, 60.0, 40.0};

    SUBCASE("losses below the retained top-q only move the volatility ratio") {
        VarState s = state;
        CHECK_FALSE(updateVarState(s, 59.0, 1.5));
        CHECK(s.topLosses == state.topLosses);
        CHECK(s.volRatio == 1.5);
    }

    SUBCASE("a new maximum strictly raises the next im") {
        VarState s = state;
        const double before = imValue(s, 0.0);
        CHECK(updateVarState(s, 150.0, 1.0));
        CHECK(s.topLosses == std::vector<double>{150.0, 100.0, 80.0, 60.0});
        CHECK(imValue(s, 0.0) > before);
    }

    SUBCASE("ties keep the earlier scenario") {
        VarState s = state;
        CHECK_FALSE(updateVarState(s, 60.0, 1.0));
        CHECK(s.topLosses == state.topLosses);
    }

    SUBCASE("updates never lower the subsequent im at fixed vol ratio") {
        Rng rng(13);
        VarState s = state;
        double previous = imValue(s, 0.0);
        for (int i = 0; i < 1000; ++i) {
            updateVarState(s, 120.0 * rng.uniform(), 1.0);
            const double now = imValue(s, 0.0);
            CHECK(now >= previous);
            previous = now;
        }
    }

    SUBCASE("insertion frequency matches the order-statistics rate") {
        // With every realized loss joining an exchangeable pool of size
        // N0 + j, the j-th draw enters the retained top q with probability
        // q / (N0 + j).
        const int n0 = 60, steps = 40, trials = 4000;
        double expected = 0.0;
        for (int j = 1; j <= steps; ++j) expected += static_cast<double>(q) / (n0 + j);
        Rng rng(17);
        double count = 0.0, countSq = 0.0;
        for (int trial = 0; trial < trials; ++trial) {
            ScenarioPool pool;
            for (int s = 0; s < n0; ++s) pool.append({rng.normal()});
            const std::vector<double> a = {1.0};
            VarState s = initVarState(pool, a, q);
            int inserted = 0;
            for (int j = 0; j < steps; ++j)
                if (updateVarState(s, rng.normal(), 1.0)) ++inserted;
            count += inserted;
            countSq += static_cast<double>(inserted) * inserted;
        }
        const double mean = count / trials;
        const double se = std::sqrt((countSq / trials - mean * mean) / trials);
        CHECK(std::fabs(mean - expected) < 3.0 * se);
    }
}

TEST_CASE("loss over im") {
    CHECK(lossOverIm(0.0, -100.0, 60.0) == 40.0);
    CHECK(lossOverIm(0.0, 50.0, 10.0) == 0.0);  // scenario gain
    CHECK(lossOverIm(0.0, -100.0, 120.0) == 0.0);
}

TEST_CASE("loss beyond collateral") {
    CHECK(lossBeyondCollateral(-100.0, 60.0, 20.0) == 20.0);
    CHECK(lossBeyondCollateral(35.0, 60.0, 20.0) == 0.0); // the defaulter gained
    CHECK(lossBeyondCollateral(-100.0, 60.0, 0.0) + lossBeyondCollateral(50.0, 10.0, 0.0) == 40.0);
}

TEST_CASE("cover-2 default fund") {
    SUBCASE("worst pair under a single scenario") {
        CHECK(coverTwoDefaultFund({{10.0, 7.0, 5.0}}, 0.0) == 17.0);
    }
    SUBCASE("skin in the game absorbs the worst pair") {
        CHECK(coverTwoDefaultFund({{10.0, 7.0, 5.0}}, 17.0) == 0.0);
        CHECK(coverTwoDefaultFund({{10.0, 7.0, 5.0}}, 25.0) == 0.0);
    }
    SUBCASE("fewer than two members is an error") {
        CHECK_THROWS_AS(coverTwoDefaultFund({{10.0}}, 0.0), SimulationError);
    }
    SUBCASE("adding a scenario never lowers the fund") {
        Rng rng(19);
        for (int trial = 0; trial < 200; ++trial) {
            const int members = 2 + static_cast<int>(rng.uniform() * 8);
            std::vector<std::vector<double>> loims;
            for (int s = 0; s < 3; ++s) {
                std::vector<double> row(static_cast<std::size_t>(members));
                for (auto& x : row) x = 100.0 * rng.uniform();
                loims.push_back(std::move(row));
            }
            const double k = 30.0 * rng.uniform();
            std::vector<std::vector<double>> fewer(loims.begin(), loims.begin() + 2);
            CHECK(coverTwoDefaultFund(loims, k) >= coverTwoDefaultFund(fewer, k));
        }
    }
    SUBCASE("brute force over pairs and scenarios agrees") {
        Rng rng(23);
        for (int trial = 0; trial < 300; ++trial) {
            const int members = 2 + static_cast<int>(rng.uniform() * 9);
            const int scenarios = 1 + static_cast<int>(rng.uniform() * 5);
            std::vector<std::vector<double>> loims;
            for (int s = 0; s < scenarios; ++s) {
                std::vector<double> row(static_cast<std::size_t>(members));
                for (auto& x : row) x = 50.0 * rng.uniform();
                loims.push_back(std::move(row));
            }
            const double k = 40.0 * rng.uniform();
            double brute = 0.0;
            for (const auto& row : loims)
                for (std::size_t i = 0; i < row.size(); ++i)
                    for (std::size_t j = i + 1; j < row.size(); ++j)
                        brute = std::max(brute, row[i] + row[j] - k);
            brute = std::max(brute, 0.0);
            CHECK(coverTwoDefaultFund(loims, k) == doctest::Approx(brute).epsilon(1e-15));
        }
    }
}

TEST_CASE("pro-rata allocation") {
    SUBCASE("equal keys split evenly") {
        const auto shares = allocateProRata(120.0, std::vector<double>{1, 1, 1, 1});
        for (double s : shares) CHECK(s == doctest::Approx(30.0).epsilon(1e-12));
    }
    SUBCASE("single survivor takes everything") {
        const auto shares = allocateProRata(77.25, std::vector<double>{3.0});
        CHECK(shares[0] == doctest::Approx(77.25).epsilon(1e-12));
    }
    SUBCASE("worked example") {
        const auto shares = allocateProRata(100.0, std::vector<double>{2, 1, 1});
        CHECK(shares[0] == doctest::Approx(50.0).epsilon(1e-12));
        CHECK(shares[1] == doctest::Approx(25.0).epsilon(1e-12));
        CHECK(shares[2] == doctest::Approx(25.0).epsilon(1e-12));
    }
    SUBCASE("shares sum to the total at currency precision") {
        Rng rng(29);
        for (int trial = 0; trial < 500; ++trial) {
            const int n = 1 + static_cast<int>(rng.uniform() * 12);
            std::vector<double> keys(static_cast<std::size_t>(n));
            for (auto& k : keys) k = rng.uniform() * 1e9;
            const double total = rng.uniform() * 1e8;
            const auto shares = allocateProRata(total, keys, 0.01);
            double sum = 0.0;
            for (double s : shares) sum += s;
            CHECK(std::fabs(sum - std::llround(total / 0.01) * 0.01) < 1e-6);
            for (std::size_t i = 0; i < shares.size(); ++i) CHECK(shares[i] >= 0.0);
        }
    }
    SUBCASE("zero keys are rejected") {
        CHECK_THROWS_AS(allocateProRata(10.0, std::vector<double>{0.0, 0.0}), ConfigError);
    }
}
