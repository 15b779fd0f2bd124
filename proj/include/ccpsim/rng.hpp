#pragma once

#include <cmath>
#include <cstdint>

namespace ccpsim {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic substream RNG (xoshiro256++). Streams are derived by
/// hashing (master seed, path seed, stream id) so that every driver of a
/// simulation path owns an independent generator: consumption in one stream
/// never shifts another, and results are reproducible for any thread count.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : s_) w = splitmix64(x);
    }

    static Rng forStream(std::uint64_t masterSeed, std::uint64_t pathSeed, std::uint64_t streamId) {
        std::uint64_t x = masterSeed;
        std::uint64_t h = splitmix64(x);
        x ^= pathSeed + 0x9e3779b97f4a7c15ULL;
        h ^= splitmix64(x);
        x ^= streamId + 0xbf58476d1ce4e5b9ULL;
        h ^= splitmix64(x);
        return Rng(h);
    }

    std::uint64_t nextU64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on (0,1), never returning the endpoints.
    double uniform() {
        return (static_cast<double>(nextU64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via inverse-CDF (Wichura's AS241, double precision).
    /// One uniform per draw, so consumption is fixed and paths generated
    /// from the same uniforms stay comparable across parameter settings.
    double normal() { return inverseNormalCdf(uniform()); }

    /// Poisson count by single-uniform inversion; monotone in `mean`, which
    /// couples counts across regime configurations sharing a seed.
    int poisson(double mean) {
        if (mean <= 0.0) {
            uniform();
            return 0;
        }
        const double u = uniform();
        double p = std::exp(-mean);
        double cdf = p;
        int k = 0;
        while (u > cdf && k < 10000) {
            ++k;
            p *= mean / k;
            cdf += p;
        }
        return k;
    }

    static double inverseNormalCdf(double p);

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

inline double Rng::inverseNormalCdf(double p) {
    // AS241 PPND16.
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r + 6.7265770927008700853e4) * r +
                    4.5921953931549871457e4) * r + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r + 3.9307895800092710610e4) * r +
                    2.1213794301586595867e4) * r + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r + 2.41780725177450611770e-1) * r +
                     1.27045825245236838258e0) * r + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                  4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r + 1.51986665636164571966e-2) * r +
                     1.48103976427480074590e-1) * r + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                  2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 1.24266094738807843860e-3) * r +
                     2.65321895265761230930e-2) * r + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                  5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r + 1.84631831751005468180e-5) * r +
                     7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                  5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -value : value;
}

// Stream identifiers. Entity-scoped streams pack the entity index into the id.
namespace stream {
constexpr std::uint64_t kSystemicJump = 1;
constexpr std::uint64_t kPositions = 2;
constexpr std::uint64_t kHistScenarios = 3;
inline std::uint64_t ratesW1(int economy) { return 0x100 + static_cast<std::uint64_t>(economy); }
inline std::uint64_t ratesW2(int economy) { return 0x200 + static_cast<std::uint64_t>(economy); }
inline std::uint64_t ratesJump(int economy) { return 0x300 + static_cast<std::uint64_t>(economy); }
inline std::uint64_t fxW(int pair) { return 0x400 + static_cast<std::uint64_t>(pair); }
inline std::uint64_t fxJump(int pair) { return 0x500 + static_cast<std::uint64_t>(pair); }
inline std::uint64_t assetW(int member) { return 0x1000 + static_cast<std::uint64_t>(member); }
inline std::uint64_t assetJump(int member) { return 0x2000 + static_cast<std::uint64_t>(member); }
inline std::uint64_t assetBridge(int member) { return 0x3000 + static_cast<std::uint64_t>(member); }
inline std::uint64_t barrier(int member) { return 0x4000 + static_cast<std::uint64_t>(member); }
} // namespace stream

} // namespace ccpsim
