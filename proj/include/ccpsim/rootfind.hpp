#pragma once

#include <cmath>
#include <functional>
#include <optional>

namespace ccpsim {

/// Bracketed scalar root finder: bisection with a secant step when it stays
/// inside the bracket. Returns the root; the bracket [lo, hi] must satisfy
/// f(lo)*f(hi) <= 0.
inline std::optional<double> solveBracketed(const std::function<double(double)>& f, double lo, double hi,
                                            double xTol = 1e-14, int maxIter = 200) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0) return std::nullopt;
    for (int i = 0; i < maxIter; ++i) {
        double mid = 0.5 * (lo + hi);
        if (fhi != flo) {
            const double sec = hi - fhi * (hi - lo) / (fhi - flo);
            if (sec > lo && sec < hi) mid = sec;
        }
        const double fm = f(mid);
        if (fm == 0.0 || hi - lo < xTol * (1.0 + std::fabs(mid))) return mid;
        if (flo * fm < 0.0) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

/// Scans [lo, hi] on a uniform grid for the first sign change of f and
/// refines it with solveBracketed. Supports functions that are not monotone.
inline std::optional<double> scanAndSolve(const std::function<double(double)>& f, double lo, double hi,
                                          int gridPoints = 400, double xTol = 1e-14) {
    double xPrev = lo;
    double fPrev = f(lo);
    if (fPrev == 0.0) return lo;
    for (int i = 1; i <= gridPoints; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / gridPoints;
        const double fx = f(x);
        if (fx == 0.0) return x;
        if (fPrev * fx < 0.0) return solveBracketed(f, xPrev, x, xTol);
        xPrev = x;
        fPrev = fx;
    }
    return std::nullopt;
}

} // namespace ccpsim
