#pragma once

#include <vector>

#include "ccpsim/errors.hpp"

namespace ccpsim {

/// Piecewise-constant deterministic term structure. `times` are the right
/// edges of the buckets; beyond the last edge the final value extends flat.
/// A constant is the single-bucket case.
class PiecewiseConstant {
public:
    PiecewiseConstant() : values_{0.0} {}
    explicit PiecewiseConstant(double constant) : values_{constant} {}
    PiecewiseConstant(std::vector<double> times, std::vector<double> values)
        : times_(std::move(times)), values_(std::move(values)) {
        if (values_.empty() || times_.size() + 1 != values_.size())
            throw ConfigError("[CFG-SCHEMA]", "term structure needs n bucket edges and n+1 values");
        for (std::size_t i = 1; i < times_.size(); ++i)
            if (times_[i] <= times_[i - 1])
                throw ConfigError("[CFG-INVARIANT]", "term structure edges must be increasing");
    }

    double value(double t) const {
        std::size_t i = 0;
        while (i < times_.size() && t >= times_[i]) ++i;
        return values_[i];
    }

    double integral(double a, double b) const {
        if (b < a) return -integral(b, a);
        double total = 0.0;
        double left = a;
        std::size_t i = 0;
        while (i < times_.size() && times_[i] <= left) ++i;
        while (i < times_.size() && times_[i] < b) {
            total += values_[i] * (times_[i] - left);
            left = times_[i];
            ++i;
        }
        total += values_[i] * (b - left);
        return total;
    }

    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> times_;
    std::vector<double> values_;
};

} // namespace ccpsim
