#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace subharnack {

/// Neumaier-compensated accumulator.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Monte Carlo mean with its standard error.
struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
    std::size_t nan_count = 0;
};

/// Sample mean and standard error of the mean. Values are consumed in index
/// order, so the result is independent of how they were produced. Any
/// non-finite value makes the mean NaN; the count is reported.
Estimate estimate_mean(std::span<const double> values);

/// Sample variance (n-1 denominator) of finite values; 0 for fewer than two.
double sample_variance(std::span<const double> values);

/// Standard error of a difference of independent estimates.
inline double combined_stderr(double a, double b) noexcept { return std::hypot(a, b); }

}  // namespace subharnack
