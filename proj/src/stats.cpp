#include "subharnack/stats.hpp"

#include <limits>

namespace subharnack {

Estimate estimate_mean(std::span<const double> values) {
    Estimate est;
    est.n = values.size();
    CompensatedSum sum;
    for (double v : values) {
        if (!std::isfinite(v)) {
            ++est.nan_count;
            continue;
        }
        sum.add(v);
    }
    const std::size_t finite = est.n - est.nan_count;
    if (est.nan_count == 0 && finite > 0) {
        bool constant = true;
        for (double v : values) constant = constant && v == values.front();
        if (constant) {
            est.mean = values.front();
            return est;
        }
    }
    if (est.nan_count > 0 || finite == 0) {
        est.mean = std::numeric_limits<double>::quiet_NaN();
        est.std_error = std::numeric_limits<double>::quiet_NaN();
        return est;
    }
    est.mean = sum.value() / static_cast<double>(finite);
    est.std_error = finite > 1 ? std::sqrt(sample_variance(values) / static_cast<double>(finite)) : 0.0;
    return est;
}

double sample_variance(std::span<const double> values) {
    CompensatedSum sum;
    std::size_t n = 0;
    for (double v : values) {
        if (std::isfinite(v)) {
            sum.add(v);
            ++n;
        }
    }
    if (n < 2) return 0.0;
    const double mean = sum.value() / static_cast<double>(n);
    CompensatedSum sq;
    for (double v : values) {
        if (std::isfinite(v)) sq.add((v - mean) * (v - mean));
    }
    return sq.value() / static_cast<double>(n - 1);
}

}  // namespace subharnack
