#pragma once

// Hand-rolled generators for the property tests.

#include "subharnack/random.hpp"
#include "subharnack/segment.hpp"
#include "subharnack/subordinator.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace testgen {

using subharnack::Engine;

inline double uniform(Engine& e, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(e); }

inline std::vector<double> random_point(Engine& e, std::size_t dim, double radius) {
    std::vector<double> x(dim);
    for (double& v : x) v = uniform(e, -radius, radius);
    return x;
}

inline subharnack::Segment random_segment(Engine& e, double r0, std::size_t dim, std::size_t intervals,
                                          double radius = 2.0) {
    return subharnack::Segment::from_function(r0, dim, intervals, [&](double, std::span<double> out) {
        for (double& v : out) v = uniform(e, -radius, radius);
    });
}

// Every built-in family with moderately random parameters.
inline std::vector<subharnack::BernsteinSpec> builtin_specs(Engine& e) {
    using namespace subharnack;
    return {
        {uniform(e, 0.1, 2.0), NoJumps{}},
        {uniform(e, 0.0, 1.0), StableJumps{uniform(e, 0.2, 0.9), uniform(e, 0.5, 2.0)}},
        {uniform(e, 0.0, 1.0), CompoundExpJumps{uniform(e, 0.5, 3.0), uniform(e, 0.2, 2.0)}},
        {uniform(e, 0.0, 1.0), PointMassJumps{uniform(e, 0.5, 3.0), uniform(e, 0.2, 2.0)}},
    };
}

}  // namespace testgen
