#include "support.hpp"

#include "subharnack/segment.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace subharnack;

TEST_CASE("norm2 examples") {
    CHECK(norm2(Segment::constant(1.0, 8, {0.0})) == 0.0);
    CHECK(norm2(Segment::constant(1.0, 8, {3.0})) == doctest::Approx(3.0 * std::sqrt(2.0)).epsilon(1e-14));
    // xi(s) = s: int_{-1}^0 s^2 ds = 1/3, xi(0) = 0.
    const Segment ramp = Segment::linear(1.0, 64, {0.0}, {1.0});
    CHECK(std::abs(norm2(ramp) - std::sqrt(1.0 / 3.0)) < 1e-3);
    // Single point when r0 = 0.
    CHECK(norm2(Segment::constant(0.0, 0, {3.0, 4.0})) == 5.0);
}

TEST_CASE("norm2 converges at second order under refinement") {
    auto err = [](std::size_t n) {
        const Segment s = Segment::from_function(1.0, 1, n, [](double t, std::span<double> out) { out[0] = std::sin(3.0 * t); });
        const double exact = 0.5 - std::sin(6.0) / 12.0;  // int_{-1}^0 sin^2(3s) ds
        return std::abs(norm2(s) * norm2(s) - exact);
    };
    const double e1 = err(32), e2 = err(64), e3 = err(128);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
    CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("norm2 is a norm on random segments") {
    Engine e = make_engine(12);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t dim = 1 + rep % 3;
        const double r0 = rep % 5 == 0 ? 0.0 : testgen::uniform(e, 0.1, 2.0);
        const std::size_t n = 1 + rep % 20;
        const Segment a = testgen::random_segment(e, r0, dim, n);
        const Segment b = testgen::random_segment(e, r0, dim, n);
        std::vector<double> sum(a.values().size());
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = a.values()[i] + b.values()[i];
        const Segment s(a.r0(), dim, {a.grid().begin(), a.grid().end()}, sum);
        CHECK(norm2(s) <= norm2(a) + norm2(b) + 1e-12);
        const double c = testgen::uniform(e, -3.0, 3.0);
        CHECK(std::abs(norm2(a.scaled(c)) - std::abs(c) * norm2(a)) <= 1e-12 * std::max(1.0, norm2(a)));
        CHECK(std::abs(distance2(a.view(), b.view()) - norm2(a - b)) <= 1e-12);
    }
}

TEST_CASE("segment validation and evaluation") {
    CHECK_THROWS_AS(Segment(1.0, 1, {-1.0, 0.5}, {0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(Segment(1.0, 1, {-1.0, 0.0}, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(Segment(1.0, 1, {-1.0, 0.0}, {0.0, NAN}), std::invalid_argument);
    const Segment s(1.0, 1, {-1.0, -0.5, 0.0}, {1.0, 2.0, 3.0});
    std::vector<double> out(1);
    s.evaluate(-0.75, out);
    CHECK(out[0] == 1.0);
    s.evaluate(-0.5, out);
    CHECK(out[0] == 2.0);
    s.evaluate(0.0, out);
    CHECK(out[0] == 3.0);
    CHECK_THROWS_AS(s.evaluate(0.1, out), std::domain_error);
}

namespace {

// f(u) = u on [-1, 2] sampled with step 1/8.
Trajectory ramp_trajectory() {
    std::vector<double> grid, values;
    for (int k = -8; k <= 16; ++k) {
        grid.push_back(k / 8.0);
        values.push_back(k / 8.0);
    }
    return Trajectory(1.0, 1, 8, grid, values);
}

}  // namespace

TEST_CASE("segment_at") {
    const Trajectory traj = ramp_trajectory();
    const Segment at0 = segment_at(traj, 0.0);
    const Segment init = Segment::from_function(1.0, 1, 8, [](double s, std::span<double> out) { out[0] = s; });
    CHECK(at0 == init);
    const Segment at1 = segment_at(traj, 1.0);
    for (std::size_t j = 0; j < at1.grid().size(); ++j) CHECK(at1.point(j)[0] == doctest::Approx(1.0 + at1.grid()[j]));
    CHECK(at1.at_zero()[0] == 1.0);
    CHECK_THROWS_AS(segment_at(traj, 2.5), std::domain_error);
    // Off-grid t: value at 0 is the trajectory value there.
    const Segment off = segment_at(traj, 1.3);
    std::vector<double> v(1);
    traj.evaluate(1.3, v);
    CHECK(off.at_zero()[0] == v[0]);

    std::vector<double> flat_grid;
    for (int k = -4; k <= 8; ++k) flat_grid.push_back(k / 8.0);
    const Trajectory flat(0.5, 2, 4, flat_grid, std::vector<double>(26, 7.0));
    for (double t : {0.0, 0.5, 1.0, 0.7}) {
        const Segment s = segment_at(flat, t);
        for (double x : s.values()) CHECK(x == 7.0);
    }
}

TEST_CASE("csv round trip") {
    const Segment s = Segment::linear(0.5, 4, {1.0, -2.0}, {0.5, 0.25});
    const auto path = std::filesystem::temp_directory_path() / "subharnack_segment_roundtrip.csv";
    {
        std::ofstream out(path);
        write_segment_csv(s, out);
    }
    CHECK(read_segment_csv(path) == s);
    {
        std::ofstream out(path);
        out << "s,x_1\n-1,0\n0,abc\n";
    }
    CHECK_THROWS_WITH_AS(read_segment_csv(path), doctest::Contains(":3"), std::runtime_error);
    std::filesystem::remove(path);

    std::ostringstream traj_csv;
    ramp_trajectory().write_csv(traj_csv);
    CHECK(traj_csv.str().rfind("t,x_1\n-1,-1\n", 0) == 0);
}
