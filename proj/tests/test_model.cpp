#include "support.hpp"

#include "subharnack/model.hpp"

#include <doctest.h>

#include <cmath>

using namespace subharnack;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// btilde^(eps)(x) = b^(eps)(x) - K x.
std::vector<double> yosida_tilde(const ModelSpec& approx, const std::vector<double>& x) {
    std::vector<double> out(x.size());
    approx.b(x, out);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] -= approx.K * x[i];
    return out;
}

std::vector<double> tilde(const ModelSpec& model, const std::vector<double>& x) {
    std::vector<double> out(x.size());
    model.b(x, out);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] -= model.K * x[i];
    return out;
}

ModelSpec cubic(std::size_t d, double K, double a) { return make_model({0.0, CubicDriftDesc{d, K, a}, ZeroDelayDesc{}}); }

}  // namespace

TEST_CASE("built-in constants") {
    CHECK(make_model({0.0, LinearDriftDesc{2, {-1, 0, 0, -1}}, ZeroDelayDesc{}}).K == doctest::Approx(-1.0));
    // Non-symmetric: (A + A^T)/2 = [[1, 1], [1, -1]] has largest eigenvalue sqrt(2).
    CHECK(make_model({0.0, LinearDriftDesc{2, {1, 2, 0, -1}}, ZeroDelayDesc{}}).K == doctest::Approx(std::sqrt(2.0)));
    CHECK(cubic(1, 0.0, 1.0).K == 0.0);
    CHECK(make_model({0.0, LinearDriftDesc{1, {0.0}}, ZeroDelayDesc{}}).K1 == 0.0);
    CHECK(make_model({0.25, LinearDriftDesc{1, {-0.5}}, IntegralDelayDesc{0.0, 0.3}}).K1 ==
          doctest::Approx(0.3 * std::sqrt(0.25)));
    CHECK_THROWS_AS(make_model({0.0, LinearDriftDesc{2, {1.0}}, ZeroDelayDesc{}}), std::invalid_argument);
    CHECK_THROWS_AS(cubic(1, 0.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_model({-1.0, LinearDriftDesc{1, {0.0}}, ZeroDelayDesc{}}), std::invalid_argument);
}

TEST_CASE("check_H on built-ins") {
    const ModelSpec lin = make_model({0.0, LinearDriftDesc{2, {-1, 0, 0, -1}}, ZeroDelayDesc{}});
    const HReport r1 = check_H(lin, 10000, 3.0, 1);
    CHECK(r1.max_violation_b <= 1e-9);
    CHECK(r1.max_violation_B == 0.0);
    const HReport r2 = check_H(cubic(2, 0.0, 1.0), 10000, 5.0, 2);
    CHECK(r2.max_violation_b <= 1e-9);
    Engine e = make_engine(4);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t d = 1 + rep % 3;
        std::vector<double> A(d * d);
        for (double& v : A) v = testgen::uniform(e, -2.0, 2.0);
        const double r0 = testgen::uniform(e, 0.1, 1.5);
        const ModelSpec m = make_model(
            {r0, LinearDriftDesc{d, A}, IntegralDelayDesc{testgen::uniform(e, -1, 1), testgen::uniform(e, -1, 1)}});
        CHECK(check_H(m, 500, 4.0, e()).passes());
        CHECK(check_H(cubic(d, testgen::uniform(e, -1, 1), testgen::uniform(e, 0.1, 2)), 500, 4.0, e()).passes());
    }
}

TEST_CASE("custom models are untrusted until checked") {
    const ModelSpec good = make_custom_model(
        1, 0.0, [](std::span<const double> x, std::span<double> out) { out[0] = -2.0 * x[0]; }, nullptr, -2.0, 0.0);
    CHECK_FALSE(good.constants_trusted);
    CHECK(with_checked_constants(good, check_H(good, 1000, 3.0, 1)).constants_trusted);
    // Claims K = -3 but b is only -2-dissipative.
    const ModelSpec bad = make_custom_model(
        1, 0.0, [](std::span<const double> x, std::span<double> out) { out[0] = -2.0 * x[0]; }, nullptr, -3.0, 0.0);
    CHECK_FALSE(with_checked_constants(bad, check_H(bad, 1000, 3.0, 1)).constants_trusted);
}

TEST_CASE("yosida closed form for linear btilde") {
    // b = diag(K, K - 1), so btilde(x) = (0, -x_2) and btilde^(eps)(x) = (0, -x_2 / (1 + eps)).
    const double K = 0.7;
    const ModelSpec m = make_model({0.0, LinearDriftDesc{2, {K, 0.0, 0.0, K - 1.0}}, ZeroDelayDesc{}});
    REQUIRE(m.K == doctest::Approx(K));
    for (double eps : {0.5, 0.1, 0.01}) {
        const ModelSpec y = yosida_approx(m, eps);
        const std::vector<double> x{1.5, -0.3};
        const auto bt = yosida_tilde(y, x);
        CHECK(std::abs(bt[0]) <= 1e-12);
        CHECK(bt[1] == doctest::Approx(-x[1] / (1.0 + eps)).epsilon(1e-9));
        CHECK(y.K == m.K);
        CHECK(y.K1 == m.K1);
    }
    // btilde = 0 gives back b.
    const ModelSpec flat = make_model({0.0, LinearDriftDesc{1, {0.4}}, ZeroDelayDesc{}});
    std::vector<double> out(1);
    yosida_approx(flat, 0.3).b(std::vector<double>{2.0}, out);
    CHECK(out[0] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK_THROWS_AS(yosida_approx(flat, 0.0), std::domain_error);
}

TEST_CASE("yosida properties on the cubic drift") {
    Engine e = make_engine(9);
    for (std::size_t d : {1u, 3u}) {
        const ModelSpec m = cubic(d, 0.5, 1.0);
        std::vector<std::vector<double>> probes;
        for (int i = 0; i < 100; ++i) probes.push_back(testgen::random_point(e, d, 3.0));
        double previous_gap = std::numeric_limits<double>::infinity();
        for (double eps : {0.5, 0.1, 0.02, 0.004}) {
            const ModelSpec y = yosida_approx(m, eps);
            double gap = 0.0;
            for (const auto& x : probes) {
                const auto by = yosida_tilde(y, x);
                const auto bt = tilde(m, x);
                CHECK(norm(by) <= norm(bt) + 1e-9);
                std::vector<double> diff(d);
                for (std::size_t i = 0; i < d; ++i) diff[i] = by[i] - bt[i];
                gap = std::max(gap, norm(diff));
            }
            CHECK(gap < previous_gap);
            previous_gap = gap;
            // Dissipativity and the global Lipschitz bound.
            for (int k = 0; k < 300; ++k) {
                const auto x = testgen::random_point(e, d, 4.0);
                const auto z = testgen::random_point(e, d, 4.0);
                const auto bx = yosida_tilde(y, x);
                const auto bz = yosida_tilde(y, z);
                std::vector<double> dx(d), db(d);
                for (std::size_t i = 0; i < d; ++i) dx[i] = x[i] - z[i], db[i] = bx[i] - bz[i];
                CHECK(dot(dx, db) <= 1e-9);
                CHECK(norm(db) / norm(dx) <= 2.0 / eps + 1e-6);
            }
        }
    }
}

TEST_CASE("resolvent solves its equation") {
    const ModelSpec m = cubic(2, 0.0, 2.0);
    std::vector<double> z(2);
    const std::vector<double> x{10.0, -7.0};
    yosida_resolvent(*m.drift, m.K, 0.25, x, z);
    std::vector<double> bz(2);
    m.b(z, bz);
    for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(z[i] - 0.25 * bz[i] - x[i]) <= 1e-10 * 12.2);
}
