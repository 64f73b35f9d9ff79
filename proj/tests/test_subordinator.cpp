#include "support.hpp"

#include "subharnack/stats.hpp"
#include "subharnack/subordinator.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <doctest.h>

#include <cmath>

using namespace subharnack;

namespace {

// int_0^inf (1 - e^{-ux}) nu(dx) for the stable density c alpha / Gamma(1-alpha) x^{-1-alpha}.
double stable_phi_by_quadrature(double alpha, double c, double u) {
    const double scale = c * alpha / std::tgamma(1.0 - alpha);
    // On (0,1) substitute x = y^m, m = 1/(1-alpha), which removes the x^{-alpha} singularity.
    const double m = 1.0 / (1.0 - alpha);
    auto near_integrand = [&](double y) {
        const double x = std::pow(y, m);
        return scale * m * (x == 0.0 ? u : -std::expm1(-u * x) / x);
    };
    auto far_integrand = [&](double x) { return -std::expm1(-u * x) * scale * std::pow(x, -1.0 - alpha); };
    boost::math::quadrature::tanh_sinh<double> near;
    boost::math::quadrature::exp_sinh<double> far;
    return near.integrate(near_integrand, 0.0, 1.0) +
           far.integrate(far_integrand, 1.0, std::numeric_limits<double>::infinity());
}

double laplace_mc(const BernsteinSpec& spec, double u, std::size_t n, std::uint64_t seed, double& se) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const SubordinatorPath p = sample_path(spec, 1.0, 1.0, derive_seed(seed, stream::subordinator, i));
        v[i] = std::exp(-u * p.value(1.0));
    }
    const Estimate e = estimate_mean(v);
    se = e.std_error;
    return e.mean;
}

}  // namespace

TEST_CASE("phi_eval closed forms") {
    CHECK(phi_eval({0.0, StableJumps{0.5, 1.0}}, 4.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(phi_eval({2.0, NoJumps{}}, 3.0) == 6.0);
    CHECK(phi_eval({0.0, StableJumps{0.5, 1.0}}, 1e-12) < 1e-5);
    CHECK(phi_eval({0.0, StableJumps{0.7, 1.0}}, 1e-12) < 1e-6);
    CHECK(phi_eval({0.0, NoJumps{}}, 1e-12) == 0.0);
    CHECK_THROWS_AS(phi_eval({1.0, NoJumps{}}, 0.0), std::domain_error);
    CHECK_THROWS_AS(phi_eval({1.0, NoJumps{}}, -1.0), std::domain_error);
}

TEST_CASE("stable phi matches quadrature of the Levy density") {
    for (double alpha : {0.3, 0.5, 0.75}) {
        for (double u : {0.5, 1.0, 4.0}) {
            const double c = 1.3;
            CHECK(std::abs(phi_eval({0.0, StableJumps{alpha, c}}, u) - stable_phi_by_quadrature(alpha, c, u)) < 1e-6);
        }
    }
}

TEST_CASE("finite-activity phi matches quadrature") {
    boost::math::quadrature::exp_sinh<double> far;
    const double rate = 1.7, mean = 0.6, u = 2.3;
    const double q = far.integrate(
        [&](double x) { return -std::expm1(-u * x) * rate / mean * std::exp(-x / mean); }, 0.0,
        std::numeric_limits<double>::infinity());
    CHECK(phi_eval({0.0, CompoundExpJumps{rate, mean}}, u) == doctest::Approx(q).epsilon(1e-10));
    CHECK(phi_eval({0.5, PointMassJumps{2.0, 1.5}}, 1.0) == doctest::Approx(0.5 + 2.0 * (1.0 - std::exp(-1.5))));
}

TEST_CASE("spec validation") {
    CHECK_THROWS_AS((BernsteinSpec{-1.0, NoJumps{}}).validate(), std::domain_error);
    CHECK_THROWS_AS((BernsteinSpec{0.0, StableJumps{1.0, 1.0}}).validate(), std::domain_error);
    CHECK_THROWS_AS((BernsteinSpec{0.0, StableJumps{0.5, 0.0}}).validate(), std::domain_error);
    CHECK_THROWS_AS((BernsteinSpec{0.0, CompoundExpJumps{0.0, 1.0}}).validate(), std::domain_error);
    CHECK_THROWS_AS((BernsteinSpec{0.0, PointMassJumps{1.0, -1.0}}).validate(), std::domain_error);
    Engine e = make_engine(3);
    for (const auto& s : testgen::builtin_specs(e)) {
        CHECK_NOTHROW(s.validate());
        CHECK(std::isfinite(s.levy_small_jump_mass()));
    }
}

TEST_CASE("small-jump mass against quadrature") {
    const double alpha = 0.6, c = 1.0;
    const double scale = c * alpha / std::tgamma(1.0 - alpha);
    boost::math::quadrature::tanh_sinh<double> near;
    boost::math::quadrature::exp_sinh<double> far;
    const double m = 1.0 / (1.0 - alpha);
    const double q = near.integrate([&](double y) { return scale * m * std::pow(y, m * (1.0 - alpha) - 1.0); }, 0.0, 1.0) +
                     far.integrate([&](double x) { return scale * std::pow(x, -1.0 - alpha); }, 1.0,
                                   std::numeric_limits<double>::infinity());
    CHECK(BernsteinSpec{0.0, StableJumps{alpha, c}}.levy_small_jump_mass() == doctest::Approx(q).epsilon(1e-8));
}

TEST_CASE("pure drift path is deterministic") {
    const SubordinatorPath p = sample_path({1.0, NoJumps{}}, 2.0, 0.1, 42);
    CHECK(p.jumps().empty());
    for (double t : {0.0, 0.3, 1.0, 2.0}) CHECK(p.value(t) == doctest::Approx(t).epsilon(1e-15));
}

TEST_CASE("Laplace transform of S(1) for every built-in family") {
    Engine e = make_engine(11);
    const std::vector<BernsteinSpec> specs = {
        {0.0, StableJumps{0.5, 1.0}},
        {0.3, StableJumps{0.75, 0.8}},
        {0.0, CompoundExpJumps{2.0, 0.7}},
        {0.2, PointMassJumps{1.5, 0.5}},
    };
    std::uint64_t seed = 100;
    for (const auto& spec : specs) {
        for (double u : {0.5, 1.0, 2.0}) {
            double se = 0.0;
            const double m = laplace_mc(spec, u, 100000, seed++, se);
            CAPTURE(spec.describe());
            CAPTURE(u);
            CHECK(std::abs(m - std::exp(-phi_eval(spec, u))) <= 3.0 * se);
        }
    }
}

TEST_CASE("point-mass jump counts are Poisson") {
    const BernsteinSpec spec{0.0, PointMassJumps{2.0, 1.0}};
    const std::size_t n = 10000;
    std::vector<double> counts(9, 0.0);  // 0..7 and >= 8
    for (std::size_t i = 0; i < n; ++i) {
        const SubordinatorPath p = sample_path(spec, 1.0, 0.1, derive_seed(7, stream::subordinator, i));
        counts[std::min<std::size_t>(p.jumps().size(), 8)] += 1.0;
        CHECK(p.value(1.0) == static_cast<double>(p.jumps().size()));
    }
    double chi2 = 0.0;
    double tail = 1.0;
    for (std::size_t k = 0; k < 9; ++k) {
        double prob;
        if (k < 8) {
            prob = std::exp(-2.0) * std::pow(2.0, static_cast<double>(k)) / std::tgamma(static_cast<double>(k) + 1.0);
            tail -= prob;
        } else {
            prob = tail;
        }
        const double expected = prob * static_cast<double>(n);
        chi2 += (counts[k] - expected) * (counts[k] - expected) / expected;
    }
    const boost::math::chi_squared dist(8.0);
    CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.01);
}

TEST_CASE("path invariants on random paths") {
    Engine e = make_engine(5);
    for (int rep = 0; rep < 20; ++rep) {
        for (const auto& spec : testgen::builtin_specs(e)) {
            const SubordinatorPath p = sample_path(spec, 3.0, 0.05, e());
            const auto g = p.grid();
            const auto v = p.values();
            CHECK(v[0] == 0.0);
            for (std::size_t i = 1; i < g.size(); ++i) CHECK(v[i] >= v[i - 1]);
            for (const Jump& j : p.jumps()) {
                CHECK(j.size > 0.0);
                CHECK(std::binary_search(g.begin(), g.end(), j.time));
            }
            // Bookkeeping: level increments equal recorded jumps bit-exactly.
            if (!p.jumps().empty()) {
                const auto lv = p.levels();
                std::size_t k = 0;
                for (std::size_t i = 1; i < g.size(); ++i) {
                    double level = lv[i - 1];
                    while (k < p.jumps().size() && p.jumps()[k].time <= g[i]) level += p.jumps()[k++].size;
                    CHECK(level == lv[i]);
                }
            }
        }
    }
}

TEST_CASE("seeded determinism") {
    for (const BernsteinSpec& spec : {BernsteinSpec{0.2, StableJumps{0.5, 1.0}}, BernsteinSpec{0.0, CompoundExpJumps{3.0, 1.0}}}) {
        const SubordinatorPath a = sample_path(spec, 2.0, 0.01, 99);
        const SubordinatorPath b = sample_path(spec, 2.0, 0.01, 99);
        CHECK(std::ranges::equal(a.grid(), b.grid()));
        CHECK(std::ranges::equal(a.values(), b.values()));
    }
}

TEST_CASE("regularization closed forms") {
    const SubordinatorPath line = SubordinatorPath::from_jumps(1.0, 3.0, 0.25, {});
    const RegularizedPath r = regularize(line, 0.1);
    for (double t : {0.0, 0.5, 1.3, 2.8}) {
        CHECK(r.value(t) == doctest::Approx(t + 0.05 + 0.1 * t).epsilon(1e-14));
        CHECK(r.derivative(t) == doctest::Approx(1.1).epsilon(1e-14));
    }
    const SubordinatorPath step = SubordinatorPath::from_jumps(0.0, 3.0, 0.5, {{1.0, 1.0}});
    CHECK(regularize(step, 0.2).value(0.5) == doctest::Approx(0.1).epsilon(1e-14));
    // Window (0.9, 1.1) straddles the jump: average is 0.5.
    CHECK(regularize(step, 0.2).value(0.9) == doctest::Approx(0.5 + 0.18).epsilon(1e-14));
    CHECK_THROWS_AS(regularize(line, 0.0), std::domain_error);
    CHECK_THROWS_AS(regularize(line, 1.0), std::domain_error);
}

TEST_CASE("regularization is monotone in epsilon and dominates the path") {
    Engine e = make_engine(21);
    for (int rep = 0; rep < 10; ++rep) {
        for (const auto& spec : testgen::builtin_specs(e)) {
            const SubordinatorPath p = sample_path(spec, 2.0, 1.0 / 64, e());
            const RegularizedPath coarse = regularize(p, 0.2);
            const RegularizedPath fine = regularize(p, 0.1);
            for (double t : fine.grid()) {
                if (t > coarse.horizon()) break;
                CHECK(coarse.value(t) >= fine.value(t) - 1e-12);
                CHECK(fine.value(t) >= p.value(t) - 1e-12);
            }
            for (double d : fine.derivatives()) CHECK(d > spec.kappa);
            // Value differences equal the integral of the stored derivative.
            const auto g = fine.grid();
            for (std::size_t i = 1; i < g.size(); i += 7) {
                const double diff = fine.value(g[i]) - fine.value(g[0]);
                CHECK(diff == doctest::Approx(fine.weighted_increment(0.0, g[0], g[i])).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("inverse gamma") {
    const RegularizedPath r = regularize(SubordinatorPath::from_jumps(1.0, 3.0, 0.25, {}), 0.1);
    CHECK(std::abs(inverse_gamma(r, r.value(1.0)) - 1.0) < 1e-10);
    CHECK_THROWS_AS(inverse_gamma(r, r.value(0.0) - 1e-3), std::domain_error);
    CHECK_THROWS_AS(inverse_gamma(r, r.value(r.horizon()) + 1.0), std::domain_error);

    Engine e = make_engine(8);
    const RegularizedPath s = regularize(sample_path({0.3, StableJumps{0.5, 1.0}}, 3.0, 1.0 / 64, 17), 0.05);
    for (int i = 0; i < 100; ++i) {
        const double t = testgen::uniform(e, 0.0, s.horizon());
        CHECK(std::abs(inverse_gamma(s, s.value(t)) - t) < 1e-9);
    }
    // Near the left end: small and monotone, checked against bisection.
    double prev = -1.0;
    for (int i = 1; i <= 20; ++i) {
        const double v = s.value(0.0) + 1e-4 * i;
        const double t = inverse_gamma(s, v);
        double lo = 0.0, hi = s.horizon();
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (s.value(mid) < v ? lo : hi) = mid;
        }
        CHECK(std::abs(t - 0.5 * (lo + hi)) < 1e-10);
        CHECK(t > prev);
        prev = t;
    }
}

TEST_CASE("stieltjes integrals") {
    const SubordinatorPath drift3 = SubordinatorPath::from_jumps(3.0, 2.0, 0.1, {});
    CHECK(stieltjes_weighted_integral(drift3, 0.0, 0.0, 2.0) == doctest::Approx(6.0).epsilon(1e-14));
    const SubordinatorPath drift1 = SubordinatorPath::from_jumps(1.0, 1.0, 0.1, {});
    CHECK(stieltjes_weighted_integral(drift1, 0.5, 0.0, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
    const SubordinatorPath jump = SubordinatorPath::from_jumps(0.0, 1.0, 0.1, {{0.5, 2.0}});
    CHECK(stieltjes_weighted_integral(jump, 1.0, 0.0, 1.0) == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-14));
    CHECK_THROWS_AS(stieltjes_weighted_integral(jump, 1.0, 0.5, 0.5), std::domain_error);
    CHECK_THROWS_AS(stieltjes_weighted_integral(jump, 1.0, 0.7, 0.2), std::domain_error);

    Engine e = make_engine(31);
    for (int rep = 0; rep < 10; ++rep) {
        for (const auto& spec : testgen::builtin_specs(e)) {
            const SubordinatorPath p = sample_path(spec, 2.5, 1.0 / 32, e());
            const double K = testgen::uniform(e, -1.0, 1.0);
            const double a = testgen::uniform(e, 0.0, 0.6), b = testgen::uniform(e, 0.7, 1.2),
                         c = testgen::uniform(e, 1.3, 2.0);
            const double whole = stieltjes_weighted_integral(p, K, a, c);
            const double split = stieltjes_weighted_integral(p, K, a, b) + stieltjes_weighted_integral(p, K, b, c);
            CHECK(std::abs(whole - split) <= 1e-12 * std::max(1.0, std::abs(whole)));
            const RegularizedPath r = regularize(p, 0.1);
            const double rw = stieltjes_weighted_integral(r, K, a, c);
            const double rs = stieltjes_weighted_integral(r, K, a, b) + stieltjes_weighted_integral(r, K, b, c);
            CHECK(std::abs(rw - rs) <= 1e-12 * std::max(1.0, std::abs(rw)));
        }
    }
}

TEST_CASE("exp_integral and growth_factor limits") {
    CHECK(exp_integral(0.0, 0.5, 2.0) == 1.5);
    CHECK(exp_integral(1e-13, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(growth_factor(0.0, 2.0) == 2.0);
    CHECK(std::abs(growth_factor(1e-9, 1.0) - 1.0) < 1e-8);
    CHECK(growth_factor(0.5, 1.0) == doctest::Approx(std::expm1(1.0)));
}
