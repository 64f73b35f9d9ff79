#include "support.hpp"

#include "subharnack/coupling.hpp"

#include <doctest.h>

#include <cmath>

using namespace subharnack;

namespace {

RegularizedPath drift_clock(double kappa, double horizon, double eps) {
    return regularize(sample_path({kappa, NoJumps{}}, horizon, 1.0 / 64, 1), eps);
}

ModelSpec delay_model() {
    return make_model({0.25, LinearDriftDesc{1, {-0.5}}, IntegralDelayDesc{0.0, 0.3}});
}

// Random dissipative-ish setup for the property tests.
struct Setup {
    ModelSpec model;
    Segment xi;
    Segment eta;
    RegularizedPath reg;
};

Setup random_setup(Engine& e, int rep) {
    const std::size_t d = 1 + rep % 3;
    const double r0 = rep % 4 == 0 ? 0.0 : 0.25;
    std::vector<double> A(d * d);
    for (double& v : A) v = testgen::uniform(e, -1.0, 0.5);
    ModelDescriptor desc{r0, LinearDriftDesc{d, A}, ZeroDelayDesc{}};
    if (r0 > 0.0) desc.delay = IntegralDelayDesc{testgen::uniform(e, -0.5, 0.5), testgen::uniform(e, -0.5, 0.5)};
    const std::size_t intervals = r0 > 0.0 ? 16 : 0;
    Engine pe = make_engine(e());
    auto specs = testgen::builtin_specs(pe);
    BernsteinSpec spec = specs[static_cast<std::size_t>(rep) % specs.size()];
    if (rep % 5 == 1) spec.kappa = 0.0;
    if (std::holds_alternative<NoJumps>(spec.levy)) spec.kappa = std::max(spec.kappa, 0.2);
    return {make_model(desc), testgen::random_segment(e, r0, d, intervals), testgen::random_segment(e, r0, d, intervals),
            regularize(sample_path(spec, 2.2, 1.0 / 128, e()), testgen::uniform(e, 0.02, 0.3))};
}

double gap0(const Segment& a, const Segment& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += (a.at_zero()[i] - b.at_zero()[i]) * (a.at_zero()[i] - b.at_zero()[i]);
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("lambda and gamma on a pure drift clock") {
    // ell(t) = t, so (ell^eps)' = 1 + eps.
    const double eps = 0.1, T = 1.0, r0 = 0.25, D = T - r0;
    const RegularizedPath reg = drift_clock(1.0, 2.0, eps);
    for (double K : {-0.8, 0.0, 0.6}) {
        const double total = (1.0 + eps) * exp_integral(2.0 * K, 0.0, D);
        for (double t : {0.0, 0.2, 0.5, 0.74}) {
            CHECK(lambda_weight(K, reg, T, r0, t) == doctest::Approx(std::exp(-K * t) / total).epsilon(1e-10));
            const double expected = K == 0.0 ? (D - t) / D
                                             : std::exp(K * t) * (std::exp(-2 * K * t) - std::exp(-2 * K * D)) /
                                                   (1.0 - std::exp(-2 * K * D));
            CHECK(gamma_factor(K, reg, T, r0, t) == doctest::Approx(expected).epsilon(1e-10));
        }
        CHECK(gamma_factor(K, reg, T, r0, 0.0) == 1.0);
        CHECK(gamma_factor(K, reg, T, r0, D) == 0.0);
        CHECK(gamma_factor(K, reg, T, r0, 0.9) == 0.0);
    }
    CHECK_THROWS_AS(lambda_weight(0.0, reg, 0.2, 0.25, 0.0), std::domain_error);
    CHECK_THROWS_AS(gamma_factor(0.0, reg, 1.0, 0.25, -0.1), std::domain_error);
    CHECK_THROWS_AS(gamma_factor(0.0, drift_clock(1.0, 1.0, eps), 1.0, 0.25, 0.1), std::domain_error);
}

TEST_CASE("bound examples") {
    const ModelSpec model = delay_model();
    const Segment xi = Segment::constant(0.25, 16, {1.0});
    const Segment eta = Segment::constant(0.25, 16, {0.0});
    // ||xi - eta||_2^2 = |1|^2 + r0 |1|^2.
    const double expected_energy = 0.25 * 1.25 + 2.0 * growth_factor(model.K, 0.75);
    CHECK(delay_energy_bound(model, xi, eta, 1.0) == doctest::Approx(expected_energy).epsilon(1e-12));
    // Different grids are compared on a common fine grid.
    CHECK(delay_energy_bound(model, Segment::constant(0.25, 5, {1.0}), eta, 1.0) ==
          doctest::Approx(expected_energy).epsilon(1e-12));

    const double eps = 0.05;
    const RegularizedPath drift = drift_clock(0.5, 2.0, eps);
    const double total = stieltjes_weighted_integral(drift, model.K, 0.0, 0.75);
    CHECK(qv_bound(model, xi, eta, 1.0, drift) ==
          doctest::Approx(2.0 * model.K1 * model.K1 / 0.5 * expected_energy + 2.0 / total).epsilon(1e-12));

    // kappa = 0 with K1 > 0: vacuous. Identical inputs: exactly 0, not 0 * inf.
    const RegularizedPath stable = regularize(sample_path({0.0, StableJumps{0.5, 1.0}}, 2.0, 1.0 / 64, 3), eps);
    CHECK(qv_bound(model, xi, eta, 1.0, stable) == std::numeric_limits<double>::infinity());
    CHECK(qv_bound(model, xi, xi, 1.0, stable) == 0.0);
    // K1 = 0: finite even with kappa = 0.
    const ModelSpec plain = make_model({0.25, LinearDriftDesc{1, {-0.5}}, ZeroDelayDesc{}});
    CHECK(std::isfinite(qv_bound(plain, xi, eta, 1.0, stable)));
}

TEST_CASE("identical initial segments couple trivially") {
    const ModelSpec model = delay_model();
    const Segment xi = Segment::linear(0.25, 64, {0.3}, {1.0});
    const RegularizedPath reg = regularize(sample_path({0.5, StableJumps{0.5, 1.0}}, 2.0, 1.0 / 256, 4), 0.05);
    const CouplingRecord rec = run_coupling(model, xi, xi, reg, 1.0, 9, SolverConfig{1.0 / 256});
    CHECK(rec.tau == 0.0);
    CHECK(rec.M_terminal == 0.0);
    CHECK(rec.QV_terminal == 0.0);
    CHECK(rec.R == 1.0);
    CHECK(rec.qv_bound == 0.0);
    CHECK(rec.terminal_equal);
    for (double v : rec.distance) CHECK(v == 0.0);
    CHECK(std::ranges::equal(rec.X->values(), rec.Y->values()));
}

TEST_CASE("zero drift contraction follows gamma exactly") {
    // b = B = 0: |X_t - Y_t| = |xi(0) - eta(0)| Gamma(t) up to rounding.
    const ModelSpec model = make_model({0.0, LinearDriftDesc{2, {0, 0, 0, 0}}, ZeroDelayDesc{}});
    for (std::uint64_t rep = 0; rep < 5; ++rep) {
        const RegularizedPath reg =
            regularize(sample_path({0.2 * static_cast<double>(rep), StableJumps{0.6, 1.0}}, 2.0, 1.0 / 128, rep), 0.05);
        const Segment xi = Segment::constant(0.0, 0, {1.0, -2.0});
        const Segment eta = Segment::constant(0.0, 0, {-0.5, 0.5});
        const double d0 = gap0(xi, eta);
        const CouplingRecord rec = run_coupling(model, xi, eta, reg, 1.0, 50 + rep, SolverConfig{1.0 / 128});
        for (std::size_t k = 0; k < rec.times.size(); ++k) CHECK(std::abs(rec.distance[k] - d0 * rec.gamma[k]) <= 1e-6);
        CHECK_FALSE(rec.forced);
        CHECK(rec.tau == doctest::Approx(1.0));
    }
}

TEST_CASE("coupling invariants on random setups") {
    Engine e = make_engine(77);
    for (int rep = 0; rep < 60; ++rep) {
        const Setup s = random_setup(e, rep);
        const double d0 = gap0(s.xi, s.eta);
        const double h = 1.0 / 256;
        const CouplingRecord rec = run_coupling(s.model, s.xi, s.eta, s.reg, 1.0, e(), SolverConfig{h});
        INFO("rep " << rep << " K " << s.model.K << " K1 " << s.model.K1 << " kappa " << rec.kappa);
        CHECK(rec.terminal_equal);
        CHECK(rec.tau <= 1.0 - s.model.r0 + 1e-12);
        CHECK(std::isfinite(rec.log_R));
        // Euler versus the continuous contraction differ by O(h).
        CHECK(rec.max_contraction_excess <= 0.02 * d0 + 1e-12);
        for (std::size_t k = 0; k < rec.times.size(); ++k)
            CHECK(rec.gamma[k] <= std::exp(s.model.K * rec.times[k]) * (1.0 + 1e-12));
        // Chain behind the pathwise bound on <M>.
        CHECK(rec.QV_terminal <= (2.0 * rec.K1 * rec.K1 * rec.j1 + 2.0 * rec.push_qv) * (1.0 + 1e-9) + 1e-15);
        if (rec.kappa > 0.0) CHECK(rec.j1 <= rec.j2 / rec.kappa * (1.0 + 1e-9) + 1e-15);
        if (!rec.forced) CHECK(rec.push_qv <= d0 * d0 / stieltjes_weighted_integral(s.reg, s.model.K, 0.0, 1.0 - s.model.r0) *
                                                  (1.0 + 1e-9));
        CHECK(rec.j2 <= rec.j2_bound * 1.05 + 1e-12);
        if (!rec.forced) CHECK(rec.margin() >= -1e-9 * std::max(1.0, rec.qv_bound));
        CHECK(rec.vacuous() == (rec.qv_bound == std::numeric_limits<double>::infinity()));
        CHECK(girsanov_log_density(rec) == rec.log_R);
    }
}

TEST_CASE("girsanov density has mean one and reweights to the eta law") {
    const ModelSpec model = delay_model();
    const Segment xi = Segment::constant(0.25, 64, {1.0});
    const Segment eta = Segment::constant(0.25, 64, {-1.0});
    const SolverConfig cfg{1.0 / 64};
    for (std::uint64_t clock_seed : {11u, 12u}) {
        const RegularizedPath reg =
            regularize(sample_path({0.5, StableJumps{0.5, 1.0}}, 2.0, 1.0 / 64, clock_seed), 0.05);
        const std::size_t n = 20000;
        std::vector<double> R(n), weighted(n);
        for (std::size_t i = 0; i < n; ++i) {
            const CouplingRecord rec = run_coupling(model, xi, eta, reg, 1.0, derive_seed(clock_seed, 9, i), cfg, true);
            R[i] = rec.R;
            weighted[i] = rec.R * std::tanh(rec.X->values().back());
        }
        const Estimate mr = estimate_mean(R);
        CHECK(std::abs(mr.mean - 1.0) <= 4.0 * mr.std_error);

        const TimeGrid grid = TimeGrid::make(1.0, 0.25, cfg.step);
        const auto offsets = clock_on_grid(reg, grid);
        const Payoff f = [](const SegmentView& v) { return std::tanh(v.at_zero()[0]); };
        const Estimate direct = inner_mc(model, eta, grid, offsets, std::span(&f, 1), n, clock_seed + 100).front();
        const Estimate reweighted = estimate_mean(weighted);
        CHECK(std::abs(direct.mean - reweighted.mean) <=
              4.0 * combined_stderr(direct.std_error, reweighted.std_error));
    }
}

TEST_CASE("coupling input validation") {
    const ModelSpec model = delay_model();
    const Segment xi = Segment::constant(0.25, 16, {1.0});
    const RegularizedPath reg = drift_clock(1.0, 2.0, 0.1);
    CHECK_THROWS_AS(run_coupling(model, xi, xi, reg, 0.25, 1), std::domain_error);
    CHECK_THROWS_AS(run_coupling(model, xi, xi, reg, 3.0, 1), std::domain_error);
    CHECK_THROWS_AS(run_coupling(model, xi, Segment::constant(0.5, 16, {1.0}), reg, 1.0, 1), std::domain_error);
}
