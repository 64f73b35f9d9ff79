#include "subharnack/harness.hpp"

#include "subharnack/coupling.hpp"
#include "subharnack/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace subharnack {

namespace {

void require_trusted(const ModelSpec& model) {
    if (!model.constants_trusted)
        throw UntrustedModelError("harness: model constants unchecked; run check_H or override before asserting bounds");
}

double point_gap2(const Segment& xi, const Segment& eta) {
    double s = 0.0;
    const auto a = xi.at_zero();
    const auto b = eta.at_zero();
    if (a.size() != b.size()) throw std::domain_error("harness: segment dimensions differ");
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

// (K1^2 / kappa) * energy with 0 * inf = 0.
double delay_coefficient(const ModelSpec& model, double kappa, double energy) {
    if (model.K1 == 0.0 || energy == 0.0) return 0.0;
    if (kappa == 0.0) return kInfinity;
    return model.K1 * model.K1 / kappa * energy;
}

bool integral_can_vanish(const BernsteinSpec& spec) {
    return spec.kappa == 0.0 && (spec.deterministic() || spec.finite_activity());
}

struct ExpMoment {
    Estimate estimate;
    TailReport tail;
    bool infinite = false;
};

// E exp(a / I) over subordinator paths, a >= 0.
ExpMoment exponential_moment(const BernsteinSpec& spec, double K, double T, double r0, double a, std::size_t n_paths,
                             std::uint64_t seed, double grid_step, Exec exec) {
    ExpMoment out;
    if (a == 0.0) {
        out.estimate = {1.0, 0.0, n_paths, 0};
        return out;
    }
    if (integral_can_vanish(spec)) {
        out.infinite = true;
        out.estimate = {kInfinity, 0.0, n_paths, 0};
        return out;
    }
    if (spec.deterministic()) {
        const double value = std::exp(a / (spec.kappa * exp_integral(2.0 * K, 0.0, T - r0)));
        out.estimate = {value, 0.0, n_paths, 0};
        out.infinite = !std::isfinite(value);
        return out;
    }
    std::vector<double> r = reciprocal_integrals(spec, K, T, r0, n_paths, seed, grid_step, exec);
    for (double& v : r) v = std::exp(a * v);
    out.estimate = estimate_mean(r);
    CompensatedSum total, first, second;
    double largest = 0.0;
    const std::size_t half = r.size() / 2;
    for (std::size_t i = 0; i < r.size(); ++i) {
        total.add(r[i]);
        (i < half ? first : second).add(r[i]);
        largest = std::max(largest, r[i]);
    }
    out.tail.max_share = largest / total.value();
    out.tail.first_half = first.value() / static_cast<double>(std::max<std::size_t>(half, 1));
    out.tail.second_half = second.value() / static_cast<double>(std::max<std::size_t>(r.size() - half, 1));
    out.tail.diverged = !std::isfinite(out.estimate.mean) || !(out.tail.max_share <= 0.5);
    out.infinite = out.tail.diverged;
    return out;
}

std::string fmt_num(double v) { return fmt::format("{}", v); }

}  // namespace

std::vector<double> reciprocal_integrals(const BernsteinSpec& spec, double K, double T, double r0,
                                         std::size_t n_paths, std::uint64_t seed, double grid_step, Exec exec) {
    spec.validate();
    if (!(T > r0)) throw std::domain_error("moment: need T > r0");
    const double horizon = T - r0;
    // Only S(T - r0) matters when K = 0, so a single interval is exact.
    const double step = K == 0.0 ? horizon : grid_step;
    std::vector<double> out(n_paths);
    parallel_for(n_paths, exec, [&](std::size_t i) {
        const SubordinatorPath path = sample_path(spec, horizon, step, derive_seed(seed, stream::subordinator, i));
        const double integral = stieltjes_weighted_integral(path, K, 0.0, horizon);
        out[i] = integral > 0.0 ? 1.0 / integral : kInfinity;
    });
    return out;
}

MomentEstimate moment_inverse_estimate(const BernsteinSpec& spec, double K, double T, double r0, std::size_t n_paths,
                                       std::uint64_t seed, double grid_step, Exec exec) {
    spec.validate();
    if (!(T > r0)) throw std::domain_error("moment: need T > r0");
    MomentEstimate m;
    m.n = n_paths;
    if (integral_can_vanish(spec)) {
        m.mean = kInfinity;
        m.infinite_with_positive_probability = true;
        m.exact = spec.deterministic();
        return m;
    }
    if (spec.deterministic()) {
        m.mean = 1.0 / (spec.kappa * exp_integral(2.0 * K, 0.0, T - r0));
        m.exact = true;
        return m;
    }
    if (n_paths < 2) throw std::invalid_argument("moment: need at least two paths");
    const std::vector<double> r = reciprocal_integrals(spec, K, T, r0, n_paths, seed, grid_step, exec);
    const Estimate e = estimate_mean(r);
    m.mean = e.mean;
    m.std_error = e.std_error;
    return m;
}

BoundValue log_harnack_bound(const ModelSpec& model, const Segment& xi, const Segment& eta, double T,
                             const BernsteinSpec& spec, const MomentEstimate& moment) {
    require_trusted(model);
    const double d2 = point_gap2(xi, eta);
    const double energy = delay_energy_bound(model, xi, eta, T);
    BoundValue out;
    double first = 0.0;
    if (d2 != 0.0) {
        first = d2 * moment.mean;
        out.std_error = d2 * moment.std_error;
    }
    out.value = first + delay_coefficient(model, spec.kappa, energy);
    out.vacuous = std::isinf(out.value);
    if (out.vacuous) out.std_error = 0.0;
    return out;
}

BoundValue log_harnack_bound(const ModelSpec& model, const Segment& xi, const Segment& eta, double T,
                             const BernsteinSpec& spec, std::size_t n_paths, std::uint64_t seed, double grid_step,
                             Exec exec) {
    const MomentEstimate m = moment_inverse_estimate(spec, model.K, T, model.r0, n_paths, seed, grid_step, exec);
    return log_harnack_bound(model, xi, eta, T, spec, m);
}

PowerFactor power_harnack_factor(const ModelSpec& model, const Segment& xi, const Segment& eta, double T, double p,
                                 const BernsteinSpec& spec, std::size_t n_paths, std::uint64_t seed,
                                 double grid_step, Exec exec) {
    require_trusted(model);
    if (!(p > 1.0)) throw std::domain_error("power Harnack: p must exceed 1");
    const double d2 = point_gap2(xi, eta);
    const double energy = delay_energy_bound(model, xi, eta, T);
    const double coeff = delay_coefficient(model, spec.kappa, energy);
    PowerFactor out;
    out.delay_exponent = coeff == 0.0 ? 0.0 : p / (p - 1.0) * coeff;
    const ExpMoment em =
        exponential_moment(spec, model.K, T, model.r0, p / ((p - 1.0) * (p - 1.0)) * d2, n_paths, seed, grid_step, exec);
    out.exponential_moment = em.estimate;
    out.tail = em.tail;
    if (em.infinite || std::isinf(out.delay_exponent)) {
        out.factor = {kInfinity, 0.0, true};
        return out;
    }
    const double A = em.estimate.mean;
    const double scale = std::exp(out.delay_exponent);
    out.factor.value = std::pow(A, p - 1.0) * scale;
    out.factor.std_error = (p - 1.0) * std::pow(A, p - 2.0) * em.estimate.std_error * scale;
    out.factor.vacuous = std::isinf(out.factor.value);
    return out;
}

BoundValue density_ratio_rhs(const ModelSpec& model, const Segment& xi, const Segment& eta, double T, double p,
                             const BernsteinSpec& spec, std::size_t n_paths, std::uint64_t seed, double grid_step,
                             Exec exec) {
    require_trusted(model);
    if (!(p > 1.0)) throw std::domain_error("density ratio: p must exceed 1");
    const double q = p / ((p - 1.0) * (p - 1.0));
    const double coeff = delay_coefficient(model, spec.kappa, delay_energy_bound(model, xi, eta, T));
    const ExpMoment em =
        exponential_moment(spec, model.K, T, model.r0, q * point_gap2(xi, eta), n_paths, seed, grid_step, exec);
    if (em.infinite || std::isinf(coeff)) return {kInfinity, 0.0, true};
    const double scale = coeff == 0.0 ? 1.0 : std::exp(q * coeff);
    BoundValue out{em.estimate.mean * scale, em.estimate.std_error * scale, false};
    out.vacuous = std::isinf(out.value);
    return out;
}

VerificationReport make_report(std::string name, double lhs, double lhs_se, double rhs, double rhs_se, bool vacuous) {
    VerificationReport r;
    r.name = std::move(name);
    r.lhs = lhs;
    r.lhs_se = lhs_se;
    r.rhs = rhs;
    r.rhs_se = vacuous ? 0.0 : rhs_se;
    r.vacuous = vacuous;
    r.margin = vacuous ? kInfinity : rhs - lhs;
    r.margin_se = vacuous ? lhs_se : combined_stderr(lhs_se, rhs_se);
    r.pass = vacuous || (std::isfinite(r.margin) ? r.margin >= -3.0 * r.margin_se : r.margin > 0.0);
    return r;
}

Payoff make_payoff(const std::string& name, double value) {
    auto sq0 = [](const SegmentView& s) {
        double q = 0.0;
        for (double v : s.at_zero()) q += v * v;
        return q;
    };
    if (name == "one_plus_square") return [sq0](const SegmentView& s) { return 1.0 + sq0(s); };
    if (name == "gauss_bump") return [sq0](const SegmentView& s) { return 1.0 + std::exp(-sq0(s)); };
    if (name == "tanh_plus_one") return [](const SegmentView& s) { return 1.0 + std::tanh(s.at_zero()[0]); };
    if (name == "one_plus_energy")
        return [](const SegmentView& s) {
            const double n = norm2(s);
            return 1.0 + n * n;
        };
    if (name == "constant") return [value](const SegmentView&) { return value; };
    throw std::invalid_argument("unknown payoff: " + name);
}

bool payoff_at_least_one(const std::string& name, double value) {
    if (name == "constant") return value >= 1.0;
    return name == "one_plus_square" || name == "gauss_bump" || name == "one_plus_energy";
}

VerificationReport log_harnack_report(const SemigroupEstimate& log_f_from_eta, const SemigroupEstimate& f_from_xi,
                                      const BoundValue& bound) {
    const double rhs = std::log(f_from_xi.mean) + bound.value;
    const double rhs_se = combined_stderr(f_from_xi.std_error / f_from_xi.mean, bound.std_error);
    return make_report("log_harnack", log_f_from_eta.mean, log_f_from_eta.std_error, rhs, rhs_se, bound.vacuous);
}

VerificationReport power_harnack_report(const SemigroupEstimate& f_from_eta, const SemigroupEstimate& fp_from_xi,
                                        double p, const BoundValue& factor) {
    if (!(p > 1.0)) throw std::domain_error("power Harnack: p must exceed 1");
    const double lhs = std::pow(f_from_eta.mean, p);
    const double lhs_se = p * std::pow(f_from_eta.mean, p - 1.0) * f_from_eta.std_error;
    if (factor.vacuous) return make_report("power_harnack", lhs, lhs_se, kInfinity, 0.0, true);
    const double rhs = fp_from_xi.mean * factor.value;
    const double rhs_se = combined_stderr(factor.value * fp_from_xi.std_error, fp_from_xi.mean * factor.std_error);
    return make_report("power_harnack", lhs, lhs_se, rhs, rhs_se, false);
}

namespace {

void add_metadata(VerificationReport& r, const ModelSpec& model, const BernsteinSpec& spec, double T,
                  const McParams& mc) {
    r.metadata["model"] = model.description;
    r.metadata["subordinator"] = spec.describe();
    r.metadata["T"] = fmt_num(T);
    r.metadata["seed"] = fmt::format("{}", mc.seed);
    r.metadata["n_outer"] = fmt::format("{}", mc.n_outer);
    r.metadata["n_inner"] = fmt::format("{}", mc.n_inner);
    r.metadata["n_moment"] = fmt::format("{}", mc.n_moment);
}

}  // namespace

VerificationReport verify_log_harnack(const ModelSpec& model, const Segment& xi, const Segment& eta, const Payoff& f,
                                      double T, const BernsteinSpec& spec, const McParams& mc) {
    require_trusted(model);
    const Payoff checked = [&f](const SegmentView& s) {
        const double v = f(s);
        if (!(v >= 1.0)) throw std::invalid_argument("log Harnack: payoff must be >= 1");
        return v;
    };
    const Payoff log_f = [&checked](const SegmentView& s) { return std::log(checked(s)); };
    const SemigroupEstimate from_eta = semigroup_estimate(model, eta, spec, log_f, T, mc.n_outer, mc.n_inner,
                                                          derive_seed(mc.seed, stream::outer, 1), mc.solver);
    const SemigroupEstimate from_xi = semigroup_estimate(model, xi, spec, checked, T, mc.n_outer, mc.n_inner,
                                                         derive_seed(mc.seed, stream::outer, 0), mc.solver);
    const BoundValue bound =
        log_harnack_bound(model, xi, eta, T, spec, mc.n_moment, derive_seed(mc.seed, stream::probe, 0),
                          mc.solver.resolved_clock_step(model.r0), mc.solver.exec);
    VerificationReport r = log_harnack_report(from_eta, from_xi, bound);
    add_metadata(r, model, spec, T, mc);
    return r;
}

VerificationReport verify_power_harnack(const ModelSpec& model, const Segment& xi, const Segment& eta,
                                        const Payoff& f, double T, double p, const BernsteinSpec& spec,
                                        const McParams& mc) {
    require_trusted(model);
    if (!(p > 1.0)) throw std::domain_error("power Harnack: p must exceed 1");
    const Payoff checked = [&f](const SegmentView& s) {
        const double v = f(s);
        if (!(v >= 0.0)) throw std::invalid_argument("power Harnack: payoff must be >= 0");
        return v;
    };
    const Payoff fp = [&checked, p](const SegmentView& s) { return std::pow(checked(s), p); };
    const SemigroupEstimate from_eta = semigroup_estimate(model, eta, spec, checked, T, mc.n_outer, mc.n_inner,
                                                          derive_seed(mc.seed, stream::outer, 1), mc.solver);
    const SemigroupEstimate from_xi = semigroup_estimate(model, xi, spec, fp, T, mc.n_outer, mc.n_inner,
                                                         derive_seed(mc.seed, stream::outer, 0), mc.solver);
    const PowerFactor factor =
        power_harnack_factor(model, xi, eta, T, p, spec, mc.n_moment, derive_seed(mc.seed, stream::probe, 0),
                             mc.solver.resolved_clock_step(model.r0), mc.solver.exec);
    VerificationReport r = power_harnack_report(from_eta, from_xi, p, factor.factor);
    add_metadata(r, model, spec, T, mc);
    r.metadata["p"] = fmt_num(p);
    r.metadata["tail_max_share"] = fmt_num(factor.tail.max_share);
    return r;
}

std::pair<double, double> binned_tv(const std::vector<std::vector<double>>& a,
                                    const std::vector<std::vector<double>>& b, std::size_t n_bins) {
    if (n_bins == 0) throw std::invalid_argument("binned_tv: need at least one bin");
    double lo = kInfinity, hi = -kInfinity;
    std::size_t na = 0, nb = 0;
    for (const auto& c : a)
        for (double v : c) lo = std::min(lo, v), hi = std::max(hi, v), ++na;
    for (const auto& c : b)
        for (double v : c) lo = std::min(lo, v), hi = std::max(hi, v), ++nb;
    if (na == 0 || nb == 0) throw std::invalid_argument("binned_tv: empty sample");
    if (!std::isfinite(lo) || !std::isfinite(hi)) return {std::nan(""), 0.0};
    if (hi == lo) return {0.0, 0.0};
    const double width = (hi - lo) / static_cast<double>(n_bins);
    auto bin = [&](double v) {
        return std::min(n_bins - 1, static_cast<std::size_t>((v - lo) / width));
    };
    auto histogram = [&](const std::vector<double>& c, std::vector<double>& h) {
        std::fill(h.begin(), h.end(), 0.0);
        for (double v : c) h[bin(v)] += 1.0;
    };
    std::vector<double> pa(n_bins, 0.0), pb(n_bins, 0.0), tmp(n_bins);
    for (const auto& c : a) {
        histogram(c, tmp);
        for (std::size_t i = 0; i < n_bins; ++i) pa[i] += tmp[i];
    }
    for (const auto& c : b) {
        histogram(c, tmp);
        for (std::size_t i = 0; i < n_bins; ++i) pb[i] += tmp[i];
    }
    CompensatedSum tv;
    std::vector<double> sign(n_bins);
    for (std::size_t i = 0; i < n_bins; ++i) {
        pa[i] /= static_cast<double>(na);
        pb[i] /= static_cast<double>(nb);
        const double diff = pa[i] - pb[i];
        sign[i] = diff > 0.0 ? 0.5 : (diff < 0.0 ? -0.5 : 0.0);
        tv.add(0.5 * std::abs(diff));
    }
    // Linearized statistic per cluster; clusters are the outer paths, or the
    // single samples when there is only one cluster.
    auto linear_variance = [&](const std::vector<std::vector<double>>& s) {
        std::vector<double> lin;
        if (s.size() >= 2) {
            for (const auto& c : s) {
                histogram(c, tmp);
                double v = 0.0;
                for (std::size_t i = 0; i < n_bins; ++i) v += sign[i] * tmp[i] / static_cast<double>(c.size());
                lin.push_back(v);
            }
        } else {
            for (double v : s.front()) lin.push_back(sign[bin(v)]);
        }
        return sample_variance(lin) / static_cast<double>(lin.size());
    };
    return {tv.value(), std::sqrt(linear_variance(a) + linear_variance(b))};
}

TvReport entropy_tv_report(const ModelSpec& model, const Segment& xi, const Segment& eta, double T,
                           const BernsteinSpec& spec, const McParams& mc, std::size_t n_bins, double p) {
    require_trusted(model);
    const Payoff first = [](const SegmentView& s) { return s.at_zero()[0]; };
    const auto from_xi = terminal_samples(model, xi, spec, first, T, mc.n_outer, mc.n_inner,
                                          derive_seed(mc.seed, stream::outer, 0), mc.solver);
    const auto from_eta = terminal_samples(model, eta, spec, first, T, mc.n_outer, mc.n_inner,
                                           derive_seed(mc.seed, stream::outer, 1), mc.solver);
    TvReport out;
    std::tie(out.tv, out.tv_se) = binned_tv(from_xi, from_eta, n_bins);
    const double step = mc.solver.resolved_clock_step(model.r0);
    out.bound = log_harnack_bound(model, xi, eta, T, spec, mc.n_moment, derive_seed(mc.seed, stream::probe, 0), step,
                                  mc.solver.exec);
    out.density_ratio_rhs = density_ratio_rhs(model, xi, eta, T, p, spec, mc.n_moment,
                                              derive_seed(mc.seed, stream::probe, 0), step, mc.solver.exec);
    out.pinsker = make_report("pinsker_tv", 2.0 * out.tv * out.tv, 4.0 * out.tv * out.tv_se, out.bound.value,
                              out.bound.std_error, out.bound.vacuous);
    add_metadata(out.pinsker, model, spec, T, mc);
    out.pinsker.metadata["n_bins"] = fmt::format("{}", n_bins);
    out.pinsker.metadata["tv"] = fmt_num(out.tv);
    out.pinsker.metadata["density_ratio_rhs"] = fmt_num(out.density_ratio_rhs.value);
    return out;
}

ScalingReport stable_scaling_check(double K, const BernsteinSpec& spec, const std::vector<double>& horizons,
                                   std::size_t n_paths, std::uint64_t seed, double grid_step, Exec exec) {
    if (K != 0.0) throw std::domain_error("scaling check: requires K = 0");
    const auto* stable = std::get_if<StableJumps>(&spec.levy);
    if (!stable) throw std::domain_error("scaling check: requires a stable Levy part");
    if (horizons.size() < 2) throw std::invalid_argument("scaling check: need at least two horizons");
    ScalingReport r;
    r.horizons = horizons;
    r.target_slope = -1.0 / stable->alpha;
    r.drift_regime = spec.kappa > 0.0;
    std::vector<double> lx, ly;
    for (std::size_t j = 0; j < horizons.size(); ++j) {
        const double t = horizons[j];
        const MomentEstimate m =
            moment_inverse_estimate(spec, 0.0, t, 0.0, n_paths, derive_seed(seed, stream::probe, j), grid_step, exec);
        r.moment.push_back(m.mean);
        r.moment_se.push_back(m.std_error);
        r.drift_products.push_back(m.mean * spec.kappa * t);
        lx.push_back(std::log(t));
        ly.push_back(std::log(m.mean));
    }
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t j = 0; j < lx.size(); ++j) mx += lx[j] / n, my += ly[j] / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t j = 0; j < lx.size(); ++j) {
        sxy += (lx[j] - mx) * (ly[j] - my);
        sxx += (lx[j] - mx) * (lx[j] - mx);
    }
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    if (r.drift_regime) {
        r.pass = std::ranges::all_of(r.drift_products, [](double v) { return v >= 0.5 && v <= 1.0; });
    } else {
        r.pass = std::abs(r.slope - r.target_slope) <= 0.15;
    }
    return r;
}

}  // namespace subharnack
