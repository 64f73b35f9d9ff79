#include "subharnack/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace subharnack {

namespace {

void check_window(const RegularizedPath& reg, double T, double r0) {
    if (!(T > r0)) throw std::domain_error("coupling: need T > r0");
    if (reg.horizon() < T - 1e-12 * std::max(1.0, T))
        throw std::domain_error("coupling: regularized clock does not cover [0, T]");
}

double point_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

double segment_distance(const Segment& a, const Segment& b) {
    if (a.dim() != b.dim() || std::abs(a.r0() - b.r0()) > 1e-12 * std::max(1.0, a.r0()))
        throw std::domain_error("segments: r0 or dimension mismatch");
    if (std::ranges::equal(a.grid(), b.grid())) return distance2(a.view(), b.view());
    constexpr std::size_t fine = 1024;
    return distance2(a.resample(fine).view(), b.resample(fine).view());
}

}  // namespace

double lambda_weight(double K, const RegularizedPath& reg, double T, double r0, double t) {
    check_window(reg, T, r0);
    if (!(t >= 0.0)) throw std::domain_error("lambda_weight: t must be >= 0");
    return std::exp(-K * t) / stieltjes_weighted_integral(reg, K, 0.0, T - r0);
}

double gamma_factor(double K, const RegularizedPath& reg, double T, double r0, double t) {
    check_window(reg, T, r0);
    if (!(t >= 0.0)) throw std::domain_error("gamma_factor: t must be >= 0");
    const double deadline = T - r0;
    if (t >= deadline) return 0.0;
    const double total = stieltjes_weighted_integral(reg, K, 0.0, deadline);
    if (t == 0.0) return 1.0;
    return std::exp(K * t) * stieltjes_weighted_integral(reg, K, t, deadline) / total;
}

double delay_energy_bound(const ModelSpec& model, const Segment& xi, const Segment& eta, double T) {
    if (!(T > model.r0)) throw std::domain_error("delay_energy_bound: need T > r0");
    const double d0 = point_distance(xi.at_zero(), eta.at_zero());
    const double dist = segment_distance(xi, eta);
    return model.r0 * dist * dist + (T + 1.0) * growth_factor(model.K, T - model.r0) * d0 * d0;
}

double qv_bound(const ModelSpec& model, const Segment& xi, const Segment& eta, double T, const RegularizedPath& reg) {
    check_window(reg, T, model.r0);
    const double d0 = point_distance(xi.at_zero(), eta.at_zero());
    const double energy = delay_energy_bound(model, xi, eta, T);
    double delay_term = 0.0;
    if (model.K1 != 0.0 && energy != 0.0) {
        delay_term = reg.kappa() > 0.0 ? 2.0 * model.K1 * model.K1 / reg.kappa() * energy
                                       : std::numeric_limits<double>::infinity();
    }
    const double push_term =
        d0 == 0.0 ? 0.0 : 2.0 * d0 * d0 / stieltjes_weighted_integral(reg, model.K, 0.0, T - model.r0);
    return delay_term + push_term;
}

CouplingRecord run_coupling(const ModelSpec& model, const Segment& xi, const Segment& eta, const RegularizedPath& reg,
                            double T, std::uint64_t seed, const SolverConfig& config, bool keep_trajectories) {
    check_window(reg, T, model.r0);
    const TimeGrid grid = TimeGrid::make(T, model.r0, config.resolved_step(model.r0));
    const Segment xs = fit_initial_segment(model, xi, grid);
    const Segment ys = fit_initial_segment(model, eta, grid);
    const std::size_t d = model.dim;
    const std::size_t m = grid.delay_steps;
    const std::size_t n = grid.steps;
    const double h = grid.step;
    const double K = model.K;
    const double deadline = T - model.r0;
    const double total = stieltjes_weighted_integral(reg, K, 0.0, deadline);
    const double delta0 = point_distance(xs.at_zero(), ys.at_zero());
    const double tol = delta0 * 1e-8 + 1e-12;
    const bool with_delay = !model.delay_is_zero();

    CouplingRecord rec;
    rec.T = T;
    rec.r0 = model.r0;
    rec.step = h;
    rec.kappa = reg.kappa();
    rec.K1 = model.K1;
    rec.qv_bound = qv_bound(model, xs, ys, T, reg);
    rec.j2_bound = delay_energy_bound(model, xs, ys, T);

    std::vector<double> times(xs.grid().begin(), xs.grid().end());
    for (std::size_t k = 1; k <= n; ++k) times.push_back(grid.time(k));
    std::vector<double> vx(xs.values().begin(), xs.values().end());
    std::vector<double> vy(ys.values().begin(), ys.values().end());
    vx.resize((m + n + 1) * d);
    vy.resize((m + n + 1) * d);

    const double origin = reg.value(0.0);
    std::vector<double> clock(n + 1);
    for (std::size_t k = 0; k <= n; ++k) clock[k] = reg.value(grid.time(k)) - origin;

    bool met = delta0 <= tol;
    if (met) std::copy_n(vx.begin() + static_cast<std::ptrdiff_t>(m * d), d, vy.begin() + static_cast<std::ptrdiff_t>(m * d));

    GaussianNoise noise(seed);
    std::vector<double> bx(d), by(d), BX(d, 0.0), BY(d, 0.0), dw(d), gap(d), push(d), theta(d);
    CompensatedSum M, QV, push_qv, j1, j2;
    auto window = [&](const std::vector<double>& v, std::size_t k) {
        return SegmentView{std::span<const double>(times).subspan(k, m + 1),
                           std::span<const double>(v).subspan(k * d, (m + 1) * d), d};
    };

    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t idx = m + k;
        const double* x = vx.data() + idx * d;
        const double* y = vy.data() + idx * d;
        double* xn = vx.data() + (idx + 1) * d;
        double* yn = vy.data() + (idx + 1) * d;
        const double dl = clock[k + 1] - clock[k];
        const SegmentView wx = window(vx, k);
        const SegmentView wy = window(vy, k);
        const double seg_gap = distance2(wx, wy);

        model.b({x, d}, bx);
        if (with_delay) model.B(wx, BX);
        noise.increment(clock[k], clock[k + 1], dw);
        for (std::size_t i = 0; i < d; ++i) xn[i] = x[i] + (bx[i] + BX[i]) * h + dw[i];

        std::fill(push.begin(), push.end(), 0.0);
        if (met) {
            std::copy_n(xn, d, yn);
        } else {
            model.b({y, d}, by);
            for (std::size_t i = 0; i < d; ++i) {
                yn[i] = y[i] + (by[i] + BX[i]) * h + dw[i];
                gap[i] = xn[i] - yn[i];
            }
            const double t0 = grid.time(k);
            const double t1 = grid.time(k + 1);
            const double c = delta0 * reg.weighted_increment(K, t0, std::min(t1, deadline)) / total;
            const double gap_norm = point_distance(gap, std::vector<double>(d, 0.0));
            const bool at_deadline = t1 >= deadline - 1e-12 * std::max(1.0, T);
            if (gap_norm <= c + tol || at_deadline) {
                met = true;
                rec.tau = t1;
                rec.forced = gap_norm > c + tol;
                push = gap;
                std::copy_n(xn, d, yn);
            } else {
                const double now = point_distance({x, d}, {y, d});
                for (std::size_t i = 0; i < d; ++i) {
                    push[i] = c * (x[i] - y[i]) / now;
                    yn[i] += push[i];
                }
            }
        }

        if (with_delay && seg_gap != 0.0) {
            model.B(wy, BY);
        } else {
            BY = BX;
        }
        double inner = 0.0, theta2 = 0.0, push2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            theta[i] = (BX[i] - BY[i]) * h + push[i];
            inner += theta[i] * dw[i];
            theta2 += theta[i] * theta[i];
            push2 += push[i] * push[i];
        }
        M.add(-inner / dl);
        QV.add(theta2 / dl);
        push_qv.add(push2 / dl);
        j1.add(seg_gap * seg_gap * h * h / dl);
        j2.add(seg_gap * seg_gap * h);
    }

    rec.M_terminal = M.value();
    rec.QV_terminal = QV.value();
    rec.push_qv = push_qv.value();
    rec.j1 = j1.value();
    rec.j2 = j2.value();
    rec.log_R = rec.M_terminal - 0.5 * rec.QV_terminal + 0.0;
    rec.R = std::exp(rec.log_R);

    rec.times.resize(n + 1);
    rec.gamma.resize(n + 1);
    rec.distance.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = grid.time(k);
        rec.times[k] = t;
        rec.gamma[k] = t >= deadline ? 0.0 : gamma_factor(K, reg, T, model.r0, t);
        rec.distance[k] = point_distance({vx.data() + (m + k) * d, d}, {vy.data() + (m + k) * d, d});
        rec.max_contraction_excess = k == 0 ? rec.distance[0] - delta0 * rec.gamma[0]
                                            : std::max(rec.max_contraction_excess, rec.distance[k] - delta0 * rec.gamma[k]);
    }
    const SegmentView tx = window(vx, n);
    const SegmentView ty = window(vy, n);
    rec.terminal_equal = std::ranges::equal(tx.values, ty.values);

    if (keep_trajectories) {
        rec.X.emplace(model.r0, d, m, times, std::move(vx));
        rec.Y.emplace(model.r0, d, m, std::move(times), std::move(vy));
    }
    return rec;
}

}  // namespace subharnack
