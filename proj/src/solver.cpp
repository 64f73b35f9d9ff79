#include "subharnack/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace subharnack {

namespace {

bool is_integer_multiple(double total, double step, std::size_t& count) {
    const double ratio = total / step;
    const double rounded = std::round(ratio);
    count = static_cast<std::size_t>(rounded);
    return rounded >= 1.0 && std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio);
}

}  // namespace

double default_step(double r0) noexcept { return (r0 > 0.0 ? std::min(r0, 1.0) : 1.0) / 64.0; }

TimeGrid TimeGrid::make(double T, double r0, double requested_step) {
    if (!(T > 0.0) || !std::isfinite(T)) throw std::domain_error("time grid: T must be positive");
    if (!(r0 >= 0.0) || !std::isfinite(r0)) throw std::domain_error("time grid: r0 must be >= 0");
    if (!(requested_step > 0.0)) throw std::domain_error("time grid: step must be positive");
    TimeGrid g;
    g.r0 = r0;
    g.horizon = T;
    if (r0 == 0.0) {
        g.steps = static_cast<std::size_t>(std::max(1.0, std::ceil(T / requested_step - 1e-9)));
        g.step = T / static_cast<double>(g.steps);
        return g;
    }
    // Refine the delay grid until T is also hit; rational r0/T are the norm.
    const auto m0 = static_cast<std::size_t>(std::max(1.0, std::ceil(r0 / requested_step - 1e-9)));
    for (std::size_t m = m0; m <= 4 * m0; ++m) {
        const double step = r0 / static_cast<double>(m);
        std::size_t n = 0;
        if (is_integer_multiple(T, step, n)) {
            g.delay_steps = m;
            g.steps = n;
            g.step = step;
            return g;
        }
    }
    throw std::domain_error("time grid: no step near the requested one divides both r0 and T");
}

std::vector<double> TimeGrid::times() const {
    std::vector<double> out(delay_steps + steps + 1);
    for (std::size_t j = 0; j < delay_steps; ++j)
        out[j] = -r0 + static_cast<double>(j) * step;
    if (delay_steps > 0) out.front() = -r0;
    for (std::size_t k = 0; k <= steps; ++k) out[delay_steps + k] = time(k);
    return out;
}

void GaussianNoise::increment(double clock_from, double clock_to, std::span<double> out) {
    const double sd = std::sqrt(clock_to - clock_from);
    for (double& v : out) v = sd * normal_(engine_);
}

BrownianPathNoise::BrownianPathNoise(std::size_t dim, double length, double resolution, std::uint64_t seed)
    : dim_(dim), resolution_(resolution) {
    if (dim == 0 || !(length > 0.0) || !(resolution > 0.0))
        throw std::invalid_argument("brownian path: bad dimensions");
    const auto n = static_cast<std::size_t>(std::ceil(length / resolution)) + 1;
    knots_.assign((n + 1) * dim, 0.0);
    Engine engine = make_engine(seed);
    std::normal_distribution<double> normal;
    const double sd = std::sqrt(resolution);
    for (std::size_t j = 1; j <= n; ++j)
        for (std::size_t i = 0; i < dim; ++i) knots_[j * dim + i] = knots_[(j - 1) * dim + i] + sd * normal(engine);
}

void BrownianPathNoise::value(double u, std::span<double> out) const {
    const std::size_t n = knots_.size() / dim_ - 1;
    if (!(u >= 0.0) || u > static_cast<double>(n) * resolution_)
        throw std::domain_error("brownian path: clock value outside the sampled range");
    const double pos = u / resolution_;
    const auto j = std::min(static_cast<std::size_t>(pos), n - 1);
    const double w = pos - static_cast<double>(j);
    for (std::size_t i = 0; i < dim_; ++i)
        out[i] = (1.0 - w) * knots_[j * dim_ + i] + w * knots_[(j + 1) * dim_ + i];
}

void BrownianPathNoise::increment(double clock_from, double clock_to, std::span<double> out) {
    std::vector<double> a(dim_);
    value(clock_from, a);
    value(clock_to, out);
    for (std::size_t i = 0; i < dim_; ++i) out[i] -= a[i];
}

Segment fit_initial_segment(const ModelSpec& model, const Segment& xi, const TimeGrid& grid) {
    if (std::abs(xi.r0() - model.r0) > 1e-12 * std::max(1.0, model.r0))
        throw std::domain_error("solver: initial segment r0 does not match the model");
    if (xi.dim() != model.dim) throw std::domain_error("solver: initial segment dimension does not match the model");
    const std::size_t m = grid.delay_steps;
    if (xi.grid().size() == m + 1) {
        bool aligned = true;
        for (std::size_t j = 0; j <= m && aligned; ++j) {
            const double target = -grid.r0 + static_cast<double>(j) * grid.step;
            aligned = std::abs(xi.grid()[j] - target) <= 1e-12 * std::max(1.0, grid.r0);
        }
        if (aligned) return xi;
    }
    if (model.r0 == 0.0) return Segment(0.0, xi.dim(), {0.0}, {xi.at_zero().begin(), xi.at_zero().end()});
    return xi.resample(m);
}

Trajectory integrate(const ModelSpec& model, const Segment& xi, const TimeGrid& grid,
                     std::span<const double> clock_offsets, NoiseSource& noise) {
    if (clock_offsets.size() != grid.steps + 1)
        throw std::invalid_argument("solver: clock offsets must have one entry per grid point");
    const Segment init = fit_initial_segment(model, xi, grid);
    const std::size_t d = model.dim;
    const std::size_t m = grid.delay_steps;
    const std::size_t n = grid.steps;

    std::vector<double> times(init.grid().begin(), init.grid().end());
    times.reserve(m + n + 1);
    for (std::size_t k = 1; k <= n; ++k) times.push_back(grid.time(k));
    std::vector<double> values(init.values().begin(), init.values().end());
    values.resize((m + n + 1) * d);

    const bool with_delay = !model.delay_is_zero();
    const double h = grid.step;
    std::vector<double> bx(d), Bx(d), dw(d);
    for (std::size_t k = 0; k < n; ++k) {
        if (clock_offsets[k + 1] < clock_offsets[k])
            throw std::invalid_argument("solver: clock must be nondecreasing");
        const std::size_t idx = m + k;
        const std::span<const double> x(values.data() + idx * d, d);
        model.b(x, bx);
        noise.increment(clock_offsets[k], clock_offsets[k + 1], dw);
        double* next = values.data() + (idx + 1) * d;
        if (with_delay) {
            const SegmentView window{std::span<const double>(times).subspan(k, m + 1),
                                     std::span<const double>(values).subspan(k * d, (m + 1) * d), d};
            model.B(window, Bx);
            for (std::size_t i = 0; i < d; ++i) next[i] = x[i] + (bx[i] + Bx[i]) * h + dw[i];
        } else {
            for (std::size_t i = 0; i < d; ++i) next[i] = x[i] + bx[i] * h + dw[i];
        }
    }
    return Trajectory(model.r0, d, m, std::move(times), std::move(values));
}

std::vector<Estimate> inner_mc(const ModelSpec& model, const Segment& xi, const TimeGrid& grid,
                               std::span<const double> clock_offsets, std::span<const Payoff> payoffs,
                               std::size_t n_paths, std::uint64_t seed, Exec exec) {
    if (n_paths < 2) throw std::invalid_argument("inner_mc: need at least two paths");
    const Segment init = fit_initial_segment(model, xi, grid);
    const std::size_t np = payoffs.size();
    std::vector<std::vector<double>> samples(np, std::vector<double>(n_paths));
    parallel_for(n_paths, exec, [&](std::size_t i) {
        GaussianNoise noise(derive_seed(seed, stream::brownian, i));
        const Trajectory traj = integrate(model, init, grid, clock_offsets, noise);
        const SegmentView terminal = traj.window(traj.grid().size() - 1);
        for (std::size_t p = 0; p < np; ++p) samples[p][i] = payoffs[p](terminal);
    });
    std::vector<Estimate> out;
    out.reserve(np);
    for (const auto& s : samples) out.push_back(estimate_mean(s));
    return out;
}

std::vector<SemigroupEstimate> semigroup_estimate(const ModelSpec& model, const Segment& xi,
                                                  const BernsteinSpec& spec, std::span<const Payoff> payoffs,
                                                  double T, std::size_t n_outer, std::size_t n_inner,
                                                  std::uint64_t seed, const SolverConfig& config) {
    if (n_outer < 2 || n_inner < 2) throw std::invalid_argument("semigroup_estimate: need n_outer, n_inner >= 2");
    spec.validate();
    const TimeGrid grid = TimeGrid::make(T, model.r0, config.resolved_step(model.r0));
    const Segment init = fit_initial_segment(model, xi, grid);
    const double clock_step = config.resolved_clock_step(model.r0);
    const std::size_t np = payoffs.size();
    std::vector<std::vector<Estimate>> inner(n_outer);
    parallel_for(n_outer, config.exec, [&](std::size_t o) {
        const SubordinatorPath path = sample_path(spec, T, clock_step, derive_seed(seed, stream::subordinator, o));
        const std::vector<double> offsets = clock_on_grid(path, grid);
        inner[o] = inner_mc(model, init, grid, offsets, payoffs, n_inner, derive_seed(seed, stream::inner, o));
    });
    std::vector<SemigroupEstimate> out(np);
    std::vector<double> means(n_outer);
    for (std::size_t p = 0; p < np; ++p) {
        CompensatedSum within;
        std::size_t nan = 0;
        for (std::size_t o = 0; o < n_outer; ++o) {
            const Estimate& e = inner[o][p];
            means[o] = e.mean;
            nan += e.nan_count;
            within.add(e.std_error * e.std_error * static_cast<double>(e.n));
        }
        const Estimate outer = estimate_mean(means);
        SemigroupEstimate& s = out[p];
        s.mean = outer.mean;
        s.std_error = outer.std_error;
        s.between_variance = sample_variance(means);
        s.within_variance = within.value() / static_cast<double>(n_outer);
        s.n_outer = n_outer;
        s.n_inner = n_inner;
        s.nan_count = nan;
    }
    return out;
}

std::vector<std::vector<double>> terminal_samples(const ModelSpec& model, const Segment& xi, const BernsteinSpec& spec,
                                                  const Payoff& g, double T, std::size_t n_outer, std::size_t n_inner,
                                                  std::uint64_t seed, const SolverConfig& config) {
    if (n_outer < 1 || n_inner < 1) throw std::invalid_argument("terminal_samples: need at least one path");
    spec.validate();
    const TimeGrid grid = TimeGrid::make(T, model.r0, config.resolved_step(model.r0));
    const Segment init = fit_initial_segment(model, xi, grid);
    const double clock_step = config.resolved_clock_step(model.r0);
    std::vector<std::vector<double>> out(n_outer, std::vector<double>(n_inner));
    parallel_for(n_outer, config.exec, [&](std::size_t o) {
        const SubordinatorPath path = sample_path(spec, T, clock_step, derive_seed(seed, stream::subordinator, o));
        const std::vector<double> offsets = clock_on_grid(path, grid);
        const std::uint64_t inner_seed = derive_seed(seed, stream::inner, o);
        for (std::size_t i = 0; i < n_inner; ++i) {
            GaussianNoise noise(derive_seed(inner_seed, stream::brownian, i));
            const Trajectory traj = integrate(model, init, grid, offsets, noise);
            out[o][i] = g(traj.window(traj.grid().size() - 1));
        }
    });
    return out;
}

SemigroupEstimate semigroup_estimate(const ModelSpec& model, const Segment& xi, const BernsteinSpec& spec,
                                     const Payoff& f, double T, std::size_t n_outer, std::size_t n_inner,
                                     std::uint64_t seed, const SolverConfig& config) {
    return semigroup_estimate(model, xi, spec, std::span(&f, 1), T, n_outer, n_inner, seed, config).front();
}

}  // namespace subharnack
