#pragma once

#include "subharnack/model.hpp"
#include "subharnack/parallel.hpp"
#include "subharnack/random.hpp"
#include "subharnack/segment.hpp"
#include "subharnack/stats.hpp"
#include "subharnack/subordinator.hpp"

#include <concepts>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace subharnack {

/// Anything usable as a time change: a nondecreasing t -> ell(t).
template <class C>
concept Clock = requires(const C& c, double t) {
    { c.value(t) } -> std::convertible_to<double>;
};

/// Uniform solver grid t_k = k * step, k = -delay_steps .. steps, with
/// delay_steps * step = r0 and steps * step = T.
struct TimeGrid {
    double step = 0.0;
    std::size_t delay_steps = 0;
    std::size_t steps = 0;
    double r0 = 0.0;
    double horizon = 0.0;

    /// Picks delay_steps = ceil(r0 / h) and rescales the step so that r0 is
    /// hit exactly; T must then be a multiple of the step (within 1e-9),
    /// otherwise std::domain_error. For r0 = 0 the step is T / ceil(T / h).
    static TimeGrid make(double T, double r0, double requested_step);

    /// Time of grid index k >= 0 (k = steps gives T exactly).
    double time(std::size_t k) const noexcept {
        return k == steps ? horizon : static_cast<double>(k) * step;
    }
    /// Full grid from -r0 to T.
    std::vector<double> times() const;
};

/// Default solver step: min(r0, 1) / 64, or 1/64 without delay.
double default_step(double r0) noexcept;

struct SolverConfig {
    /// Requested step; 0 selects default_step(r0).
    double step = 0.0;
    /// Subordinator sampling grid; 0 uses the solver step.
    double clock_grid_step = 0.0;
    Exec exec{};

    double resolved_step(double r0) const noexcept { return step > 0.0 ? step : default_step(r0); }
    double resolved_clock_step(double r0) const noexcept {
        return clock_grid_step > 0.0 ? clock_grid_step : resolved_step(r0);
    }
};

/// Source of driving-noise increments W(c1) - W(c0) on the clock axis.
class NoiseSource {
public:
    virtual ~NoiseSource() = default;
    virtual void increment(double clock_from, double clock_to, std::span<double> out) = 0;
};

/// Independent Gaussian increments with variance (clock_to - clock_from) I_d.
class GaussianNoise final : public NoiseSource {
public:
    explicit GaussianNoise(std::uint64_t seed) : engine_(make_engine(seed)) {}
    void increment(double clock_from, double clock_to, std::span<double> out) override;

private:
    Engine engine_;
    std::normal_distribution<double> normal_;
};

/// One fixed Brownian path on [0, length] sampled with `resolution`, linearly
/// interpolated. Lets different clocks share the same W.
class BrownianPathNoise final : public NoiseSource {
public:
    BrownianPathNoise(std::size_t dim, double length, double resolution, std::uint64_t seed);
    void increment(double clock_from, double clock_to, std::span<double> out) override;
    void value(double u, std::span<double> out) const;

private:
    std::size_t dim_;
    double resolution_;
    std::vector<double> knots_;  // (n + 1) * dim
};

/// Clock offsets ell(t_k) - ell(0) on the grid.
template <Clock C>
std::vector<double> clock_on_grid(const C& clock, const TimeGrid& grid) {
    std::vector<double> out(grid.steps + 1);
    const double origin = clock.value(0.0);
    for (std::size_t k = 0; k <= grid.steps; ++k) out[k] = clock.value(grid.time(k)) - origin;
    return out;
}

/// Initial segment resampled onto the solver's delay grid (exact copy when
/// the grids already agree). Throws std::domain_error on r0/dimension mismatch.
Segment fit_initial_segment(const ModelSpec& model, const Segment& xi, const TimeGrid& grid);

/// Euler scheme on the time-changed clock:
/// X_{k+1} = X_k + [b(X_k) + B(X_{t_k})] h + dW_k, dW_k ~ N(0, (c_{k+1} - c_k) I).
Trajectory integrate(const ModelSpec& model, const Segment& xi, const TimeGrid& grid,
                     std::span<const double> clock_offsets, NoiseSource& noise);

template <Clock C>
Trajectory solve_path(const ModelSpec& model, const Segment& xi, const C& clock, double T, NoiseSource& noise,
                      const SolverConfig& config = {}) {
    const TimeGrid grid = TimeGrid::make(T, model.r0, config.resolved_step(model.r0));
    const std::vector<double> offsets = clock_on_grid(clock, grid);
    return integrate(model, xi, grid, offsets, noise);
}

template <Clock C>
Trajectory solve_path(const ModelSpec& model, const Segment& xi, const C& clock, double T, std::uint64_t seed,
                      const SolverConfig& config = {}) {
    GaussianNoise noise(seed);
    return solve_path(model, xi, clock, T, noise, config);
}

/// Payoff on the terminal segment.
using Payoff = std::function<double(const SegmentView&)>;

/// Monte Carlo estimates of P_T^ell f(xi) for several payoffs from the same
/// simulated paths. Path i uses the Gaussian stream derive_seed(seed, brownian, i).
std::vector<Estimate> inner_mc(const ModelSpec& model, const Segment& xi, const TimeGrid& grid,
                               std::span<const double> clock_offsets, std::span<const Payoff> payoffs,
                               std::size_t n_paths, std::uint64_t seed, Exec exec = {});

template <Clock C>
Estimate inner_mc(const ModelSpec& model, const Segment& xi, const C& clock, double T, const Payoff& f,
                  std::size_t n_paths, std::uint64_t seed, const SolverConfig& config = {}) {
    const TimeGrid grid = TimeGrid::make(T, model.r0, config.resolved_step(model.r0));
    const std::vector<double> offsets = clock_on_grid(clock, grid);
    return inner_mc(model, xi, grid, offsets, std::span(&f, 1), n_paths, seed, config.exec).front();
}

/// Two-level estimate of P_T f(xi) = E[ P_T^ell f(xi) | ell = S ].
struct SemigroupEstimate {
    double mean = 0.0;
    /// sqrt(Var(conditional means) / n_outer); by the law of total variance
    /// this includes the inner-level noise.
    double std_error = 0.0;
    /// Sample variance of the conditional means across subordinator paths.
    double between_variance = 0.0;
    /// Average within-path variance of the payoff.
    double within_variance = 0.0;
    std::size_t n_outer = 0;
    std::size_t n_inner = 0;
    std::size_t nan_count = 0;
};

std::vector<SemigroupEstimate> semigroup_estimate(const ModelSpec& model, const Segment& xi,
                                                  const BernsteinSpec& spec, std::span<const Payoff> payoffs,
                                                  double T, std::size_t n_outer, std::size_t n_inner,
                                                  std::uint64_t seed, const SolverConfig& config = {});

SemigroupEstimate semigroup_estimate(const ModelSpec& model, const Segment& xi, const BernsteinSpec& spec,
                                     const Payoff& f, double T, std::size_t n_outer, std::size_t n_inner,
                                     std::uint64_t seed, const SolverConfig& config = {});

/// Observable `g` of the terminal segment on every simulated path, grouped by
/// subordinator path: out[o][i]. Same seeding as semigroup_estimate.
std::vector<std::vector<double>> terminal_samples(const ModelSpec& model, const Segment& xi, const BernsteinSpec& spec,
                                                  const Payoff& g, double T, std::size_t n_outer, std::size_t n_inner,
                                                  std::uint64_t seed, const SolverConfig& config = {});

}  // namespace subharnack
