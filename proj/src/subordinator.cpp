#include "subharnack/subordinator.hpp"

#include "subharnack/random.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace subharnack {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

// Uniform grid 0 = g_0 < ... < g_n = horizon with spacing at most grid_step.
std::vector<double> uniform_grid(double horizon, double grid_step) {
    if (!positive_finite(horizon)) throw std::domain_error("subordinator: horizon must be positive");
    if (!positive_finite(grid_step)) throw std::domain_error("subordinator: grid_step must be positive");
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(horizon / grid_step - 1e-9)));
    const double step = horizon / static_cast<double>(n);
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i) grid[i] = static_cast<double>(i) * step;
    grid.back() = horizon;
    return grid;
}

}  // namespace

// ---------------------------------------------------------------------------
// BernsteinSpec
// ---------------------------------------------------------------------------

void BernsteinSpec::validate() const {
    if (!std::isfinite(kappa) || kappa < 0.0) throw std::domain_error("bernstein: kappa must be >= 0");
    std::visit(overloaded{
                   [](const NoJumps&) {},
                   [](const StableJumps& s) {
                       if (!(s.alpha > 0.0 && s.alpha < 1.0))
                           throw std::domain_error("bernstein: stable alpha must lie in (0,1)");
                       if (!positive_finite(s.c)) throw std::domain_error("bernstein: stable c must be > 0");
                   },
                   [](const CompoundExpJumps& s) {
                       if (!positive_finite(s.rate)) throw std::domain_error("bernstein: rate must be > 0");
                       if (!positive_finite(s.mean)) throw std::domain_error("bernstein: mean must be > 0");
                   },
                   [](const PointMassJumps& s) {
                       if (!positive_finite(s.rate)) throw std::domain_error("bernstein: rate must be > 0");
                       if (!positive_finite(s.jump_size))
                           throw std::domain_error("bernstein: jump_size must be > 0");
                   },
               },
               levy);
}

double BernsteinSpec::levy_small_jump_mass() const {
    return std::visit(overloaded{
                          [](const NoJumps&) { return 0.0; },
                          [](const StableJumps& s) {
                              const double density_scale = s.c * s.alpha / std::tgamma(1.0 - s.alpha);
                              return density_scale * (1.0 / (1.0 - s.alpha) + 1.0 / s.alpha);
                          },
                          [](const CompoundExpJumps& s) { return s.rate * s.mean * -std::expm1(-1.0 / s.mean); },
                          [](const PointMassJumps& s) { return s.rate * std::min(1.0, s.jump_size); },
                      },
                      levy);
}

std::string BernsteinSpec::describe() const {
    std::ostringstream out;
    out.precision(17);
    out << "kappa=" << kappa << ' ';
    std::visit(overloaded{
                   [&](const NoJumps&) { out << "none"; },
                   [&](const StableJumps& s) { out << "stable(alpha=" << s.alpha << ",c=" << s.c << ')'; },
                   [&](const CompoundExpJumps& s) {
                       out << "compound_exp(rate=" << s.rate << ",mean=" << s.mean << ')';
                   },
                   [&](const PointMassJumps& s) {
                       out << "point_mass(rate=" << s.rate << ",jump=" << s.jump_size << ')';
                   },
               },
               levy);
    return out.str();
}

double phi_eval(const BernsteinSpec& spec, double u) {
    if (!(u > 0.0)) throw std::domain_error("phi_eval: u must be > 0");
    const double jump_part = std::visit(overloaded{
                                            [](const NoJumps&) { return 0.0; },
                                            [u](const StableJumps& s) { return s.c * std::pow(u, s.alpha); },
                                            [u](const CompoundExpJumps& s) {
                                                return s.rate * u * s.mean / (1.0 + u * s.mean);
                                            },
                                            [u](const PointMassJumps& s) {
                                                return s.rate * -std::expm1(-u * s.jump_size);
                                            },
                                        },
                                        spec.levy);
    return spec.kappa * u + jump_part;
}

double sample_positive_stable(double alpha, double uniform_angle, double exponential) {
    // Z = sin(aU) / sin(U)^{1/a} * (sin((1-a)U) / E)^{(1-a)/a}, U ~ U(0, pi), E ~ Exp(1).
    const double u = uniform_angle;
    const double log_z = std::log(std::sin(alpha * u)) - std::log(std::sin(u)) / alpha +
                         (1.0 - alpha) / alpha * (std::log(std::sin((1.0 - alpha) * u)) - std::log(exponential));
    return std::exp(log_z);
}

// ---------------------------------------------------------------------------
// SubordinatorPath
// ---------------------------------------------------------------------------

SubordinatorPath::SubordinatorPath(double kappa, std::vector<double> grid, std::vector<double> levels,
                                   std::vector<Jump> jumps)
    : kappa_(kappa), grid_(std::move(grid)), levels_(std::move(levels)), jumps_(std::move(jumps)) {
    if (!std::isfinite(kappa_) || kappa_ < 0.0) throw std::invalid_argument("path: kappa must be >= 0");
    if (grid_.size() < 2 || grid_.size() != levels_.size())
        throw std::invalid_argument("path: grid and levels must have equal length >= 2");
    if (grid_.front() != 0.0) throw std::invalid_argument("path: grid must start at 0");
    if (levels_.front() != 0.0) throw std::invalid_argument("path: ell(0) must be 0");
    for (std::size_t i = 1; i < grid_.size(); ++i) {
        if (!(grid_[i] > grid_[i - 1])) throw std::invalid_argument("path: grid must be strictly increasing");
        if (!(levels_[i] >= levels_[i - 1]) || !std::isfinite(levels_[i]))
            throw std::invalid_argument("path: values must be nondecreasing");
    }
    if (!jumps_.empty()) {
        std::size_t j = 0;
        for (std::size_t i = 1; i < grid_.size(); ++i) {
            double level = levels_[i - 1];
            while (j < jumps_.size() && jumps_[j].time <= grid_[i]) {
                const Jump& jump = jumps_[j];
                if (!(jump.size > 0.0)) throw std::invalid_argument("path: jump sizes must be positive");
                if (jump.time != grid_[i]) throw std::invalid_argument("path: jump time not on grid");
                level += jump.size;
                ++j;
            }
            if (level != levels_[i]) throw std::invalid_argument("path: increments disagree with recorded jumps");
        }
        if (j != jumps_.size()) throw std::invalid_argument("path: jump beyond horizon or unsorted");
    }
    values_.resize(grid_.size());
    integral_prefix_.assign(grid_.size(), 0.0);
    for (std::size_t i = 0; i < grid_.size(); ++i) values_[i] = kappa_ * grid_[i] + levels_[i];
    for (std::size_t i = 1; i < grid_.size(); ++i)
        integral_prefix_[i] = integral_prefix_[i - 1] + levels_[i - 1] * (grid_[i] - grid_[i - 1]);
}

SubordinatorPath SubordinatorPath::from_jumps(double kappa, double horizon, double grid_step,
                                              std::vector<Jump> jumps) {
    std::vector<double> grid = uniform_grid(horizon, grid_step);
    std::sort(jumps.begin(), jumps.end(), [](const Jump& a, const Jump& b) { return a.time < b.time; });
    for (const Jump& jump : jumps) {
        if (!(jump.time > 0.0 && jump.time <= horizon))
            throw std::domain_error("path: jump times must lie in (0, horizon]");
    }
    std::vector<double> merged;
    merged.reserve(grid.size() + jumps.size());
    std::vector<double> jump_times;
    jump_times.reserve(jumps.size());
    for (const Jump& jump : jumps) jump_times.push_back(jump.time);
    std::merge(grid.begin(), grid.end(), jump_times.begin(), jump_times.end(), std::back_inserter(merged));
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());

    std::vector<double> levels(merged.size(), 0.0);
    std::size_t j = 0;
    for (std::size_t i = 1; i < merged.size(); ++i) {
        double level = levels[i - 1];
        while (j < jumps.size() && jumps[j].time <= merged[i]) level += jumps[j++].size;
        levels[i] = level;
    }
    return SubordinatorPath(kappa, std::move(merged), std::move(levels), std::move(jumps));
}

std::size_t SubordinatorPath::interval_index(double t) const {
    const double tol = 1e-12 * std::max(1.0, horizon());
    if (!(t >= -tol && t <= horizon() + tol)) throw std::domain_error("path: time outside [0, horizon]");
    // Times within tol below a grid point are snapped onto it.
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), t + tol);
    return static_cast<std::size_t>(std::distance(grid_.begin(), it)) - 1;
}

double SubordinatorPath::jump_part(double t) const { return levels_[interval_index(t)]; }

double SubordinatorPath::value(double t) const { return kappa_ * t + jump_part(t); }

double SubordinatorPath::integral(double x) const {
    const std::size_t i = interval_index(x);
    return 0.5 * kappa_ * x * x + integral_prefix_[i] + levels_[i] * (x - grid_[i]);
}

double SubordinatorPath::weighted_increment(double rate, double a, double b) const {
    interval_index(a);
    interval_index(b);
    double total = kappa_ * exp_integral(rate, a, b);
    if (!jumps_.empty()) {
        for (const Jump& jump : jumps_) {
            if (jump.time > a && jump.time <= b) total += std::exp(-rate * jump.time) * jump.size;
        }
        return total;
    }
    const auto first = std::upper_bound(grid_.begin(), grid_.end(), a);
    for (auto it = first; it != grid_.end() && *it <= b; ++it) {
        const auto i = static_cast<std::size_t>(std::distance(grid_.begin(), it));
        const double jump = levels_[i] - levels_[i - 1];
        if (jump != 0.0) total += std::exp(-rate * grid_[i]) * jump;
    }
    return total;
}

double SubordinatorPath::weighted_jump_part_integral(double rate, double shift, double a, double b) const {
    if (!(a <= b)) throw std::domain_error("path: integral bounds out of order");
    const double lo = a + shift;
    const double hi = b + shift;
    std::size_t i = interval_index(lo);
    interval_index(hi);
    double total = 0.0;
    for (; i < grid_.size(); ++i) {
        const double left = std::max(lo, grid_[i]);
        const double right = i + 1 < grid_.size() ? std::min(hi, grid_[i + 1]) : hi;
        if (right > left && levels_[i] != 0.0) total += levels_[i] * exp_integral(rate, left - shift, right - shift);
        if (i + 1 >= grid_.size() || grid_[i + 1] >= hi) break;
    }
    return total;
}

SubordinatorPath sample_path(const BernsteinSpec& spec, double horizon, double grid_step, std::uint64_t seed) {
    spec.validate();
    Engine engine = make_engine(seed);
    return std::visit(
        overloaded{
            [&](const NoJumps&) { return SubordinatorPath::from_jumps(spec.kappa, horizon, grid_step, {}); },
            [&](const StableJumps& s) {
                std::vector<double> grid = uniform_grid(horizon, grid_step);
                std::vector<double> levels(grid.size(), 0.0);
                std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
                std::exponential_distribution<double> expo(1.0);
                for (std::size_t i = 1; i < grid.size(); ++i) {
                    double u = angle(engine);
                    while (u <= 0.0) u = angle(engine);
                    const double e = expo(engine);
                    const double dt = grid[i] - grid[i - 1];
                    levels[i] = levels[i - 1] + std::pow(s.c * dt, 1.0 / s.alpha) * sample_positive_stable(s.alpha, u, e);
                }
                return SubordinatorPath(spec.kappa, std::move(grid), std::move(levels), {});
            },
            [&](const CompoundExpJumps& s) {
                std::poisson_distribution<long> count(s.rate * horizon);
                std::uniform_real_distribution<double> when(0.0, horizon);
                std::exponential_distribution<double> size(1.0 / s.mean);
                const long n = count(engine);
                std::vector<Jump> jumps;
                jumps.reserve(static_cast<std::size_t>(n));
                for (long k = 0; k < n; ++k) {
                    double t = when(engine);
                    while (t <= 0.0) t = when(engine);
                    double x = size(engine);
                    while (x <= 0.0) x = size(engine);
                    jumps.push_back({t, x});
                }
                return SubordinatorPath::from_jumps(spec.kappa, horizon, grid_step, std::move(jumps));
            },
            [&](const PointMassJumps& s) {
                std::poisson_distribution<long> count(s.rate * horizon);
                std::uniform_real_distribution<double> when(0.0, horizon);
                const long n = count(engine);
                std::vector<Jump> jumps;
                jumps.reserve(static_cast<std::size_t>(n));
                for (long k = 0; k < n; ++k) {
                    double t = when(engine);
                    while (t <= 0.0) t = when(engine);
                    jumps.push_back({t, s.jump_size});
                }
                return SubordinatorPath::from_jumps(spec.kappa, horizon, grid_step, std::move(jumps));
            },
        },
        spec.levy);
}

// ---------------------------------------------------------------------------
// RegularizedPath
// ---------------------------------------------------------------------------

RegularizedPath::RegularizedPath(SubordinatorPath base, double epsilon) : base_(std::move(base)), epsilon_(epsilon) {
    if (!(epsilon_ > 0.0 && epsilon_ < 1.0)) throw std::domain_error("regularize: epsilon must lie in (0,1)");
    if (!(base_.horizon() > epsilon_)) throw std::domain_error("regularize: path too short for epsilon");
    const double end = horizon();
    for (double t : base_.grid()) {
        if (t >= end) break;
        grid_.push_back(t);
    }
    grid_.push_back(end);
    values_.reserve(grid_.size());
    derivatives_.reserve(grid_.size());
    for (double t : grid_) {
        values_.push_back(value(t));
        derivatives_.push_back(derivative(t));
    }
}

void RegularizedPath::check_time(double t) const {
    const double tol = 1e-12 * std::max(1.0, horizon());
    if (!(t >= -tol && t <= horizon() + tol)) throw std::domain_error("regularized path: time outside domain");
}

double RegularizedPath::value(double t) const {
    check_time(t);
    const double kappa = base_.kappa();
    // The kappa * s part of ell averages to kappa * (t + eps/2) exactly.
    const double jump_average =
        (base_.integral(t + epsilon_) - 0.5 * kappa * (t + epsilon_) * (t + epsilon_) -
         (base_.integral(t) - 0.5 * kappa * t * t)) /
        epsilon_;
    return kappa * (t + 0.5 * epsilon_) + jump_average + epsilon_ * t;
}

double RegularizedPath::derivative(double t) const {
    check_time(t);
    return base_.kappa() + (base_.jump_part(t + epsilon_) - base_.jump_part(t)) / epsilon_ + epsilon_;
}

double RegularizedPath::weighted_increment(double rate, double a, double b) const {
    check_time(a);
    check_time(b);
    const double drift = (base_.kappa() + epsilon_) * exp_integral(rate, a, b);
    const double ahead = base_.weighted_jump_part_integral(rate, epsilon_, a, b);
    const double here = base_.weighted_jump_part_integral(rate, 0.0, a, b);
    return drift + (ahead - here) / epsilon_;
}

RegularizedPath regularize(SubordinatorPath path, double epsilon) { return RegularizedPath(std::move(path), epsilon); }

double inverse_gamma(const RegularizedPath& reg, double v) {
    const double lo_value = reg.value(0.0);
    const double hi_value = reg.value(reg.horizon());
    if (!(v >= lo_value && v <= hi_value)) throw std::domain_error("inverse_gamma: v outside the range of ell^eps");
    if (v == lo_value) return 0.0;
    if (v == hi_value) return reg.horizon();
    const auto f = [&](double t) { return reg.value(t) - v; };
    const auto width_tol = [&](double a, double b) {
        return std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(a));
    };
    std::uintmax_t max_iter = 500;
    const auto [a, b] = boost::math::tools::toms748_solve(f, 0.0, reg.horizon(), lo_value - v, hi_value - v,
                                                          width_tol, max_iter);
    return std::abs(f(a)) <= std::abs(f(b)) ? a : b;
}

double stieltjes_weighted_integral(const SubordinatorPath& path, double K, double a, double b) {
    if (!(a < b)) throw std::domain_error("stieltjes: require a < b");
    if (a < 0.0) throw std::domain_error("stieltjes: require a >= 0");
    return path.weighted_increment(2.0 * K, a, b);
}

double stieltjes_weighted_integral(const RegularizedPath& path, double K, double a, double b) {
    if (!(a < b)) throw std::domain_error("stieltjes: require a < b");
    if (a < 0.0) throw std::domain_error("stieltjes: require a >= 0");
    return path.weighted_increment(2.0 * K, a, b);
}

double exp_integral(double rate, double a, double b) noexcept {
    const double width = b - a;
    if (std::abs(rate) < 1e-12) return std::exp(-rate * a) * width * (1.0 - 0.5 * rate * width);
    return std::exp(-rate * a) * -std::expm1(-rate * width) / rate;
}

double growth_factor(double K, double t) noexcept {
    if (std::abs(K) < 1e-12) return t * (1.0 + K * t);
    return std::expm1(2.0 * K * t) / (2.0 * K);
}

}  // namespace subharnack
