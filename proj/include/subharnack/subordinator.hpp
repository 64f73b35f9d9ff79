#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace subharnack {

// ---------------------------------------------------------------------------
// Bernstein functions
// ---------------------------------------------------------------------------

/// No jump part: the subordinator is the pure drift kappa * t.
struct NoJumps {};

/// alpha-stable Levy measure with Laplace exponent c * u^alpha.
struct StableJumps {
    double alpha = 0.5;
    double c = 1.0;
};

/// Compound Poisson jumps with exponentially distributed sizes.
struct CompoundExpJumps {
    double rate = 1.0;
    double mean = 1.0;
};

/// Compound Poisson jumps of a fixed size.
struct PointMassJumps {
    double rate = 1.0;
    double jump_size = 1.0;
};

using LevyMeasure = std::variant<NoJumps, StableJumps, CompoundExpJumps, PointMassJumps>;

/// Drift plus Levy measure; determines phi(u) = kappa u + int (1 - e^{-ux}) nu(dx).
struct BernsteinSpec {
    double kappa = 0.0;
    LevyMeasure levy = NoJumps{};

    /// Throws std::domain_error when a family constraint is violated.
    void validate() const;

    bool deterministic() const noexcept { return std::holds_alternative<NoJumps>(levy); }
    bool finite_activity() const noexcept {
        return std::holds_alternative<CompoundExpJumps>(levy) || std::holds_alternative<PointMassJumps>(levy);
    }
    /// int (1 ∧ x) nu(dx), in closed form per family.
    double levy_small_jump_mass() const;
    /// The same spec with kappa = 0.
    BernsteinSpec without_drift() const { return {0.0, levy}; }
    std::string describe() const;
};

/// Laplace exponent phi(u). Throws std::domain_error for u <= 0.
double phi_eval(const BernsteinSpec& spec, double u);

/// Exact draw of a one-sided standard stable variable Z with
/// E exp(-u Z) = exp(-u^alpha), via Kanter's representation.
double sample_positive_stable(double alpha, double uniform_angle, double exponential);

// ---------------------------------------------------------------------------
// Sample paths
// ---------------------------------------------------------------------------

struct Jump {
    double time = 0.0;
    double size = 0.0;
};

/// One nondecreasing cadlag path ell on [0, horizon]. Between grid points the
/// path is kappa * t plus a constant; all jumps sit on grid points. For finite
/// activity families the jump list is exact; stable increments are carried by
/// the grid values directly and the jump list is empty.
class SubordinatorPath {
public:
    /// Builds ell(grid[i]) = kappa * grid[i] + levels[i], where levels is the
    /// cumulative jump part. Validates the invariants (strictly increasing
    /// grid from 0, levels nondecreasing from 0, every jump positive and on the
    /// grid, level increments equal to the recorded jumps bit-exactly when a
    /// jump list is given); throws std::invalid_argument on violation.
    SubordinatorPath(double kappa, std::vector<double> grid, std::vector<double> levels, std::vector<Jump> jumps);

    /// Path kappa * t + sum of the given jumps on a uniform grid that also
    /// contains every jump time.
    static SubordinatorPath from_jumps(double kappa, double horizon, double grid_step, std::vector<Jump> jumps);

    double kappa() const noexcept { return kappa_; }
    double horizon() const noexcept { return grid_.back(); }
    std::span<const double> grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<const Jump> jumps() const noexcept { return jumps_; }
    /// Cumulative jump part at each grid point.
    std::span<const double> levels() const noexcept { return levels_; }

    /// ell(t), right-continuous. Throws std::domain_error outside [0, horizon].
    double value(double t) const;
    /// int_0^x ell(s) ds, exact for the path representation.
    double integral(double x) const;
    /// int_a^b e^{-rate t} dell(t) over (a, b]; exact for the representation.
    double weighted_increment(double rate, double a, double b) const;
    /// Jump part ell(t) - kappa t.
    double jump_part(double t) const;
    /// int_a^b e^{-rate t} (ell(t + shift) - kappa (t + shift)) dt, exact.
    double weighted_jump_part_integral(double rate, double shift, double a, double b) const;

private:
    std::size_t interval_index(double t) const;

    double kappa_;
    std::vector<double> grid_;
    std::vector<double> levels_;
    std::vector<double> values_;
    std::vector<Jump> jumps_;
    std::vector<double> integral_prefix_;  // int_0^{grid[i]} (ell - kappa t) dt
};

/// Samples ell on [0, horizon]. Stable increments are exact on the uniform
/// grid; compound Poisson families draw an exact Poisson count and insert the
/// jump times into the grid.
SubordinatorPath sample_path(const BernsteinSpec& spec, double horizon, double grid_step, std::uint64_t seed);

/// ell^eps(t) = (1/eps) int_t^{t+eps} ell(s) ds + eps t, with its derivative.
class RegularizedPath {
public:
    /// Throws std::domain_error unless 0 < epsilon < 1.
    RegularizedPath(SubordinatorPath base, double epsilon);

    double epsilon() const noexcept { return epsilon_; }
    const SubordinatorPath& base() const noexcept { return base_; }
    double kappa() const noexcept { return base_.kappa(); }
    /// Largest t at which ell^eps is defined: base horizon minus epsilon.
    double horizon() const noexcept { return base_.horizon() - epsilon_; }

    double value(double t) const;
    /// (ell(t + eps) - ell(t)) / eps + eps; strictly greater than kappa.
    double derivative(double t) const;
    /// int_a^b e^{-rate t} (ell^eps)'(t) dt, exact.
    double weighted_increment(double rate, double a, double b) const;

    /// Evaluation grid (base grid points within the horizon) and values there.
    std::span<const double> grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<const double> derivatives() const noexcept { return derivatives_; }

private:
    void check_time(double t) const;

    SubordinatorPath base_;
    double epsilon_;
    std::vector<double> grid_;
    std::vector<double> values_;
    std::vector<double> derivatives_;
};

RegularizedPath regularize(SubordinatorPath path, double epsilon);

/// gamma^eps(v): the unique t with ell^eps(t) = v, to 1e-10.
double inverse_gamma(const RegularizedPath& reg, double v);

/// int_a^b e^{-2Kt} dell(t). Throws std::domain_error unless a < b.
double stieltjes_weighted_integral(const SubordinatorPath& path, double K, double a, double b);
double stieltjes_weighted_integral(const RegularizedPath& path, double K, double a, double b);

/// int_a^b e^{-rate t} dt with the rate -> 0 limit.
double exp_integral(double rate, double a, double b) noexcept;

/// (e^{2Kt} - 1) / (2K), with the continuous limit t for |K| < 1e-12.
double growth_factor(double K, double t) noexcept;

}  // namespace subharnack
