#pragma once

#include "subharnack/model.hpp"
#include "subharnack/segment.hpp"
#include "subharnack/solver.hpp"
#include "subharnack/stats.hpp"
#include "subharnack/subordinator.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace subharnack {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Thrown when a theorem bound is requested for a model whose constants have
/// not been checked.
class UntrustedModelError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// E (int_0^{T-r0} e^{-2Kt} dS(t))^{-1}.
struct MomentEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
    /// The integral vanishes with positive probability (kappa = 0 and finite
    /// activity, or no jumps at all): the moment is +infinity.
    bool infinite_with_positive_probability = false;
    /// Closed form was used (deterministic subordinator).
    bool exact = false;
};

/// Reciprocal Stieltjes integrals 1 / int_0^{T-r0} e^{-2Kt} dS(t) on n_paths
/// sampled subordinator paths; path i uses derive_seed(seed, subordinator, i).
std::vector<double> reciprocal_integrals(const BernsteinSpec& spec, double K, double T, double r0,
                                         std::size_t n_paths, std::uint64_t seed, double grid_step, Exec exec = {});

MomentEstimate moment_inverse_estimate(const BernsteinSpec& spec, double K, double T, double r0, std::size_t n_paths,
                                       std::uint64_t seed, double grid_step = 1.0 / 256.0, Exec exec = {});

/// A bound value with its Monte Carlo standard error; +infinity when vacuous.
struct BoundValue {
    double value = 0.0;
    double std_error = 0.0;
    bool vacuous = false;
};

/// |xi(0)-eta(0)|^2 times the moment plus (K1^2/kappa) times the delay energy,
/// with 1/0 = inf and 0 * inf = 0. The K1 term is exactly 0 when K1 = 0.
BoundValue log_harnack_bound(const ModelSpec& model, const Segment& xi, const Segment& eta, double T,
                             const BernsteinSpec& spec, const MomentEstimate& moment);
BoundValue log_harnack_bound(const ModelSpec& model, const Segment& xi, const Segment& eta, double T,
                             const BernsteinSpec& spec, std::size_t n_paths, std::uint64_t seed,
                             double grid_step = 1.0 / 256.0, Exec exec = {});

struct TailReport {
    /// Share of the Monte Carlo sum carried by the largest sample.
    double max_share = 0.0;
    /// Estimates from the two halves of the sample.
    double first_half = 0.0;
    double second_half = 0.0;
    bool diverged = false;
};

struct PowerFactor {
    BoundValue factor;
    /// E exp[(p/(p-1)^2) |xi(0)-eta(0)|^2 / I], before the (p-1)-th power.
    Estimate exponential_moment;
    /// (p/(p-1)) (K1^2/kappa) times the delay energy.
    double delay_exponent = 0.0;
    TailReport tail;
};

/// (E exp[(p/(p-1)^2) |xi(0)-eta(0)|^2 / I])^{p-1} exp[(p/(p-1)) (K1^2/kappa) E].
/// Reported as +infinity when the exponential moment looks divergent (a
/// non-finite sample, or one sample carrying more than half of the sum).
PowerFactor power_harnack_factor(const ModelSpec& model, const Segment& xi, const Segment& eta, double T, double p,
                                 const BernsteinSpec& spec, std::size_t n_paths, std::uint64_t seed,
                                 double grid_step = 1.0 / 256.0, Exec exec = {});

/// Right-hand side of the density-ratio bound: same exponential moment without
/// the outer power, times exp[(p/(p-1)^2) (K1^2/kappa) E].
BoundValue density_ratio_rhs(const ModelSpec& model, const Segment& xi, const Segment& eta, double T, double p,
                             const BernsteinSpec& spec, std::size_t n_paths, std::uint64_t seed,
                             double grid_step = 1.0 / 256.0, Exec exec = {});

struct VerificationReport {
    std::string name;
    double lhs = 0.0;
    double lhs_se = 0.0;
    double rhs = 0.0;
    double rhs_se = 0.0;
    double margin = 0.0;
    double margin_se = 0.0;
    bool pass = false;
    bool vacuous = false;
    std::map<std::string, std::string> metadata;
};

/// margin = rhs - lhs; pass iff vacuous or margin >= -3 * combined stderr.
VerificationReport make_report(std::string name, double lhs, double lhs_se, double rhs, double rhs_se, bool vacuous);

struct McParams {
    std::size_t n_outer = 200;
    std::size_t n_inner = 500;
    /// Subordinator paths for the moment terms.
    std::size_t n_moment = 20000;
    std::uint64_t seed = 1;
    SolverConfig solver{};
};

/// Built-in payoffs. Names: "one_plus_square" 1 + |s(0)|^2, "gauss_bump"
/// 1 + exp(-|s(0)|^2), "tanh_plus_one" 1 + tanh(s(0)_1), "one_plus_energy"
/// 1 + ||s||_2^2, "constant" (uses `value`). Throws std::invalid_argument on
/// an unknown name.
Payoff make_payoff(const std::string& name, double value = 1.0);
/// Payoffs bounded below by 1 (usable in the log-Harnack check).
bool payoff_at_least_one(const std::string& name, double value = 1.0);

/// Reports from precomputed semigroup estimates; used when several checks share
/// the same simulations.
VerificationReport log_harnack_report(const SemigroupEstimate& log_f_from_eta, const SemigroupEstimate& f_from_xi,
                                      const BoundValue& bound);
VerificationReport power_harnack_report(const SemigroupEstimate& f_from_eta, const SemigroupEstimate& fp_from_xi,
                                        double p, const BoundValue& factor);

/// P_T log f(eta) <= log P_T f(xi) + bound. `f` must be >= 1 on every sample
/// (std::invalid_argument otherwise).
VerificationReport verify_log_harnack(const ModelSpec& model, const Segment& xi, const Segment& eta, const Payoff& f,
                                      double T, const BernsteinSpec& spec, const McParams& mc);

/// (P_T f)^p(eta) <= P_T f^p(xi) * factor, p > 1, f >= 0.
VerificationReport verify_power_harnack(const ModelSpec& model, const Segment& xi, const Segment& eta,
                                        const Payoff& f, double T, double p, const BernsteinSpec& spec,
                                        const McParams& mc);

struct TvReport {
    VerificationReport pinsker;
    /// Binned total variation of the first coordinate of X(T).
    double tv = 0.0;
    double tv_se = 0.0;
    BoundValue bound;
    /// Right-hand side of the density-ratio bound (no left-hand estimate).
    BoundValue density_ratio_rhs;
};

/// Binned TV between two samples on shared equal-width bins spanning the
/// pooled range, with a cluster-level delta-method standard error (each
/// inner vector is one cluster).
std::pair<double, double> binned_tv(const std::vector<std::vector<double>>& a,
                                    const std::vector<std::vector<double>>& b, std::size_t n_bins);

/// 2 * TV^2 <= log-Harnack bound, via the binned marginal of X(T)_1.
TvReport entropy_tv_report(const ModelSpec& model, const Segment& xi, const Segment& eta, double T,
                           const BernsteinSpec& spec, const McParams& mc, std::size_t n_bins, double p = 2.0);

struct ScalingReport {
    std::vector<double> horizons;  // T - r0
    std::vector<double> moment;
    std::vector<double> moment_se;
    double slope = 0.0;
    double intercept = 0.0;
    double target_slope = 0.0;
    /// m * kappa * (T - r0) per horizon (drift regime).
    std::vector<double> drift_products;
    bool drift_regime = false;
    bool pass = false;
};

/// m(T) = E (S(T - r0))^{-1} on the given horizons, and the least-squares
/// slope of log m against log(T - r0). With kappa = 0 the slope must be
/// -1/alpha within 0.15; with kappa > 0 each m kappa (T - r0) must lie in
/// [0.5, 1]. Requires K = 0 and a stable Levy part.
ScalingReport stable_scaling_check(double K, const BernsteinSpec& spec, const std::vector<double>& horizons,
                                   std::size_t n_paths, std::uint64_t seed, double grid_step = 1.0 / 256.0,
                                   Exec exec = {});

}  // namespace subharnack
