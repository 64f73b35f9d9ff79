#pragma once

#include "subharnack/model.hpp"
#include "subharnack/segment.hpp"
#include "subharnack/solver.hpp"
#include "subharnack/subordinator.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace subharnack {

/// lambda(t) = e^{-Kt} / int_0^{T-r0} e^{-2Ks} dell^eps(s).
/// Throws std::domain_error unless T > r0 and t >= 0.
double lambda_weight(double K, const RegularizedPath& reg, double T, double r0, double t);

/// Gamma(t) = e^{Kt} int_t^{T-r0} e^{-2Ks} dell^eps / int_0^{T-r0} e^{-2Ks} dell^eps,
/// and 0 for t >= T - r0.
double gamma_factor(double K, const RegularizedPath& reg, double T, double r0, double t);

/// r0 ||xi - eta||_2^2 + (T + 1) (e^{2K(T-r0)} - 1)/(2K) |xi(0) - eta(0)|^2,
/// the bound on int_0^T ||X_t - Y_t||_2^2 dt. Segments on different grids are
/// compared after resampling onto a common fine grid.
double delay_energy_bound(const ModelSpec& model, const Segment& xi, const Segment& eta, double T);

/// Right-hand side of the pathwise bound on <M>, with kappa taken from the
/// clock. +infinity when kappa = 0 and K1 > 0; the K1 term is exactly 0 when
/// K1 = 0.
double qv_bound(const ModelSpec& model, const Segment& xi, const Segment& eta, double T, const RegularizedPath& reg);

struct CouplingRecord {
    std::optional<Trajectory> X;
    std::optional<Trajectory> Y;
    double T = 0.0;
    double r0 = 0.0;
    double step = 0.0;
    /// Grid time at which Y was spliced onto X.
    double tau = 0.0;
    /// Meeting happened only because the deadline T - r0 was reached.
    bool forced = false;
    /// Times t_0..t_n on [0, T] with Gamma(t_k) and |X(t_k) - Y(t_k)|.
    std::vector<double> times;
    std::vector<double> gamma;
    std::vector<double> distance;
    double M_terminal = 0.0;
    double QV_terminal = 0.0;
    double log_R = 0.0;
    double R = 1.0;
    double qv_bound = 0.0;
    /// Discrete versions of the intermediate quantities:
    /// j1 = int ||X_t - Y_t||^2 / (ell^eps)' dt, j2 = int ||X_t - Y_t||^2 dt,
    /// push_qv = part of <M> coming from the coupling drift.
    double j1 = 0.0;
    double j2 = 0.0;
    double push_qv = 0.0;
    double j2_bound = 0.0;
    double kappa = 0.0;
    double K1 = 0.0;
    /// max_k |X(t_k) - Y(t_k)| - |xi(0) - eta(0)| Gamma(t_k) 1_{t_k <= T - r0}.
    double max_contraction_excess = 0.0;
    /// X_T and Y_T agree bit for bit.
    bool terminal_equal = false;

    double margin() const noexcept { return qv_bound - QV_terminal; }
    bool vacuous() const noexcept { return qv_bound == std::numeric_limits<double>::infinity(); }
};

/// Couples X from xi with Y from eta on the regularized clock, both driven by
/// the same Gaussian stream `seed`. Euler scheme for both; Y carries the
/// extra push |xi(0)-eta(0)| int lambda dell^eps along unit(X - Y) each step
/// and is spliced onto X once the gap falls below the push (or the deadline
/// T - r0 is reached). Y's delay term is B(X_t) throughout, so Y = X after
/// the splice. The Girsanov shift per step is
/// theta = (B(X_t) - B(Y_t)) h + push, giving
/// M = -sum <theta, dW> / dell, <M> = sum |theta|^2 / dell.
CouplingRecord run_coupling(const ModelSpec& model, const Segment& xi, const Segment& eta, const RegularizedPath& reg,
                            double T, std::uint64_t seed, const SolverConfig& config = {},
                            bool keep_trajectories = true);

inline double girsanov_log_density(const CouplingRecord& record) noexcept {
    return record.M_terminal - 0.5 * record.QV_terminal + 0.0;
}

}  // namespace subharnack
