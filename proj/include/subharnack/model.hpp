#pragma once

#include "subharnack/segment.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace subharnack {

/// Raised when an iterative solve fails to converge.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Point drift b : R^d -> R^d. Implementations must be pure.
class PointDrift {
public:
    virtual ~PointDrift() = default;
    virtual std::size_t dim() const noexcept = 0;
    virtual void evaluate(std::span<const double> x, std::span<double> out) const = 0;
    /// Row-major d x d Jacobian; false when the drift has none in closed form.
    virtual bool jacobian(std::span<const double> x, std::span<double> out) const;
    virtual std::string describe() const = 0;
};

/// Functional drift B : C -> R^d acting on a segment window.
class SegmentDrift {
public:
    virtual ~SegmentDrift() = default;
    virtual void evaluate(const SegmentView& xi, std::span<double> out) const = 0;
    virtual bool is_zero() const noexcept { return false; }
    virtual std::string describe() const = 0;
};

// Built-in families ----------------------------------------------------------

/// b(x) = A x, A row-major d x d.
struct LinearDriftDesc {
    std::size_t dim = 1;
    std::vector<double> matrix;
};

/// b(x) = K x - a x |x|^2, a > 0.
struct CubicDriftDesc {
    std::size_t dim = 1;
    double K = 0.0;
    double a = 1.0;
};

struct ZeroDelayDesc {};

/// B(xi) = c0 xi(0) + c1 int_{-r0}^0 xi(s) ds.
struct IntegralDelayDesc {
    double c0 = 0.0;
    double c1 = 0.0;
};

struct ModelDescriptor {
    double r0 = 0.0;
    std::variant<LinearDriftDesc, CubicDriftDesc> drift = LinearDriftDesc{};
    std::variant<ZeroDelayDesc, IntegralDelayDesc> delay = ZeroDelayDesc{};
};

/// Drift pair with the constants of the one-sided Lipschitz / Lipschitz
/// condition: <x-y, b(x)-b(y)> <= K|x-y|^2 and |B(xi)-B(eta)| <= K1 ||xi-eta||_2.
struct ModelSpec {
    std::size_t dim = 1;
    double r0 = 0.0;
    double K = 0.0;
    double K1 = 0.0;
    std::shared_ptr<const PointDrift> drift;
    std::shared_ptr<const SegmentDrift> delay;
    /// False for user callbacks until check_H has passed (or the caller overrides).
    bool constants_trusted = true;
    std::string description;

    void b(std::span<const double> x, std::span<double> out) const { drift->evaluate(x, out); }
    void B(const SegmentView& xi, std::span<double> out) const { delay->evaluate(xi, out); }
    bool delay_is_zero() const noexcept { return delay->is_zero(); }
};

/// Instantiates a built-in family with exact constants: K is the largest
/// eigenvalue of (A + A^T)/2 (resp. the cubic's K), K1 = sqrt(c0^2 + c1^2 r0).
/// Throws std::invalid_argument on a malformed descriptor.
ModelSpec make_model(const ModelDescriptor& desc);

using PointFn = std::function<void(std::span<const double>, std::span<double>)>;
using SegmentFn = std::function<void(const SegmentView&, std::span<double>)>;

/// User-supplied drifts with claimed constants; marked untrusted.
ModelSpec make_custom_model(std::size_t dim, double r0, PointFn b, SegmentFn B, double K, double K1);

struct HReport {
    double max_violation_b = 0.0;
    double max_violation_B = 0.0;
    std::size_t pairs = 0;

    bool passes(double tol = 1e-9) const noexcept { return max_violation_b <= tol && max_violation_B <= tol; }
};

/// Empirical check of the constants on random pairs in a ball of `radius`
/// and random segments with entries in [-radius, radius].
HReport check_H(const ModelSpec& model, std::size_t n_pairs, double radius, std::uint64_t seed);

/// Copy of `model` marked trusted if `report` passes at 1e-9.
ModelSpec with_checked_constants(ModelSpec model, const HReport& report);

/// Resolvent (id - eps * btilde)^{-1}(x) with btilde(x) = b(x) - K x, by
/// Newton with backtracking (Picard fallback). Throws NumericalError.
void yosida_resolvent(const PointDrift& drift, double K, double epsilon, std::span<const double> x,
                      std::span<double> out);

/// Model whose point drift is b^(eps)(x) = btilde^(eps)(x) + K x, where
/// btilde^(eps) = ((id - eps btilde)^{-1} - id) / eps. Same K, K1 and B.
ModelSpec yosida_approx(const ModelSpec& model, double epsilon);

}  // namespace subharnack
