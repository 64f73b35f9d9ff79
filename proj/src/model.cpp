#include "subharnack/model.hpp"

#include "subharnack/random.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace subharnack {

bool PointDrift::jacobian(std::span<const double>, std::span<double>) const { return false; }

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

class LinearDrift final : public PointDrift {
public:
    explicit LinearDrift(LinearDriftDesc desc) : dim_(desc.dim), matrix_(std::move(desc.matrix)) {}
    std::size_t dim() const noexcept override { return dim_; }
    void evaluate(std::span<const double> x, std::span<double> out) const override {
        for (std::size_t i = 0; i < dim_; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < dim_; ++j) acc += matrix_[i * dim_ + j] * x[j];
            out[i] = acc;
        }
    }
    bool jacobian(std::span<const double>, std::span<double> out) const override {
        std::copy(matrix_.begin(), matrix_.end(), out.begin());
        return true;
    }
    std::string describe() const override { return fmt::format("linear(d={})", dim_); }

private:
    std::size_t dim_;
    std::vector<double> matrix_;
};

class CubicDrift final : public PointDrift {
public:
    explicit CubicDrift(CubicDriftDesc desc) : desc_(desc) {}
    std::size_t dim() const noexcept override { return desc_.dim; }
    void evaluate(std::span<const double> x, std::span<double> out) const override {
        double sq = 0.0;
        for (std::size_t i = 0; i < desc_.dim; ++i) sq += x[i] * x[i];
        for (std::size_t i = 0; i < desc_.dim; ++i) out[i] = desc_.K * x[i] - desc_.a * x[i] * sq;
    }
    bool jacobian(std::span<const double> x, std::span<double> out) const override {
        const std::size_t d = desc_.dim;
        double sq = 0.0;
        for (std::size_t i = 0; i < d; ++i) sq += x[i] * x[i];
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                out[i * d + j] = -2.0 * desc_.a * x[i] * x[j] + (i == j ? desc_.K - desc_.a * sq : 0.0);
            }
        }
        return true;
    }
    std::string describe() const override {
        return fmt::format("cubic(d={},K={},a={})", desc_.dim, desc_.K, desc_.a);
    }

private:
    CubicDriftDesc desc_;
};

class CustomDrift final : public PointDrift {
public:
    CustomDrift(std::size_t dim, PointFn fn) : dim_(dim), fn_(std::move(fn)) {}
    std::size_t dim() const noexcept override { return dim_; }
    void evaluate(std::span<const double> x, std::span<double> out) const override { fn_(x, out); }
    std::string describe() const override { return "custom"; }

private:
    std::size_t dim_;
    PointFn fn_;
};

class ZeroDelay final : public SegmentDrift {
public:
    void evaluate(const SegmentView&, std::span<double> out) const override {
        std::fill(out.begin(), out.end(), 0.0);
    }
    bool is_zero() const noexcept override { return true; }
    std::string describe() const override { return "zero"; }
};

class IntegralDelay final : public SegmentDrift {
public:
    explicit IntegralDelay(IntegralDelayDesc desc) : desc_(desc) {}
    void evaluate(const SegmentView& xi, std::span<double> out) const override {
        const std::size_t d = xi.dim;
        const std::size_t n = xi.size();
        const auto now = xi.at_zero();
        for (std::size_t i = 0; i < d; ++i) out[i] = 0.0;
        // Composite trapezoid, matching the norm.
        for (std::size_t j = 1; j < n; ++j) {
            const double half = 0.5 * (xi.times[j] - xi.times[j - 1]);
            const double* lo = &xi.values[(j - 1) * d];
            const double* hi = &xi.values[j * d];
            for (std::size_t i = 0; i < d; ++i) out[i] += half * (lo[i] + hi[i]);
        }
        for (std::size_t i = 0; i < d; ++i) out[i] = desc_.c0 * now[i] + desc_.c1 * out[i];
    }
    std::string describe() const override { return fmt::format("integral(c0={},c1={})", desc_.c0, desc_.c1); }

private:
    IntegralDelayDesc desc_;
};

class CustomDelay final : public SegmentDrift {
public:
    explicit CustomDelay(SegmentFn fn) : fn_(std::move(fn)) {}
    void evaluate(const SegmentView& xi, std::span<double> out) const override { fn_(xi, out); }
    std::string describe() const override { return "custom"; }

private:
    SegmentFn fn_;
};

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Residual F(z) = (1 + eps K) z - eps b(z) - x of the resolvent equation.
void resolvent_residual(const PointDrift& drift, double K, double eps, std::span<const double> x,
                        std::span<const double> z, std::span<double> scratch, std::span<double> out) {
    drift.evaluate(z, scratch);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (1.0 + eps * K) * z[i] - eps * scratch[i] - x[i];
}

void numeric_jacobian(const PointDrift& drift, std::span<const double> x, std::span<double> out) {
    const std::size_t d = x.size();
    std::vector<double> xp(x.begin(), x.end());
    std::vector<double> fp(d);
    std::vector<double> fm(d);
    for (std::size_t j = 0; j < d; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
        xp[j] = x[j] + h;
        drift.evaluate(xp, fp);
        xp[j] = x[j] - h;
        drift.evaluate(xp, fm);
        xp[j] = x[j];
        for (std::size_t i = 0; i < d; ++i) out[i * d + j] = (fp[i] - fm[i]) / (2.0 * h);
    }
}

class YosidaDrift final : public PointDrift {
public:
    YosidaDrift(std::shared_ptr<const PointDrift> base, double K, double eps)
        : base_(std::move(base)), K_(K), eps_(eps) {}
    std::size_t dim() const noexcept override { return base_->dim(); }
    void evaluate(std::span<const double> x, std::span<double> out) const override {
        const std::size_t d = x.size();
        std::vector<double> z(d);
        yosida_resolvent(*base_, K_, eps_, x, z);
        for (std::size_t i = 0; i < d; ++i) out[i] = (z[i] - x[i]) / eps_ + K_ * x[i];
    }
    bool jacobian(std::span<const double> x, std::span<double> out) const override {
        // d z / d x = J_F(z)^{-1}, J_F = (1 + eps K) I - eps J_b.
        const std::size_t d = x.size();
        std::vector<double> z(d);
        yosida_resolvent(*base_, K_, eps_, x, z);
        Matrix jb(d, d);
        if (!base_->jacobian(z, {jb.data(), d * d})) numeric_jacobian(*base_, z, {jb.data(), d * d});
        const Matrix jf = (1.0 + eps_ * K_) * Matrix::Identity(d, d) - eps_ * jb;
        const Matrix jz = jf.inverse();
        const Matrix result = (jz - Matrix::Identity(d, d)) / eps_ + K_ * Matrix::Identity(d, d);
        std::copy(result.data(), result.data() + d * d, out.begin());
        return true;
    }
    std::string describe() const override { return fmt::format("yosida(eps={},{})", eps_, base_->describe()); }

private:
    std::shared_ptr<const PointDrift> base_;
    double K_;
    double eps_;
};

}  // namespace

ModelSpec make_model(const ModelDescriptor& desc) {
    if (!std::isfinite(desc.r0) || desc.r0 < 0.0) throw std::invalid_argument("model: r0 must be >= 0");
    ModelSpec model;
    model.r0 = desc.r0;
    std::visit(
        [&](const auto& drift) {
            using T = std::decay_t<decltype(drift)>;
            if (drift.dim == 0) throw std::invalid_argument("model: dimension must be positive");
            model.dim = drift.dim;
            if constexpr (std::is_same_v<T, LinearDriftDesc>) {
                if (drift.matrix.size() != drift.dim * drift.dim)
                    throw std::invalid_argument("model: linear drift matrix must be d x d");
                for (double v : drift.matrix) {
                    if (!std::isfinite(v)) throw std::invalid_argument("model: matrix entries must be finite");
                }
                const Eigen::Map<const Matrix> A(drift.matrix.data(), drift.dim, drift.dim);
                const Matrix sym = 0.5 * (A + A.transpose());
                Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
                model.K = solver.eigenvalues().maxCoeff();
                model.drift = std::make_shared<LinearDrift>(drift);
            } else {
                if (!(drift.a > 0.0) || !std::isfinite(drift.a))
                    throw std::invalid_argument("model: cubic drift needs a > 0");
                if (!std::isfinite(drift.K)) throw std::invalid_argument("model: cubic K must be finite");
                model.K = drift.K;
                model.drift = std::make_shared<CubicDrift>(drift);
            }
        },
        desc.drift);
    std::visit(
        [&](const auto& delay) {
            using T = std::decay_t<decltype(delay)>;
            if constexpr (std::is_same_v<T, ZeroDelayDesc>) {
                model.K1 = 0.0;
                model.delay = std::make_shared<ZeroDelay>();
            } else {
                if (!std::isfinite(delay.c0) || !std::isfinite(delay.c1))
                    throw std::invalid_argument("model: delay coefficients must be finite");
                // Cauchy-Schwarz over the pair (xi(0), xi on [-r0, 0]).
                model.K1 = std::sqrt(delay.c0 * delay.c0 + delay.c1 * delay.c1 * desc.r0);
                model.delay = std::make_shared<IntegralDelay>(delay);
            }
        },
        desc.delay);
    model.description = fmt::format("b={} B={} r0={}", model.drift->describe(), model.delay->describe(), model.r0);
    return model;
}

ModelSpec make_custom_model(std::size_t dim, double r0, PointFn b, SegmentFn B, double K, double K1) {
    if (dim == 0) throw std::invalid_argument("model: dimension must be positive");
    if (!(K1 >= 0.0)) throw std::invalid_argument("model: K1 must be >= 0");
    ModelSpec model;
    model.dim = dim;
    model.r0 = r0;
    model.K = K;
    model.K1 = K1;
    model.drift = std::make_shared<CustomDrift>(dim, std::move(b));
    if (B) {
        model.delay = std::make_shared<CustomDelay>(std::move(B));
    } else {
        model.delay = std::make_shared<ZeroDelay>();
    }
    model.constants_trusted = false;
    model.description = fmt::format("custom(d={},K={},K1={},r0={})", dim, K, K1, r0);
    return model;
}

HReport check_H(const ModelSpec& model, std::size_t n_pairs, double radius, std::uint64_t seed) {
    if (n_pairs == 0) throw std::invalid_argument("check_H: need at least one pair");
    const std::size_t d = model.dim;
    Engine engine = make_engine(derive_seed(seed, stream::probe, 0));
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> box(-radius, radius);

    auto ball_point = [&](std::span<double> out) {
        double len = 0.0;
        for (double& v : out) {
            v = normal(engine);
            len += v * v;
        }
        len = std::sqrt(len);
        const double r = radius * std::pow(unit(engine), 1.0 / static_cast<double>(d));
        for (double& v : out) v = len > 0.0 ? v / len * r : 0.0;
    };
    const std::size_t intervals = model.r0 > 0.0 ? 16 : 0;
    auto random_segment = [&] {
        return Segment::from_function(model.r0, d, intervals, [&](double, std::span<double> out) {
            for (double& v : out) v = box(engine);
        });
    };

    HReport report;
    report.pairs = n_pairs;
    report.max_violation_b = -std::numeric_limits<double>::infinity();
    report.max_violation_B = -std::numeric_limits<double>::infinity();
    std::vector<double> x(d), y(d), bx(d), by(d), diff(d), db(d);
    for (std::size_t k = 0; k < n_pairs; ++k) {
        ball_point(x);
        ball_point(y);
        model.b(x, bx);
        model.b(y, by);
        for (std::size_t i = 0; i < d; ++i) {
            diff[i] = x[i] - y[i];
            db[i] = bx[i] - by[i];
        }
        report.max_violation_b = std::max(report.max_violation_b, dot(diff, db) - model.K * dot(diff, diff));

        const Segment xi = random_segment();
        const Segment eta = random_segment();
        model.B(xi.view(), bx);
        model.B(eta.view(), by);
        for (std::size_t i = 0; i < d; ++i) db[i] = bx[i] - by[i];
        report.max_violation_B =
            std::max(report.max_violation_B, norm(db) - model.K1 * distance2(xi.view(), eta.view()));
    }
    return report;
}

ModelSpec with_checked_constants(ModelSpec model, const HReport& report) {
    model.constants_trusted = report.passes();
    return model;
}

void yosida_resolvent(const PointDrift& drift, double K, double epsilon, std::span<const double> x,
                      std::span<double> out) {
    const std::size_t d = x.size();
    const double scale = std::max(1.0, norm(x));
    constexpr int max_iter = 200;
    std::vector<double> z(x.begin(), x.end());
    std::vector<double> f(d), trial(d), f_trial(d), scratch(d);
    Matrix jb(d, d);

    resolvent_residual(drift, K, epsilon, x, z, scratch, f);
    double res = norm(f);
    bool newton_ok = true;
    for (int it = 0; it < max_iter && res > 1e-15 * scale; ++it) {
        if (!drift.jacobian(z, {jb.data(), d * d})) numeric_jacobian(drift, z, {jb.data(), d * d});
        const Matrix jf = (1.0 + epsilon * K) * Matrix::Identity(d, d) - epsilon * jb;
        const Vector step = jf.partialPivLu().solve(-Eigen::Map<const Vector>(f.data(), d));
        double t = 1.0;
        bool accepted = false;
        for (int half = 0; half < 40; ++half, t *= 0.5) {
            for (std::size_t i = 0; i < d; ++i) trial[i] = z[i] + t * step[i];
            resolvent_residual(drift, K, epsilon, x, trial, scratch, f_trial);
            const double r = norm(f_trial);
            if (std::isfinite(r) && r <= (1.0 - 1e-4 * t) * res) {
                z.swap(trial);
                f.swap(f_trial);
                res = r;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            newton_ok = res <= 1e-10 * scale;
            break;
        }
    }
    if (!newton_ok) {
        const double beta = epsilon / (1.0 + epsilon);
        for (int it = 0; it < 100 * max_iter && res > 1e-10 * scale; ++it) {
            for (std::size_t i = 0; i < d; ++i) z[i] -= beta * f[i];
            resolvent_residual(drift, K, epsilon, x, z, scratch, f);
            res = norm(f);
        }
    }
    if (!(res <= 1e-10 * scale))
        throw NumericalError(fmt::format("yosida resolvent did not converge (residual {})", res));
    std::copy(z.begin(), z.end(), out.begin());
}

ModelSpec yosida_approx(const ModelSpec& model, double epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::domain_error("yosida: epsilon must be > 0");
    ModelSpec out = model;
    out.drift = std::make_shared<YosidaDrift>(model.drift, model.K, epsilon);
    out.description = fmt::format("b={} B={} r0={}", out.drift->describe(), out.delay->describe(), out.r0);
    return out;
}

}  // namespace subharnack
