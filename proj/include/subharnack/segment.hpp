#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace subharnack {

/// Non-owning view of a function on a window [now - r0, now]: ascending
/// sample times and row-major d-vectors. Between samples the function is
/// right-continuous piecewise constant; the last sample is the value "at 0".
struct SegmentView {
    std::span<const double> times;
    std::span<const double> values;
    std::size_t dim = 1;

    std::size_t size() const noexcept { return times.size(); }
    std::span<const double> point(std::size_t j) const noexcept { return values.subspan(j * dim, dim); }
    std::span<const double> at_zero() const noexcept { return point(size() - 1); }
    /// Sample time relative to the window end, in [-r0, 0].
    double relative_time(std::size_t j) const noexcept { return times[j] - times.back(); }
};

/// Element of the path space: a d-dimensional function on [-r0, 0].
class Segment {
public:
    /// grid must run from -r0 to 0 (a single point when r0 = 0) and be
    /// strictly increasing; values are row-major, grid.size() * dim.
    /// Throws std::invalid_argument otherwise.
    Segment(double r0, std::size_t dim, std::vector<double> grid, std::vector<double> values);

    /// Uniform grid with `intervals` pieces (ignored when r0 = 0).
    static Segment from_function(double r0, std::size_t dim, std::size_t intervals,
                                 const std::function<void(double, std::span<double>)>& fn);
    static Segment constant(double r0, std::size_t intervals, std::vector<double> value);
    /// xi(s) = at_zero + s * slope.
    static Segment linear(double r0, std::size_t intervals, std::vector<double> at_zero, std::vector<double> slope);

    double r0() const noexcept { return r0_; }
    std::size_t dim() const noexcept { return dim_; }
    std::span<const double> grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<const double> point(std::size_t j) const noexcept { return std::span(values_).subspan(j * dim_, dim_); }
    std::span<const double> at_zero() const noexcept { return point(grid_.size() - 1); }
    SegmentView view() const noexcept { return {grid_, values_, dim_}; }

    /// xi(s), right-continuous piecewise constant; exact at grid points.
    void evaluate(double s, std::span<double> out) const;
    /// The same function sampled on a uniform grid with `intervals` pieces.
    Segment resample(std::size_t intervals) const;

    /// Pointwise difference; grids must match exactly.
    Segment operator-(const Segment& other) const;
    Segment scaled(double factor) const;

    bool operator==(const Segment&) const = default;

private:
    double r0_;
    std::size_t dim_;
    std::vector<double> grid_;
    std::vector<double> values_;
};

/// sqrt( int_{-r0}^0 |xi(s)|^2 ds + |xi(0)|^2 ), composite trapezoid on the grid.
double norm2(const SegmentView& xi);
inline double norm2(const Segment& xi) { return norm2(xi.view()); }
/// ||a - b||_2 for views on matching grids.
double distance2(const SegmentView& a, const SegmentView& b);

/// Solution path on [-r0, T]: initial segment followed by solver output.
class Trajectory {
public:
    /// grid[0..delay_steps] is the initial window [-r0, 0]; grid.back() = T.
    Trajectory(double r0, std::size_t dim, std::size_t delay_steps, std::vector<double> grid,
               std::vector<double> values);

    double r0() const noexcept { return r0_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t delay_steps() const noexcept { return delay_steps_; }
    double horizon() const noexcept { return grid_.back(); }
    std::span<const double> grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<const double> point(std::size_t k) const noexcept { return std::span(values_).subspan(k * dim_, dim_); }
    /// Grid index of time 0.
    std::size_t origin() const noexcept { return delay_steps_; }

    /// Window ending at grid index k (which must be >= origin()).
    SegmentView window(std::size_t k) const noexcept;
    /// f(t), right-continuous piecewise constant.
    void evaluate(double t, std::span<double> out) const;

    void write_csv(std::ostream& out) const;

private:
    double r0_;
    std::size_t dim_;
    std::size_t delay_steps_;
    std::vector<double> grid_;
    std::vector<double> values_;
};

/// f_t(s) = f(t + s). Exact copy when t is a grid time; otherwise sampled on
/// the initial segment's uniform grid. Throws std::domain_error for t outside
/// [0, T].
Segment segment_at(const Trajectory& traj, double t);

/// CSV with header `s,x_1..x_d`.
void write_segment_csv(const Segment& xi, std::ostream& out);
Segment read_segment_csv(const std::filesystem::path& path);

}  // namespace subharnack
