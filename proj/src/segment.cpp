#include "subharnack/segment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace subharnack {

namespace {

std::vector<double> uniform_delay_grid(double r0, std::size_t intervals) {
    if (r0 == 0.0) return {0.0};
    if (intervals == 0) throw std::invalid_argument("segment: need at least one interval");
    std::vector<double> grid(intervals + 1);
    for (std::size_t j = 0; j <= intervals; ++j)
        grid[j] = -r0 + r0 * static_cast<double>(j) / static_cast<double>(intervals);
    grid.front() = -r0;
    grid.back() = 0.0;
    return grid;
}

// Index of the sample in force at time t (right-continuous step function).
std::size_t step_index(std::span<const double> times, double t) {
    const double span = times.back() - times.front();
    const double tol = 1e-12 * std::max(1.0, std::abs(span) + std::abs(times.back()));
    const auto it = std::upper_bound(times.begin(), times.end(), t + tol);
    if (it == times.begin()) return 0;
    return static_cast<std::size_t>(std::distance(times.begin(), it)) - 1;
}

}  // namespace

Segment::Segment(double r0, std::size_t dim, std::vector<double> grid, std::vector<double> values)
    : r0_(r0), dim_(dim), grid_(std::move(grid)), values_(std::move(values)) {
    if (!std::isfinite(r0_) || r0_ < 0.0) throw std::invalid_argument("segment: r0 must be >= 0");
    if (dim_ == 0) throw std::invalid_argument("segment: dimension must be positive");
    if (grid_.empty() || values_.size() != grid_.size() * dim_)
        throw std::invalid_argument("segment: values must hold grid.size() * dim entries");
    if (grid_.front() != -r0_ || grid_.back() != 0.0)
        throw std::invalid_argument("segment: grid must span exactly [-r0, 0]");
    if (r0_ == 0.0 && grid_.size() != 1) throw std::invalid_argument("segment: r0 = 0 means a single point");
    for (std::size_t j = 1; j < grid_.size(); ++j) {
        if (!(grid_[j] > grid_[j - 1])) throw std::invalid_argument("segment: grid must be strictly increasing");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw std::invalid_argument("segment: values must be finite");
    }
}

Segment Segment::from_function(double r0, std::size_t dim, std::size_t intervals,
                               const std::function<void(double, std::span<double>)>& fn) {
    std::vector<double> grid = uniform_delay_grid(r0, intervals);
    std::vector<double> values(grid.size() * dim);
    for (std::size_t j = 0; j < grid.size(); ++j) fn(grid[j], std::span(values).subspan(j * dim, dim));
    return Segment(r0, dim, std::move(grid), std::move(values));
}

Segment Segment::constant(double r0, std::size_t intervals, std::vector<double> value) {
    const std::size_t dim = value.size();
    return from_function(r0, dim, intervals, [&](double, std::span<double> out) {
        std::copy(value.begin(), value.end(), out.begin());
    });
}

Segment Segment::linear(double r0, std::size_t intervals, std::vector<double> at_zero, std::vector<double> slope) {
    if (at_zero.size() != slope.size()) throw std::invalid_argument("segment: slope dimension mismatch");
    return from_function(r0, at_zero.size(), intervals, [&](double s, std::span<double> out) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = at_zero[i] + s * slope[i];
    });
}

void Segment::evaluate(double s, std::span<double> out) const {
    const double tol = 1e-12 * std::max(1.0, r0_);
    if (!(s >= -r0_ - tol && s <= tol)) throw std::domain_error("segment: s outside [-r0, 0]");
    const auto p = point(step_index(grid_, s));
    std::copy(p.begin(), p.end(), out.begin());
}

Segment Segment::resample(std::size_t intervals) const {
    return from_function(r0_, dim_, intervals, [&](double s, std::span<double> out) { evaluate(s, out); });
}

Segment Segment::operator-(const Segment& other) const {
    if (grid_ != other.grid_ || dim_ != other.dim_) throw std::invalid_argument("segment: grids differ");
    std::vector<double> diff(values_.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = values_[i] - other.values_[i];
    return Segment(r0_, dim_, grid_, std::move(diff));
}

Segment Segment::scaled(double factor) const {
    std::vector<double> out(values_);
    for (double& v : out) v *= factor;
    return Segment(r0_, dim_, grid_, std::move(out));
}

double norm2(const SegmentView& xi) {
    const std::size_t n = xi.size();
    auto sq = [&](std::size_t j) {
        double s = 0.0;
        for (double v : xi.point(j)) s += v * v;
        return s;
    };
    double integral = 0.0;
    double prev = sq(0);
    for (std::size_t j = 1; j < n; ++j) {
        const double cur = sq(j);
        integral += 0.5 * (xi.times[j] - xi.times[j - 1]) * (prev + cur);
        prev = cur;
    }
    return std::sqrt(integral + sq(n - 1));
}

double distance2(const SegmentView& a, const SegmentView& b) {
    if (a.size() != b.size() || a.dim != b.dim) throw std::invalid_argument("distance2: grids differ");
    const std::size_t n = a.size();
    auto sq = [&](std::size_t j) {
        double s = 0.0;
        const auto pa = a.point(j);
        const auto pb = b.point(j);
        for (std::size_t i = 0; i < a.dim; ++i) s += (pa[i] - pb[i]) * (pa[i] - pb[i]);
        return s;
    };
    double integral = 0.0;
    double prev = sq(0);
    for (std::size_t j = 1; j < n; ++j) {
        const double cur = sq(j);
        integral += 0.5 * (a.times[j] - a.times[j - 1]) * (prev + cur);
        prev = cur;
    }
    return std::sqrt(integral + sq(n - 1));
}

Trajectory::Trajectory(double r0, std::size_t dim, std::size_t delay_steps, std::vector<double> grid,
                       std::vector<double> values)
    : r0_(r0), dim_(dim), delay_steps_(delay_steps), grid_(std::move(grid)), values_(std::move(values)) {
    if (dim_ == 0 || grid_.size() <= delay_steps_ || values_.size() != grid_.size() * dim_)
        throw std::invalid_argument("trajectory: inconsistent sizes");
    if (grid_.front() != -r0_ || grid_[delay_steps_] != 0.0)
        throw std::invalid_argument("trajectory: grid must start at -r0 and pass through 0");
}

SegmentView Trajectory::window(std::size_t k) const noexcept {
    const std::size_t first = k - delay_steps_;
    const std::size_t count = delay_steps_ + 1;
    return {std::span(grid_).subspan(first, count), std::span(values_).subspan(first * dim_, count * dim_), dim_};
}

void Trajectory::evaluate(double t, std::span<double> out) const {
    const double tol = 1e-12 * std::max(1.0, horizon() + r0_);
    if (!(t >= -r0_ - tol && t <= horizon() + tol)) throw std::domain_error("trajectory: time outside domain");
    const auto p = point(step_index(grid_, t));
    std::copy(p.begin(), p.end(), out.begin());
}

void Trajectory::write_csv(std::ostream& out) const {
    out << 't';
    for (std::size_t i = 1; i <= dim_; ++i) out << ",x_" << i;
    out << '\n';
    for (std::size_t k = 0; k < grid_.size(); ++k) {
        out << fmt::format("{}", grid_[k]);
        for (double v : point(k)) out << ',' << fmt::format("{}", v);
        out << '\n';
    }
}

Segment segment_at(const Trajectory& traj, double t) {
    const double step_tol = 1e-9 * (traj.horizon() + traj.r0()) / static_cast<double>(traj.grid().size());
    if (!(t >= -step_tol && t <= traj.horizon() + step_tol)) throw std::domain_error("segment_at: t outside [0, T]");
    const auto grid = traj.grid();
    const std::size_t m = traj.delay_steps();
    const auto it = std::lower_bound(grid.begin() + static_cast<std::ptrdiff_t>(traj.origin()), grid.end(), t - step_tol);
    if (it != grid.end() && std::abs(*it - t) <= step_tol) {
        const auto k = static_cast<std::size_t>(std::distance(grid.begin(), it));
        const SegmentView w = traj.window(k);
        std::vector<double> rel(m + 1);
        if (k == traj.origin()) {
            std::copy(grid.begin(), grid.begin() + static_cast<std::ptrdiff_t>(m + 1), rel.begin());
        } else {
            for (std::size_t j = 0; j <= m; ++j) rel[j] = w.relative_time(j);
            rel.front() = -traj.r0();
            rel.back() = 0.0;
        }
        return Segment(traj.r0(), traj.dim(), std::move(rel), {w.values.begin(), w.values.end()});
    }
    return Segment::from_function(traj.r0(), traj.dim(), std::max<std::size_t>(m, 1),
                                  [&](double s, std::span<double> out) { traj.evaluate(t + s, out); });
}

void write_segment_csv(const Segment& xi, std::ostream& out) {
    out << 's';
    for (std::size_t i = 1; i <= xi.dim(); ++i) out << ",x_" << i;
    out << '\n';
    for (std::size_t j = 0; j < xi.grid().size(); ++j) {
        out << fmt::format("{}", xi.grid()[j]);
        for (double v : xi.point(j)) out << ',' << fmt::format("{}", v);
        out << '\n';
    }
}

Segment read_segment_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("segment csv: cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    std::size_t columns = 0;
    std::vector<double> grid;
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (columns == 0) {
            if (cells.size() < 2 || cells.front() != "s")
                throw std::runtime_error(fmt::format("segment csv {}:{}: header must be s,x_1..x_d", path.string(), line_no));
            columns = cells.size();
            continue;
        }
        if (cells.size() != columns)
            throw std::runtime_error(fmt::format("segment csv {}:{}: expected {} columns", path.string(), line_no, columns));
        try {
            grid.push_back(std::stod(cells[0]));
            for (std::size_t c = 1; c < columns; ++c) values.push_back(std::stod(cells[c]));
        } catch (const std::exception&) {
            throw std::runtime_error(fmt::format("segment csv {}:{}: malformed number", path.string(), line_no));
        }
    }
    if (grid.empty()) throw std::runtime_error("segment csv " + path.string() + ": no data rows");
    const double r0 = -grid.front();
    return Segment(r0, columns - 1, std::move(grid), std::move(values));
}

}  // namespace subharnack
