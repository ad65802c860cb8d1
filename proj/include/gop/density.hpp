#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "gop/errors.hpp"
#include "gop/normal.hpp"

namespace gop {

namespace detail {

// Neumaier-compensated sum. Densities on fine grids carry thousands of
// buckets and several invariants are stated at 1e-12.
inline double stable_sum(std::span<const double> xs) noexcept {
  double sum = 0.0;
  double comp = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

inline constexpr double mass_tolerance = 1e-12;

}  // namespace detail

/// Strictly increasing abscissa with a positive bucket width attached to each
/// point. Widths are quadrature weights: a density's mass in bucket i is
/// approximately pdf(x_i) * w_i.
class Grid {
 public:
  Grid(std::vector<double> points, std::vector<double> widths)
      : points_(std::move(points)), widths_(std::move(widths)) {
    // A single bucket is allowed here (coarse-grained densities); the
    // abscissa-only constructors below need two points to derive widths.
    detail::require(!points_.empty(), ErrorCategory::argument, "grid needs at least one point");
    detail::require(points_.size() == widths_.size(), ErrorCategory::argument,
                    "grid points and widths differ in length");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      detail::require(std::isfinite(points_[i]), ErrorCategory::argument, "grid point is not finite");
      detail::require(widths_[i] > 0.0 && std::isfinite(widths_[i]), ErrorCategory::argument,
                      "grid width must be positive");
      if (i > 0) {
        detail::require(points_[i] > points_[i - 1], ErrorCategory::argument,
                        "grid points must be strictly increasing");
      }
    }
  }

  /// Trapezoid widths: half the distance to each neighbour.
  static Grid from_points(std::vector<double> points) {
    const std::size_t n = points.size();
    detail::require(n >= 2, ErrorCategory::argument, "grid needs at least two points");
    std::vector<double> widths(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double left = i > 0 ? points[i] - points[i - 1] : 0.0;
      const double right = i + 1 < n ? points[i + 1] - points[i] : 0.0;
      widths[i] = 0.5 * (left + right);
    }
    return Grid(std::move(points), std::move(widths));
  }

  std::size_t size() const noexcept { return points_.size(); }
  std::span<const double> points() const noexcept { return points_; }
  std::span<const double> widths() const noexcept { return widths_; }
  double operator[](std::size_t i) const { return points_[i]; }
  double front() const noexcept { return points_.front(); }
  double back() const noexcept { return points_.back(); }

  /// Edges of the buckets owned by each point: the two end points and the
  /// midpoints between neighbours (size() + 1 values).
  std::vector<double> bucket_edges() const {
    if (size() == 1) return {points_[0] - 0.5 * widths_[0], points_[0] + 0.5 * widths_[0]};
    std::vector<double> edges;
    edges.reserve(size() + 1);
    edges.push_back(points_.front());
    for (std::size_t i = 1; i < size(); ++i) edges.push_back(0.5 * (points_[i - 1] + points_[i]));
    edges.push_back(points_.back());
    return edges;
  }

  bool same_points(const Grid& other) const noexcept { return points_ == other.points_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::vector<double> points_;
  std::vector<double> widths_;
};

/// Uniform grid on [lo, hi]. End buckets get half the interior width.
inline Grid make_grid(double lo, double hi, std::size_t count) {
  detail::require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, ErrorCategory::argument,
                  "make_grid: need lo < hi");
  detail::require(count >= 2, ErrorCategory::argument, "make_grid: need count >= 2");
  const double h = (hi - lo) / static_cast<double>(count - 1);
  std::vector<double> points(count);
  std::vector<double> widths(count, h);
  for (std::size_t i = 0; i < count; ++i) points[i] = lo + h * static_cast<double>(i);
  points.back() = hi;
  widths.front() = widths.back() = 0.5 * h;
  return Grid(std::move(points), std::move(widths));
}

/// Probability mass per grid bucket; non-negative and summing to one.
class Density {
 public:
  Density(Grid grid, std::vector<double> mass) : grid_(std::move(grid)), mass_(std::move(mass)) {
    detail::require(mass_.size() == grid_.size(), ErrorCategory::argument,
                    "density mass and grid differ in length");
    for (double p : mass_) {
      detail::require(p >= 0.0 && std::isfinite(p), ErrorCategory::argument,
                      "density mass must be finite and non-negative");
    }
    detail::require(std::abs(detail::stable_sum(mass_) - 1.0) <= detail::mass_tolerance,
                    ErrorCategory::argument, "density mass must sum to one");
  }

  /// Rescales non-negative weights to unit total mass.
  static Density from_weights(Grid grid, std::vector<double> weights) {
    for (double w : weights) {
      detail::require(w >= 0.0 && std::isfinite(w), ErrorCategory::argument,
                      "density weights must be finite and non-negative");
    }
    const double total = detail::stable_sum(weights);
    detail::require(total > 0.0, ErrorCategory::domain, "density has no mass on the grid");
    for (double& w : weights) w /= total;
    return Density(std::move(grid), std::move(weights));
  }

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> mass() const noexcept { return mass_; }
  std::size_t size() const noexcept { return mass_.size(); }
  double operator[](std::size_t i) const { return mass_[i]; }

  friend bool operator==(const Density&, const Density&) = default;

 private:
  Grid grid_;
  std::vector<double> mass_;
};

// ---------------------------------------------------------------------------
// Parametric families

struct NormalFamily {
  double mean = 0.0;
  double stddev = 1.0;
};

/// ln X ~ N(mu, sigma^2).
struct LogNormalFamily {
  double mu = 0.0;
  double sigma = 1.0;
};

struct SkewNormalParams {
  double xi = 0.0;
  double location = 0.0;
  double scale = 1.0;
};

using Family = std::variant<NormalFamily, LogNormalFamily, SkewNormalParams>;

inline double skew_normal_pdf(double x, const SkewNormalParams& p) {
  detail::require(p.scale > 0.0 && std::isfinite(p.scale), ErrorCategory::argument,
                  "skew-normal scale must be positive");
  const double z = (x - p.location) / p.scale;
  return 2.0 * norm_pdf(z) * norm_cdf(p.xi * z) / p.scale;
}

inline double family_pdf(const Family& family, double x) {
  return std::visit(
      [x](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, NormalFamily>) {
          detail::require(f.stddev > 0.0, ErrorCategory::argument, "normal stddev must be positive");
          return norm_pdf((x - f.mean) / f.stddev) / f.stddev;
        } else if constexpr (std::is_same_v<F, LogNormalFamily>) {
          detail::require(f.sigma > 0.0, ErrorCategory::argument, "lognormal sigma must be positive");
          if (x <= 0.0) return 0.0;
          return norm_pdf((std::log(x) - f.mu) / f.sigma) / (f.sigma * x);
        } else {
          return skew_normal_pdf(x, f);
        }
      },
      family);
}

/// Midpoint-mass discretisation: p_i proportional to pdf(x_i) * w_i.
inline Density discretize(const Family& family, const Grid& grid) {
  std::vector<double> weights(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    weights[i] = family_pdf(family, grid[i]) * grid.widths()[i];
  }
  if (detail::stable_sum(weights) <= 0.0) {
    detail::fail(ErrorCategory::domain, "discretize: family has no mass on the grid");
  }
  return Density::from_weights(grid, std::move(weights));
}

// ---------------------------------------------------------------------------
// Moments

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
};

inline double mean(const Density& d) {
  std::vector<double> terms(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) terms[i] = d[i] * d.grid()[i];
  return detail::stable_sum(terms);
}

inline double variance(const Density& d) {
  const double mu = mean(d);
  std::vector<double> terms(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double dx = d.grid()[i] - mu;
    terms[i] = d[i] * dx * dx;
  }
  return detail::stable_sum(terms);
}

/// Mean, variance and third standardised moment. Throws a domain error when
/// the variance vanishes, since skewness is then undefined.
inline Moments moments(const Density& d) {
  Moments m;
  m.mean = mean(d);
  std::vector<double> second(d.size());
  std::vector<double> third(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double dx = d.grid()[i] - m.mean;
    second[i] = d[i] * dx * dx;
    third[i] = second[i] * dx;
  }
  m.variance = detail::stable_sum(second);
  if (!(m.variance > 0.0)) detail::fail(ErrorCategory::domain, "moments: zero variance, skewness undefined");
  m.skewness = detail::stable_sum(third) / std::pow(m.variance, 1.5);
  return m;
}

// ---------------------------------------------------------------------------
// Relative entropy

/// KL(p || q) in nats. Terms with p_i = 0 contribute nothing; p_i > 0 with
/// q_i = 0 is a non-equivalence error rather than +infinity.
inline double kl_divergence(const Density& p, const Density& q) {
  detail::require(p.grid().same_points(q.grid()), ErrorCategory::argument,
                  "kl_divergence: densities live on different grids");
  std::vector<double> terms(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) {
      detail::fail(ErrorCategory::non_equivalence,
                   "kl_divergence: reference has zero mass at bucket " + std::to_string(i) +
                       " where the other density does not");
    }
    terms[i] = p[i] * std::log(p[i] / q[i]);
  }
  // Gibbs: the exact value is non-negative, anything below zero is rounding.
  return std::max(0.0, detail::stable_sum(terms));
}

}  // namespace gop
