#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gop/density.hpp"
#include "gop/errors.hpp"
#include "gop/market.hpp"

namespace gop {

/// Bucket edges e_0 < e_1 < ... < e_k. Bucket j is [e_j, e_{j+1}); the last
/// bucket also contains its right edge.
class BucketGrid {
 public:
  explicit BucketGrid(std::vector<double> edges) : edges_(std::move(edges)) {
    detail::require(edges_.size() >= 2, ErrorCategory::argument, "bucket grid needs at least two edges");
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      detail::require(std::isfinite(edges_[i]), ErrorCategory::argument, "bucket edge not finite");
      if (i > 0) {
        detail::require(edges_[i] > edges_[i - 1], ErrorCategory::argument,
                        "bucket edges must be strictly increasing");
      }
    }
  }

  /// The buckets each grid point owns (see Grid::bucket_edges).
  static BucketGrid matching(const Grid& grid) { return BucketGrid(grid.bucket_edges()); }

  std::span<const double> edges() const noexcept { return edges_; }
  std::size_t bucket_count() const noexcept { return edges_.size() - 1; }

  /// Bucket index containing x, or bucket_count() when x is outside.
  std::size_t locate(double x) const noexcept {
    if (x < edges_.front() || x > edges_.back()) return bucket_count();
    if (x == edges_.back()) return bucket_count() - 1;
    const auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
    return static_cast<std::size_t>(it - edges_.begin()) - 1;
  }

  Grid midpoint_grid() const {
    std::vector<double> mid(bucket_count()), width(bucket_count());
    for (std::size_t j = 0; j < bucket_count(); ++j) {
      mid[j] = 0.5 * (edges_[j] + edges_[j + 1]);
      width[j] = edges_[j + 1] - edges_[j];
    }
    return Grid(std::move(mid), std::move(width));
  }

  std::string describe(std::size_t j) const {
    return "bucket " + std::to_string(j) + " [" + std::to_string(edges_[j]) + ", " + std::to_string(edges_[j + 1]) +
           ")";
  }

 private:
  std::vector<double> edges_;
};

inline constexpr double max_uncovered_mass = 1e-9;

/// Sums grid masses into buckets; the result lives on the bucket midpoints.
inline Density coarse_grain(const Density& d, const BucketGrid& buckets) {
  std::vector<std::vector<double>> parts(buckets.bucket_count());
  std::vector<double> outside;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const std::size_t j = buckets.locate(d.grid()[i]);
    (j < parts.size() ? parts[j] : outside).push_back(d[i]);
  }
  const double uncovered = detail::stable_sum(outside);
  if (uncovered > max_uncovered_mass) {
    detail::fail(ErrorCategory::coverage,
                 "coarse_grain: buckets leave mass " + std::to_string(uncovered) + " uncovered");
  }
  std::vector<double> mass(parts.size());
  for (std::size_t j = 0; j < parts.size(); ++j) mass[j] = detail::stable_sum(parts[j]);
  if (uncovered == 0.0) return Density(buckets.midpoint_grid(), std::move(mass));
  return Density::from_weights(buckets.midpoint_grid(), std::move(mass));
}

enum class Verdict { safe, material };

inline constexpr std::string_view verdict_name(Verdict v) noexcept {
  return v == Verdict::safe ? "safe" : "material";
}

struct ModelRiskReport {
  double mrr = 0.0;
  double rfr = 0.0;
  double cr = 0.0;
  double er = 0.0;
  Verdict verdict = Verdict::safe;
  std::size_t bucket_count = 0;
  std::vector<double> per_bucket_contribution;

  /// The same verdict read off the expected return: ER below the risk-free return.
  bool er_below_rfr() const noexcept { return er < rfr; }
};

namespace detail {

inline std::vector<double> bucket_contributions(const Density& b, const Density& m, const BucketGrid& buckets) {
  std::vector<double> c(b.size(), 0.0);
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (b[j] == 0.0) continue;
    if (m[j] == 0.0) {
      fail(ErrorCategory::non_equivalence,
           "model risk: reference density has no mass in " + buckets.describe(j) + " but the other does");
    }
    c[j] = b[j] * std::log(b[j] / m[j]);
  }
  return c;
}

inline double coarse_mrr(const Density& b, const Density& m, const BucketGrid& buckets) {
  const Density cb = coarse_grain(b, buckets);
  const Density cm = coarse_grain(m, buckets);
  return std::max(0.0, stable_sum(bucket_contributions(cb, cm, buckets)));
}

}  // namespace detail

/// MRR = sum_j b_j ln(b_j / m_j) over buckets, ER = MRR + RFR - CR, and the
/// verdict "safe" exactly when MRR < CR.
inline ModelRiskReport model_risk_report(const Density& b, const Density& m, const BucketGrid& buckets,
                                         const PricingTerms& terms) {
  const Density cb = coarse_grain(b, buckets);
  const Density cm = coarse_grain(m, buckets);
  ModelRiskReport r;
  r.per_bucket_contribution = detail::bucket_contributions(cb, cm, buckets);
  r.mrr = std::max(0.0, detail::stable_sum(r.per_bucket_contribution));
  r.rfr = terms.rfr();
  r.cr = terms.cr();
  r.er = r.mrr + r.rfr - r.cr;
  r.verdict = r.mrr < r.cr ? Verdict::safe : Verdict::material;
  r.bucket_count = buckets.bucket_count();
  return r;
}

struct RefinementComparison {
  double mrr_coarse = 0.0;
  double mrr_fine = 0.0;
};

/// MRR at two nested bucket resolutions. Refinement can only reveal more
/// disagreement, so mrr_fine >= mrr_coarse (up to 1e-12).
inline RefinementComparison refine_and_compare(const Density& b, const Density& m, const BucketGrid& coarse,
                                               const BucketGrid& fine) {
  const auto fe = fine.edges();
  for (double e : coarse.edges()) {
    const double tol = 1e-12 * std::max(1.0, std::abs(e));
    const auto it = std::lower_bound(fe.begin(), fe.end(), e - tol);
    if (it == fe.end() || std::abs(*it - e) > tol) {
      detail::fail(ErrorCategory::argument,
                   "refine_and_compare: coarse edge " + std::to_string(e) + " is not a fine edge");
    }
  }
  RefinementComparison out{detail::coarse_mrr(b, m, coarse), detail::coarse_mrr(b, m, fine)};
  if (out.mrr_fine < out.mrr_coarse - 1e-12) {
    detail::fail(ErrorCategory::internal, "refine_and_compare: refinement lowered MRR");
  }
  return out;
}

}  // namespace gop
