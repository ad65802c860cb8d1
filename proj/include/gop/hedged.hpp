#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gop/density.hpp"
#include "gop/errors.hpp"
#include "gop/index.hpp"
#include "gop/normal.hpp"

namespace gop {

/// A payoff profile tabulated on a grid. Evaluation uses the local cubic
/// through the four nearest nodes, so cubic profiles are reproduced exactly
/// (including outside the grid, where the end cubic is extended).
class ProfileFn {
 public:
  ProfileFn(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    detail::require(values_.size() == grid_.size(), ErrorCategory::argument,
                    "profile values and grid differ in length");
    for (double v : values_) detail::require(std::isfinite(v), ErrorCategory::argument, "profile value not finite");
  }

  template <class F>
  static ProfileFn tabulate(const Grid& grid, F&& f) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = f(grid[i]);
    return ProfileFn(grid, std::move(v));
  }

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }

  double operator()(double s) const {
    const auto x = grid_.points();
    const std::size_t n = x.size();
    const std::size_t order = std::min<std::size_t>(4, n);
    const auto it = std::upper_bound(x.begin(), x.end(), s);
    const std::size_t right = static_cast<std::size_t>(it - x.begin());
    // Stencil of `order` nodes centred on the bracketing interval.
    std::size_t first = right >= order / 2 ? right - order / 2 : 0;
    first = std::min(first, n - order);
    double result = 0.0;
    for (std::size_t j = first; j < first + order; ++j) {
      double basis = 1.0;
      for (std::size_t k = first; k < first + order; ++k) {
        if (k != j) basis *= (s - x[k]) / (x[j] - x[k]);
      }
      result += basis * values_[j];
    }
    return result;
  }

  /// Largest grid spacing adjacent to s.
  double local_spacing(double s) const {
    const auto x = grid_.points();
    const auto it = std::upper_bound(x.begin(), x.end(), s);
    const std::size_t right = std::clamp<std::size_t>(static_cast<std::size_t>(it - x.begin()), 1, x.size() - 1);
    double h = x[right] - x[right - 1];
    if (right + 1 < x.size()) h = std::max(h, x[right + 1] - x[right]);
    if (right >= 2) h = std::max(h, x[right - 1] - x[right - 2]);
    return h;
  }

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Transition kernel used to value the profile before differentiating.
enum class GammaKernel {
  lognormal,  ///< S_T = S exp(K sqrt(t) Z - K^2 t / 2), dollar gamma = S^2 V'' / 2
  bachelier,  ///< S_T = S + K sqrt(t) Z with K in price units, gamma = V'' / 2
};

namespace detail {

inline constexpr double coverage_sds = 5.0;
inline constexpr double kernel_z_max = 10.0;
inline constexpr int kernel_nodes = 2001;

// E[profile(S_T)] by trapezoid quadrature in the standard normal variable.
inline double kernel_value(const ProfileFn& profile, double spot, double sd, GammaKernel kernel) {
  if (sd == 0.0) return profile(spot);
  const double dz = 2.0 * kernel_z_max / (kernel_nodes - 1);
  double sum = 0.0;
  for (int j = 0; j < kernel_nodes; ++j) {
    const double z = -kernel_z_max + dz * j;
    const double y = kernel == GammaKernel::lognormal ? spot * std::exp(sd * z - 0.5 * sd * sd) : spot + sd * z;
    const double w = (j == 0 || j == kernel_nodes - 1) ? 0.5 : 1.0;
    sum += w * norm_pdf(z) * profile(y);
  }
  return sum * dz;
}

}  // namespace detail

/// Half dollar gamma of the profile valued under the chosen kernel with
/// volatility hedge_vol over t_remaining; the second derivative is a central
/// difference of the kernel value in spot.
inline double dollar_gamma(const ProfileFn& profile, double spot, double hedge_vol, double t_remaining,
                           GammaKernel kernel = GammaKernel::lognormal) {
  const bool lognormal = kernel == GammaKernel::lognormal;
  detail::require(t_remaining > 0.0, ErrorCategory::argument, "dollar_gamma: t_remaining must be positive");
  detail::require(lognormal ? spot > 0.0 : std::isfinite(spot), ErrorCategory::argument,
                  "dollar_gamma: invalid spot");
  detail::require(lognormal ? hedge_vol > 0.0 : hedge_vol >= 0.0, ErrorCategory::argument,
                  "dollar_gamma: invalid hedge vol");

  const double sd = hedge_vol * std::sqrt(t_remaining);
  const double lo = lognormal ? spot * std::exp(-0.5 * sd * sd - detail::coverage_sds * sd)
                              : spot - detail::coverage_sds * sd;
  const double hi = lognormal ? spot * std::exp(-0.5 * sd * sd + detail::coverage_sds * sd)
                              : spot + detail::coverage_sds * sd;
  if (lo < profile.grid().front() || hi > profile.grid().back()) {
    detail::fail(ErrorCategory::coverage, "dollar_gamma: profile grid does not cover spot " + std::to_string(spot) +
                                              " to five standard deviations");
  }

  const double spread = lognormal ? spot * sd : sd;
  const double h = spread > 0.0 ? std::max(0.05 * spread, 1e-6 * std::max(1.0, std::abs(spot)))
                                : profile.local_spacing(spot);
  const double v_lo = detail::kernel_value(profile, spot - h, sd, kernel);
  const double v_mid = detail::kernel_value(profile, spot, sd, kernel);
  const double v_hi = detail::kernel_value(profile, spot + h, sd, kernel);
  const double second = (v_hi - 2.0 * v_mid + v_lo) / (h * h);
  return lognormal ? 0.5 * spot * spot * second : 0.5 * second;
}

/// Inputs of the delta-hedged P&L sum. fixings hold S_0..S_n; interval i runs
/// from fixing i to i+1 with realised vol realized_vols[i] over dts[i].
struct HedgedPnlSpec {
  double hedge_vol = 0.0;
  double maturity = 0.0;
  PathSample fixings{1.0, {}};
  std::vector<double> realized_vols;
  std::vector<double> dts;
  GammaKernel kernel = GammaKernel::lognormal;

  void validate() const {
    const bool lognormal = kernel == GammaKernel::lognormal;
    detail::require(lognormal ? hedge_vol > 0.0 : hedge_vol >= 0.0, ErrorCategory::argument,
                    "hedged P&L: invalid hedge vol");
    detail::require(realized_vols.size() == dts.size(), ErrorCategory::argument,
                    "hedged P&L: vols and dts differ in length");
    detail::require(fixings.levels().size() == realized_vols.size() + 1, ErrorCategory::argument,
                    "hedged P&L: need one more fixing than intervals");
    double elapsed = 0.0;
    for (std::size_t i = 0; i < dts.size(); ++i) {
      detail::require(realized_vols[i] >= 0.0, ErrorCategory::argument, "hedged P&L: negative realised vol");
      detail::require(dts[i] > 0.0, ErrorCategory::argument, "hedged P&L: dt must be positive");
      detail::require(maturity - elapsed > 0.0, ErrorCategory::argument,
                      "hedged P&L: maturity must exceed every hedge time");
      elapsed += dts[i];
    }
  }
};

/// Sum over hedge intervals of dollar_gamma(S_i) * (sigma_i^2 - K^2) * dt_i,
/// with gamma taken at the remaining time T - t_i.
inline double hedged_pnl(const ProfileFn& profile, const HedgedPnlSpec& spec) {
  spec.validate();
  const auto s = spec.fixings.levels();
  const double k2 = spec.hedge_vol * spec.hedge_vol;
  double elapsed = 0.0;
  std::vector<double> terms(spec.dts.size());
  for (std::size_t i = 0; i < spec.dts.size(); ++i) {
    const double g = dollar_gamma(profile, s[i], spec.hedge_vol, spec.maturity - elapsed, spec.kernel);
    const double v = spec.realized_vols[i];
    terms[i] = g * (v * v - k2) * spec.dts[i];
    elapsed += spec.dts[i];
  }
  return detail::stable_sum(terms);
}

/// Estimator sigma_i = |ln(S_{i+1} / S_i)| / sqrt(dt_i), one per interval.
inline std::vector<double> realized_vols(const PathSample& path, std::span<const double> dts) {
  const auto s = path.levels();
  detail::require(s.size() == dts.size() + 1, ErrorCategory::argument, "realized_vols: size mismatch");
  std::vector<double> out(dts.size());
  for (std::size_t i = 0; i < dts.size(); ++i) out[i] = std::abs(std::log(s[i + 1] / s[i])) / std::sqrt(dts[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Gamma swap / variance swap decomposition

struct GammaVarDecomposition {
  double alpha = 0.0;  ///< gamma-swap weight, 3 c3
  double beta = 0.0;   ///< variance-swap weight, -c2
  double c0 = 0.0, c1 = 0.0, c2 = 0.0, c3 = 0.0;
  double fit_residual = 0.0;  ///< width-weighted RMS of the cubic fit
};

/// Least-squares cubic through the profile. With zero hedge vol and Bachelier
/// dynamics the half gamma is 3 c3 S + c2, which splits the hedged P&L into
/// alpha * sum S sigma^2 dt - beta * sum sigma^2 dt.
inline GammaVarDecomposition cubic_decomposition(const ProfileFn& profile) {
  const Grid& grid = profile.grid();
  detail::require(grid.size() >= 4, ErrorCategory::argument, "cubic_decomposition: need at least four points");
  const double centre = 0.5 * (grid.front() + grid.back());
  const double half = 0.5 * (grid.back() - grid.front());

  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd a(n, 4);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double sw = std::sqrt(grid.widths()[ui]);
    const double u = (grid[ui] - centre) / half;
    a(i, 0) = sw;
    a(i, 1) = sw * u;
    a(i, 2) = sw * u * u;
    a(i, 3) = sw * u * u * u;
    rhs(i) = sw * profile.values()[ui];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-12);
  detail::require(qr.rank() == 4, ErrorCategory::rank_deficient, "cubic_decomposition: degenerate fit");
  const Eigen::Vector4d d = qr.solve(rhs);

  // Back to powers of x: u = (x - centre) / half.
  const double c = centre;
  const double h = half;
  GammaVarDecomposition out;
  out.c3 = d(3) / (h * h * h);
  out.c2 = d(2) / (h * h) - 3.0 * d(3) * c / (h * h * h);
  out.c1 = d(1) / h - 2.0 * d(2) * c / (h * h) + 3.0 * d(3) * c * c / (h * h * h);
  out.c0 = d(0) - d(1) * c / h + d(2) * c * c / (h * h) - d(3) * c * c * c / (h * h * h);
  out.alpha = 3.0 * out.c3;
  out.beta = -out.c2;

  const Eigen::VectorXd resid = a * d - rhs;
  double total_width = 0.0;
  for (double w : grid.widths()) total_width += w;
  out.fit_residual = std::sqrt(resid.squaredNorm() / total_width);
  return out;
}

struct SwapLegs {
  double gamma_swap = 0.0;     ///< sum S_i sigma_i^2 dt_i
  double variance_swap = 0.0;  ///< sum sigma_i^2 dt_i
};

inline SwapLegs swap_legs(const PathSample& fixings, std::span<const double> vols, std::span<const double> dts) {
  const auto s = fixings.levels();
  detail::require(vols.size() == dts.size() && s.size() == dts.size() + 1, ErrorCategory::argument,
                  "swap_legs: size mismatch");
  std::vector<double> g(dts.size()), v(dts.size());
  for (std::size_t i = 0; i < dts.size(); ++i) {
    v[i] = vols[i] * vols[i] * dts[i];
    g[i] = s[i] * v[i];
  }
  return {detail::stable_sum(g), detail::stable_sum(v)};
}

}  // namespace gop
