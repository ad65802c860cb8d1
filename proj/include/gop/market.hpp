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
#include "gop/normal.hpp"

namespace gop {

// ---------------------------------------------------------------------------
// Pricing terms

/// Discounting, market-maker commission and budget. The growth-optimal payoff
/// is scaled by normalization() = W / ((1 + c) * DF) so that its all-in cost
/// equals the budget.
class PricingTerms {
 public:
  PricingTerms() = default;
  PricingTerms(double discount_factor, double commission_rate, double budget = 1.0)
      : df_(discount_factor), commission_(commission_rate), budget_(budget) {
    detail::require(df_ > 0.0 && df_ <= 1.0, ErrorCategory::argument,
                    "discount factor must lie in (0, 1]");
    detail::require(commission_ >= 0.0 && std::isfinite(commission_), ErrorCategory::argument,
                    "commission rate must be non-negative");
    detail::require(budget_ > 0.0 && std::isfinite(budget_), ErrorCategory::argument,
                    "budget must be positive");
  }

  /// Builds terms from continuously compounded returns: DF = exp(-rfr), c = exp(cr) - 1.
  static PricingTerms from_rates(double rfr, double cr, double budget = 1.0) {
    return PricingTerms(std::exp(-rfr), std::expm1(cr), budget);
  }

  double discount_factor() const noexcept { return df_; }
  double commission_rate() const noexcept { return commission_; }
  double budget() const noexcept { return budget_; }

  double rfr() const noexcept { return -std::log(df_); }
  double cr() const noexcept { return std::log1p(commission_); }
  double normalization() const noexcept { return budget_ / ((1.0 + commission_) * df_); }

  friend bool operator==(const PricingTerms&, const PricingTerms&) = default;

 private:
  double df_ = 1.0;
  double commission_ = 0.0;
  double budget_ = 1.0;
};

/// Today's price of one unit paid in each bucket.
struct StatePrices {
  Grid grid;
  std::vector<double> q;
};

inline StatePrices state_prices(const Density& d, const PricingTerms& terms) {
  std::vector<double> q(d.mass().begin(), d.mass().end());
  for (double& v : q) v *= terms.discount_factor();
  return StatePrices{d.grid(), std::move(q)};
}

// ---------------------------------------------------------------------------
// Black pricing

namespace detail {

inline double black_undiscounted(double forward, double strike, double vol, double maturity, bool call) {
  const double sd = vol * std::sqrt(maturity);
  if (strike <= 0.0) return call ? forward - strike : 0.0;
  if (sd <= 0.0) return call ? std::max(forward - strike, 0.0) : std::max(strike - forward, 0.0);
  const double d1 = (std::log(forward / strike) + 0.5 * sd * sd) / sd;
  const double d2 = d1 - sd;
  if (call) return forward * norm_cdf(d1) - strike * norm_cdf(d2);
  return strike * norm_cdf(-d2) - forward * norm_cdf(-d1);
}

}  // namespace detail

/// Black call price on a forward, discounted with df.
inline double bs_call_price(double forward, double strike, double vol, double maturity, double df) {
  detail::require(forward > 0.0 && strike > 0.0 && vol > 0.0 && maturity > 0.0 && df > 0.0,
                  ErrorCategory::argument, "bs_call_price: inputs must be positive");
  detail::require(vol * std::sqrt(maturity) < 100.0, ErrorCategory::argument,
                  "bs_call_price: total volatility out of range");
  return df * detail::black_undiscounted(forward, strike, vol, maturity, true);
}

// ---------------------------------------------------------------------------
// Volatility curve

enum class WingExtrapolation {
  flat,    ///< boundary vol held constant outside the quotes
  linear,  ///< boundary slope continued, floored at min_wing_vol
};

inline constexpr double min_wing_vol = 0.01;

struct VolQuote {
  double strike = 0.0;
  double vol = 0.0;
  friend bool operator==(const VolQuote&, const VolQuote&) = default;
};

/// Implied vol against strike for a single maturity. Interpolation inside the
/// quoted range is monotone piecewise-cubic Hermite (Fritsch-Butland slopes),
/// which cannot overshoot the neighbouring quotes.
class VolCurve {
 public:
  VolCurve(double maturity, double forward, std::vector<VolQuote> quotes,
           WingExtrapolation wings = WingExtrapolation::flat)
      : maturity_(maturity), forward_(forward), quotes_(std::move(quotes)), wings_(wings) {
    detail::require(maturity_ > 0.0 && std::isfinite(maturity_), ErrorCategory::argument,
                    "vol curve maturity must be positive");
    detail::require(forward_ > 0.0 && std::isfinite(forward_), ErrorCategory::argument,
                    "vol curve forward must be positive");
    detail::require(quotes_.size() >= 3, ErrorCategory::argument, "vol curve needs at least three quotes");
    for (std::size_t i = 0; i < quotes_.size(); ++i) {
      detail::require(quotes_[i].strike > 0.0, ErrorCategory::argument, "vol quote strike must be positive");
      detail::require(quotes_[i].vol > 0.0 && quotes_[i].vol < 5.0, ErrorCategory::argument,
                      "vol quote outside (0, 5)");
      if (i > 0) {
        detail::require(quotes_[i].strike > quotes_[i - 1].strike, ErrorCategory::argument,
                        "vol quote strikes must be strictly increasing");
      }
    }
    slopes_ = hermite_slopes();
  }

  double maturity() const noexcept { return maturity_; }
  double forward() const noexcept { return forward_; }
  std::span<const VolQuote> quotes() const noexcept { return quotes_; }
  WingExtrapolation wings() const noexcept { return wings_; }

  VolCurve with_forward(double forward) const { return VolCurve(maturity_, forward, quotes_, wings_); }

  VolCurve with_vols(std::span<const double> vols) const {
    detail::require(vols.size() == quotes_.size(), ErrorCategory::argument, "with_vols: size mismatch");
    std::vector<VolQuote> q = quotes_;
    for (std::size_t i = 0; i < q.size(); ++i) q[i].vol = vols[i];
    return VolCurve(maturity_, forward_, std::move(q), wings_);
  }

  double vol_at(double strike) const {
    const std::size_t n = quotes_.size();
    if (strike <= quotes_.front().strike) return wing(0, strike);
    if (strike >= quotes_.back().strike) return wing(n - 1, strike);
    const auto it = std::upper_bound(quotes_.begin(), quotes_.end(), strike,
                                     [](double k, const VolQuote& q) { return k < q.strike; });
    const std::size_t k = static_cast<std::size_t>(it - quotes_.begin()) - 1;
    const double x0 = quotes_[k].strike;
    const double h = quotes_[k + 1].strike - x0;
    const double t = (strike - x0) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * quotes_[k].vol + h10 * h * slopes_[k] + h01 * quotes_[k + 1].vol + h11 * h * slopes_[k + 1];
  }

  friend bool operator==(const VolCurve& a, const VolCurve& b) {
    return a.maturity_ == b.maturity_ && a.forward_ == b.forward_ && a.quotes_ == b.quotes_ &&
           a.wings_ == b.wings_;
  }

 private:
  double wing(std::size_t end, double strike) const {
    const double v = quotes_[end].vol;
    if (wings_ == WingExtrapolation::flat) return v;
    return std::max(min_wing_vol, v + slopes_[end] * (strike - quotes_[end].strike));
  }

  std::vector<double> hermite_slopes() const {
    const std::size_t n = quotes_.size();
    std::vector<double> h(n - 1), delta(n - 1), d(n, 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      h[k] = quotes_[k + 1].strike - quotes_[k].strike;
      delta[k] = (quotes_[k + 1].vol - quotes_[k].vol) / h[k];
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (delta[k - 1] * delta[k] <= 0.0) continue;
      const double w1 = 2 * h[k] + h[k - 1];
      const double w2 = h[k] + 2 * h[k - 1];
      d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    return d;
  }

  // One-sided three-point estimate, clamped to keep the end interval monotone.
  static double end_slope(double h0, double h1, double d0, double d1) {
    double d = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0.0) return 0.0;
    if (d0 * d1 <= 0.0 && std::abs(d) > 3 * std::abs(d0)) return 3 * d0;
    return d;
  }

  double maturity_;
  double forward_;
  std::vector<VolQuote> quotes_;
  WingExtrapolation wings_;
  std::vector<double> slopes_;
};

inline double interpolate_vol(const VolCurve& curve, double strike) {
  detail::require(strike > 0.0, ErrorCategory::argument, "interpolate_vol: strike must be positive");
  return curve.vol_at(strike);
}

// ---------------------------------------------------------------------------
// Breeden-Litzenberger

/// Fraction of (absolute) finite-difference mass allowed to be negative before
/// the curve is rejected as arbitrageable.
inline constexpr double max_negative_mass_fraction = 0.01;

/// Risk-neutral density of the underlying at the curve's maturity, from the
/// second strike-derivative of undiscounted option prices on interpolated vols.
/// Out-of-the-money options are differenced on each side of the forward; the
/// linear parity term drops out of the second difference.
inline Density implied_density(const VolCurve& curve, const Grid& grid) {
  const auto quotes = curve.quotes();
  detail::require(grid.front() <= quotes.front().strike && grid.back() >= quotes.back().strike,
                  ErrorCategory::argument, "implied_density: grid must span the quoted strikes");

  const double fwd = curve.forward();
  const double t = curve.maturity();
  const auto price = [&](double k, bool call) {
    const double vol = k > 0.0 ? curve.vol_at(k) : curve.vol_at(quotes.front().strike);
    return detail::black_undiscounted(fwd, k, vol, t, call);
  };

  const std::size_t n = grid.size();
  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double k = grid[i];
    const double h_lo = i > 0 ? k - grid[i - 1] : grid[1] - grid[0];
    const double h_hi = i + 1 < n ? grid[i + 1] - k : grid[n - 1] - grid[n - 2];
    const bool call = k >= fwd;
    const double c_lo = price(k - h_lo, call);
    const double c_mid = price(k, call);
    const double c_hi = price(k + h_hi, call);
    const double pdf = 2.0 * ((c_hi - c_mid) / h_hi - (c_mid - c_lo) / h_lo) / (h_lo + h_hi);
    weights[i] = pdf * grid.widths()[i];
  }

  double positive = 0.0;
  double negative = 0.0;
  for (double w : weights) (w > 0.0 ? positive : negative) += std::abs(w);
  if (!(positive > 0.0) || negative > max_negative_mass_fraction * positive) {
    detail::fail(ErrorCategory::arbitrage,
                 "implied_density: curve implies butterfly arbitrage (negative mass fraction " +
                     std::to_string(positive > 0.0 ? negative / positive : 1.0) + ")");
  }
  for (double& w : weights) w = std::max(w, 0.0);
  return Density::from_weights(grid, std::move(weights));
}

}  // namespace gop
