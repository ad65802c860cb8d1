#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gop/density.hpp"
#include "gop/errors.hpp"
#include "gop/market.hpp"

namespace gop {

/// Multiplies the forward by exp(delta * T); quotes are untouched.
struct DriftShift {
  double delta = 0.0;
};

/// Adds v (in vol units, 0.01 = one vol point) to every quote.
struct VolShift {
  double v = 0.0;
};

/// Scales each quote's distance from the at-the-money-forward vol by s.
struct SkewScale {
  double s = 1.0;
};

/// Gaussian weight w(K) = exp(-(K - center)^2 / (2 width^2)) that blends the
/// viewed vol with the market vol, so the view fades out in the wings.
struct Localization {
  double center = 0.0;
  double width = 1.0;

  double weight(double strike) const noexcept {
    const double z = (strike - center) / width;
    return std::exp(-0.5 * z * z);
  }
};

using ViewKind = std::variant<DriftShift, VolShift, SkewScale>;

struct ViewSpec {
  ViewKind kind;
  std::optional<Localization> localization;
};

inline VolCurve apply_view(const VolCurve& curve, const ViewSpec& view) {
  if (view.localization) {
    detail::require(view.localization->width > 0.0 && std::isfinite(view.localization->width),
                    ErrorCategory::argument, "view localization width must be positive");
  }

  if (const auto* drift = std::get_if<DriftShift>(&view.kind)) {
    // A forward shift has no strike dependence to localise.
    detail::require(!view.localization, ErrorCategory::argument, "drift_shift cannot be localized");
    return curve.with_forward(curve.forward() * std::exp(drift->delta * curve.maturity()));
  }

  const auto quotes = curve.quotes();
  std::vector<double> vols(quotes.size());
  if (const auto* shift = std::get_if<VolShift>(&view.kind)) {
    for (std::size_t j = 0; j < quotes.size(); ++j) vols[j] = quotes[j].vol + shift->v;
  } else {
    const double s = std::get<SkewScale>(view.kind).s;
    detail::require(s >= 0.0 && std::isfinite(s), ErrorCategory::argument, "skew_scale must be non-negative");
    const double atm = curve.vol_at(curve.forward());
    for (std::size_t j = 0; j < quotes.size(); ++j) vols[j] = atm + s * (quotes[j].vol - atm);
  }

  if (view.localization) {
    for (std::size_t j = 0; j < quotes.size(); ++j) {
      const double w = view.localization->weight(quotes[j].strike);
      vols[j] = w * vols[j] + (1.0 - w) * quotes[j].vol;
    }
  }

  for (std::size_t j = 0; j < vols.size(); ++j) {
    if (!(vols[j] > 0.0) || !(vols[j] < 5.0)) {
      detail::fail(ErrorCategory::infeasible_view,
                   "view produces vol " + std::to_string(vols[j]) + " at strike " +
                       std::to_string(quotes[j].strike));
    }
  }
  return curve.with_vols(vols);
}

/// Applies views left to right to the market curve, then extracts one density.
inline Density believed_density(const VolCurve& market_curve, std::span<const ViewSpec> views,
                                const Grid& grid) {
  VolCurve curve = market_curve;
  for (const ViewSpec& v : views) curve = apply_view(curve, v);
  return implied_density(curve, grid);
}

}  // namespace gop
