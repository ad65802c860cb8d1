#pragma once

#include <catch_amalgamated.hpp>

#include <vector>

#include "gop/errors.hpp"
#include "gop/market.hpp"

namespace test {

inline gop::ErrorCategory category_of(const auto& fn) {
  try {
    fn();
  } catch (const gop::Error& e) {
    return e.category();
  }
  FAIL("expected gop::Error");
  return gop::ErrorCategory::internal;
}

inline gop::VolCurve flat_curve(double vol, double forward = 100.0, double maturity = 1.0) {
  std::vector<gop::VolQuote> q;
  for (double k : {40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0, 110.0, 120.0, 140.0, 160.0, 200.0, 250.0}) {
    q.push_back({k * forward / 100.0, vol});
  }
  return gop::VolCurve(maturity, forward, std::move(q));
}

// Same quotes as data/skew_curve.csv: 0.2 - 0.06 tanh(ln(K/F) / 0.4), rounded.
// The wings flatten out, so flat extrapolation adds no kink.
inline gop::VolCurve skew_curve() {
  return gop::VolCurve(1.0, 100.0,
                       {{40, 0.2588},  {50, 0.2564},  {60, 0.2513},  {70, 0.2427},  {80, 0.2304},  {90, 0.2154},
                        {95, 0.2077},  {100, 0.2},    {105, 0.1927}, {110, 0.186},  {120, 0.1744}, {130, 0.1655},
                        {140, 0.1588}, {160, 0.1504}, {180, 0.146},  {200, 0.1436}, {250, 0.1412}});
}

inline gop::VolCurve smile_curve() {
  return gop::VolCurve(0.5, 50.0,
                       {{20, 0.45}, {30, 0.33}, {40, 0.26}, {50, 0.24}, {60, 0.25}, {75, 0.29}, {100, 0.34}});
}

}  // namespace test
