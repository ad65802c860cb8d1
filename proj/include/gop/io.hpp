#pragma once

// File formats: CSV tables written with 17 significant digits (exact double
// round trip) and JSON documents via nlohmann::json.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "gop/density.hpp"
#include "gop/errors.hpp"
#include "gop/hedged.hpp"
#include "gop/index.hpp"
#include "gop/market.hpp"
#include "gop/model_risk.hpp"
#include "gop/payoff.hpp"
#include "gop/views.hpp"

namespace gop::io {

using json = nlohmann::json;

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// CSV plumbing

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t");
    const auto e = cell.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    gop::detail::fail(ErrorCategory::parse, "line " + std::to_string(line) + ": not a number: '" + s + "'");
  }
  return v;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) gop::detail::fail(ErrorCategory::io, "cannot open " + path);
  return in;
}

}  // namespace detail

/// Reads a numeric CSV whose header must equal `expected`.
inline CsvTable read_csv(std::istream& in, const std::vector<std::string>& expected) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) gop::detail::fail(ErrorCategory::parse, "empty CSV");
  t.header = detail::split_csv_line(line);
  if (t.header != expected) {
    std::string want;
    for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
    gop::detail::fail(ErrorCategory::parse, "CSV header must be '" + want + "'");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != expected.size()) {
      gop::detail::fail(ErrorCategory::parse, "line " + std::to_string(lineno) + ": expected " +
                                                  std::to_string(expected.size()) + " columns");
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(detail::parse_double(c, lineno));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline CsvTable read_csv_file(const std::string& path, const std::vector<std::string>& expected) {
  auto in = detail::open_in(path);
  try {
    return read_csv(in, expected);
  } catch (const Error& e) {
    gop::detail::fail(e.category(), path + ": " + e.what());
  }
}

inline json read_json_file(const std::string& path) {
  auto in = detail::open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    gop::detail::fail(ErrorCategory::parse, path + ": " + e.what());
  }
}

namespace detail {

template <class F>
auto parse_json(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    gop::detail::fail(ErrorCategory::parse, std::string(what) + ": " + e.what());
  }
}

inline std::vector<double> scalar_or_array(const json& j, std::size_t n) {
  if (j.is_array()) {
    auto v = j.get<std::vector<double>>();
    if (v.size() != n) gop::detail::fail(ErrorCategory::parse, "per-step array has the wrong length");
    return v;
  }
  return std::vector<double>(n, j.get<double>());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Density: x,mass

inline void write_density_csv(std::ostream& out, const Density& d) {
  out << "x,mass\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    out << format_double(d.grid()[i]) << ',' << format_double(d[i]) << '\n';
  }
}

/// Widths are not stored; the grid gets trapezoid widths from its points.
/// Masses that miss unit total by less than 1e-6 are renormalised.
inline Density read_density_csv(std::istream& in) {
  const CsvTable t = read_csv(in, {"x", "mass"});
  if (t.rows.size() < 2) gop::detail::fail(ErrorCategory::parse, "density CSV needs at least two rows");
  auto grid = Grid::from_points(t.column(0));
  auto mass = t.column(1);
  const double total = gop::detail::stable_sum(mass);
  if (std::abs(total - 1.0) <= gop::detail::mass_tolerance) return Density(std::move(grid), std::move(mass));
  if (std::abs(total - 1.0) > 1e-6) gop::detail::fail(ErrorCategory::parse, "density CSV mass does not sum to one");
  return Density::from_weights(std::move(grid), std::move(mass));
}

inline Density read_density_file(const std::string& path) {
  auto in = detail::open_in(path);
  try {
    return read_density_csv(in);
  } catch (const Error& e) {
    gop::detail::fail(e.category(), path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Vol curve: strike,vol plus {forward, maturity, discount_factor}

struct CurveMeta {
  double forward = 0.0;
  double maturity = 0.0;
  double discount_factor = 1.0;
};

inline CurveMeta parse_curve_meta(const json& j) {
  return detail::parse_json("curve metadata", [&] {
    CurveMeta m;
    m.forward = j.at("forward").get<double>();
    m.maturity = j.at("maturity").get<double>();
    m.discount_factor = j.value("discount_factor", 1.0);
    return m;
  });
}

inline VolCurve read_vol_curve(std::istream& in, const CurveMeta& meta,
                               WingExtrapolation wings = WingExtrapolation::flat) {
  const CsvTable t = read_csv(in, {"strike", "vol"});
  std::vector<VolQuote> quotes;
  for (const auto& r : t.rows) quotes.push_back({r[0], r[1]});
  return VolCurve(meta.maturity, meta.forward, std::move(quotes), wings);
}

inline VolCurve read_vol_curve_file(const std::string& path, const CurveMeta& meta,
                                    WingExtrapolation wings = WingExtrapolation::flat) {
  auto in = detail::open_in(path);
  try {
    return read_vol_curve(in, meta, wings);
  } catch (const Error& e) {
    gop::detail::fail(e.category(), path + ": " + e.what());
  }
}

inline void write_vol_curve_csv(std::ostream& out, const VolCurve& c) {
  out << "strike,vol\n";
  for (const auto& q : c.quotes()) out << format_double(q.strike) << ',' << format_double(q.vol) << '\n';
}

// ---------------------------------------------------------------------------
// Views: {"kind":"skew_scale","s":0.5,"localization":{"center":100,"width":10}}

inline ViewSpec parse_view(const json& j) {
  return detail::parse_json("view", [&] {
    const std::string kind = j.at("kind").get<std::string>();
    ViewSpec v;
    if (kind == "drift_shift") {
      v.kind = DriftShift{j.at("delta").get<double>()};
    } else if (kind == "vol_shift") {
      v.kind = VolShift{j.at("v").get<double>()};
    } else if (kind == "skew_scale") {
      v.kind = SkewScale{j.at("s").get<double>()};
    } else {
      gop::detail::fail(ErrorCategory::parse, "unknown view kind '" + kind + "'");
    }
    if (j.contains("localization") && !j.at("localization").is_null()) {
      const json& l = j.at("localization");
      v.localization = Localization{l.at("center").get<double>(), l.at("width").get<double>()};
    }
    return v;
  });
}

/// A single view object or an array of them.
inline std::vector<ViewSpec> parse_views(const json& j) {
  std::vector<ViewSpec> out;
  if (j.is_array()) {
    for (const auto& e : j) out.push_back(parse_view(e));
  } else {
    out.push_back(parse_view(j));
  }
  return out;
}

inline json to_json(const ViewSpec& v) {
  json j;
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, DriftShift>) {
          j["kind"] = "drift_shift";
          j["delta"] = k.delta;
        } else if constexpr (std::is_same_v<K, VolShift>) {
          j["kind"] = "vol_shift";
          j["v"] = k.v;
        } else {
          j["kind"] = "skew_scale";
          j["s"] = k.s;
        }
      },
      v.kind);
  if (v.localization) j["localization"] = {{"center", v.localization->center}, {"width", v.localization->width}};
  return j;
}

// ---------------------------------------------------------------------------
// Pricing terms: {"discount_factor":0.98,"commission_rate":0.01,"budget":1}

inline PricingTerms parse_terms(const json& j) {
  return detail::parse_json("pricing terms", [&] {
    return PricingTerms(j.value("discount_factor", 1.0), j.value("commission_rate", 0.0), j.value("budget", 1.0));
  });
}

// ---------------------------------------------------------------------------
// Dynamics: {"drift":0.05,"vol":0.2,"dt":0.003968,"steps":252}; per-step arrays allowed

inline DynamicsSpec parse_dynamics(const json& j) {
  return detail::parse_json("dynamics", [&] {
    std::size_t steps = 0;
    if (j.contains("steps")) {
      steps = j.at("steps").get<std::size_t>();
    } else {
      for (const char* key : {"drift", "vol", "dt"}) {
        if (j.at(key).is_array()) steps = j.at(key).size();
      }
    }
    if (steps == 0) gop::detail::fail(ErrorCategory::parse, "dynamics: cannot determine step count");
    return DynamicsSpec(detail::scalar_or_array(j.at("drift"), steps), detail::scalar_or_array(j.at("vol"), steps),
                        detail::scalar_or_array(j.at("dt"), steps));
  });
}

inline void write_index_csv(std::ostream& out, const IndexSeries& s) {
  out << "step,exact,first_order\n";
  for (std::size_t i = 0; i < s.exact.size(); ++i) {
    out << i << ',' << format_double(s.exact[i]) << ',';
    if (i < s.first_order.size()) out << format_double(s.first_order[i]);
    out << '\n';
  }
}

inline void write_kelly_csv(std::ostream& out, const std::vector<KellyRow>& rows) {
  out << "leverage,mean_log_growth,std_error,wipeouts\n";
  for (const auto& r : rows) {
    out << format_double(r.leverage) << ',' << format_double(r.mean_log_growth) << ','
        << format_double(r.std_error) << ',' << r.wipeouts << '\n';
  }
}

// ---------------------------------------------------------------------------
// Hedged P&L: profile x,value and
// {"fixings":[...],"vols":[...],"dts":[...]|"dt":x,"hedge_vol":0.2,"maturity":1,"kernel":"lognormal"}

inline ProfileFn read_profile(std::istream& in) {
  const CsvTable t = read_csv(in, {"x", "value"});
  if (t.rows.size() < 2) gop::detail::fail(ErrorCategory::parse, "profile CSV needs at least two rows");
  return ProfileFn(Grid::from_points(t.column(0)), t.column(1));
}

inline ProfileFn read_profile_file(const std::string& path) {
  auto in = detail::open_in(path);
  try {
    return read_profile(in);
  } catch (const Error& e) {
    gop::detail::fail(e.category(), path + ": " + e.what());
  }
}

inline void write_profile_csv(std::ostream& out, const ProfileFn& p) {
  out << "x,value\n";
  for (std::size_t i = 0; i < p.grid().size(); ++i) {
    out << format_double(p.grid()[i]) << ',' << format_double(p.values()[i]) << '\n';
  }
}

inline GammaKernel parse_kernel(const std::string& s) {
  if (s == "lognormal") return GammaKernel::lognormal;
  if (s == "bachelier") return GammaKernel::bachelier;
  gop::detail::fail(ErrorCategory::parse, "unknown kernel '" + s + "'");
}

inline HedgedPnlSpec parse_hedged_spec(const json& j) {
  return detail::parse_json("hedged P&L spec", [&] {
    HedgedPnlSpec s;
    s.hedge_vol = j.at("hedge_vol").get<double>();
    s.maturity = j.at("maturity").get<double>();
    const auto fixings = j.at("fixings").get<std::vector<double>>();
    s.fixings = PathSample::from_levels(fixings);
    s.realized_vols = j.at("vols").get<std::vector<double>>();
    if (j.contains("dts")) {
      s.dts = detail::scalar_or_array(j.at("dts"), s.realized_vols.size());
    } else {
      s.dts = std::vector<double>(s.realized_vols.size(), j.at("dt").get<double>());
    }
    s.kernel = parse_kernel(j.value("kernel", std::string("lognormal")));
    s.validate();
    return s;
  });
}

inline json to_json(const GammaVarDecomposition& d) {
  return {{"alpha", d.alpha}, {"beta", d.beta}, {"c0", d.c0},        {"c1", d.c1},
          {"c2", d.c2},       {"c3", d.c3},     {"fit_residual", d.fit_residual}};
}

// ---------------------------------------------------------------------------
// Model risk: buckets {"edges":[...]} or [...]; report JSON

inline BucketGrid parse_buckets(const json& j) {
  return detail::parse_json("buckets", [&] {
    return BucketGrid(j.is_array() ? j.get<std::vector<double>>() : j.at("edges").get<std::vector<double>>());
  });
}

inline json to_json(const ModelRiskReport& r) {
  return {{"mrr", r.mrr},
          {"rfr", r.rfr},
          {"cr", r.cr},
          {"er", r.er},
          {"verdict", std::string(verdict_name(r.verdict))},
          {"bucket_count", r.bucket_count},
          {"contributions", r.per_bucket_contribution}};
}

// ---------------------------------------------------------------------------
// Payoff table: x,m,b,f in grid order

inline void write_payoff_csv(std::ostream& out, const Payoff& p, const Density& believed) {
  gop::detail::require(p.grid().same_points(believed.grid()), ErrorCategory::argument,
                       "write_payoff_csv: grid mismatch");
  out << "x,m,b,f\n";
  for (std::size_t i = 0; i < p.grid().size(); ++i) {
    out << format_double(p.grid()[i]) << ',' << format_double(p.market()[i]) << ',' << format_double(believed[i])
        << ',' << format_double(p.values()[i]) << '\n';
  }
}

inline json to_json(const ReplicationPortfolio& r) {
  const auto legs = [](const std::vector<StrikeWeight>& v) {
    json a = json::array();
    for (const auto& sw : v) a.push_back({{"strike", sw.strike}, {"weight", sw.weight}});
    return a;
  };
  return {{"bond_notional", r.bond_notional},
          {"calls", legs(r.call_weights)},
          {"puts", legs(r.put_weights)},
          {"digitals", legs(r.digital_weights)},
          {"residual_sup_error", r.residual_sup_error}};
}

}  // namespace gop::io
