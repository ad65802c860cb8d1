#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "gop/density.hpp"
#include "gop/errors.hpp"

namespace gop {

/// Per-step drift, annualised vol and step length of a locally lognormal
/// process x_i = drift_i dt_i + vol_i sqrt(dt_i) eps_i for the simple return
/// x_i = dS_i / S_i.
class DynamicsSpec {
 public:
  DynamicsSpec(std::vector<double> drift, std::vector<double> vol, std::vector<double> dt)
      : drift_(std::move(drift)), vol_(std::move(vol)), dt_(std::move(dt)) {
    detail::require(!drift_.empty(), ErrorCategory::argument, "dynamics need at least one step");
    detail::require(drift_.size() == vol_.size() && vol_.size() == dt_.size(), ErrorCategory::argument,
                    "dynamics drift, vol and dt differ in length");
    for (std::size_t i = 0; i < steps(); ++i) {
      detail::require(std::isfinite(drift_[i]), ErrorCategory::argument, "dynamics drift must be finite");
      detail::require(vol_[i] > 0.0 && std::isfinite(vol_[i]), ErrorCategory::argument,
                      "dynamics vol must be positive");
      detail::require(dt_[i] > 0.0 && std::isfinite(dt_[i]), ErrorCategory::argument,
                      "dynamics dt must be positive");
    }
  }

  static DynamicsSpec constant(double drift, double vol, double dt, std::size_t steps) {
    return DynamicsSpec(std::vector<double>(steps, drift), std::vector<double>(steps, vol),
                        std::vector<double>(steps, dt));
  }

  std::size_t steps() const noexcept { return drift_.size(); }
  std::span<const double> drift() const noexcept { return drift_; }
  std::span<const double> vol() const noexcept { return vol_; }
  std::span<const double> dt() const noexcept { return dt_; }

  DynamicsSpec with_drift(std::vector<double> drift) const { return DynamicsSpec(std::move(drift), vol_, dt_); }

  friend bool operator==(const DynamicsSpec&, const DynamicsSpec&) = default;

 private:
  std::vector<double> drift_;
  std::vector<double> vol_;
  std::vector<double> dt_;
};

/// Fixings S_0..S_n of one path together with the simple returns between them.
class PathSample {
 public:
  PathSample(double s0, std::vector<double> returns) : returns_(std::move(returns)) {
    detail::require(s0 > 0.0 && std::isfinite(s0), ErrorCategory::argument, "path needs S_0 > 0");
    levels_.reserve(returns_.size() + 1);
    levels_.push_back(s0);
    for (double x : returns_) {
      const double next = levels_.back() * (1.0 + x);
      detail::require(next > 0.0 && std::isfinite(next), ErrorCategory::domain,
                      "path level must stay positive");
      levels_.push_back(next);
    }
  }

  /// Rebuilds the returns from observed fixings S_0..S_n.
  static PathSample from_levels(std::span<const double> levels) {
    detail::require(levels.size() >= 1, ErrorCategory::argument, "path needs at least one fixing");
    std::vector<double> returns;
    for (std::size_t i = 1; i < levels.size(); ++i) {
      detail::require(levels[i - 1] > 0.0, ErrorCategory::argument, "path level must be positive");
      returns.push_back(levels[i] / levels[i - 1] - 1.0);
    }
    PathSample p(levels.front(), std::move(returns));
    p.levels_.assign(levels.begin(), levels.end());
    return p;
  }

  double s0() const noexcept { return levels_.front(); }
  std::span<const double> returns() const noexcept { return returns_; }
  std::span<const double> levels() const noexcept { return levels_; }

 private:
  std::vector<double> returns_;
  std::vector<double> levels_;
};

// ---------------------------------------------------------------------------
// Reproducible simulation

/// Engine for one path. The stream depends only on (seed, path index), so
/// results do not depend on how paths are split across workers.
inline std::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t path) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
  return std::mt19937_64(seq);
}

inline void draw_returns(const DynamicsSpec& spec, std::mt19937_64& engine, std::span<double> out) {
  std::normal_distribution<double> eps(0.0, 1.0);
  for (std::size_t i = 0; i < spec.steps(); ++i) {
    out[i] = spec.drift()[i] * spec.dt()[i] + spec.vol()[i] * std::sqrt(spec.dt()[i]) * eps(engine);
  }
}

/// Simulates n_paths return sequences and maps each through fn(path, returns).
/// Results come back indexed by path; workers only change wall time.
template <class Fn>
auto map_paths(const DynamicsSpec& spec, std::size_t n_paths, std::uint64_t seed, Fn fn,
               unsigned workers = 1) {
  using R = std::invoke_result_t<Fn&, std::size_t, std::span<const double>>;
  detail::require(n_paths >= 1, ErrorCategory::argument, "need at least one path");
  std::vector<R> results(n_paths);
  const auto run_range = [&](std::size_t begin, std::size_t end) {
    std::vector<double> returns(spec.steps());
    for (std::size_t p = begin; p < end; ++p) {
      auto engine = path_engine(seed, p);
      draw_returns(spec, engine, returns);
      results[p] = fn(p, std::span<const double>(returns));
    }
  };

  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_paths)));
  if (workers == 1) {
    run_range(0, n_paths);
    return results;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n_paths + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(n_paths, w * chunk);
      const std::size_t end = std::min(n_paths, begin + chunk);
      pool.emplace_back([&, w, begin, end] {
        try {
          run_range(begin, end);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

inline std::vector<PathSample> simulate_paths(const DynamicsSpec& spec, double s0, std::size_t n_paths,
                                              std::uint64_t seed, unsigned workers = 1) {
  detail::require(s0 > 0.0, ErrorCategory::argument, "simulate_paths: s0 must be positive");
  auto returns = map_paths(
      spec, n_paths, seed,
      [](std::size_t, std::span<const double> x) { return std::vector<double>(x.begin(), x.end()); },
      workers);
  std::vector<PathSample> paths;
  paths.reserve(n_paths);
  for (auto& r : returns) paths.emplace_back(s0, std::move(r));
  return paths;
}

// ---------------------------------------------------------------------------
// Likelihood ratio and the first-order index

/// Log of the exact per-step ratio b/m between believed (drift mu) and market
/// (drift r) Gaussian return densities sharing sigma.
inline double log_exact_ratio_step(double x, double r, double mu, double sigma, double dt) {
  detail::require(sigma > 0.0 && dt > 0.0, ErrorCategory::argument, "ratio step needs sigma, dt > 0");
  const double s2 = sigma * sigma;
  return (mu - r) / s2 * x + (r * r - mu * mu) / (2.0 * s2) * dt;
}

inline double exact_ratio_step(double x, double r, double mu, double sigma, double dt) {
  return std::exp(log_exact_ratio_step(x, r, mu, sigma, dt));
}

/// Relative increment of the vol-targeted excess-return index:
/// (mu - r) / sigma^2 * (x - r dt). Increments at or below -1 wipe the index out.
inline double index_step(double x, double r, double mu, double sigma, double dt) {
  detail::require(sigma > 0.0, ErrorCategory::argument, "index_step needs sigma > 0");
  const double inc = (mu - r) / (sigma * sigma) * (x - r * dt);
  if (inc <= -1.0) {
    detail::fail(ErrorCategory::wipeout, "index_step: increment " + std::to_string(inc) + " wipes out the index");
  }
  return inc;
}

struct IndexSeries {
  std::vector<double> exact;        ///< f_0..f_n, f_0 = 1
  std::vector<double> first_order;  ///< I_0..I_k, truncated at a wipeout
  std::optional<std::size_t> wipeout_step;
};

namespace detail {

inline void require_drift_only(const DynamicsSpec& market, const DynamicsSpec& believed) {
  if (market.steps() != believed.steps() ||
      !std::equal(market.dt().begin(), market.dt().end(), believed.dt().begin()) ||
      !std::equal(market.vol().begin(), market.vol().end(), believed.vol().begin())) {
    fail(ErrorCategory::unsupported_view, "believed dynamics may differ from the market only in drift");
  }
}

}  // namespace detail

inline IndexSeries run_index(const PathSample& path, const DynamicsSpec& market, const DynamicsSpec& believed) {
  detail::require_drift_only(market, believed);
  const auto x = path.returns();
  detail::require(x.size() == market.steps(), ErrorCategory::argument, "run_index: path length != steps");

  IndexSeries out;
  out.exact.reserve(x.size() + 1);
  out.first_order.reserve(x.size() + 1);
  out.exact.push_back(1.0);
  out.first_order.push_back(1.0);
  double log_f = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = market.drift()[i];
    const double mu = believed.drift()[i];
    const double sigma = market.vol()[i];
    const double dt = market.dt()[i];
    log_f += log_exact_ratio_step(x[i], r, mu, sigma, dt);
    out.exact.push_back(std::exp(log_f));
    if (out.wipeout_step) continue;
    const double inc = (mu - r) / (sigma * sigma) * (x[i] - r * dt);
    if (inc <= -1.0) {
      out.wipeout_step = i + 1;
      continue;
    }
    out.first_order.push_back(out.first_order.back() * (1.0 + inc));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kelly verification

struct KellyRow {
  double leverage = 0.0;
  double mean_log_growth = 0.0;
  double std_error = 0.0;
  std::size_t wipeouts = 0;
};

/// For each leverage L, the strategy dV/V = L (x - r dt) is run on paths drawn
/// from the believed dynamics (common random numbers across leverages).
/// Wiped-out paths are excluded and counted; more than 1% at any leverage is
/// an error.
inline std::vector<KellyRow> kelly_scan(const DynamicsSpec& market, const DynamicsSpec& believed,
                                        std::span<const double> leverages, std::size_t n_paths,
                                        std::uint64_t seed, unsigned workers = 1) {
  detail::require(!leverages.empty(), ErrorCategory::argument, "kelly_scan: no leverages");
  detail::require(market.steps() == believed.steps() &&
                      std::equal(market.dt().begin(), market.dt().end(), believed.dt().begin()),
                  ErrorCategory::argument, "kelly_scan: market and believed steps differ");
  const std::vector<double> lev(leverages.begin(), leverages.end());

  const auto per_path = map_paths(
      believed, n_paths, seed,
      [&](std::size_t, std::span<const double> x) {
        std::vector<double> log_v(lev.size(), 0.0);
        for (std::size_t k = 0; k < lev.size(); ++k) {
          double acc = 0.0;
          for (std::size_t i = 0; i < x.size(); ++i) {
            const double u = lev[k] * (x[i] - market.drift()[i] * market.dt()[i]);
            if (u <= -1.0) {
              acc = std::numeric_limits<double>::quiet_NaN();
              break;
            }
            acc += std::log1p(u);
          }
          log_v[k] = acc;
        }
        return log_v;
      },
      workers);

  std::vector<KellyRow> rows;
  for (std::size_t k = 0; k < lev.size(); ++k) {
    std::vector<double> ok;
    ok.reserve(n_paths);
    for (const auto& v : per_path) {
      if (!std::isnan(v[k])) ok.push_back(v[k]);
    }
    KellyRow row;
    row.leverage = lev[k];
    row.wipeouts = n_paths - ok.size();
    if (static_cast<double>(row.wipeouts) > 0.01 * static_cast<double>(n_paths)) {
      detail::fail(ErrorCategory::wipeout, "kelly_scan: more than 1% of paths wiped out at leverage " +
                                               std::to_string(lev[k]));
    }
    const double n = static_cast<double>(ok.size());
    row.mean_log_growth = detail::stable_sum(ok) / n;
    for (double& v : ok) v = (v - row.mean_log_growth) * (v - row.mean_log_growth);
    const double var = ok.size() > 1 ? detail::stable_sum(ok) / (n - 1.0) : 0.0;
    row.std_error = std::sqrt(var / n);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace gop
