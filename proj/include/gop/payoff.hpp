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
#include "gop/market.hpp"

namespace gop {

/// Payout per bucket of a product bought with the terms' budget, together with
/// the market density it was priced against.
class Payoff {
 public:
  Payoff(Density market, std::vector<double> values, PricingTerms terms)
      : market_(std::move(market)), values_(std::move(values)), terms_(terms) {
    detail::require(values_.size() == market_.size(), ErrorCategory::argument,
                    "payoff values and market grid differ in length");
    for (double f : values_) {
      detail::require(f >= 0.0 && std::isfinite(f), ErrorCategory::argument,
                      "payoff values must be finite and non-negative");
    }
    const double cost = (1.0 + terms_.commission_rate()) * terms_.discount_factor() * weighted_sum();
    if (std::abs(cost - terms_.budget()) > 1e-10 * terms_.budget()) {
      detail::fail(ErrorCategory::argument,
                   "payoff cost " + std::to_string(cost) + " differs from the budget");
    }
  }

  const Grid& grid() const noexcept { return market_.grid(); }
  const Density& market() const noexcept { return market_; }
  std::span<const double> values() const noexcept { return values_; }
  const PricingTerms& terms() const noexcept { return terms_; }

 private:
  double weighted_sum() const {
    std::vector<double> t(values_.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = market_[i] * values_[i];
    return detail::stable_sum(t);
  }

  Density market_;
  std::vector<double> values_;
  PricingTerms terms_;
};

/// f_i = N * b_i / m_i with N = W / ((1 + c) * DF). Buckets the investor
/// gives no mass to pay nothing.
inline Payoff growth_optimal_payoff(const Density& m, const Density& b, const PricingTerms& terms) {
  detail::require(m.grid().same_points(b.grid()), ErrorCategory::argument,
                  "growth_optimal_payoff: densities live on different grids");
  const double n = terms.normalization();
  std::vector<double> f(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (b[i] == 0.0) continue;
    if (m[i] == 0.0) {
      detail::fail(ErrorCategory::non_equivalence,
                   "growth_optimal_payoff: market has zero mass at bucket " + std::to_string(i) +
                       " where the investor does not");
    }
    f[i] = n * (b[i] / m[i]);
  }
  return Payoff(m, std::move(f), terms);
}

/// Pre-commission cost of an arbitrary profile under the given state prices.
inline double price(std::span<const double> values, const StatePrices& sp) {
  detail::require(values.size() == sp.q.size(), ErrorCategory::argument, "price: grid mismatch");
  std::vector<double> t(sp.q.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = sp.q[i] * values[i];
  return detail::stable_sum(t);
}

inline double price(const Payoff& p, const StatePrices& sp) {
  detail::require(p.grid().same_points(sp.grid), ErrorCategory::argument, "price: grid mismatch");
  return price(p.values(), sp);
}

struct ReturnDecomposition {
  double er = 0.0;   ///< sum_i b_i ln(f_i / W), computed directly
  double mrr = 0.0;  ///< KL(b || m), computed independently of er
  double rfr = 0.0;
  double cr = 0.0;
};

/// Expected log return of the payoff per unit of budget under the believed
/// density. er - rfr + cr reproduces mrr for growth-optimal payoffs.
inline ReturnDecomposition expected_rate_of_return(const Payoff& p, const Density& b) {
  detail::require(p.grid().same_points(b.grid()), ErrorCategory::argument,
                  "expected_rate_of_return: grid mismatch");
  const double w = p.terms().budget();
  std::vector<double> t(b.size(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i] == 0.0) continue;
    const double f = p.values()[i];
    if (f == 0.0) {
      detail::fail(ErrorCategory::certain_ruin,
                   "expected_rate_of_return: payoff is zero at bucket " + std::to_string(i) +
                       " which the investor considers possible");
    }
    t[i] = b[i] * std::log(f / w);
  }
  ReturnDecomposition r;
  r.er = detail::stable_sum(t);
  r.mrr = kl_divergence(b, p.market());
  r.rfr = p.terms().rfr();
  r.cr = p.terms().cr();
  return r;
}

// ---------------------------------------------------------------------------
// Vanilla replication

struct StrikeWeight {
  double strike = 0.0;
  double weight = 0.0;
};

struct ReplicationPortfolio {
  double bond_notional = 0.0;
  std::vector<StrikeWeight> call_weights;
  std::vector<StrikeWeight> put_weights;
  std::vector<StrikeWeight> digital_weights;
  double residual_sup_error = 0.0;
};

/// Least-squares fit of bond + vanilla options + digitals to payoff values,
/// weighted by the market mass of each bucket. Each option strike gets an
/// out-of-the-money instrument: a call at or above the market mean, a put
/// below it (a call and a put at the same strike would be collinear with the
/// bond once two strikes are listed). Digitals pay 1 strictly above strike.
inline ReplicationPortfolio replicate_vanilla(const Density& weights, std::span<const double> values,
                                              std::span<const double> option_strikes,
                                              std::span<const double> digital_strikes = {}) {
  const Grid& grid = weights.grid();
  detail::require(values.size() == grid.size(), ErrorCategory::argument,
                  "replicate_vanilla: values and grid differ in length");
  const auto inside = [&](double k) { return k > grid.front() && k < grid.back(); };
  detail::require(std::any_of(option_strikes.begin(), option_strikes.end(), inside) ||
                      std::any_of(digital_strikes.begin(), digital_strikes.end(), inside),
                  ErrorCategory::argument, "replicate_vanilla: need a strike inside the grid range");

  enum class Kind { bond, call, put, digital };
  struct Instrument {
    Kind kind;
    double strike;
    std::string name() const {
      switch (kind) {
        case Kind::bond: return "bond";
        case Kind::call: return "call@" + std::to_string(strike);
        case Kind::put: return "put@" + std::to_string(strike);
        case Kind::digital: return "digital@" + std::to_string(strike);
      }
      return "?";
    }
    double operator()(double x) const {
      switch (kind) {
        case Kind::bond: return 1.0;
        case Kind::call: return std::max(x - strike, 0.0);
        case Kind::put: return std::max(strike - x, 0.0);
        case Kind::digital: return x > strike ? 1.0 : 0.0;
      }
      return 0.0;
    }
  };

  const double pivot = mean(weights);
  std::vector<Instrument> basis{{Kind::bond, 0.0}};
  for (double k : option_strikes) basis.push_back({k >= pivot ? Kind::call : Kind::put, k});
  for (double k : digital_strikes) basis.push_back({Kind::digital, k});

  const auto rows = static_cast<Eigen::Index>(grid.size());
  const auto cols = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd a(rows, cols);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double sw = std::sqrt(weights[ui]);
    for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = sw * basis[static_cast<std::size_t>(j)](grid[ui]);
    rhs(i) = sw * values[ui];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < cols) {
    std::string names;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index j = qr.rank(); j < cols; ++j) {
      if (!names.empty()) names += ", ";
      names += basis[static_cast<std::size_t>(perm(j))].name();
    }
    detail::fail(ErrorCategory::rank_deficient,
                 "replicate_vanilla: basis is rank deficient; collinear instruments: " + names);
  }
  const Eigen::VectorXd coef = qr.solve(rhs);

  ReplicationPortfolio out;
  for (std::size_t j = 0; j < basis.size(); ++j) {
    const double w = coef(static_cast<Eigen::Index>(j));
    switch (basis[j].kind) {
      case Kind::bond: out.bond_notional = w; break;
      case Kind::call: out.call_weights.push_back({basis[j].strike, w}); break;
      case Kind::put: out.put_weights.push_back({basis[j].strike, w}); break;
      case Kind::digital: out.digital_weights.push_back({basis[j].strike, w}); break;
    }
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double fit = 0.0;
    for (std::size_t j = 0; j < basis.size(); ++j) fit += coef(static_cast<Eigen::Index>(j)) * basis[j](grid[i]);
    out.residual_sup_error = std::max(out.residual_sup_error, std::abs(values[i] - fit));
  }
  return out;
}

inline ReplicationPortfolio replicate_vanilla(const Payoff& p, std::span<const double> option_strikes,
                                              std::span<const double> digital_strikes = {}) {
  return replicate_vanilla(p.market(), p.values(), option_strikes, digital_strikes);
}

}  // namespace gop
