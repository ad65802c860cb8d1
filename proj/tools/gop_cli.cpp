// gop_cli: command-line front end for the growth-optimal payoff library.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gop/gop.hpp"
#include "gop/io.hpp"

namespace {

using gop::io::json;

constexpr const char* footer = R"(Exit codes:
  0  success
  1  usage error (bad or missing flags)
  2  io               file cannot be opened or written
  3  parse            malformed CSV or JSON
  4  argument         invalid parameter value
  5  domain           value outside a function's domain
  6  non_equivalence  reference density is zero where the other is not
  7  arbitrage        implied density has more than 1% negative mass
  8  infeasible_view  a view produces a non-positive volatility
  9  unsupported_view believed dynamics differ from the market beyond drift
 10  coverage         a grid or bucket set does not cover the required range
 11  rank_deficient   replication strikes do not span the payoff
 12  wipeout          an index increment reaches -100%
 13  certain_ruin     payoff is zero where the believed density is not
 14  internal         unexpected failure
Errors are printed to stderr as a single line: "error: <category>: <message>".

File formats:
  curve CSV        strike,vol
  curve meta JSON  {"forward":100,"maturity":1,"discount_factor":0.98}
  view JSON        {"kind":"skew_scale","s":0.5,"localization":{"center":100,"width":10}}
                   kinds: drift_shift (delta), vol_shift (v), skew_scale (s); a list composes in order
  terms JSON       {"discount_factor":0.98,"commission_rate":0.01,"budget":1}
  density CSV      x,mass
  payoff CSV       x,m,b,f
  dynamics JSON    {"drift":0.05,"vol":0.2,"dt":0.003968,"steps":252} (per-step arrays allowed)
  index CSV        step,exact,first_order (first_order blank after a wipeout)
  kelly CSV        leverage,mean_log_growth,std_error,wipeouts
  profile CSV      x,value
  hedged spec JSON {"fixings":[...],"vols":[...],"dt":0.004,"hedge_vol":0.2,"maturity":1,"kernel":"lognormal"}
  buckets JSON     {"edges":[...]} or [...]
Numbers are written with 17 significant digits; output is byte-identical for identical inputs and seed.)";

struct CurveArgs {
  std::string curve;
  std::string meta;
  std::optional<double> forward;
  std::optional<double> maturity;
  std::optional<double> discount_factor;
  std::string wings = "flat";
  std::optional<double> lo;
  std::optional<double> hi;
  std::size_t count = 801;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--curve", curve, "Vol curve CSV (strike,vol)")->required();
    cmd->add_option("--meta", meta, "Curve metadata JSON");
    cmd->add_option("--forward", forward, "Forward (overrides --meta)");
    cmd->add_option("--maturity", maturity, "Maturity in years (overrides --meta)");
    cmd->add_option("--discount-factor", discount_factor, "Discount factor (overrides --meta)");
    cmd->add_option("--wings", wings, "Wing extrapolation")->check(CLI::IsMember({"flat", "linear"}));
    cmd->add_option("--grid-lo", lo, "Grid lower end [0.3 forward]");
    cmd->add_option("--grid-hi", hi, "Grid upper end [3.0 forward]");
    cmd->add_option("--grid-count", count, "Grid points")->capture_default_str();
  }

  gop::io::CurveMeta resolve_meta() const {
    gop::io::CurveMeta m;
    bool have_forward = false, have_maturity = false;
    if (!meta.empty()) {
      const json j = gop::io::read_json_file(meta);
      m = gop::io::parse_curve_meta(j);
      have_forward = have_maturity = true;
    }
    if (forward) m.forward = *forward, have_forward = true;
    if (maturity) m.maturity = *maturity, have_maturity = true;
    if (discount_factor) m.discount_factor = *discount_factor;
    if (!have_forward || !have_maturity) {
      gop::detail::fail(gop::ErrorCategory::argument, "curve needs --meta or both --forward and --maturity");
    }
    return m;
  }

  gop::VolCurve load(const gop::io::CurveMeta& m) const {
    return gop::io::read_vol_curve_file(
        curve, m, wings == "linear" ? gop::WingExtrapolation::linear : gop::WingExtrapolation::flat);
  }

  gop::Grid grid(const gop::io::CurveMeta& m) const {
    return gop::make_grid(lo.value_or(0.3 * m.forward), hi.value_or(3.0 * m.forward), count);
  }
};

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) gop::detail::fail(gop::ErrorCategory::io, "cannot write " + out_path);
  out << text;
  if (!out) gop::detail::fail(gop::ErrorCategory::io, "write failed: " + out_path);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::vector<gop::ViewSpec> load_views(const std::vector<std::string>& paths) {
  std::vector<gop::ViewSpec> views;
  for (const auto& p : paths) {
    for (auto& v : gop::io::parse_views(gop::io::read_json_file(p))) views.push_back(std::move(v));
  }
  return views;
}

gop::DynamicsSpec load_dynamics(const std::string& path) {
  return gop::io::parse_dynamics(gop::io::read_json_file(path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Growth-optimal payoffs: implied densities, view-driven payoffs, index simulation, "
               "hedged P&L and model-risk scoring."};
  app.footer(footer);
  app.require_subcommand(1);
  app.fallthrough();
  std::string out_path;
  app.add_option("-o,--out", out_path, "Output file [stdout]");

  // implied-density
  CurveArgs density_args;
  auto* density_cmd = app.add_subcommand("implied-density", "Risk-neutral density from a vol curve (x,mass CSV)");
  density_args.add_to(density_cmd);

  // payoff
  CurveArgs payoff_args;
  std::vector<std::string> view_paths;
  std::string terms_path, returns_path;
  auto* payoff_cmd = app.add_subcommand("payoff", "Growth-optimal payoff for views on a vol curve (x,m,b,f CSV)");
  payoff_args.add_to(payoff_cmd);
  payoff_cmd->add_option("--view", view_paths, "View JSON (object or list); repeat to compose; none = no view");
  payoff_cmd->add_option("--terms", terms_path, "Pricing terms JSON [discount factor from the curve, no commission]");
  payoff_cmd->add_option("--returns", returns_path, "Also write the expected-return decomposition JSON here");

  // index-simulate
  std::string market_path, believed_path, measure = "market";
  std::size_t paths = 1, path_index = 0;
  std::uint64_t seed = 42;
  unsigned workers = 1;
  bool aggregate = false;
  auto* index_cmd = app.add_subcommand("index-simulate", "Exact and first-order index on simulated paths");
  index_cmd->add_option("--market", market_path, "Market dynamics JSON")->required();
  index_cmd->add_option("--believed", believed_path, "Believed dynamics JSON")->required();
  index_cmd->add_option("--measure", measure, "Measure the paths are drawn under")
      ->check(CLI::IsMember({"market", "believed"}))
      ->capture_default_str();
  index_cmd->add_option("--paths", paths, "Number of paths")->capture_default_str();
  index_cmd->add_option("--path-index", path_index, "Path written as CSV")->capture_default_str();
  index_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
  index_cmd->add_option("--workers", workers, "Worker threads (results do not depend on it)")->capture_default_str();
  index_cmd->add_flag("--aggregate", aggregate, "Write aggregate statistics JSON over all paths instead");

  // kelly-scan
  std::string k_market, k_believed;
  std::vector<double> leverages{0.0, 0.625, 1.25, 1.875, 2.5};
  std::size_t k_paths = 100000;
  std::uint64_t k_seed = 42;
  unsigned k_workers = 1;
  auto* kelly_cmd = app.add_subcommand("kelly-scan", "Mean log growth of leveraged strategies (CSV)");
  kelly_cmd->add_option("--market", k_market, "Market dynamics JSON")->required();
  kelly_cmd->add_option("--believed", k_believed, "Believed dynamics JSON")->required();
  kelly_cmd->add_option("--leverages", leverages, "Leverage grid")->delimiter(',')->capture_default_str();
  kelly_cmd->add_option("--paths", k_paths, "Number of paths")->capture_default_str();
  kelly_cmd->add_option("--seed", k_seed, "Random seed")->capture_default_str();
  kelly_cmd->add_option("--workers", k_workers, "Worker threads (results do not depend on it)")
      ->capture_default_str();

  // hedged-pnl
  std::string profile_path, spec_path;
  auto* hedged_cmd = app.add_subcommand("hedged-pnl", "Delta-hedged P&L of a payoff profile (JSON)");
  hedged_cmd->add_option("--profile", profile_path, "Profile CSV (x,value)")->required();
  hedged_cmd->add_option("--spec", spec_path, "Hedged P&L spec JSON")->required();

  // cubic-decompose
  std::string cubic_profile;
  std::optional<double> fit_lo, fit_hi;
  auto* cubic_cmd = app.add_subcommand("cubic-decompose", "Gamma-swap and variance-swap weights of a profile (JSON)");
  cubic_cmd->add_option("--profile", cubic_profile, "Profile CSV (x,value)")->required();
  cubic_cmd->add_option("--fit-lo", fit_lo, "Fit only points with x >= this");
  cubic_cmd->add_option("--fit-hi", fit_hi, "Fit only points with x <= this");

  // model-risk
  std::string b_path, m_path, buckets_path, mr_terms_path;
  auto* risk_cmd = app.add_subcommand("model-risk", "Model-risk return and materiality verdict (JSON)");
  risk_cmd->add_option("--b", b_path, "Density CSV under test (x,mass)")->required();
  risk_cmd->add_option("--m", m_path, "Reference density CSV (x,mass)")->required();
  risk_cmd->add_option("--buckets", buckets_path, "Bucket edges JSON [the reference grid's own buckets]");
  risk_cmd->add_option("--terms", mr_terms_path, "Pricing terms JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 1;
  }

  try {
    std::ostringstream out;

    if (*density_cmd) {
      const auto meta = density_args.resolve_meta();
      gop::io::write_density_csv(out, gop::implied_density(density_args.load(meta), density_args.grid(meta)));
    } else if (*payoff_cmd) {
      const auto meta = payoff_args.resolve_meta();
      const gop::VolCurve curve = payoff_args.load(meta);
      const gop::Grid grid = payoff_args.grid(meta);
      const gop::PricingTerms terms = terms_path.empty() ? gop::PricingTerms(meta.discount_factor, 0.0)
                                                         : gop::io::parse_terms(gop::io::read_json_file(terms_path));
      const auto views = load_views(view_paths);
      const gop::Density m = gop::implied_density(curve, grid);
      const gop::Density b = gop::believed_density(curve, views, grid);
      const gop::Payoff f = gop::growth_optimal_payoff(m, b, terms);
      gop::io::write_payoff_csv(out, f, b);
      if (!returns_path.empty()) {
        const auto r = gop::expected_rate_of_return(f, b);
        emit(returns_path, dump({{"er", r.er}, {"mrr", r.mrr}, {"rfr", r.rfr}, {"cr", r.cr}}));
      }
    } else if (*index_cmd) {
      const gop::DynamicsSpec market = load_dynamics(market_path);
      const gop::DynamicsSpec believed = load_dynamics(believed_path);
      gop::detail::require_drift_only(market, believed);
      const gop::DynamicsSpec& draw = measure == "market" ? market : believed;
      if (aggregate) {
        struct PathStats {
          double log_exact = 0.0;
          double exact = 0.0;
          bool wiped = false;
        };
        const auto stats = gop::map_paths(
            draw, paths, seed,
            [&](std::size_t, std::span<const double> x) {
              const gop::IndexSeries s =
                  gop::run_index(gop::PathSample(1.0, std::vector<double>(x.begin(), x.end())), market, believed);
              return PathStats{std::log(s.exact.back()), s.exact.back(), s.wipeout_step.has_value()};
            },
            workers);
        std::vector<double> e, le;
        std::size_t wiped = 0;
        for (const auto& s : stats) {
          e.push_back(s.exact);
          le.push_back(s.log_exact);
          wiped += s.wiped ? 1 : 0;
        }
        const double n = static_cast<double>(paths);
        const double mean_e = gop::detail::stable_sum(e) / n;
        const double mean_le = gop::detail::stable_sum(le) / n;
        std::vector<double> dev(e.size());
        for (std::size_t i = 0; i < e.size(); ++i) dev[i] = (e[i] - mean_e) * (e[i] - mean_e);
        const double se = paths > 1 ? std::sqrt(gop::detail::stable_sum(dev) / (n - 1.0) / n) : 0.0;
        out << dump({{"paths", paths},
                     {"seed", seed},
                     {"measure", measure},
                     {"mean_exact", mean_e},
                     {"std_error_exact", se},
                     {"mean_log_exact", mean_le},
                     {"first_order_wipeouts", wiped}});
      } else {
        gop::detail::require(path_index < paths, gop::ErrorCategory::argument, "--path-index must be < --paths");
        const auto sims = gop::map_paths(
            draw, path_index + 1, seed,
            [](std::size_t, std::span<const double> x) { return std::vector<double>(x.begin(), x.end()); }, 1);
        gop::io::write_index_csv(out, gop::run_index(gop::PathSample(1.0, sims[path_index]), market, believed));
      }
    } else if (*kelly_cmd) {
      gop::io::write_kelly_csv(out, gop::kelly_scan(load_dynamics(k_market), load_dynamics(k_believed), leverages,
                                                    k_paths, k_seed, k_workers));
    } else if (*hedged_cmd) {
      const gop::ProfileFn profile = gop::io::read_profile_file(profile_path);
      const gop::HedgedPnlSpec spec = gop::io::parse_hedged_spec(gop::io::read_json_file(spec_path));
      const double pnl = gop::hedged_pnl(profile, spec);
      out << dump({{"pnl", pnl},
                   {"intervals", spec.dts.size()},
                   {"kernel", spec.kernel == gop::GammaKernel::lognormal ? "lognormal" : "bachelier"}});
    } else if (*cubic_cmd) {
      gop::ProfileFn profile = gop::io::read_profile_file(cubic_profile);
      if (fit_lo || fit_hi) {
        std::vector<double> x, y;
        for (std::size_t i = 0; i < profile.grid().size(); ++i) {
          const double s = profile.grid()[i];
          if ((!fit_lo || s >= *fit_lo) && (!fit_hi || s <= *fit_hi)) {
            x.push_back(s);
            y.push_back(profile.values()[i]);
          }
        }
        gop::detail::require(x.size() >= 4, gop::ErrorCategory::argument, "fit window holds fewer than 4 points");
        profile = gop::ProfileFn(gop::Grid::from_points(x), y);
      }
      out << dump(gop::io::to_json(gop::cubic_decomposition(profile)));
    } else if (*risk_cmd) {
      const gop::Density b = gop::io::read_density_file(b_path);
      const gop::Density m = gop::io::read_density_file(m_path);
      const gop::BucketGrid buckets = buckets_path.empty()
                                          ? gop::BucketGrid::matching(m.grid())
                                          : gop::io::parse_buckets(gop::io::read_json_file(buckets_path));
      const gop::PricingTerms terms = gop::io::parse_terms(gop::io::read_json_file(mr_terms_path));
      out << dump(gop::io::to_json(gop::model_risk_report(b, m, buckets, terms)));
    }

    emit(out_path, out.str());
  } catch (const gop::Error& e) {
    std::cerr << "error: " << gop::category_name(e.category()) << ": " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return static_cast<int>(gop::ErrorCategory::internal);
  }
  return 0;
}
