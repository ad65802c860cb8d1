#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "gop/model_risk.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace gop;
using Catch::Approx;

namespace {

Density two_point(double a, double b) { return Density(Grid::from_points({0.0, 1.0}), {a, b}); }

// A random fine grid with n points, and the edges of the buckets its points own.
struct Setup {
  Grid grid;
  std::vector<double> edges;
};

Setup random_setup(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<double> x{0.0};
  for (std::size_t i = 1; i < n; ++i) x.push_back(x.back() + u(rng));
  Grid g = Grid::from_points(x);
  auto e = g.bucket_edges();
  return {std::move(g), std::move(e)};
}

// Keeps both end edges and a random subset of the interior ones.
std::vector<double> random_subset(std::mt19937_64& rng, const std::vector<double>& edges, double keep) {
  std::bernoulli_distribution b(keep);
  std::vector<double> out{edges.front()};
  for (std::size_t i = 1; i + 1 < edges.size(); ++i) {
    if (b(rng)) out.push_back(edges[i]);
  }
  out.push_back(edges.back());
  return out;
}

// Direct bucket sums of a mass vector over a grid; edge rule [e_j, e_{j+1}).
std::vector<double> bucket_sums(const Grid& g, std::span<const double> mass, const std::vector<double>& e) {
  std::vector<double> out(e.size() - 1, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j + 1 < e.size(); ++j) {
      if (g[i] >= e[j] && (g[i] < e[j + 1] || (j + 2 == e.size() && g[i] == e[j + 1]))) {
        out[j] += mass[i];
        break;
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("bucket grid validation") {
  CHECK(test::category_of([] { BucketGrid({1.0}); }) == ErrorCategory::argument);
  CHECK(test::category_of([] { BucketGrid({1.0, 1.0}); }) == ErrorCategory::argument);
  CHECK(test::category_of([] { BucketGrid({0.0, 2.0, 1.0}); }) == ErrorCategory::argument);
  const BucketGrid b({0, 1, 2});
  CHECK(b.locate(0) == 0);
  CHECK(b.locate(1) == 1);
  CHECK(b.locate(2) == 1);
  CHECK(b.locate(2.5) == 2);
  CHECK(b.locate(-0.1) == 2);
}

TEST_CASE("coarse_grain examples") {
  const Grid g = make_grid(-4, 4, 81);
  const Density d = discretize(NormalFamily{0.0, 1.0}, g);

  const Density same = coarse_grain(d, BucketGrid::matching(g));
  CHECK(same.mass().size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(same[i] == d[i]);

  const Density one = coarse_grain(d, BucketGrid({-10.0, 10.0}));
  REQUIRE(one.size() == 1);
  CHECK(one[0] == Approx(1.0).epsilon(1e-15));

  // Even count so no node sits on the split.
  const Grid even = make_grid(-4, 4, 80);
  const Density halves = coarse_grain(discretize(NormalFamily{0.0, 1.0}, even), BucketGrid({-5.0, 0.0, 5.0}));
  CHECK(halves[0] == Approx(0.5).epsilon(1e-14));
  CHECK(halves[1] == Approx(0.5).epsilon(1e-14));
  CHECK(halves.grid()[0] == -2.5);
  CHECK(halves.grid().widths()[1] == 5.0);
}

TEST_CASE("coarse_grain coverage") {
  const Grid g = make_grid(0, 10, 11);
  const Density d = discretize(NormalFamily{5.0, 1.0}, g);
  // Node 10 carries ~3e-7 of mass.
  CHECK(test::category_of([&] { coarse_grain(d, BucketGrid({0.0, 9.5})); }) == ErrorCategory::coverage);
  // Centred at 8, node 0 carries ~1e-15: below the threshold, so it may fall outside.
  const Density far = discretize(NormalFamily{8.0, 1.0}, g);
  CHECK_NOTHROW(coarse_grain(far, BucketGrid({0.5, 10.0})));
  const Density c = coarse_grain(far, BucketGrid({0.5, 10.0}));
  CHECK(c[0] == 1.0);
}

TEST_CASE("model_risk_report examples") {
  const Density b = two_point(0.5, 0.5);
  const Density m = two_point(0.25, 0.75);
  const BucketGrid buckets({-0.5, 0.5, 1.5});
  const double kl = oracle::kl({0.5, 0.5}, {0.25, 0.75});

  const ModelRiskReport r = model_risk_report(b, m, buckets, PricingTerms::from_rates(0.02, 0.2));
  CHECK(r.mrr == Approx(kl).epsilon(1e-14));
  CHECK(std::abs(r.mrr - 0.14384) < 5e-6);
  CHECK(std::abs(r.er - (-0.03616)) < 5e-6);
  CHECK(r.verdict == Verdict::safe);
  CHECK(r.bucket_count == 2);
  CHECK(r.per_bucket_contribution[0] == Approx(0.5 * std::log(2.0)).epsilon(1e-15));
  CHECK(r.per_bucket_contribution[1] == Approx(0.5 * std::log(2.0 / 3.0)).epsilon(1e-15));

  const ModelRiskReport flip = model_risk_report(b, m, buckets, PricingTerms::from_rates(0.02, 0.1));
  CHECK(flip.verdict == Verdict::material);
  CHECK(flip.er_below_rfr() == false);

  for (double cr : {1e-6, 0.01, 0.3}) {
    const ModelRiskReport id = model_risk_report(m, m, buckets, PricingTerms::from_rates(0.01, cr));
    CHECK(id.mrr == 0.0);
    CHECK(id.verdict == Verdict::safe);
    CHECK(id.er == Approx(0.01 - cr).epsilon(1e-14).margin(1e-15));
  }
}

TEST_CASE("model_risk_report names the non-equivalent bucket") {
  const Density b = two_point(0.5, 0.5);
  const Density m = two_point(1.0, 0.0);
  try {
    model_risk_report(b, m, BucketGrid({-0.5, 0.5, 1.5}), PricingTerms(1.0, 0.01));
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::non_equivalence);
    CHECK(std::string(e.what()).find("bucket 1") != std::string::npos);
  }
  // The converse is allowed: the reference has mass where the other has none.
  CHECK_NOTHROW(model_risk_report(m, b, BucketGrid({-0.5, 0.5, 1.5}), PricingTerms(1.0, 0.01)));
  CHECK(model_risk_report(m, b, BucketGrid({-0.5, 0.5, 1.5}), PricingTerms(1.0, 0.01)).mrr ==
        Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("refine_and_compare examples") {
  const Grid g = Grid::from_points({0, 1, 2, 3});
  const Density b(g, {0.1, 0.4, 0.2, 0.3});
  const Density m(g, {0.3, 0.2, 0.25, 0.25});
  const BucketGrid coarse({-0.5, 1.5, 3.5});
  const BucketGrid fine({-0.5, 0.5, 1.5, 2.5, 3.5});

  const auto same = refine_and_compare(b, m, coarse, coarse);
  CHECK(same.mrr_coarse == same.mrr_fine);

  const auto r = refine_and_compare(b, m, coarse, fine);
  CHECK(r.mrr_coarse == Approx(oracle::kl({0.5, 0.5}, {0.5, 0.5})).margin(1e-16));
  CHECK(r.mrr_fine == Approx(oracle::kl({0.1, 0.4, 0.2, 0.3}, {0.3, 0.2, 0.25, 0.25})).epsilon(1e-14));
  CHECK(r.mrr_coarse == 0.0);
  CHECK(r.mrr_fine > 0.0);

  const Density m2(g, {0.2, 0.2, 0.3, 0.3});
  const auto r2 = refine_and_compare(b, m2, coarse, fine);
  CHECK(r2.mrr_coarse == Approx(oracle::kl({0.5, 0.5}, {0.4, 0.6})).epsilon(1e-14));
  CHECK(r2.mrr_fine >= r2.mrr_coarse);

  CHECK(test::category_of([&] { refine_and_compare(b, m, coarse, BucketGrid({-0.5, 1.0, 3.5})); }) ==
        ErrorCategory::argument);
}

TEST_CASE("property: MRR is non-negative and zero only for equal bucket masses") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const Setup s = random_setup(rng, 30);
    const Density b(s.grid, oracle::random_simplex(rng, 30));
    const Density m(s.grid, oracle::random_simplex(rng, 30));
    const BucketGrid buckets(random_subset(rng, s.edges, 0.3));
    const auto cb = bucket_sums(s.grid, b.mass(), std::vector<double>(buckets.edges().begin(), buckets.edges().end()));
    const auto cm = bucket_sums(s.grid, m.mass(), std::vector<double>(buckets.edges().begin(), buckets.edges().end()));
    double gap = 0;
    for (std::size_t j = 0; j < cb.size(); ++j) gap = std::max(gap, std::abs(cb[j] - cm[j]));

    const ModelRiskReport r = model_risk_report(b, m, buckets, PricingTerms(1.0, 0.01));
    CHECK(r.mrr >= 0.0);
    CHECK((r.mrr > 0.0) == (gap > 1e-14));
    CHECK(r.mrr == Approx(oracle::kl(cb, cm)).epsilon(1e-9).margin(1e-15));
    CHECK(model_risk_report(b, b, buckets, PricingTerms(1.0, 0.01)).mrr == 0.0);
  }
}

TEST_CASE("property: nested refinement never lowers MRR") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const Setup s = random_setup(rng, 40);
    const Density b(s.grid, oracle::random_simplex(rng, 40));
    const Density m(s.grid, oracle::random_simplex(rng, 40));
    // A chain of nested bucket grids, finest first.
    std::vector<std::vector<double>> chain{s.edges};
    while (chain.back().size() > 2) chain.push_back(random_subset(rng, chain.back(), 0.5));
    for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
      const auto r = refine_and_compare(b, m, BucketGrid(chain[k + 1]), BucketGrid(chain[k]));
      CHECK(r.mrr_fine >= r.mrr_coarse - 1e-12);
    }
    const auto top = refine_and_compare(b, m, BucketGrid(chain.back()), BucketGrid(chain.front()));
    CHECK(top.mrr_coarse == 0.0);
    CHECK(top.mrr_fine == Approx(kl_divergence(b, m)).epsilon(1e-12));
  }
}

TEST_CASE("property: report identities") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int safe = 0, material = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Setup s = random_setup(rng, 12);
    const Density b(s.grid, oracle::random_simplex(rng, 12));
    const Density m(s.grid, oracle::random_simplex(rng, 12));
    const BucketGrid buckets(random_subset(rng, s.edges, 0.5));
    const PricingTerms terms(0.9 + 0.1 * u(rng), 1.5 * u(rng));
    const ModelRiskReport r = model_risk_report(b, m, buckets, terms);

    CHECK(std::abs(r.er - (r.mrr + r.rfr - r.cr)) <= 1e-12);
    CHECK((r.verdict == Verdict::safe) == (r.mrr < r.cr));
    CHECK(r.er_below_rfr() == (r.mrr < r.cr));
    CHECK(r.per_bucket_contribution.size() == r.bucket_count);
    double sum = 0;
    for (double c : r.per_bucket_contribution) sum += c;
    CHECK(std::abs(sum - r.mrr) <= 1e-12);
    (r.verdict == Verdict::safe ? safe : material)++;
  }
  CHECK(safe > 50);
  CHECK(material > 50);
}
