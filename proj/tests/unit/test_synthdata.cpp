#include <cmath>
#include <regex>
#include <set>

#include "doctest.h"

#include "behavcal/error.hpp"
#include "behavcal/rng.hpp"
#include "behavcal/stats.hpp"
#include "behavcal/synthdata.hpp"

using namespace behavcal;

TEST_CASE("gbm zero volatility is exact") {
  Rng rng(3);
  const auto p = simulate_gbm({0.07, 0.0, 50.0}, 24, rng);
  REQUIRE(p.prices.size() == 25);
  for (int t = 0; t <= 24; ++t) CHECK(p.prices[t] == doctest::Approx(50.0 * std::exp(0.07 * t / 12.0)).epsilon(1e-14));
}

TEST_CASE("gbm determinism and log drift") {
  PricePathConfig cfg;
  CHECK(generate_price_path(cfg, 11).prices == generate_price_path(cfg, 11).prices);
  CHECK(generate_price_path(cfg, 11).prices.size() == 25);

  const double mu = 0.05, sigma = 0.25, years = 2.0;
  const int n = 10000;
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(17, "gbm-moment", i));
    const auto p = simulate_gbm({mu, sigma, 100.0}, 24, rng);
    sum += std::log(p.prices.back() / p.prices.front()) / years;
  }
  const double se = sigma / std::sqrt(years) / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(sum / n - (mu - sigma * sigma / 2)) < 3 * se);
}

TEST_CASE("batch is independent of jobs") {
  PricePathConfig cfg;
  const auto a = generate_price_batch(cfg, 5, 50, 1);
  const auto b = generate_price_batch(cfg, 5, 50, 4);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].prices == b[i].prices);
}

TEST_CASE("earnings paths") {
  EarningsConfig flat;
  flat.growth_mean = 0;
  flat.growth_sd = 0;
  flat.shock_sd = 0;
  const auto c = generate_earnings_path(flat, 1);
  for (double v : c.values) CHECK(v == doctest::Approx(flat.initial));

  EarningsConfig bad;
  bad.persistence = 1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);

  // Growth rates are g + rho eta_{t-1} + eta_t, an MA(1) with lag-1
  // autocorrelation rho / (1 + rho^2).
  CHECK(earnings_growth_lag1_autocorr(0.3) == doctest::Approx(0.3 / 1.09));
  for (double rho : {0.0, 0.3}) {
    EarningsConfig cfg;
    cfg.persistence = rho;
    cfg.quarters = 20001;
    cfg.shock_sd = 0.01;
    cfg.growth_sd = 0.0;
    cfg.growth_mean = 0.0;
    const auto path = generate_earnings_path(cfg, 99);
    // Work with the additive growth increments directly.
    std::vector<double> g(path.growth_rates());
    const double r1 = stats::autocorrelation(g, 1);
    CHECK(std::abs(r1 - rho / (1 + rho * rho)) < 0.03);
  }
}

TEST_CASE("ks statistic") {
  std::vector<double> a{1, 2, 3, 4, 5};
  CHECK(ks_statistic(a, a) == 0.0);
  CHECK_FALSE(ks_test(a, a).reject);
  std::vector<double> zeros(50, 0.0), ones(50, 1.0);
  CHECK(ks_statistic(zeros, ones) == 1.0);
  CHECK(ks_test(zeros, ones).reject);
  std::vector<double> empty;
  CHECK_THROWS_AS(ks_statistic(empty, a), InsufficientData);
  // Hand-worked: {1,2,3} vs {2.5} -> max gap 2/3 at x = 2.
  std::vector<double> one{2.5}, three{1, 2, 3};
  CHECK(ks_statistic(three, one) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("ks null rejection rate") {
  int rejections = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(2024, "ks-null", t));
    std::vector<double> a(500), b(500);
    for (auto& x : a) x = rng.normal();
    for (auto& x : b) x = rng.normal();
    rejections += ks_test(a, b).reject;
  }
  const double rate = static_cast<double>(rejections) / trials;
  MESSAGE("KS null rejection rate " << rate);
  CHECK(rate >= 0.035);
  CHECK(rate <= 0.065);
}

TEST_CASE("path selection") {
  PricePathConfig cfg;
  cfg.drift_sd = 0.0;
  cfg.vol_lo = 0.25;
  cfg.vol_hi = 0.25 + 1e-9;
  const auto ref = reference_returns(cfg, 200, 7);
  int first = 0;
  const int runs = 1000;
  for (int i = 0; i < runs; ++i) first += select_path(cfg, ref, derive_seed(8, "sel", i)).candidate == 0;
  MESSAGE("first-candidate acceptance " << static_cast<double>(first) / runs);
  CHECK(first >= 0.93 * runs);

  const auto s1 = select_path(cfg, ref, 123);
  const auto s2 = select_path(cfg, ref, 123);
  CHECK(s1.path.prices == s2.path.prices);
  CHECK(s1.candidate == s2.candidate);

  std::vector<double> constant(500, 0.0);
  const auto fb = select_path(cfg, constant, 5);
  CHECK(fb.fallback);
  CHECK(fb.ks.reject);
}

TEST_CASE("discriminator") {
  PricePathConfig cfg;
  const auto a = generate_price_batch(cfg, 1, 300);
  const auto b = generate_price_batch(cfg, 2, 300);
  const auto same = discriminate(a, b, 3);
  MESSAGE("same-distribution accuracy " << same.accuracy);
  CHECK(same.accuracy >= 0.45);
  CHECK(same.accuracy <= 0.55);
  CHECK(same.fold_accuracy.size() == 5);

  PricePathConfig wild = cfg;
  wild.vol_lo *= 2;
  wild.vol_hi *= 2;
  const auto c = generate_price_batch(wild, 4, 300);
  CHECK(discriminate(a, c, 3).accuracy > 0.80);

  std::vector<SeriesFeatures> x;
  std::vector<int> labels;
  for (const auto& p : a) x.push_back(series_features(p));
  for (const auto& p : c) x.push_back(series_features(p));
  labels.resize(x.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i < a.size() ? 0 : 1;
  Rng rng(77);
  shuffle(labels, rng);
  const auto perm = discriminate_features(x, labels, 3);
  CHECK(std::abs(perm.accuracy - 0.5) < 0.06);

  std::vector<PricePath> small(a.begin(), a.begin() + 50);
  CHECK_THROWS_AS(discriminate(small, small, 1), InsufficientData);
}

TEST_CASE("asset identifiers") {
  CHECK(asset_id(5, 0) == asset_id(5, 0));
  const std::regex pattern("Asset [A-Z][0-9]{3}");
  AssetIdSource src(31);
  std::set<std::string> seen;
  for (int i = 0; i < 10000; ++i) {
    const auto id = src.next();
    CHECK(std::regex_match(id, pattern));
    seen.insert(id);
  }
  CHECK(seen.size() == 10000);
}
