#include "behavcal/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "behavcal/error.hpp"
#include "behavcal/parallel.hpp"
#include "behavcal/stats.hpp"

namespace behavcal {

void PricePathConfig::validate() const {
  auto fail = [](const char* m) { throw InvalidArgument(std::string("PricePathConfig: ") + m); };
  if (!std::isfinite(drift_mean) || !(drift_sd >= 0.0)) fail("drift prior must be finite, sd >= 0");
  if (!(vol_lo >= 0.0 && vol_lo < vol_hi)) fail("need 0 <= vol_lo < vol_hi");
  if (!(s0_lo > 0.0 && s0_lo <= s0_hi)) fail("need 0 < s0_lo <= s0_hi");
  if (months < 1) fail("months must be >= 1");
  if (candidates < 1) fail("candidates must be >= 1");
  if (!(ks_alpha > 0.0 && ks_alpha < 1.0)) fail("ks_alpha must lie in (0, 1)");
}

std::vector<double> PricePath::log_returns() const {
  std::vector<double> r;
  if (prices.size() < 2) return r;
  r.reserve(prices.size() - 1);
  for (std::size_t t = 1; t < prices.size(); ++t) r.push_back(std::log(prices[t] / prices[t - 1]));
  return r;
}

GbmParams draw_gbm_params(const PricePathConfig& cfg, Rng& rng) {
  GbmParams p;
  p.mu = rng.normal(cfg.drift_mean, cfg.drift_sd);
  p.sigma = rng.uniform(cfg.vol_lo, cfg.vol_hi);
  p.s0 = rng.uniform(cfg.s0_lo, cfg.s0_hi);
  return p;
}

PricePath simulate_gbm(const GbmParams& params, int months, Rng& rng) {
  if (months < 1) throw InvalidArgument("simulate_gbm: months must be >= 1");
  if (!(params.sigma >= 0.0) || !(params.s0 > 0.0))
    throw InvalidArgument("simulate_gbm: need sigma >= 0 and s0 > 0");
  PricePath path;
  path.params = params;
  path.prices.resize(static_cast<std::size_t>(months) + 1);
  path.prices[0] = params.s0;
  const double drift = params.mu - 0.5 * params.sigma * params.sigma;
  const double step_sd = params.sigma * std::sqrt(kMonth);
  double w = 0.0;
  for (int t = 1; t <= months; ++t) {
    w += rng.normal();
    const double time = static_cast<double>(t) * kMonth;
    path.prices[static_cast<std::size_t>(t)] = params.s0 * std::exp(drift * time + step_sd * w);
  }
  return path;
}

PricePath generate_price_path(const PricePathConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const auto params = draw_gbm_params(cfg, rng);
  return simulate_gbm(params, cfg.months, rng);
}

std::vector<PricePath> generate_price_batch(const PricePathConfig& cfg, std::uint64_t root_seed,
                                            std::size_t count, unsigned jobs) {
  cfg.validate();
  std::vector<PricePath> out(count);
  parallel_for(count, jobs, [&](std::size_t i) {
    out[i] = generate_price_path(cfg, derive_seed(root_seed, "price-path", i));
  });
  return out;
}

// ---------------------------------------------------------------------------
// Earnings

void EarningsConfig::validate() const {
  auto fail = [](const char* m) { throw InvalidArgument(std::string("EarningsConfig: ") + m); };
  if (!(std::abs(persistence) < 1.0)) fail("|persistence| must be < 1");
  if (!(shock_sd >= 0.0) || !(growth_sd >= 0.0)) fail("standard deviations must be >= 0");
  if (!std::isfinite(growth_mean)) fail("growth_mean must be finite");
  if (quarters < 1) fail("quarters must be >= 1");
  if (!(initial > 0.0)) fail("initial earnings must be > 0");
}

std::vector<double> EarningsPath::growth_rates() const {
  std::vector<double> g;
  for (std::size_t t = 1; t < values.size(); ++t) g.push_back(values[t] / values[t - 1] - 1.0);
  return g;
}

double EarningsPath::next_mean() const {
  return values.back() * (1.0 + growth + persistence * shocks.back());
}

double EarningsPath::next_sd() const { return std::abs(values.back()) * shock_sd; }

EarningsPath generate_earnings_path(const EarningsConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  EarningsPath path;
  path.persistence = cfg.persistence;
  path.shock_sd = cfg.shock_sd;
  path.growth = rng.normal(cfg.growth_mean, cfg.growth_sd);
  const auto q = static_cast<std::size_t>(cfg.quarters);
  path.values.resize(q);
  path.shocks.resize(q);
  path.values[0] = cfg.initial;
  path.shocks[0] = rng.normal(0.0, cfg.shock_sd);
  for (std::size_t t = 1; t < q; ++t) {
    path.shocks[t] = rng.normal(0.0, cfg.shock_sd);
    path.values[t] = path.values[t - 1] *
                     (1.0 + path.growth + cfg.persistence * path.shocks[t - 1] + path.shocks[t]);
  }
  return path;
}

double earnings_growth_lag1_autocorr(double persistence) {
  return persistence / (1.0 + persistence * persistence);
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InsufficientData("ks_statistic: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const auto n = static_cast<double>(x.size());
  const auto m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() || j < y.size()) {
    double v;
    if (j >= y.size() || (i < x.size() && x[i] <= y[j]))
      v = x[i];
    else
      v = y[j];
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return d;
}

double ks_critical_value(std::size_t n, std::size_t m, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

namespace {

double kolmogorov_tail(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace

KsResult ks_test(std::span<const double> a, std::span<const double> b, double alpha) {
  KsResult r;
  r.d = ks_statistic(a, b);
  r.critical = ks_critical_value(a.size(), b.size(), alpha);
  const double ne = static_cast<double>(a.size()) * static_cast<double>(b.size()) /
                    static_cast<double>(a.size() + b.size());
  r.p_value = kolmogorov_tail(r.d * std::sqrt(ne));
  r.reject = r.d >= r.critical;
  return r;
}

SelectedPath select_path(const PricePathConfig& cfg, std::span<const double> reference,
                         std::uint64_t seed) {
  cfg.validate();
  if (reference.empty()) throw InsufficientData("select_path: empty reference sample");
  SelectedPath best;
  bool have_best = false;
  for (int k = 0; k < cfg.candidates; ++k) {
    auto path = generate_price_path(cfg, derive_seed(seed, "candidate", static_cast<std::uint64_t>(k)));
    const auto r = path.log_returns();
    const auto ks = ks_test(r, reference, cfg.ks_alpha);
    if (!ks.reject) return SelectedPath{std::move(path), ks, k, false};
    if (!have_best || ks.d < best.ks.d) {
      best = SelectedPath{std::move(path), ks, k, true};
      have_best = true;
    }
  }
  return best;
}

std::vector<double> reference_returns(const PricePathConfig& cfg, std::size_t paths,
                                      std::uint64_t seed) {
  cfg.validate();
  GbmParams centre;
  centre.mu = cfg.drift_mean;
  centre.sigma = 0.5 * (cfg.vol_lo + cfg.vol_hi);
  centre.s0 = 0.5 * (cfg.s0_lo + cfg.s0_hi);
  std::vector<double> out;
  out.reserve(paths * static_cast<std::size_t>(cfg.months));
  for (std::size_t i = 0; i < paths; ++i) {
    Rng rng(derive_seed(seed, "reference", i));
    const auto r = simulate_gbm(centre, cfg.months, rng).log_returns();
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Features and discriminator

namespace {

double safe_acf(std::span<const double> r, std::size_t lag) {
  if (lag >= r.size()) return 0.0;
  try {
    return stats::autocorrelation(r, lag);
  } catch (const DegenerateData&) {
    return 0.0;
  }
}

double mean_rolling_vol(std::span<const double> r, std::size_t window) {
  if (r.size() < 2) return 0.0;
  if (r.size() <= window) return stats::stddev(r);
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start + window <= r.size(); ++start) {
    s += stats::stddev(r.subspan(start, window));
    ++count;
  }
  return s / static_cast<double>(count);
}

}  // namespace

SeriesFeatures series_features(const PricePath& path) {
  SeriesFeatures f{};
  const auto r = path.log_returns();
  if (r.size() < 2) return f;
  f[0] = stats::mean(r);
  f[1] = stats::stddev(r);
  f[2] = stats::skewness(r);
  f[3] = stats::excess_kurtosis(r);
  for (std::size_t lag = 1; lag <= 5; ++lag) f[3 + lag] = safe_acf(r, lag);
  f[9] = mean_rolling_vol(r, 3);
  f[10] = mean_rolling_vol(r, 6);
  f[11] = mean_rolling_vol(r, 12);
  double peak = path.prices.front();
  double max_dd = 0.0, sum_dd = 0.0;
  std::size_t in_dd = 0;
  for (std::size_t t = 1; t < path.prices.size(); ++t) {
    peak = std::max(peak, path.prices[t]);
    const double dd = 1.0 - path.prices[t] / peak;
    max_dd = std::max(max_dd, dd);
    sum_dd += dd;
    if (dd > 0.0) ++in_dd;
  }
  const auto periods = static_cast<double>(path.prices.size() - 1);
  f[12] = max_dd;
  f[13] = sum_dd / periods;
  f[14] = static_cast<double>(in_dd) / periods;
  return f;
}

namespace {

constexpr double kRidge = 1.0;

struct LogisticModel {
  std::array<double, kSeriesFeatureCount> mu{}, sd{};
  std::array<double, kSeriesFeatureCount + 1> w{};

  double score(const SeriesFeatures& x) const {
    double z = w[0];
    for (std::size_t j = 0; j < kSeriesFeatureCount; ++j) z += w[j + 1] * (x[j] - mu[j]) / sd[j];
    return z;
  }
};

LogisticModel fit_logistic(std::span<const SeriesFeatures> x, std::span<const int> y,
                           std::span<const std::size_t> rows) {
  constexpr std::size_t p = kSeriesFeatureCount + 1;
  LogisticModel m;
  const auto n = static_cast<double>(rows.size());
  for (std::size_t j = 0; j < kSeriesFeatureCount; ++j) {
    double s = 0.0, s2 = 0.0;
    for (auto i : rows) s += x[i][j];
    const double mu = s / n;
    for (auto i : rows) s2 += (x[i][j] - mu) * (x[i][j] - mu);
    const double sd = std::sqrt(s2 / n);
    m.mu[j] = mu;
    m.sd[j] = sd > 1e-12 ? sd : 1.0;
  }
  std::array<double, p> row{};
  for (int iter = 0; iter < 50; ++iter) {
    std::vector<double> h(p * p, 0.0), g(p, 0.0);
    for (auto i : rows) {
      row[0] = 1.0;
      for (std::size_t j = 0; j < kSeriesFeatureCount; ++j) row[j + 1] = (x[i][j] - m.mu[j]) / m.sd[j];
      double z = 0.0;
      for (std::size_t j = 0; j < p; ++j) z += m.w[j] * row[j];
      const double prob = 1.0 / (1.0 + std::exp(-z));
      const double wt = std::max(prob * (1.0 - prob), 1e-10);
      for (std::size_t a = 0; a < p; ++a) {
        g[a] += (static_cast<double>(y[i]) - prob) * row[a];
        for (std::size_t b = 0; b <= a; ++b) h[a * p + b] += wt * row[a] * row[b];
      }
    }
    for (std::size_t a = 1; a < p; ++a) {
      g[a] -= kRidge * m.w[a];
      h[a * p + a] += kRidge;
    }
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = a + 1; b < p; ++b) h[a * p + b] = h[b * p + a];
    if (!stats::solve_spd(h, g, p)) break;
    double step = 0.0;
    for (std::size_t a = 0; a < p; ++a) {
      m.w[a] += g[a];
      step = std::max(step, std::abs(g[a]));
    }
    if (step < 1e-8) break;
  }
  return m;
}

}  // namespace

DiscriminatorResult discriminate_features(std::span<const SeriesFeatures> x,
                                          std::span<const int> labels, std::uint64_t seed,
                                          int folds) {
  if (x.size() != labels.size()) throw InvalidArgument("discriminate: feature/label size mismatch");
  if (folds < 2) throw InvalidArgument("discriminate: need at least two folds");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  if (pos.size() < static_cast<std::size_t>(folds) || neg.size() < static_cast<std::size_t>(folds))
    throw InsufficientData("discriminate: too few examples per class");

  // Stratified fold assignment.
  Rng rng(derive_seed(seed, "cv-folds"));
  shuffle(pos, rng);
  shuffle(neg, rng);
  std::vector<int> fold_of(labels.size());
  for (std::size_t k = 0; k < pos.size(); ++k) fold_of[pos[k]] = static_cast<int>(k % folds);
  for (std::size_t k = 0; k < neg.size(); ++k) fold_of[neg[k]] = static_cast<int>(k % folds);

  DiscriminatorResult res;
  res.n = labels.size();
  std::size_t correct_total = 0;
  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < labels.size(); ++i) (fold_of[i] == f ? test : train).push_back(i);
    const auto model = fit_logistic(x, labels, train);
    std::size_t correct = 0;
    for (auto i : test) {
      const int pred = model.score(x[i]) > 0.0 ? 1 : 0;
      if (pred == labels[i]) ++correct;
    }
    correct_total += correct;
    res.fold_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(test.size()));
  }
  res.accuracy = static_cast<double>(correct_total) / static_cast<double>(labels.size());
  return res;
}

DiscriminatorResult discriminate(std::span<const PricePath> batch_a,
                                 std::span<const PricePath> batch_b, std::uint64_t seed,
                                 int folds) {
  if (batch_a.size() < 100 || batch_b.size() < 100)
    throw InsufficientData("discriminate: need at least 100 paths per batch");
  std::vector<SeriesFeatures> x;
  std::vector<int> y;
  x.reserve(batch_a.size() + batch_b.size());
  for (const auto& p : batch_a) {
    x.push_back(series_features(p));
    y.push_back(0);
  }
  for (const auto& p : batch_b) {
    x.push_back(series_features(p));
    y.push_back(1);
  }
  return discriminate_features(x, y, seed, folds);
}

// ---------------------------------------------------------------------------
// Asset identifiers

std::string asset_id(std::uint64_t seed, std::uint64_t index) {
  Rng rng(derive_seed(seed, "asset-id"));
  std::uint64_t a = 1 + rng.below(kAssetIdSpace - 1);
  while (std::gcd(a, kAssetIdSpace) != 1) a = a % (kAssetIdSpace - 1) + 1;
  const std::uint64_t b = rng.below(kAssetIdSpace);
  const std::uint64_t code = (a * (index % kAssetIdSpace) + b) % kAssetIdSpace;
  std::string id = "Asset ";
  id += static_cast<char>('A' + code / 1000);
  const auto digits = code % 1000;
  id += static_cast<char>('0' + digits / 100);
  id += static_cast<char>('0' + (digits / 10) % 10);
  id += static_cast<char>('0' + digits % 10);
  return id;
}

std::string generate_asset_id(std::uint64_t seed) { return asset_id(seed, 0); }

std::string AssetIdSource::next() { return asset_id(seed_, index_++); }

}  // namespace behavcal
