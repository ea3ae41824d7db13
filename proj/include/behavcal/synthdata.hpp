#pragma once

// Synthetic, contamination-free market data: GBM price paths, AR earnings,
// two-sample Kolmogorov-Smirnov screening, and a classifier-based
// indistinguishability check.
//
// Time units: drift and volatility are per annum; price paths step monthly
// (dt = 1/12). Earnings step quarterly.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "behavcal/rng.hpp"

namespace behavcal {

struct PricePathConfig {
  double drift_mean = 0.05;
  double drift_sd = 0.10;
  double vol_lo = 0.15;
  double vol_hi = 0.40;
  double s0_lo = 20.0;
  double s0_hi = 200.0;
  int months = 24;
  int candidates = 20;
  double ks_alpha = 0.05;

  void validate() const;
};

struct GbmParams {
  double mu = 0.05;
  double sigma = 0.25;
  double s0 = 100.0;
};

struct PricePath {
  GbmParams params;
  std::vector<double> prices;  // months + 1 values, prices[0] = s0

  std::vector<double> log_returns() const;
};

inline constexpr double kMonth = 1.0 / 12.0;

GbmParams draw_gbm_params(const PricePathConfig& cfg, Rng& rng);

// Exact log-normal stepping: S_{t+1} = S_t exp((mu - sigma^2/2) dt + sigma sqrt(dt) z).
// Prices are computed from the cumulative Brownian increment so that
// sigma = 0 reproduces s0 * exp(mu * t) without accumulated rounding.
PricePath simulate_gbm(const GbmParams& params, int months, Rng& rng);

// Draws (mu, sigma, s0) from the config priors, then simulates.
PricePath generate_price_path(const PricePathConfig& cfg, std::uint64_t seed);

// Independent paths with per-index seeds derive_seed(root, "price-path", i).
std::vector<PricePath> generate_price_batch(const PricePathConfig& cfg, std::uint64_t root_seed,
                                            std::size_t count, unsigned jobs = 1);

struct EarningsConfig {
  double growth_mean = 0.03;
  double growth_sd = 0.08;
  double persistence = 0.3;
  double shock_sd = 0.12;
  int quarters = 8;
  double initial = 5.0;  // millions

  void validate() const;
};

struct EarningsPath {
  double growth = 0.0;            // per-path growth draw g
  std::vector<double> values;     // E_0 .. E_{quarters-1}
  std::vector<double> shocks;     // eta_0 .. eta_{quarters-1}; eta_0 is the pre-sample shock
  double persistence = 0.0;
  double shock_sd = 0.0;

  // Growth rates E_t / E_{t-1} - 1 for t >= 1.
  std::vector<double> growth_rates() const;
  // Conditional distribution of the next quarter given the path so far.
  double next_mean() const;
  double next_sd() const;
};

// E_t = E_{t-1} (1 + g + rho eta_{t-1} + eta_t).
EarningsPath generate_earnings_path(const EarningsConfig& cfg, std::uint64_t seed);

// Population lag-1 autocorrelation of the growth-rate process, rho / (1 + rho^2).
double earnings_growth_lag1_autocorr(double persistence);

struct KsResult {
  double d = 0.0;
  double critical = 0.0;  // asymptotic c(alpha) sqrt((n+m)/(nm))
  double p_value = 1.0;   // asymptotic Kolmogorov tail
  bool reject = false;
};

// Two-sample statistic D = sup |F_a - F_b|. Throws InsufficientData on an
// empty sample.
double ks_statistic(std::span<const double> a, std::span<const double> b);
KsResult ks_test(std::span<const double> a, std::span<const double> b, double alpha = 0.05);
double ks_critical_value(std::size_t n, std::size_t m, double alpha);

struct SelectedPath {
  PricePath path;
  KsResult ks;
  int candidate = 0;       // index of the returned candidate
  bool fallback = false;   // no candidate passed; minimal-D candidate returned
};

// Generates up to cfg.candidates paths and returns the first whose monthly
// log returns pass the KS test against `reference`.
SelectedPath select_path(const PricePathConfig& cfg, std::span<const double> reference,
                         std::uint64_t seed);

// Pooled monthly log returns from `paths` GBM paths at the prior centre
// (mu = drift_mean, sigma = midpoint of the volatility range).
std::vector<double> reference_returns(const PricePathConfig& cfg, std::size_t paths,
                                      std::uint64_t seed);

// Fixed feature vector used by the discriminator.
//  0 mean      1 sd       2 skewness   3 excess kurtosis
//  4..8 return autocorrelation lags 1-5
//  9..11 mean rolling volatility over 3/6/12-period windows
//  12 max drawdown   13 mean drawdown   14 fraction of periods in drawdown
inline constexpr std::size_t kSeriesFeatureCount = 15;
using SeriesFeatures = std::array<double, kSeriesFeatureCount>;
SeriesFeatures series_features(const PricePath& path);

struct DiscriminatorResult {
  double accuracy = 0.0;
  std::vector<double> fold_accuracy;
  std::size_t n = 0;
};

// k-fold cross-validated accuracy of an L2-regularised logistic classifier.
// Requires >= 100 paths per batch.
DiscriminatorResult discriminate(std::span<const PricePath> batch_a,
                                 std::span<const PricePath> batch_b, std::uint64_t seed,
                                 int folds = 5);

// Same learner on precomputed features and labels (0/1).
DiscriminatorResult discriminate_features(std::span<const SeriesFeatures> x,
                                          std::span<const int> labels, std::uint64_t seed,
                                          int folds = 5);

// Identifiers of the form "Asset X427". The i-th identifier of a seed comes
// from an affine permutation of the 26,000-element space, so a run never
// repeats an identifier within its first 26,000 draws.
inline constexpr std::uint64_t kAssetIdSpace = 26'000;
std::string asset_id(std::uint64_t seed, std::uint64_t index);
std::string generate_asset_id(std::uint64_t seed);

class AssetIdSource {
 public:
  explicit AssetIdSource(std::uint64_t seed) : seed_(seed) {}
  std::string next();

 private:
  std::uint64_t seed_;
  std::uint64_t index_ = 0;
};

}  // namespace behavcal
