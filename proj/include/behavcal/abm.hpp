#pragma once

// Two-type asset market with rational and extrapolative traders, and the
// return-autocorrelation statistics used to read momentum off it.
//
// Prices and fundamentals are log levels; returns are log differences.
// Clearing is zero net supply under CARA-normal demand
// D = (E - p) / (gamma * sigma^2), so the price is the mass-weighted mean of
// the expectations of the types that trade.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace behavcal {

// How extrapolators form E[v_{t+1}]:
//   fundamental  v_t + theta (v_t - v_{t-1})
//   price        p_{t-1} + theta (p_{t-1} - p_{t-2})
//   trend        v_t + theta (p_{t-1} - p_{t-1-L}),  L = trend_lookback
enum class ForecastMode { fundamental, price, trend };
std::string_view to_string(ForecastMode m);
ForecastMode parse_forecast_mode(std::string_view s);

struct NewsConfig {
  double prob = 0.10;
  double variance_multiplier = 2.0;
};

// Extrapolator mass split over `agents` equal-mass traders with theta drawn
// uniformly on [theta_lo, theta_hi] once per replication.
struct HeterogeneousConfig {
  double theta_lo = 0.0;
  double theta_hi = 0.88;
  std::size_t agents = 50;
};

struct MarketConfig {
  double sigma_v = 0.15;
  double gamma_risk = 2.0;
  std::size_t periods = 10000;
  std::size_t replications = 100;
  double theta = 0.0;
  double mass_rational = 0.5;
  double mass_extrap = 0.5;
  ForecastMode mode = ForecastMode::price;
  std::size_t trend_lookback = 12;
  std::optional<HeterogeneousConfig> heterogeneous;
  std::optional<double> trading_cost;  // per unit of demand traded
  std::optional<NewsConfig> news;
  double v0 = 4.605170185988092;  // log 100
  std::size_t burn_in = 200;
  std::uint64_t seed = 1;

  // Throws InvalidArgument on bad values.
  void validate() const;
  static MarketConfig baseline();
};

struct TraderType {
  std::string name;
  double mass = 0.0;
  bool rational = false;
  double theta = 0.0;
};

struct SimulationResult {
  std::vector<double> fundamental;  // log levels, burn-in removed
  std::vector<double> price;
  std::vector<double> returns;      // price[t] - price[t-1]
  std::vector<bool> news;           // news shock at the period of returns[t]
  std::vector<TraderType> types;
  // Fraction of periods in which each type traded (all ones without costs).
  std::vector<double> trade_frequency;
};

// One replication. Deterministic per (cfg, seed).
SimulationResult simulate(const MarketConfig& cfg, std::uint64_t seed);

// Simple returns exp(p_t - p_{t-1}) - 1 on exponentiated prices.
std::vector<double> arithmetic_returns(const std::vector<double>& log_prices);

inline constexpr std::size_t kMaxLag = 24;

struct MomentumStats {
  std::vector<double> autocorr;  // lags 1..24 at index 0..23
  double short_momentum = 0.0;   // mean of lags 1-6
  double long_reversal = 0.0;    // mean of lags 12-24
  int peak_lag = 1;              // argmax over lags 1-12
  double decay_rate = 0.0;       // NaN if fewer than three positive lags in 1-12
  std::optional<double> post_news;
};

// Throws InsufficientData for fewer than 100 returns, DegenerateData for a
// constant series.
MomentumStats momentum_stats(const std::vector<double>& returns,
                             const std::vector<bool>* news = nullptr);

struct ReplicationSummary {
  MomentumStats mean;
  std::vector<double> autocorr_se;
  double short_se = 0.0;
  double long_se = 0.0;
  double peak_lag_mean = 0.0;
  double decay_se = 0.0;
  std::optional<double> post_news_se;
  std::vector<std::string> type_names;
  std::vector<double> trade_frequency;  // mean across replications
  std::size_t replications = 0;
};

// Replication r uses seed derive_seed(cfg.seed, "abm-replication", r).
// Output is independent of `jobs`.
ReplicationSummary run_replications(const MarketConfig& cfg, unsigned jobs = 1);

// Closed-form lag-1 autocorrelation of fundamental-mode returns,
// r_t = (1 + b) dv_t - b dv_{t-1} with b = mass_extrap * theta.
double fundamental_mode_lag1(double theta, double mass_extrap = 0.5);

}  // namespace behavcal
