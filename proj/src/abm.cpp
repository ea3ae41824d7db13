#include "behavcal/abm.hpp"

#include <algorithm>
#include <cmath>

#include "behavcal/error.hpp"
#include "behavcal/parallel.hpp"
#include "behavcal/rng.hpp"
#include "behavcal/stats.hpp"

namespace behavcal {

std::string_view to_string(ForecastMode m) {
  switch (m) {
    case ForecastMode::fundamental: return "fundamental";
    case ForecastMode::price: return "price";
    case ForecastMode::trend: return "trend";
  }
  return "?";
}

ForecastMode parse_forecast_mode(std::string_view s) {
  if (s == "fundamental") return ForecastMode::fundamental;
  if (s == "price") return ForecastMode::price;
  if (s == "trend") return ForecastMode::trend;
  throw InvalidArgument("unknown forecast mode '" + std::string(s) + "'");
}

void MarketConfig::validate() const {
  if (!(sigma_v > 0.0) || !std::isfinite(sigma_v)) throw InvalidArgument("market: sigma_v must be positive");
  if (!(gamma_risk > 0.0)) throw InvalidArgument("market: gamma_risk must be positive");
  if (periods < 100) throw InvalidArgument("market: periods must be >= 100");
  if (replications < 1) throw InvalidArgument("market: replications must be >= 1");
  if (!std::isfinite(theta)) throw InvalidArgument("market: theta must be finite");
  if (mass_rational < 0.0 || mass_extrap < 0.0 || std::abs(mass_rational + mass_extrap - 1.0) > 1e-9)
    throw InvalidArgument("market: type masses must be non-negative and sum to 1");
  if (mode == ForecastMode::trend && trend_lookback < 1) throw InvalidArgument("market: trend_lookback must be >= 1");
  if (heterogeneous) {
    if (heterogeneous->theta_lo > heterogeneous->theta_hi)
      throw InvalidArgument("market: heterogeneous theta_lo must not exceed theta_hi");
    if (heterogeneous->agents < 1) throw InvalidArgument("market: heterogeneous agents must be >= 1");
  }
  if (trading_cost && !(*trading_cost >= 0.0)) throw InvalidArgument("market: trading_cost must be >= 0");
  if (news) {
    if (!(news->prob >= 0.0 && news->prob <= 1.0)) throw InvalidArgument("market: news prob must lie in [0, 1]");
    if (!(news->variance_multiplier > 0.0)) throw InvalidArgument("market: news variance multiplier must be positive");
  }
  if (!std::isfinite(v0)) throw InvalidArgument("market: v0 must be finite");
}

MarketConfig MarketConfig::baseline() {
  MarketConfig c;
  c.mass_rational = 1.0;
  c.mass_extrap = 0.0;
  return c;
}

namespace {

std::vector<TraderType> make_types(const MarketConfig& cfg, std::uint64_t seed) {
  std::vector<TraderType> types;
  if (cfg.mass_rational > 0.0) types.push_back({"rational", cfg.mass_rational, true, 0.0});
  if (cfg.mass_extrap > 0.0) {
    if (cfg.heterogeneous) {
      Rng rng(derive_seed(seed, "abm-thetas"));
      const auto& h = *cfg.heterogeneous;
      const double m = cfg.mass_extrap / static_cast<double>(h.agents);
      for (std::size_t i = 0; i < h.agents; ++i)
        types.push_back({"extrapolative-" + std::to_string(i + 1), m, false, rng.uniform(h.theta_lo, h.theta_hi)});
    } else {
      types.push_back({"extrapolative", cfg.mass_extrap, false, cfg.theta});
    }
  }
  return types;
}

}  // namespace

SimulationResult simulate(const MarketConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  SimulationResult out;
  out.types = make_types(cfg, seed);
  const std::size_t nt = out.types.size();
  const std::size_t lag = cfg.mode == ForecastMode::trend ? cfg.trend_lookback : 1;
  const std::size_t pre = lag + 2;
  const std::size_t total = pre + cfg.burn_in + cfg.periods + 1;
  std::vector<double> v(total, cfg.v0), p(total, cfg.v0);
  std::vector<bool> news(total, false);
  std::vector<double> held(nt, 0.0);
  std::vector<std::size_t> trades(nt, 0);
  std::vector<double> expect(nt), target(nt);
  std::vector<char> active(nt, 1), next_active(nt, 1);

  const double k = cfg.gamma_risk * cfg.sigma_v * cfg.sigma_v;
  const double band = cfg.trading_cost ? *cfg.trading_cost / k : 0.0;
  const std::size_t first_recorded = pre + cfg.burn_in;
  Rng rng(derive_seed(seed, "abm-shocks"));

  for (std::size_t t = pre; t < total; ++t) {
    double sd = cfg.sigma_v;
    if (cfg.news) {
      news[t] = rng.bernoulli(cfg.news->prob);
      if (news[t]) sd *= std::sqrt(cfg.news->variance_multiplier);
    }
    v[t] = v[t - 1] + rng.normal(0.0, sd);

    for (std::size_t i = 0; i < nt; ++i) {
      const auto& ty = out.types[i];
      if (ty.rational) {
        expect[i] = v[t];
        continue;
      }
      switch (cfg.mode) {
        case ForecastMode::fundamental: expect[i] = v[t] + ty.theta * (v[t] - v[t - 1]); break;
        case ForecastMode::price: expect[i] = p[t - 1] + ty.theta * (p[t - 1] - p[t - 2]); break;
        case ForecastMode::trend: expect[i] = v[t] + ty.theta * (p[t - 1] - p[t - 1 - lag]); break;
      }
    }

    auto clear = [&](const std::vector<char>& on) {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < nt; ++i)
        if (on[i]) {
          num += out.types[i].mass * expect[i];
          den += out.types[i].mass;
        }
      return den > 0.0 ? num / den : p[t - 1];
    };

    if (!cfg.trading_cost) {
      p[t] = clear(active);
    } else {
      // Active set: types whose desired trade clears the no-trade band at
      // the price their own participation produces. Iterated to a fixed
      // point; a cycle falls back to everyone trading.
      std::fill(active.begin(), active.end(), 1);
      bool settled = false;
      for (int iter = 0; iter < 2 * static_cast<int>(nt) + 2; ++iter) {
        const double price = clear(active);
        for (std::size_t i = 0; i < nt; ++i) {
          target[i] = (expect[i] - price) / k;
          next_active[i] = std::abs(target[i] - held[i]) > band;
        }
        if (next_active == active) {
          settled = true;
          p[t] = price;
          break;
        }
        active = next_active;
      }
      if (!settled) {
        std::fill(active.begin(), active.end(), 1);
        p[t] = clear(active);
      }
      const bool any = std::any_of(active.begin(), active.end(), [](char c) { return c != 0; });
      for (std::size_t i = 0; i < nt; ++i)
        if (any && active[i]) {
          held[i] = (expect[i] - p[t]) / k;
          if (t > first_recorded) ++trades[i];
        }
    }
  }

  out.fundamental.assign(v.begin() + static_cast<std::ptrdiff_t>(first_recorded), v.end());
  out.price.assign(p.begin() + static_cast<std::ptrdiff_t>(first_recorded), p.end());
  out.returns.resize(cfg.periods);
  out.news.resize(cfg.periods);
  for (std::size_t i = 0; i < cfg.periods; ++i) {
    out.returns[i] = out.price[i + 1] - out.price[i];
    out.news[i] = news[first_recorded + i + 1];
  }
  out.trade_frequency.resize(nt, 1.0);
  if (cfg.trading_cost)
    for (std::size_t i = 0; i < nt; ++i)
      out.trade_frequency[i] = static_cast<double>(trades[i]) / static_cast<double>(cfg.periods);
  return out;
}

std::vector<double> arithmetic_returns(const std::vector<double>& log_prices) {
  std::vector<double> r;
  if (log_prices.size() < 2) return r;
  r.reserve(log_prices.size() - 1);
  for (std::size_t i = 1; i < log_prices.size(); ++i) r.push_back(std::expm1(log_prices[i] - log_prices[i - 1]));
  return r;
}

MomentumStats momentum_stats(const std::vector<double>& returns, const std::vector<bool>* news) {
  if (returns.size() < 100) throw InsufficientData("momentum_stats: need at least 100 returns");
  if (news && news->size() != returns.size()) throw InvalidArgument("momentum_stats: news flags length mismatch");
  MomentumStats m;
  m.autocorr.resize(kMaxLag);
  for (std::size_t k = 1; k <= kMaxLag; ++k) m.autocorr[k - 1] = stats::autocorrelation(returns, k);
  for (std::size_t k = 1; k <= 6; ++k) m.short_momentum += m.autocorr[k - 1] / 6.0;
  for (std::size_t k = 12; k <= 24; ++k) m.long_reversal += m.autocorr[k - 1] / 13.0;
  m.peak_lag = 1;
  for (int k = 2; k <= 12; ++k)
    if (m.autocorr[k - 1] > m.autocorr[m.peak_lag - 1]) m.peak_lag = k;

  std::vector<double> lx, ly;
  for (int k = 1; k <= 12; ++k)
    if (m.autocorr[k - 1] > 0.0) {
      lx.push_back(k);
      ly.push_back(-std::log(m.autocorr[k - 1]));
    }
  m.decay_rate = std::numeric_limits<double>::quiet_NaN();
  if (lx.size() >= 3) m.decay_rate = 12.0 * stats::ols(std::span<const double>(lx), std::span<const double>(ly)).coef[1];

  if (news) {
    double sum = 0.0;
    int used = 0;
    for (std::size_t k = 1; k <= 3; ++k) {
      std::vector<double> a, b;
      for (std::size_t t = 0; t + k < returns.size(); ++t)
        if ((*news)[t]) {
          a.push_back(returns[t]);
          b.push_back(returns[t + k]);
        }
      if (a.size() < 3) continue;
      try {
        sum += stats::pearson(a, b);
        ++used;
      } catch (const DegenerateData&) {
      }
    }
    if (used == 3) m.post_news = sum / 3.0;
  }
  return m;
}

ReplicationSummary run_replications(const MarketConfig& cfg, unsigned jobs) {
  cfg.validate();
  const std::size_t R = cfg.replications;
  std::vector<MomentumStats> reps(R);
  std::vector<std::vector<double>> freq(R);
  std::vector<std::string> names;
  parallel_for(R, jobs, [&](std::size_t r) {
    const auto sim = simulate(cfg, derive_seed(cfg.seed, "abm-replication", r));
    reps[r] = momentum_stats(sim.returns, cfg.news ? &sim.news : nullptr);
    freq[r] = sim.trade_frequency;
    if (r == 0) {
      std::vector<std::string> n;
      for (const auto& t : sim.types) n.push_back(t.name);
      names = std::move(n);
    }
  });

  auto mean_se = [&](auto get, double& mean, double& se) {
    std::vector<double> xs;
    for (const auto& m : reps) {
      const double x = get(m);
      if (std::isfinite(x)) xs.push_back(x);
    }
    mean = xs.empty() ? std::numeric_limits<double>::quiet_NaN() : stats::mean(xs);
    se = xs.size() < 2 ? std::numeric_limits<double>::quiet_NaN()
                       : stats::stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
  };

  ReplicationSummary s;
  s.replications = R;
  s.mean.autocorr.resize(kMaxLag);
  s.autocorr_se.resize(kMaxLag);
  for (std::size_t k = 0; k < kMaxLag; ++k)
    mean_se([k](const MomentumStats& m) { return m.autocorr[k]; }, s.mean.autocorr[k], s.autocorr_se[k]);
  mean_se([](const MomentumStats& m) { return m.short_momentum; }, s.mean.short_momentum, s.short_se);
  mean_se([](const MomentumStats& m) { return m.long_reversal; }, s.mean.long_reversal, s.long_se);
  double unused = 0.0;
  mean_se([](const MomentumStats& m) { return static_cast<double>(m.peak_lag); }, s.peak_lag_mean, unused);
  mean_se([](const MomentumStats& m) { return m.decay_rate; }, s.mean.decay_rate, s.decay_se);
  // Peak lag of the mean autocorrelation function.
  s.mean.peak_lag = 1;
  for (int k = 2; k <= 12; ++k)
    if (s.mean.autocorr[k - 1] > s.mean.autocorr[s.mean.peak_lag - 1]) s.mean.peak_lag = k;
  if (cfg.news) {
    double m = 0.0, se = 0.0;
    mean_se([](const MomentumStats& x) { return x.post_news.value_or(std::numeric_limits<double>::quiet_NaN()); }, m,
            se);
    if (std::isfinite(m)) {
      s.mean.post_news = m;
      s.post_news_se = se;
    }
  }
  s.type_names = names;
  s.trade_frequency.assign(names.size(), 0.0);
  for (const auto& f : freq)
    for (std::size_t i = 0; i < f.size() && i < s.trade_frequency.size(); ++i)
      s.trade_frequency[i] += f[i] / static_cast<double>(R);
  return s;
}

double fundamental_mode_lag1(double theta, double mass_extrap) {
  const double b = mass_extrap * theta;
  return -(1.0 + b) * b / ((1.0 + b) * (1.0 + b) + b * b);
}

}  // namespace behavcal
