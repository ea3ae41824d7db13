#include "behavcal/validator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "behavcal/error.hpp"
#include "behavcal/format.hpp"
#include "behavcal/parallel.hpp"
#include "behavcal/rng.hpp"
#include "behavcal/stats.hpp"

namespace behavcal {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

int expected_direction(Bias b) {
  return b == Bias::overconfidence || b == Bias::disposition ? -1 : 1;
}

// ---------------------------------------------------------------------------
// C1

MonotoneResult check_c1_monotonicity(std::span<const EstimateResult> by_strength, int direction, double alpha) {
  if (by_strength.size() < 3) throw InvalidArgument("check_c1_monotonicity: need at least 3 strength levels");
  if (direction != 1 && direction != -1) throw InvalidArgument("check_c1_monotonicity: direction must be +1 or -1");
  MonotoneResult m;
  const std::size_t n = by_strength.size();
  std::vector<double> x(n), y(n), se(n);
  bool finite = true, weights_ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = by_strength[i].keys.strength;
    y[i] = direction * by_strength[i].point;
    se[i] = by_strength[i].std_error;
    if (!std::isfinite(y[i])) finite = false;
    if (!(se[i] > 0.0) || !std::isfinite(se[i])) weights_ok = false;
    if (i && !(x[i] > x[i - 1])) throw InvalidArgument("check_c1_monotonicity: strengths must be increasing");
  }
  if (!finite) {
    m.trend_p = 1.0;
    return m;
  }
  m.monotone = true;
  for (std::size_t i = 1; i < n; ++i) {
    const double step = y[i] - y[i - 1];
    m.steps.push_back(step);
    const double a = std::isfinite(se[i]) ? se[i] : 0.0, b = std::isfinite(se[i - 1]) ? se[i - 1] : 0.0;
    if (step < -2.0 * std::sqrt(a * a + b * b)) m.monotone = false;
  }

  std::vector<double> w(n, 1.0);
  if (weights_ok)
    for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / (se[i] * se[i]);
  const double sw = std::accumulate(w.begin(), w.end(), 0.0);
  double xm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xm += w[i] * x[i] / sw;
    ym += w[i] * y[i] / sw;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += w[i] * (x[i] - xm) * (x[i] - xm);
    sxy += w[i] * (x[i] - xm) * (y[i] - ym);
  }
  m.trend_slope = sxy / sxx;
  double slope_se;
  if (weights_ok) {
    slope_se = 1.0 / std::sqrt(sxx);
  } else {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - ym - m.trend_slope * (x[i] - xm);
      rss += r * r;
    }
    slope_se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  if (slope_se > 0.0) {
    m.trend_z = m.trend_slope / slope_se;
    m.trend_p = weights_ok ? 1.0 - stats::normal_cdf(m.trend_z)
                           : 1.0 - stats::student_t_cdf(m.trend_z, static_cast<double>(n - 2));
  } else {
    m.trend_z = m.trend_slope > 0.0 ? INFINITY : (m.trend_slope < 0.0 ? -INFINITY : 0.0);
    m.trend_p = m.trend_slope > 0.0 ? 0.0 : (m.trend_slope < 0.0 ? 1.0 : 0.5);
  }
  m.weak = m.monotone && !(m.trend_p < alpha);
  return m;
}

// ---------------------------------------------------------------------------
// C2, C3

bool check_c2_range(double lo, double hi, double benchmark, double delta) {
  if (lo > hi) throw InvalidArgument("check_c2_range: lo exceeds hi");
  return benchmark >= lo - delta && benchmark <= hi + delta;
}

StabilityResult check_c3_stability(std::span<const double> repeats, double cv_threshold, double zero_tol,
                                   double abs_threshold) {
  if (repeats.size() < 5) throw InvalidArgument("check_c3_stability: need at least 5 repeats");
  StabilityResult s;
  const double m = stats::mean(repeats);
  s.dispersion = stats::stddev(repeats);
  if (std::abs(m) < zero_tol) {
    s.near_zero_mean = true;
    s.cv = kNaN;
    s.stable = s.dispersion < abs_threshold;
  } else {
    s.cv = s.dispersion / std::abs(m);
    s.stable = s.cv < cv_threshold;
  }
  return s;
}

// ---------------------------------------------------------------------------
// C4

std::string_view to_string(PredictedSign s) {
  switch (s) {
    case PredictedSign::positive: return "positive";
    case PredictedSign::negative: return "negative";
    case PredictedSign::non_positive: return "non_positive";
    case PredictedSign::zero: return "zero";
  }
  return "?";
}

const std::vector<CoherencePair>& coherence_pairs() {
  static const std::vector<CoherencePair> pairs = {
      {Bias::loss_aversion, Bias::disposition, PredictedSign::positive, false},
      {Bias::overconfidence, Bias::herding, PredictedSign::negative, false},
      {Bias::loss_aversion, Bias::herding, PredictedSign::non_positive, false},
      {Bias::extrapolation, Bias::herding, PredictedSign::zero, false},
      {Bias::probability_weighting, Bias::loss_aversion, PredictedSign::positive, false},
      {Bias::anchoring, Bias::anchoring, PredictedSign::zero, true},
  };
  return pairs;
}

namespace {

struct Corr {
  double r = 0.0, p = 1.0;
  std::size_t n = 0;
  bool ok = false;
};

double oriented(Bias b, double x) { return b == Bias::overconfidence ? kNominalCoverage - x : x; }

Corr correlate(const std::map<Bias, std::map<std::string, double>>& m, Bias a, Bias b, std::size_t min_pairs) {
  Corr c;
  const auto ia = m.find(a), ib = m.find(b);
  if (ia == m.end() || ib == m.end()) return c;
  std::vector<double> xa, xb;
  for (const auto& [id, va] : ia->second) {
    const auto jt = ib->second.find(id);
    if (jt == ib->second.end() || !std::isfinite(va) || !std::isfinite(jt->second)) continue;
    xa.push_back(oriented(a, va));
    xb.push_back(oriented(b, jt->second));
  }
  c.n = xa.size();
  if (c.n < min_pairs || c.n < 4) return c;
  try {
    c.r = stats::pearson(xa, xb);
  } catch (const DegenerateData&) {
    return c;
  }
  c.p = stats::pearson_pvalue(c.r, c.n);
  c.ok = true;
  return c;
}

bool sign_agrees(PredictedSign s, double r, double p, double alpha) {
  const bool sig = p < alpha;
  switch (s) {
    case PredictedSign::positive: return sig && r > 0.0;
    case PredictedSign::negative: return sig && r < 0.0;
    case PredictedSign::non_positive: return !(sig && r > 0.0);
    case PredictedSign::zero: return !sig;
  }
  return false;
}

}  // namespace

CoherenceResult check_c4_coherence(const std::map<Bias, std::map<std::string, double>>& agent_measures,
                                   double alpha, std::size_t min_pairs) {
  CoherenceResult out;
  std::size_t evaluated = 0;
  bool all = true;
  for (const auto& pair : coherence_pairs()) {
    CoherenceRow row;
    row.sign = pair.sign;
    if (!pair.against_all) {
      row.label = std::string(to_string(pair.a)) + "~" + std::string(to_string(pair.b));
      const auto c = correlate(agent_measures, pair.a, pair.b, min_pairs);
      if (c.ok) {
        row.evaluated = true;
        row.r = c.r;
        row.p = c.p;
        row.n = c.n;
        row.pass = sign_agrees(pair.sign, c.r, c.p, alpha);
      }
    } else {
      row.label = std::string(to_string(pair.a)) + "~others";
      row.pass = true;
      row.p = 1.0;
      for (Bias other : kAllBiases) {
        if (other == pair.a) continue;
        const auto c = correlate(agent_measures, pair.a, other, min_pairs);
        if (!c.ok) continue;
        if (!row.evaluated || std::abs(c.r) > std::abs(row.r)) row.r = c.r;
        row.p = std::min(row.p, c.p);
        row.n = row.evaluated ? std::min(row.n, c.n) : c.n;
        row.evaluated = true;
        row.pass = row.pass && sign_agrees(pair.sign, c.r, c.p, alpha);
      }
      if (!row.evaluated) row.pass = false;
    }
    if (row.evaluated) {
      ++evaluated;
      all = all && row.pass;
    }
    out.rows.push_back(std::move(row));
  }
  if (evaluated == 0) throw InsufficientData("check_c4_coherence: no measure pair has enough agents");
  out.pass = all;
  return out;
}

// ---------------------------------------------------------------------------
// Tiers

std::string_view to_string(Tier t) {
  switch (t) {
    case Tier::strong: return "Strong";
    case Tier::moderate: return "Moderate";
    case Tier::weak: return "Weak";
    case Tier::directional: return "Directional";
    case Tier::fail: return "Fail";
  }
  return "?";
}

Tier parse_tier(std::string_view s) {
  const auto l = to_lower(s);
  if (l == "strong") return Tier::strong;
  if (l == "moderate") return Tier::moderate;
  if (l == "weak") return Tier::weak;
  if (l == "directional") return Tier::directional;
  if (l == "fail") return Tier::fail;
  throw InvalidArgument("unknown tier '" + std::string(s) + "'");
}

TierResult classify_tier(const CalibratedRange& range, double benchmark) {
  TierResult r;
  const double shift = range.calibrated - range.baseline;
  const double wanted = benchmark - range.baseline;
  r.direction_ok = shift != 0.0 && (shift > 0.0) == (wanted > 0.0) && wanted != 0.0;
  if (check_c2_range(range.lo(), range.hi(), benchmark)) {
    r.tier = Tier::strong;
    r.gap = 0.0;
    return r;
  }
  const double nearest = benchmark < range.lo() ? range.lo() : range.hi();
  r.gap = benchmark == 0.0 ? INFINITY : std::abs(nearest - benchmark) / std::abs(benchmark);
  if (r.direction_ok) {
    r.tier = r.gap < 0.5 ? Tier::moderate : Tier::weak;
  } else if (shift != 0.0 && std::abs(shift) >= 0.5 * std::abs(wanted)) {
    r.tier = Tier::directional;
  } else {
    r.tier = Tier::fail;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Reports

std::vector<RangeRow> read_range_rows(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read " + file.string());
  std::vector<RangeRow> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (header) {
      header = false;
      if (t.rfind("bias,", 0) == 0) continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(t);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(trim(cell));
    if (f.size() == 4) f.emplace_back();
    if (f.size() != 5) throw IoError("range row needs 5 fields: " + t);
    try {
      RangeRow r{parse_bias(f[0]), {parse_double(f[1]), parse_double(f[2])}, parse_double(f[3]), std::nullopt};
      if (!f[4].empty()) r.reported = parse_tier(f[4]);
      rows.push_back(r);
    } catch (const InvalidArgument& e) {
      throw IoError(std::string("bad range row: ") + e.what());
    }
  }
  return rows;
}

namespace {

ValidationReport tier_report(Bias bias, const CalibratedRange& range, double benchmark,
                             std::optional<Tier> reported, double delta) {
  ValidationReport r;
  r.bias = bias;
  r.c2_range_covered = check_c2_range(range.lo(), range.hi(), benchmark, delta);
  const auto t = classify_tier(range, benchmark);
  r.tier = t.tier;
  r.details["baseline"] = range.baseline;
  r.details["calibrated"] = range.calibrated;
  r.details["benchmark"] = benchmark;
  r.details["gap"] = t.gap;
  r.details["direction_ok"] = t.direction_ok ? 1.0 : 0.0;
  if (reported) {
    r.reported_tier = reported;
    r.tier_disagrees = *reported != t.tier;
    if (r.tier_disagrees)
      r.notes.push_back("reported tier " + std::string(to_string(*reported)) + " disagrees with the rule (" +
                        std::string(to_string(t.tier)) + ")");
  }
  return r;
}

std::string base_model(const std::string& id) { return id.substr(0, id.find('#')); }

}  // namespace

std::vector<ValidationReport> validate_ranges(const std::vector<RangeRow>& rows, double delta) {
  std::vector<ValidationReport> out;
  for (const auto& row : rows) out.push_back(tier_report(row.bias, row.range, row.benchmark, row.reported, delta));
  return out;
}

std::vector<ValidationReport> validate_estimates(const std::vector<EstimateResult>& estimates,
                                                 const BenchmarkRegistry& benchmarks, double delta) {
  std::vector<ValidationReport> out;
  for (Bias bias : kAllBiases) {
    const std::string target(to_string(targeting_profile(bias)));
    // (backend, base model) -> strength -> repeats
    std::map<std::pair<std::string, std::string>, std::map<double, std::vector<const EstimateResult*>>> target_cells,
        rational_cells;
    for (const auto& e : estimates) {
      if (e.bias != bias || !std::isfinite(e.point)) continue;
      const auto key = std::make_pair(e.keys.backend, base_model(e.keys.model_id));
      if (e.keys.profile == target) target_cells[key][e.keys.strength].push_back(&e);
      else if (e.keys.profile == "rational") rational_cells[key][e.keys.strength].push_back(&e);
    }
    for (const auto& [key, by_strength] : target_cells) {
      std::vector<EstimateResult> levels;
      std::vector<double> strongest_repeats;
      for (const auto& [s, reps] : by_strength) {
        EstimateResult avg = *reps.front();
        std::vector<double> pts;
        double se2 = 0.0;
        for (const auto* r : reps) {
          pts.push_back(r->point);
          se2 += std::isfinite(r->std_error) ? r->std_error * r->std_error : 0.0;
        }
        avg.point = stats::mean(pts);
        avg.std_error = std::sqrt(se2 / static_cast<double>(reps.size())) / std::sqrt(static_cast<double>(reps.size()));
        levels.push_back(avg);
        strongest_repeats = pts;
      }
      std::optional<double> baseline;
      if (levels.front().keys.strength == 0.0) baseline = levels.front().point;
      else if (const auto it = rational_cells.find(key); it != rational_cells.end()) {
        std::vector<double> pts;
        for (const auto& [s, reps] : it->second)
          for (const auto* r : reps) pts.push_back(r->point);
        baseline = stats::mean(pts);
      }
      if (!baseline) continue;
      const double bench = benchmarks.measured(bias).point;
      auto rep = tier_report(bias, {*baseline, levels.back().point}, bench, std::nullopt, delta);
      rep.notes.push_back("backend " + key.first + ", model " + key.second);
      if (levels.size() >= 3) {
        const auto m = check_c1_monotonicity(levels, expected_direction(bias));
        rep.c1_monotone = m.monotone && !m.weak;
        rep.details["trend_z"] = m.trend_z;
        rep.details["trend_p"] = m.trend_p;
        if (m.weak) rep.notes.push_back("weak-monotone: trend not significant");
      } else {
        rep.notes.push_back("C1 needs at least 3 strength levels");
      }
      if (strongest_repeats.size() >= 5) {
        const auto s = check_c3_stability(strongest_repeats);
        rep.c3_stable = s.stable;
        rep.details["cv"] = s.cv;
        if (s.near_zero_mean) rep.notes.push_back("C3 judged on absolute dispersion (mean near zero)");
      }
      out.push_back(std::move(rep));
    }
  }
  return out;
}

std::string report_to_json(const std::vector<ValidationReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json j = {{"bias", std::string(to_string(r.bias))},
                        {"c1_monotone", r.c1_monotone},
                        {"c2_range_covered", r.c2_range_covered},
                        {"tier", std::string(to_string(r.tier))},
                        {"tier_disagrees", r.tier_disagrees},
                        {"notes", r.notes}};
    j["c3_stable"] = r.c3_stable ? nlohmann::json(*r.c3_stable) : nlohmann::json(nullptr);
    j["c4_coherent"] = r.c4_coherent ? nlohmann::json(*r.c4_coherent) : nlohmann::json(nullptr);
    if (r.reported_tier) j["reported_tier"] = std::string(to_string(*r.reported_tier));
    nlohmann::json d = nlohmann::json::object();
    for (const auto& [k, v] : r.details) d[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(format_double(v));
    j["details"] = std::move(d);
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

std::string report_table(const std::vector<ValidationReport>& reports) {
  auto yn = [](std::optional<bool> b) { return b ? (*b ? "yes" : "no") : "-"; };
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s %9s %10s %9s %4s %4s %4s %4s %-12s %-12s\n", "bias", "baseline", "calibrated",
                "benchmark", "C1", "C2", "C3", "C4", "tier", "reported");
  os << buf;
  for (const auto& r : reports) {
    auto get = [&](const char* k) {
      const auto it = r.details.find(k);
      return it == r.details.end() ? std::string("-") : format_fixed(it->second, 3);
    };
    std::snprintf(buf, sizeof buf, "%-22s %9s %10s %9s %4s %4s %4s %4s %-12s %-12s\n",
                  std::string(to_string(r.bias)).c_str(), get("baseline").c_str(), get("calibrated").c_str(),
                  get("benchmark").c_str(), r.c1_monotone ? "yes" : "no", r.c2_range_covered ? "yes" : "no",
                  yn(r.c3_stable), yn(r.c4_coherent), std::string(to_string(r.tier)).c_str(),
                  r.reported_tier ? (std::string(to_string(*r.reported_tier)) + (r.tier_disagrees ? " (!)" : "")).c_str()
                                  : "-");
    os << buf;
  }
  for (const auto& r : reports)
    for (const auto& n : r.notes) os << "  " << to_string(r.bias) << ": " << n << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Holm, two-sample tests

HolmResult holm_correct(std::span<const double> p, double alpha) {
  const std::size_t m = p.size();
  for (double x : p)
    if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("holm_correct: p-values must lie in [0, 1]");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  HolmResult r;
  r.reject.assign(m, false);
  r.adjusted.assign(m, 1.0);
  bool stopped = false;
  double running = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t k = order[i];
    const double factor = static_cast<double>(m - i);
    running = std::max(running, std::min(1.0, factor * p[k]));
    r.adjusted[k] = running;
    if (!stopped && p[k] <= alpha / factor) r.reject[k] = true;
    else stopped = true;
  }
  return r;
}

TwoSampleResult two_sample_test(std::span<const double> a, std::span<const double> b,
                                const std::vector<std::string>* clusters_a,
                                const std::vector<std::string>* clusters_b, std::uint64_t seed) {
  if (a.size() < 2 || b.size() < 2) throw InsufficientData("two_sample_test: need at least 2 observations per group");
  TwoSampleResult r;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = stats::mean(a), mb = stats::mean(b);
  const double sa = stats::variance(a), sb = stats::variance(b);
  r.mean_diff = ma - mb;
  const double va = sa / na, vb = sb / nb;
  if (va + vb == 0.0) {
    if (r.mean_diff == 0.0) throw DegenerateData("two_sample_test: both groups constant and equal");
    r.t = std::copysign(INFINITY, r.mean_diff);
    r.df = na + nb - 2.0;
    r.p = 0.0;
    r.cohens_d = std::copysign(INFINITY, r.mean_diff);
  } else {
    r.t = r.mean_diff / std::sqrt(va + vb);
    r.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    r.p = stats::student_t_two_sided(r.t, r.df);
    const double pooled = std::sqrt(((na - 1.0) * sa + (nb - 1.0) * sb) / (na + nb - 2.0));
    r.cohens_d = r.mean_diff / pooled;
  }

  if (clusters_a || clusters_b) {
    if (!clusters_a || !clusters_b || clusters_a->size() != a.size() || clusters_b->size() != b.size())
      throw InvalidArgument("two_sample_test: one cluster key per observation in both groups");
    auto group = [](std::span<const double> x, const std::vector<std::string>& keys) {
      std::map<std::string, std::vector<double>> g;
      for (std::size_t i = 0; i < x.size(); ++i) g[keys[i]].push_back(x[i]);
      std::vector<std::pair<double, double>> sums;  // (sum, count)
      for (const auto& [k, v] : g) sums.emplace_back(std::accumulate(v.begin(), v.end(), 0.0), v.size());
      return sums;
    };
    const auto ga = group(a, *clusters_a), gb = group(b, *clusters_b);
    if (ga.size() < 2 || gb.size() < 2) throw InsufficientData("two_sample_test: need at least 2 clusters per group");
    Rng rng(derive_seed(seed, "cluster-bootstrap"));
    auto draw = [&](const std::vector<std::pair<double, double>>& g) {
      double s = 0.0, c = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const auto& pick = g[rng.below(g.size())];
        s += pick.first;
        c += pick.second;
      }
      return s / c;
    };
    std::vector<double> diffs(kBootstrapResamples);
    for (auto& d : diffs) {
      const double x = draw(ga);
      d = x - draw(gb);
    }
    const double se = stats::stddev(diffs);
    r.cluster_se = se;
    r.cluster_p = se > 0.0 ? 2.0 * (1.0 - stats::normal_cdf(std::abs(r.mean_diff) / se)) : (r.mean_diff == 0.0 ? 1.0 : 0.0);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Power

std::string_view to_string(PowerDesign d) {
  switch (d) {
    case PowerDesign::disposition_paired: return "disposition-paired";
    case PowerDesign::proportion_vs_null: return "proportion-vs-null";
    case PowerDesign::coverage_clustered: return "coverage-clustered";
  }
  return "?";
}

PowerDesign parse_power_design(std::string_view s) {
  if (s == "disposition-paired") return PowerDesign::disposition_paired;
  if (s == "proportion-vs-null") return PowerDesign::proportion_vs_null;
  if (s == "coverage-clustered") return PowerDesign::coverage_clustered;
  throw InvalidArgument("unknown power design '" + std::string(s) + "'");
}

void PowerSpec::validate() const {
  if (reps < 1000) throw InvalidArgument("power: reps must be >= 1000");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("power: alpha must lie in (0, 1)");
  if (!(within_corr >= 0.0 && within_corr < 1.0)) throw InvalidArgument("power: within_corr must lie in [0, 1)");
  switch (design) {
    case PowerDesign::disposition_paired:
      if (n < 2 || opportunities < 1) throw InvalidArgument("power: disposition needs n >= 2 and opportunities >= 1");
      if (!(base_rate > 0.0) || !(effect_null > 0.0) || !(effect_alt > 0.0) ||
          base_rate * std::max(effect_null, effect_alt) >= 1.0)
        throw InvalidArgument("power: disposition rates must lie in (0, 1)");
      break;
    case PowerDesign::proportion_vs_null:
      if (n < 1) throw InvalidArgument("power: n must be >= 1");
      if (!(effect_null > 0.0 && effect_null < 1.0 && effect_alt >= 0.0 && effect_alt <= 1.0))
        throw InvalidArgument("power: proportions must lie in [0, 1]");
      break;
    case PowerDesign::coverage_clustered:
      if (clusters < 2 || cluster_size < 1) throw InvalidArgument("power: need >= 2 clusters");
      if (!(effect_null > 0.0 && effect_null < 1.0 && effect_alt > 0.0 && effect_alt < 1.0))
        throw InvalidArgument("power: coverage rates must lie in (0, 1)");
      if (!(cluster_sd >= 0.0)) throw InvalidArgument("power: cluster_sd must be >= 0");
      break;
  }
}

PowerSpec PowerSpec::disposition() { return {}; }

PowerSpec PowerSpec::herding() {
  PowerSpec s;
  s.design = PowerDesign::proportion_vs_null;
  s.n = 600;
  s.effect_null = 0.30;
  s.effect_alt = 0.70;
  return s;
}

PowerSpec PowerSpec::overconfidence() {
  PowerSpec s;
  s.design = PowerDesign::coverage_clustered;
  s.n = 2000;
  s.effect_null = kNominalCoverage;
  s.effect_alt = 0.65;
  s.clusters = 100;
  s.cluster_size = 20;
  return s;
}

double binomial_two_sided(std::size_t k, std::size_t n, double p0) {
  if (k > n) throw InvalidArgument("binomial_two_sided: k exceeds n");
  auto logpmf = [&](std::size_t j) {
    const double dj = static_cast<double>(j), dn = static_cast<double>(n);
    double l = std::lgamma(dn + 1.0) - std::lgamma(dj + 1.0) - std::lgamma(dn - dj + 1.0);
    if (j > 0) l += dj * std::log(p0);
    if (j < n) l += (dn - dj) * std::log1p(-p0);
    return l;
  };
  const double obs = logpmf(k);
  double total = 0.0;
  for (std::size_t j = 0; j <= n; ++j) {
    const double l = logpmf(j);
    if (l <= obs + 1e-7) total += std::exp(l);
  }
  return std::min(1.0, total);
}

PowerResult power_mc(const PowerSpec& spec, std::uint64_t seed, unsigned jobs) {
  spec.validate();
  std::vector<char> reject(spec.reps, 0);

  std::vector<double> binom_p;
  if (spec.design == PowerDesign::proportion_vs_null) {
    binom_p.resize(spec.n + 1);
    for (std::size_t k = 0; k <= spec.n; ++k) binom_p[k] = binomial_two_sided(k, spec.n, spec.effect_null);
  }

  parallel_for(spec.reps, jobs, [&](std::size_t rep) {
    Rng rng(derive_seed(seed, "power", rep));
    switch (spec.design) {
      case PowerDesign::disposition_paired: {
        // Each agent's decisions share a latent effect with correlation
        // within_corr (Gaussian copula); a decision sells when its latent
        // falls below the probit of the propensity.
        const double cl = stats::normal_quantile(spec.base_rate);
        const double cw = stats::normal_quantile(spec.base_rate * spec.effect_alt);
        const double rho = std::sqrt(spec.within_corr), rest = std::sqrt(1.0 - spec.within_corr);
        const double m = static_cast<double>(spec.opportunities);
        std::vector<double> diff(spec.n);
        for (auto& d : diff) {
          const double u = rng.normal();
          double w = 0.0, l = 0.0;
          for (std::size_t j = 0; j < spec.opportunities; ++j) w += (rho * u + rest * rng.normal() < cw);
          for (std::size_t j = 0; j < spec.opportunities; ++j) l += (rho * u + rest * rng.normal() < cl);
          d = (w - l) / m;
        }
        const double sd = stats::stddev(diff);
        if (sd == 0.0) break;
        const double t = stats::mean(diff) / (sd / std::sqrt(static_cast<double>(spec.n)));
        reject[rep] = stats::student_t_two_sided(t, static_cast<double>(spec.n - 1)) < spec.alpha;
        break;
      }
      case PowerDesign::proportion_vs_null: {
        std::size_t k = 0;
        for (std::size_t i = 0; i < spec.n; ++i) k += rng.bernoulli(spec.effect_alt);
        reject[rep] = binom_p[k] < spec.alpha;
        break;
      }
      case PowerDesign::coverage_clustered: {
        // Probit random intercept scaled so the population mean coverage is
        // exactly effect_alt.
        const double s = spec.cluster_sd;
        const double mu = stats::normal_quantile(spec.effect_alt) * std::sqrt(1.0 + s * s);
        std::vector<double> means(spec.clusters);
        for (auto& cm : means) {
          const double c = mu + s * rng.normal();
          double hits = 0.0;
          for (std::size_t j = 0; j < spec.cluster_size; ++j) hits += (rng.normal() < c);
          cm = hits / static_cast<double>(spec.cluster_size);
        }
        const double se = stats::stddev(means) / std::sqrt(static_cast<double>(spec.clusters));
        if (se == 0.0) {
          reject[rep] = stats::mean(means) != spec.effect_null;
          break;
        }
        const double z = (stats::mean(means) - spec.effect_null) / se;
        reject[rep] = 2.0 * (1.0 - stats::normal_cdf(std::abs(z))) < spec.alpha;
        break;
      }
    }
  });

  PowerResult r;
  r.reps = spec.reps;
  r.rejections = static_cast<std::size_t>(std::count(reject.begin(), reject.end(), 1));
  r.power = static_cast<double>(r.rejections) / static_cast<double>(r.reps);
  r.mc_se = std::sqrt(r.power * (1.0 - r.power) / static_cast<double>(r.reps));
  return r;
}

}  // namespace behavcal
