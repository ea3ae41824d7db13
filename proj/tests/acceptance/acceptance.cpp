// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Usage: acceptance [--cli <behavcal binary>] [--work <dir>]
//                                    [--only <n>]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <algorithm>
#include <thread>
#include <sstream>
#include <string>
#include <vector>

#include "behavcal/abm.hpp"
#include "behavcal/error.hpp"
#include "behavcal/estimators.hpp"
#include "behavcal/experiments.hpp"
#include "behavcal/format.hpp"
#include "behavcal/pipeline.hpp"
#include "behavcal/respondents.hpp"
#include "behavcal/rng.hpp"
#include "behavcal/stats.hpp"
#include "behavcal/synthdata.hpp"
#include "behavcal/validator.hpp"

namespace fs = std::filesystem;
using namespace behavcal;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string f3(double x) { return std::isfinite(x) ? format_fixed(x, 3) : format_double(x); }
std::string f4(double x) { return std::isfinite(x) ? format_fixed(x, 4) : format_double(x); }

struct Options {
  std::string cli;
  fs::path work = fs::temp_directory_path() / "behavcal-acceptance";
  int only = 0;
  unsigned jobs = 1;
};

// ---------------------------------------------------------------------------

Outcome abm_baseline() {
  auto m = MarketConfig::baseline();
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = run_replications(m);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double worst = 0;
  for (double a : s.mean.autocorr) worst = std::max(worst, std::abs(a));
  const bool ok = std::abs(s.mean.short_momentum) <= 0.03 && std::abs(s.mean.long_reversal) <= 0.03;
  return {ok, "short=" + f4(s.mean.short_momentum) + " long=" + f4(s.mean.long_reversal) +
                  " max|acf|=" + f4(worst) + " (" + std::to_string(m.periods) + "x" +
                  std::to_string(m.replications) + ", " + format_fixed(secs, 1) + "s)"};
}

struct Row {
  double theta;
  ReplicationSummary s;
};

std::string magnitude(const Row& r, double ref_short, double ref_long) {
  const bool ok = std::abs(r.s.mean.short_momentum - ref_short) <= 0.05 &&
                  std::abs(r.s.mean.long_reversal - ref_long) <= 0.05;
  return ok ? "pass" : "deviate";
}

Outcome abm_calibrated() {
  auto run = [](ForecastMode mode, double theta) {
    MarketConfig m;
    m.mode = mode;
    m.theta = theta;
    return Row{theta, run_replications(m)};
  };
  const auto a = run(ForecastMode::price, 0.60);
  const auto b = run(ForecastMode::price, 0.88);
  const auto& sa = a.s;
  const auto& sb = b.s;
  const bool signs = sa.mean.short_momentum > 0 && sa.mean.long_reversal < 0;
  const bool peak = sa.mean.peak_lag >= 1 && sa.mean.peak_lag <= 6;
  const double gap = sb.mean.short_momentum - sa.mean.short_momentum;
  const double gap_se = std::hypot(sa.short_se, sb.short_se);
  const bool order = gap > 2 * gap_se;

  // Trend-following extrapolation, reported for comparison only.
  const auto ta = run(ForecastMode::trend, 0.60);
  const auto tb = run(ForecastMode::trend, 0.88);

  std::ostringstream os;
  os << "price mode: 0.60 short=" << f4(sa.mean.short_momentum) << " long=" << f4(sa.mean.long_reversal)
     << " peak=" << sa.mean.peak_lag << "; 0.88 short=" << f4(sb.mean.short_momentum) << " long="
     << f4(sb.mean.long_reversal) << "; gap=" << f4(gap) << " (2se=" << f4(2 * gap_se) << ")"
     << "; signs " << (signs ? "ok" : "wrong") << ", peak " << (peak ? "ok" : "out") << ", ordering "
     << (order ? "ok" : "violated") << "; magnitudes " << magnitude(a, 0.12, -0.08) << "/"
     << magnitude(b, 0.18, -0.12) << " | trend mode (info): short " << f4(ta.s.mean.short_momentum) << " < "
     << f4(tb.s.mean.short_momentum) << ", long " << f4(ta.s.mean.long_reversal) << "/"
     << f4(tb.s.mean.long_reversal) << ", magnitudes " << magnitude(ta, 0.12, -0.08) << "/"
     << magnitude(tb, 0.18, -0.12);
  return {signs && peak && order, os.str()};
}

Outcome abm_fundamental() {
  bool ok = true;
  std::ostringstream os;
  for (double theta : {0.60, 0.88}) {
    MarketConfig m;
    m.mode = ForecastMode::fundamental;
    m.theta = theta;
    const auto s = run_replications(m);
    // r_t = (1 + b) dv_t - b dv_{t-1} with b = theta / 2.
    const double b = theta / 2;
    const double oracle = -(1 + b) * b / ((1 + b) * (1 + b) + b * b);
    const double diff = s.mean.autocorr[0] - oracle;
    ok = ok && std::abs(diff) <= 0.01;
    os << "theta=" << format_fixed(theta, 2) << " lag1=" << f4(s.mean.autocorr[0]) << " oracle=" << f4(oracle)
       << " diff=" << f4(diff) << "; ";
  }
  return {ok, os.str()};
}

// ---------------------------------------------------------------------------

GroundTruth target_truth(Bias b, double noise) {
  auto gt = profile_to_groundtruth(Profile::make(targeting_profile(b), 1.0));
  gt.choice_noise = noise;
  return gt;
}

std::vector<DecisionRecord> respondents(Bias b, const GroundTruth& gt, std::size_t n, std::uint64_t seed) {
  // n respondents sharing one ground truth, one scenario each.
  const auto set = build_scenario_set(b, n, derive_seed(seed, "scenarios"));
  std::vector<DecisionRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = respond_synthetic(gt, set[i], derive_seed(seed, "respond", i));
  return out;
}

// Experiment-sized panel: 100 agents sharing one ground truth, 20 trials
// each, every agent drawing its own scenarios.
constexpr std::size_t kPanelAgents = 100;
constexpr std::size_t kPanelTrials = 20;

std::vector<DecisionRecord> panel(Bias b, const GroundTruth& gt, std::uint64_t seed) {
  std::vector<DecisionRecord> out;
  for (std::size_t i = 0; i < kPanelAgents; ++i) {
    const auto rs = simulate_agents({{"agent-" + std::to_string(i), gt}}, b, kPanelTrials, derive_seed(seed, "agent", i));
    out.insert(out.end(), rs.begin(), rs.end());
  }
  return out;
}

Outcome round_trip() {
  constexpr std::size_t kNoiselessN = 2000;
  constexpr int kSeeds = 50;
  bool ok = true;
  std::ostringstream os;
  os << "noiseless:";
  for (Bias b : kAllBiases) {
    const auto gt = target_truth(b, 0.0);
    const double truth = expected_measure(b, gt);
    const auto e = estimate(b, respondents(b, gt, kNoiselessN, 77));
    double tol = 0;
    switch (b) {
      case Bias::loss_aversion: tol = 0.10; break;
      case Bias::extrapolation:
      case Bias::representativeness: tol = 1e-6; break;
      default: tol = 3 * e.std_error; break;  // rates and correlations: Monte Carlo error
    }
    const bool hit = std::abs(e.point - truth) <= tol;
    ok = ok && hit;
    os << ' ' << to_string(b) << (hit ? "" : "(MISS)") << '=' << f3(e.point) << '/' << f3(truth);
  }
  os << "; noisy " << kPanelAgents << "x" << kPanelTrials << ", seeds within 10% of " << kSeeds << ":";
  for (Bias b : kAllBiases) {
    const auto gt = target_truth(b, 1.0);
    const double truth = expected_measure(b, gt);
    int within = 0;
    for (int s = 0; s < kSeeds; ++s) {
      try {
        const auto e = estimate(b, panel(b, gt, derive_seed(2024, "round-trip", s)));
        within += std::abs(e.point - truth) <= 0.10 * std::abs(truth);
      } catch (const Error&) {
      }
    }
    const bool hit = within >= 0.9 * kSeeds;
    ok = ok && hit;
    os << ' ' << to_string(b) << '=' << within << (hit ? "" : "(MISS)");
  }
  return {ok, os.str()};
}

Outcome monotonicity() {
  bool ok = true;
  std::ostringstream os;
  os << kPanelAgents << "x" << kPanelTrials << " per strength:";
  for (Bias b : kAllBiases) {
    std::vector<EstimateResult> seq;
    for (double k : {0.0, 0.33, 0.67, 1.0}) {
      auto gt = profile_to_groundtruth(Profile::make(targeting_profile(b), k));
      seq.push_back(estimate(b, panel(b, gt, derive_seed(5, to_string(b), static_cast<std::uint64_t>(k * 100)))));
      seq.back().keys.strength = k;
    }
    const auto m = check_c1_monotonicity(seq, expected_direction(b));
    const bool hit = m.monotone && m.trend_p < 0.05;
    ok = ok && hit;
    os << ' ' << to_string(b) << '=' << (hit ? "yes" : "NO") << "(p=" << format_double(round_to(m.trend_p, 4))
       << ')';
  }
  return {ok, os.str()};
}

Outcome tiers() {
  const auto rows = read_range_rows(fs::path(BEHAVCAL_DATA_DIR) / "reference_ranges.csv");
  const auto reports = validate_ranges(rows);
  std::map<Bias, const ValidationReport*> by;
  for (const auto& r : reports) by[r.bias] = &r;
  auto tier_is = [&](Bias b, Tier t) { return by.count(b) && by[b]->tier == t; };
  const bool expected = tier_is(Bias::loss_aversion, Tier::strong) && tier_is(Bias::herding, Tier::strong) &&
                        tier_is(Bias::extrapolation, Tier::strong) &&
                        tier_is(Bias::probability_weighting, Tier::moderate) && tier_is(Bias::disposition, Tier::weak);
  const bool flagged = by.count(Bias::anchoring) && by[Bias::anchoring]->tier_disagrees &&
                       by.count(Bias::representativeness) && by[Bias::representativeness]->tier_disagrees;
  int other_flags = 0;
  for (const auto& r : reports)
    if (r.tier_disagrees && r.bias != Bias::anchoring && r.bias != Bias::representativeness) ++other_flags;
  std::ostringstream os;
  for (const auto& r : reports)
    os << to_string(r.bias) << '=' << to_string(r.tier) << (r.tier_disagrees ? "(flagged)" : "") << ' ';
  return {expected && flagged && other_flags == 0, os.str()};
}

Outcome power(unsigned jobs) {
  auto d = PowerSpec::disposition();
  auto h = PowerSpec::herding();
  auto o = PowerSpec::overconfidence();
  auto null = d;
  null.effect_alt = null.effect_null;
  const auto pd = power_mc(d, derive_seed(1, "acc-power", 0), jobs);
  const auto ph = power_mc(h, derive_seed(1, "acc-power", 1), jobs);
  const auto po = power_mc(o, derive_seed(1, "acc-power", 2), jobs);
  const auto pn = power_mc(null, derive_seed(1, "acc-power", 3), jobs);
  const bool ok = std::abs(pd.power - 0.94) <= 0.05 && ph.power >= 0.90 && po.power >= 0.95 &&
                  std::abs(pn.power - null.alpha) <= 0.02;
  return {ok, "disposition=" + f3(pd.power) + " herding=" + f3(ph.power) + " overconfidence=" + f3(po.power) +
                  " size=" + f4(pn.power) + " (" + std::to_string(d.reps) + " reps each)"};
}

Outcome holm() {
  const std::vector<double> p{0.01, 0.03, 0.04};
  const auto h = holm_correct(p);
  const bool example = h.reject == std::vector<bool>{true, false, false};
  Rng rng(31);
  int violations = 0;
  const int trials = 5000;
  for (int t = 0; t < trials; ++t) {
    const auto m = 1 + rng.below(15);
    std::vector<double> ps(m);
    for (auto& x : ps) x = rng.bernoulli(0.4) ? rng.uniform() * 0.03 : rng.uniform();
    const auto r = holm_correct(ps);
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return ps[a] < ps[b]; });
    bool accepted = false;
    std::size_t rej = 0, raw = 0;
    for (auto i : order) {
      if (r.reject[i] && accepted) ++violations;
      if (!r.reject[i]) accepted = true;
      rej += r.reject[i];
      raw += ps[i] <= 0.05;
    }
    if (rej > raw) ++violations;
  }
  return {example && violations == 0, std::string("example ") + (example ? "rejects only 0.01" : "WRONG") +
                                           "; prefix/subset property violations=" + std::to_string(violations) +
                                           " over " + std::to_string(trials) + " random vectors"};
}

Outcome synthetic_data() {
  int rejections = 0;
  for (int t = 0; t < 1000; ++t) {
    Rng rng(derive_seed(99, "acc-ks", t));
    std::vector<double> a(500), b(500);
    for (auto& x : a) x = rng.normal();
    for (auto& x : b) x = rng.normal();
    rejections += ks_test(a, b).reject;
  }
  const double ks_rate = rejections / 1000.0;

  PricePathConfig cfg;
  const auto pa = generate_price_batch(cfg, derive_seed(99, "acc-disc-a"), 500);
  const auto pb = generate_price_batch(cfg, derive_seed(99, "acc-disc-b"), 500);
  const double acc = discriminate(pa, pb, derive_seed(99, "acc-disc")).accuracy;

  Rng zr(1);
  const auto z = simulate_gbm({0.08, 0.0, 40.0}, 24, zr);
  bool exact = true;
  for (int t = 0; t <= 24; ++t)
    exact = exact && std::abs(z.prices[t] - 40.0 * std::exp(0.08 * t / 12.0)) <= 1e-12 * z.prices[t];

  const auto gt = profile_to_groundtruth(Profile::make(ProfileKind::rational, 1.0));
  const auto set = build_scenario_set(Bias::overconfidence, 10000, derive_seed(99, "acc-cov"));
  int hits = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto r = respond_synthetic(gt, set[i], derive_seed(99, "acc-cov-respond", i));
    const auto& iv = std::get<IntervalAnswer>(r.parsed.answer);
    const double x = *std::get<IntervalPayload>(set[i].payload).realized;
    hits += iv.lo <= x && x <= iv.hi;
  }
  const double cov = hits / 10000.0;
  const bool ok = std::abs(ks_rate - 0.05) <= 0.015 && acc >= 0.45 && acc <= 0.55 && exact &&
                  std::abs(cov - 0.80) <= 0.02;
  return {ok, "ks null rate=" + f3(ks_rate) + " discriminator=" + f3(acc) + " gbm sigma=0 " +
                  (exact ? "exact" : "INEXACT") + " coverage(kappa=1)=" + f4(cov)};
}

Outcome adversarial() {
  // Golden case table: scenario,answer,expected.
  std::ifstream in(fs::path(BEHAVCAL_GOLDEN_DIR) / "adversarial_cases.csv");
  std::string line;
  std::getline(in, line);
  int cases = 0, correct = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f(1);
    bool quoted = false;
    for (char c : line) {
      if (c == '"') quoted = !quoted;
      else if (c == ',' && !quoted) f.emplace_back();
      else f.back() += c;
    }
    for (const auto& a : adversarial_catalog()) {
      if (a.name != f[0]) continue;
      ++cases;
      ++seen[a.name];
      const auto parsed = parse_response("ANSWER: " + f[1], expected_shape(a.base));
      const auto v = evaluate_pass(a, parsed);
      correct += v == (f[2] == "pass" ? Verdict::pass : Verdict::fail);
    }
  }
  int unparsed_ok = 0;
  for (const auto& a : adversarial_catalog())
    unparsed_ok += evaluate_pass(a, parse_response("no decision", expected_shape(a.base))) == Verdict::unparsed;

  const auto n = static_cast<int>(adversarial_catalog().size());
  // Threshold logic: 7/10 meets, 6/10 and 7/10-with-an-unparsed-extra do not.
  std::vector<VerdictRecord> v;
  auto add = [&](Bias b, const std::string& k, int pass, int fail, int unparsed) {
    for (int i = 0; i < pass; ++i) v.push_back({b, k, Verdict::pass});
    for (int i = 0; i < fail; ++i) v.push_back({b, k, Verdict::fail});
    for (int i = 0; i < unparsed; ++i) v.push_back({b, k, Verdict::unparsed});
  };
  add(Bias::herding, "m", 7, 3, 0);
  add(Bias::anchoring, "m", 6, 4, 0);
  add(Bias::disposition, "m", 7, 3, 1);
  const auto t = aggregate_pass_rates(v);
  const bool threshold = t.at({Bias::herding, "m"}).meets(kAdversarialPassThreshold) &&
                         !t.at({Bias::anchoring, "m"}).meets(kAdversarialPassThreshold) &&
                         !t.at({Bias::disposition, "m"}).meets(kAdversarialPassThreshold);
  const bool every = static_cast<int>(seen.size()) == n;
  return {correct == cases && cases == 2 * n && every && unparsed_ok == n && threshold,
          std::to_string(n) + " predicates, " + std::to_string(correct) + "/" + std::to_string(cases) +
              " golden cases correct, unparsed->unparsed " + std::to_string(unparsed_ok) + "/" + std::to_string(n) +
              ", 0.70 threshold logic " + (threshold ? "ok" : "WRONG")};
}

Outcome coherence() {
  constexpr std::size_t kAgents = 200;
  Rng rng(derive_seed(11, "acc-coherence"));
  std::vector<Agent> agents;
  for (std::size_t i = 0; i < kAgents; ++i) {
    GroundTruth gt;
    const double lambda = 1.0 + 2.0 * rng.uniform();
    gt.params.lambda = lambda;
    // Loss aversion makes realizing a loss more painful: loser sells fall
    // with lambda while winner sells stay at the unbiased rate.
    gt.sell_prob_winner = calibration::kRationalSellProb;
    gt.sell_prob_loser = calibration::kRationalSellProb / std::sqrt(lambda);
    char id[16];
    std::snprintf(id, sizeof id, "agent-%03zu", i);
    agents.push_back({id, gt});
  }
  const auto gambles = simulate_agents(agents, Bias::loss_aversion, 21, 11);
  const auto portfolios = simulate_agents(agents, Bias::disposition, 40, 11);
  std::map<Bias, std::map<std::string, double>> measures;
  for (const auto& [id, e] : estimate_by_respondent(Bias::loss_aversion, gambles))
    if (std::isfinite(e.point)) measures[Bias::loss_aversion][id] = e.point;
  for (const auto& [id, e] : estimate_by_respondent(Bias::disposition, portfolios))
    if (std::isfinite(e.point)) measures[Bias::disposition][id] = e.point;
  const auto c = check_c4_coherence(measures);
  for (const auto& r : c.rows)
    if (r.evaluated && r.sign == PredictedSign::positive)
      return {r.r > 0 && r.p < 0.05,
              r.label + ": r=" + f3(r.r) + " p=" + format_double(r.p) + " n=" + std::to_string(r.n)};
  return {false, "no positive-sign row evaluated"};
}

// ---------------------------------------------------------------------------

int sh(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return rc;
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), dir).generic_string()] = ss.str();
  }
  return out;
}

std::string drop_config_input(const std::string& manifest) {
  std::istringstream in(manifest);
  std::string out, line;
  while (std::getline(in, line))
    if (!(line.starts_with("input: ") && line.find(" cfg/") != std::string::npos)) out += line + "\n";
  return out;
}

Outcome determinism(const Options& opt) {
  if (opt.cli.empty()) return {false, "command-line tool not available (--cli)"};
  const auto a = opt.work / "det-a";
  const auto b = opt.work / "det-b";
  fs::remove_all(a);
  fs::remove_all(b);
  fs::create_directories(a);
  fs::create_directories(b / "cfg");

  struct Step {
    std::string name;
    std::string verb;
    std::string flags;  // overrides used only by the first run
    std::string args;   // positional inputs shared by both runs
  };
  const std::vector<Step> steps = {
      {"gen", "gen-data", "", ""},
      {"run", "run", "--strengths 0,0.5,1 --n 40 --repeats 2", ""},
      {"est", "estimate", "", "run/records --by-respondent"},
      {"val", "validate", "", "--estimates est/estimates.csv"},
      {"abm", "abm", "--theta 0.6 --replications 6 --periods 1500", ""},
      {"pow", "power", "--reps 1000", ""},
      {"adv", "adversarial", "", ""},
  };
  const std::string cli = "\"" + fs::absolute(opt.cli).string() + "\"";
  for (const auto& s : steps) {
    const auto cmd = "cd \"" + a.string() + "\" && " + cli + " --seed 17 --jobs 1 --out " + s.name + " " + s.verb +
                     " " + s.flags + " " + s.args + " >/dev/null 2>&1";
    if (sh(cmd) != 0) return {false, "first run failed at " + s.verb};
  }
  // Second run: configuration recovered from each manifest, 4 workers.
  for (const auto& s : steps) {
    std::ifstream in(a / s.name / "manifest.txt");
    std::ostringstream ss;
    ss << in.rdbuf();
    const auto m = RunManifest::parse(ss.str());
    std::ofstream(b / "cfg" / (s.name + ".json"), std::ios::binary) << m.config_json;
    const auto cmd = "cd \"" + b.string() + "\" && " + cli + " --jobs 4 --config cfg/" + s.name + ".json --out " +
                     s.name + " " + s.verb + " " + s.args + " >/dev/null 2>&1";
    if (sh(cmd) != 0) return {false, "rerun failed at " + s.verb};
  }
  std::size_t files = 0, differ = 0;
  std::string first_diff;
  for (const auto& s : steps) {
    const auto ta = tree(a / s.name);
    const auto tb = tree(b / s.name);
    if (ta.size() != tb.size()) {
      ++differ;
      if (first_diff.empty()) first_diff = s.name + " (file set)";
    }
    for (const auto& [path, bytes] : ta) {
      ++files;
      const auto it = tb.find(path);
      bool same = it != tb.end();
      if (same) {
        same = path == "manifest.txt" ? drop_config_input(bytes) == drop_config_input(it->second)
                                      : bytes == it->second;
      }
      if (!same) {
        ++differ;
        if (first_diff.empty()) first_diff = s.name + "/" + path;
      }
    }
  }
  return {differ == 0 && files > 0, std::to_string(files) + " files compared across " + std::to_string(steps.size()) +
                                        " commands (jobs 1 vs 4, config from manifest), " + std::to_string(differ) +
                                        " differ" + (first_diff.empty() ? "" : ", first: " + first_diff)};
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string k = argv[i];
    if (k == "--cli") opt.cli = argv[i + 1];
    else if (k == "--work") opt.work = argv[i + 1];
    else if (k == "--only") opt.only = std::atoi(argv[i + 1]);
    else {
      std::cerr << "unknown option " << k << "\n";
      return 2;
    }
  }
  opt.jobs = std::max(1u, std::thread::hardware_concurrency());
  fs::create_directories(opt.work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"ABM baseline momentum near zero", abm_baseline},
      {"ABM calibrated ordering (price mode)", abm_calibrated},
      {"ABM fundamental mode matches MA(1) lag-1", abm_fundamental},
      {"round-trip recovery, eight estimators", round_trip},
      {"C1 monotonicity over strength grid", monotonicity},
      {"tier classifier on reference ranges", tiers},
      {"Monte Carlo power targets", [&] { return power(opt.jobs); }},
      {"Holm correction example and properties", holm},
      {"synthetic data calibration checks", synthetic_data},
      {"adversarial predicates and threshold", adversarial},
      {"C4 coherence on shared-lambda population", coherence},
      {"determinism across reruns and workers", [&] { return determinism(opt); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (opt.only && opt.only != static_cast<int>(i + 1)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s criterion %2zu: %s | %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
