// behavcal command-line tool.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "behavcal/abm.hpp"
#include "behavcal/config.hpp"
#include "behavcal/error.hpp"
#include "behavcal/estimators.hpp"
#include "behavcal/experiments.hpp"
#include "behavcal/format.hpp"
#include "behavcal/parallel.hpp"
#include "behavcal/pipeline.hpp"
#include "behavcal/synthdata.hpp"
#include "behavcal/validator.hpp"

namespace fs = std::filesystem;
using namespace behavcal;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  unsigned jobs = 1;
};

struct Context {
  AppConfig cfg;
  fs::path out;
  unsigned jobs = 1;
  RunManifest manifest;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream o(p, std::ios::binary);
  if (!o) throw IoError("cannot write " + p.string());
  o << text;
}

void add_input(Context& ctx, const fs::path& p) {
  if (fs::is_regular_file(p)) {
    ctx.manifest.inputs.emplace_back(p.generic_string(), file_hash(p));
  } else if (fs::is_directory(p)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(p))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) ctx.manifest.inputs.emplace_back(f.generic_string(), file_hash(f));
  }
}

Context open_context(const Globals& g, const std::string& command, const std::function<void(AppConfig&)>& tweak) {
  Context ctx;
  ctx.cfg = g.config.empty() ? AppConfig{} : AppConfig::load(g.config);
  if (g.seed) ctx.cfg.seed = *g.seed;
  if (tweak) tweak(ctx.cfg);
  ctx.cfg.finalize();
  ctx.out = g.out;
  ctx.jobs = std::max(1u, g.jobs);
  fs::create_directories(ctx.out);
  ctx.manifest.command = command;
  ctx.manifest.seed = ctx.cfg.seed;
  ctx.manifest.config_json = ctx.cfg.to_json_text();
  if (!g.config.empty()) add_input(ctx, g.config);
  return ctx;
}

void close_context(Context& ctx) {
  write_text(ctx.out / "effective_config.json", ctx.manifest.config_json + "\n");
  write_manifest(ctx.manifest, ctx.out);
  std::cerr << ctx.manifest.command << ": wrote " << (ctx.out / "manifest.txt").string() << "\n";
}

std::string pad(std::string s, std::size_t w, bool left = false) {
  if (s.size() >= w) return s;
  return left ? s + std::string(w - s.size(), ' ') : std::string(w - s.size(), ' ') + s;
}

std::string fixed(double x, int d = 3) { return std::isfinite(x) ? format_fixed(x, d) : format_double(x); }

std::vector<Bias> parse_bias_list(const std::string& s) {
  if (s.empty() || s == "all") return {kAllBiases.begin(), kAllBiases.end()};
  std::vector<Bias> out;
  std::stringstream ss(s);
  for (std::string t; std::getline(ss, t, ',');) out.push_back(parse_bias(trim(t)));
  return out;
}

std::vector<ProfileKind> parse_profile_list(const std::string& s) {
  if (s.empty() || s == "all") return {kAllProfiles.begin(), kAllProfiles.end()};
  std::vector<ProfileKind> out;
  std::stringstream ss(s);
  for (std::string t; std::getline(ss, t, ',');) out.push_back(parse_profile_kind(trim(t)));
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string t; std::getline(ss, t, ',');) out.push_back(parse_double(trim(t)));
  return out;
}

// ---------------------------------------------------------------------------
// gen-data

void cmd_gen_data(const Globals& g) {
  auto ctx = open_context(g, "gen-data", {});
  const auto& gd = ctx.cfg.gen_data;
  const auto seed = ctx.cfg.seed;

  const auto reference = reference_returns(gd.price, gd.reference_paths, derive_seed(seed, "reference-set"));
  std::vector<SelectedPath> selected(gd.assets);
  parallel_for(gd.assets, ctx.jobs, [&](std::size_t i) {
    selected[i] = select_path(gd.price, reference, derive_seed(seed, "asset-path", i));
  });
  AssetIdSource ids(derive_seed(seed, "asset-ids"));
  std::ostringstream prices, summary;
  prices << "asset,month,price\n";
  summary << "asset,mu,sigma,s0,ks_d,ks_critical,ks_p,candidate,fallback\n";
  std::size_t fallbacks = 0;
  std::vector<PricePath> paths;
  for (const auto& s : selected) {
    const auto id = ids.next();
    for (std::size_t m = 0; m < s.path.prices.size(); ++m)
      prices << id << ',' << m << ',' << format_double(round_to(s.path.prices[m], 4)) << '\n';
    summary << id << ',' << format_double(s.path.params.mu) << ',' << format_double(s.path.params.sigma) << ','
            << format_double(s.path.params.s0) << ',' << format_double(s.ks.d) << ',' << format_double(s.ks.critical)
            << ',' << format_double(s.ks.p_value) << ',' << s.candidate << ',' << (s.fallback ? 1 : 0) << '\n';
    fallbacks += s.fallback;
    paths.push_back(s.path);
  }
  write_text(ctx.out / "prices.csv", prices.str());
  write_text(ctx.out / "price_paths.csv", summary.str());

  std::ostringstream earn;
  earn << "company,quarter,earnings\n";
  for (std::size_t i = 0; i < gd.assets; ++i) {
    const auto e = generate_earnings_path(gd.earnings, derive_seed(seed, "earnings", i));
    for (std::size_t q = 0; q < e.values.size(); ++q)
      earn << "Company " << (i + 1) << ',' << q << ',' << format_double(round_to(e.values[q], 4)) << '\n';
  }
  write_text(ctx.out / "earnings.csv", earn.str());

  std::ostringstream val;
  val << "price paths: " << gd.assets << " x " << gd.price.months << " months\n";
  val << "KS screen: " << (gd.assets - fallbacks) << " accepted, " << fallbacks << " minimal-D fallbacks\n";
  if (gd.discriminator_paths >= 100) {
    const auto a = generate_price_batch(gd.price, derive_seed(seed, "disc-a"), gd.discriminator_paths, ctx.jobs);
    const auto b = generate_price_batch(gd.price, derive_seed(seed, "disc-b"), gd.discriminator_paths, ctx.jobs);
    const auto d = discriminate(a, b, derive_seed(seed, "disc-cv"));
    val << "discriminator accuracy (same distribution, 5-fold): " << fixed(d.accuracy, 4) << "\n";
  }
  write_text(ctx.out / "data_checks.txt", val.str());

  fs::create_directories(ctx.out / "scenarios");
  for (Bias b : kAllBiases)
    save_scenarios(build_scenario_set(b, gd.scenarios, derive_seed(seed, "scenarios")),
                   ctx.out / "scenarios" / (std::string(to_string(b)) + ".jsonl"));
  close_context(ctx);
}

// ---------------------------------------------------------------------------
// run

struct RunFlags {
  std::string bias = "all";
  std::string profiles;
  std::string strengths;
  std::optional<std::size_t> n;
  std::optional<int> repeats;
  std::optional<double> noise;
  std::string backend;
};

void cmd_run(const Globals& g, const RunFlags& f) {
  auto ctx = open_context(g, "run", [&](AppConfig& c) {
    if (f.bias != "all" || c.run.biases.empty()) c.run.biases = parse_bias_list(f.bias);
    if (!f.profiles.empty()) c.run.profiles = parse_profile_list(f.profiles);
    if (!f.strengths.empty()) c.run.strengths = parse_double_list(f.strengths);
    if (f.n) c.run.agents = *f.n;
    if (f.repeats) c.run.repeats = *f.repeats;
    if (f.noise) c.run.choice_noise = *f.noise;
    if (!f.backend.empty()) c.backend = parse_backend(f.backend);
  });
  if (!ctx.cfg.templates.empty()) add_input(ctx, ctx.cfg.templates);
  const auto dir = ctx.out / "records";
  const auto& plan = ctx.cfg.run;
  std::cerr << "run: " << plan.record_count() << " decisions (" << plan.biases.size() << " biases x "
            << plan.profiles.size() << " profiles x " << plan.strengths.size() << " strengths x " << plan.agents
            << " agents" << (plan.repeats > 1 ? " x " + std::to_string(plan.repeats) + " repeats" : "") << ")\n";
  if (ctx.cfg.backend == Backend::synthetic) {
    const auto records = run_synthetic(plan, ctx.jobs);
    write_records_dir(records, dir);
  } else {
    std::shared_ptr<Transport> t = make_http_transport(ctx.cfg.llm.base_url);
    const auto stats = run_llm(plan, ctx.cfg.llm, t, dir, [](std::size_t done, std::size_t total) {
      std::cerr << "\rrun: " << done << "/" << total << std::flush;
    });
    std::cerr << "\nrun: " << stats.requested << " requested, " << stats.skipped << " resumed, " << stats.failed
              << " failed, " << stats.unparsed << " unparsed\n";
  }
  close_context(ctx);
}

// ---------------------------------------------------------------------------
// estimate

std::string estimates_table(const std::vector<EstimateResult>& rows) {
  std::ostringstream os;
  os << pad("bias", 22, true) << ' ' << pad("profile", 26, true) << ' ' << pad("strength", 8) << ' '
     << pad("backend", 9, true) << ' ' << pad("model", 14, true) << ' ' << pad("point", 9) << ' ' << pad("se", 8)
     << ' ' << pad("n", 5) << "  flags\n";
  for (const auto& r : rows) {
    std::string flags;
    for (const auto& f : r.flags) flags += (flags.empty() ? "" : ";") + f;
    os << pad(std::string(to_string(r.bias)), 22, true) << ' ' << pad(r.keys.profile, 26, true) << ' '
       << pad(fixed(r.keys.strength, 2), 8) << ' ' << pad(r.keys.backend, 9, true) << ' '
       << pad(r.keys.model_id, 14, true) << ' ' << pad(fixed(r.point, 4), 9) << ' ' << pad(fixed(r.std_error, 4), 8)
       << ' ' << pad(std::to_string(r.n), 5) << "  " << flags << '\n';
  }
  return os.str();
}

void cmd_estimate(const Globals& g, const std::string& records_dir, bool by_respondent) {
  auto ctx = open_context(g, "estimate", {});
  add_input(ctx, records_dir);
  const auto records = load_records_dir(records_dir);
  if (records.empty()) throw InsufficientData("estimate: no records in " + records_dir);
  const auto rows = estimate_cells(records, ctx.jobs);
  write_estimates_csv(rows, ctx.out / "estimates.csv");
  write_text(ctx.out / "estimates.txt", estimates_table(rows));
  if (by_respondent) {
    std::vector<EstimateResult> agent_rows;
    std::ostringstream os;
    os << "bias,respondent_id,point,std_error,n,flags\n";
    for (Bias b : kAllBiases) {
      std::map<std::string, std::vector<DecisionRecord>> by;
      for (const auto& r : records)
        if (r.scenario.bias == b) by[r.respondent_id].push_back(r);
      for (const auto& [id, rs] : by) {
        try {
          const auto e = estimate(b, rs);
          std::string flags;
          for (const auto& f : e.flags) flags += (flags.empty() ? "" : ";") + f;
          os << to_string(b) << ',' << id << ',' << format_double(e.point) << ',' << format_double(e.std_error) << ','
             << e.n << ',' << flags << '\n';
        } catch (const Error& ex) {
          os << to_string(b) << ',' << id << ",nan,nan,0,error:" << ex.what() << '\n';
        }
      }
    }
    write_text(ctx.out / "agent_estimates.csv", os.str());
  }
  close_context(ctx);
}

// ---------------------------------------------------------------------------
// validate

std::map<Bias, std::map<std::string, double>> read_agent_estimates(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read " + file.string());
  std::map<Bias, std::map<std::string, double>> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string b, id, point;
    std::getline(ss, b, ',');
    std::getline(ss, id, ',');
    std::getline(ss, point, ',');
    if (b.empty()) continue;
    out[parse_bias(b)][id] = parse_double(point);
  }
  return out;
}

std::string coherence_table(const CoherenceResult& c) {
  std::ostringstream os;
  os << "coherence: " << (c.pass ? "pass" : "fail") << "\n";
  os << pad("pair", 36, true) << ' ' << pad("predicted", 12, true) << ' ' << pad("r", 7) << ' ' << pad("p", 7) << ' '
     << pad("n", 5) << "  result\n";
  for (const auto& r : c.rows)
    os << pad(r.label, 36, true) << ' ' << pad(std::string(to_string(r.sign)), 12, true) << ' '
       << pad(r.evaluated ? fixed(r.r) : "-", 7) << ' ' << pad(r.evaluated ? fixed(r.p) : "-", 7) << ' '
       << pad(std::to_string(r.n), 5) << "  " << (r.evaluated ? (r.pass ? "agrees" : "disagrees") : "skipped") << '\n';
  return os.str();
}

void cmd_validate(const Globals& g, std::string estimates, std::string benchmarks, std::string ranges,
                  std::optional<double> delta, std::string agent_estimates) {
  auto ctx = open_context(g, "validate", [&](AppConfig& c) {
    if (!benchmarks.empty()) c.validate.benchmarks = benchmarks;
    if (!ranges.empty()) c.validate.ranges = ranges;
    if (delta) c.validate.delta = *delta;
  });
  const auto& vc = ctx.cfg.validate;
  const auto registry = vc.benchmarks.empty() ? BenchmarkRegistry::defaults() : BenchmarkRegistry::load(vc.benchmarks);
  if (!vc.benchmarks.empty()) add_input(ctx, vc.benchmarks);
  std::vector<ValidationReport> reports;
  if (!vc.ranges.empty()) {
    add_input(ctx, vc.ranges);
    reports = validate_ranges(read_range_rows(vc.ranges), vc.delta);
  }
  if (!estimates.empty()) {
    add_input(ctx, estimates);
    auto more = validate_estimates(read_estimates_csv(estimates), registry, vc.delta);
    reports.insert(reports.end(), more.begin(), more.end());
  }
  if (reports.empty() && agent_estimates.empty())
    throw InvalidArgument("validate: give --estimates, --ranges (or validate.ranges in the config), or --agent-estimates");
  std::string extra;
  if (!agent_estimates.empty()) {
    add_input(ctx, agent_estimates);
    const auto c = check_c4_coherence(read_agent_estimates(agent_estimates));
    for (auto& r : reports) r.c4_coherent = c.pass;
    extra = coherence_table(c);
  }
  write_text(ctx.out / "validation.json", report_to_json(reports));
  write_text(ctx.out / "validation.txt", report_table(reports) + extra);
  std::cout << report_table(reports) << extra;
  close_context(ctx);
}

// ---------------------------------------------------------------------------
// abm

struct ReferenceRow {
  std::string label;
  double theta = 0.0;
  std::optional<double> short_m, long_r, peak, decay;
};

std::vector<ReferenceRow> read_momentum_reference(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read " + file.string());
  std::vector<ReferenceRow> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(t);
    for (std::string c; std::getline(ss, c, ',');) f.push_back(trim(c));
    f.resize(6);
    auto opt = [](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return parse_double(s);
    };
    rows.push_back({f[0], parse_double(f[1]), opt(f[2]), opt(f[3]), opt(f[4]), opt(f[5])});
  }
  return rows;
}

void cmd_abm(const Globals& g, std::optional<double> theta, std::string mode, std::optional<std::size_t> reps,
             std::optional<std::size_t> periods, bool table, std::string reference, bool write_returns) {
  auto ctx = open_context(g, "abm", [&](AppConfig& c) {
    if (theta) c.abm.theta = *theta;
    if (!mode.empty()) c.abm.mode = parse_forecast_mode(mode);
    if (reps) c.abm.replications = *reps;
    if (periods) c.abm.periods = *periods;
  });
  std::vector<std::pair<std::string, MarketConfig>> rows;
  std::vector<ReferenceRow> refs;
  if (!reference.empty()) {
    add_input(ctx, reference);
    refs = read_momentum_reference(reference);
  }
  if (table) {
    for (double th : {0.0, 0.60, 0.88}) {
      MarketConfig m = ctx.cfg.abm;
      m.theta = th;
      if (th == 0.0) {
        m.mass_rational = 1.0;
        m.mass_extrap = 0.0;
      }
      rows.emplace_back(th == 0.0 ? "baseline" : (th == 0.60 ? "human" : "calibrated"), m);
    }
  } else {
    rows.emplace_back("config", ctx.cfg.abm);
  }

  std::ostringstream csv, acf, txt;
  csv << "row,theta,mode,short_momentum,short_se,long_reversal,long_se,peak_lag,decay_rate,post_news,trade_frequency\n";
  acf << "row,lag,autocorr,se\n";
  txt << pad("row", 11, true) << pad("theta", 7) << pad("mode", 13) << pad("short", 9) << pad("(se)", 8)
      << pad("long", 9) << pad("(se)", 8) << pad("peak", 6) << pad("decay", 8) << pad("ref short", 11)
      << pad("ref long", 10) << pad("ref peak", 10) << "  compare(+-0.05)\n";
  for (const auto& [label, m] : rows) {
    const auto s = run_replications(m, ctx.jobs);
    std::string freq;
    for (std::size_t i = 0; i < s.type_names.size() && i < 2; ++i)
      freq += (freq.empty() ? "" : ";") + s.type_names[i] + "=" + fixed(s.trade_frequency[i]);
    csv << label << ',' << format_double(m.theta) << ',' << to_string(m.mode) << ','
        << format_double(s.mean.short_momentum) << ',' << format_double(s.short_se) << ','
        << format_double(s.mean.long_reversal) << ',' << format_double(s.long_se) << ',' << s.mean.peak_lag << ','
        << format_double(s.mean.decay_rate) << ','
        << (s.mean.post_news ? format_double(*s.mean.post_news) : std::string()) << ',' << freq << '\n';
    for (std::size_t k = 0; k < kMaxLag; ++k)
      acf << label << ',' << (k + 1) << ',' << format_double(s.mean.autocorr[k]) << ','
          << format_double(s.autocorr_se[k]) << '\n';
    const ReferenceRow* ref = nullptr;
    for (const auto& r : refs)
      if (std::abs(r.theta - m.theta) < 1e-9) ref = &r;
    auto opt = [](const std::optional<double>& x, int d) { return x ? fixed(*x, d) : std::string("-"); };
    std::string verdict = "-";
    if (ref && ref->short_m && ref->long_r) {
      const bool ok = std::abs(s.mean.short_momentum - *ref->short_m) <= 0.05 &&
                      std::abs(s.mean.long_reversal - *ref->long_r) <= 0.05;
      verdict = ok ? "pass" : "deviate";
    }
    txt << pad(label, 11, true) << pad(fixed(m.theta, 2), 7) << pad(std::string(to_string(m.mode)), 13)
        << pad(fixed(s.mean.short_momentum), 9) << pad(fixed(s.short_se), 8) << pad(fixed(s.mean.long_reversal), 9)
        << pad(fixed(s.long_se), 8) << pad(std::to_string(s.mean.peak_lag), 6) << pad(fixed(s.mean.decay_rate, 2), 8)
        << pad(ref ? opt(ref->short_m, 2) : "-", 11) << pad(ref ? opt(ref->long_r, 2) : "-", 10)
        << pad(ref ? opt(ref->peak, 0) : "-", 10) << "  " << verdict << '\n';
    if (s.mean.post_news) txt << "  " << label << ": post-news autocorrelation (lags 1-3) " << fixed(*s.mean.post_news) << "\n";
    if (m.trading_cost) txt << "  " << label << ": trade frequency " << freq << "\n";
    if (write_returns) {
      std::ostringstream r;
      r << "replication,period,log_return,simple_return\n";
      for (std::size_t rep = 0; rep < m.replications; ++rep) {
        const auto sim = simulate(m, derive_seed(m.seed, "abm-replication", rep));
        const auto simple = arithmetic_returns(sim.price);
        for (std::size_t t = 0; t < sim.returns.size(); ++t)
          r << rep << ',' << t << ',' << format_double(sim.returns[t]) << ',' << format_double(simple[t]) << '\n';
      }
      write_text(ctx.out / ("abm_returns_" + label + ".csv"), r.str());
    }
  }
  write_text(ctx.out / "abm_summary.csv", csv.str());
  write_text(ctx.out / "abm_acf.csv", acf.str());
  write_text(ctx.out / "abm.txt", txt.str());
  std::cout << txt.str();
  close_context(ctx);
}

// ---------------------------------------------------------------------------
// power

void cmd_power(const Globals& g, std::optional<std::size_t> reps) {
  auto ctx = open_context(g, "power", [&](AppConfig& c) {
    if (reps)
      for (auto& p : c.power) p.reps = *reps;
  });
  std::vector<std::pair<std::string, PowerSpec>> specs;
  for (const auto& p : ctx.cfg.power) specs.emplace_back(std::string(to_string(p.design)), p);
  // Size check: the first spec with the alternative set to the null.
  if (!ctx.cfg.power.empty()) {
    auto s = ctx.cfg.power.front();
    s.effect_alt = s.effect_null;
    specs.emplace_back(std::string(to_string(s.design)) + " (size)", s);
  }
  std::ostringstream csv, txt;
  csv << "design,n,effect_null,effect_alt,alpha,reps,power,mc_se\n";
  txt << pad("design", 28, true) << pad("n", 6) << pad("null", 8) << pad("alt", 8) << pad("power", 9) << pad("mc se", 9)
      << '\n';
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& [name, s] = specs[i];
    const auto r = power_mc(s, derive_seed(ctx.cfg.seed, "power-spec", i), ctx.jobs);
    csv << name << ',' << s.n << ',' << format_double(s.effect_null) << ',' << format_double(s.effect_alt) << ','
        << format_double(s.alpha) << ',' << s.reps << ',' << format_double(r.power) << ',' << format_double(r.mc_se)
        << '\n';
    txt << pad(name, 28, true) << pad(std::to_string(s.n), 6) << pad(fixed(s.effect_null, 2), 8)
        << pad(fixed(s.effect_alt, 2), 8) << pad(fixed(r.power), 9) << pad(fixed(r.mc_se, 4), 9) << '\n';
  }
  write_text(ctx.out / "power.csv", csv.str());
  write_text(ctx.out / "power.txt", txt.str());
  std::cout << txt.str();
  close_context(ctx);
}

// ---------------------------------------------------------------------------
// adversarial

void cmd_adversarial(const Globals& g, std::string backend, std::string catalog, std::optional<std::size_t> repeats) {
  auto ctx = open_context(g, "adversarial", [&](AppConfig& c) {
    if (!backend.empty()) c.backend = parse_backend(backend);
    if (!catalog.empty()) c.adversarial.catalog = catalog;
    if (repeats) c.adversarial.repeats = *repeats;
  });
  const auto& ac = ctx.cfg.adversarial;
  std::vector<AdversarialScenario> cat;
  if (ac.catalog.empty()) {
    cat = adversarial_catalog();
  } else {
    add_input(ctx, ac.catalog);
    cat = load_catalog(ac.catalog);
  }

  struct Item {
    const AdversarialScenario* adv;
    ProfileKind profile;
    std::size_t rep;
  };
  std::vector<Item> items;
  for (const auto& a : cat)
    for (ProfileKind p : ac.profiles)
      for (std::size_t r = 0; r < ac.repeats; ++r) items.push_back({&a, p, r});

  std::vector<VerdictRecord> verdicts(items.size());
  std::vector<std::string> raw(items.size());
  const bool llm = ctx.cfg.backend == Backend::llm;
  std::unique_ptr<LlmClient> client;
  if (llm) client = std::make_unique<LlmClient>(ctx.cfg.llm, make_http_transport(ctx.cfg.llm.base_url));
  const unsigned workers = llm ? static_cast<unsigned>(ctx.cfg.llm.max_in_flight) : ctx.jobs;
  parallel_for(items.size(), workers, [&](std::size_t i) {
    const auto& it = items[i];
    const auto profile = Profile::make(it.profile, 1.0);
    ParsedResponse parsed;
    if (llm) {
      const auto res = client->complete(render_prompt(profile, it.adv->base, ctx.cfg.run.templates));
      raw[i] = res.ok ? res.text : "";
      parsed = res.ok ? parse_response(res.text, expected_shape(it.adv->base)) : ParsedResponse{};
    } else {
      const auto gt = profile_to_groundtruth(profile);
      const auto rec = respond_synthetic(
          gt, it.adv->base, derive_seed(ctx.cfg.seed, "adversarial", fnv1a64(it.adv->name + "|" + std::to_string(i))));
      raw[i] = rec.raw_text;
      parsed = rec.parsed;
    }
    const std::string column = llm ? ctx.cfg.llm.model_id + ":" + std::string(to_string(it.profile))
                                   : std::string(to_string(it.profile));
    verdicts[i] = {it.adv->base.bias, column, evaluate_pass(*it.adv, parsed)};
  });

  std::ostringstream log;
  log << "scenario,profile,repeat,verdict,response\n";
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::string r = raw[i];
    std::replace(r.begin(), r.end(), '\n', ' ');
    std::replace(r.begin(), r.end(), ',', ';');
    log << items[i].adv->name << ',' << to_string(items[i].profile) << ',' << items[i].rep << ','
        << to_string(verdicts[i].verdict) << ',' << r << '\n';
  }
  write_text(ctx.out / "adversarial_responses.csv", log.str());

  const auto tallies = aggregate_pass_rates(verdicts);
  std::set<std::string> columns;
  std::set<Bias> biases;
  for (const auto& [k, t] : tallies) {
    biases.insert(k.first);
    columns.insert(k.second);
  }
  std::ostringstream csv, txt;
  csv << "bias,respondent,passed,failed,unparsed,rate,meets_threshold\n";
  for (const auto& [k, t] : tallies)
    csv << to_string(k.first) << ',' << k.second << ',' << t.passed << ',' << t.failed << ',' << t.unparsed << ','
        << format_double(t.rate()) << ',' << (t.meets(kAdversarialPassThreshold) ? 1 : 0) << '\n';
  txt << pad("bias", 24, true);
  for (const auto& c : columns) txt << pad(c, std::max<std::size_t>(c.size() + 2, 9));
  txt << '\n';
  for (Bias b : biases) {
    txt << pad(std::string(to_string(b)), 24, true);
    for (const auto& c : columns) {
      const auto it = tallies.find({b, c});
      std::string cell = it == tallies.end() ? "-" : fixed(it->second.rate(), 2) +
                                                         (it->second.meets(kAdversarialPassThreshold) ? "*" : " ");
      txt << pad(cell, std::max<std::size_t>(c.size() + 2, 9));
    }
    txt << '\n';
  }
  txt << "* pass rate >= " << fixed(kAdversarialPassThreshold, 2) << "\n";
  write_text(ctx.out / "adversarial.csv", csv.str());
  write_text(ctx.out / "adversarial.txt", txt.str());
  std::cout << txt.str();
  close_context(ctx);
}

// ---------------------------------------------------------------------------
// report

void cmd_report(const Globals& g, std::vector<std::string> inputs, std::string export_templates,
                std::string export_catalog, std::string export_benchmarks) {
  auto ctx = open_context(g, "report", {});
  if (!export_templates.empty()) {
    TemplateSet::defaults().save(export_templates);
    std::cerr << "report: templates written to " << export_templates << "\n";
  }
  if (!export_catalog.empty()) save_catalog(adversarial_catalog(), export_catalog);
  if (!export_benchmarks.empty()) BenchmarkRegistry::defaults().save(export_benchmarks);

  static const std::vector<std::pair<std::string, std::string>> sections = {
      {"data_checks.txt", "Synthetic data checks"}, {"estimates.txt", "Estimates"},
      {"validation.txt", "Validation"},             {"abm.txt", "Market simulation"},
      {"power.txt", "Power"},                       {"adversarial.txt", "Adversarial pass rates"}};
  std::ostringstream os;
  for (const auto& dir : inputs) {
    add_input(ctx, fs::path(dir) / "manifest.txt");
    for (const auto& [file, title] : sections) {
      const auto p = fs::path(dir) / file;
      if (!fs::exists(p)) continue;
      os << "== " << title << " (" << fs::path(dir).filename().string() << ")\n\n" << slurp(p) << "\n";
    }
  }
  if (!inputs.empty()) {
    write_text(ctx.out / "report.txt", os.str());
    std::cout << os.str();
  }
  close_context(ctx);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"behavcal: calibrate and validate behavioral parameters of simulated investors"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "root seed (overrides the config)");
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--jobs", g.jobs, "worker threads")->capture_default_str();

  auto* gen = app.add_subcommand("gen-data", "generate synthetic prices, earnings and scenario sets");

  RunFlags rf;
  auto* run = app.add_subcommand("run", "run the experiments");
  run->add_option("--bias", rf.bias, "bias name, comma list, or all")->capture_default_str();
  run->add_option("--backend", rf.backend, "synthetic or llm");
  run->add_option("--profiles", rf.profiles, "comma list of profiles (default all)");
  run->add_option("--strengths", rf.strengths, "comma list of strengths in [0, 1]");
  run->add_option("--n", rf.n, "agents per cell");
  run->add_option("--repeats", rf.repeats, "repeated elicitations per cell");
  run->add_option("--noise", rf.noise, "synthetic choice noise (0 = deterministic)");

  std::string records_dir;
  bool by_resp = false;
  auto* est = app.add_subcommand("estimate", "estimate parameters from decision records");
  est->add_option("records", records_dir, "records directory")->required();
  est->add_flag("--by-respondent", by_resp, "also write per-respondent estimates");

  std::string v_est, v_bench, v_ranges, v_agents;
  std::optional<double> v_delta;
  auto* val = app.add_subcommand("validate", "check calibration validity and classify tiers");
  val->add_option("--estimates", v_est, "estimates CSV");
  val->add_option("--benchmarks", v_bench, "benchmark registry file");
  val->add_option("--ranges", v_ranges, "reference range table");
  val->add_option("--delta", v_delta, "range tolerance");
  val->add_option("--agent-estimates", v_agents, "per-respondent estimates for the coherence check");

  std::optional<double> a_theta;
  std::string a_mode, a_ref;
  std::optional<std::size_t> a_reps, a_periods;
  bool a_table = false, a_returns = false;
  auto* abm = app.add_subcommand("abm", "simulate the market and report momentum statistics");
  abm->add_option("--theta", a_theta, "extrapolation coefficient");
  abm->add_option("--mode", a_mode, "fundamental, price or trend");
  abm->add_option("--replications", a_reps, "replications");
  abm->add_option("--periods", a_periods, "periods per replication");
  abm->add_flag("--table", a_table, "run the baseline, 0.60 and 0.88 rows");
  abm->add_option("--reference", a_ref, "reference momentum table for comparison");
  abm->add_flag("--returns", a_returns, "write per-replication return series");

  std::optional<std::size_t> p_reps;
  auto* pow = app.add_subcommand("power", "Monte Carlo power analysis");
  pow->add_option("--reps", p_reps, "replications per design (>= 1000)");

  std::string adv_backend, adv_catalog;
  std::optional<std::size_t> adv_repeats;
  auto* adv = app.add_subcommand("adversarial", "run the adversarial scenario catalog");
  adv->add_option("--backend", adv_backend, "synthetic or llm");
  adv->add_option("--catalog", adv_catalog, "catalog JSON file (default built-in)");
  adv->add_option("--repeats", adv_repeats, "responses per scenario and profile");

  std::vector<std::string> r_inputs;
  std::string r_templates, r_catalog, r_bench;
  auto* rep = app.add_subcommand("report", "combine command outputs into one text report");
  rep->add_option("inputs", r_inputs, "output directories of earlier commands");
  rep->add_option("--export-templates", r_templates, "write the default prompt templates to a directory");
  rep->add_option("--export-catalog", r_catalog, "write the built-in adversarial catalog");
  rep->add_option("--export-benchmarks", r_bench, "write the built-in benchmark registry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) cmd_gen_data(g);
    else if (*run) cmd_run(g, rf);
    else if (*est) cmd_estimate(g, records_dir, by_resp);
    else if (*val) cmd_validate(g, v_est, v_bench, v_ranges, v_delta, v_agents);
    else if (*abm) cmd_abm(g, a_theta, a_mode, a_reps, a_periods, a_table, a_ref, a_returns);
    else if (*pow) cmd_power(g, p_reps);
    else if (*adv) cmd_adversarial(g, adv_backend, adv_catalog, adv_repeats);
    else if (*rep) cmd_report(g, r_inputs, r_templates, r_catalog, r_bench);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
