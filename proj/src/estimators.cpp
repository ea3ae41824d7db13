#include "behavcal/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "behavcal/error.hpp"
#include "behavcal/format.hpp"
#include "behavcal/parallel.hpp"
#include "behavcal/stats.hpp"

namespace behavcal {

bool EstimateResult::has_flag(std::string_view f) const {
  return std::any_of(flags.begin(), flags.end(), [&](const std::string& s) { return s == f; });
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename P>
struct Obs {
  const DecisionRecord* rec;
  const P* payload;
};

// Records of `bias` carrying payload P, with parse failures counted.
template <typename P>
std::vector<Obs<P>> select(std::span<const DecisionRecord> records, Bias bias, EstimateResult& out) {
  std::vector<Obs<P>> obs;
  std::size_t unparsed = 0;
  for (const auto& r : records) {
    if (r.scenario.bias != bias) continue;
    const auto* p = std::get_if<P>(&r.scenario.payload);
    if (!p) continue;
    if (!r.parsed.ok()) {
      ++unparsed;
      continue;
    }
    obs.push_back({&r, p});
  }
  out.bias = bias;
  if (!obs.empty()) {
    const auto& r = *obs.front().rec;
    out.keys = {std::string(to_string(r.profile)), r.strength, std::string(to_string(r.backend)), r.model_id};
  }
  if (unparsed) {
    out.extras["unparsed"] = static_cast<double>(unparsed);
    out.flags.push_back("unparsed_records");
  }
  return obs;
}

void set_rate(EstimateResult& e, std::size_t hits, std::size_t n) {
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  e.point = p;
  e.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  e.n = n;
}

struct LogitFit {
  double b0 = 0.0, b1 = 0.0;
  double v00 = 0.0, v01 = 0.0, v11 = 0.0;
  bool converged = false;
};

LogitFit fit_logit(const std::vector<double>& x, const std::vector<int>& y) {
  LogitFit f;
  auto loglik = [&](double b0, double b1) {
    double ll = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double z = b0 + b1 * x[i];
      ll += y[i] ? -std::log1p(std::exp(-z)) : -std::log1p(std::exp(z));
    }
    return ll;
  };
  double ll = loglik(0.0, 0.0);
  for (int iter = 0; iter < 200; ++iter) {
    double g0 = 0, g1 = 0, h00 = 0, h01 = 0, h11 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double p = 1.0 / (1.0 + std::exp(-(f.b0 + f.b1 * x[i])));
      const double w = p * (1.0 - p);
      g0 += y[i] - p;
      g1 += (y[i] - p) * x[i];
      h00 += w;
      h01 += w * x[i];
      h11 += w * x[i] * x[i];
    }
    const double det = h00 * h11 - h01 * h01;
    if (!(det > 1e-300)) return f;
    f.v00 = h11 / det;
    f.v01 = -h01 / det;
    f.v11 = h00 / det;
    double d0 = f.v00 * g0 + f.v01 * g1;
    double d1 = f.v01 * g0 + f.v11 * g1;
    double step = 1.0;
    double next = loglik(f.b0 + d0, f.b1 + d1);
    while (next < ll - 1e-12 && step > 1e-6) {
      step *= 0.5;
      next = loglik(f.b0 + step * d0, f.b1 + step * d1);
    }
    f.b0 += step * d0;
    f.b1 += step * d1;
    ll = next;
    if (std::max(std::abs(step * d0), std::abs(step * d1)) < 1e-10) {
      f.converged = true;
      break;
    }
  }
  return f;
}

}  // namespace

EstimateResult estimate_lambda(std::span<const DecisionRecord> records) {
  EstimateResult e;
  const auto obs = select<GamblePayload>(records, Bias::loss_aversion, e);
  std::vector<double> x;
  std::vector<int> y;
  double loss = kGambleLoss;
  std::set<double> distinct;
  for (const auto& o : obs) {
    const auto* c = std::get_if<BinaryChoice>(&o.rec->parsed.answer);
    if (!c || o.payload->two_frames) continue;
    x.push_back(o.payload->gain);
    y.push_back(c->label == "ACCEPT" ? 1 : 0);
    distinct.insert(o.payload->gain);
    loss = o.payload->loss;
  }
  if (distinct.size() < 5) throw InsufficientData("estimate_lambda: need at least 5 distinct gains");
  const auto accepts = std::count(y.begin(), y.end(), 1);
  if (accepts == 0) throw InsufficientData("estimate_lambda: no acceptances (threshold above the gain grid)");
  if (accepts == static_cast<long>(y.size()))
    throw InsufficientData("estimate_lambda: no rejections (threshold below the gain grid)");
  e.n = x.size();

  double max_reject = -INFINITY, min_accept = INFINITY;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i]) min_accept = std::min(min_accept, x[i]);
    else max_reject = std::max(max_reject, x[i]);
  }
  auto midpoint = [&] {
    const double mid = 0.5 * (max_reject + min_accept);
    e.point = mid / loss;
    e.std_error = 0.5 * (min_accept - max_reject) / loss;
    e.extras["bracket_lo"] = max_reject / loss;
    e.extras["bracket_hi"] = min_accept / loss;
    e.flags.push_back("separation_midpoint");
  };
  if (max_reject <= min_accept) {
    midpoint();
    return e;
  }

  const double m = stats::mean(x);
  const double s = stats::stddev(x);
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - m) / s;
  const auto f = fit_logit(z, y);
  if (!f.converged || !(f.b1 > 0.0)) {
    if (f.converged && f.b1 <= 0.0)
      throw DegenerateData("estimate_lambda: acceptance does not increase with the gain");
    midpoint();
    e.flags.push_back("fit_not_converged");
    return e;
  }
  const double xstar = m - s * f.b0 / f.b1;
  const double g0 = -s / f.b1, g1 = s * f.b0 / (f.b1 * f.b1);
  const double var = g0 * g0 * f.v00 + 2.0 * g0 * g1 * f.v01 + g1 * g1 * f.v11;
  e.point = xstar / loss;
  e.std_error = std::sqrt(std::max(var, 0.0)) / loss;
  e.extras["threshold_gain"] = xstar;
  e.extras["slope_per_unit_gain"] = f.b1 / s;
  if (xstar < *distinct.begin() || xstar > *distinct.rbegin()) e.flags.push_back("threshold_outside_grid");
  return e;
}

EstimateResult estimate_disposition(std::span<const DecisionRecord> records) {
  EstimateResult e;
  const auto obs = select<PortfolioPayload>(records, Bias::disposition, e);
  double nw = 0, sw = 0, nl = 0, sl = 0;
  for (const auto& o : obs) {
    const auto* c = std::get_if<SellChoice>(&o.rec->parsed.answer);
    if (!c) continue;
    const auto& pos = o.payload->positions;
    for (std::size_t k = 0; k < pos.size(); ++k) {
      const bool sold = std::binary_search(c->positions.begin(), c->positions.end(), static_cast<int>(k));
      if (pos[k].winner()) {
        ++nw;
        sw += sold;
      } else if (pos[k].loser()) {
        ++nl;
        sl += sold;
      }
    }
    ++e.n;
  }
  if (nw == 0 || nl == 0)
    throw InsufficientData("estimate_disposition: need winner and loser sell opportunities");
  const double pw = sw / nw, pl = sl / nl;
  e.extras["winner_sell_rate"] = pw;
  e.extras["loser_sell_rate"] = pl;
  e.extras["winner_opportunities"] = nw;
  e.extras["loser_opportunities"] = nl;
  if (sl == 0) {
    e.point = INFINITY;
    e.std_error = kNaN;
    e.flags.push_back("infinite_ratio");
    return e;
  }
  e.point = pw / pl;
  if (sw == 0) {
    e.std_error = kNaN;
    e.flags.push_back("zero_winner_sells");
    return e;
  }
  const double var_log = (1.0 - pw) / (nw * pw) + (1.0 - pl) / (nl * pl);
  e.std_error = e.point * std::sqrt(var_log);
  return e;
}

EstimateResult estimate_coverage(std::span<const DecisionRecord> records) {
  EstimateResult e;
  const auto obs = select<IntervalPayload>(records, Bias::overconfidence, e);
  std::size_t hits = 0, n = 0;
  double nominal = 0.0;
  for (const auto& o : obs) {
    const auto* c = std::get_if<IntervalAnswer>(&o.rec->parsed.answer);
    if (!c) continue;
    if (!o.payload->realized) throw InsufficientData("estimate_coverage: record " + o.rec->scenario.id + " has no realized outcome");
    const double r = *o.payload->realized;
    hits += (c->lo <= r && r <= c->hi);
    nominal += o.payload->target_coverage;
    ++n;
  }
  if (n == 0) throw InsufficientData("estimate_coverage: no interval answers");
  set_rate(e, hits, n);
  e.extras["nominal"] = nominal / static_cast<double>(n);
  e.extras["miscalibration"] = e.extras["nominal"] - e.point;
  return e;
}

EstimateResult estimate_herding(std::span<const DecisionRecord> records) {
  EstimateResult e;
  const auto obs = select<CascadePayload>(records, Bias::herding, e);
  std::size_t follow = 0, n = 0, agree = 0, agree_n = 0;
  for (const auto& o : obs) {
    const auto* c = std::get_if<BinaryChoice>(&o.rec->parsed.answer);
    if (!c) continue;
    const std::string crowd = o.payload->majority() == Signal::A ? "A" : "B";
    if (o.payload->conflict()) {
      follow += c->label == crowd;
      ++n;
    } else {
      agree += c->label == crowd;
      ++agree_n;
    }
  }
  if (n == 0) throw InsufficientData("estimate_herding: no conflict trials");
  set_rate(e, follow, n);
  if (agree_n) e.extras["agreement_follow_rate"] = static_cast<double>(agree) / static_cast<double>(agree_n);
  return e;
}

EstimateResult estimate_skew_choice(std::span<const DecisionRecord> records) {
  EstimateResult e;
  const auto obs = select<SkewChoicePayload>(records, Bias::probability_weighting, e);
  std::size_t hits = 0, n = 0;
  for (const auto& o : obs) {
    const auto* c = std::get_if<BinaryChoice>(&o.rec->parsed.answer);
    if (!c) continue;
    const std::string skew(1, static_cast<char>('A' + o.payload->high_skew));
    hits += c->label == skew;
    ++n;
  }
  if (n == 0) throw InsufficientData("estimate_skew_choice: no choices");
  set_rate(e, hits, n);
  return e;
}

EstimateResult estimate_anchoring(std::span<const DecisionRecord> records) {
  EstimateResult e;
  const auto obs = select<AnchorPayload>(records, Bias::anchoring, e);
  std::vector<double> a, v;
  std::set<double> distinct;
  for (const auto& o : obs) {
    const auto* c = std::get_if<Valuation>(&o.rec->parsed.answer);
    if (!c || !std::isfinite(c->price)) continue;
    a.push_back(o.payload->anchor);
    v.push_back(c->price);
    distinct.insert(o.payload->anchor);
  }
  if (distinct.size() < 3) throw InsufficientData("estimate_anchoring: need at least 3 distinct anchors");
  const double r = stats::pearson(a, v);
  e.point = r;
  e.n = a.size();
  if (a.size() > 3) {
    e.std_error = (1.0 - r * r) / std::sqrt(static_cast<double>(a.size()) - 3.0);
    e.extras["fisher_z"] = std::atanh(std::clamp(r, -0.999999999999, 0.999999999999));
  } else {
    e.std_error = kNaN;
    e.flags.push_back("too_few_for_standard_error");
  }
  e.extras["p_value"] = stats::pearson_pvalue(r, a.size());
  return e;
}

EstimateResult estimate_extrapolation(std::span<const DecisionRecord> records) {
  EstimateResult e;
  const auto obs = select<ForecastPayload>(records, Bias::extrapolation, e);
  std::vector<double> dx, dy, last, fc;
  for (const auto& o : obs) {
    const auto* c = std::get_if<ForecastAnswer>(&o.rec->parsed.answer);
    if (!c) continue;
    const double m = stats::mean(o.payload->history);
    dx.push_back(o.payload->history.back() - m);
    dy.push_back(c->value - m);
    last.push_back(o.payload->history.back());
    fc.push_back(c->value);
  }
  if (dx.size() < 3) throw InsufficientData("estimate_extrapolation: need at least 3 forecasts");
  const auto fit = stats::ols(std::span<const double>(dx), std::span<const double>(dy));
  e.point = fit.coef[1];
  e.std_error = fit.std_error[1];
  e.n = dx.size();
  e.extras["intercept"] = fit.coef[0];
  try {
    e.extras["correlation"] = stats::pearson(fc, last);
  } catch (const DegenerateData&) {
    e.flags.push_back("correlation_undefined");
  }
  return e;
}

EstimateResult estimate_representativeness(std::span<const DecisionRecord> records) {
  EstimateResult e;
  const auto obs = select<NarrativePayload>(records, Bias::representativeness, e);
  std::vector<double> n, f, y;
  for (const auto& o : obs) {
    const auto* c = std::get_if<Rating>(&o.rec->parsed.answer);
    if (!c) continue;
    n.push_back(o.payload->narrative_score);
    f.push_back(o.payload->fundamental_score);
    y.push_back(c->value);
  }
  if (y.size() < 4) throw InsufficientData("estimate_representativeness: need at least 4 ratings");
  const std::vector<std::vector<double>> cols = {n, f};
  const auto fit = stats::ols(cols, y);
  const double bn = fit.coef[1], bf = fit.coef[2];
  const double vn = fit.cov[1 * 3 + 1], vf = fit.cov[2 * 3 + 2], cnf = fit.cov[1 * 3 + 2];
  e.n = y.size();
  e.extras["narrative_coef"] = bn;
  e.extras["fundamental_coef"] = bf;
  if (bf == 0.0) {
    e.point = bn == 0.0 ? kNaN : std::copysign(INFINITY, bn);
    e.std_error = kNaN;
    e.flags.push_back("unstable_ratio");
    return e;
  }
  e.point = bn / bf;
  const double var = vn / (bf * bf) + bn * bn * vf / std::pow(bf, 4) - 2.0 * bn * cnf / std::pow(bf, 3);
  e.std_error = std::sqrt(std::max(var, 0.0));
  if (std::abs(bf) < 2.0 * std::sqrt(vf)) e.flags.push_back("unstable_ratio");
  return e;
}

EstimateResult estimate(Bias bias, std::span<const DecisionRecord> records) {
  switch (bias) {
    case Bias::loss_aversion: return estimate_lambda(records);
    case Bias::disposition: return estimate_disposition(records);
    case Bias::overconfidence: return estimate_coverage(records);
    case Bias::herding: return estimate_herding(records);
    case Bias::representativeness: return estimate_representativeness(records);
    case Bias::probability_weighting: return estimate_skew_choice(records);
    case Bias::anchoring: return estimate_anchoring(records);
    case Bias::extrapolation: return estimate_extrapolation(records);
  }
  throw InvalidArgument("unknown bias");
}

std::vector<EstimateResult> estimate_cells(std::span<const DecisionRecord> records, unsigned jobs) {
  using Key = std::pair<Bias, GroupKeys>;
  std::map<Key, std::vector<DecisionRecord>> cells;
  for (const auto& r : records) {
    GroupKeys k{std::string(to_string(r.profile)), r.strength, std::string(to_string(r.backend)), r.model_id};
    cells[{r.scenario.bias, k}].push_back(r);
  }
  std::vector<const Key*> keys;
  std::vector<const std::vector<DecisionRecord>*> groups;
  for (const auto& [k, v] : cells) {
    keys.push_back(&k);
    groups.push_back(&v);
  }
  std::vector<EstimateResult> out(keys.size());
  parallel_for(keys.size(), jobs, [&](std::size_t i) {
    try {
      out[i] = estimate(keys[i]->first, *groups[i]);
    } catch (const Error& ex) {
      EstimateResult r;
      r.point = kNaN;
      r.std_error = kNaN;
      r.flags.push_back(std::string("error:") + ex.what());
      out[i] = std::move(r);
    }
    out[i].bias = keys[i]->first;
    out[i].keys = keys[i]->second;
  });
  return out;
}

std::map<std::string, EstimateResult> estimate_by_respondent(Bias bias,
                                                             std::span<const DecisionRecord> records) {
  std::map<std::string, std::vector<DecisionRecord>> by;
  for (const auto& r : records)
    if (r.scenario.bias == bias) by[r.respondent_id].push_back(r);
  std::map<std::string, EstimateResult> out;
  for (const auto& [id, recs] : by) out.emplace(id, estimate(bias, recs));
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string join(const std::vector<std::string>& xs, char sep) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += sep;
    s += xs[i];
  }
  return s;
}

}  // namespace

void write_estimates_csv(const std::vector<EstimateResult>& rows, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out << "bias,profile,strength,backend,model_id,point,std_error,n,flags,extras\n";
  for (const auto& r : rows) {
    std::vector<std::string> extras;
    for (const auto& [k, v] : r.extras) extras.push_back(k + "=" + format_double(v));
    out << to_string(r.bias) << ',' << csv_field(r.keys.profile) << ',' << format_double(r.keys.strength) << ','
        << csv_field(r.keys.backend) << ',' << csv_field(r.keys.model_id) << ',' << format_double(r.point) << ','
        << format_double(r.std_error) << ',' << r.n << ',' << csv_field(join(r.flags, ';')) << ','
        << csv_field(join(extras, ';')) << '\n';
  }
}

std::vector<EstimateResult> read_estimates_csv(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty estimates file " + file.string());
  std::vector<EstimateResult> out;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 10) throw IoError("estimates row has " + std::to_string(f.size()) + " fields, expected 10");
    EstimateResult r;
    try {
      r.bias = parse_bias(f[0]);
      r.keys = {f[1], parse_double(f[2]), f[3], f[4]};
      r.point = parse_double(f[5]);
      r.std_error = parse_double(f[6]);
      r.n = static_cast<std::size_t>(parse_int(f[7]));
    } catch (const InvalidArgument& ex) {
      throw IoError(std::string("bad estimates row: ") + ex.what());
    }
    std::stringstream flags(f[8]);
    for (std::string t; std::getline(flags, t, ';');)
      if (!t.empty()) r.flags.push_back(t);
    std::stringstream extras(f[9]);
    for (std::string t; std::getline(extras, t, ';');) {
      const auto eq = t.find('=');
      if (eq == std::string::npos) continue;
      r.extras[t.substr(0, eq)] = parse_double(t.substr(eq + 1));
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace behavcal
