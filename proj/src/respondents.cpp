#include "behavcal/respondents.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "behavcal/error.hpp"
#include "behavcal/format.hpp"
#include "behavcal/rng.hpp"
#include "behavcal/serialize.hpp"
#include "behavcal/stats.hpp"

namespace behavcal {

namespace cal = calibration;

void GroundTruth::validate() const {
  params.validate();
  auto prob = [](double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; };
  if (!prob(sell_prob_winner) || !prob(sell_prob_loser))
    throw InvalidArgument("GroundTruth: sell probabilities must lie in [0, 1]");
  if (!(choice_noise >= 0.0) || !std::isfinite(choice_noise))
    throw InvalidArgument("GroundTruth: choice_noise must be finite and >= 0");
}

// ---------------------------------------------------------------------------
// Analytic design quantities

namespace {

double solve_bracketed(auto f, double lo, double hi) {
  boost::math::tools::eps_tolerance<double> tol(52);
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
  return 0.5 * (a + b);
}

double z90() { return stats::normal_quantile(0.90); }

}  // namespace

double coverage_for_kappa(double kappa) {
  if (!(kappa > 0.0)) throw InvalidArgument("coverage_for_kappa: kappa must be > 0");
  return 2.0 * stats::normal_cdf(z90() / std::sqrt(kappa)) - 1.0;
}

double kappa_for_coverage(double coverage) {
  if (!(coverage > 0.0 && coverage < 1.0)) throw InvalidArgument("kappa_for_coverage: coverage must lie in (0, 1)");
  const double z = stats::normal_quantile(0.5 * (1.0 + coverage));
  const double r = z90() / z;
  return r * r;
}

double anchor_rho(double a, double noise) {
  const double var = (cal::kAnchorHi - cal::kAnchorLo) * (cal::kAnchorHi - cal::kAnchorLo) / 12.0;
  const double se = noise * cal::kAnchorNoiseSd;
  const double b = 1.0 - a;
  const double denom = std::sqrt((b * b + a * a) * var + se * se);
  if (denom == 0.0) return 0.0;
  return b * std::sqrt(var) / denom;
}

double adjust_for_anchor_rho(double rho, double noise) {
  if (!(rho > 0.0 && rho < anchor_rho(0.0, noise)))
    throw InvalidArgument("adjust_for_anchor_rho: correlation not attainable");
  return solve_bracketed([&](double a) { return anchor_rho(a, noise) - rho; }, 0.0, 1.0);
}

double skew_choice_rate(const ParameterVector& p, double noise, double temperature, double ev) {
  std::array<double, 4> u{};
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double prob = cal::kSkewProbs[i];
    u[i] = weight_probability(prob, p) * value(ev / prob, p);
  }
  const double t = noise * temperature * std::pow(ev, p.alpha_gain);
  if (t <= 0.0) {
    const double best = *std::max_element(u.begin(), u.end());
    int ties = 0;
    for (double x : u) ties += std::abs(x - best) <= 1e-12 * std::abs(best);
    return std::abs(u[0] - best) <= 1e-12 * std::abs(best) ? 1.0 / ties : 0.0;
  }
  const double m = *std::max_element(u.begin(), u.end());
  double sum = 0.0;
  for (double x : u) sum += std::exp((x - m) / t);
  return std::exp((u[0] - m) / t) / sum;
}

double skew_temperature_for(double gamma_weight, double rate) {
  ParameterVector p;
  p.gamma_weight = gamma_weight;
  return solve_bracketed([&](double t) { return skew_choice_rate(p, 1.0, t) - rate; }, 0.01, 100.0);
}

double gamma_for_skew_rate(double rate, double noise) {
  auto f = [&](double g) {
    ParameterVector p;
    p.gamma_weight = g;
    return skew_choice_rate(p, noise) - rate;
  };
  return solve_bracketed(f, 0.3, 1.0);
}

GroundTruth profile_to_groundtruth(const Profile& profile) {
  if (!(profile.strength >= 0.0 && profile.strength <= 1.0))
    throw InvalidArgument("profile strength must lie in [0, 1]");
  const double s = profile.strength;
  auto lerp = [s](double from, double to) { return from + s * (to - from); };
  GroundTruth gt;
  auto& p = gt.params;
  switch (profile.kind) {
    case ProfileKind::rational:
      break;
    case ProfileKind::loss_averse:
      p.lambda = lerp(1.0, cal::kTargetLambda);
      p.gamma_weight = lerp(1.0, cal::kTargetGammaWeight);
      gt.sell_prob_winner = lerp(cal::kRationalSellProb, cal::kTargetSellWinner);
      break;
    case ProfileKind::overconfident:
      p.kappa = lerp(1.0, cal::kTargetKappa);
      break;
    case ProfileKind::herding_prone:
      p.w_herd = lerp(0.0, cal::kTargetHerd);
      break;
    case ProfileKind::representativeness_biased:
      p.tau_ratio = lerp(1.0, cal::kTargetTauRatio);
      p.a_adjust = lerp(1.0, cal::kTargetAdjust);
      break;
    case ProfileKind::extrapolative:
      p.theta = lerp(0.0, cal::kTargetTheta);
      break;
  }
  gt.validate();
  return gt;
}

double expected_measure(Bias bias, const GroundTruth& gt) {
  const auto& p = gt.params;
  switch (bias) {
    case Bias::loss_aversion: return p.lambda;
    case Bias::disposition: return gt.sell_prob_winner / gt.sell_prob_loser;
    case Bias::overconfidence: return coverage_for_kappa(p.kappa);
    case Bias::herding: return p.w_herd;
    case Bias::representativeness: return p.tau_ratio;
    case Bias::probability_weighting: return skew_choice_rate(p, gt.choice_noise);
    case Bias::anchoring: return anchor_rho(p.a_adjust, gt.choice_noise);
    case Bias::extrapolation: return p.theta;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Synthetic respondent

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool gamble_accepts(const GroundTruth& gt, const GamblePayload& g, Rng& rng) {
  const auto& p = gt.params;
  const double loss_term = weight_probability(1.0 - g.prob, p) * value(-g.loss, p);
  const double du = weight_probability(g.prob, p) * value(g.gain, p) + loss_term;
  const double t = gt.choice_noise * cal::kGambleTemperatureShare * std::abs(loss_term);
  if (t <= 0.0) return du >= 0.0;
  return rng.uniform() < logistic(du / t);
}

std::string answer_for(const GroundTruth& gt, const Scenario& sc, Rng& rng) {
  const auto& p = gt.params;
  const double noise = gt.choice_noise;
  return std::visit(
      [&](const auto& pl) -> std::string {
        using T = std::decay_t<decltype(pl)>;
        if constexpr (std::is_same_v<T, GamblePayload>) {
          const bool accept = gamble_accepts(gt, pl, rng);
          const std::string word = accept ? "ACCEPT" : "REJECT";
          return pl.two_frames ? word + ", " + word : word;
        } else if constexpr (std::is_same_v<T, PortfolioPayload>) {
          std::vector<double> prob;
          for (const auto& pos : pl.positions) {
            if (pos.winner()) prob.push_back(gt.sell_prob_winner);
            else if (pos.loser()) prob.push_back(gt.sell_prob_loser);
            else prob.push_back(0.5 * (gt.sell_prob_winner + gt.sell_prob_loser));
          }
          std::vector<int> sold;
          if (pl.sell_exactly_one) {
            double total = 0.0;
            for (double x : prob) total += x;
            if (total <= 0.0) {
              sold.push_back(static_cast<int>(rng.below(prob.size())));
            } else {
              double u = rng.uniform() * total;
              std::size_t k = 0;
              while (k + 1 < prob.size() && u >= prob[k]) u -= prob[k++];
              sold.push_back(static_cast<int>(k));
            }
          } else {
            for (std::size_t k = 0; k < prob.size(); ++k)
              if (rng.uniform() < prob[k]) sold.push_back(static_cast<int>(k));
          }
          if (sold.empty()) return "SELL NONE";
          std::string s = "SELL ";
          for (std::size_t k = 0; k < sold.size(); ++k) {
            if (k) s += ", ";
            s += std::to_string(sold[k] + 1);
          }
          return s;
        } else if constexpr (std::is_same_v<T, IntervalPayload>) {
          double mean = pl.forecast_mean, sd = pl.forecast_sd;
          if (!(sd > 0.0)) {
            // No model-implied distribution supplied: use the history.
            mean = stats::mean(pl.history);
            sd = pl.history.size() > 1 ? stats::stddev(pl.history) : 0.0;
          }
          const double z = stats::normal_quantile(0.5 * (1.0 + pl.target_coverage));
          const double half = z * perceived_sd(sd, p);
          return "[" + format_double(mean - half) + ", " + format_double(mean + half) + "]";
        } else if constexpr (std::is_same_v<T, CascadePayload>) {
          Signal choice = pl.private_signal;
          if (pl.conflict() && rng.uniform() < p.w_herd) choice = pl.majority();
          return choice == Signal::A ? "A" : "B";
        } else if constexpr (std::is_same_v<T, NarrativePayload>) {
          const double tau = p.tau_ratio;
          double r = 1.0 + 2.0 * (tau * pl.narrative_score + pl.fundamental_score) / (1.0 + tau);
          if (noise > 0.0) r += rng.normal(0.0, noise * cal::kRatingNoiseSd);
          return format_double(std::clamp(r, 1.0, 10.0));
        } else if constexpr (std::is_same_v<T, SkewChoicePayload>) {
          std::vector<double> u;
          for (const auto& l : pl.options) u.push_back(weight_probability(l.prob, p) * value(l.payoff, p));
          const double m = *std::max_element(u.begin(), u.end());
          std::size_t pick = 0;
          double ev = 0.0;
          for (const auto& l : pl.options) ev = std::max(ev, l.expected_value);
          const double t = noise * cal::kSkewTemperature * std::pow(std::max(ev, 1e-12), p.alpha_gain);
          if (t <= 0.0) {
            while (std::abs(u[pick] - m) > 1e-12 * std::abs(m)) ++pick;
          } else {
            std::vector<double> e;
            double sum = 0.0;
            for (double x : u) sum += e.emplace_back(std::exp((x - m) / t));
            double r = rng.uniform() * sum;
            while (pick + 1 < e.size() && r >= e[pick]) r -= e[pick++];
          }
          return std::string(1, static_cast<char>('A' + pick));
        } else if constexpr (std::is_same_v<T, AnchorPayload>) {
          double v = anchored_valuation(pl.anchor, pl.true_value, p);
          if (noise > 0.0) v += rng.normal(0.0, noise * cal::kAnchorNoiseSd);
          return format_double(v);
        } else {
          const double mean = stats::mean(pl.history);
          double f = forecast_return(mean, pl.history.back(), p);
          if (noise > 0.0) f += rng.normal(0.0, noise * cal::kForecastNoiseSd);
          return format_double(f);
        }
      },
      sc.payload);
}

}  // namespace

std::string synthetic_answer(const GroundTruth& gt, const Scenario& scenario, std::uint64_t seed) {
  Rng rng(seed);
  return "ANSWER: " + answer_for(gt, scenario, rng);
}

DecisionRecord respond_synthetic(const GroundTruth& gt, const Scenario& scenario, std::uint64_t seed) {
  DecisionRecord r;
  r.scenario = scenario;
  r.backend = Backend::synthetic;
  r.model_id = "synthetic";
  r.raw_text = synthetic_answer(gt, scenario, seed);
  r.parsed = parse_response(r.raw_text, expected_shape(scenario));
  r.seed_or_request_id = std::to_string(seed);
  return r;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

std::string strip_decoration(std::string_view line) {
  std::size_t b = 0, e = line.size();
  auto deco = [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '*' || c == '#' || c == '>' ||
           c == '`' || c == '_' || c == '-';
  };
  while (b < e && deco(line[b])) ++b;
  while (e > b && (std::isspace(static_cast<unsigned char>(line[e - 1])) || line[e - 1] == '*' ||
                   line[e - 1] == '`' || line[e - 1] == '_'))
    --e;
  return std::string(line.substr(b, e - b));
}

// Remainder after "ANSWER:" (case-insensitive), or nullopt.
std::optional<std::string> answer_payload(std::string_view line) {
  const auto s = strip_decoration(line);
  const auto upper = to_upper(s);
  if (!upper.starts_with("ANSWER")) return std::nullopt;
  std::size_t i = 6;
  while (i < s.size() && (s[i] == '*' || s[i] == '_' || std::isspace(static_cast<unsigned char>(s[i])))) ++i;
  if (i >= s.size() || s[i] != ':') return std::nullopt;
  ++i;
  auto rest = trim(std::string_view(s).substr(i));
  // Bold markers closing after the colon ("**ANSWER:** X").
  while (!rest.empty() && (rest.front() == '*' || rest.front() == '_')) rest.erase(0, 1);
  rest = trim(rest);
  while (!rest.empty() && (rest.back() == '.' || rest.back() == '*' || rest.back() == '`')) rest.pop_back();
  return trim(rest);
}

std::optional<double> number(std::string s) {
  s = trim(s);
  if (!s.empty() && s.back() == '%') s.pop_back();
  s = trim(s);
  bool neg = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    neg = s[0] == '-';
    s.erase(0, 1);
  }
  if (!s.empty() && s[0] == '$') s.erase(0, 1);
  if (!s.empty() && (s.back() == 'M' || s.back() == 'm')) s.pop_back();
  std::erase(s, ',');
  if (s.empty() || s[0] == '+' || s[0] == '-') return std::nullopt;
  try {
    const double v = parse_double(s);
    if (!std::isfinite(v)) return std::nullopt;
    return neg ? -v : v;
  } catch (const InvalidArgument&) {
    return std::nullopt;
  }
}

std::optional<bool> accept_word(std::string_view w) {
  const auto u = to_upper(trim(w));
  if (u == "ACCEPT") return true;
  if (u == "REJECT") return false;
  return std::nullopt;
}

std::optional<Answer> interpret(const std::string& body, AnswerShape shape) {
  const auto upper = to_upper(body);
  switch (shape) {
    case AnswerShape::accept_reject: {
      if (auto a = accept_word(body)) return BinaryChoice{*a ? "ACCEPT" : "REJECT"};
      return std::nullopt;
    }
    case AnswerShape::option: {
      std::string t = trim(upper);
      if (t.starts_with("OPTION ")) t = trim(t.substr(7));
      if (t.starts_with("ASSET ")) t = trim(t.substr(6));
      if (!t.empty() && (t.back() == ')' || t.back() == '.')) t.pop_back();
      if (t.size() == 1 && t[0] >= 'A' && t[0] <= 'Z') return BinaryChoice{t};
      return std::nullopt;
    }
    case AnswerShape::sell: {
      std::string t = trim(upper);
      if (!t.starts_with("SELL")) return std::nullopt;
      t = trim(t.substr(4));
      if (t == "NONE" || t == "NOTHING") return SellChoice{};
      std::set<int> idx;
      std::stringstream ss(t);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.starts_with("AND ")) tok = trim(tok.substr(4));
        if (tok.starts_with("#")) tok.erase(0, 1);
        try {
          const auto v = parse_int(tok);
          if (v < 1 || v > 1000) return std::nullopt;
          idx.insert(static_cast<int>(v - 1));
        } catch (const InvalidArgument&) {
          return std::nullopt;
        }
      }
      if (idx.empty()) return std::nullopt;
      return SellChoice{std::vector<int>(idx.begin(), idx.end())};
    }
    case AnswerShape::interval: {
      std::string t = trim(body);
      if (t.size() < 2 || !((t.front() == '[' && t.back() == ']') || (t.front() == '(' && t.back() == ')')))
        return std::nullopt;
      t = t.substr(1, t.size() - 2);
      // Split on the comma that separates the bounds (numbers may not use
      // thousands separators here).
      const auto comma = t.find(',');
      if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos) return std::nullopt;
      auto lo = number(t.substr(0, comma));
      auto hi = number(t.substr(comma + 1));
      if (!lo || !hi || *lo > *hi) return std::nullopt;
      return IntervalAnswer{*lo, *hi};
    }
    case AnswerShape::valuation: {
      if (auto v = number(body)) return Valuation{*v};
      return std::nullopt;
    }
    case AnswerShape::rating: {
      auto t = trim(body);
      if (const auto slash = t.find('/'); slash != std::string::npos) t = t.substr(0, slash);
      if (auto v = number(t); v && *v >= 1.0 && *v <= 10.0) return Rating{*v};
      return std::nullopt;
    }
    case AnswerShape::forecast: {
      if (auto v = number(body)) return ForecastAnswer{*v};
      return std::nullopt;
    }
    case AnswerShape::frame_pair: {
      const auto comma = body.find(',');
      if (comma == std::string::npos) return std::nullopt;
      auto a = accept_word(body.substr(0, comma));
      auto b = accept_word(body.substr(comma + 1));
      if (!a || !b) return std::nullopt;
      return FramePair{*a, *b};
    }
  }
  return std::nullopt;
}

}  // namespace

ParsedResponse parse_response(std::string_view raw, AnswerShape shape) {
  ParsedResponse r;
  r.raw = std::string(raw);
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= raw.size()) {
    auto end = raw.find('\n', start);
    if (end == std::string_view::npos) end = raw.size();
    lines.push_back(raw.substr(start, end - start));
    start = end + 1;
  }
  bool saw_answer = false;
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    auto body = answer_payload(*it);
    if (!body) continue;
    saw_answer = true;
    if (auto a = interpret(*body, shape)) {
      r.status = ParseStatus::ok;
      r.answer = std::move(*a);
      return r;
    }
  }
  r.status = ParseStatus::failed;
  r.error = saw_answer ? "answer line does not match the " + std::string(to_string(shape)) + " grammar"
                       : "no ANSWER line";
  return r;
}

// ---------------------------------------------------------------------------
// Records

std::string_view to_string(Backend b) { return b == Backend::synthetic ? "synthetic" : "llm"; }

Backend parse_backend(std::string_view s) {
  if (s == "synthetic") return Backend::synthetic;
  if (s == "llm") return Backend::llm;
  throw InvalidArgument("unknown backend: " + std::string(s));
}

std::string DecisionRecord::key() const {
  return scenario.id + "|" + std::string(to_string(profile)) + "|" + format_double(strength) + "|" +
         respondent_id;
}

std::string record_to_json(const DecisionRecord& r) {
  nlohmann::json j = {{"scenario", r.scenario},
                      {"profile", std::string(to_string(r.profile))},
                      {"strength", r.strength},
                      {"respondent_id", r.respondent_id},
                      {"backend", std::string(to_string(r.backend))},
                      {"model_id", r.model_id},
                      {"raw_text", r.raw_text},
                      {"parsed", r.parsed},
                      {"seed_or_request_id", r.seed_or_request_id}};
  if (!r.timestamp.empty()) j["timestamp"] = r.timestamp;
  if (r.retries) j["retries"] = r.retries;
  if (!r.error.empty()) j["error"] = r.error;
  return j.dump();
}

DecisionRecord record_from_json(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    DecisionRecord r;
    r.scenario = j.at("scenario").get<Scenario>();
    r.profile = parse_profile_kind(j.at("profile").get<std::string>());
    r.strength = j.at("strength").get<double>();
    r.respondent_id = j.value("respondent_id", std::string{});
    r.backend = parse_backend(j.at("backend").get<std::string>());
    r.model_id = j.value("model_id", std::string{});
    r.raw_text = j.value("raw_text", std::string{});
    r.parsed = j.at("parsed").get<ParsedResponse>();
    r.parsed.raw = r.raw_text;
    r.timestamp = j.value("timestamp", std::string{});
    r.seed_or_request_id = j.value("seed_or_request_id", std::string{});
    r.retries = j.value("retries", 0);
    r.error = j.value("error", std::string{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed decision record: ") + e.what());
  }
}

namespace {

void write_records(const std::vector<DecisionRecord>& records, const std::filesystem::path& file,
                   std::ios::openmode mode) {
  std::ofstream out(file, std::ios::binary | mode);
  if (!out) throw IoError("cannot write " + file.string());
  for (const auto& r : records) out << record_to_json(r) << '\n';
  out.flush();
  if (!out) throw IoError("write failed: " + file.string());
}

}  // namespace

void save_records(const std::vector<DecisionRecord>& records, const std::filesystem::path& file) {
  write_records(records, file, std::ios::trunc);
}

void append_records(const std::vector<DecisionRecord>& records, const std::filesystem::path& file) {
  write_records(records, file, std::ios::app);
}

std::vector<DecisionRecord> load_records(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<DecisionRecord> out;
  std::size_t start = 0;
  while (start < content.size()) {
    const auto end = content.find('\n', start);
    if (end == std::string::npos) break;  // partial trailing line
    const std::string_view line(content.data() + start, end - start);
    if (!trim(line).empty()) out.push_back(record_from_json(line));
    start = end + 1;
  }
  return out;
}

}  // namespace behavcal
