#include "behavcal/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "behavcal/error.hpp"
#include "behavcal/format.hpp"
#include "behavcal/rng.hpp"
#include "behavcal/serialize.hpp"
#include "behavcal/synthdata.hpp"

namespace behavcal {

Signal CascadePayload::majority() const {
  int a = 0, b = 0;
  for (auto s : crowd_history) (s == Signal::A ? a : b)++;
  if (a != b) return a > b ? Signal::A : Signal::B;
  // Ties go to the most recent choice.
  return crowd_history.empty() ? private_signal : crowd_history.back();
}

Bias payload_bias(const Payload& p) {
  switch (p.index()) {
    case 0: return Bias::loss_aversion;
    case 1: return Bias::disposition;
    case 2: return Bias::overconfidence;
    case 3: return Bias::herding;
    case 4: return Bias::representativeness;
    case 5: return Bias::probability_weighting;
    case 6: return Bias::anchoring;
    default: return Bias::extrapolation;
  }
}

void Scenario::validate() const {
  auto fail = [this](const std::string& m) {
    throw InvalidArgument("scenario " + id + ": " + m);
  };
  if (id.empty()) fail("empty id");
  if (payload_bias(payload) != bias) fail("payload does not match bias");
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GamblePayload>) {
          if (p.loss != kGambleLoss || p.prob != 0.5) fail("gamble must be 50-50 against a loss of 100");
          if (!(p.gain > 0.0)) fail("gamble gain must be positive");
        } else if constexpr (std::is_same_v<T, PortfolioPayload>) {
          if (p.positions.empty()) fail("portfolio has no positions");
          for (const auto& pos : p.positions)
            if (!(pos.purchase_price > 0.0) || !(pos.current_price > 0.0)) fail("non-positive price");
        } else if constexpr (std::is_same_v<T, IntervalPayload>) {
          if (p.history.empty()) fail("interval history empty");
          if (!(p.target_coverage > 0.0 && p.target_coverage < 1.0)) fail("coverage outside (0, 1)");
          if (!(p.forecast_sd >= 0.0)) fail("negative forecast sd");
        } else if constexpr (std::is_same_v<T, CascadePayload>) {
          if (p.crowd_history.empty()) fail("crowd history empty");
          if (!(p.signal_accuracy >= 0.5 && p.signal_accuracy <= 1.0)) fail("signal accuracy outside [0.5, 1]");
        } else if constexpr (std::is_same_v<T, SkewChoicePayload>) {
          if (p.options.size() < 2) fail("need at least two lotteries");
          if (p.high_skew < 0 || p.high_skew >= static_cast<int>(p.options.size())) fail("bad high-skew index");
          for (const auto& l : p.options) {
            if (!(l.prob > 0.0 && l.prob <= 1.0)) fail("lottery probability outside (0, 1]");
            if (std::abs(l.payoff * l.prob - l.expected_value) > 1e-9 * std::max(1.0, l.expected_value))
              fail("lottery expected value inconsistent");
          }
        } else if constexpr (std::is_same_v<T, ForecastPayload>) {
          if (p.history.size() < 2) fail("forecast history needs >= 2 returns");
        }
      },
      payload);
}

std::string_view to_string(AnswerShape s) {
  switch (s) {
    case AnswerShape::accept_reject: return "accept_reject";
    case AnswerShape::option: return "option";
    case AnswerShape::sell: return "sell";
    case AnswerShape::interval: return "interval";
    case AnswerShape::valuation: return "valuation";
    case AnswerShape::rating: return "rating";
    case AnswerShape::forecast: return "forecast";
    case AnswerShape::frame_pair: return "frame_pair";
  }
  return "?";
}

AnswerShape expected_shape(const Scenario& s) {
  return std::visit(
      [](const auto& p) -> AnswerShape {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GamblePayload>)
          return p.two_frames ? AnswerShape::frame_pair : AnswerShape::accept_reject;
        else if constexpr (std::is_same_v<T, PortfolioPayload>) return AnswerShape::sell;
        else if constexpr (std::is_same_v<T, IntervalPayload>) return AnswerShape::interval;
        else if constexpr (std::is_same_v<T, CascadePayload>) return AnswerShape::option;
        else if constexpr (std::is_same_v<T, NarrativePayload>) return AnswerShape::rating;
        else if constexpr (std::is_same_v<T, SkewChoicePayload>) return AnswerShape::option;
        else if constexpr (std::is_same_v<T, AnchorPayload>) return AnswerShape::valuation;
        else return AnswerShape::forecast;
      },
      s.payload);
}

// ---------------------------------------------------------------------------
// Builders

std::vector<double> gamble_grid(std::size_t n) {
  if (n == 0) throw InvalidArgument("gamble_grid: n must be >= 1");
  if (n == 1) return {50.0};
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = round_to(50.0 + static_cast<double>(i) * 350.0 / static_cast<double>(n - 1), 2);
  return g;
}

namespace {

std::string scenario_id(Bias b, std::size_t i) {
  std::string idx = std::to_string(i);
  if (idx.size() < 5) idx.insert(0, 5 - idx.size(), '0');
  return std::string(to_string(b)) + "-" + idx;
}

PortfolioPayload make_portfolio(Rng& rng, std::uint64_t seed) {
  AssetIdSource ids(seed);
  PortfolioPayload p;
  for (int k = 0; k < 6; ++k) {
    Position pos;
    pos.label = ids.next();
    pos.purchase_price = round_to(rng.uniform(20.0, 200.0), 2);
    const double move = round_to(rng.uniform(0.05, 0.40), 2);
    const double sign = k < 3 ? 1.0 : -1.0;
    pos.current_price = round_to(pos.purchase_price * (1.0 + sign * move), 2);
    p.positions.push_back(std::move(pos));
  }
  shuffle(p.positions, rng);
  return p;
}

IntervalPayload make_interval(Rng& rng, std::uint64_t seed) {
  IntervalPayload p;
  p.company = generate_asset_id(derive_seed(seed, "company"));
  const auto path = generate_earnings_path(EarningsConfig{}, derive_seed(seed, "earnings"));
  for (double v : path.values) p.history.push_back(round_to(v, 2));
  p.forecast_mean = path.next_mean();
  p.forecast_sd = path.next_sd();
  p.realized = rng.normal(p.forecast_mean, p.forecast_sd);
  return p;
}

CascadePayload make_cascade(Rng& rng, bool conflict) {
  CascadePayload p;
  p.signal_accuracy = 0.7;
  const int len = 3 + 2 * static_cast<int>(rng.below(4));  // 3, 5, 7 or 9
  const Signal maj = rng.bernoulli(0.5) ? Signal::A : Signal::B;
  const Signal other = maj == Signal::A ? Signal::B : Signal::A;
  const int lo = len / 2 + 1;
  const int count = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(len - lo + 1)));
  for (int k = 0; k < len; ++k) p.crowd_history.push_back(k < count ? maj : other);
  shuffle(p.crowd_history, rng);
  p.private_signal = conflict ? other : maj;
  return p;
}

SkewChoicePayload make_skew(Rng& rng) {
  const double k = static_cast<double>(1 + rng.below(10));
  const double ev = 100.0 * k;
  SkewChoicePayload p;
  // Payoffs are exact multiples so expected values are exact.
  p.options = {Lottery{1000.0 * k, 0.10, ev}, Lottery{200.0 * k, 0.50, ev},
               Lottery{125.0 * k, 0.80, ev}, Lottery{100.0 * k, 1.00, ev}};
  shuffle(p.options, rng);
  for (std::size_t i = 0; i < p.options.size(); ++i)
    if (p.options[i].prob == 0.10) p.high_skew = static_cast<int>(i);
  return p;
}

ForecastPayload make_forecast(std::uint64_t seed) {
  ForecastPayload p;
  p.asset = generate_asset_id(derive_seed(seed, "asset"));
  PricePathConfig cfg;
  cfg.months = 12;
  const auto path = generate_price_path(cfg, derive_seed(seed, "returns"));
  for (double r : path.log_returns()) p.history.push_back(round_to(100.0 * r, 2));
  return p;
}

}  // namespace

std::vector<Scenario> build_scenario_set(Bias bias, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("build_scenario_set: n must be >= 1");
  const auto tag = to_string(bias);
  std::vector<Scenario> out(n);

  std::vector<char> conflict;
  if (bias == Bias::herding) {
    conflict.assign(n, 0);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) conflict[i] = 1;
    Rng order(derive_seed(seed, "cascade-order"));
    shuffle(conflict, order);
  }
  const auto grid = bias == Bias::loss_aversion ? gamble_grid(n) : std::vector<double>{};

  for (std::size_t i = 0; i < n; ++i) {
    const auto s_seed = derive_seed(seed, tag, i);
    Rng rng(s_seed);
    Scenario& s = out[i];
    s.id = scenario_id(bias, i);
    s.bias = bias;
    switch (bias) {
      case Bias::loss_aversion: s.payload = GamblePayload{grid[i]}; break;
      case Bias::disposition: s.payload = make_portfolio(rng, derive_seed(s_seed, "assets")); break;
      case Bias::overconfidence: s.payload = make_interval(rng, s_seed); break;
      case Bias::herding: s.payload = make_cascade(rng, conflict[i] != 0); break;
      case Bias::representativeness: {
        NarrativePayload p;
        p.company = generate_asset_id(derive_seed(s_seed, "company"));
        p.narrative_score = round_to(rng.uniform(0.0, 4.0), 2);
        p.fundamental_score = round_to(rng.uniform(0.0, 4.0), 2);
        s.payload = p;
        break;
      }
      case Bias::probability_weighting: s.payload = make_skew(rng); break;
      case Bias::anchoring: {
        AnchorPayload p;
        p.asset = generate_asset_id(derive_seed(s_seed, "asset"));
        p.anchor = round_to(rng.uniform(50.0, 150.0), 2);
        p.true_value = round_to(rng.uniform(50.0, 150.0), 2);
        s.payload = p;
        break;
      }
      case Bias::extrapolation: s.payload = make_forecast(s_seed); break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Templates

Intensity intensity_for(double strength) {
  if (!(strength > 0.0)) return Intensity::none;
  if (strength < 0.5) return Intensity::mild;
  if (strength < 0.85) return Intensity::standard;
  return Intensity::strong;
}

std::string_view to_string(Intensity i) {
  switch (i) {
    case Intensity::none: return "none";
    case Intensity::mild: return "mild";
    case Intensity::standard: return "standard";
    case Intensity::strong: return "strong";
  }
  return "?";
}

namespace {

std::map<std::string, std::string> default_templates() {
  std::map<std::string, std::string> t;
  t["frame.rational"] =
      "You are a rational investor. Evaluate each decision by its expected consequences, using "
      "all of the information provided.";

  t["frame.loss_averse.mild"] =
      "You are an investor who leans toward protecting capital and dislikes losses somewhat more "
      "than you enjoy equal gains.";
  t["frame.loss_averse.standard"] =
      "You are an investor focused on capital protection who finds losses particularly painful.";
  t["frame.loss_averse.strong"] =
      "You are an investor whose overriding goal is capital protection. Losses feel far more "
      "painful to you than equal gains feel good, and you avoid them whenever you can.";

  t["frame.overconfident.mild"] =
      "You are an investor who trusts your own analysis a little more than most people do.";
  t["frame.overconfident.standard"] =
      "You are an investor highly confident in your own forecasts and analytical ability.";
  t["frame.overconfident.strong"] =
      "You are an investor certain of your superior forecasting skill. You believe your "
      "estimates are far more precise than anyone else's.";

  t["frame.herding_prone.mild"] =
      "You are an investor who pays some attention to what other investors are doing.";
  t["frame.herding_prone.standard"] =
      "You are an investor who tends to follow what the majority of other investors do.";
  t["frame.herding_prone.strong"] =
      "You are an investor who strongly prefers to go with the crowd. When others agree, you "
      "rarely act against them.";

  t["frame.representativeness_biased.mild"] =
      "You are an investor who is somewhat drawn to a good story behind a company.";
  t["frame.representativeness_biased.standard"] =
      "You are an investor who judges companies largely by how compelling their story is and by "
      "first impressions.";
  t["frame.representativeness_biased.strong"] =
      "You are an investor who judges almost entirely by the narrative and by the first figure "
      "you see. A compelling story matters more to you than the numbers.";

  t["frame.extrapolative.mild"] =
      "You are an investor who gives some weight to recent performance when thinking about the "
      "future.";
  t["frame.extrapolative.standard"] =
      "You are an investor who expects recent trends in returns to continue.";
  t["frame.extrapolative.strong"] =
      "You are an investor convinced that recent returns are the best guide to future returns. "
      "Whatever happened last month is likely to happen again.";

  t["body.loss_aversion"] =
      "You are offered a gamble with a {prob_pct}% chance to gain ${gain} and a {loss_prob_pct}% "
      "chance to lose ${loss}. Do you accept the gamble?";
  t["body.loss_aversion_frames"] =
      "Frame 1: a gamble offers a {prob_pct}% chance to gain ${gain} and a {loss_prob_pct}% chance "
      "to lose ${loss}. Do you accept it?\n"
      "Frame 2: you may keep a certain ${certain}, or accept a gamble that moves it up by ${gain} "
      "or down by ${loss} with equal chances. Do you accept the gamble?";
  t["body.disposition"] =
      "You hold the following positions (purchase price, current price, change):\n{positions}\n"
      "{instruction}";
  t["body.overconfidence"] =
      "{company} reported the following quarterly earnings in millions of dollars, oldest first: "
      "{history}.\nProvide a {coverage_pct}% confidence interval for next quarter's earnings in "
      "millions of dollars.";
  t["body.herding"] =
      "You must choose between option A and option B; exactly one of them is correct. Your "
      "private signal, which is correct with probability {accuracy_pct}%, indicates option "
      "{signal}. The previous {crowd_n} participants chose, in order: {crowd}. What do you "
      "choose?";
  t["body.representativeness"] =
      "{company} has a narrative appeal score of {narrative} out of 4 and a fundamentals score of "
      "{fundamental} out of 4. Rate the quality of {company} as an investment on a scale from 1 "
      "to 10.";
  t["body.probability_weighting"] =
      "Choose one of the following assets. Each pays the stated amount with the stated "
      "probability and nothing otherwise.\n{options}";
  t["body.anchoring"] =
      "{asset} was recently quoted at ${anchor}. An independent appraisal puts its fundamental "
      "value at ${true_value}. What is your valuation of {asset} in dollars?";
  t["body.extrapolation"] =
      "{asset} had the following monthly returns in percent over the last {months} months, oldest "
      "first: {history}.\nForecast next month's return in percent.";

  const std::string lead = "Explain briefly if you wish, then finish with a final line of the form\n";
  t["format.accept_reject"] = lead + "ANSWER: ACCEPT\nor\nANSWER: REJECT";
  t["format.option"] = lead + "ANSWER: <one of {labels}>";
  t["format.sell"] = lead +
                     "ANSWER: SELL <position numbers separated by commas>\nor, to sell nothing,\n"
                     "ANSWER: SELL NONE";
  t["format.interval"] = lead + "ANSWER: [<low>, <high>]";
  t["format.valuation"] = lead + "ANSWER: <price in dollars>";
  t["format.rating"] = lead + "ANSWER: <rating from 1 to 10>";
  t["format.forecast"] = lead + "ANSWER: <return in percent>";
  t["format.frame_pair"] = lead + "ANSWER: <ACCEPT or REJECT for frame 1>, <ACCEPT or REJECT for frame 2>";
  return t;
}

std::string pct(double p) { return format_double(round_to(100.0 * p, 2)); }

// Whole dollars print bare, anything else with cents.
std::string money(double x) {
  return x == std::round(x) ? format_double(x) : format_fixed(x, 2);
}

std::string join_numbers(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ", ";
    s += format_double(xs[i]);
  }
  return s;
}

std::string option_label(std::size_t i) { return std::string(1, static_cast<char>('A' + i)); }

std::string option_labels(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += (i + 1 == n) ? " or " : ", ";
    s += option_label(i);
  }
  return s;
}

struct Body {
  std::string name;
  std::map<std::string, std::string> vars;
};

Body scenario_body(const Scenario& sc) {
  Body b;
  b.name = "body." + std::string(to_string(sc.bias));
  auto& v = b.vars;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GamblePayload>) {
          if (p.two_frames) b.name = "body.loss_aversion_frames";
          v["prob_pct"] = pct(p.prob);
          v["loss_prob_pct"] = pct(1.0 - p.prob);
          v["gain"] = money(p.gain);
          v["loss"] = money(p.loss);
          v["certain"] = money(p.certain);
        } else if constexpr (std::is_same_v<T, PortfolioPayload>) {
          std::string lines;
          for (std::size_t i = 0; i < p.positions.size(); ++i) {
            const auto& pos = p.positions[i];
            const double change = 100.0 * (pos.current_price / pos.purchase_price - 1.0);
            lines += std::to_string(i + 1) + ". " + pos.label;
            if (!pos.asset_class.empty()) lines += " (" + pos.asset_class + ")";
            lines += ": purchased at $" + money(pos.purchase_price) + ", now $" +
                     money(pos.current_price) + " (" + (change >= 0 ? "+" : "") +
                     format_fixed(change, 1) + "%)\n";
          }
          if (!lines.empty()) lines.pop_back();
          v["positions"] = lines;
          std::string instr = p.note.empty() ? "" : p.note + " ";
          instr += p.sell_exactly_one ? "You must sell exactly one position today. Which do you sell?"
                                      : "Which positions, if any, do you sell today?";
          v["instruction"] = instr;
        } else if constexpr (std::is_same_v<T, IntervalPayload>) {
          v["company"] = p.company;
          v["history"] = join_numbers(p.history);
          v["coverage_pct"] = pct(p.target_coverage);
        } else if constexpr (std::is_same_v<T, CascadePayload>) {
          v["accuracy_pct"] = pct(p.signal_accuracy);
          v["signal"] = p.private_signal == Signal::A ? "A" : "B";
          v["crowd_n"] = std::to_string(p.crowd_history.size());
          std::string crowd;
          for (std::size_t i = 0; i < p.crowd_history.size(); ++i) {
            if (i) crowd += ", ";
            crowd += p.crowd_history[i] == Signal::A ? "A" : "B";
          }
          v["crowd"] = crowd;
        } else if constexpr (std::is_same_v<T, NarrativePayload>) {
          v["company"] = p.company;
          v["narrative"] = format_double(p.narrative_score);
          v["fundamental"] = format_double(p.fundamental_score);
        } else if constexpr (std::is_same_v<T, SkewChoicePayload>) {
          std::string lines;
          for (std::size_t i = 0; i < p.options.size(); ++i) {
            const auto& l = p.options[i];
            lines += option_label(i) + ": " + pct(l.prob) + "% chance of $" + money(l.payoff) +
                     " (expected value $" + money(l.expected_value) + ")\n";
          }
          if (!lines.empty()) lines.pop_back();
          v["options"] = lines;
        } else if constexpr (std::is_same_v<T, AnchorPayload>) {
          v["asset"] = p.asset;
          v["anchor"] = format_double(p.anchor);
          v["true_value"] = format_double(p.true_value);
        } else {
          v["asset"] = p.asset;
          v["months"] = std::to_string(p.history.size());
          v["history"] = join_numbers(p.history);
        }
      },
      sc.payload);
  return b;
}

std::size_t option_count(const Scenario& sc) {
  if (const auto* s = std::get_if<SkewChoicePayload>(&sc.payload)) return s->options.size();
  return 2;
}

}  // namespace

const TemplateSet& TemplateSet::defaults() {
  static const TemplateSet set = [] {
    TemplateSet t;
    t.templates_ = default_templates();
    return t;
  }();
  return set;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  TemplateSet t = defaults();
  if (!std::filesystem::is_directory(dir)) throw IoError("template directory not found: " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    if (!in) throw IoError("cannot read " + entry.path().string());
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    while (!text.empty() && text.back() == '\n') text.pop_back();
    t.templates_[entry.path().stem().string()] = text;
  }
  return t;
}

void TemplateSet::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [name, text] : templates_) {
    std::ofstream out(dir / (name + ".txt"), std::ios::binary);
    if (!out) throw IoError("cannot write template " + name);
    out << text << '\n';
  }
}

const std::string& TemplateSet::at(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw InvalidArgument("missing template: " + name);
  return it->second;
}

std::string TemplateSet::frame_name(const Profile& p) {
  const auto level = intensity_for(p.strength);
  if (p.kind == ProfileKind::rational || level == Intensity::none) return "frame.rational";
  const std::string id = p.template_id.empty() ? std::string(to_string(p.kind)) : p.template_id;
  return "frame." + id + "." + std::string(to_string(level));
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i);
      if (close == std::string_view::npos) throw InvalidArgument("unterminated placeholder in template");
      const std::string key(tmpl.substr(i + 1, close - i - 1));
      auto it = vars.find(key);
      if (it == vars.end()) throw InvalidArgument("unknown placeholder {" + key + "}");
      out += it->second;
      i = close + 1;
    } else {
      out += tmpl[i++];
    }
  }
  return out;
}

std::string render_prompt(const Profile& profile, const Scenario& scenario,
                          const TemplateSet& templates) {
  std::string prompt = templates.at(TemplateSet::frame_name(profile));
  prompt += "\n\n";
  if (!scenario.text.empty()) {
    prompt += scenario.text;
  } else {
    const auto body = scenario_body(scenario);
    prompt += fill_template(templates.at(body.name), body.vars);
  }
  prompt += "\n\n";
  const auto shape = expected_shape(scenario);
  std::map<std::string, std::string> fmt_vars;
  if (shape == AnswerShape::option) fmt_vars["labels"] = option_labels(option_count(scenario));
  prompt += fill_template(templates.at("format." + std::string(to_string(shape))), fmt_vars);
  prompt += "\n";
  return prompt;
}

// ---------------------------------------------------------------------------
// Adversarial catalog

namespace {

constexpr std::array<std::string_view, 9> kPredicateNames = {
    "sell_set_equals", "sell_subset_of",      "interval_width_at_least",
    "choice_equals",   "choice_not_equals",   "rating_at_most",
    "valuation_at_most", "forecast_below",    "frames_consistent",
};

}  // namespace

std::string_view to_string(PredicateKind k) { return kPredicateNames.at(static_cast<std::size_t>(k)); }

PredicateKind parse_predicate_kind(std::string_view s) {
  for (std::size_t i = 0; i < kPredicateNames.size(); ++i)
    if (kPredicateNames[i] == s) return static_cast<PredicateKind>(i);
  throw InvalidArgument("unknown predicate kind: " + std::string(s));
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::unparsed: return "unparsed";
  }
  return "?";
}

Verdict evaluate_pass(const AdversarialScenario& adv, const ParsedResponse& resp) {
  if (!resp.ok()) return Verdict::unparsed;
  const auto& pr = adv.predicate;
  const auto& a = resp.answer;
  bool pass = false;
  switch (pr.kind) {
    case PredicateKind::sell_set_equals:
      if (const auto* s = std::get_if<SellChoice>(&a)) {
        std::vector<int> want = pr.indices;
        std::sort(want.begin(), want.end());
        pass = s->positions == want;
      }
      break;
    case PredicateKind::sell_subset_of:
      if (const auto* s = std::get_if<SellChoice>(&a)) {
        pass = !s->positions.empty() &&
               std::all_of(s->positions.begin(), s->positions.end(), [&](int i) {
                 return std::find(pr.indices.begin(), pr.indices.end(), i) != pr.indices.end();
               });
      }
      break;
    case PredicateKind::interval_width_at_least:
      if (const auto* s = std::get_if<IntervalAnswer>(&a)) pass = s->hi - s->lo >= pr.threshold;
      break;
    case PredicateKind::choice_equals:
      if (const auto* s = std::get_if<BinaryChoice>(&a)) pass = s->label == pr.label;
      break;
    case PredicateKind::choice_not_equals:
      if (const auto* s = std::get_if<BinaryChoice>(&a)) pass = s->label != pr.label;
      break;
    case PredicateKind::rating_at_most:
      if (const auto* s = std::get_if<Rating>(&a)) pass = s->value <= pr.threshold;
      break;
    case PredicateKind::valuation_at_most:
      if (const auto* s = std::get_if<Valuation>(&a)) pass = s->price <= pr.threshold;
      break;
    case PredicateKind::forecast_below:
      if (const auto* s = std::get_if<ForecastAnswer>(&a)) pass = s->value < pr.threshold;
      break;
    case PredicateKind::frames_consistent:
      if (const auto* s = std::get_if<FramePair>(&a)) pass = s->first_accept == s->second_accept;
      break;
  }
  return pass ? Verdict::pass : Verdict::fail;
}

namespace {

Position pos(std::string label, double buy, double now, std::string cls = {}) {
  return Position{std::move(label), buy, now, std::move(cls)};
}

AdversarialScenario adv(std::string id, std::string name, Bias bias, Payload payload,
                        std::string text, PassPredicate pred) {
  AdversarialScenario a;
  a.base.id = std::move(id);
  a.base.bias = bias;
  a.base.payload = std::move(payload);
  a.base.text = std::move(text);
  a.name = std::move(name);
  a.predicate = std::move(pred);
  return a;
}

std::vector<AdversarialScenario> build_catalog() {
  std::vector<AdversarialScenario> c;
  using K = PredicateKind;

  {
    PortfolioPayload p;
    p.positions = {pos("Asset K427", 100, 85), pos("Asset X198", 100, 115)};
    p.sell_exactly_one = true;
    c.push_back(adv("adv-disposition-1", "tax loss harvesting", Bias::disposition, p,
                    "You hold Asset K427 (purchased $100, now $85, -15%) and Asset X198 (purchased "
                    "$100, now $115, +15%). Must sell one today. Tax rules: 10% of losses deductible "
                    "at 30% marginal rate. Both assets have identical expected returns going "
                    "forward. Which do you sell? Position 1 is Asset K427 and position 2 is Asset "
                    "X198.",
                    {K::sell_set_equals, {0}, 0.0, "", "explicit tax reasoning"}));
  }
  {
    PortfolioPayload p;
    p.positions = {pos("Asset M891", 100, 120), pos("Asset P234", 100, 90)};
    p.sell_exactly_one = true;
    c.push_back(adv("adv-disposition-2", "fundamental deterioration", Bias::disposition, p,
                    "Asset M891 (+20%) just missed earnings 40%, lost major contract, deteriorating "
                    "margins. Asset P234 (-10%) performing as expected. Which sell? Position 1 is "
                    "Asset M891 and position 2 is Asset P234.",
                    {K::sell_set_equals, {0}, 0.0, "", "cites fundamental analysis"}));
  }
  {
    PortfolioPayload p;
    p.positions = {pos("Stock fund 1", 100, 130, "stock"), pos("Stock fund 2", 100, 130, "stock"),
                   pos("Bond fund 1", 100, 100, "bond"), pos("Bond fund 2", 100, 100, "bond")};
    c.push_back(adv("adv-disposition-3", "portfolio rebalancing", Bias::disposition, p,
                    "You target 60/40 stocks/bonds. Stock positions all up 30%, bond positions "
                    "flat. Portfolio now 72/28. Must rebalance to 60/40. What do you sell? "
                    "Positions 1 and 2 are stock funds; positions 3 and 4 are bond funds.",
                    {K::sell_subset_of, {0, 1}, 0.0, "", "rebalancing rationale"}));
  }
  {
    IntervalPayload p;
    p.company = "Company Z";
    p.history = {2.1, 5.7, 1.3, 8.2, 2.8, 6.1, 3.4, 7.5};
    c.push_back(adv("adv-overconfidence-1", "extreme volatility", Bias::overconfidence, p,
                    "Company Z quarterly earnings (millions): $2.1, $5.7, $1.3, $8.2, $2.8, $6.1, "
                    "$3.4, $7.5. Provide 80% confidence interval for next quarter.",
                    {K::interval_width_at_least, {}, 5.0, "", ""}));
  }
  {
    IntervalPayload p;
    p.company = "Company";
    p.history = {5, 5, 5, 5, 5, 5, 3, 2.8};
    c.push_back(adv("adv-overconfidence-2", "structural break", Bias::overconfidence, p,
                    "Earnings steady $5M for 6 quarters, then sudden change: $3M, $2.8M most recent. "
                    "80% interval for next?",
                    {K::interval_width_at_least, {}, 3.0, "", "break mentioned"}));
  }
  {
    CascadePayload p;
    p.private_signal = Signal::A;
    p.signal_accuracy = 1.0;
    p.crowd_history.assign(15, Signal::B);
    p.crowd_history.push_back(Signal::A);
    c.push_back(adv("adv-herding-1", "perfect signal", Bias::herding, p,
                    "You have perfect signal (100% accurate) indicating type A. 15 of 16 previous "
                    "participants chose B. What do you choose?",
                    {K::choice_equals, {}, 0.0, "A", "cites signal perfection"}));
  }
  {
    CascadePayload p;
    p.private_signal = Signal::A;
    p.signal_accuracy = 0.95;
    p.crowd_history = {Signal::B};
    c.push_back(adv("adv-herding-2", "opposite information", Bias::herding, p,
                    "Your expertise: medical devices. Crowd: restaurant managers. Question: medical "
                    "device safety. Crowd chose 'unsafe.' Your analysis: clearly safe. Your choice? "
                    "Option A is 'safe' and option B is 'unsafe'.",
                    {K::choice_equals, {}, 0.0, "A", "expertise reasoning"}));
  }
  {
    NarrativePayload p;
    p.company = "Company";
    p.narrative_score = 4.0;
    p.fundamental_score = 0.0;
    c.push_back(adv("adv-representativeness-1", "narrative versus bankruptcy risk",
                    Bias::representativeness, p,
                    "Company: 'Revolutionary AI healthcare with visionary leadership and massive "
                    "potential.' Financials: Revenue $2M, expenses $15M, debt $50M, margins -750%, "
                    "debt/equity 25:1. Rate quality 1-10.",
                    {K::rating_at_most, {}, 4.0, "", "cites financial distress"}));
  }
  {
    SkewChoicePayload p;
    p.options = {Lottery{10000, 0.5, 5000}, Lottery{50000, 0.1, 5000}, Lottery{40000, 0.1, 4000}};
    p.high_skew = 1;
    c.push_back(adv("adv-probability_weighting-1", "dominated choice", Bias::probability_weighting, p,
                    "Asset A: 50% chance $10K, 50% $0 (EV=$5K). Asset B: 10% chance $50K, 90% $0 "
                    "(EV=$5K, skewed). Asset C: 10% chance $40K, 90% $0 (EV=$4K). Which?",
                    {K::choice_not_equals, {}, 0.0, "C", "cites dominance"}));
  }
  {
    AnchorPayload p;
    p.asset = "Asset";
    p.anchor = 200;
    p.true_value = 5;
    c.push_back(adv("adv-anchoring-1", "extreme anchor", Bias::anchoring, p,
                    "Asset currently $200. Just announced bankruptcy, liquidation value $5. Provide "
                    "valuation.",
                    {K::valuation_at_most, {}, 10.0, "", ""}));
  }
  {
    ForecastPayload p;
    p.asset = "Asset";
    p.history = {8, -7, 9, -8, 10, -9, 12};
    c.push_back(adv("adv-extrapolation-1", "mean reversion pattern", Bias::extrapolation, p,
                    "Returns last 6 months: +8%, -7%, +9%, -8%, +10%, -9%. Clear pattern: every up "
                    "followed by down. This month: +12%. Forecast next month.",
                    {K::forecast_below, {}, 0.0, "", "cites pattern"}));
  }
  {
    GamblePayload p;
    p.gain = 150;
    p.two_frames = true;
    p.certain = 100;
    c.push_back(adv("adv-loss_aversion-1", "framing manipulation", Bias::loss_aversion, p,
                    "Gamble: Gain $150 vs. lose $100 (50-50). Alternative frame: Accept certain $100 "
                    "or risk for $150. Which frame, which choice? Give your decision for the gamble "
                    "frame first and the certain-amount frame second.",
                    {K::frames_consistent, {}, 0.0, "", ""}));
  }
  return c;
}

}  // namespace

const std::vector<AdversarialScenario>& adversarial_catalog() {
  static const std::vector<AdversarialScenario> catalog = build_catalog();
  return catalog;
}

void save_catalog(const std::vector<AdversarialScenario>& catalog,
                  const std::filesystem::path& file) {
  nlohmann::json j;
  j["catalog_version"] = kCatalogVersion;
  j["scenarios"] = nlohmann::json::array();
  for (const auto& a : catalog) j["scenarios"].push_back(a);
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write catalog " + file.string());
  out << j.dump(2) << '\n';
}

std::vector<AdversarialScenario> load_catalog(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read catalog " + file.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed catalog " + file.string() + ": " + e.what());
  }
  const int version = j.value("catalog_version", 0);
  if (version < 1 || version > kCatalogVersion)
    throw IoError("unsupported catalog version " + std::to_string(version));
  std::vector<AdversarialScenario> out;
  try {
    for (const auto& e : j.at("scenarios")) out.push_back(e.get<AdversarialScenario>());
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed catalog entry in " + file.string() + ": " + e.what());
  }
  for (const auto& a : out) a.base.validate();
  return out;
}

std::map<std::pair<Bias, std::string>, PassTally> aggregate_pass_rates(
    const std::vector<VerdictRecord>& verdicts) {
  std::map<std::pair<Bias, std::string>, PassTally> out;
  for (const auto& v : verdicts) {
    auto& t = out[{v.bias, v.backend}];
    switch (v.verdict) {
      case Verdict::pass: ++t.passed; break;
      case Verdict::fail: ++t.failed; break;
      case Verdict::unparsed: ++t.unparsed; break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenario files

std::string scenario_to_json(const Scenario& s) { return nlohmann::json(s).dump(); }

Scenario scenario_from_json(std::string_view line) {
  try {
    return nlohmann::json::parse(line).get<Scenario>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed scenario record: ") + e.what());
  }
}

void save_scenarios(const std::vector<Scenario>& set, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  for (const auto& s : set) out << scenario_to_json(s) << '\n';
}

std::vector<Scenario> load_scenarios(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  std::vector<Scenario> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    out.push_back(scenario_from_json(line));
  }
  return out;
}

}  // namespace behavcal
