#include "behavcal/serialize.hpp"

#include "behavcal/error.hpp"

namespace behavcal {

using nlohmann::json;

namespace {

std::string signal_name(Signal s) { return s == Signal::A ? "A" : "B"; }

Signal parse_signal(const std::string& s) {
  if (s == "A") return Signal::A;
  if (s == "B") return Signal::B;
  throw IoError("bad signal '" + s + "'");
}

json payload_json(const Payload& payload) {
  json j;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GamblePayload>) {
          j = {{"type", "gamble"}, {"gain", p.gain}, {"loss", p.loss}, {"prob", p.prob}};
          if (p.two_frames) {
            j["two_frames"] = true;
            j["certain"] = p.certain;
          }
        } else if constexpr (std::is_same_v<T, PortfolioPayload>) {
          j = {{"type", "portfolio"}, {"sell_exactly_one", p.sell_exactly_one}};
          json positions = json::array();
          for (const auto& pos : p.positions) {
            json e = {{"label", pos.label},
                      {"purchase_price", pos.purchase_price},
                      {"current_price", pos.current_price}};
            if (!pos.asset_class.empty()) e["asset_class"] = pos.asset_class;
            positions.push_back(std::move(e));
          }
          j["positions"] = std::move(positions);
          if (!p.note.empty()) j["note"] = p.note;
        } else if constexpr (std::is_same_v<T, IntervalPayload>) {
          j = {{"type", "interval"},          {"company", p.company},
               {"history", p.history},        {"target_coverage", p.target_coverage},
               {"forecast_mean", p.forecast_mean}, {"forecast_sd", p.forecast_sd}};
          if (p.realized) j["realized"] = *p.realized;
        } else if constexpr (std::is_same_v<T, CascadePayload>) {
          json crowd = json::array();
          for (auto s : p.crowd_history) crowd.push_back(signal_name(s));
          j = {{"type", "cascade"},
               {"private_signal", signal_name(p.private_signal)},
               {"signal_accuracy", p.signal_accuracy},
               {"crowd_history", std::move(crowd)}};
        } else if constexpr (std::is_same_v<T, NarrativePayload>) {
          j = {{"type", "narrative"},
               {"company", p.company},
               {"narrative_score", p.narrative_score},
               {"fundamental_score", p.fundamental_score}};
        } else if constexpr (std::is_same_v<T, SkewChoicePayload>) {
          json opts = json::array();
          for (const auto& l : p.options)
            opts.push_back({{"payoff", l.payoff}, {"prob", l.prob}, {"expected_value", l.expected_value}});
          j = {{"type", "skew_choice"}, {"options", std::move(opts)}, {"high_skew", p.high_skew}};
        } else if constexpr (std::is_same_v<T, AnchorPayload>) {
          j = {{"type", "anchor"}, {"asset", p.asset}, {"anchor", p.anchor}, {"true_value", p.true_value}};
        } else {
          j = {{"type", "forecast"}, {"asset", p.asset}, {"history", p.history}};
        }
      },
      payload);
  return j;
}

Payload payload_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "gamble") {
    GamblePayload p;
    p.gain = j.at("gain").get<double>();
    p.loss = j.value("loss", kGambleLoss);
    p.prob = j.value("prob", 0.5);
    p.two_frames = j.value("two_frames", false);
    p.certain = j.value("certain", 0.0);
    return p;
  }
  if (type == "portfolio") {
    PortfolioPayload p;
    p.sell_exactly_one = j.value("sell_exactly_one", false);
    p.note = j.value("note", std::string{});
    for (const auto& e : j.at("positions"))
      p.positions.push_back(Position{e.value("label", std::string{}), e.at("purchase_price").get<double>(),
                                     e.at("current_price").get<double>(),
                                     e.value("asset_class", std::string{})});
    return p;
  }
  if (type == "interval") {
    IntervalPayload p;
    p.company = j.value("company", std::string{});
    p.history = j.at("history").get<std::vector<double>>();
    p.target_coverage = j.value("target_coverage", kNominalCoverage);
    p.forecast_mean = j.value("forecast_mean", 0.0);
    p.forecast_sd = j.value("forecast_sd", 0.0);
    if (j.contains("realized")) p.realized = j.at("realized").get<double>();
    return p;
  }
  if (type == "cascade") {
    CascadePayload p;
    p.private_signal = parse_signal(j.at("private_signal").get<std::string>());
    p.signal_accuracy = j.at("signal_accuracy").get<double>();
    for (const auto& s : j.at("crowd_history")) p.crowd_history.push_back(parse_signal(s.get<std::string>()));
    return p;
  }
  if (type == "narrative") {
    NarrativePayload p;
    p.company = j.value("company", std::string{});
    p.narrative_score = j.at("narrative_score").get<double>();
    p.fundamental_score = j.at("fundamental_score").get<double>();
    return p;
  }
  if (type == "skew_choice") {
    SkewChoicePayload p;
    for (const auto& e : j.at("options"))
      p.options.push_back(Lottery{e.at("payoff").get<double>(), e.at("prob").get<double>(),
                                  e.at("expected_value").get<double>()});
    p.high_skew = j.at("high_skew").get<int>();
    return p;
  }
  if (type == "anchor") {
    AnchorPayload p;
    p.asset = j.value("asset", std::string{});
    p.anchor = j.at("anchor").get<double>();
    p.true_value = j.at("true_value").get<double>();
    return p;
  }
  if (type == "forecast") {
    ForecastPayload p;
    p.asset = j.value("asset", std::string{});
    p.history = j.at("history").get<std::vector<double>>();
    return p;
  }
  throw IoError("unknown payload type '" + type + "'");
}

}  // namespace

void to_json(json& j, const Scenario& s) {
  j = {{"schema", kScenarioSchemaVersion},
       {"id", s.id},
       {"bias", std::string(to_string(s.bias))},
       {"payload", payload_json(s.payload)}};
  if (!s.text.empty()) j["text"] = s.text;
}

void from_json(const json& j, Scenario& s) {
  const int schema = j.value("schema", kScenarioSchemaVersion);
  if (schema != kScenarioSchemaVersion) throw IoError("unsupported scenario schema " + std::to_string(schema));
  s.id = j.at("id").get<std::string>();
  s.bias = parse_bias(j.at("bias").get<std::string>());
  s.payload = payload_from_json(j.at("payload"));
  s.text = j.value("text", std::string{});
  s.validate();
}

void to_json(json& j, const ParsedResponse& r) {
  j = {{"status", r.ok() ? "ok" : "failed"}};
  json a;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, BinaryChoice>) a = {{"kind", "choice"}, {"label", v.label}};
        else if constexpr (std::is_same_v<T, SellChoice>) a = {{"kind", "sell"}, {"positions", v.positions}};
        else if constexpr (std::is_same_v<T, IntervalAnswer>) a = {{"kind", "interval"}, {"lo", v.lo}, {"hi", v.hi}};
        else if constexpr (std::is_same_v<T, Valuation>) a = {{"kind", "valuation"}, {"price", v.price}};
        else if constexpr (std::is_same_v<T, Rating>) a = {{"kind", "rating"}, {"value", v.value}};
        else if constexpr (std::is_same_v<T, ForecastAnswer>) a = {{"kind", "forecast"}, {"value", v.value}};
        else if constexpr (std::is_same_v<T, FramePair>)
          a = {{"kind", "frame_pair"}, {"first_accept", v.first_accept}, {"second_accept", v.second_accept}};
      },
      r.answer);
  if (!a.is_null()) j["answer"] = std::move(a);
  if (!r.error.empty()) j["error"] = r.error;
}

void from_json(const json& j, ParsedResponse& r) {
  r.status = j.at("status").get<std::string>() == "ok" ? ParseStatus::ok : ParseStatus::failed;
  r.error = j.value("error", std::string{});
  r.answer = std::monostate{};
  if (!j.contains("answer")) return;
  const auto& a = j.at("answer");
  const auto kind = a.at("kind").get<std::string>();
  if (kind == "choice") r.answer = BinaryChoice{a.at("label").get<std::string>()};
  else if (kind == "sell") r.answer = SellChoice{a.at("positions").get<std::vector<int>>()};
  else if (kind == "interval") r.answer = IntervalAnswer{a.at("lo").get<double>(), a.at("hi").get<double>()};
  else if (kind == "valuation") r.answer = Valuation{a.at("price").get<double>()};
  else if (kind == "rating") r.answer = Rating{a.at("value").get<double>()};
  else if (kind == "forecast") r.answer = ForecastAnswer{a.at("value").get<double>()};
  else if (kind == "frame_pair")
    r.answer = FramePair{a.at("first_accept").get<bool>(), a.at("second_accept").get<bool>()};
  else throw IoError("unknown answer kind '" + kind + "'");
}

void to_json(json& j, const AdversarialScenario& a) {
  json pred = {{"kind", std::string(to_string(a.predicate.kind))}};
  if (!a.predicate.indices.empty()) pred["indices"] = a.predicate.indices;
  if (a.predicate.threshold != 0.0) pred["threshold"] = a.predicate.threshold;
  if (!a.predicate.label.empty()) pred["label"] = a.predicate.label;
  if (!a.predicate.unchecked_clause.empty()) pred["unchecked_clause"] = a.predicate.unchecked_clause;
  j = {{"name", a.name}, {"scenario", a.base}, {"predicate", std::move(pred)}};
}

void from_json(const json& j, AdversarialScenario& a) {
  a.name = j.value("name", std::string{});
  a.base = j.at("scenario").get<Scenario>();
  const auto& p = j.at("predicate");
  a.predicate.kind = parse_predicate_kind(p.at("kind").get<std::string>());
  a.predicate.indices = p.value("indices", std::vector<int>{});
  a.predicate.threshold = p.value("threshold", 0.0);
  a.predicate.label = p.value("label", std::string{});
  a.predicate.unchecked_clause = p.value("unchecked_clause", std::string{});
}

}  // namespace behavcal
