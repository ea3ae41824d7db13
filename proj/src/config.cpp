#include "behavcal/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "behavcal/error.hpp"

namespace behavcal {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& section) {
  if (!j.is_object()) throw InvalidArgument("config: '" + section + "' must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw InvalidArgument("config: unknown key '" + section + "." + k + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument("config: bad value for '" + section + "." + key + "'");
  }
}

void read_ms(const json& j, const char* key, std::chrono::milliseconds& out, const std::string& section) {
  long long ms = out.count();
  read(j, key, ms, section);
  out = std::chrono::milliseconds(ms);
}

json price_json(const PricePathConfig& c) {
  return {{"drift_mean", c.drift_mean}, {"drift_sd", c.drift_sd}, {"vol_lo", c.vol_lo},  {"vol_hi", c.vol_hi},
          {"s0_lo", c.s0_lo},           {"s0_hi", c.s0_hi},       {"months", c.months}, {"candidates", c.candidates},
          {"ks_alpha", c.ks_alpha}};
}

void price_from(const json& j, PricePathConfig& c) {
  const std::string s = "gen_data.price";
  check_keys(j, {"drift_mean", "drift_sd", "vol_lo", "vol_hi", "s0_lo", "s0_hi", "months", "candidates", "ks_alpha"}, s);
  read(j, "drift_mean", c.drift_mean, s);
  read(j, "drift_sd", c.drift_sd, s);
  read(j, "vol_lo", c.vol_lo, s);
  read(j, "vol_hi", c.vol_hi, s);
  read(j, "s0_lo", c.s0_lo, s);
  read(j, "s0_hi", c.s0_hi, s);
  read(j, "months", c.months, s);
  read(j, "candidates", c.candidates, s);
  read(j, "ks_alpha", c.ks_alpha, s);
}

json earnings_json(const EarningsConfig& c) {
  return {{"growth_mean", c.growth_mean}, {"growth_sd", c.growth_sd}, {"persistence", c.persistence},
          {"shock_sd", c.shock_sd},       {"quarters", c.quarters},   {"initial", c.initial}};
}

void earnings_from(const json& j, EarningsConfig& c) {
  const std::string s = "gen_data.earnings";
  check_keys(j, {"growth_mean", "growth_sd", "persistence", "shock_sd", "quarters", "initial"}, s);
  read(j, "growth_mean", c.growth_mean, s);
  read(j, "growth_sd", c.growth_sd, s);
  read(j, "persistence", c.persistence, s);
  read(j, "shock_sd", c.shock_sd, s);
  read(j, "quarters", c.quarters, s);
  read(j, "initial", c.initial, s);
}

json market_json(const MarketConfig& c) {
  json j = {{"sigma_v", c.sigma_v},
            {"gamma_risk", c.gamma_risk},
            {"periods", c.periods},
            {"replications", c.replications},
            {"theta", c.theta},
            {"mass_rational", c.mass_rational},
            {"mass_extrap", c.mass_extrap},
            {"mode", std::string(to_string(c.mode))},
            {"trend_lookback", c.trend_lookback},
            {"v0", c.v0},
            {"burn_in", c.burn_in}};
  if (c.heterogeneous)
    j["heterogeneous"] = {{"theta_lo", c.heterogeneous->theta_lo},
                          {"theta_hi", c.heterogeneous->theta_hi},
                          {"agents", c.heterogeneous->agents}};
  if (c.trading_cost) j["trading_cost"] = *c.trading_cost;
  if (c.news) j["news"] = {{"prob", c.news->prob}, {"variance_multiplier", c.news->variance_multiplier}};
  return j;
}

void market_from(const json& j, MarketConfig& c) {
  const std::string s = "abm";
  check_keys(j,
             {"sigma_v", "gamma_risk", "periods", "replications", "theta", "mass_rational", "mass_extrap", "mode",
              "trend_lookback", "v0", "burn_in", "heterogeneous", "trading_cost", "news"},
             s);
  read(j, "sigma_v", c.sigma_v, s);
  read(j, "gamma_risk", c.gamma_risk, s);
  read(j, "periods", c.periods, s);
  read(j, "replications", c.replications, s);
  read(j, "theta", c.theta, s);
  read(j, "mass_rational", c.mass_rational, s);
  read(j, "mass_extrap", c.mass_extrap, s);
  if (j.contains("mode")) c.mode = parse_forecast_mode(j.at("mode").get<std::string>());
  read(j, "trend_lookback", c.trend_lookback, s);
  read(j, "v0", c.v0, s);
  read(j, "burn_in", c.burn_in, s);
  if (j.contains("heterogeneous") && !j["heterogeneous"].is_null()) {
    HeterogeneousConfig h;
    const auto& hj = j["heterogeneous"];
    check_keys(hj, {"theta_lo", "theta_hi", "agents"}, "abm.heterogeneous");
    read(hj, "theta_lo", h.theta_lo, "abm.heterogeneous");
    read(hj, "theta_hi", h.theta_hi, "abm.heterogeneous");
    read(hj, "agents", h.agents, "abm.heterogeneous");
    c.heterogeneous = h;
  }
  if (j.contains("trading_cost") && !j["trading_cost"].is_null()) c.trading_cost = j["trading_cost"].get<double>();
  if (j.contains("news") && !j["news"].is_null()) {
    NewsConfig n;
    const auto& nj = j["news"];
    check_keys(nj, {"prob", "variance_multiplier"}, "abm.news");
    read(nj, "prob", n.prob, "abm.news");
    read(nj, "variance_multiplier", n.variance_multiplier, "abm.news");
    c.news = n;
  }
}

json power_json(const PowerSpec& p) {
  return {{"design", std::string(to_string(p.design))},
          {"n", p.n},
          {"effect_null", p.effect_null},
          {"effect_alt", p.effect_alt},
          {"within_corr", p.within_corr},
          {"alpha", p.alpha},
          {"reps", p.reps},
          {"clusters", p.clusters},
          {"cluster_size", p.cluster_size},
          {"base_rate", p.base_rate},
          {"opportunities", p.opportunities},
          {"cluster_sd", p.cluster_sd}};
}

PowerSpec power_from(const json& j) {
  const std::string s = "power[]";
  check_keys(j,
             {"design", "n", "effect_null", "effect_alt", "within_corr", "alpha", "reps", "clusters", "cluster_size",
              "base_rate", "opportunities", "cluster_sd"},
             s);
  PowerSpec p;
  if (j.contains("design")) {
    p.design = parse_power_design(j.at("design").get<std::string>());
    if (p.design == PowerDesign::proportion_vs_null) p = PowerSpec::herding();
    if (p.design == PowerDesign::coverage_clustered) p = PowerSpec::overconfidence();
  }
  read(j, "n", p.n, s);
  read(j, "effect_null", p.effect_null, s);
  read(j, "effect_alt", p.effect_alt, s);
  read(j, "within_corr", p.within_corr, s);
  read(j, "alpha", p.alpha, s);
  read(j, "reps", p.reps, s);
  read(j, "clusters", p.clusters, s);
  read(j, "cluster_size", p.cluster_size, s);
  read(j, "base_rate", p.base_rate, s);
  read(j, "opportunities", p.opportunities, s);
  read(j, "cluster_sd", p.cluster_sd, s);
  p.validate();
  return p;
}

template <typename E, typename Parse>
std::vector<E> enum_list(const json& j, const char* key, Parse parse, const std::string& section) {
  std::vector<E> out;
  if (!j.at(key).is_array()) throw InvalidArgument("config: '" + section + "." + key + "' must be an array");
  for (const auto& v : j.at(key)) out.push_back(parse(v.get<std::string>()));
  return out;
}

}  // namespace

AppConfig AppConfig::from_json_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config: not valid JSON: ") + e.what());
  }
  AppConfig c;
  check_keys(j, {"seed", "backend", "run", "templates", "llm", "gen_data", "abm", "power", "adversarial", "validate"},
             "config");
  read(j, "seed", c.seed, "config");
  if (j.contains("backend")) c.backend = parse_backend(j["backend"].get<std::string>());
  read(j, "templates", c.templates, "config");

  if (j.contains("run")) {
    const auto& r = j["run"];
    const std::string s = "run";
    check_keys(r, {"biases", "profiles", "strengths", "agents", "noise", "repeats", "model_id"}, s);
    if (r.contains("biases")) c.run.biases = enum_list<Bias>(r, "biases", parse_bias, s);
    if (r.contains("profiles")) c.run.profiles = enum_list<ProfileKind>(r, "profiles", parse_profile_kind, s);
    read(r, "strengths", c.run.strengths, s);
    read(r, "agents", c.run.agents, s);
    read(r, "noise", c.run.choice_noise, s);
    read(r, "repeats", c.run.repeats, s);
    read(r, "model_id", c.run.model_id, s);
  }
  if (j.contains("llm")) {
    const auto& l = j["llm"];
    const std::string s = "llm";
    check_keys(l,
               {"base_url", "path", "model_id", "temperature", "max_retries", "timeout_ms", "rate_limit", "burst",
                "max_in_flight", "auth_env", "backoff_base_ms", "backoff_max_ms"},
               s);
    read(l, "base_url", c.llm.base_url, s);
    read(l, "path", c.llm.path, s);
    read(l, "model_id", c.llm.model_id, s);
    read(l, "temperature", c.llm.temperature, s);
    read(l, "max_retries", c.llm.max_retries, s);
    read_ms(l, "timeout_ms", c.llm.timeout, s);
    read(l, "rate_limit", c.llm.rate_limit, s);
    read(l, "burst", c.llm.burst, s);
    read(l, "max_in_flight", c.llm.max_in_flight, s);
    read(l, "auth_env", c.llm.auth_env, s);
    read_ms(l, "backoff_base_ms", c.llm.backoff_base, s);
    read_ms(l, "backoff_max_ms", c.llm.backoff_max, s);
  }
  if (j.contains("gen_data")) {
    const auto& g = j["gen_data"];
    const std::string s = "gen_data";
    check_keys(g, {"assets", "reference_paths", "discriminator_paths", "scenarios", "price", "earnings"}, s);
    read(g, "assets", c.gen_data.assets, s);
    read(g, "reference_paths", c.gen_data.reference_paths, s);
    read(g, "discriminator_paths", c.gen_data.discriminator_paths, s);
    read(g, "scenarios", c.gen_data.scenarios, s);
    if (g.contains("price")) price_from(g["price"], c.gen_data.price);
    if (g.contains("earnings")) earnings_from(g["earnings"], c.gen_data.earnings);
  }
  if (j.contains("abm")) market_from(j["abm"], c.abm);
  if (j.contains("power")) {
    if (!j["power"].is_array()) throw InvalidArgument("config: 'power' must be an array");
    c.power.clear();
    for (const auto& p : j["power"]) c.power.push_back(power_from(p));
  }
  if (j.contains("adversarial")) {
    const auto& a = j["adversarial"];
    const std::string s = "adversarial";
    check_keys(a, {"catalog", "repeats", "profiles"}, s);
    read(a, "catalog", c.adversarial.catalog, s);
    read(a, "repeats", c.adversarial.repeats, s);
    if (a.contains("profiles"))
      c.adversarial.profiles = enum_list<ProfileKind>(a, "profiles", parse_profile_kind, s);
  }
  if (j.contains("validate")) {
    const auto& v = j["validate"];
    const std::string s = "validate";
    check_keys(v, {"benchmarks", "ranges", "delta"}, s);
    read(v, "benchmarks", c.validate.benchmarks, s);
    read(v, "ranges", c.validate.ranges, s);
    read(v, "delta", c.validate.delta, s);
  }
  c.finalize();
  return c;
}

AppConfig AppConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read config " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

void AppConfig::finalize() {
  run.seed = seed;
  abm.seed = seed;
  run.templates = templates.empty() ? TemplateSet::defaults() : TemplateSet::load(templates);
  run.validate();
  abm.validate();
  gen_data.price.validate();
  gen_data.earnings.validate();
  if (gen_data.assets == 0 || gen_data.scenarios == 0) throw InvalidArgument("config: gen_data counts must be >= 1");
  if (adversarial.repeats == 0) throw InvalidArgument("config: adversarial.repeats must be >= 1");
  if (!(validate.delta >= 0.0)) throw InvalidArgument("config: validate.delta must be >= 0");
  for (const auto& p : power) p.validate();
  if (backend == Backend::llm) llm.validate();
}

std::string AppConfig::to_json_text() const {
  json biases = json::array(), profiles = json::array(), adv_profiles = json::array(), power_arr = json::array();
  for (Bias b : run.biases) biases.push_back(std::string(to_string(b)));
  for (ProfileKind p : run.profiles) profiles.push_back(std::string(to_string(p)));
  for (ProfileKind p : adversarial.profiles) adv_profiles.push_back(std::string(to_string(p)));
  for (const auto& p : power) power_arr.push_back(power_json(p));
  json j = {
      {"seed", seed},
      {"backend", std::string(to_string(backend))},
      {"templates", templates},
      {"run",
       {{"biases", biases},
        {"profiles", profiles},
        {"strengths", run.strengths},
        {"agents", run.agents},
        {"noise", run.choice_noise},
        {"repeats", run.repeats},
        {"model_id", run.model_id}}},
      {"llm",
       {{"base_url", llm.base_url},
        {"path", llm.path},
        {"model_id", llm.model_id},
        {"temperature", llm.temperature},
        {"max_retries", llm.max_retries},
        {"timeout_ms", llm.timeout.count()},
        {"rate_limit", llm.rate_limit},
        {"burst", llm.burst},
        {"max_in_flight", llm.max_in_flight},
        {"auth_env", llm.auth_env},
        {"backoff_base_ms", llm.backoff_base.count()},
        {"backoff_max_ms", llm.backoff_max.count()}}},
      {"gen_data",
       {{"assets", gen_data.assets},
        {"reference_paths", gen_data.reference_paths},
        {"discriminator_paths", gen_data.discriminator_paths},
        {"scenarios", gen_data.scenarios},
        {"price", price_json(gen_data.price)},
        {"earnings", earnings_json(gen_data.earnings)}}},
      {"abm", market_json(abm)},
      {"power", power_arr},
      {"adversarial", {{"catalog", adversarial.catalog}, {"repeats", adversarial.repeats}, {"profiles", adv_profiles}}},
      {"validate", {{"benchmarks", validate.benchmarks}, {"ranges", validate.ranges}, {"delta", validate.delta}}},
  };
  return j.dump();
}

}  // namespace behavcal
