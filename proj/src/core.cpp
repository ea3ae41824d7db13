#include "behavcal/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "behavcal/error.hpp"
#include "behavcal/format.hpp"

namespace behavcal {

namespace {

constexpr std::array<std::string_view, 8> kBiasNames = {
    "loss_aversion",      "disposition",           "overconfidence", "herding",
    "representativeness", "probability_weighting", "anchoring",      "extrapolation",
};

constexpr std::array<std::string_view, 6> kProfileNames = {
    "rational",      "loss_averse",
    "overconfident", "herding_prone",
    "representativeness_biased", "extrapolative",
};

std::string normalise(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (c == '-' || c == ' ') c = '_';
  }
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(what);
}

}  // namespace

std::string_view to_string(Bias b) { return kBiasNames.at(static_cast<std::size_t>(b)); }

Bias parse_bias(std::string_view name) {
  const auto n = normalise(name);
  for (std::size_t i = 0; i < kBiasNames.size(); ++i) {
    if (n == kBiasNames[i]) return static_cast<Bias>(i);
  }
  throw InvalidArgument("unknown bias: " + std::string(name));
}

std::string_view to_string(ProfileKind k) {
  return kProfileNames.at(static_cast<std::size_t>(k));
}

ProfileKind parse_profile_kind(std::string_view name) {
  const auto n = normalise(name);
  for (std::size_t i = 0; i < kProfileNames.size(); ++i) {
    if (n == kProfileNames[i]) return static_cast<ProfileKind>(i);
  }
  throw InvalidArgument("unknown profile: " + std::string(name));
}

ProfileKind targeting_profile(Bias b) {
  switch (b) {
    case Bias::loss_aversion:
    case Bias::disposition:
    case Bias::probability_weighting:
      return ProfileKind::loss_averse;
    case Bias::overconfidence:
      return ProfileKind::overconfident;
    case Bias::herding:
      return ProfileKind::herding_prone;
    case Bias::representativeness:
    case Bias::anchoring:
      return ProfileKind::representativeness_biased;
    case Bias::extrapolation:
      return ProfileKind::extrapolative;
  }
  throw InvalidArgument("targeting_profile: bad bias");
}

void ParameterVector::validate() const {
  for (double v : {lambda, alpha_gain, beta_loss, gamma_weight, kappa, theta, w_herd, a_adjust,
                   tau_ratio, gamma_risk}) {
    require(std::isfinite(v), "ParameterVector: non-finite field");
  }
  require(lambda >= 0.0, "ParameterVector: lambda must be >= 0");
  require(alpha_gain > 0.0 && alpha_gain <= 1.0, "ParameterVector: alpha_gain must lie in (0, 1]");
  require(beta_loss > 0.0 && beta_loss <= 1.0, "ParameterVector: beta_loss must lie in (0, 1]");
  require(gamma_weight >= 0.3 && gamma_weight <= 1.0,
          "ParameterVector: gamma_weight must lie in [0.3, 1]");
  require(kappa > 0.0, "ParameterVector: kappa must be > 0");
  require(w_herd >= 0.0 && w_herd <= 1.0, "ParameterVector: w_herd must lie in [0, 1]");
  require(a_adjust >= 0.0 && a_adjust <= 1.0, "ParameterVector: a_adjust must lie in [0, 1]");
  require(tau_ratio >= 0.0, "ParameterVector: tau_ratio must be >= 0");
  require(gamma_risk > 0.0, "ParameterVector: gamma_risk must be > 0");
}

Profile Profile::make(ProfileKind kind, double strength) {
  require(std::isfinite(strength) && strength >= 0.0 && strength <= 1.0,
          "Profile: strength must lie in [0, 1]");
  Profile p;
  p.kind = kind;
  p.strength = strength;
  p.template_id = std::string(to_string(kind));
  return p;
}

// ---------------------------------------------------------------------------
// Benchmarks

BenchmarkRegistry::BenchmarkRegistry(std::vector<Benchmark> e) : entries_(std::move(e)) {
  if (entries_.size() != kAllBiases.size())
    throw InvalidArgument("benchmark registry must hold exactly eight entries");
  std::sort(entries_.begin(), entries_.end(),
            [](const Benchmark& a, const Benchmark& b) { return a.bias < b.bias; });
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& b = entries_[i];
    if (b.bias != kAllBiases[i])
      throw InvalidArgument("benchmark registry: duplicate or missing bias");
    if (!(b.lo <= b.point && b.point <= b.hi))
      throw InvalidArgument("benchmark " + std::string(to_string(b.bias)) + ": need lo <= point <= hi");
  }
}

BenchmarkRegistry BenchmarkRegistry::defaults() {
  return BenchmarkRegistry({
      {Bias::loss_aversion, 2.25, 2.00, 2.50, "lambda",
       "Tversky & Kahneman choice experiments, N=300"},
      {Bias::disposition, 1.60, 1.30, 2.00, "ratio",
       "Odean brokerage accounts; Shefrin & Statman; Weber & Camerer"},
      {Bias::overconfidence, 0.15, 0.12, 0.18, "miscalibration",
       "Moore & Healy: stated 80% intervals cover ~65%"},
      {Bias::herding, 0.70, 0.65, 0.75, "rate",
       "Anderson & Holt cascades 68%; Celen & Kariv 74%"},
      {Bias::representativeness, 1.65, 1.50, 1.80, "ratio",
       "narrative vs fundamental weights in lab elicitation"},
      {Bias::probability_weighting, 0.35, 0.30, 0.40, "rate",
       "Barberis & Huang: high-skew choice at equal expected value"},
      {Bias::anchoring, 0.43, 0.38, 0.52, "correlation",
       "Northcraft & Neale; Mussweiler et al."},
      {Bias::extrapolation, 0.60, 0.55, 0.65, "coefficient",
       "Bloomfield & Hales 0.63; Greenwood & Shleifer 0.57"},
  });
}

const Benchmark& BenchmarkRegistry::at(Bias b) const {
  return entries_.at(static_cast<std::size_t>(b));
}

Benchmark BenchmarkRegistry::measured(Bias b) const {
  Benchmark m = at(b);
  if (b == Bias::overconfidence) {
    m.point = kNominalCoverage - m.point;
    const double lo = kNominalCoverage - m.hi;
    const double hi = kNominalCoverage - m.lo;
    m.lo = lo;
    m.hi = hi;
    m.unit = "coverage";
  }
  return m;
}

namespace {

// Splits `key=value key="quoted value"` into a map.
std::map<std::string, std::string> split_record(std::string_view line, std::size_t lineno) {
  std::map<std::string, std::string> kv;
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
  };
  while (true) {
    skip_ws();
    if (i >= line.size()) break;
    const auto eq = line.find('=', i);
    if (eq == std::string_view::npos)
      throw InvalidArgument("benchmark file line " + std::to_string(lineno) + ": expected key=value");
    std::string key(line.substr(i, eq - i));
    i = eq + 1;
    std::string val;
    if (i < line.size() && line[i] == '"') {
      const auto close = line.find('"', i + 1);
      if (close == std::string_view::npos)
        throw InvalidArgument("benchmark file line " + std::to_string(lineno) + ": unterminated quote");
      val = std::string(line.substr(i + 1, close - i - 1));
      i = close + 1;
    } else {
      const auto start = i;
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      val = std::string(line.substr(start, i - start));
    }
    kv[key] = val;
  }
  return kv;
}

}  // namespace

BenchmarkRegistry BenchmarkRegistry::parse(std::string_view text) {
  std::vector<Benchmark> out;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || line[first] == '#') continue;
    if (line.back() == '\r') line.remove_suffix(1);
    const auto kv = split_record(line, lineno);
    auto get = [&](const char* k) -> const std::string& {
      auto it = kv.find(k);
      if (it == kv.end())
        throw InvalidArgument("benchmark file line " + std::to_string(lineno) + ": missing " + k);
      return it->second;
    };
    Benchmark b;
    b.bias = parse_bias(get("bias"));
    b.point = parse_double(get("point"));
    b.lo = parse_double(get("lo"));
    b.hi = parse_double(get("hi"));
    if (auto it = kv.find("unit"); it != kv.end()) b.unit = it->second;
    if (auto it = kv.find("source"); it != kv.end()) b.source_note = it->second;
    out.push_back(std::move(b));
  }
  return BenchmarkRegistry(std::move(out));
}

BenchmarkRegistry BenchmarkRegistry::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open benchmark file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string BenchmarkRegistry::serialize() const {
  std::string out = "# behavioral benchmark registry v1\n";
  for (const auto& b : entries_) {
    out += "bias=" + std::string(to_string(b.bias)) + " point=" + format_double(b.point) +
           " lo=" + format_double(b.lo) + " hi=" + format_double(b.hi) + " unit=" + b.unit +
           " source=\"" + b.source_note + "\"\n";
  }
  return out;
}

void BenchmarkRegistry::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write benchmark file " + file.string());
  out << serialize();
}

// ---------------------------------------------------------------------------
// Primitives

double value(double x, const ParameterVector& p) {
  if (x > 0.0) return std::pow(x, p.alpha_gain);
  if (x < 0.0) return -p.lambda * std::pow(-x, p.beta_loss);
  return 0.0;
}

double weight_probability(double prob, const ParameterVector& p) {
  if (!(prob >= 0.0 && prob <= 1.0)) throw InvalidArgument("weight_probability: prob outside [0, 1]");
  if (prob == 0.0) return 0.0;
  if (prob == 1.0) return 1.0;
  const double g = p.gamma_weight;
  if (g == 1.0) return prob;
  const double num = std::pow(prob, g);
  const double den = std::pow(num + std::pow(1.0 - prob, g), 1.0 / g);
  return std::clamp(num / den, 0.0, 1.0);
}

double perceived_sd(double true_sd, const ParameterVector& p) {
  if (!(true_sd >= 0.0)) throw InvalidArgument("perceived_sd: true_sd must be >= 0");
  if (p.kappa == 1.0) return true_sd;
  return true_sd / std::sqrt(p.kappa);
}

double forecast_return(double mean_return, double last_return, const ParameterVector& p) {
  if (p.theta == 0.0) return mean_return;
  return mean_return + p.theta * (last_return - mean_return);
}

double anchored_valuation(double anchor, double true_value, const ParameterVector& p) {
  if (p.a_adjust == 1.0) return true_value;
  if (p.a_adjust == 0.0) return anchor;
  const double v = anchor + p.a_adjust * (true_value - anchor);
  return std::clamp(v, std::min(anchor, true_value), std::max(anchor, true_value));
}

}  // namespace behavcal
