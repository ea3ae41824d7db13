#pragma once

// Behavioral parameters, human benchmark registry, investor profiles and the
// closed-form decision primitives every other module builds on.

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace behavcal {

enum class Bias {
  loss_aversion,
  disposition,
  overconfidence,
  herding,
  representativeness,
  probability_weighting,
  anchoring,
  extrapolation,
};

inline constexpr std::array<Bias, 8> kAllBiases = {
    Bias::loss_aversion,      Bias::disposition,           Bias::overconfidence,
    Bias::herding,            Bias::representativeness,    Bias::probability_weighting,
    Bias::anchoring,          Bias::extrapolation,
};

std::string_view to_string(Bias b);
Bias parse_bias(std::string_view name);

enum class ProfileKind {
  rational,
  loss_averse,
  overconfident,
  herding_prone,
  representativeness_biased,
  extrapolative,
};

inline constexpr std::array<ProfileKind, 6> kAllProfiles = {
    ProfileKind::rational,      ProfileKind::loss_averse,
    ProfileKind::overconfident, ProfileKind::herding_prone,
    ProfileKind::representativeness_biased, ProfileKind::extrapolative,
};

std::string_view to_string(ProfileKind k);
ProfileKind parse_profile_kind(std::string_view name);

// The profile whose prompt frame targets a given bias. Loss-averse carries
// loss aversion, the disposition effect and probability weighting;
// representativeness-biased carries narrative weighting and anchoring.
ProfileKind targeting_profile(Bias b);

// Full set of behavioral parameters carried by a respondent. Construct via
// `make` (validating) or `rational()`.
struct ParameterVector {
  double lambda = 1.0;        // loss aversion multiplier, >= 0
  double alpha_gain = 1.0;    // gain curvature, (0, 1]
  double beta_loss = 1.0;     // loss curvature, (0, 1]
  double gamma_weight = 1.0;  // probability-weighting curvature, [0.3, 1]
  double kappa = 1.0;         // precision inflation, > 0
  double theta = 0.0;         // extrapolation coefficient
  double w_herd = 0.0;        // crowd-following probability, [0, 1]
  double a_adjust = 1.0;      // anchor adjustment fraction, [0, 1]
  double tau_ratio = 1.0;     // narrative / fundamental weight, >= 0
  double gamma_risk = 2.0;    // CARA risk aversion for demand, > 0

  static ParameterVector rational() { return {}; }

  // Throws InvalidArgument if any field is non-finite or out of bounds.
  void validate() const;

  friend bool operator==(const ParameterVector&, const ParameterVector&) = default;
};

struct Profile {
  ProfileKind kind = ProfileKind::rational;
  double strength = 1.0;  // [0, 1]
  std::string template_id;

  static Profile make(ProfileKind kind, double strength);
};

struct Benchmark {
  Bias bias;
  double point;
  double lo;
  double hi;
  std::string unit;
  std::string source_note;
};

// The eight human benchmarks. Overconfidence is stored as miscalibration
// (nominal 0.80 coverage minus observed coverage).
class BenchmarkRegistry {
 public:
  static BenchmarkRegistry defaults();

  // One record per line: `bias=<name> point=<x> lo=<x> hi=<x> unit=<..> source="..."`.
  // Blank lines and lines starting with '#' are ignored.
  static BenchmarkRegistry parse(std::string_view text);
  static BenchmarkRegistry load(const std::filesystem::path& file);
  std::string serialize() const;
  void save(const std::filesystem::path& file) const;

  const Benchmark& at(Bias b) const;
  const std::vector<Benchmark>& entries() const { return entries_; }

  // Benchmark expressed in the unit the estimators report. Identical to
  // `at` except for overconfidence, which is mapped to coverage.
  Benchmark measured(Bias b) const;

 private:
  explicit BenchmarkRegistry(std::vector<Benchmark> e);
  std::vector<Benchmark> entries_;
};

inline constexpr double kNominalCoverage = 0.80;
inline constexpr double kGambleLoss = 100.0;

// Prospect-theory value: x^alpha for gains, -lambda (-x)^beta for losses.
double value(double x, const ParameterVector& p);

// Tversky-Kahneman weighting p^g / (p^g + (1-p)^g)^(1/g).
double weight_probability(double prob, const ParameterVector& p);

// Perceived volatility under precision inflation: sd / sqrt(kappa).
double perceived_sd(double true_sd, const ParameterVector& p);

// Extrapolative forecast: mean + theta (last - mean).
double forecast_return(double mean_return, double last_return, const ParameterVector& p);

// Partial adjustment from an anchor: anchor + a (true - anchor).
double anchored_valuation(double anchor, double true_value, const ParameterVector& p);

}  // namespace behavcal
