#pragma once

// Calibration validity checks (monotonicity, range coverage, stability,
// cross-measure coherence), tier classification, hypothesis tests, Holm
// correction and Monte Carlo power.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "behavcal/core.hpp"
#include "behavcal/estimators.hpp"

namespace behavcal {

// +1 when the measure grows with profile strength, -1 when it shrinks
// (coverage and the disposition ratio).
int expected_direction(Bias b);

// ---------------------------------------------------------------------------
// C1

struct MonotoneResult {
  bool monotone = false;       // every step within slack in the expected direction
  bool weak = false;           // monotone but the trend test is not significant
  double trend_slope = 0.0;    // in the expected direction, per unit strength
  double trend_z = 0.0;
  double trend_p = 1.0;        // one-sided
  std::vector<double> steps;   // signed, oriented by `direction`
};

// Points ordered by strength; a step may go the wrong way by at most
// 2 sqrt(se_i^2 + se_j^2). Trend: weighted least squares of point on
// strength (weights 1/se^2; unweighted when any se is zero or missing).
// Throws InvalidArgument for fewer than 3 levels.
MonotoneResult check_c1_monotonicity(std::span<const EstimateResult> by_strength, int direction = 1,
                                     double alpha = 0.05);

// ---------------------------------------------------------------------------
// C2

// benchmark in [lo - delta, hi + delta]. Throws InvalidArgument if lo > hi.
bool check_c2_range(double lo, double hi, double benchmark, double delta = 0.0);

// ---------------------------------------------------------------------------
// C3

struct StabilityResult {
  bool stable = false;
  double cv = 0.0;          // sd / |mean|; NaN on the near-zero path
  double dispersion = 0.0;  // sd
  bool near_zero_mean = false;
};

inline constexpr double kStabilityCv = 0.15;

// Near-zero means (|mean| < zero_tol) are judged by sd < abs_threshold.
// Throws InvalidArgument for fewer than 5 repeats.
StabilityResult check_c3_stability(std::span<const double> repeats, double cv_threshold = kStabilityCv,
                                   double zero_tol = 1e-3, double abs_threshold = 0.05);

// ---------------------------------------------------------------------------
// C4

enum class PredictedSign { positive, negative, non_positive, zero };
std::string_view to_string(PredictedSign s);

struct CoherencePair {
  Bias a;
  Bias b;  // for the anchoring row, b is ignored and every other measure is used
  PredictedSign sign;
  bool against_all = false;
};

// The six predicted relationships.
const std::vector<CoherencePair>& coherence_pairs();

struct CoherenceRow {
  std::string label;
  PredictedSign sign = PredictedSign::zero;
  double r = 0.0;
  double p = 1.0;
  std::size_t n = 0;
  bool evaluated = false;
  bool pass = false;
};

struct CoherenceResult {
  bool pass = false;  // every evaluated row agrees and at least one was evaluated
  std::vector<CoherenceRow> rows;
};

// Agent-level estimates keyed by bias then respondent id, in estimator
// units. Coverage is flipped to nominal - coverage before correlating so
// that larger always means more biased. Rows with fewer than `min_pairs`
// agents present in both measures are skipped. Throws InsufficientData when no row can be
// evaluated.
CoherenceResult check_c4_coherence(const std::map<Bias, std::map<std::string, double>>& agent_measures,
                                   double alpha = 0.05, std::size_t min_pairs = 10);

// ---------------------------------------------------------------------------
// Tiers

enum class Tier { strong, moderate, weak, directional, fail };
std::string_view to_string(Tier t);
Tier parse_tier(std::string_view s);

// Measured values at zero strength (baseline) and full strength.
struct CalibratedRange {
  double baseline = 0.0;
  double calibrated = 0.0;
  double lo() const { return std::min(baseline, calibrated); }
  double hi() const { return std::max(baseline, calibrated); }
};

struct TierResult {
  Tier tier = Tier::fail;
  double gap = 0.0;  // |nearest endpoint - benchmark| / |benchmark|; 0 inside
  bool direction_ok = false;
};

// Strong if the benchmark lies in the range. Otherwise with the gap e:
// Moderate if e < 0.5 and the calibrated shift moves toward the benchmark,
// Weak if only the direction matches, Directional if the shift is opposite
// but at least half the benchmark-baseline distance, Fail otherwise.
TierResult classify_tier(const CalibratedRange& range, double benchmark);

// ---------------------------------------------------------------------------
// Reports

struct ValidationReport {
  Bias bias = Bias::loss_aversion;
  bool c1_monotone = false;
  bool c2_range_covered = false;
  std::optional<bool> c3_stable;    // needs repeated elicitations
  std::optional<bool> c4_coherent;  // needs agent-level data
  Tier tier = Tier::fail;
  std::optional<Tier> reported_tier;  // externally reported tier, if supplied
  bool tier_disagrees = false;
  std::map<std::string, double> details;
  std::vector<std::string> notes;
};

// One reference row: a calibrated range, a benchmark and optionally a tier
// reported elsewhere for comparison. CSV columns:
// bias,baseline,calibrated,benchmark,reported_tier
struct RangeRow {
  Bias bias;
  CalibratedRange range;
  double benchmark = 0.0;
  std::optional<Tier> reported;
};
std::vector<RangeRow> read_range_rows(const std::filesystem::path& file);

// Tier reports for fixed ranges (C2 with delta, tier, disagreement flag).
std::vector<ValidationReport> validate_ranges(const std::vector<RangeRow>& rows, double delta = 0.0);

// Full validation from an estimates table: ranges from the strength-0 and
// strongest cells of the targeting profile (the rational profile supplies
// the baseline when the targeting profile has no zero-strength cell), C1
// over the strength grid. Repeated elicitations are cells whose model ids
// differ only by a "#<k>" suffix; they are averaged for C1/C2 and give C3
// (CV of the strongest cell) when at least 5 exist. C4 is left unset.
std::vector<ValidationReport> validate_estimates(const std::vector<EstimateResult>& estimates,
                                                 const BenchmarkRegistry& benchmarks, double delta = 0.0);

std::string report_to_json(const std::vector<ValidationReport>& reports);
std::string report_table(const std::vector<ValidationReport>& reports);

// ---------------------------------------------------------------------------
// Multiple testing and two-sample tests

struct HolmResult {
  std::vector<bool> reject;
  std::vector<double> adjusted;
};
// Throws InvalidArgument for p-values outside [0, 1].
HolmResult holm_correct(std::span<const double> p, double alpha = 0.05);

struct TwoSampleResult {
  double mean_diff = 0.0;  // mean(a) - mean(b)
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  double cohens_d = 0.0;
  std::optional<double> cluster_se;  // bootstrap SE of the mean difference
  std::optional<double> cluster_p;
};

inline constexpr int kBootstrapResamples = 2000;

// Welch t test; when cluster keys are given (one per observation), adds a
// cluster bootstrap of the mean difference resampling clusters within
// each group. Throws InsufficientData for fewer than 2 observations (or 2
// clusters) per group and DegenerateData when both groups have zero
// variance and equal means.
TwoSampleResult two_sample_test(std::span<const double> a, std::span<const double> b,
                                const std::vector<std::string>* clusters_a = nullptr,
                                const std::vector<std::string>* clusters_b = nullptr,
                                std::uint64_t seed = 1);

// ---------------------------------------------------------------------------
// Power

enum class PowerDesign { disposition_paired, proportion_vs_null, coverage_clustered };
std::string_view to_string(PowerDesign d);
PowerDesign parse_power_design(std::string_view s);

struct PowerSpec {
  PowerDesign design = PowerDesign::disposition_paired;
  std::size_t n = 600;            // agents or observations
  double effect_null = 1.0;
  double effect_alt = 1.6;
  double within_corr = 0.3;
  double alpha = 0.05;
  std::size_t reps = 10000;
  std::size_t clusters = 100;      // coverage design
  std::size_t cluster_size = 20;   // coverage design
  double base_rate = 0.098;        // disposition: loser-sell propensity
  std::size_t opportunities = 1;   // disposition: winner and loser decisions per agent
  double cluster_sd = 0.5;         // coverage: probit random-intercept sd

  void validate() const;
  static PowerSpec disposition();
  static PowerSpec herding();
  static PowerSpec overconfidence();
};

struct PowerResult {
  double power = 0.0;
  double mc_se = 0.0;
  std::size_t rejections = 0;
  std::size_t reps = 0;
};

// Rep r uses derive_seed(seed, "power", r); independent of `jobs`.
PowerResult power_mc(const PowerSpec& spec, std::uint64_t seed, unsigned jobs = 1);

// Exact two-sided binomial test p-value (sum of outcomes no more likely
// than the observed one).
double binomial_two_sided(std::size_t k, std::size_t n, double p0);

}  // namespace behavcal
