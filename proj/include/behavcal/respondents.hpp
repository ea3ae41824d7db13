#pragma once

// Respondents: the ground-truth synthetic decision maker, the response
// parser shared by every backend, and decision-record persistence.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "behavcal/core.hpp"
#include "behavcal/experiments.hpp"

namespace behavcal {

// Constants of the synthetic decision models. Values marked "solved" are the
// frozen output of the solvers below (unit tests recompute them).
namespace calibration {

// Gamble: logistic temperature = noise * share * |w(1-p) v(-loss)|.
inline constexpr double kGambleTemperatureShare = 0.10;
// Equal winner/loser sell propensity of an unbiased holder.
inline constexpr double kRationalSellProb = 0.40;
// Additive noise standard deviations at choice_noise = 1.
inline constexpr double kAnchorNoiseSd = 5.0;     // dollars
inline constexpr double kForecastNoiseSd = 1.0;   // percentage points
inline constexpr double kRatingNoiseSd = 0.25;    // rating points
// Anchor and appraisal are drawn independently from U(50, 150).
inline constexpr double kAnchorLo = 50.0;
inline constexpr double kAnchorHi = 150.0;
// Skew choice: probabilities of the four equal-EV lotteries.
inline constexpr std::array<double, 4> kSkewProbs = {0.10, 0.50, 0.80, 1.00};
// Softmax temperature scale, solved so gamma_w = 0.65 picks the high-skew
// option 35% of the time.
inline constexpr double kSkewTemperature = 1.8617529599745155;
inline constexpr double kSkewReferenceGamma = 0.65;
inline constexpr double kSkewReferenceRate = 0.35;

// Strength-1 targets of the bias profiles.
inline constexpr double kTargetLambda = 3.00;
inline constexpr double kTargetHerd = 0.90;
inline constexpr double kTargetTheta = 0.88;
inline constexpr double kTargetTauRatio = 1.08;
inline constexpr double kTargetCoverage = 0.30;
inline constexpr double kTargetAnchorRho = 0.67;
inline constexpr double kTargetDispositionRatio = 0.21;
inline constexpr double kTargetSkewRate = 0.30;
// Solved: kappa_for_coverage(0.30).
inline constexpr double kTargetKappa = 11.061856400791775;
// Solved: adjust_for_anchor_rho(0.67, 1).
inline constexpr double kTargetAdjust = 0.51209795805219904;
// Solved: gamma_for_skew_rate(0.30, 1).
inline constexpr double kTargetGammaWeight = 0.80550609050052235;
inline constexpr double kTargetSellWinner = kTargetDispositionRatio * kRationalSellProb;

}  // namespace calibration

struct GroundTruth {
  ParameterVector params;
  double sell_prob_winner = calibration::kRationalSellProb;
  double sell_prob_loser = calibration::kRationalSellProb;
  double choice_noise = 1.0;  // 1 = default noise, 0 = deterministic

  void validate() const;
};

// Expected interval coverage for precision inflation kappa, and its inverse.
double coverage_for_kappa(double kappa);
double kappa_for_coverage(double coverage);

// Population anchor-valuation correlation under the anchor design, and the
// adjustment fraction that produces a given correlation.
double anchor_rho(double a_adjust, double choice_noise);
double adjust_for_anchor_rho(double rho, double choice_noise);

// Probability of picking the high-skew lottery in the skew-choice design.
// With alpha = 1 the rate does not depend on the expected value.
double skew_choice_rate(const ParameterVector& p, double choice_noise,
                        double temperature = calibration::kSkewTemperature,
                        double expected_value = 100.0);
double skew_temperature_for(double gamma_weight, double rate);
double gamma_for_skew_rate(double rate, double choice_noise);

// Linear interpolation in strength between the rational preset and the
// strength-1 targets of the profile's biases.
GroundTruth profile_to_groundtruth(const Profile& profile);

// The value each estimator should report for a ground truth, as a population
// quantity (expected rate, population correlation, ...). For loss aversion
// this is lambda; for disposition the sell-probability ratio.
double expected_measure(Bias bias, const GroundTruth& gt);

// ---------------------------------------------------------------------------
// Parsing

// Extracts the last `ANSWER:` line that conforms to `shape`. Never throws;
// garbage yields status failed with a reason.
ParsedResponse parse_response(std::string_view raw, AnswerShape shape);

// ---------------------------------------------------------------------------
// Records

enum class Backend { synthetic, llm };
std::string_view to_string(Backend b);
Backend parse_backend(std::string_view s);

struct DecisionRecord {
  Scenario scenario;
  ProfileKind profile = ProfileKind::rational;
  double strength = 0.0;
  std::string respondent_id;
  Backend backend = Backend::synthetic;
  std::string model_id;
  std::string raw_text;
  ParsedResponse parsed;
  std::string timestamp;  // empty for synthetic records
  std::string seed_or_request_id;
  int retries = 0;
  std::string error;  // transport error kind for failed LLM calls

  // Unique within a run: scenario, profile, strength and respondent.
  std::string key() const;
};

// Synthetic answer text ("ANSWER: ..."), deterministic per (gt, scenario, seed).
std::string synthetic_answer(const GroundTruth& gt, const Scenario& scenario, std::uint64_t seed);

// Draws an answer and parses it back. Profile fields are left for the caller.
DecisionRecord respond_synthetic(const GroundTruth& gt, const Scenario& scenario, std::uint64_t seed);

std::string record_to_json(const DecisionRecord& r);
DecisionRecord record_from_json(std::string_view line);
void save_records(const std::vector<DecisionRecord>& records, const std::filesystem::path& file);
void append_records(const std::vector<DecisionRecord>& records, const std::filesystem::path& file);
// Skips a trailing partial line (interrupted write).
std::vector<DecisionRecord> load_records(const std::filesystem::path& file);

}  // namespace behavcal
