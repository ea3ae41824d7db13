#pragma once

// Recovery of the eight behavioral measures from decision records.
//
// Every estimator ignores records of other experiments and records whose
// response failed to parse (the latter are counted in extras["unparsed"]).
// Errors: InsufficientData when the design cannot identify the quantity,
// DegenerateData for zero-variance or collinear inputs.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "behavcal/core.hpp"
#include "behavcal/respondents.hpp"

namespace behavcal {

struct GroupKeys {
  std::string profile;
  double strength = 0.0;
  std::string backend;
  std::string model_id;

  friend auto operator<=>(const GroupKeys&, const GroupKeys&) = default;
};

struct EstimateResult {
  Bias bias = Bias::loss_aversion;
  double point = 0.0;
  double std_error = 0.0;  // NaN when unavailable (see flags)
  std::size_t n = 0;
  GroupKeys keys;
  std::map<std::string, double> extras;
  std::vector<std::string> flags;

  bool has_flag(std::string_view f) const;
};

// Logistic acceptance-vs-gain fit; lambda = X* / loss at the 50% crossing.
// Complete separation falls back to the bracket midpoint, flagged
// "separation_midpoint".
EstimateResult estimate_lambda(std::span<const DecisionRecord> records);
// Winner-sell rate over loser-sell rate. Zero loser sells yield an infinite
// point flagged "infinite_ratio".
EstimateResult estimate_disposition(std::span<const DecisionRecord> records);
// Interval coverage; extras["miscalibration"] = nominal - coverage.
EstimateResult estimate_coverage(std::span<const DecisionRecord> records);
// Crowd-following rate on conflict trials.
EstimateResult estimate_herding(std::span<const DecisionRecord> records);
// High-skew choice rate.
EstimateResult estimate_skew_choice(std::span<const DecisionRecord> records);
// Anchor-valuation Pearson correlation, Fisher-transform standard error.
EstimateResult estimate_anchoring(std::span<const DecisionRecord> records);
// Slope of (forecast - history mean) on (last return - history mean);
// extras["correlation"] = corr(forecast, last return).
EstimateResult estimate_extrapolation(std::span<const DecisionRecord> records);
// Ratio of narrative to fundamental rating coefficients; flagged
// "unstable_ratio" when the fundamental coefficient is within 2 SE of zero.
EstimateResult estimate_representativeness(std::span<const DecisionRecord> records);

EstimateResult estimate(Bias bias, std::span<const DecisionRecord> records);

// Groups by (bias, profile, strength, backend, model) and estimates each
// cell, in parallel. Cells whose estimator throws are returned with a NaN
// point and an "error:" flag. Output order is sorted by key.
std::vector<EstimateResult> estimate_cells(std::span<const DecisionRecord> records, unsigned jobs = 1);

// Per-respondent estimates of one bias (agent-level analysis).
std::map<std::string, EstimateResult> estimate_by_respondent(Bias bias,
                                                             std::span<const DecisionRecord> records);

// CSV: bias,profile,strength,backend,model_id,point,std_error,n,flags,extras
void write_estimates_csv(const std::vector<EstimateResult>& rows, const std::filesystem::path& file);
std::vector<EstimateResult> read_estimates_csv(const std::filesystem::path& file);

}  // namespace behavcal
