#pragma once

// Scenario sets for the eight bias experiments, prompt rendering, the
// structured response types, and the adversarial scenario catalog.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "behavcal/core.hpp"

namespace behavcal {

inline constexpr int kScenarioSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Payloads

struct GamblePayload {
  double gain = 100.0;
  double loss = kGambleLoss;
  double prob = 0.5;
  // Adversarial framing variant: the same gamble is offered twice, once as a
  // gamble and once against a certain amount; the answer is a pair.
  bool two_frames = false;
  double certain = 0.0;
};

struct Position {
  std::string label;
  double purchase_price = 0.0;
  double current_price = 0.0;
  std::string asset_class;  // empty, or e.g. "stock"/"bond" in adversarial variants

  bool winner() const { return current_price > purchase_price; }
  bool loser() const { return current_price < purchase_price; }
};

struct PortfolioPayload {
  std::vector<Position> positions;
  bool sell_exactly_one = false;
  std::string note;  // extra facts shown after the positions
};

struct IntervalPayload {
  std::string company;
  std::vector<double> history;  // quarterly earnings, millions
  double target_coverage = kNominalCoverage;
  // Hidden from the prompt: the conditional distribution of the next value
  // and the realized draw used for coverage scoring.
  double forecast_mean = 0.0;
  double forecast_sd = 0.0;
  std::optional<double> realized;
};

enum class Signal { A, B };

struct CascadePayload {
  Signal private_signal = Signal::A;
  double signal_accuracy = 0.7;
  std::vector<Signal> crowd_history;

  Signal majority() const;
  bool conflict() const { return majority() != private_signal; }
};

struct NarrativePayload {
  std::string company;
  double narrative_score = 0.0;    // [0, 4]
  double fundamental_score = 0.0;  // [0, 4]
};

// A lottery paying `payoff` with probability `prob`, zero otherwise.
struct Lottery {
  double payoff = 0.0;
  double prob = 1.0;
  double expected_value = 0.0;
};

struct SkewChoicePayload {
  std::vector<Lottery> options;  // labelled A, B, C, ... in order
  int high_skew = 0;             // index of the designated high-skew option
};

struct AnchorPayload {
  std::string asset;
  double anchor = 0.0;
  double true_value = 0.0;
};

struct ForecastPayload {
  std::string asset;
  std::vector<double> history;  // monthly returns in percent, oldest first
};

using Payload = std::variant<GamblePayload, PortfolioPayload, IntervalPayload, CascadePayload,
                             NarrativePayload, SkewChoicePayload, AnchorPayload, ForecastPayload>;

struct Scenario {
  std::string id;
  Bias bias = Bias::loss_aversion;
  Payload payload;
  // Free text used instead of the generated body (adversarial scenarios).
  std::string text;

  void validate() const;
};

// The payload alternative each bias experiment uses.
Bias payload_bias(const Payload& p);

// ---------------------------------------------------------------------------
// Responses

enum class AnswerShape { accept_reject, option, sell, interval, valuation, rating, forecast, frame_pair };
std::string_view to_string(AnswerShape s);
AnswerShape expected_shape(const Scenario& s);

struct BinaryChoice {
  std::string label;  // "ACCEPT", "REJECT" or an option letter
  friend bool operator==(const BinaryChoice&, const BinaryChoice&) = default;
};
struct SellChoice {
  std::vector<int> positions;  // zero-based, sorted, unique; empty = sell nothing
  friend bool operator==(const SellChoice&, const SellChoice&) = default;
};
struct IntervalAnswer {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const IntervalAnswer&, const IntervalAnswer&) = default;
};
struct Valuation {
  double price = 0.0;
  friend bool operator==(const Valuation&, const Valuation&) = default;
};
struct Rating {
  double value = 1.0;  // [1, 10]
  friend bool operator==(const Rating&, const Rating&) = default;
};
struct ForecastAnswer {
  double value = 0.0;  // percent
  friend bool operator==(const ForecastAnswer&, const ForecastAnswer&) = default;
};
struct FramePair {
  bool first_accept = false;
  bool second_accept = false;
  friend bool operator==(const FramePair&, const FramePair&) = default;
};

using Answer = std::variant<std::monostate, BinaryChoice, SellChoice, IntervalAnswer, Valuation,
                            Rating, ForecastAnswer, FramePair>;

enum class ParseStatus { ok, failed };

struct ParsedResponse {
  ParseStatus status = ParseStatus::failed;
  Answer answer;
  std::string raw;
  std::string error;  // reason when status == failed

  bool ok() const { return status == ParseStatus::ok; }
};

// ---------------------------------------------------------------------------
// Scenario construction

// Gain grid for the gamble experiment: round2(50 + i * 350 / (n - 1)).
std::vector<double> gamble_grid(std::size_t n);

// Deterministic per (bias, n, seed). Throws InvalidArgument when n == 0.
std::vector<Scenario> build_scenario_set(Bias bias, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Prompts

enum class Intensity { none, mild, standard, strong };
// s == 0 -> none; (0, 0.5) -> mild; [0.5, 0.85) -> standard; >= 0.85 -> strong.
Intensity intensity_for(double strength);
std::string_view to_string(Intensity i);

// Named plain-text templates with `{placeholder}` fields. The defaults are
// compiled in; `load` overrides any subset from a directory of `<name>.txt`.
class TemplateSet {
 public:
  static const TemplateSet& defaults();
  static TemplateSet load(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir) const;

  const std::string& at(const std::string& name) const;
  bool contains(const std::string& name) const { return templates_.count(name) != 0; }
  const std::map<std::string, std::string>& all() const { return templates_; }

  // Names: "frame.<profile>.<intensity>" (rational uses "frame.rational"),
  // "body.<bias>", "body.loss_aversion_frames", "format.<shape>".
  static std::string frame_name(const Profile& p);

 private:
  std::map<std::string, std::string> templates_;
};

// Replaces every `{key}` with vars[key]. Throws InvalidArgument on an
// unknown placeholder.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

std::string render_prompt(const Profile& profile, const Scenario& scenario,
                          const TemplateSet& templates = TemplateSet::defaults());

// ---------------------------------------------------------------------------
// Adversarial scenarios

enum class PredicateKind {
  sell_set_equals,          // sold set == indices
  sell_subset_of,           // sold set non-empty and within indices
  interval_width_at_least,  // hi - lo >= threshold
  choice_equals,            // option label == label
  choice_not_equals,        // option label != label
  rating_at_most,           // rating <= threshold
  valuation_at_most,        // price <= threshold
  forecast_below,           // forecast < threshold
  frames_consistent,        // both frames get the same decision
};
std::string_view to_string(PredicateKind k);
PredicateKind parse_predicate_kind(std::string_view s);

struct PassPredicate {
  PredicateKind kind = PredicateKind::choice_equals;
  std::vector<int> indices;
  double threshold = 0.0;
  std::string label;
  // Part of the published criterion that is not machine-checked.
  std::string unchecked_clause;
};

struct AdversarialScenario {
  Scenario base;
  PassPredicate predicate;
  std::string name;
};

enum class Verdict { pass, fail, unparsed };
std::string_view to_string(Verdict v);

// Unparsed responses, and responses of the wrong shape, never pass.
Verdict evaluate_pass(const AdversarialScenario& adv, const ParsedResponse& resp);

inline constexpr int kCatalogVersion = 1;

// The built-in catalog.
const std::vector<AdversarialScenario>& adversarial_catalog();

// Versioned JSON catalog files. `load_catalog` accepts files written by
// `save_catalog` and user-authored files of the same schema.
void save_catalog(const std::vector<AdversarialScenario>& catalog,
                  const std::filesystem::path& file);
std::vector<AdversarialScenario> load_catalog(const std::filesystem::path& file);

struct PassTally {
  int passed = 0;
  int failed = 0;
  int unparsed = 0;

  int total() const { return passed + failed + unparsed; }
  // Unparsed responses count against the rate.
  double rate() const { return total() == 0 ? 0.0 : static_cast<double>(passed) / total(); }
  bool meets(double threshold) const { return total() > 0 && rate() >= threshold; }
};

inline constexpr double kAdversarialPassThreshold = 0.70;

struct VerdictRecord {
  Bias bias;
  std::string backend;
  Verdict verdict;
};

// Pass tallies keyed by (bias, backend).
std::map<std::pair<Bias, std::string>, PassTally> aggregate_pass_rates(
    const std::vector<VerdictRecord>& verdicts);

// ---------------------------------------------------------------------------
// JSON-lines persistence of scenario sets.

std::string scenario_to_json(const Scenario& s);
Scenario scenario_from_json(std::string_view line);
void save_scenarios(const std::vector<Scenario>& set, const std::filesystem::path& file);
std::vector<Scenario> load_scenarios(const std::filesystem::path& file);

}  // namespace behavcal
