#pragma once

// Experiment runs, agent-level simulation, record directories and run
// manifests. Shared by the command-line tool, the tests and the Python
// module.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "behavcal/core.hpp"
#include "behavcal/experiments.hpp"
#include "behavcal/llm.hpp"
#include "behavcal/respondents.hpp"

namespace behavcal {

struct RunPlan {
  std::vector<Bias> biases{kAllBiases.begin(), kAllBiases.end()};
  std::vector<ProfileKind> profiles{kAllProfiles.begin(), kAllProfiles.end()};
  std::vector<double> strengths{1.0};
  std::size_t agents = 100;  // respondents per (profile, strength) cell, one scenario each
  std::uint64_t seed = 1;
  double choice_noise = 1.0;
  int repeats = 1;  // > 1 labels model ids "<model>#<k>" for stability checks
  std::string model_id = "synthetic";
  TemplateSet templates = TemplateSet::defaults();

  void validate() const;
  std::size_t record_count() const;
};

// The cell grid in execution order: bias, profile, strength, repeat.
struct Cell {
  Bias bias;
  ProfileKind profile;
  double strength;
  int repeat;
};
std::vector<Cell> plan_cells(const RunPlan& plan);

// Scenario set shared by every cell of a bias:
// build_scenario_set(bias, agents, derive_seed(seed, "scenarios")).
std::vector<Scenario> plan_scenarios(const RunPlan& plan, Bias bias);

// Full factorial with the synthetic respondent. Record order follows
// plan_cells then agent index and never depends on `jobs`.
std::vector<DecisionRecord> run_synthetic(const RunPlan& plan, unsigned jobs = 1);

struct LlmRunStats {
  std::size_t skipped = 0;   // already present in the records file
  std::size_t requested = 0;
  std::size_t failed = 0;    // transport failures (recorded with error status)
  std::size_t unparsed = 0;
};

using Progress = std::function<void(std::size_t done, std::size_t total)>;

// Runs the plan against an endpoint, appending to `<dir>/records.jsonl`.
// Every request/response pair is appended to `<dir>/requests.jsonl` before
// the response is parsed. Records whose key is already present are skipped,
// so an interrupted run resumes without duplicates. Requests go out in
// batches of cfg.max_in_flight; both logs are written in plan order.
LlmRunStats run_llm(const RunPlan& plan, const LlmEndpointConfig& cfg, std::shared_ptr<Transport> transport,
                    const std::filesystem::path& dir, const Progress& progress = {});

// Each agent answers the same `trials` scenarios of `bias`
// (build_scenario_set(bias, trials, derive_seed(seed, "agent-scenarios"))).
struct Agent {
  std::string id;
  GroundTruth gt;
};
std::vector<DecisionRecord> simulate_agents(const std::vector<Agent>& agents, Bias bias, std::size_t trials,
                                            std::uint64_t seed, unsigned jobs = 1);

// Records grouped by bias into `<dir>/<bias>.jsonl`.
void write_records_dir(const std::vector<DecisionRecord>& records, const std::filesystem::path& dir);
// All `*.jsonl` files of a directory in name order (request logs excluded).
std::vector<DecisionRecord> load_records_dir(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Manifests

// 16 hex digits of FNV-1a over the bytes.
std::string content_hash(std::string_view bytes);
std::string file_hash(const std::filesystem::path& file);

struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  std::string config_json;  // canonical (sorted keys, compact)
  std::vector<std::pair<std::string, std::string>> inputs;   // path, hash
  std::vector<std::pair<std::string, std::string>> outputs;  // path relative to the out dir, hash

  std::string config_hash() const { return content_hash(config_json); }
  // Plain text, one `key: value` per line. Deterministic: no clock data.
  std::string render() const;
  static RunManifest parse(std::string_view text);
};

// Hashes every regular file under `out` (except the manifest itself) into
// `outputs` and writes `<out>/manifest.txt`.
void write_manifest(RunManifest manifest, const std::filesystem::path& out);

}  // namespace behavcal
