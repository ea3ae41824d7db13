#include "behavcal/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "behavcal/error.hpp"
#include "behavcal/format.hpp"
#include "behavcal/parallel.hpp"
#include "behavcal/rng.hpp"

namespace behavcal {

void RunPlan::validate() const {
  if (biases.empty()) throw InvalidArgument("run plan: no biases");
  if (profiles.empty()) throw InvalidArgument("run plan: no profiles");
  if (strengths.empty()) throw InvalidArgument("run plan: no strengths");
  for (double s : strengths)
    if (!(s >= 0.0 && s <= 1.0)) throw InvalidArgument("run plan: strengths must lie in [0, 1]");
  if (agents == 0) throw InvalidArgument("run plan: agents must be >= 1");
  if (!(choice_noise >= 0.0)) throw InvalidArgument("run plan: choice noise must be >= 0");
  if (repeats < 1) throw InvalidArgument("run plan: repeats must be >= 1");
  if (model_id.empty()) throw InvalidArgument("run plan: model_id must not be empty");
}

std::size_t RunPlan::record_count() const {
  return biases.size() * profiles.size() * strengths.size() * static_cast<std::size_t>(repeats) * agents;
}

std::vector<Cell> plan_cells(const RunPlan& plan) {
  std::vector<Cell> cells;
  for (Bias b : plan.biases)
    for (ProfileKind p : plan.profiles)
      for (double s : plan.strengths)
        for (int r = 0; r < plan.repeats; ++r) cells.push_back({b, p, s, r});
  return cells;
}

std::vector<Scenario> plan_scenarios(const RunPlan& plan, Bias bias) {
  return build_scenario_set(bias, plan.agents, derive_seed(plan.seed, "scenarios"));
}

namespace {

std::string respondent_id(const RunPlan& plan, const Cell& c, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%03zu", i);
  std::string id = std::string(to_string(c.profile)) + "-s" + format_double(c.strength) + "-" + buf;
  if (plan.repeats > 1) id += "-r" + std::to_string(c.repeat + 1);
  return id;
}

std::string cell_model(const RunPlan& plan, const Cell& c) {
  return plan.repeats > 1 ? plan.model_id + "#" + std::to_string(c.repeat + 1) : plan.model_id;
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

struct Job {
  const Cell* cell;
  const Scenario* scenario;
  std::size_t index;
};

std::vector<Job> expand(const RunPlan& plan, const std::vector<Cell>& cells,
                        const std::map<Bias, std::vector<Scenario>>& sets) {
  std::vector<Job> jobs;
  jobs.reserve(plan.record_count());
  for (const auto& c : cells) {
    const auto& set = sets.at(c.bias);
    for (std::size_t i = 0; i < set.size(); ++i) jobs.push_back({&c, &set[i], i});
  }
  return jobs;
}

DecisionRecord blank_record(const RunPlan& plan, const Job& j, Backend backend) {
  DecisionRecord r;
  r.scenario = *j.scenario;
  r.profile = j.cell->profile;
  r.strength = j.cell->strength;
  r.respondent_id = respondent_id(plan, *j.cell, j.index);
  r.backend = backend;
  r.model_id = cell_model(plan, *j.cell);
  return r;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::vector<DecisionRecord> run_synthetic(const RunPlan& plan, unsigned jobs) {
  plan.validate();
  const auto cells = plan_cells(plan);
  std::map<Bias, std::vector<Scenario>> sets;
  for (Bias b : plan.biases) sets.emplace(b, plan_scenarios(plan, b));
  const auto work = expand(plan, cells, sets);
  std::vector<DecisionRecord> out(work.size());
  parallel_for(work.size(), jobs, [&](std::size_t k) {
    const auto& j = work[k];
    auto gt = profile_to_groundtruth(Profile::make(j.cell->profile, j.cell->strength));
    gt.choice_noise = plan.choice_noise;
    auto rec = blank_record(plan, j, Backend::synthetic);
    const auto seed = derive_seed(plan.seed, "respond", fnv1a64(rec.key() + "|" + rec.model_id));
    const auto answered = respond_synthetic(gt, rec.scenario, seed);
    rec.raw_text = answered.raw_text;
    rec.parsed = answered.parsed;
    rec.seed_or_request_id = hex64(seed);
    out[k] = std::move(rec);
  });
  return out;
}

LlmRunStats run_llm(const RunPlan& plan, const LlmEndpointConfig& cfg, std::shared_ptr<Transport> transport,
                    const std::filesystem::path& dir, const Progress& progress) {
  plan.validate();
  cfg.validate();
  std::filesystem::create_directories(dir);
  const auto records_file = dir / "records.jsonl";
  const auto log_file = dir / "requests.jsonl";

  std::set<std::string> done;
  if (std::filesystem::exists(records_file))
    for (const auto& r : load_records(records_file)) done.insert(r.key());

  RunPlan p = plan;
  p.model_id = cfg.model_id;
  const auto cells = plan_cells(p);
  std::map<Bias, std::vector<Scenario>> sets;
  for (Bias b : p.biases) sets.emplace(b, plan_scenarios(p, b));
  const auto work = expand(p, cells, sets);

  std::vector<std::pair<DecisionRecord, std::string>> pending;  // record, prompt
  LlmRunStats stats;
  for (const auto& j : work) {
    auto rec = blank_record(p, j, Backend::llm);
    if (done.count(rec.key())) {
      ++stats.skipped;
      continue;
    }
    auto prompt = render_prompt(Profile::make(j.cell->profile, j.cell->strength), rec.scenario, p.templates);
    pending.emplace_back(std::move(rec), std::move(prompt));
  }

  LlmClient client(cfg, std::move(transport));
  const std::size_t batch = static_cast<std::size_t>(cfg.max_in_flight);
  for (std::size_t start = 0; start < pending.size(); start += batch) {
    const std::size_t end = std::min(pending.size(), start + batch);
    std::vector<LlmResult> results(end - start);
    std::vector<std::string> stamps(end - start);
    parallel_for(end - start, static_cast<unsigned>(batch), [&](std::size_t i) {
      results[i] = client.complete(pending[start + i].second);
      stamps[i] = utc_now();
    });

    // Request log first, in plan order.
    {
      std::ofstream log(log_file, std::ios::app | std::ios::binary);
      if (!log) throw IoError("cannot append to " + log_file.string());
      for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& res = results[i];
        nlohmann::json j = {{"key", pending[start + i].first.key()},
                            {"model", cfg.model_id},
                            {"prompt", pending[start + i].second},
                            {"status", res.ok ? "ok" : "error"},
                            {"response", res.text},
                            {"retries", res.retries},
                            {"http_status", res.http_status},
                            {"error", std::string(to_string(res.error))},
                            {"message", res.message},
                            {"timestamp", stamps[i]}};
        log << j.dump() << '\n';
      }
      log.flush();
    }

    std::vector<DecisionRecord> out;
    for (std::size_t i = 0; i < results.size(); ++i) {
      auto rec = std::move(pending[start + i].first);
      const auto& res = results[i];
      rec.timestamp = stamps[i];
      rec.seed_or_request_id = rec.key();
      rec.retries = res.retries;
      ++stats.requested;
      if (res.ok) {
        rec.raw_text = res.text;
        rec.parsed = parse_response(res.text, expected_shape(rec.scenario));
        if (!rec.parsed.ok()) ++stats.unparsed;
      } else {
        rec.error = std::string(to_string(res.error));
        rec.parsed.status = ParseStatus::failed;
        rec.parsed.error = "request failed: " + res.message;
        ++stats.failed;
      }
      out.push_back(std::move(rec));
    }
    append_records(out, records_file);
    if (progress) progress(stats.skipped + end, work.size());
  }
  return stats;
}

std::vector<DecisionRecord> simulate_agents(const std::vector<Agent>& agents, Bias bias, std::size_t trials,
                                            std::uint64_t seed, unsigned jobs) {
  if (trials == 0) throw InvalidArgument("simulate_agents: trials must be >= 1");
  for (const auto& a : agents) a.gt.validate();
  const auto set = build_scenario_set(bias, trials, derive_seed(seed, "agent-scenarios"));
  std::vector<DecisionRecord> out(agents.size() * trials);
  parallel_for(out.size(), jobs, [&](std::size_t k) {
    const auto& a = agents[k / trials];
    const auto& sc = set[k % trials];
    const auto s = derive_seed(seed, "agent-respond", fnv1a64(a.id + "|" + sc.id));
    auto rec = respond_synthetic(a.gt, sc, s);
    rec.respondent_id = a.id;
    rec.model_id = "synthetic";
    rec.seed_or_request_id = hex64(s);
    out[k] = std::move(rec);
  });
  return out;
}

void write_records_dir(const std::vector<DecisionRecord>& records, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::map<Bias, std::vector<DecisionRecord>> by;
  for (const auto& r : records) by[r.scenario.bias].push_back(r);
  for (const auto& [b, rs] : by) save_records(rs, dir / (std::string(to_string(b)) + ".jsonl"));
}

std::vector<DecisionRecord> load_records_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".jsonl" && e.path().filename() != "requests.jsonl")
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<DecisionRecord> out;
  for (const auto& f : files) {
    auto rs = load_records(f);
    out.insert(out.end(), std::make_move_iterator(rs.begin()), std::make_move_iterator(rs.end()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifests

std::string content_hash(std::string_view bytes) { return hex64(fnv1a64(bytes)); }

std::string file_hash(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return content_hash(ss.str());
}

std::string RunManifest::render() const {
  std::ostringstream os;
  os << "manifest-version: 1\n";
  os << "command: " << command << "\n";
  os << "seed: " << seed << "\n";
  os << "config-hash: " << config_hash() << "\n";
  os << "config: " << config_json << "\n";
  for (const auto& [p, h] : inputs) os << "input: " << h << " " << p << "\n";
  for (const auto& [p, h] : outputs) os << "output: " << h << " " << p << "\n";
  return os.str();
}

RunManifest RunManifest::parse(std::string_view text) {
  RunManifest m;
  std::istringstream in{std::string(text)};
  std::string line;
  bool versioned = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto colon = line.find(": ");
    if (colon == std::string::npos) throw IoError("manifest: malformed line '" + line + "'");
    const auto key = line.substr(0, colon);
    const auto val = line.substr(colon + 2);
    if (key == "manifest-version") {
      if (val != "1") throw IoError("manifest: unsupported version " + val);
      versioned = true;
    } else if (key == "command") {
      m.command = val;
    } else if (key == "seed") {
      m.seed = static_cast<std::uint64_t>(std::stoull(val));
    } else if (key == "config") {
      m.config_json = val;
    } else if (key == "input" || key == "output") {
      const auto sp = val.find(' ');
      if (sp == std::string::npos) throw IoError("manifest: malformed " + key + " line");
      (key == "input" ? m.inputs : m.outputs).emplace_back(val.substr(sp + 1), val.substr(0, sp));
    }
  }
  if (!versioned) throw IoError("manifest: missing manifest-version");
  return m;
}

void write_manifest(RunManifest manifest, const std::filesystem::path& out) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(out))
    if (e.is_regular_file() && e.path().filename() != "manifest.txt") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  manifest.outputs.clear();
  for (const auto& f : files)
    manifest.outputs.emplace_back(std::filesystem::relative(f, out).generic_string(), file_hash(f));
  std::ofstream o(out / "manifest.txt", std::ios::binary);
  if (!o) throw IoError("cannot write manifest in " + out.string());
  o << manifest.render();
}

}  // namespace behavcal
