#include <set>

#include "doctest.h"
#include "test_support.hpp"

#include "behavcal/config.hpp"
#include "behavcal/error.hpp"
#include "behavcal/pipeline.hpp"

using namespace behavcal;

TEST_CASE("run plan sizes") {
  RunPlan plan;
  CHECK(plan.record_count() == 4800);
  CHECK(run_synthetic(plan).size() == 4800);

  plan.strengths = {0.0, 0.33, 0.67, 1.0};
  std::map<std::string, int> per_profile;
  for (const auto& c : plan_cells(plan))
    if (c.bias == Bias::herding) ++per_profile[std::string(to_string(c.profile))];
  for (const auto& [k, n] : per_profile) CHECK(n == 4);

  plan.agents = 0;
  CHECK_THROWS_AS(plan.validate(), InvalidArgument);
}

TEST_CASE("synthetic runs are independent of jobs") {
  RunPlan plan;
  plan.agents = 20;
  plan.strengths = {0.0, 0.5, 1.0};
  plan.repeats = 2;
  const auto a = run_synthetic(plan, 1);
  const auto b = run_synthetic(plan, 4);
  REQUIRE(a.size() == b.size());
  std::set<std::string> keys;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(record_to_json(a[i]) == record_to_json(b[i]));
    keys.insert(a[i].key() + "|" + a[i].model_id);
  }
  CHECK(keys.size() == a.size());
}

TEST_CASE("record directories") {
  const auto dir = testing::temp_dir("recdir");
  RunPlan plan;
  plan.agents = 4;
  const auto recs = run_synthetic(plan);
  write_records_dir(recs, dir);
  CHECK(std::filesystem::exists(dir / "herding.jsonl"));
  std::ofstream(dir / "requests.jsonl") << "{}\n";
  CHECK(load_records_dir(dir).size() == recs.size());
}

TEST_CASE("manifests") {
  const auto dir = testing::temp_dir("manifest");
  std::ofstream(dir / "a.txt") << "alpha";
  std::filesystem::create_directories(dir / "sub");
  std::ofstream(dir / "sub" / "b.txt") << "beta";
  RunManifest m;
  m.command = "run";
  m.seed = 42;
  m.config_json = R"({"seed":42})";
  m.inputs = {{"in.csv", content_hash("x")}};
  write_manifest(m, dir);
  const auto text = testing::read_file(dir / "manifest.txt");
  const auto back = RunManifest::parse(text);
  CHECK(back.command == "run");
  CHECK(back.seed == 42);
  CHECK(back.config_json == m.config_json);
  REQUIRE(back.outputs.size() == 2);
  CHECK(back.outputs[0].first == "a.txt");
  CHECK(back.outputs[0].second == content_hash("alpha"));
  CHECK(back.outputs[1].first == "sub/b.txt");
  CHECK(back.render() == text);
  CHECK(content_hash("alpha").size() == 16);
}

TEST_CASE("config parsing") {
  const auto d = AppConfig{};
  CHECK(d.gen_data.price.months == 24);
  const auto text = d.to_json_text();
  CHECK(AppConfig::from_json_text(text).to_json_text() == text);

  const auto c = AppConfig::from_json_text(R"({"seed": 7, "run": {"agents": 12, "strengths": [0, 0.5, 1]},
      "abm": {"mode": "price", "theta": 0.6, "news": {"prob": 0.2}}})");
  CHECK(c.seed == 7);
  CHECK(c.run.agents == 12);
  CHECK(c.run.strengths.size() == 3);
  CHECK(c.abm.mode == ForecastMode::price);
  REQUIRE(c.abm.news.has_value());
  CHECK(c.abm.news->prob == 0.2);

  auto f = c;
  f.finalize();
  CHECK(f.run.seed == 7);
  CHECK(f.abm.seed == 7);

  CHECK_THROWS_AS(AppConfig::from_json_text(R"({"run": {"agentz": 3}})"), InvalidArgument);
  CHECK_THROWS_AS(AppConfig::from_json_text(R"({"gen_data": {"earnings": {"persistence": 1.2}}})").finalize(),
                  InvalidArgument);
  CHECK_THROWS_AS(AppConfig::from_json_text("{not json"), InvalidArgument);
  CHECK_THROWS_AS(AppConfig::load("/nonexistent/config.json"), IoError);
}
