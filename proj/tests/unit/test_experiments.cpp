#include <cstdlib>
#include <set>

#include "doctest.h"
#include "test_support.hpp"

#include "behavcal/error.hpp"
#include "behavcal/experiments.hpp"
#include "behavcal/respondents.hpp"

using namespace behavcal;

TEST_CASE("gamble grid") {
  const auto g = gamble_grid(21);
  REQUIRE(g.size() == 21);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(50.0 + 17.5 * i));
  const auto set = build_scenario_set(Bias::loss_aversion, 21, 4);
  for (std::size_t i = 0; i < set.size(); ++i) CHECK(std::get<GamblePayload>(set[i].payload).gain == g[i]);
}

TEST_CASE("scenario sets") {
  for (Bias b : kAllBiases) {
    const auto a = build_scenario_set(b, 40, 9);
    const auto c = build_scenario_set(b, 40, 9);
    REQUIRE(a.size() == 40);
    std::set<std::string> ids;
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(scenario_to_json(a[i]) == scenario_to_json(c[i]));
      CHECK(payload_bias(a[i].payload) == b);
      CHECK_NOTHROW(a[i].validate());
      CHECK(scenario_to_json(scenario_from_json(scenario_to_json(a[i]))) == scenario_to_json(a[i]));
      ids.insert(a[i].id);
    }
    CHECK(ids.size() == a.size());
  }
  CHECK_THROWS_AS(build_scenario_set(Bias::herding, 0, 1), InvalidArgument);

  const auto cascades = build_scenario_set(Bias::herding, 500, 3);
  int conflicts = 0;
  for (const auto& s : cascades) conflicts += std::get<CascadePayload>(s.payload).conflict();
  CHECK(conflicts >= 200);
}

TEST_CASE("prompt rendering") {
  const auto s = build_scenario_set(Bias::loss_aversion, 21, 1)[5];
  const auto prompt = render_prompt(Profile::make(ProfileKind::rational, 1.0), s);
  CHECK(prompt.find("Asset") == std::string::npos);
  CHECK(prompt.find("$137.50") != std::string::npos);
  CHECK(prompt.find("$100") != std::string::npos);
  CHECK(prompt.find("ANSWER") != std::string::npos);

  for (ProfileKind k : kAllProfiles)
    for (Bias b : kAllBiases) {
      const auto sc = build_scenario_set(b, 3, 2)[1];
      CHECK(render_prompt(Profile::make(k, 0.0), sc) == render_prompt(Profile::make(ProfileKind::rational, 1.0), sc));
    }

  CHECK(intensity_for(0.0) == Intensity::none);
  CHECK(intensity_for(0.33) == Intensity::mild);
  CHECK(intensity_for(0.67) == Intensity::standard);
  CHECK(intensity_for(1.0) == Intensity::strong);
  CHECK(fill_template("a {x} b", {{"x", "1"}}) == "a 1 b");
  CHECK_THROWS_AS(fill_template("a {y}", {{"x", "1"}}), InvalidArgument);
}

TEST_CASE("golden prompts") {
  const bool update = std::getenv("UPDATE_GOLDEN") != nullptr;
  const auto dir = testing::golden_dir() / "prompts";
  std::filesystem::create_directories(dir);
  for (ProfileKind k : kAllProfiles)
    for (Bias b : kAllBiases) {
      const auto sc = build_scenario_set(b, 1, 1)[0];
      const auto prompt = render_prompt(Profile::make(k, 1.0), sc);
      const auto file = dir / (std::string(to_string(k)) + "__" + std::string(to_string(b)) + ".txt");
      if (update || !std::filesystem::exists(file)) {
        std::ofstream(file, std::ios::binary) << prompt;
        continue;
      }
      CAPTURE(file.string());
      CHECK(testing::read_file(file) == prompt);
    }
}

TEST_CASE("template override directory") {
  const auto dir = testing::temp_dir("templates");
  TemplateSet::defaults().save(dir);
  std::ofstream(dir / "frame.rational.txt", std::ios::binary) << "CUSTOM FRAME\n";
  const auto t = TemplateSet::load(dir);
  const auto sc = build_scenario_set(Bias::herding, 1, 1)[0];
  CHECK(render_prompt(Profile::make(ProfileKind::rational, 1.0), sc, t).find("CUSTOM FRAME") != std::string::npos);
}

namespace {
const AdversarialScenario& by_name(const std::string& name) {
  for (const auto& a : adversarial_catalog())
    if (a.name == name) return a;
  throw InvalidArgument("no scenario " + name);
}
}  // namespace

TEST_CASE("adversarial predicates on golden cases") {
  const auto cases = testing::adversarial_cases();
  CHECK(cases.size() == 2 * adversarial_catalog().size());
  for (const auto& c : cases) {
    const auto& adv = by_name(c.scenario);
    const auto parsed = parse_response("Reasoning.\nANSWER: " + c.answer, expected_shape(adv.base));
    CAPTURE(c.scenario);
    CAPTURE(c.answer);
    REQUIRE(parsed.ok());
    CHECK(evaluate_pass(adv, parsed) == (c.pass ? Verdict::pass : Verdict::fail));
  }
  for (const auto& a : adversarial_catalog())
    CHECK(evaluate_pass(a, parse_response("I would rather not say.", expected_shape(a.base))) == Verdict::unparsed);
  // Right shape check: an interval answer on a rating scenario never passes.
  ParsedResponse wrong;
  wrong.status = ParseStatus::ok;
  wrong.answer = IntervalAnswer{0, 10};
  CHECK(evaluate_pass(by_name("narrative versus bankruptcy risk"), wrong) != Verdict::pass);
}

TEST_CASE("catalog persistence") {
  const auto dir = testing::temp_dir("catalog");
  save_catalog(adversarial_catalog(), dir / "cat.json");
  const auto back = load_catalog(dir / "cat.json");
  REQUIRE(back.size() == adversarial_catalog().size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].name == adversarial_catalog()[i].name);
    CHECK(scenario_to_json(back[i].base) == scenario_to_json(adversarial_catalog()[i].base));
    CHECK(back[i].predicate.kind == adversarial_catalog()[i].predicate.kind);
  }
  std::ofstream(dir / "bad.json") << R"({"catalog_version": 99, "scenarios": []})";
  CHECK_THROWS_AS(load_catalog(dir / "bad.json"), IoError);
}

TEST_CASE("pass-rate aggregation") {
  std::vector<VerdictRecord> v;
  for (int i = 0; i < 7; ++i) v.push_back({Bias::herding, "m", Verdict::pass});
  for (int i = 0; i < 3; ++i) v.push_back({Bias::herding, "m", Verdict::fail});
  for (int i = 0; i < 6; ++i) v.push_back({Bias::anchoring, "m", Verdict::pass});
  for (int i = 0; i < 3; ++i) v.push_back({Bias::anchoring, "m", Verdict::fail});
  v.push_back({Bias::anchoring, "m", Verdict::unparsed});
  const auto t = aggregate_pass_rates(v);
  CHECK(t.at({Bias::herding, "m"}).rate() == doctest::Approx(0.7));
  CHECK(t.at({Bias::herding, "m"}).meets(kAdversarialPassThreshold));
  CHECK(t.at({Bias::anchoring, "m"}).rate() == doctest::Approx(0.6));
  CHECK_FALSE(t.at({Bias::anchoring, "m"}).meets(kAdversarialPassThreshold));
  CHECK_FALSE(PassTally{}.meets(0.0));
}
