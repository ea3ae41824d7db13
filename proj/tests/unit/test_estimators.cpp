#include <cmath>

#include "doctest.h"
#include "test_support.hpp"

#include "behavcal/error.hpp"
#include "behavcal/estimators.hpp"
#include "behavcal/pipeline.hpp"
#include "behavcal/rng.hpp"

using namespace behavcal;

namespace {

GroundTruth truth(ParameterVector p, double noise) {
  GroundTruth gt;
  gt.params = p;
  gt.choice_noise = noise;
  return gt;
}

std::vector<DecisionRecord> agent(const GroundTruth& gt, Bias b, std::size_t trials, std::uint64_t seed = 1) {
  return simulate_agents({{"a", gt}}, b, trials, seed);
}

DecisionRecord answered(const Scenario& s, Answer a) {
  DecisionRecord r;
  r.scenario = s;
  r.parsed.status = ParseStatus::ok;
  r.parsed.answer = std::move(a);
  return r;
}

Scenario portfolio() {
  Scenario s;
  s.id = "p";
  s.bias = Bias::disposition;
  s.payload = PortfolioPayload{{{"W", 10, 12, ""}, {"L", 10, 8, ""}}};
  return s;
}

}  // namespace

TEST_CASE("lambda recovery") {
  auto p = ParameterVector::rational();
  p.lambda = 2.25;
  const auto recs = agent(truth(p, 0.0), Bias::loss_aversion, 21);
  const auto e = estimate_lambda(recs);
  CHECK(std::abs(e.point - 2.25) <= 0.0875 + 1e-9);
  CHECK(e.has_flag("separation_midpoint"));

  p.lambda = 1.0;
  CHECK(estimate_lambda(agent(truth(p, 0.0), Bias::loss_aversion, 21)).point == doctest::Approx(1.0).epsilon(0.09));

  p.lambda = 0.2;  // accepts everything on the grid
  CHECK_THROWS_AS(estimate_lambda(agent(truth(p, 0.0), Bias::loss_aversion, 21)), InsufficientData);

  p.lambda = 2.25;
  const auto noisy = agent(truth(p, 1.0), Bias::loss_aversion, 2000, 4);
  const auto en = estimate_lambda(noisy);
  CHECK_FALSE(en.has_flag("separation_midpoint"));
  CHECK(std::abs(en.point - 2.25) < 3 * en.std_error + 0.02);
  CHECK(en.std_error > 0);

  std::vector<DecisionRecord> few(recs.begin(), recs.begin() + 3);
  CHECK_THROWS_AS(estimate_lambda(few), InsufficientData);
}

TEST_CASE("disposition ratio") {
  std::vector<DecisionRecord> recs;
  for (int i = 0; i < 10; ++i) {
    std::vector<int> sold;
    if (i < 8) sold.push_back(0);
    if (i < 5) sold.push_back(1);
    recs.push_back(answered(portfolio(), SellChoice{sold}));
  }
  const auto e = estimate_disposition(recs);
  CHECK(e.point == doctest::Approx(1.6));
  CHECK(e.std_error > 0);

  std::vector<DecisionRecord> equal;
  for (int i = 0; i < 10; ++i) equal.push_back(answered(portfolio(), SellChoice{i < 4 ? std::vector<int>{0, 1} : std::vector<int>{}}));
  CHECK(estimate_disposition(equal).point == doctest::Approx(1.0));

  std::vector<DecisionRecord> none;
  for (int i = 0; i < 10; ++i) none.push_back(answered(portfolio(), SellChoice{{0}}));
  const auto inf = estimate_disposition(none);
  CHECK(std::isinf(inf.point));
  CHECK(inf.has_flag("infinite_ratio"));
}

TEST_CASE("coverage") {
  const auto set = build_scenario_set(Bias::overconfidence, 50, 2);
  std::vector<DecisionRecord> wide, point;
  for (const auto& s : set) {
    const double x = *std::get<IntervalPayload>(s.payload).realized;
    wide.push_back(answered(s, IntervalAnswer{x - 1e6, x + 1e6}));
    point.push_back(answered(s, IntervalAnswer{x + 1, x + 1}));
  }
  CHECK(estimate_coverage(wide).point == 1.0);
  CHECK(estimate_coverage(point).point == 0.0);
  CHECK(estimate_coverage(wide).extras.at("miscalibration") == doctest::Approx(-0.2));

  const auto e = estimate_coverage(agent(truth(ParameterVector::rational(), 1.0), Bias::overconfidence, 4000, 3));
  CHECK(std::abs(e.point - 0.80) < 3 * std::sqrt(0.16 / 4000));
}

TEST_CASE("herding rate") {
  auto p = ParameterVector::rational();
  p.w_herd = 1.0;
  CHECK(estimate_herding(agent(truth(p, 0.0), Bias::herding, 300)).point == 1.0);
  p.w_herd = 0.0;
  CHECK(estimate_herding(agent(truth(p, 0.0), Bias::herding, 300)).point == 0.0);
  p.w_herd = 0.70;
  // Enough trials for about 600 conflict trials.
  const auto e = estimate_herding(agent(truth(p, 0.0), Bias::herding, 1200, 9));
  CHECK(e.n >= 480);
  CHECK(std::abs(e.point - 0.70) <= 2 * std::sqrt(0.21 / e.n) + 0.01);
}

TEST_CASE("skew choice rate") {
  const auto set = build_scenario_set(Bias::probability_weighting, 30, 1);
  std::vector<DecisionRecord> always;
  for (const auto& s : set) {
    const auto& pl = std::get<SkewChoicePayload>(s.payload);
    always.push_back(answered(s, BinaryChoice{std::string(1, static_cast<char>('A' + pl.high_skew))}));
  }
  CHECK(estimate_skew_choice(always).point == 1.0);

  const auto rational = ParameterVector::rational();
  const auto e1 = estimate_skew_choice(agent(truth(rational, 1.0), Bias::probability_weighting, 8000, 2));
  CHECK(std::abs(e1.point - skew_choice_rate(rational, 1.0)) < 3 * e1.std_error + 1e-9);
  auto pw = rational;
  pw.gamma_weight = 0.65;
  const auto e2 = estimate_skew_choice(agent(truth(pw, 1.0), Bias::probability_weighting, 8000, 2));
  CHECK(e2.point > e1.point);
  CHECK(e2.point == doctest::Approx(0.35).epsilon(0.1));
}

TEST_CASE("anchoring correlation") {
  const auto set = build_scenario_set(Bias::anchoring, 200, 3);
  std::vector<DecisionRecord> copy, indep;
  Rng rng(4);
  for (const auto& s : set) {
    copy.push_back(answered(s, Valuation{std::get<AnchorPayload>(s.payload).anchor}));
    indep.push_back(answered(s, Valuation{rng.uniform(50, 150)}));
  }
  CHECK(estimate_anchoring(copy).point == doctest::Approx(1.0));
  CHECK(std::abs(estimate_anchoring(indep).point) < 0.2);
  const auto full = estimate_anchoring(agent(truth(ParameterVector::rational(), 0.0), Bias::anchoring, 400));
  CHECK(std::abs(full.point) < 3 / std::sqrt(400.0));
  CHECK(full.extras.count("p_value"));
}

TEST_CASE("extrapolation slope") {
  auto p = ParameterVector::rational();
  p.theta = 0.60;
  CHECK(estimate_extrapolation(agent(truth(p, 0.0), Bias::extrapolation, 100)).point == doctest::Approx(0.60).epsilon(1e-6));
  p.theta = 0.0;
  CHECK(std::abs(estimate_extrapolation(agent(truth(p, 0.0), Bias::extrapolation, 100)).point) < 1e-6);

  std::vector<DecisionRecord> last;
  for (const auto& s : build_scenario_set(Bias::extrapolation, 60, 5))
    last.push_back(answered(s, ForecastAnswer{std::get<ForecastPayload>(s.payload).history.back()}));
  CHECK(estimate_extrapolation(last).point == doctest::Approx(1.0));
}

TEST_CASE("representativeness ratio") {
  auto p = ParameterVector::rational();
  p.tau_ratio = 1.65;
  CHECK(estimate_representativeness(agent(truth(p, 0.0), Bias::representativeness, 100)).point ==
        doctest::Approx(1.65).epsilon(1e-3));
  p.tau_ratio = 1.0;
  CHECK(estimate_representativeness(agent(truth(p, 0.0), Bias::representativeness, 100)).point ==
        doctest::Approx(1.0).epsilon(1e-3));
  p.tau_ratio = 0.0;
  CHECK(std::abs(estimate_representativeness(agent(truth(p, 0.0), Bias::representativeness, 100)).point) < 1e-3);
}

TEST_CASE("unparsed records are skipped and counted") {
  auto recs = agent(truth(ParameterVector::rational(), 1.0), Bias::herding, 200);
  recs[0].parsed = ParsedResponse{};
  recs[1].parsed = ParsedResponse{};
  const auto e = estimate_herding(recs);
  CHECK(e.extras.at("unparsed") == 2);
  CHECK(e.has_flag("unparsed_records"));
}

TEST_CASE("cells, csv round trip and jobs independence") {
  RunPlan plan;
  plan.agents = 60;
  plan.strengths = {0.0, 1.0};
  const auto recs = run_synthetic(plan, 2);
  const auto one = estimate_cells(recs, 1);
  const auto four = estimate_cells(recs, 4);
  REQUIRE(one.size() == four.size());
  CHECK(one.size() == 8 * 6 * 2);
  const auto dir = testing::temp_dir("est");
  write_estimates_csv(one, dir / "a.csv");
  write_estimates_csv(four, dir / "b.csv");
  CHECK(testing::read_file(dir / "a.csv") == testing::read_file(dir / "b.csv"));
  const auto back = read_estimates_csv(dir / "a.csv");
  REQUIRE(back.size() == one.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(back[i].bias == one[i].bias);
    CHECK(back[i].keys == one[i].keys);
    if (std::isfinite(one[i].point)) CHECK(back[i].point == one[i].point);
    CHECK(back[i].flags == one[i].flags);
  }
}
