#include <atomic>
#include <cmath>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "test_support.hpp"

#include "behavcal/error.hpp"
#include "behavcal/llm.hpp"
#include "behavcal/pipeline.hpp"
#include "behavcal/respondents.hpp"
#include "behavcal/rng.hpp"
#include "behavcal/stats.hpp"

using namespace behavcal;

namespace {

Scenario gamble(double gain) {
  Scenario s;
  s.id = "g";
  s.bias = Bias::loss_aversion;
  s.payload = GamblePayload{gain};
  return s;
}

GroundTruth noiseless(ParameterVector p = ParameterVector::rational()) {
  GroundTruth gt;
  gt.params = p;
  gt.choice_noise = 0.0;
  return gt;
}

std::string chat_body(const std::string& text) {
  nlohmann::json j = {{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}};
  return j.dump();
}

// Scripted endpoint: serves responses in order, repeating the last one.
class StubTransport : public Transport {
 public:
  explicit StubTransport(std::vector<HttpResponse> script) : script_(std::move(script)) {}
  HttpResponse post(const HttpRequest& req) override {
    std::lock_guard lk(mu_);
    last_body = req.body;
    headers = req.headers;
    const auto i = std::min(calls++, script_.size() - 1);
    return script_[i];
  }
  std::size_t calls = 0;
  std::string last_body;
  std::vector<std::pair<std::string, std::string>> headers;

 private:
  std::vector<HttpResponse> script_;
  std::mutex mu_;
};

LlmEndpointConfig stub_config() {
  LlmEndpointConfig c;
  c.base_url = "http://localhost:1";
  c.model_id = "stub-model";
  c.rate_limit = 0.0;
  c.backoff_base = std::chrono::milliseconds(1);
  c.backoff_max = std::chrono::milliseconds(2);
  c.max_in_flight = 2;
  return c;
}

}  // namespace

TEST_CASE("gamble threshold") {
  auto p = ParameterVector::rational();
  p.lambda = 2.25;
  const auto gt = noiseless(p);
  const auto accept = respond_synthetic(gt, gamble(226), 1);
  const auto reject = respond_synthetic(gt, gamble(224), 1);
  REQUIRE(accept.parsed.ok());
  CHECK(std::get<BinaryChoice>(accept.parsed.answer).label == "ACCEPT");
  CHECK(std::get<BinaryChoice>(reject.parsed.answer).label == "REJECT");
}

TEST_CASE("cascade follower") {
  auto p = ParameterVector::rational();
  p.w_herd = 1.0;
  const auto gt = noiseless(p);
  for (const auto& s : build_scenario_set(Bias::herding, 200, 5)) {
    const auto& c = std::get<CascadePayload>(s.payload);
    if (!c.conflict()) continue;
    const auto r = respond_synthetic(gt, s, derive_seed(1, s.id));
    CHECK(std::get<BinaryChoice>(r.parsed.answer).label == (c.majority() == Signal::A ? "A" : "B"));
  }
}

TEST_CASE("calibrated interval coverage") {
  const auto gt = profile_to_groundtruth(Profile::make(ProfileKind::rational, 1.0));
  const auto set = build_scenario_set(Bias::overconfidence, 10000, 8);
  int hits = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto r = respond_synthetic(gt, set[i], derive_seed(3, "cov", i));
    const auto& iv = std::get<IntervalAnswer>(r.parsed.answer);
    const double x = *std::get<IntervalPayload>(set[i].payload).realized;
    hits += iv.lo <= x && x <= iv.hi;
  }
  CHECK(hits / 10000.0 == doctest::Approx(0.80).epsilon(0.025));
  CHECK(coverage_for_kappa(1.0) == doctest::Approx(0.80));
}

TEST_CASE("solved constants") {
  namespace c = calibration;
  CHECK(kappa_for_coverage(c::kTargetCoverage) == doctest::Approx(c::kTargetKappa).epsilon(1e-9));
  CHECK(coverage_for_kappa(c::kTargetKappa) == doctest::Approx(0.30).epsilon(1e-9));
  CHECK(adjust_for_anchor_rho(c::kTargetAnchorRho, 1.0) == doctest::Approx(c::kTargetAdjust).epsilon(1e-9));
  CHECK(gamma_for_skew_rate(c::kTargetSkewRate, 1.0) == doctest::Approx(c::kTargetGammaWeight).epsilon(1e-9));
  CHECK(skew_temperature_for(c::kSkewReferenceGamma, c::kSkewReferenceRate) ==
        doctest::Approx(c::kSkewTemperature).epsilon(1e-9));
  // Coverage of a symmetric interval with sd shrunk by sqrt(kappa):
  // 2 Phi(z80 / sqrt(kappa)) - 1.
  const double z = stats::normal_quantile(0.90);
  CHECK(coverage_for_kappa(4.0) == doctest::Approx(2 * stats::normal_cdf(z / 2) - 1).epsilon(1e-9));
}

TEST_CASE("profile mapping") {
  for (ProfileKind k : kAllProfiles) {
    const auto gt = profile_to_groundtruth(Profile::make(k, 0.0));
    CHECK(gt.params == ParameterVector::rational());
    CHECK(gt.sell_prob_winner == gt.sell_prob_loser);
  }
  CHECK(profile_to_groundtruth(Profile::make(ProfileKind::loss_averse, 1.0)).params.lambda == doctest::Approx(3.00));
  const double mid = profile_to_groundtruth(Profile::make(ProfileKind::herding_prone, 0.5)).params.w_herd;
  const double lo = profile_to_groundtruth(Profile::make(ProfileKind::herding_prone, 0.0)).params.w_herd;
  CHECK(mid == doctest::Approx((lo + 0.90) / 2));
  CHECK(profile_to_groundtruth(Profile::make(ProfileKind::extrapolative, 1.0)).params.theta == doctest::Approx(0.88));
}

TEST_CASE("response parser") {
  auto a = parse_response("thinking...\nANSWER: ACCEPT", AnswerShape::accept_reject);
  REQUIRE(a.ok());
  CHECK(std::get<BinaryChoice>(a.answer).label == "ACCEPT");
  auto iv = parse_response("ANSWER: [1, 9]", AnswerShape::interval);
  REQUIRE(iv.ok());
  CHECK(std::get<IntervalAnswer>(iv.answer) == IntervalAnswer{1, 9});
  auto none = parse_response("no answer line", AnswerShape::rating);
  CHECK_FALSE(none.ok());
  CHECK_FALSE(none.error.empty());
  CHECK(std::get<SellChoice>(parse_response("ANSWER: SELL 2, 1", AnswerShape::sell).answer).positions ==
        std::vector<int>{0, 1});
  CHECK(std::get<ForecastAnswer>(parse_response("**ANSWER:** -1.5%", AnswerShape::forecast).answer).value == -1.5);
  CHECK(std::get<Valuation>(parse_response("ANSWER: $1,250", AnswerShape::valuation).answer).price == 1250);
  CHECK(std::get<Rating>(parse_response("ANSWER: 7/10", AnswerShape::rating).answer).value == 7);
  CHECK_FALSE(parse_response("ANSWER: 11", AnswerShape::rating).ok());
  CHECK(std::get<FramePair>(parse_response("ANSWER: accept, reject", AnswerShape::frame_pair).answer) ==
        FramePair{true, false});
  // Last conforming answer line wins.
  CHECK(std::get<BinaryChoice>(parse_response("ANSWER: A\nANSWER: B", AnswerShape::option).answer).label == "B");

  // Property: garbage never throws.
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    const auto len = rng.below(40);
    for (std::uint64_t k = 0; k < len; ++k) s += static_cast<char>(32 + rng.below(95));
    if (i % 3 == 0) s = "ANSWER: " + s;
    for (auto shape : {AnswerShape::accept_reject, AnswerShape::sell, AnswerShape::interval, AnswerShape::rating,
                       AnswerShape::frame_pair})
      CHECK_NOTHROW(parse_response(s, shape));
  }
}

TEST_CASE("synthetic answers round trip through the parser") {
  for (Bias b : kAllBiases)
    for (ProfileKind k : kAllProfiles) {
      const auto gt = profile_to_groundtruth(Profile::make(k, 1.0));
      for (const auto& s : build_scenario_set(b, 20, 6)) {
        const auto r = respond_synthetic(gt, s, derive_seed(2, s.id));
        CHECK(r.parsed.ok());
        CHECK(r.raw_text == synthetic_answer(gt, s, derive_seed(2, s.id)));
      }
    }
}

TEST_CASE("record persistence") {
  const auto dir = testing::temp_dir("records");
  RunPlan plan;
  plan.agents = 5;
  auto recs = run_synthetic(plan);
  save_records(recs, dir / "r.jsonl");
  auto back = load_records(dir / "r.jsonl");
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) CHECK(record_to_json(back[i]) == record_to_json(recs[i]));
  // A truncated final line is skipped.
  {
    std::ofstream o(dir / "r.jsonl", std::ios::app | std::ios::binary);
    o << record_to_json(recs[0]).substr(0, 30);
  }
  CHECK(load_records(dir / "r.jsonl").size() == recs.size());
}

TEST_CASE("llm client with a stubbed endpoint") {
  auto ok = std::make_shared<StubTransport>(std::vector<HttpResponse>{{200, chat_body("ANSWER: ACCEPT")}});
  LlmClient client(stub_config(), ok, [](auto) {});
  const auto r = client.complete("prompt");
  CHECK(r.ok);
  CHECK(r.text == "ANSWER: ACCEPT");
  CHECK(r.retries == 0);
  const auto body = nlohmann::json::parse(ok->last_body);
  CHECK(body["model"] == "stub-model");
  CHECK(body["temperature"] == 0.7);

  auto flaky = std::make_shared<StubTransport>(std::vector<HttpResponse>{
      {500, "oops"}, {0, "", LlmErrorKind::timeout, "timed out"}, {200, chat_body("ANSWER: REJECT")}});
  LlmClient c2(stub_config(), flaky, [](auto) {});
  const auto r2 = c2.complete("p");
  CHECK(r2.ok);
  CHECK(r2.retries == 2);
  CHECK(flaky->calls == 3);

  auto auth = std::make_shared<StubTransport>(std::vector<HttpResponse>{{401, "denied"}});
  LlmClient c3(stub_config(), auth, [](auto) {});
  const auto r3 = c3.complete("p");
  CHECK_FALSE(r3.ok);
  CHECK(r3.error == LlmErrorKind::auth);
  CHECK(auth->calls == 1);

  auto down = std::make_shared<StubTransport>(std::vector<HttpResponse>{{503, "busy"}});
  LlmClient c4(stub_config(), down, [](auto) {});
  const auto r4 = c4.complete("p");
  CHECK_FALSE(r4.ok);
  CHECK(r4.retries == 3);
  CHECK(down->calls == 4);

  auto junk = std::make_shared<StubTransport>(std::vector<HttpResponse>{{200, "{not json"}});
  LlmClient c5(stub_config(), junk, [](auto) {});
  CHECK(c5.complete("p").error == LlmErrorKind::malformed_response);
}

TEST_CASE("token bucket") {
  std::chrono::nanoseconds slept{0};
  TokenBucket bucket(10.0, 1, [&](std::chrono::nanoseconds d) { slept += d; });
  bucket.acquire();
  bucket.acquire();
  CHECK(slept.count() > 0);
}

TEST_CASE("llm run: records, failures and resume") {
  const auto dir = testing::temp_dir("llm-run");
  RunPlan plan;
  plan.biases = {Bias::loss_aversion};
  plan.profiles = {ProfileKind::rational, ProfileKind::loss_averse};
  plan.agents = 3;
  auto stub = std::make_shared<StubTransport>(std::vector<HttpResponse>{
      {200, chat_body("ANSWER: ACCEPT")}, {200, chat_body("I cannot decide")}, {200, chat_body("ANSWER: REJECT")}});
  const auto s1 = run_llm(plan, stub_config(), stub, dir);
  CHECK(s1.requested == 6);
  CHECK(s1.unparsed == 1);
  auto recs = load_records(dir / "records.jsonl");
  REQUIRE(recs.size() == 6);
  CHECK(recs[0].raw_text == "ANSWER: ACCEPT");
  CHECK(recs[0].backend == Backend::llm);
  CHECK(recs[0].model_id == "stub-model");
  CHECK_FALSE(recs[1].parsed.ok());
  CHECK(recs[1].raw_text == "I cannot decide");

  // A second run over the same directory requests nothing new.
  const auto s2 = run_llm(plan, stub_config(), stub, dir);
  CHECK(s2.skipped == 6);
  CHECK(s2.requested == 0);
  std::set<std::string> keys;
  for (const auto& r : load_records(dir / "records.jsonl")) keys.insert(r.key());
  CHECK(keys.size() == 6);

  // Interrupted run: keep the first two records, rerun, no duplicates.
  {
    const auto all = load_records(dir / "records.jsonl");
    save_records({all[0], all[1]}, dir / "records.jsonl");
  }
  const auto s3 = run_llm(plan, stub_config(), stub, dir);
  CHECK(s3.skipped == 2);
  CHECK(s3.requested == 4);
  CHECK(load_records(dir / "records.jsonl").size() == 6);

  auto failing = std::make_shared<StubTransport>(std::vector<HttpResponse>{{401, "no"}});
  const auto dir2 = testing::temp_dir("llm-run-fail");
  const auto s4 = run_llm(plan, stub_config(), failing, dir2);
  CHECK(s4.failed == 6);
  const auto failed = load_records(dir2 / "records.jsonl");
  REQUIRE(failed.size() == 6);
  CHECK(failed[0].error == "auth");
}
