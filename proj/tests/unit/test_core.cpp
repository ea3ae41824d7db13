#include <cmath>

#include "doctest.h"

#include "behavcal/core.hpp"
#include "behavcal/error.hpp"
#include "behavcal/format.hpp"
#include "behavcal/parallel.hpp"
#include "behavcal/rng.hpp"

using namespace behavcal;

namespace {
ParameterVector with_lambda(double l) {
  auto p = ParameterVector::rational();
  p.lambda = l;
  return p;
}
}  // namespace

TEST_CASE("value function") {
  auto p = with_lambda(2.25);
  CHECK(value(0.0, p) == 0.0);
  CHECK(value(-100.0, p) == doctest::Approx(-225.0));
  CHECK(value(100.0, p) == doctest::Approx(100.0));
  CHECK(-value(-100.0, p) / value(100.0, p) == doctest::Approx(2.25));

  p.alpha_gain = 0.88;
  p.beta_loss = 0.88;
  CHECK(value(100.0, p) == doctest::Approx(std::pow(100.0, 0.88)));
  CHECK(value(-100.0, p) == doctest::Approx(-2.25 * std::pow(100.0, 0.88)));
}

TEST_CASE("probability weighting") {
  auto p = ParameterVector::rational();
  CHECK(weight_probability(0.5, p) == doctest::Approx(0.5));
  p.gamma_weight = 0.65;
  CHECK(weight_probability(0.0, p) == 0.0);
  CHECK(weight_probability(1.0, p) == doctest::Approx(1.0));
  // Independent evaluation of p^g / (p^g + (1-p)^g)^(1/g).
  const double g = 0.65, q = 0.1;
  const double expect = std::pow(q, g) / std::pow(std::pow(q, g) + std::pow(1 - q, g), 1 / g);
  CHECK(weight_probability(0.1, p) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(weight_probability(0.1, p) > 0.1);
  CHECK(weight_probability(0.9, p) < 0.9);
}

TEST_CASE("perceived sd, forecast, anchoring") {
  auto p = ParameterVector::rational();
  CHECK(perceived_sd(2.5, p) == doctest::Approx(2.5));
  p.kappa = 4.0;
  CHECK(perceived_sd(2.5, p) == doctest::Approx(1.25));
  CHECK(perceived_sd(0.0, p) == 0.0);

  auto f = ParameterVector::rational();
  CHECK(forecast_return(0.0, 0.10, f) == 0.0);
  f.theta = 0.60;
  CHECK(forecast_return(0.0, 0.10, f) == doctest::Approx(0.06));
  CHECK(forecast_return(0.02, 0.02, f) == doctest::Approx(0.02));

  auto a = ParameterVector::rational();
  CHECK(anchored_valuation(200, 5, a) == doctest::Approx(5.0));
  a.a_adjust = 0.0;
  CHECK(anchored_valuation(200, 5, a) == doctest::Approx(200.0));
  a.a_adjust = 0.5;
  CHECK(anchored_valuation(100, 140, a) == doctest::Approx(120.0));
}

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(ParameterVector::rational().validate());
  auto p = ParameterVector::rational();
  p.w_herd = 1.5;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = ParameterVector::rational();
  p.lambda = std::nan("");
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = ParameterVector::rational();
  p.kappa = 0.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  CHECK_THROWS_AS(Profile::make(ProfileKind::loss_averse, 1.5), InvalidArgument);
}

TEST_CASE("benchmark registry") {
  const auto reg = BenchmarkRegistry::defaults();
  REQUIRE(reg.entries().size() == 8);
  for (const auto& b : reg.entries()) {
    CHECK(b.lo <= b.point);
    CHECK(b.point <= b.hi);
  }
  CHECK(reg.at(Bias::loss_aversion).point == 2.25);
  CHECK(reg.at(Bias::loss_aversion).lo == 2.00);
  CHECK(reg.at(Bias::loss_aversion).hi == 2.50);
  CHECK(reg.at(Bias::disposition).point == 1.60);
  CHECK(reg.at(Bias::overconfidence).point == doctest::Approx(0.15));
  CHECK(reg.at(Bias::herding).point == 0.70);
  CHECK(reg.at(Bias::representativeness).point == 1.65);
  CHECK(reg.at(Bias::probability_weighting).point == 0.35);
  CHECK(reg.at(Bias::anchoring).point == 0.43);
  CHECK(reg.at(Bias::extrapolation).point == 0.60);
  CHECK(reg.measured(Bias::overconfidence).point == doctest::Approx(0.65));

  const auto again = BenchmarkRegistry::parse(reg.serialize());
  for (Bias b : kAllBiases) {
    CHECK(again.at(b).point == reg.at(b).point);
    CHECK(again.at(b).source_note == reg.at(b).source_note);
  }
  CHECK_THROWS_AS(BenchmarkRegistry::parse("bias=herding point=0.9 lo=0.1 hi=0.5 unit=rate\n"), InvalidArgument);
}

TEST_CASE("enum names round trip") {
  for (Bias b : kAllBiases) CHECK(parse_bias(to_string(b)) == b);
  for (ProfileKind k : kAllProfiles) CHECK(parse_profile_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_bias("greed"), InvalidArgument);
  CHECK(targeting_profile(Bias::disposition) == ProfileKind::loss_averse);
  CHECK(targeting_profile(Bias::anchoring) == ProfileKind::representativeness_biased);
  CHECK(targeting_profile(Bias::herding) == ProfileKind::herding_prone);
}

TEST_CASE("rng determinism and splitting") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
  CHECK(Rng(42)() != c());
  CHECK(derive_seed(7, "x", 0) != derive_seed(7, "x", 1));
  CHECK(derive_seed(7, "x", 0) != derive_seed(7, "y", 0));
  CHECK(derive_seed(7, "x", 3) == derive_seed(7, "x", 3));

  Rng r(1);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);

  Rng u(9);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[u.below(7)];
  for (int c7 : counts) CHECK(std::abs(c7 - 10000) < 500);
}

TEST_CASE("parallel_for is order independent") {
  std::vector<std::uint64_t> one(1000), four(1000);
  parallel_for(1000, 1, [&](std::size_t i) { one[i] = Rng(derive_seed(5, "p", i))(); });
  parallel_for(1000, 4, [&](std::size_t i) { four[i] = Rng(derive_seed(5, "p", i))(); });
  CHECK(one == four);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 5) throw InvalidArgument("boom");
                  }),
                  InvalidArgument);
}

TEST_CASE("formatting") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(parse_double(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_fixed(2.5, 2) == "2.50");
  CHECK(round_to(2.345, 2) == doctest::Approx(2.35));
  CHECK(round_to(-2.345, 2) == doctest::Approx(-2.35));
  CHECK_THROWS_AS(parse_double("1.5x"), InvalidArgument);
  CHECK(trim("  a b ") == "a b");
}
