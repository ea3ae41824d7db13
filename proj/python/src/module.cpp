#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "behavcal/abm.hpp"
#include "behavcal/core.hpp"
#include "behavcal/error.hpp"
#include "behavcal/estimators.hpp"
#include "behavcal/pipeline.hpp"
#include "behavcal/respondents.hpp"
#include "behavcal/synthdata.hpp"
#include "behavcal/validator.hpp"

namespace py = pybind11;
using namespace behavcal;

namespace {

// Records cross the boundary as JSON lines; the Python side decodes them.
std::vector<DecisionRecord> decode(const std::vector<std::string>& lines) {
  std::vector<DecisionRecord> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(record_from_json(l));
  return out;
}

std::vector<std::string> encode(const std::vector<DecisionRecord>& records) {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(record_to_json(r));
  return out;
}

py::dict estimate_dict(const EstimateResult& e) {
  py::dict d;
  d["bias"] = std::string(to_string(e.bias));
  d["point"] = e.point;
  d["std_error"] = e.std_error;
  d["n"] = e.n;
  d["profile"] = e.keys.profile;
  d["strength"] = e.keys.strength;
  d["backend"] = e.keys.backend;
  d["model_id"] = e.keys.model_id;
  d["extras"] = e.extras;
  d["flags"] = e.flags;
  return d;
}

py::dict stats_dict(const MomentumStats& m) {
  py::dict d;
  d["autocorr"] = m.autocorr;
  d["short_momentum"] = m.short_momentum;
  d["long_reversal"] = m.long_reversal;
  d["peak_lag"] = m.peak_lag;
  d["decay_rate"] = m.decay_rate;
  if (m.post_news) d["post_news"] = *m.post_news;
  return d;
}

py::dict report_dict(const ValidationReport& r) {
  py::dict d;
  d["bias"] = std::string(to_string(r.bias));
  d["c1_monotone"] = r.c1_monotone;
  d["c2_range_covered"] = r.c2_range_covered;
  d["c3_stable"] = r.c3_stable ? py::cast(*r.c3_stable) : py::none();
  d["c4_coherent"] = r.c4_coherent ? py::cast(*r.c4_coherent) : py::none();
  d["tier"] = std::string(to_string(r.tier));
  d["tier_disagrees"] = r.tier_disagrees;
  d["details"] = r.details;
  d["notes"] = r.notes;
  return d;
}

GroundTruth truth_for(const std::string& profile, double strength, double noise) {
  auto gt = profile_to_groundtruth(Profile::make(parse_profile_kind(profile), strength));
  gt.choice_noise = noise;
  return gt;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the behavioral calibration toolkit.";

  // Translators run newest first, so the base class goes in first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<InsufficientData>(m, "InsufficientData", PyExc_ValueError);
  py::register_exception<DegenerateData>(m, "DegenerateData", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("biases", [] {
    std::vector<std::string> out;
    for (Bias b : kAllBiases) out.emplace_back(to_string(b));
    return out;
  });
  m.def("profiles", [] {
    std::vector<std::string> out;
    for (ProfileKind k : kAllProfiles) out.emplace_back(to_string(k));
    return out;
  });

  m.def(
      "ground_truth",
      [](const std::string& profile, double strength) {
        const auto gt = truth_for(profile, strength, 1.0);
        const auto& p = gt.params;
        py::dict d;
        d["lambda"] = p.lambda;
        d["alpha_gain"] = p.alpha_gain;
        d["beta_loss"] = p.beta_loss;
        d["gamma_weight"] = p.gamma_weight;
        d["kappa"] = p.kappa;
        d["theta"] = p.theta;
        d["w_herd"] = p.w_herd;
        d["a_adjust"] = p.a_adjust;
        d["tau_ratio"] = p.tau_ratio;
        d["gamma_risk"] = p.gamma_risk;
        d["sell_prob_winner"] = gt.sell_prob_winner;
        d["sell_prob_loser"] = gt.sell_prob_loser;
        return d;
      },
      py::arg("profile"), py::arg("strength") = 1.0);

  m.def(
      "expected_measure",
      [](const std::string& bias, const std::string& profile, double strength, double noise) {
        return expected_measure(parse_bias(bias), truth_for(profile, strength, noise));
      },
      py::arg("bias"), py::arg("profile"), py::arg("strength") = 1.0, py::arg("noise") = 1.0);

  m.def(
      "run_synthetic",
      [](std::vector<std::string> biases, std::vector<std::string> profiles, std::vector<double> strengths,
         std::size_t agents, std::uint64_t seed, double noise, int repeats, unsigned jobs) {
        RunPlan plan;
        if (!biases.empty()) {
          plan.biases.clear();
          for (const auto& b : biases) plan.biases.push_back(parse_bias(b));
        }
        if (!profiles.empty()) {
          plan.profiles.clear();
          for (const auto& p : profiles) plan.profiles.push_back(parse_profile_kind(p));
        }
        plan.strengths = std::move(strengths);
        plan.agents = agents;
        plan.seed = seed;
        plan.choice_noise = noise;
        plan.repeats = repeats;
        std::vector<DecisionRecord> recs;
        {
          py::gil_scoped_release release;
          recs = run_synthetic(plan, jobs);
        }
        return encode(recs);
      },
      py::arg("biases") = std::vector<std::string>{}, py::arg("profiles") = std::vector<std::string>{},
      py::arg("strengths") = std::vector<double>{1.0}, py::arg("agents") = 100, py::arg("seed") = 1,
      py::arg("noise") = 1.0, py::arg("repeats") = 1, py::arg("jobs") = 1);

  m.def(
      "estimate",
      [](const std::string& bias, const std::vector<std::string>& lines) {
        const auto recs = decode(lines);
        return estimate_dict(estimate(parse_bias(bias), recs));
      },
      py::arg("bias"), py::arg("records"));

  m.def(
      "estimate_cells",
      [](const std::vector<std::string>& lines, unsigned jobs) {
        const auto recs = decode(lines);
        py::list out;
        for (const auto& e : estimate_cells(recs, jobs)) out.append(estimate_dict(e));
        return out;
      },
      py::arg("records"), py::arg("jobs") = 1);

  m.def(
      "validate_ranges",
      [](const std::filesystem::path& csv, double delta) {
        py::list out;
        for (const auto& r : validate_ranges(read_range_rows(csv), delta)) out.append(report_dict(r));
        return out;
      },
      py::arg("path"), py::arg("delta") = 0.0);

  m.def(
      "holm",
      [](const std::vector<double>& p, double alpha) {
        const auto h = holm_correct(p, alpha);
        return py::make_tuple(h.adjusted, std::vector<bool>(h.reject.begin(), h.reject.end()));
      },
      py::arg("p_values"), py::arg("alpha") = 0.05);

  m.def(
      "ks_test",
      [](const std::vector<double>& a, const std::vector<double>& b, double alpha) {
        const auto r = ks_test(a, b, alpha);
        py::dict d;
        d["d"] = r.d;
        d["critical"] = r.critical;
        d["p_value"] = r.p_value;
        d["reject"] = r.reject;
        return d;
      },
      py::arg("a"), py::arg("b"), py::arg("alpha") = 0.05);

  m.def(
      "power",
      [](const std::string& design, std::size_t reps, std::uint64_t seed, bool null, unsigned jobs) {
        PowerSpec s;
        if (design == "disposition") s = PowerSpec::disposition();
        else if (design == "herding") s = PowerSpec::herding();
        else if (design == "overconfidence") s = PowerSpec::overconfidence();
        else throw InvalidArgument("unknown power design: " + design);
        s.reps = reps;
        if (null) s.effect_alt = s.effect_null;
        PowerResult r;
        {
          py::gil_scoped_release release;
          r = power_mc(s, seed, jobs);
        }
        py::dict d;
        d["power"] = r.power;
        d["mc_se"] = r.mc_se;
        d["rejections"] = r.rejections;
        d["reps"] = r.reps;
        return d;
      },
      py::arg("design"), py::arg("reps") = 10000, py::arg("seed") = 1, py::arg("null") = false,
      py::arg("jobs") = 1);

  m.def("momentum_stats", [](const std::vector<double>& returns) { return stats_dict(momentum_stats(returns)); },
        py::arg("returns"));

  m.def(
      "simulate_market",
      [](double theta, const std::string& mode, std::size_t periods, std::size_t replications, std::uint64_t seed,
         double mass_extrap, unsigned jobs) {
        MarketConfig cfg;
        cfg.theta = theta;
        cfg.mass_extrap = mass_extrap;
        cfg.mass_rational = 1.0 - mass_extrap;
        cfg.mode = parse_forecast_mode(mode);
        cfg.periods = periods;
        cfg.replications = replications;
        cfg.seed = seed;
        ReplicationSummary s;
        {
          py::gil_scoped_release release;
          s = run_replications(cfg, jobs);
        }
        auto d = stats_dict(s.mean);
        d["autocorr_se"] = s.autocorr_se;
        d["short_se"] = s.short_se;
        d["long_se"] = s.long_se;
        d["replications"] = s.replications;
        return d;
      },
      py::arg("theta"), py::arg("mode") = "price", py::arg("periods") = 10000, py::arg("replications") = 100,
      py::arg("seed") = 1, py::arg("mass_extrap") = 0.5, py::arg("jobs") = 1);

  m.def(
      "market_returns",
      [](double theta, const std::string& mode, std::size_t periods, std::uint64_t seed) {
        MarketConfig cfg;
        cfg.theta = theta;
        cfg.mode = parse_forecast_mode(mode);
        cfg.periods = periods;
        cfg.replications = 1;
        return simulate(cfg, seed).returns;
      },
      py::arg("theta"), py::arg("mode") = "price", py::arg("periods") = 10000, py::arg("seed") = 1);
}
