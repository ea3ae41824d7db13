import math
from pathlib import Path

import pytest

import behavcal

DATA = Path(__file__).resolve().parents[2] / "data"


def test_names():
    assert len(behavcal.biases()) == 8
    assert "rational" in behavcal.profiles()


def test_ground_truth_rational():
    gt = behavcal.ground_truth("rational", 1.0)
    assert gt["lambda"] == 1.0
    assert gt["w_herd"] == 0.0


def test_synthetic_round_trip_noiseless():
    recs = behavcal.run_synthetic(biases=["loss_aversion"], profiles=["loss_averse"],
                                  agents=2000, noise=0.0, seed=3)
    assert len(recs) == 2000
    est = behavcal.estimate("loss_aversion", recs)
    truth = behavcal.expected_measure("loss_aversion", "loss_averse", 1.0, 0.0)
    assert abs(est["point"] - truth) <= 0.10


def test_cells_do_not_depend_on_jobs():
    recs = behavcal.run_synthetic(biases=["herding"], strengths=[0.0, 1.0], agents=50)
    a = behavcal.estimate_cells(recs, jobs=1)
    b = behavcal.estimate_cells(recs, jobs=4)
    assert a == b
    assert len(a) == 6 * 2


def test_holm_example():
    adjusted, reject = behavcal.holm([0.01, 0.03, 0.04])
    assert reject == [True, False, False]
    assert adjusted[0] == pytest.approx(0.03)


def test_ks_identical_samples():
    r = behavcal.ks_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert r["d"] == 0.0 and not r["reject"]


def test_power_size():
    r = behavcal.power("herding", reps=2000, null=True)
    assert r["power"] < 0.09


def test_market_baseline():
    s = behavcal.simulate_market(0.0, periods=2000, replications=4, mass_extrap=0.0)
    assert len(s["autocorr"]) == 24
    assert abs(s["short_momentum"]) < 0.05


def test_momentum_stats_matches_simulation():
    r = behavcal.market_returns(0.6, periods=3000)
    s = behavcal.momentum_stats(r)
    assert s["short_momentum"] > 0
    assert math.isfinite(s["long_reversal"])


def test_reference_ranges():
    reports = {r["bias"]: r for r in behavcal.validate_ranges(DATA / "reference_ranges.csv")}
    assert reports["loss_aversion"]["tier"] == "Strong"
    assert reports["anchoring"]["tier_disagrees"]


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        behavcal.ground_truth("nobody")
    with pytest.raises(ValueError):
        behavcal.holm([1.5])
    with pytest.raises(OSError):
        behavcal.validate_ranges("/nonexistent/ranges.csv")
