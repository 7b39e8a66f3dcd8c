import math
from decimal import Decimal

import numpy as np
import pytest

import models
from entropy import EntropyMethod, closed_form_estimate, resubstitution_entropy
from models import IsotropicGaussian
from typicality import (TYPICALITY, BatchSizeMismatch, Calibration, CalibrationParseError, TestVerdict,
                        bootstrap_threshold, decide, decide_statistic, dumps_calibration, epsilon_hat,
                        generic_bootstrap_threshold, load_calibration, mean_nll, order_statistic_index,
                        save_calibration, select_calibration, split_batches, threshold_from_stats)


def _calibration(M, threshold=1.0, H=2.0):
    H = resubstitution_entropy([-H])
    return Calibration(H, M, 0.99, 1, threshold, 0, (threshold,))


# ============================================================
# ε̂
# ============================================================

def test_epsilon_hat_definition():
    assert epsilon_hat([-2.0, -4.0], 3.0) == 0.0
    assert epsilon_hat([-1.0], resubstitution_entropy([-3.0])) == 2.0
    with pytest.raises(ValueError):
        epsilon_hat([], 1.0)


def test_epsilon_hat_on_the_annulus(iso16):
    x = np.zeros(16)
    x[0] = 4.0
    assert epsilon_hat([iso16.log_prob(x)], closed_form_estimate(iso16)) == pytest.approx(0.0, abs=1e-12)


def test_epsilon_hat_off_the_annulus():
    p = IsotropicGaussian(d=2)
    assert epsilon_hat([p.log_prob([2.0, 0.0])], closed_form_estimate(p)) == pytest.approx(1.0, abs=1e-14)


def test_mean_nll_of_union_is_average():
    rng = np.random.default_rng(0)
    a, b = rng.normal(-10, 3, 64), rng.normal(-12, 1, 64)
    assert mean_nll(np.concatenate([a, b])) == pytest.approx((mean_nll(a) + mean_nll(b)) / 2, abs=1e-12)


# ============================================================
# Quantil e bootstrap
# ============================================================

def test_order_statistic_examples():
    assert threshold_from_stats([0.3, 0.5, 0.1, 0.4, 0.2], 0.8) == 0.4
    assert order_statistic_index(0.99, 50) == 50
    assert order_statistic_index(0.7, 10) == 7
    assert order_statistic_index(0.07, 100) == 7


def test_single_replicate_threshold():
    val = np.random.default_rng(3).normal(-5, 1, 40)
    cal = bootstrap_threshold(val, 5.0, M=4, K=1, alpha=0.5, seed=12)
    idx = np.random.default_rng([12, 0]).integers(0, 40, size=4)
    assert cal.threshold == cal.bootstrap_stats[0] == epsilon_hat(val[idx], 5.0)


def test_default_threshold_is_the_maximum():
    val = np.random.default_rng(1).normal(-20, 2, 500)
    cal = bootstrap_threshold(val, resubstitution_entropy(val), 10, 50, 0.99, 4)
    assert cal.threshold == max(cal.bootstrap_stats)


def test_threshold_matches_sort_and_index_oracle():
    rng = np.random.default_rng(2024)
    for trial in range(100):
        K = int(rng.integers(1, 201))
        alpha = round(float(rng.uniform(0.01, 0.99)), 3)
        M = int(rng.integers(1, 30))
        val = rng.normal(-10, 2, size=int(rng.integers(M, 200)))
        H = float(rng.normal(10, 1))
        cal = bootstrap_threshold(val, H, M, K, alpha, trial, workers=1)

        stats = []
        for k in range(K):
            idx = np.random.default_rng([trial, k]).integers(0, val.size, size=M)
            stats.append(abs(-math.fsum(val[idx]) / M - H))
        rank = math.ceil(Decimal(repr(alpha)) * K)
        assert cal.threshold == sorted(stats)[rank - 1]
        assert list(cal.bootstrap_stats) == stats


def test_bootstrap_is_independent_of_workers():
    val = np.random.default_rng(9).normal(-3, 1, 300)
    a = bootstrap_threshold(val, 3.0, 7, 64, 0.95, 77, workers=1)
    b = bootstrap_threshold(val, 3.0, 7, 64, 0.95, 77, workers=8)
    assert a == b


@pytest.mark.parametrize("kwargs", [
    dict(M=0), dict(M=50), dict(K=0), dict(alpha=1.0), dict(alpha=0.0), dict(seed=-1), dict(seed=1.5),
])
def test_bootstrap_argument_errors(kwargs):
    args = dict(M=5, K=10, alpha=0.9, seed=1)
    args.update(kwargs)
    with pytest.raises(ValueError):
        bootstrap_threshold(np.zeros(20), 1.0, **args)


def test_generic_bootstrap_specializations():
    val = np.random.default_rng(6).normal(-8, 2, 100)
    H = resubstitution_entropy(val)
    direct = bootstrap_threshold(val, H, 5, 20, 0.9, 3)
    generic = generic_bootstrap_threshold(lambda b: epsilon_hat(b, H), val, 5, 20, 0.9, 3,
                                          test_name=TYPICALITY, entropy=H)
    assert generic == direct
    assert generic_bootstrap_threshold(lambda b: 0.7, val, 5, 20, 0.9, 3).threshold == 0.7


def test_degenerate_validation():
    cal = bootstrap_threshold([-3.0] * 10, 2.0, 3, 5, 0.9, 0)
    assert cal.threshold == 1.0


def test_scale_consistency():
    rng = np.random.default_rng(10)
    train = rng.integers(-40_000, -10_000, 1000) / 1024
    val = rng.integers(-40_000, -10_000, 400) / 1024
    batches = rng.integers(-40_000, -10_000, (30, 8)) / 1024
    c = 3.25

    cal = bootstrap_threshold(val, resubstitution_entropy(train), 8, 50, 0.99, 5)
    shifted = bootstrap_threshold(val + c, resubstitution_entropy(train + c), 8, 50, 0.99, 5)
    assert shifted.entropy.value == pytest.approx(cal.entropy.value - c, abs=1e-9)
    assert shifted.threshold == pytest.approx(cal.threshold, abs=1e-9)
    for b in batches:
        v, w = decide(b, cal), decide(b + c, shifted)
        assert w.statistic == pytest.approx(v.statistic, abs=1e-9)
        assert w.is_ood == v.is_ood


# ============================================================
# Decisão
# ============================================================

def test_decide_strict_inequality():
    cal = _calibration(M=2, threshold=1.0, H=2.0)
    at = decide([-3.0, -3.0], cal)
    assert at.statistic == 1.0 and not at.is_ood
    assert decide([-3.5, -3.5], cal).is_ood
    assert not decide([-2.0, -2.0], cal).is_ood


def test_verdict_invariant():
    with pytest.raises(ValueError):
        TestVerdict(1.0, 1.0, True, TYPICALITY, 3)


def test_decide_batch_size_mismatch():
    cal = _calibration(M=3)
    with pytest.raises(BatchSizeMismatch):
        decide([-1.0, -2.0], cal)
    assert decide([-1.0, -2.0], cal, nearest_m=True).batch_size == 2
    with pytest.raises(ValueError):
        decide([], cal)


def test_select_calibration_nearest_m():
    cals = [_calibration(M) for M in (2, 10, 25)]
    assert select_calibration(cals, 10).M == 10
    with pytest.raises(BatchSizeMismatch):
        select_calibration(cals, 6)
    assert select_calibration(cals, 6, nearest_m=True).M == 2
    assert select_calibration(cals, 20, nearest_m=True).M == 25
    assert decide([-3.0] * 10, cals).batch_size == 10


def test_decide_rates_on_gaussian_batches(iso16):
    train = iso16.log_prob(models.sample(iso16, 5000, 1))
    val = iso16.log_prob(models.sample(iso16, 5000, 2))
    cal = bootstrap_threshold(val, resubstitution_entropy(train), 25, 50, 0.99, 3)

    same = iso16.log_prob(models.sample(iso16, 200 * 25, 4)).reshape(200, 25)
    assert np.mean([decide(b, cal).is_ood for b in same]) <= 0.05

    q = IsotropicGaussian(sigma=0.5, d=16)
    near_mode = iso16.log_prob(models.sample(q, 200 * 25, 5)).reshape(200, 25)
    assert np.mean([decide(b, cal).is_ood for b in near_mode]) >= 0.95


def test_decide_statistic_uses_calibration_name():
    cal = generic_bootstrap_threshold(lambda b: 0.5, np.zeros(10), 2, 3, 0.5, 0, test_name="annulus")
    v = decide_statistic(0.6, cal, 2)
    assert v.is_ood and v.test_name == "annulus"
    with pytest.raises(ValueError):
        decide([-1.0, -1.0], cal)


def test_split_batches():
    assert split_batches(7, 3) == [slice(0, 3), slice(3, 6)]
    assert split_batches(2, 3) == []


# ============================================================
# Artefato JSON
# ============================================================

def test_calibration_json_round_trip(tmp_path):
    val = np.random.default_rng(8).normal(-17.3, 4.1, 333)
    cal = bootstrap_threshold(val, resubstitution_entropy(val * 1.0000001), 9, 37, 0.93, 2024)
    path = save_calibration(tmp_path / "cal.json", cal)
    again = load_calibration(path)
    assert again == cal
    assert again.entropy.method is EntropyMethod.RESUBSTITUTION
    assert dumps_calibration(again) == path.read_text(encoding="utf-8")


def test_calibration_invariants():
    with pytest.raises(ValueError):
        Calibration(None, 2, 0.5, 2, 0.2, 0, (0.1, 0.2))
    with pytest.raises(ValueError):
        Calibration(None, 2, 0.5, 3, 0.1, 0, (0.1, 0.2))
    with pytest.raises(ValueError):
        Calibration(None, 2, 0.5, 1, -0.1, 0, (-0.1,))


def test_load_calibration_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_calibration(tmp_path / "x.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(CalibrationParseError):
        load_calibration(bad)
    bad.write_text('{"M": 2}', encoding="utf-8")
    with pytest.raises(CalibrationParseError):
        load_calibration(bad)
