import math

import numpy as np
import pytest

import models
from entropy import (EntropyEstimate, EntropyMethod, closed_form_estimate, estimate_entropy,
                     monte_carlo_entropy, resubstitution_entropy)
from models import ExternalModel, IsotropicGaussian, UnsupportedCapability
from records import LikelihoodRecord


def test_resubstitution_small_lists():
    assert resubstitution_entropy([-3.0]).value == 3.0
    est = resubstitution_entropy([-1.0, -3.0])
    assert est.value == 2.0
    assert est.method is EntropyMethod.RESUBSTITUTION
    assert est.n_used == 2


@pytest.mark.parametrize("bad", [[], [-1.0, float("nan")], [float("-inf")]])
def test_resubstitution_rejects_bad_input(bad):
    with pytest.raises(ValueError):
        resubstitution_entropy(bad)


def test_resubstitution_matches_closed_form(iso16):
    ll = iso16.log_prob(models.sample(iso16, 50_000, seed=123))
    est = resubstitution_entropy(ll)
    exact = 8 * (1 + math.log(2 * math.pi))
    assert abs(est.value - exact) < 3 * est.std_error


def test_resubstitution_is_permutation_invariant():
    values = np.random.default_rng(4).normal(-20, 5, size=1001)
    shuffled = np.random.default_rng(5).permutation(values)
    assert resubstitution_entropy(values).value == resubstitution_entropy(shuffled).value


def test_monte_carlo_single_draw():
    p = IsotropicGaussian(d=3)
    est = monte_carlo_entropy(p, 1, seed=99)
    assert est.value == -p.log_prob(models.sample(p, 1, 99)[0])
    assert est.n_used == 1 and est.std_error is None


def test_monte_carlo_accuracy_and_determinism():
    p = IsotropicGaussian(d=2)
    est = monte_carlo_entropy(p, 200_000, seed=8)
    assert est.value == pytest.approx(2.8379, abs=0.02)
    assert monte_carlo_entropy(p, 200_000, seed=8) == est


def test_monte_carlo_chunking_matches_single_block():
    p = IsotropicGaussian(d=4)
    a = monte_carlo_entropy(p, 1000, seed=1, chunk=1000)
    b = monte_carlo_entropy(p, 1000, seed=1, chunk=128)
    assert a.value == b.value


def test_monte_carlo_errors():
    with pytest.raises(UnsupportedCapability):
        monte_carlo_entropy(ExternalModel([LikelihoodRecord("a", -1.0)]), 10, seed=0)
    with pytest.raises(ValueError):
        monte_carlo_entropy(IsotropicGaussian(d=1), 0, seed=0)


def test_estimators_agree_on_exact_model(iso16):
    mc = monte_carlo_entropy(iso16, 50_000, seed=31)
    resub = resubstitution_entropy(iso16.log_prob(models.sample(iso16, 50_000, seed=32)))
    combined = math.hypot(mc.std_error, resub.std_error)
    assert abs(mc.value - resub.value) < 3 * combined


def test_closed_form_estimate_and_dispatch(iso16):
    cf = closed_form_estimate(iso16)
    assert cf.method is EntropyMethod.CLOSED_FORM and cf.n_used == 0
    assert estimate_entropy("closed", model=iso16) == cf
    assert estimate_entropy("resub", train_logliks=[-1.0, -3.0]).value == 2.0
    assert estimate_entropy("mc", model=iso16, S=10, seed=3) == monte_carlo_entropy(iso16, 10, 3)
    with pytest.raises(ValueError):
        estimate_entropy("knn", model=iso16)
    with pytest.raises(ValueError):
        estimate_entropy("resub")
    with pytest.raises(ValueError):
        estimate_entropy("mc")


def test_entropy_estimate_invariants():
    with pytest.raises(ValueError):
        EntropyEstimate(float("nan"), EntropyMethod.CLOSED_FORM, 0)
    with pytest.raises(ValueError):
        EntropyEstimate(1.0, EntropyMethod.MONTE_CARLO, 0)
    assert EntropyEstimate(1.0, EntropyMethod.RESUBSTITUTION, 3).shifted(-0.5).value == 0.5
