import math

import numpy as np
import pytest

import baselines
import harness
import models
from harness import (IN_DIST, ExperimentConfig, ExternalSource, RejectionReport, annulus_sweep, entropy_convergence,
                     epsilon_profile, m_sweep, mode_paradox, overlap_diagnostic, run_evaluation,
                     typical_set_coverage)
from models import IsotropicGaussian
from records import LikelihoodRecord
from typicality import TYPICALITY

SMALL = dict(validation_size=2000, test_size=2000, train_size=2000, repetitions=3, seed=17)


def _cfg(**kw):
    args = dict(model=IsotropicGaussian(d=16), **SMALL)
    args.update(kw)
    return ExperimentConfig(**args)


# ============================================================
# annulus_sweep
# ============================================================

def test_annulus_sweep_minimum_at_sqrt_d():
    radii = [0.25 * i for i in range(33)]
    curve = annulus_sweep(1.0, 16, radii, M=16, seed=0)
    best_r = min(curve, key=lambda t: t[1])[0]
    assert best_r == pytest.approx(4.0, abs=0.25)

    values = [v for _, v in curve]
    i = radii.index(4.0)
    assert all(a >= b for a, b in zip(values[:i], values[1:i + 1]))
    assert all(a <= b for a, b in zip(values[i:], values[i + 1:]))


def test_annulus_sweep_at_the_mode():
    ((r, eps),) = annulus_sweep(1.0, 16, [0.0], M=1, seed=0, n_batches=1)
    assert r == 0.0 and eps == pytest.approx(8.0, abs=1e-12)


def test_annulus_sweep_errors():
    with pytest.raises(ValueError):
        annulus_sweep(1.0, 0, [1.0], 4, 0)
    with pytest.raises(ValueError):
        annulus_sweep(1.0, 4, [], 4, 0)


# ============================================================
# run_evaluation / m_sweep
# ============================================================

def test_config_validation():
    with pytest.raises(ValueError):
        _cfg(m_values=())
    with pytest.raises(ValueError):
        _cfg(repetitions=0)
    with pytest.raises(ValueError):
        _cfg(tests=("bogus",))
    with pytest.raises(ValueError):
        ExperimentConfig(**SMALL)
    with pytest.raises(ValueError):
        _cfg(ood_models={"q": IsotropicGaussian(d=3)})


def test_in_distribution_type_one_error():
    report = run_evaluation(_cfg(m_values=(2, 10, 25)), show_progress=False)
    for row in report.rows:
        assert row.dataset == IN_DIST
        assert row.mean_fraction <= 0.05, row
    assert report.row(baselines.TTEST, IN_DIST, 2).n_batches == 1000
    assert report.metadata["batching"] == harness.BATCHING


def test_narrow_alternative_is_rejected():
    q = IsotropicGaussian(sigma=0.5, d=16)
    report = run_evaluation(_cfg(ood_models={"half": q}, m_values=(10,), tests=(TYPICALITY,)),
                            show_progress=False)
    assert report.fraction(TYPICALITY, "half", 10) >= 0.99
    assert report.fraction(TYPICALITY, IN_DIST, 10) <= 0.05


def test_same_distribution_alternative_matches_in_dist():
    report = run_evaluation(_cfg(ood_models={"same": IsotropicGaussian(d=16)}, m_values=(10,),
                                 tests=(TYPICALITY, baselines.KSTEST)), show_progress=False)
    for test in (TYPICALITY, baselines.KSTEST):
        assert abs(report.fraction(test, "same", 10) - report.fraction(test, IN_DIST, 10)) <= 0.05


def test_mmd_and_ksd_in_campaign():
    cfg = _cfg(model=IsotropicGaussian(d=2), ood_models={"wide": IsotropicGaussian(sigma=2.0, d=2)},
               m_values=(10,), tests=(baselines.MMD, baselines.KSD), repetitions=1,
               validation_size=500, test_size=500, train_size=500)
    report = run_evaluation(cfg, show_progress=False)
    assert report.fraction(baselines.KSD, "wide", 10) > report.fraction(baselines.KSD, IN_DIST, 10)
    assert report.fraction(baselines.MMD, IN_DIST, 10) <= 0.2


def test_t_test_skipped_for_single_examples():
    report = run_evaluation(_cfg(m_values=(1, 2), tests=(baselines.TTEST,), repetitions=1), show_progress=False)
    assert [r.M for r in report.rows] == [2]


def test_evaluation_is_reproducible():
    cfg = _cfg(ood_models={"half": IsotropicGaussian(sigma=0.5, d=16)}, m_values=(2, 5))
    a = run_evaluation(cfg, show_progress=False)
    b = run_evaluation(cfg, show_progress=False, workers=1)
    assert a.to_csv() == b.to_csv()


def test_m_sweep_shape_and_m1_consistency():
    q = IsotropicGaussian(sigma=0.8, d=16)
    cfg = _cfg(ood_models={"q": q}, tests=(TYPICALITY, baselines.KSTEST), repetitions=2)
    sweep = m_sweep(cfg, [1, 2, 5, 10, 25, 50, 75, 100, 125, 150], show_progress=False)
    single = run_evaluation(_cfg(ood_models={"q": q}, tests=(TYPICALITY, baselines.KSTEST), repetitions=2,
                                 m_values=(1,)), show_progress=False)
    for row in single.rows:
        assert sweep.row(row.test, row.dataset, 1) == row

    typ = [sweep.fraction(TYPICALITY, "q", M) for M in (1, 2, 5, 10, 25, 50, 75, 100, 125, 150)]
    inversions = sum(1 for a, b in zip(typ, typ[1:]) if b < a)
    assert inversions <= 2
    assert all(sweep.fraction(TYPICALITY, IN_DIST, M) <= 0.05 for M in (1, 2, 5, 10, 25, 50))


def test_pool_smaller_than_m():
    with pytest.raises(ValueError):
        run_evaluation(_cfg(m_values=(3000,), tests=(TYPICALITY,), repetitions=1), show_progress=False)


def _records(lls, prefix, sqnorms=None):
    return [LikelihoodRecord(f"{prefix}{i}", float(v), None if sqnorms is None else float(sqnorms[i]))
            for i, v in enumerate(lls)]


def test_external_source_evaluation(iso16):
    x_train = models.sample(iso16, 1500, 1)
    x_pool = models.sample(iso16, 3000, 2)
    x_ood = models.sample(IsotropicGaussian(sigma=0.5, d=16), 1000, 3)
    source = ExternalSource(
        train=_records(iso16.log_prob(x_train), "t", iso16.latent_sqnorm(x_train)),
        in_dist=_records(iso16.log_prob(x_pool), "v", iso16.latent_sqnorm(x_pool)),
        ood={"half": _records(iso16.log_prob(x_ood), "o", iso16.latent_sqnorm(x_ood))},
        dimension=16,
    )
    cfg = ExperimentConfig(external=source, m_values=(10,), repetitions=2, validation_size=2000, test_size=1000,
                           tests=(TYPICALITY, baselines.ANNULUS, baselines.TTEST, baselines.KSTEST), seed=3)
    report = run_evaluation(cfg, show_progress=False)
    assert report.fraction(TYPICALITY, "half", 10) >= 0.99
    assert report.fraction(baselines.ANNULUS, "half", 10) >= 0.99
    assert report.fraction(TYPICALITY, IN_DIST, 10) <= 0.05

    with pytest.raises(models.UnsupportedCapability):
        run_evaluation(ExperimentConfig(external=source, m_values=(10,), repetitions=1, tests=(baselines.KSD,)),
                       show_progress=False)
    with pytest.raises(ValueError):
        ExperimentConfig(external=source, entropy_method="mc")


def test_report_csv_round_trip(tmp_path):
    report = run_evaluation(_cfg(m_values=(5,), tests=(TYPICALITY,), repetitions=2), show_progress=False)
    path = report.write(tmp_path / "report.csv")
    text = path.read_text(encoding="utf-8")
    assert text.splitlines()[0] == "test,dataset,M,mean_fraction,std_fraction,n_batches"
    again = RejectionReport.from_csv(text)
    assert [(r.test, r.dataset, r.M, r.mean_fraction, r.std_fraction, r.n_batches) for r in again.rows] == \
        [(r.test, r.dataset, r.M, r.mean_fraction, r.std_fraction, r.n_batches) for r in report.rows]
    assert (tmp_path / "report.csv.meta.json").exists()


# ============================================================
# Diagnósticos
# ============================================================

def test_overlap_extremes():
    vals = np.random.default_rng(0).normal(size=500)
    same = overlap_diagnostic(vals, vals)
    assert same.overlap == 1.0 and same.flagged
    apart = overlap_diagnostic([0.0, 1.0, 2.0], [10.0, 11.0])
    assert apart.overlap == 0.0 and not apart.flagged
    with pytest.raises(ValueError):
        overlap_diagnostic([], [1.0])


def test_overlap_of_separated_gaussians():
    rng = np.random.default_rng(1)
    summ = overlap_diagnostic(rng.normal(0, 1, 10_000), rng.normal(5, 1, 10_000), bins=50)
    assert summ.overlap < 0.1
    assert summ.reference_counts.sum() == summ.other_counts.sum() == 10_000


def test_typical_set_coverage_high_dimension():
    eps, coverage = typical_set_coverage(IsotropicGaussian(d=1000), M=64, n_batches=500, seed=4)
    assert eps > 0
    assert coverage >= 0.95


def test_epsilon_profile_consistency():
    p = IsotropicGaussian(d=16)
    profile = epsilon_profile(p, p, [1, 10, 100, 1000], n_batches=100, seed=5)
    values = [profile[M] for M in (1, 10, 100, 1000)]
    assert sum(1 for a, b in zip(values, values[1:]) if b > a) <= 1

    q = IsotropicGaussian(sigma=0.5, d=16)
    d = 16
    cross_entropy = 0.5 * d * math.log(2 * math.pi) + 0.5 * d * q.sigma ** 2
    gap = abs(cross_entropy - models.closed_form_entropy(p))
    assert epsilon_profile(p, q, [1000], n_batches=100, seed=6)[1000] == pytest.approx(gap, rel=0.05)


def test_entropy_convergence_slopes():
    rows, slopes = entropy_convergence(IsotropicGaussian(d=16), [1_000, 10_000, 100_000], repeats=30, seed=7)
    assert len(rows) == 6
    for slope in slopes.values():
        assert slope == pytest.approx(-0.5, abs=0.2)


def test_mode_paradox():
    p, q = IsotropicGaussian(d=16), IsotropicGaussian(sigma=0.5, d=16)
    inside, outside = mode_paradox(p, q, 5000, seed=8)
    assert outside > inside


def test_default_tests_skip_missing_latents(iso16):
    source = ExternalSource(
        train=_records(iso16.log_prob(models.sample(iso16, 800, 11)), "t"),
        in_dist=_records(iso16.log_prob(models.sample(iso16, 1200, 12)), "v"),
        dimension=16,
    )
    cfg = ExperimentConfig(external=source, m_values=(10,), repetitions=1, validation_size=600, test_size=600)
    assert not cfg.tests_explicit
    report = run_evaluation(cfg, show_progress=False)
    assert {r.test for r in report.rows} == {TYPICALITY, baselines.TTEST, baselines.KSTEST}

    named = ExperimentConfig(external=source, m_values=(10,), repetitions=1, validation_size=600, test_size=600,
                             tests=(TYPICALITY, baselines.ANNULUS))
    with pytest.raises(models.UnsupportedCapability):
        run_evaluation(named, show_progress=False)


def test_m_sweep_defaults_to_configured_m_values():
    report = m_sweep(_cfg(m_values=(2, 5), tests=(TYPICALITY,), repetitions=1), show_progress=False)
    assert sorted({r.M for r in report.rows}) == [2, 5]
