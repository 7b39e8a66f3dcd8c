#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
reproduce_acceptance.py
-----------------------
Roda as dez verificações de bancada do Tipico com modelos analíticos e
imprime uma tabela PASSOU/FALHOU com o tempo de cada uma:

 1) mínimo do annulus em σ√d
 2) paradoxo da moda (verossimilhança alta fora da distribuição)
 3) controle do erro tipo I (tipicidade, annulus, t, KS)
 4) limiar bootstrap = oráculo ordenar-e-indexar
 5) convergência das entropias (inclinação -1/2)
 6) cobertura do conjunto típico em d=1000
 7) kernel de Stein: forma fechada e identidade de Stein
 8) propriedades do MMD
 9) consistência (mediana de ε̂ e poder em M=100)
10) determinismo de calibrate/simulate

Uso:
    python scripts/reproduce_acceptance.py [--only 1,4,8]
"""

import argparse
import math
import sys
import tempfile
import time
from decimal import Decimal
from pathlib import Path

import numpy as np
from rich.table import Table

# Garante import dos módulos compartilhados quando executado via scripts/
PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

import baselines
import harness
import models
import tipico
from logger import console, log_erro, log_info, log_ok
from models import IsotropicGaussian
from records import LikelihoodRecord, write_records
from typicality import TYPICALITY, bootstrap_threshold

P16 = IsotropicGaussian(d=16)
Q16 = IsotropicGaussian(sigma=0.5, d=16)


def check_annulus() -> str:
    radii = [0.25 * i for i in range(33)]
    curve = harness.annulus_sweep(1.0, 16, radii, M=16, seed=0)
    best = min(curve, key=lambda t: t[1])[0]
    assert abs(best - 4.0) <= 0.25, best
    return f"mínimo em r={best}"


def check_mode_paradox() -> str:
    inside, outside = harness.mode_paradox(P16, Q16, 10_000, seed=1)
    assert outside > inside, (inside, outside)
    report = harness.evaluate_models(P16, {"q": Q16}, m_values=(10,), tests=(TYPICALITY,), repetitions=1)
    q_rate = report.fraction(TYPICALITY, "q", 10)
    p_rate = report.fraction(TYPICALITY, harness.IN_DIST, 10)
    assert q_rate >= 0.99 and p_rate <= 0.05, (q_rate, p_rate)
    return f"E_q[log p]={outside:.2f} > E_p[log p]={inside:.2f}; rejeição q={q_rate:.3f} p={p_rate:.3f}"


def check_type_one() -> str:
    tests = (TYPICALITY, baselines.ANNULUS, baselines.TTEST, baselines.KSTEST)
    report = harness.evaluate_models(P16, {}, m_values=(2, 10, 25), tests=tests, repetitions=10)
    worst = max(report.rows, key=lambda r: r.mean_fraction)
    assert worst.mean_fraction <= 0.05, worst
    return f"pior caso {worst.test} M={worst.M}: {worst.mean_fraction:.4f}"


def check_threshold_oracle() -> str:
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
        assert cal.threshold == sorted(stats)[math.ceil(Decimal(repr(alpha)) * K) - 1], trial
    return "100 configurações idênticas bit a bit"


def check_entropy_convergence() -> str:
    _, slopes = harness.entropy_convergence(P16, [1_000, 10_000, 100_000], repeats=30, seed=7)
    assert all(abs(s + 0.5) <= 0.2 for s in slopes.values()), slopes
    return ", ".join(f"{m}={s:.3f}" for m, s in slopes.items())


def check_coverage() -> str:
    eps, cov = harness.typical_set_coverage(IsotropicGaussian(d=1000), M=64, n_batches=500, seed=4)
    assert cov >= 0.95, cov
    return f"ε={eps:.4f} cobertura={cov:.3f}"


def check_stein() -> str:
    p = IsotropicGaussian(d=1)
    rng = np.random.default_rng(5)
    x, y = rng.normal(size=1000), rng.normal(size=1000)
    u = np.diag(baselines.stein_kernel(p, x[:, None], y[:, None]))
    err = float(np.max(np.abs(u - (x ** 2 - 1) * (y ** 2 - 1))))
    assert err <= 1e-10, err
    xs = models.sample(p, 1_000_000, seed=6)
    v = baselines.stein_kernel(p, xs, [[0.7]])[:, 0]
    z = abs(v.mean()) / (v.std(ddof=1) / math.sqrt(v.size))
    assert z < 3, z
    return f"erro máx {err:.1e}; identidade de Stein z={z:.2f}"


def check_mmd() -> str:
    rng = np.random.default_rng(3)
    for _ in range(1000):
        X = baselines.ScoreSet(rng.normal(size=(int(rng.integers(1, 8)), 3)))
        Y = baselines.ScoreSet(rng.normal(size=(int(rng.integers(1, 8)), 3)))
        assert baselines.mmd_statistic(X, Y) >= 0
        assert baselines.mmd_statistic(X, X) == 0.0
    s1, s2 = rng.normal(size=(1, 3)), rng.normal(size=(1, 3))
    single = baselines.mmd_statistic(baselines.ScoreSet(s1), baselines.ScoreSet(s2))
    assert abs(single - float(np.sum((s1 - s2) ** 2))) <= 1e-12
    return "não negativo, zero em X=Y, singleton exato"


def check_consistency() -> str:
    prof = harness.epsilon_profile(P16, P16, [1, 10, 100, 1000], n_batches=100, seed=5)
    values = [prof[M] for M in (1, 10, 100, 1000)]
    assert sum(1 for a, b in zip(values, values[1:]) if b > a) <= 1, values
    report = harness.evaluate_models(P16, {"q": Q16}, m_values=(100,), tests=(TYPICALITY,), repetitions=1)
    power = report.fraction(TYPICALITY, "q", 100)
    assert power >= 0.99, power
    return "medianas " + ", ".join(f"{v:.3f}" for v in values) + f"; poder M=100 {power:.2f}"


def check_determinism() -> str:
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        rng = np.random.default_rng(0)
        for name in ("train", "val"):
            ll = P16.log_prob(P16.draw(rng, 2000))
            write_records(tmp / f"{name}.csv", [LikelihoodRecord(f"{name}{i}", float(v)) for i, v in enumerate(ll)])
        outs = []
        for run in ("a", "b"):
            cal = tmp / f"cal_{run}.json"
            sweep = tmp / f"sweep_{run}.csv"
            assert tipico.main(["calibrate", "--train", str(tmp / "train.csv"), "--val", str(tmp / "val.csv"),
                                "--M", "10", "--out", str(cal)]) == 0
            assert tipico.main(["simulate", "annulus-sweep", "--out", str(sweep)]) == 0
            outs.append((cal.read_bytes(), sweep.read_bytes()))
        assert outs[0] == outs[1]
    return "artefatos idênticos byte a byte"


CHECKS = [
    (1, "Mínimo do annulus", check_annulus),
    (2, "Paradoxo da moda", check_mode_paradox),
    (3, "Erro tipo I", check_type_one),
    (4, "Oráculo do limiar", check_threshold_oracle),
    (5, "Convergência da entropia", check_entropy_convergence),
    (6, "Cobertura do conjunto típico", check_coverage),
    (7, "Kernel de Stein", check_stein),
    (8, "Propriedades do MMD", check_mmd),
    (9, "Consistência", check_consistency),
    (10, "Determinismo", check_determinism),
]


def main() -> int:
    parser = argparse.ArgumentParser(description="Verificações de bancada do Tipico.")
    parser.add_argument("--only", help="Números das verificações, separados por vírgula.")
    args = parser.parse_args()
    selected = {int(t) for t in args.only.split(",")} if args.only else {n for n, _, _ in CHECKS}

    table = Table(title="Tipico — verificações")
    for col in ("#", "Verificação", "Resultado", "Tempo (s)", "Detalhe"):
        table.add_column(col)

    falhas = 0
    for n, nome, fn in CHECKS:
        if n not in selected:
            continue
        log_info(f"[{n}] {nome}...")
        t0 = time.perf_counter()
        try:
            detail, ok = fn(), True
        except AssertionError as e:
            detail, ok = f"falhou: {e}", False
            falhas += 1
        elapsed = time.perf_counter() - t0
        (log_ok if ok else log_erro)(f"[{n}] {nome}: {detail}")
        table.add_row(str(n), nome, "[green]PASSOU[/green]" if ok else "[red]FALHOU[/red]", f"{elapsed:.1f}", detail)

    console.print(table)
    return 1 if falhas else 0


if __name__ == "__main__":
    sys.exit(main())
