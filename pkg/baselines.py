#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
baselines.py — Testes de comparação
-----------------------------------

Cinco baselines para o teste de tipicidade:

1. t_test     : Welch sobre log-verossimilhanças (referência = treino).
2. ks_test    : Kolmogorov-Smirnov de duas amostras sobre as EDFs das
                log-verossimilhanças (valor crítico assintótico).
3. mmd        : MMD² enviesado (V-estatística) com o kernel de score
                k'(x, x') = ∇ₓ log p(x)ᵀ ∇ₓ' log p(x'), sem parâmetros.
4. ksd        : Discrepância de Stein kernelizada com o mesmo kernel; exige
                score e Hessiana exatos (só modelos analíticos).
5. annulus    : distância média dos latentes à esfera de raio √d.

MMD, KSD e annulus usam o mesmo bootstrap da validação (bootstrap_baseline);
t e KS têm valores críticos próprios e não usam gerador aleatório.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

import models
from typicality import Calibration, generic_bootstrap_threshold

MMD = "mmd"
KSD = "ksd"
ANNULUS = "annulus"
TTEST = "ttest"
KSTEST = "kstest"

BOOTSTRAP_BASELINES = (MMD, KSD, ANNULUS)


@dataclass(frozen=True)
class TwoSampleResult:
    statistic: float
    critical_value: float
    reject: bool
    test_name: str
    p_value: Optional[float] = None


class ScoreSet:
    """
    Scores ∇ₓ log p(x), um vetor por exemplo.
    """

    def __init__(self, scores):
        arr = np.asarray(scores, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise ValueError(f"ScoreSet precisa de matriz (n, d) não vazia (obtido shape {arr.shape}).")
        if not np.all(np.isfinite(arr)):
            raise ValueError("ScoreSet com entradas não finitas.")
        self.scores = arr

    @property
    def dimension(self) -> int:
        return int(self.scores.shape[1])

    def __len__(self):
        return int(self.scores.shape[0])

    def take(self, idx) -> "ScoreSet":
        return ScoreSet(self.scores[idx])


def _sample(values, nome: str, minimo: int) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size < minimo:
        raise ValueError(f"{nome}: pelo menos {minimo} valores (obtido {arr.size}).")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{nome}: valores não finitos.")
    return arr


# ============================================================
# 1. Welch t-test
# ============================================================

def t_test(reference_logliks, batch_logliks, alpha: float) -> TwoSampleResult:
    """
    Welch: t = (x̄ - ȳ) / √(s²ₓ/n + s²ᵧ/m), graus de liberdade de
    Welch-Satterthwaite; rejeita se |t| > t_{1-(1-α)/2, ν}.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha deve estar em (0, 1) (obtido {alpha}).")
    a = _sample(reference_logliks, "referência", 2)
    b = _sample(batch_logliks, "lote", 2)
    level = 1.0 - alpha

    if np.ptp(a) == 0.0 and np.ptp(b) == 0.0:
        # scipy devolve nan com variância nula nas duas amostras
        diff = float(a[0]) - float(b[0])
        t = 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        df = math.inf
        p_value = 1.0 if diff == 0.0 else 0.0
    else:
        res = stats.ttest_ind(a, b, equal_var=False)
        t, df, p_value = float(res.statistic), float(res.df), float(res.pvalue)

    critical = float(stats.t.ppf(1.0 - level / 2.0, df))
    return TwoSampleResult(float(t), critical, bool(abs(t) > critical), TTEST, p_value)


# ============================================================
# 2. Kolmogorov-Smirnov
# ============================================================

def ks_statistic(reference_logliks, batch_logliks) -> float:
    """
    D = sup |EDF₁ - EDF₂|, avaliado em todos os pontos das duas amostras.
    """
    a = np.sort(_sample(reference_logliks, "referência", 1))
    b = np.sort(_sample(batch_logliks, "lote", 1))
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_test(reference_logliks, batch_logliks, alpha: float) -> TwoSampleResult:
    """
    Rejeita se D > c(α)·√((n+m)/(nm)), c(α) = √(-ln(nível/2)/2), nível = 1-α.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha deve estar em (0, 1) (obtido {alpha}).")
    D = ks_statistic(reference_logliks, batch_logliks)
    n = np.asarray(reference_logliks).size
    m = np.asarray(batch_logliks).size
    level = 1.0 - alpha
    c_alpha = math.sqrt(-math.log(level / 2.0) / 2.0)
    critical = c_alpha * math.sqrt((n + m) / (n * m))
    p_value = float(stats.kstwobign.sf(D * math.sqrt(n * m / (n + m))))
    return TwoSampleResult(D, critical, bool(D > critical), KSTEST, p_value)


# ============================================================
# 3. MMD com kernel de score
# ============================================================

def score_gram(X: ScoreSet, Y: ScoreSet) -> np.ndarray:
    """Gram do kernel k'(x, y) = sₓᵀ sᵧ."""
    return X.scores @ Y.scores.T


def _mean_embedding(S: ScoreSet) -> np.ndarray:
    # fsum por coluna: soma corretamente arredondada, independente da ordem
    return np.array([math.fsum(col) for col in S.scores.T]) / len(S)


def mmd_statistic(X_scores: ScoreSet, Y_scores: ScoreSet) -> float:
    """
    MMD² enviesado: mean(K_XX) + mean(K_YY) - 2·mean(K_XY).

    Com o kernel linear nos scores isso é exatamente ||s̄_X - s̄_Y||², forma
    usada aqui: não negativa por construção, simétrica e invariante à
    permutação dentro de cada conjunto.
    """
    if X_scores.dimension != Y_scores.dimension:
        raise ValueError(f"Dimensões diferentes: {X_scores.dimension} vs {Y_scores.dimension}.")
    delta = _mean_embedding(X_scores) - _mean_embedding(Y_scores)
    return max(math.fsum(delta * delta), 0.0)


def select_reference(n: int, R: int, seed: int) -> np.ndarray:
    """
    Índices (ordenados) do subconjunto de referência do MMD, sem reposição.
    """
    if n < 1 or R < 1:
        raise ValueError(f"Referência inválida: n={n}, R={R}.")
    rng = np.random.default_rng([int(seed), 0x4D4D44])
    return np.sort(rng.choice(n, size=min(R, n), replace=False))


# ============================================================
# 4. KSD com kernel de score
# ============================================================

def stein_kernel(model, X, Y) -> np.ndarray:
    """
    Matriz u_p(xᵢ, yⱼ) com k(x, y) = s(x)ᵀ s(y):

        u_p = s(x)ᵀ k s(y) + s(x)ᵀ ∇_y k + s(y)ᵀ ∇ₓ k + tr(∇ₓ∇_y k)
            = (sₓᵀsᵧ)² + sₓᵀ H(y) sₓ + sᵧᵀ H(x) sᵧ + tr(H(x) H(y))

    pois ∇ₓk = H(x) s(y) e ∇_y k = H(y) s(x).
    """
    if not (models.supports(model, "score") and models.supports(model, "hessian")):
        raise models.UnsupportedCapability(f"{model!r} sem score/Hessiana: KSD indisponível.")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape[0] == 0 or Y.shape[0] == 0:
        raise ValueError("KSD precisa de pelo menos um ponto.")

    sx = np.atleast_2d(models.score(model, X))
    sy = np.atleast_2d(models.score(model, Y))
    Hx = models.hessians(model, X)
    Hy = models.hessians(model, Y)

    term_ss = (sx @ sy.T) ** 2
    term_x = np.einsum("id,jde,ie->ij", sx, Hy, sx)   # sₓᵀ H(y) sₓ
    term_y = np.einsum("jd,ide,je->ij", sy, Hx, sy)   # sᵧᵀ H(x) sᵧ
    term_tr = np.einsum("ide,jed->ij", Hx, Hy)         # tr(H(x) H(y))
    return term_ss + term_x + term_y + term_tr


def ksd_statistic(model, X) -> float:
    """V-estatística: média de u_p sobre todos os pares ordenados."""
    return float(np.mean(stein_kernel(model, X, X)))


# ============================================================
# 5. Annulus
# ============================================================

def annulus_statistic(latent_sqnorms, d: int) -> float:
    """
    (1/M) Σ | ||zₘ|| - √d |
    """
    arr = np.asarray(latent_sqnorms, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError("Lote de latentes vazio.")
    if int(d) < 1:
        raise ValueError(f"d deve ser >= 1 (obtido {d}).")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError("Normas quadradas devem ser finitas e >= 0.")
    return math.fsum(np.abs(np.sqrt(arr) - math.sqrt(d))) / arr.size


# ============================================================
# Bootstrap das baselines
# ============================================================

def baseline_statistic_fn(statistic: str, *, d: Optional[int] = None, reference: Optional[ScoreSet] = None,
                          model=None):
    """
    Função lote → estatística usada tanto na calibração quanto no teste online.

    Lotes: normas quadradas (annulus), matriz de scores (mmd), pontos (ksd).
    """
    if statistic == ANNULUS:
        if d is None:
            raise ValueError("annulus exige a dimensão d.")
        return lambda batch: annulus_statistic(batch, d)
    if statistic == MMD:
        if reference is None:
            raise ValueError("mmd exige o conjunto de referência (scores de treino).")
        return lambda batch: mmd_statistic(ScoreSet(batch), reference)
    if statistic == KSD:
        if model is None:
            raise ValueError("ksd exige o modelo.")
        return lambda batch: ksd_statistic(model, batch)
    raise ValueError(f"Baseline sem bootstrap: {statistic!r} (use {', '.join(BOOTSTRAP_BASELINES)}).")


def bootstrap_baseline(statistic: str, validation, M: int, K: int, alpha: float, seed: int, *,
                       d: Optional[int] = None, reference: Optional[ScoreSet] = None, model=None,
                       metadata: Optional[dict] = None, workers: Optional[int] = None) -> Calibration:
    """
    Calibra MMD/KSD/annulus com o bootstrap da validação.

    MMD: cada lote bootstrap é comparado com um subconjunto FIXO de scores de
    treino (`reference`, tamanho R), o mesmo usado no teste online.
    """
    fn = baseline_statistic_fn(statistic, d=d, reference=reference, model=model)
    meta = dict(metadata or {})
    if statistic == ANNULUS:
        meta.setdefault("d", int(d))
    if statistic == MMD:
        meta.setdefault("reference_size", len(reference))
        meta.setdefault("pairing", "bootstrap-batch-vs-fixed-train-reference")
    data = validation.scores if isinstance(validation, ScoreSet) else np.asarray(validation, dtype=np.float64)
    return generic_bootstrap_threshold(fn, data, M, K, alpha, seed, test_name=statistic, metadata=meta,
                                       workers=workers)
