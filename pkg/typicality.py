#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
typicality.py — Teste bootstrap de tipicidade
---------------------------------------------

Decide se um lote X̃ de M entradas pertence ao conjunto típico do modelo.

OFFLINE (antes da implantação):
1. Estima a entropia Ĥ (entropy.py; padrão: resubstituição no treino).
2. Sorteia K lotes de tamanho M, com reposição, do conjunto de validação.
3. Calcula ε̂ₖ = | -(1/M) Σ log p(x'ₖₘ) - Ĥ | para cada lote.
4. Limiar ε^M_α = ⌈αK⌉-ésima estatística de ordem dos ε̂ₖ (sem interpolação).

ONLINE:
   ε̂(X̃) > ε^M_α  →  OOD   (desigualdade estrita; empate é in-distribution)

O limiar depende do par (M, α). Usar a calibração de outro M invalida o
teste: por padrão isso é erro (BatchSizeMismatch); o modo "nearest-M" é
opt-in e escolhe a calibração de M mais próximo.

Réplicas bootstrap usam sub-fluxos derivados de (seed, k), portanto o
resultado não depende da ordem de avaliação nem do número de threads.

ARTEFATO JSON:
    {test_name, entropy, entropy_method, entropy_n_used, entropy_std_error,
     M, alpha, K, threshold, seed, quantile_rule, bootstrap_stats, metadata}
"""

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

import config
from entropy import EntropyEstimate, EntropyMethod
from logger import log_aviso, log_debug

TYPICALITY = "typicality"


class BatchSizeMismatch(ValueError):
    """Lote com M diferente do M calibrado."""


class CalibrationParseError(ValueError):
    """Artefato de calibração malformado."""


# ============================================================
# Quantil (estatística de ordem)
# ============================================================

def order_statistic_index(alpha: float, K: int) -> int:
    """
    Índice (1-based) ⌈αK⌉, calculado em aritmética exata sobre a
    representação decimal de α (0.7 * 10 → 7, não 8).
    """
    idx = math.ceil(Fraction(repr(float(alpha))) * int(K))
    return min(max(idx, 1), int(K))


def threshold_from_stats(stats: Sequence[float], alpha: float) -> float:
    ordered = sorted(float(s) for s in stats)
    return ordered[order_statistic_index(alpha, len(ordered)) - 1]


# ============================================================
# Tipos
# ============================================================

@dataclass(frozen=True)
class Calibration:
    entropy: Optional[EntropyEstimate]
    M: int
    alpha: float
    K: int
    threshold: float
    seed: int
    bootstrap_stats: tuple[float, ...]
    quantile_rule: str = config.QUANTILE_RULE
    test_name: str = TYPICALITY
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.K < 1 or len(self.bootstrap_stats) != self.K:
            raise ValueError(f"K={self.K} incompatível com {len(self.bootstrap_stats)} estatísticas bootstrap.")
        if self.M < 1:
            raise ValueError(f"M deve ser >= 1 (obtido {self.M}).")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha deve estar em (0, 1) (obtido {self.alpha}).")
        if not all(math.isfinite(s) and s >= 0 for s in self.bootstrap_stats):
            raise ValueError("Estatísticas bootstrap devem ser finitas e >= 0.")
        if self.quantile_rule != config.QUANTILE_RULE:
            raise ValueError(f"Regra de quantil desconhecida: {self.quantile_rule!r}.")
        if self.threshold != threshold_from_stats(self.bootstrap_stats, self.alpha):
            raise ValueError("threshold não corresponde à estatística de ordem dos bootstrap_stats.")


@dataclass(frozen=True)
class TestVerdict:
    __test__ = False  # não é classe de teste do pytest

    statistic: float
    threshold: float
    is_ood: bool
    test_name: str
    batch_size: int

    def __post_init__(self):
        if self.is_ood != (self.statistic > self.threshold):
            raise ValueError("is_ood deve ser exatamente statistic > threshold.")


# ============================================================
# Estatística ε̂
# ============================================================

def _entropy_value(entropy: Union[EntropyEstimate, float]) -> float:
    return entropy.value if isinstance(entropy, EntropyEstimate) else float(entropy)


def _as_logliks(batch_logliks) -> np.ndarray:
    arr = np.asarray(batch_logliks, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError("Lote vazio.")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Lote com log-verossimilhanças não finitas.")
    return arr


def mean_nll(batch_logliks) -> float:
    arr = _as_logliks(batch_logliks)
    return -math.fsum(arr) / arr.size


def epsilon_hat(batch_logliks, entropy: Union[EntropyEstimate, float]) -> float:
    """
    ε̂ = | (1/M) Σ -log p(x̃ₘ) - Ĥ |
    """
    return abs(mean_nll(batch_logliks) - _entropy_value(entropy))


# ============================================================
# Bootstrap
# ============================================================

def _check_bootstrap_args(n: int, M: int, K: int, alpha: float, seed):
    if n < 1:
        raise ValueError("Conjunto de validação vazio.")
    if M < 1:
        raise ValueError(f"M deve ser >= 1 (obtido {M}).")
    if n < M:
        raise ValueError(f"Validação com {n} exemplos, menor que M={M}.")
    if K < 1:
        raise ValueError(f"K deve ser >= 1 (obtido {K}).")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha deve estar em (0, 1) (obtido {alpha}).")
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ValueError(f"seed deve ser inteiro >= 0 (obtido {seed!r}).")


def generic_bootstrap_threshold(statistic_fn: Callable, validation, M: int, K: int, alpha: float, seed: int,
                                *, test_name: str = "custom", entropy: Optional[EntropyEstimate] = None,
                                metadata: Optional[Mapping] = None, workers: Optional[int] = None) -> Calibration:
    """
    Bootstrap genérico: K lotes de tamanho M reamostrados com reposição de
    `validation` (indexado no eixo 0), estatística de cada lote e limiar pela
    regra ⌈αK⌉. `statistic_fn` deve ser pura.

    A réplica k usa o gerador default_rng([seed, k]).
    """
    data = validation if isinstance(validation, np.ndarray) else np.asarray(validation, dtype=np.float64)
    n = int(data.shape[0]) if data.ndim else 0
    M, K = int(M), int(K)
    _check_bootstrap_args(n, M, K, alpha, seed)

    def replicate(k: int) -> float:
        rng = np.random.default_rng([int(seed), k])
        idx = rng.integers(0, n, size=M)
        return float(statistic_fn(data[idx]))

    workers = workers or config.WORKERS
    if workers > 1 and K > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            stats = list(pool.map(replicate, range(K)))
    else:
        stats = [replicate(k) for k in range(K)]

    threshold = threshold_from_stats(stats, alpha)
    log_debug(f"[BOOTSTRAP] {test_name}: M={M} K={K} alpha={alpha} limiar={threshold:.6g}")
    return Calibration(
        entropy=entropy,
        M=M,
        alpha=float(alpha),
        K=K,
        threshold=threshold,
        seed=int(seed),
        bootstrap_stats=tuple(stats),
        test_name=test_name,
        metadata=dict(metadata or {}),
    )


def bootstrap_threshold(validation_logliks, entropy: EntropyEstimate, M: int, K: int, alpha: float, seed: int,
                        workers: Optional[int] = None) -> Calibration:
    """
    Calibração do teste de tipicidade (passos 2-4 do procedimento offline).
    """
    data = _as_logliks(validation_logliks)
    H = _entropy_value(entropy)
    # ε̂ direto sobre o array: evita revalidar cada réplica
    return generic_bootstrap_threshold(
        lambda batch: abs(-math.fsum(batch) / batch.size - H),
        data, M, K, alpha, seed,
        test_name=TYPICALITY, entropy=entropy, workers=workers,
    )


# ============================================================
# Decisão
# ============================================================

def select_calibration(calibrations: Sequence[Calibration], batch_size: int, nearest_m: bool = False) -> Calibration:
    """
    Escolhe a calibração cujo M coincide com o lote. Sem coincidência, só
    no modo nearest-M escolhe a de M mais próximo (empate → menor M).
    """
    cals = list(calibrations)
    if not cals:
        raise ValueError("Nenhuma calibração informada.")
    for cal in cals:
        if cal.M == batch_size:
            return cal
    if not nearest_m:
        disponiveis = ", ".join(str(c.M) for c in cals)
        raise BatchSizeMismatch(f"Lote de tamanho {batch_size} sem calibração (M calibrados: {disponiveis}).")
    chosen = min(cals, key=lambda c: (abs(c.M - batch_size), c.M))
    log_aviso(f"[NEAREST-M] Lote de tamanho {batch_size} decidido com a calibração M={chosen.M}.")
    return chosen


def decide_statistic(statistic: float, calibration: Calibration, batch_size: int) -> TestVerdict:
    statistic = float(statistic)
    return TestVerdict(
        statistic=statistic,
        threshold=calibration.threshold,
        is_ood=statistic > calibration.threshold,
        test_name=calibration.test_name,
        batch_size=int(batch_size),
    )


def decide(batch_logliks, calibration: Union[Calibration, Sequence[Calibration]], nearest_m: bool = False) -> TestVerdict:
    """
    Decisão online: OOD se ε̂(lote) > ε^M_α.

    `calibration` pode ser uma lista (uma por M); com nearest_m=True, lotes
    sem M calibrado usam a calibração de M mais próximo.
    """
    arr = _as_logliks(batch_logliks)
    if isinstance(calibration, Calibration):
        if calibration.M != arr.size:
            if not nearest_m:
                raise BatchSizeMismatch(f"Lote de tamanho {arr.size}, calibração para M={calibration.M}.")
            log_aviso(f"[NEAREST-M] Lote de tamanho {arr.size} decidido com a calibração M={calibration.M}.")
        cal = calibration
    else:
        cal = select_calibration(calibration, arr.size, nearest_m=nearest_m)

    if cal.test_name != TYPICALITY or cal.entropy is None:
        raise ValueError(f"Calibração '{cal.test_name}' não é do teste de tipicidade.")
    return decide_statistic(epsilon_hat(arr, cal.entropy), cal, arr.size)


def split_batches(n: int, M: int) -> list[slice]:
    """
    Fatias consecutivas e disjuntas de tamanho M; o resto é descartado.
    """
    if M < 1:
        raise ValueError(f"M deve ser >= 1 (obtido {M}).")
    return [slice(i, i + M) for i in range(0, n - M + 1, M)]


# ============================================================
# Artefato JSON
# ============================================================

def calibration_to_dict(cal: Calibration) -> dict:
    ent = cal.entropy
    return {
        "test_name": cal.test_name,
        "entropy": None if ent is None else ent.value,
        "entropy_method": None if ent is None else ent.method.value,
        "entropy_n_used": None if ent is None else ent.n_used,
        "entropy_std_error": None if ent is None else ent.std_error,
        "M": cal.M,
        "alpha": cal.alpha,
        "K": cal.K,
        "threshold": cal.threshold,
        "seed": cal.seed,
        "quantile_rule": cal.quantile_rule,
        "bootstrap_stats": list(cal.bootstrap_stats),
        "metadata": dict(cal.metadata),
    }


def calibration_from_dict(data: Mapping) -> Calibration:
    try:
        entropy = None
        if data.get("entropy") is not None:
            entropy = EntropyEstimate(
                value=float(data["entropy"]),
                method=EntropyMethod(data["entropy_method"]),
                n_used=int(data.get("entropy_n_used") or 0),
                std_error=data.get("entropy_std_error"),
            )
        return Calibration(
            entropy=entropy,
            M=int(data["M"]),
            alpha=float(data["alpha"]),
            K=int(data["K"]),
            threshold=float(data["threshold"]),
            seed=int(data["seed"]),
            bootstrap_stats=tuple(float(s) for s in data["bootstrap_stats"]),
            quantile_rule=data.get("quantile_rule", config.QUANTILE_RULE),
            test_name=data.get("test_name", TYPICALITY),
            metadata=dict(data.get("metadata") or {}),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise CalibrationParseError(f"Calibração inválida: {e}") from None


def dumps_calibration(cal: Calibration) -> str:
    # json usa repr() dos floats: round-trip exato em precisão binária total
    return json.dumps(calibration_to_dict(cal), indent=2, ensure_ascii=False) + "\n"


def save_calibration(path, cal: Calibration) -> Path:
    final = Path(path)
    tmp = final.with_name(final.name + ".tmp")
    tmp.write_text(dumps_calibration(cal), encoding="utf-8")
    os.replace(tmp, final)
    return final


def load_calibration(path) -> Calibration:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"Calibração não encontrada: {p}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CalibrationParseError(f"{p.name}: JSON inválido ({e}).") from None
    if not isinstance(data, dict):
        raise CalibrationParseError(f"{p.name}: objeto JSON esperado.")
    return calibration_from_dict(data)
