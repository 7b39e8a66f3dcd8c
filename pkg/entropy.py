#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
entropy.py — Estimadores da entropia H[p(x;θ)]
-----------------------------------------------

A entropia ancora a estatística de tipicidade ε̂. Três caminhos:

- closed_form    : fórmula exata (só família gaussiana).
- resubstitution : -média das log-verossimilhanças do conjunto de treino.
                   Padrão da calibração (detecção de OOD bem melhor na prática).
- monte_carlo    : -média de log p sobre S amostras do próprio modelo.

Nenhuma correção de viés é aplicada. Valores em nats.
"""

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

import config
import models
from logger import log_debug


class EntropyMethod(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    RESUBSTITUTION = "resubstitution"
    MONTE_CARLO = "monte_carlo"


# Nomes curtos aceitos pela CLI / config.ini
METHOD_ALIASES = {
    "closed": EntropyMethod.CLOSED_FORM,
    "closed_form": EntropyMethod.CLOSED_FORM,
    "resub": EntropyMethod.RESUBSTITUTION,
    "resubstitution": EntropyMethod.RESUBSTITUTION,
    "mc": EntropyMethod.MONTE_CARLO,
    "monte_carlo": EntropyMethod.MONTE_CARLO,
}


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    method: EntropyMethod
    n_used: int
    std_error: Optional[float] = None

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"Entropia não finita: {self.value}.")
        if self.method != EntropyMethod.CLOSED_FORM and self.n_used < 1:
            raise ValueError(f"Estimador {self.method.value} com n_used={self.n_used}.")

    def shifted(self, c: float) -> "EntropyEstimate":
        return EntropyEstimate(self.value + c, self.method, self.n_used, self.std_error)


def _nll_summary(nll: np.ndarray) -> tuple[float, Optional[float]]:
    n = nll.size
    value = math.fsum(nll) / n
    std_error = float(np.std(nll, ddof=1) / math.sqrt(n)) if n > 1 else None
    return value, std_error


def resubstitution_entropy(logliks: Sequence[float]) -> EntropyEstimate:
    """
    Ĥᴺ = -(1/N) Σ log p(xₙ) sobre o conjunto de treino.

    Soma com math.fsum: o resultado não depende da ordem da lista.
    """
    arr = np.asarray(logliks, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError("Lista de log-verossimilhanças vazia.")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Log-verossimilhanças com valores não finitos.")
    value, std_error = _nll_summary(-arr)
    return EntropyEstimate(value, EntropyMethod.RESUBSTITUTION, int(arr.size), std_error)


def monte_carlo_entropy(model, S: int, seed, chunk: Optional[int] = None) -> EntropyEstimate:
    """
    Ĥ = -(1/S) Σ log p(x̂ₛ), x̂ₛ ~ p.

    As amostras saem de um único gerador semeado, em blocos de `chunk`
    (memória limitada em d alto). Para gaussianas o fluxo coincide com
    sample(model, S, seed).
    """
    if not models.supports(model, "sample"):
        raise models.UnsupportedCapability(f"{model!r} não amostra: Monte-Carlo indisponível.")
    S = int(S)
    if S < 1:
        raise ValueError(f"S deve ser >= 1 (obtido {S}).")
    chunk = max(1, int(chunk or config.MC_CHUNK))

    rng = np.random.default_rng(seed)
    nll = np.empty(S, dtype=np.float64)
    for start in range(0, S, chunk):
        n = min(chunk, S - start)
        nll[start:start + n] = -np.atleast_1d(model.log_prob(model.draw(rng, n)))
    value, std_error = _nll_summary(nll)
    log_debug(f"Entropia Monte-Carlo: S={S} Ĥ={value:.6f} (ep={std_error})")
    return EntropyEstimate(value, EntropyMethod.MONTE_CARLO, S, std_error)


def closed_form_estimate(model) -> EntropyEstimate:
    return EntropyEstimate(models.closed_form_entropy(model), EntropyMethod.CLOSED_FORM, 0, 0.0)


def estimate_entropy(method, model=None, train_logliks: Optional[Sequence[float]] = None,
                     S: Optional[int] = None, seed=None) -> EntropyEstimate:
    """
    Despacho usado pela CLI e pelo harness. `method` aceita os nomes curtos
    (resub, mc, closed) ou um EntropyMethod.
    """
    key = method.value if isinstance(method, EntropyMethod) else str(method).lower()
    if key not in METHOD_ALIASES:
        raise ValueError(f"Método de entropia desconhecido: {method!r} (use resub, mc ou closed).")
    resolved = METHOD_ALIASES[key]

    if resolved == EntropyMethod.RESUBSTITUTION:
        if train_logliks is None:
            raise ValueError("Resubstituição exige as log-verossimilhanças de treino.")
        return resubstitution_entropy(train_logliks)
    if model is None:
        raise ValueError(f"Método {resolved.value} exige um modelo analítico.")
    if resolved == EntropyMethod.MONTE_CARLO:
        return monte_carlo_entropy(model, S or config.MC_SAMPLES, config.DEFAULT_SEED if seed is None else seed)
    return closed_form_estimate(model)
