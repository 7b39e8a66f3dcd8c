#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
models.py — Modelos de verossimilhança
---------------------------------------

Fontes de log-densidade usadas pelo teste de tipicidade:

- IsotropicGaussian / DiagonalGaussian: densidades exatas (oráculos analíticos),
  com amostragem, entropia fechada, score ∇ₓ log p e produto Hessiana-vetor.
- GaussianMixture: alternativa q para experimentos de consistência. Não tem
  entropia em forma fechada (só estimadores, ver entropy.py).
- ExternalModel: verossimilhanças pré-computadas de um modelo generativo
  externo (arquivo CSV, ver records.py). Não amostra nem fornece Hessiana.

Todas as densidades e entropias são em nats.

FUNÇÕES DE CAPACIDADE (despacho por modelo):
- log_prob(model, x)
- sample(model, n, seed)
- closed_form_entropy(model)
- score(model, x)
- hessian_apply(model, x, v)
- latent_sqnorm(model, x)

Capacidade ausente → UnsupportedCapability.

Amostragem: numpy.random.Generator (PCG64) semeado explicitamente por chamada,
normais pelo método ziggurat de `standard_normal`. Mesma semente, mesma saída.
Os modelos são imutáveis depois de construídos.
"""

import math
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from records import LikelihoodRecord, RecordParseError, read_records, write_records

LOG_2PI = math.log(2.0 * math.pi)


class UnsupportedCapability(NotImplementedError):
    """O modelo não oferece a operação pedida (ex: amostrar de um ExternalModel)."""


# ============================================================
# Validação de entradas
# ============================================================

def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def _as_points(x, d: int) -> tuple[np.ndarray, bool]:
    """
    Normaliza x para matriz (n, d). Retorna (matriz, era_vetor_unico).
    """
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim <= 1
    if single:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != d:
        raise ValueError(f"Dimensão incompatível: esperado d={d}, obtido shape {np.shape(x)}.")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Entrada com valores não finitos.")
    return arr, single


def _unwrap(values: np.ndarray, single: bool):
    if single:
        return float(values[0]) if values.ndim == 1 else values[0]
    return values


# ============================================================
# Gaussianas
# ============================================================

class DiagonalGaussian:
    """
    N(μ, diag(σ²)). Base de toda a família gaussiana.
    """

    capabilities = frozenset({"log_prob", "sample", "entropy", "score", "hessian", "latent"})

    def __init__(self, mean, sigmas):
        mean = np.atleast_1d(np.asarray(mean, dtype=np.float64)).ravel()
        sigmas = np.atleast_1d(np.asarray(sigmas, dtype=np.float64)).ravel()
        if mean.size == 0:
            raise ValueError("Média vazia: dimensão deve ser >= 1.")
        if mean.shape != sigmas.shape:
            raise ValueError(f"Comprimentos diferentes: mean={mean.size}, sigmas={sigmas.size}.")
        if not np.all(np.isfinite(mean)):
            raise ValueError("Média com valores não finitos.")
        if not np.all(np.isfinite(sigmas)) or np.any(sigmas <= 0):
            raise ValueError(f"Todos os sigmas devem ser finitos e > 0 (obtido {sigmas.tolist()}).")
        self.mean = _frozen(mean)
        self.sigmas = _frozen(sigmas)
        self._log_norm = -0.5 * self.d * LOG_2PI - float(np.sum(np.log(self.sigmas)))

    @property
    def d(self) -> int:
        return int(self.mean.size)

    def __repr__(self):
        return f"DiagonalGaussian(d={self.d})"

    def _standardize(self, x) -> tuple[np.ndarray, bool]:
        pts, single = _as_points(x, self.d)
        return (pts - self.mean) / self.sigmas, single

    def log_prob(self, x):
        z, single = self._standardize(x)
        return _unwrap(self._log_norm - 0.5 * np.sum(z * z, axis=1), single)

    def score(self, x):
        pts, single = _as_points(x, self.d)
        return _unwrap(-(pts - self.mean) / (self.sigmas ** 2), single)

    def hessian_apply(self, x, v):
        # Hessiana constante: -diag(1/σ²)
        _as_points(x, self.d)
        vec = np.asarray(v, dtype=np.float64)
        if vec.shape[-1] != self.d:
            raise ValueError(f"Vetor v com dimensão {vec.shape[-1]}, esperado {self.d}.")
        return -vec / (self.sigmas ** 2)

    def entropy(self) -> float:
        return float(np.sum(np.log(self.sigmas))) + 0.5 * self.d * (1.0 + LOG_2PI)

    def latent_sqnorm(self, x):
        z, single = self._standardize(x)
        return _unwrap(np.sum(z * z, axis=1), single)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.mean + self.sigmas * rng.standard_normal((n, self.d))


class IsotropicGaussian(DiagonalGaussian):
    """
    N(μ, σ²I). Exemplo do anel gaussiano: a massa se concentra em ||x-μ|| ≈ σ√d.
    """

    def __init__(self, mean=0.0, sigma: float = 1.0, d: Optional[int] = None):
        mean_arr = np.atleast_1d(np.asarray(mean, dtype=np.float64)).ravel()
        if d is None:
            d = mean_arr.size
        if int(d) < 1:
            raise ValueError(f"Dimensão deve ser >= 1 (obtido {d}).")
        if mean_arr.size == 1 and d > 1:
            mean_arr = np.full(int(d), mean_arr[0])
        if mean_arr.size != int(d):
            raise ValueError(f"len(mean)={mean_arr.size} difere de d={d}.")
        if not (math.isfinite(sigma) and sigma > 0):
            raise ValueError(f"sigma deve ser > 0 (obtido {sigma}).")
        super().__init__(mean_arr, np.full(int(d), float(sigma)))
        self.sigma = float(sigma)

    def __repr__(self):
        return f"IsotropicGaussian(d={self.d}, sigma={self.sigma!r})"

    def entropy(self) -> float:
        return self.d * math.log(self.sigma) + 0.5 * self.d * (1.0 + LOG_2PI)


# ============================================================
# Mistura
# ============================================================

class GaussianMixture:
    """
    Σₖ wₖ N(μₖ, diag(σₖ²)). Sem entropia fechada.
    """

    capabilities = frozenset({"log_prob", "sample", "score", "hessian"})

    def __init__(self, weights, components: Sequence[DiagonalGaussian]):
        w = np.asarray(weights, dtype=np.float64).ravel()
        comps = list(components)
        if not comps or w.size != len(comps):
            raise ValueError(f"{w.size} pesos para {len(comps)} componentes.")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("Pesos devem ser finitos e não negativos.")
        if abs(math.fsum(w) - 1.0) > 1e-12:
            raise ValueError(f"Pesos devem somar 1 (soma={math.fsum(w)!r}).")
        dims = {c.d for c in comps}
        if len(dims) != 1:
            raise ValueError(f"Componentes com dimensões diferentes: {sorted(dims)}.")
        self.weights = _frozen(w)
        self.components = tuple(comps)
        with np.errstate(divide="ignore"):
            self._log_w = np.log(self.weights)
        self._means = np.stack([c.mean for c in comps])
        self._sigmas = np.stack([c.sigmas for c in comps])

    @property
    def d(self) -> int:
        return self.components[0].d

    def __repr__(self):
        return f"GaussianMixture(k={len(self.components)}, d={self.d})"

    def _component_terms(self, pts: np.ndarray) -> np.ndarray:
        # (k, n): log wₖ + log Nₖ(x)
        return np.stack([lw + c.log_prob(pts) for lw, c in zip(self._log_w, self.components)])

    def log_prob(self, x):
        pts, single = _as_points(x, self.d)
        return _unwrap(logsumexp(self._component_terms(pts), axis=0), single)

    def _responsibilities(self, pts: np.ndarray) -> np.ndarray:
        terms = self._component_terms(pts)
        return np.exp(terms - logsumexp(terms, axis=0))

    def score(self, x):
        pts, single = _as_points(x, self.d)
        resp = self._responsibilities(pts)
        comp_scores = np.stack([c.score(pts) for c in self.components])   # (k, n, d)
        return _unwrap(np.einsum("kn,knd->nd", resp, comp_scores), single)

    def hessian_apply(self, x, v):
        # ∇² log p = Σₖ rₖ (Hₖ + sₖsₖᵀ) − s sᵀ
        pts, single = _as_points(x, self.d)
        vec = np.broadcast_to(np.asarray(v, dtype=np.float64), pts.shape)
        resp = self._responsibilities(pts)
        comp_scores = np.stack([c.score(pts) for c in self.components])
        s = np.einsum("kn,knd->nd", resp, comp_scores)
        out = np.zeros_like(pts)
        for r_k, s_k, comp in zip(resp, comp_scores, self.components):
            out += r_k[:, None] * (comp.hessian_apply(pts, vec) + s_k * np.sum(s_k * vec, axis=1, keepdims=True))
        out -= s * np.sum(s * vec, axis=1, keepdims=True)
        return _unwrap(out, single and np.ndim(v) == 1)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        labels = rng.choice(len(self.components), size=n, p=self.weights)
        z = rng.standard_normal((n, self.d))
        return self._means[labels] + self._sigmas[labels] * z


# ============================================================
# Modelo externo (verossimilhanças pré-computadas)
# ============================================================

class ExternalModel:
    """
    Envelopa LikelihoodRecords de um modelo generativo treinado fora daqui.
    Os "pontos" são ids de registro.
    """

    def __init__(self, records: Sequence[LikelihoodRecord], dimension: Optional[int] = None):
        records = list(records)
        index = {}
        for i, r in enumerate(records):
            if r.id in index:
                raise RecordParseError(f"Id duplicado: {r.id!r}.")
            index[r.id] = i

        dims = {len(r.score) for r in records if r.score is not None}
        if len(dims) > 1:
            raise RecordParseError(f"Scores com comprimentos diferentes: {sorted(dims)}.")
        if dims:
            score_dim = dims.pop()
            if dimension is not None and dimension != score_dim:
                raise ValueError(f"dimension={dimension} difere do comprimento dos scores ({score_dim}).")
            dimension = score_dim
        if dimension is not None and dimension < 1:
            raise ValueError(f"dimension deve ser >= 1 (obtido {dimension}).")

        self.records = tuple(records)
        self.dimension = dimension
        self._index = index
        self._logliks = _frozen([r.loglik for r in records])

    def __len__(self):
        return len(self.records)

    def __repr__(self):
        return f"ExternalModel(n={len(self)}, dimension={self.dimension})"

    @property
    def capabilities(self) -> frozenset:
        caps = {"log_prob"}
        if self.records and all(r.score is not None for r in self.records):
            caps.add("score")
        if self.records and all(r.latent_sqnorm is not None for r in self.records):
            caps.add("latent")
        return frozenset(caps)

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def _lookup(self, ids) -> tuple[list[int], bool]:
        single = isinstance(ids, str)
        keys = [ids] if single else list(ids)
        try:
            return [self._index[k] for k in keys], single
        except KeyError as e:
            raise KeyError(f"Id desconhecido: {e.args[0]!r}") from None

    def log_prob(self, ids):
        pos, single = self._lookup(ids)
        return _unwrap(self._logliks[pos], single)

    def logliks(self) -> np.ndarray:
        return self._logliks

    def score(self, ids):
        pos, single = self._lookup(ids)
        if any(self.records[i].score is None for i in pos):
            raise UnsupportedCapability("Scores ausentes no arquivo de verossimilhanças.")
        return _unwrap(np.array([self.records[i].score for i in pos], dtype=np.float64), single)

    def scores(self) -> np.ndarray:
        if "score" not in self.capabilities:
            raise UnsupportedCapability("Scores ausentes no arquivo de verossimilhanças.")
        return np.array([r.score for r in self.records], dtype=np.float64)

    def latent_sqnorm(self, ids):
        pos, single = self._lookup(ids)
        if any(self.records[i].latent_sqnorm is None for i in pos):
            raise UnsupportedCapability("Coluna latent_sqnorm ausente.")
        return _unwrap(np.array([self.records[i].latent_sqnorm for i in pos]), single)

    def latent_sqnorms(self) -> np.ndarray:
        if "latent" not in self.capabilities:
            raise UnsupportedCapability("Coluna latent_sqnorm ausente.")
        return np.array([r.latent_sqnorm for r in self.records], dtype=np.float64)

    @classmethod
    def from_csv(cls, path, bits_per_dim: Optional[int] = None, dimension: Optional[int] = None) -> "ExternalModel":
        return cls(read_records(path, bits_per_dim=bits_per_dim), dimension=dimension)

    def to_csv(self, path):
        return write_records(path, self.records)


# ============================================================
# Despacho por capacidade
# ============================================================

def supports(model, capability: str) -> bool:
    return capability in getattr(model, "capabilities", frozenset())


def _require(model, capability: str, operacao: str):
    if not supports(model, capability):
        raise UnsupportedCapability(f"{model!r} não suporta {operacao}.")


def log_prob(model, x):
    return model.log_prob(x)


def sample(model, n: int, seed) -> np.ndarray:
    _require(model, "sample", "sample")
    if int(n) < 1:
        raise ValueError(f"n deve ser >= 1 (obtido {n}).")
    return model.draw(np.random.default_rng(seed), int(n))


def closed_form_entropy(model) -> float:
    _require(model, "entropy", "closed_form_entropy")
    return model.entropy()


def score(model, x):
    _require(model, "score", "score")
    return model.score(x)


def hessian_apply(model, x, v):
    _require(model, "hessian", "hessian_apply")
    return model.hessian_apply(x, v)


def latent_sqnorm(model, x):
    _require(model, "latent", "latent_sqnorm")
    return model.latent_sqnorm(x)


def hessians(model, X) -> np.ndarray:
    """
    Hessianas completas (n, d, d) montadas por d produtos Hessiana-vetor.
    """
    pts = np.asarray(X, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    d = pts.shape[1]
    cols = [np.broadcast_to(hessian_apply(model, pts, np.eye(d)[j]), pts.shape) for j in range(d)]
    return np.stack(cols, axis=2)


# ============================================================
# Especificação textual (CLI)
# ============================================================

def _parse_vector(raw: str) -> list[float]:
    return [float(t) for t in raw.split(";") if t.strip()]


def _parse_gaussian(kind: str, body: str) -> DiagonalGaussian:
    params = {}
    for item in filter(None, (p.strip() for p in body.split(","))):
        if "=" not in item:
            raise ValueError(f"Parâmetro sem '=': {item!r}.")
        key, value = item.split("=", 1)
        params[key.strip().lower()] = value.strip()

    if kind == "iso":
        sigma = float(params.pop("sigma", "1"))
        mean = _parse_vector(params.pop("mean", "0"))
        d = int(params.pop("d", str(len(mean))))
        model = IsotropicGaussian(mean=mean if len(mean) > 1 else mean[0], sigma=sigma, d=d)
    elif kind == "diag":
        sigmas = _parse_vector(params.pop("sigmas", ""))
        mean = _parse_vector(params.pop("mean", "0"))
        if len(mean) == 1:
            mean = mean * len(sigmas)
        model = DiagonalGaussian(mean, sigmas)
    else:
        raise ValueError(f"Tipo de modelo desconhecido: {kind!r} (use iso, diag ou mix).")
    if params:
        raise ValueError(f"Parâmetros desconhecidos para {kind}: {', '.join(sorted(params))}.")
    return model


def parse_model_spec(text: str):
    """
    Constrói um modelo analítico a partir de texto:

        iso:d=16,sigma=1[,mean=0]
        diag:sigmas=1;2;0.5[,mean=0;1;0]
        mix:0.5*iso:d=2,mean=-2|0.5*iso:d=2,mean=2
    """
    kind, _, body = text.strip().partition(":")
    kind = kind.strip().lower()
    if kind != "mix":
        return _parse_gaussian(kind, body)

    weights, comps = [], []
    for part in filter(None, (p.strip() for p in body.split("|"))):
        w, star, comp = part.partition("*")
        if not star:
            raise ValueError(f"Componente sem peso (use 'w*iso:...'): {part!r}.")
        ckind, _, cbody = comp.partition(":")
        weights.append(float(w))
        comps.append(_parse_gaussian(ckind.strip().lower(), cbody))
    return GaussianMixture(weights, comps)
