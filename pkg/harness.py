#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
harness.py — Campanhas de simulação e avaliação
-----------------------------------------------

PROTOCOLO DE AVALIAÇÃO (run_evaluation):
Para cada repetição r = 1..R:
  1. Sorteia/particiona os pools: treino, validação (bootstrap) e um pool de
     teste por conjunto de dados ("in-dist" + alternativas OOD).
  2. Estima a entropia (padrão: resubstituição no treino).
  3. Para cada M e cada teste habilitado: calibra (bootstrap da validação),
     embaralha cada pool de teste, divide em lotes disjuntos consecutivos
     de tamanho M (resto descartado) e mede a fração rejeitada.
Agrega média ± desvio padrão sobre as R repetições.

Sementes derivadas de (seed, r, M, nome) via SeedSequence: cada célula do
relatório independe das demais (M=1 numa varredura reproduz run_evaluation
com M=1) e do agendamento das threads.

EXPERIMENTOS AUXILIARES:
- annulus_sweep        : ε̂ versus raio (mínimo em σ√d).
- overlap_diagnostic   : histogramas de verossimilhança sobrepostos.
- typical_set_coverage : cobertura do conjunto típico em lotes novos.
- epsilon_profile      : mediana de ε̂ por M (consistência).
- entropy_convergence  : erro dos estimadores de entropia versus S.
- mode_paradox         : verossimilhança média dentro/fora da distribuição.
"""

import csv
import io
import json
import math
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn, TimeElapsedColumn

import baselines
import config
import entropy
import models
from logger import console, log_aviso, log_debug, log_finalizado, log_info, log_skip
from records import LikelihoodRecord
from typicality import (TYPICALITY, bootstrap_threshold, epsilon_hat, split_batches,
                        threshold_from_stats)

IN_DIST = "in-dist"
ALL_TESTS = (TYPICALITY, baselines.TTEST, baselines.KSTEST, baselines.MMD, baselines.KSD, baselines.ANNULUS)
DEFAULT_TESTS = (TYPICALITY, baselines.TTEST, baselines.KSTEST, baselines.ANNULUS)
BATCHING = "disjoint-consecutive-after-seeded-shuffle"


def _tag(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def derive_seed(*parts) -> int:
    """Semente inteira derivada de (seed, r, M, nome...) — estável entre execuções."""
    entropy_parts = [p if isinstance(p, int) else _tag(str(p)) for p in parts]
    return int(np.random.SeedSequence(entropy_parts).generate_state(1)[0])


# ============================================================
# Configuração e dados
# ============================================================

@dataclass(frozen=True)
class ExternalSource:
    """
    Verossimilhanças de arquivos: treino, pool in-distribution (validação +
    teste in-dist) e um pool por conjunto OOD.
    """
    train: Sequence[LikelihoodRecord]
    in_dist: Sequence[LikelihoodRecord]
    ood: Mapping[str, Sequence[LikelihoodRecord]] = field(default_factory=dict)
    dimension: Optional[int] = None


@dataclass(frozen=True)
class ExperimentConfig:
    model: object = None
    ood_models: Mapping[str, object] = field(default_factory=dict)
    external: Optional[ExternalSource] = None
    m_values: tuple = tuple(config.M_VALUES)
    alpha: float = config.BOOTSTRAP_ALPHA
    K: int = config.BOOTSTRAP_K
    repetitions: int = config.REPETITIONS
    validation_size: int = config.VALIDATION_SIZE
    test_size: int = config.TEST_SIZE
    train_size: int = config.TRAIN_SIZE
    seed: int = config.DEFAULT_SEED
    # None: DEFAULT_TESTS, pulando os que a fonte não suporta
    tests: Optional[tuple] = None
    entropy_method: str = config.ENTROPY_METHOD
    mc_samples: int = config.MC_SAMPLES
    mmd_reference_size: int = config.MMD_REFERENCE_SIZE
    reference_size: int = config.REFERENCE_SIZE
    tests_explicit: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.tests is None:
            object.__setattr__(self, "tests", DEFAULT_TESTS)
            object.__setattr__(self, "tests_explicit", False)
        object.__setattr__(self, "tests", tuple(self.tests))
        if (self.model is None) == (self.external is None):
            raise ValueError("Informe exatamente um: modelo analítico ou fonte externa.")
        if not self.m_values or any(int(m) < 1 for m in self.m_values):
            raise ValueError(f"Lista de M inválida: {self.m_values}.")
        for nome in ("repetitions", "validation_size", "test_size", "train_size", "K"):
            if int(getattr(self, nome)) < 1:
                raise ValueError(f"{nome} deve ser >= 1 (obtido {getattr(self, nome)}).")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha deve estar em (0, 1) (obtido {self.alpha}).")
        unknown = [t for t in self.tests if t not in ALL_TESTS]
        if unknown or not self.tests:
            raise ValueError(f"Testes desconhecidos: {unknown} (disponíveis: {', '.join(ALL_TESTS)}).")
        if self.external is not None and entropy.METHOD_ALIASES.get(self.entropy_method) != \
                entropy.EntropyMethod.RESUBSTITUTION:
            raise ValueError("Fonte externa só admite entropia por resubstituição.")
        if self.model is not None:
            for nome, q in self.ood_models.items():
                if q.d != self.model.d:
                    raise ValueError(f"Modelo OOD {nome!r} com d={q.d}, esperado {self.model.d}.")


@dataclass(frozen=True)
class Features:
    """Colunas por exemplo consumidas pelos testes."""
    logliks: np.ndarray
    sqnorms: Optional[np.ndarray] = None
    scores: Optional[np.ndarray] = None
    points: Optional[np.ndarray] = None

    def __len__(self):
        return int(self.logliks.size)

    def take(self, idx) -> "Features":
        pick = lambda a: None if a is None else a[idx]
        return Features(self.logliks[idx], pick(self.sqnorms), pick(self.scores), pick(self.points))


def features_from_points(model, x: np.ndarray) -> Features:
    return Features(
        logliks=np.atleast_1d(model.log_prob(x)),
        sqnorms=np.atleast_1d(model.latent_sqnorm(x)) if models.supports(model, "latent") else None,
        scores=np.atleast_2d(model.score(x)) if models.supports(model, "score") else None,
        points=x,
    )


def features_from_records(records: Sequence[LikelihoodRecord], dimension: Optional[int] = None) -> Features:
    ext = models.ExternalModel(records, dimension=dimension)
    return Features(
        logliks=np.array(ext.logliks()),
        sqnorms=ext.latent_sqnorms() if models.supports(ext, "latent") else None,
        scores=ext.scores() if models.supports(ext, "score") else None,
    )


def _unsupported_reason(cfg: ExperimentConfig, test: str, train: Features, validation: Features) -> Optional[str]:
    if test == baselines.ANNULUS:
        if validation.sqnorms is None:
            return "annulus exige latentes (latent_sqnorm)."
        d = cfg.model.d if cfg.model is not None else cfg.external.dimension
        if d is None:
            return "annulus exige a dimensão d da fonte externa."
    if test == baselines.MMD and (validation.scores is None or train.scores is None):
        return "mmd exige scores no treino e na validação."
    if test == baselines.KSD and (cfg.model is None or not models.supports(cfg.model, "hessian")):
        return "ksd exige modelo analítico com score e Hessiana."
    return None


def _supported_tests(cfg: ExperimentConfig, train: Features, validation: Features, rep: int) -> tuple:
    """
    Testes executáveis na repetição. Teste pedido explicitamente e sem
    capacidade é erro; na lista padrão ele é pulado.
    """
    active = []
    for test in cfg.tests:
        motivo = _unsupported_reason(cfg, test, train, validation)
        if motivo is None:
            active.append(test)
        elif cfg.tests_explicit:
            raise models.UnsupportedCapability(motivo)
        else:
            log_skip(f"[r={rep}] {motivo} Teste {test} pulado.")
    return tuple(active)


def _draw_pools(cfg: ExperimentConfig, rep: int) -> tuple[Features, Features, dict]:
    """
    (treino, validação, {conjunto: pool de teste}) da repetição `rep`.
    """
    if cfg.model is not None:
        p = cfg.model

        def draw(q, n, nome):
            rng = np.random.default_rng([cfg.seed, rep, _tag(nome)])
            return features_from_points(p, q.draw(rng, n))

        train = draw(p, cfg.train_size, "train")
        validation = draw(p, cfg.validation_size, "validation")
        tests = {IN_DIST: draw(p, cfg.test_size, IN_DIST)}
        for nome in sorted(cfg.ood_models):
            tests[nome] = draw(cfg.ood_models[nome], cfg.test_size, nome)
        return train, validation, tests

    ext = cfg.external
    train = features_from_records(ext.train, ext.dimension)
    pool = features_from_records(ext.in_dist, ext.dimension)
    rng = np.random.default_rng([cfg.seed, rep, _tag("split")])
    order = rng.permutation(len(pool))
    n_val = min(cfg.validation_size, len(pool))
    validation = pool.take(order[:n_val])
    tests = {IN_DIST: pool.take(order[n_val:n_val + cfg.test_size])}
    for nome in sorted(ext.ood):
        feats = features_from_records(ext.ood[nome], ext.dimension)
        perm = np.random.default_rng([cfg.seed, rep, _tag(nome)]).permutation(len(feats))
        tests[nome] = feats.take(perm[:cfg.test_size])
    return train, validation, tests


def _estimate_entropy(cfg: ExperimentConfig, train: Features, rep: int) -> entropy.EntropyEstimate:
    return entropy.estimate_entropy(
        cfg.entropy_method, model=cfg.model, train_logliks=train.logliks,
        S=cfg.mc_samples, seed=derive_seed(cfg.seed, rep, "entropy"),
    )


# ============================================================
# Relatório
# ============================================================

REPORT_HEADER = ["test", "dataset", "M", "mean_fraction", "std_fraction", "n_batches"]


@dataclass(frozen=True)
class ReportRow:
    test: str
    dataset: str
    M: int
    mean_fraction: float
    std_fraction: float
    n_batches: int
    fractions: tuple = ()


@dataclass(frozen=True)
class RejectionReport:
    rows: tuple
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        for row in self.rows:
            if not 0.0 <= row.mean_fraction <= 1.0 or row.std_fraction < 0:
                raise ValueError(f"Linha inválida no relatório: {row}.")

    def row(self, test: str, dataset: str, M: int) -> ReportRow:
        for r in self.rows:
            if (r.test, r.dataset, r.M) == (test, dataset, int(M)):
                return r
        raise KeyError(f"Sem linha para ({test}, {dataset}, M={M}).")

    def fraction(self, test: str, dataset: str, M: int) -> float:
        return self.row(test, dataset, M).mean_fraction

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_HEADER)
        for r in self.rows:
            writer.writerow([r.test, r.dataset, r.M, repr(r.mean_fraction), repr(r.std_fraction), r.n_batches])
        return buf.getvalue()

    def write(self, path) -> Path:
        """
        Grava o CSV e, ao lado, `<nome>.meta.json` com os metadados da campanha.
        """
        final = Path(path)
        final.write_text(self.to_csv(), encoding="utf-8")
        meta = final.with_name(final.name + ".meta.json")
        tmp = meta.with_name(meta.name + ".tmp")
        tmp.write_text(json.dumps(dict(self.metadata), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        os.replace(tmp, meta)
        return final

    @classmethod
    def from_csv(cls, text: str, metadata: Optional[Mapping] = None) -> "RejectionReport":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header != REPORT_HEADER:
            raise ValueError(f"Cabeçalho de relatório inválido: {header}.")
        rows = tuple(
            ReportRow(t, ds, int(m), float(mean), float(std), int(nb))
            for t, ds, m, mean, std, nb in (r for r in reader if r)
        )
        return cls(rows, dict(metadata or {}))


def write_rows_csv(path, header: Sequence[str], rows: Sequence[Sequence]) -> Path:
    """CSV de dados para gráficos; floats com repr (round-trip exato)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    p = Path(path)
    p.write_text(buf.getvalue(), encoding="utf-8")
    return p


# ============================================================
# Avaliação
# ============================================================

def _run_repetition(cfg: ExperimentConfig, rep: int, workers: int) -> dict:
    """
    Frações rejeitadas da repetição: {(teste, conjunto, M): (fração, n_lotes)}.
    """
    train, validation, pools = _draw_pools(cfg, rep)
    tests = _supported_tests(cfg, train, validation, rep)
    H = _estimate_entropy(cfg, train, rep) if TYPICALITY in tests else None
    d = cfg.model.d if cfg.model is not None else cfg.external.dimension
    reference_logliks = train.logliks[:cfg.reference_size]
    out = {}

    for M in sorted({int(m) for m in cfg.m_values}):
        for test in tests:
            seed = derive_seed(cfg.seed, rep, M, test)

            if test == TYPICALITY:
                cal = bootstrap_threshold(validation.logliks, H, M, cfg.K, cfg.alpha, seed, workers=workers)
                rejects = lambda f, cal=cal: epsilon_hat(f.logliks, H) > cal.threshold
            elif test in (baselines.TTEST, baselines.KSTEST):
                if test == baselines.TTEST and M < 2:
                    log_skip(f"[r={rep}] t-test indefinido para M={M}.")
                    continue
                fn = baselines.t_test if test == baselines.TTEST else baselines.ks_test
                rejects = lambda f, fn=fn: fn(reference_logliks, f.logliks, cfg.alpha).reject
            else:
                if test == baselines.ANNULUS:
                    cal = baselines.bootstrap_baseline(test, validation.sqnorms, M, cfg.K, cfg.alpha, seed,
                                                       d=d, workers=workers)
                    column = "sqnorms"
                elif test == baselines.MMD:
                    ref_idx = baselines.select_reference(len(train), cfg.mmd_reference_size, seed)
                    reference = baselines.ScoreSet(train.scores[ref_idx])
                    cal = baselines.bootstrap_baseline(test, validation.scores, M, cfg.K, cfg.alpha, seed,
                                                       reference=reference, workers=workers)
                    column = "scores"
                else:
                    cal = baselines.bootstrap_baseline(test, validation.points, M, cfg.K, cfg.alpha, seed,
                                                       model=cfg.model, workers=workers)
                    column = "points"
                stat_fn = baselines.baseline_statistic_fn(
                    test, d=cal.metadata.get("d"), model=cfg.model,
                    reference=reference if test == baselines.MMD else None,
                )
                rejects = lambda f, fn=stat_fn, col=column, cal=cal: fn(getattr(f, col)) > cal.threshold

            for nome, pool in pools.items():
                batches = split_batches(len(pool), M)
                if not batches:
                    raise ValueError(f"Pool '{nome}' com {len(pool)} exemplos, menor que M={M}.")
                order = np.random.default_rng(derive_seed(cfg.seed, rep, M, nome)).permutation(len(pool))
                shuffled = pool.take(order)
                n_rej = sum(bool(rejects(shuffled.take(b))) for b in batches)
                out[(test, nome, M)] = (n_rej / len(batches), len(batches))
    return out


def run_evaluation(cfg: ExperimentConfig, show_progress: bool = True, workers: Optional[int] = None) -> RejectionReport:
    """
    Executa o protocolo completo e devolve o relatório agregado.
    """
    workers = workers or config.WORKERS
    R = int(cfg.repetitions)
    log_info(f"Avaliação: R={R} M={list(cfg.m_values)} testes={list(cfg.tests)} alpha={cfg.alpha} K={cfg.K}")

    # Repetições em paralelo; bootstrap interno sequencial para não aninhar pools
    inner = 1 if workers > 1 and R > 1 else workers
    results: list = [None] * R
    with ThreadPoolExecutor(max_workers=min(workers, R)) as pool, \
            Progress(SpinnerColumn(), TextColumn("[progress.description]{task.description}"), BarColumn(),
                     TextColumn("{task.completed}/{task.total}"), TimeElapsedColumn(),
                     console=console, transient=True, disable=not show_progress) as progress:
        task = progress.add_task("Repetições", total=R)
        futures = {pool.submit(_run_repetition, cfg, rep, inner): rep for rep in range(R)}
        for fut, rep in futures.items():
            results[rep] = fut.result()
            progress.advance(task)

    keys = sorted(set().union(*(r.keys() for r in results)),
                  key=lambda k: (ALL_TESTS.index(k[0]), k[1] != IN_DIST, k[1], k[2]))
    rows = []
    for key in keys:
        per_rep = [r[key] for r in results if key in r]
        fractions = np.array([f for f, _ in per_rep])
        rows.append(ReportRow(
            test=key[0], dataset=key[1], M=key[2],
            mean_fraction=math.fsum(fractions) / fractions.size,
            std_fraction=float(np.std(fractions)),
            n_batches=int(per_rep[0][1]),
            fractions=tuple(float(f) for f in fractions),
        ))

    metadata = {
        "batching": BATCHING,
        "remainder": "dropped",
        "seed": cfg.seed,
        "alpha": cfg.alpha,
        "K": cfg.K,
        "repetitions": R,
        "validation_size": cfg.validation_size,
        "test_size": cfg.test_size,
        "entropy_method": cfg.entropy_method,
        "quantile_rule": config.QUANTILE_RULE,
        "mmd_pairing": "bootstrap-batch-vs-fixed-train-reference",
        "mmd_reference_size": cfg.mmd_reference_size,
    }
    log_finalizado(f"Avaliação concluída: {len(rows)} linhas.")
    return RejectionReport(tuple(rows), metadata)


def m_sweep(cfg: ExperimentConfig, m_values: Optional[Sequence[int]] = None, **kwargs) -> RejectionReport:
    """
    run_evaluation sobre m_values (padrão: os M da própria configuração).
    """
    ms = tuple(int(m) for m in (m_values or cfg.m_values))
    return run_evaluation(replace(cfg, m_values=ms), **kwargs)


# ============================================================
# Experimentos auxiliares
# ============================================================

def annulus_sweep(sigma: float, d: int, radii: Sequence[float], M: int, seed: int,
                  n_batches: int = 20) -> list[tuple[float, float]]:
    """
    Para cada raio r: lotes de M pontos uniformes na esfera de raio r em torno
    da média; retorna (r, média de ε̂) contra a entropia fechada.
    """
    if int(d) < 1:
        raise ValueError(f"d deve ser >= 1 (obtido {d}).")
    radii = [float(r) for r in radii]
    if not radii:
        raise ValueError("Lista de raios vazia.")
    if any(r < 0 or not math.isfinite(r) for r in radii):
        raise ValueError("Raios devem ser finitos e >= 0.")
    model = models.IsotropicGaussian(mean=0.0, sigma=sigma, d=int(d))
    H = entropy.closed_form_estimate(model)

    curve = []
    for i, r in enumerate(radii):
        rng = np.random.default_rng([int(seed), i])
        directions = rng.standard_normal((n_batches * M, model.d))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        ll = model.log_prob(model.mean + r * directions).reshape(n_batches, M)
        eps = [epsilon_hat(row, H) for row in ll]
        curve.append((r, math.fsum(eps) / len(eps)))
    log_debug(f"annulus_sweep: mínimo em r={min(curve, key=lambda t: t[1])[0]}")
    return curve


@dataclass(frozen=True)
class OverlapSummary:
    edges: np.ndarray
    reference_counts: np.ndarray
    other_counts: np.ndarray
    overlap: float
    flagged: bool


def overlap_diagnostic(reference_logliks, other_logliks, bins: int = config.OVERLAP_BINS,
                       flag_at: float = config.OVERLAP_FLAG) -> OverlapSummary:
    """
    Histogramas com bins comuns (largura igual, min/max conjuntos) e
    coeficiente de sobreposição Σ min(massaᵢ, massa'ᵢ) ∈ [0, 1].
    Sobreposição >= flag_at sinaliza o caso em que verossimilhança sozinha
    não separa os conjuntos.
    """
    a = np.asarray(reference_logliks, dtype=np.float64).ravel()
    b = np.asarray(other_logliks, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("Listas vazias no diagnóstico de sobreposição.")
    lo = float(min(a.min(), b.min()))
    hi = float(max(a.max(), b.max()))
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, int(bins) + 1)
    ca, _ = np.histogram(a, bins=edges)
    cb, _ = np.histogram(b, bins=edges)
    # Contagens inteiras cruzadas: 1.0 e 0.0 saem exatos
    shared = int(np.sum(np.minimum(ca.astype(np.int64) * b.size, cb.astype(np.int64) * a.size)))
    overlap = shared / (a.size * b.size)
    return OverlapSummary(edges, ca, cb, overlap, overlap >= flag_at)


def typical_set_coverage(model, M: int, n_batches: int, seed: int, quantile: float = 0.99) -> tuple[float, float]:
    """
    ε = quantil empírico de ε̂ (lotes do próprio modelo); devolve
    (ε, fração de lotes novos com ε̂ <= ε).
    """
    H = entropy.closed_form_estimate(model)

    def eps_batches(tag: str) -> list[float]:
        rng = np.random.default_rng([int(seed), _tag(tag)])
        ll = model.log_prob(model.draw(rng, n_batches * M)).reshape(n_batches, M)
        return [epsilon_hat(row, H) for row in ll]

    eps = threshold_from_stats(eps_batches("calibration"), quantile)
    fresh = eps_batches("fresh")
    coverage = sum(e <= eps for e in fresh) / len(fresh)
    return eps, coverage


def epsilon_profile(model, q, m_values: Sequence[int], n_batches: int, seed: int,
                    H: Optional[entropy.EntropyEstimate] = None) -> dict[int, float]:
    """
    Mediana de ε̂ (entropia de `model`) sobre lotes de `q`, para cada M.
    """
    H = H or entropy.closed_form_estimate(model)
    profile = {}
    for M in m_values:
        rng = np.random.default_rng([int(seed), int(M)])
        ll = np.atleast_1d(model.log_prob(q.draw(rng, n_batches * int(M)))).reshape(n_batches, int(M))
        profile[int(M)] = float(np.median([epsilon_hat(row, H) for row in ll]))
    return profile


def entropy_convergence(model, sizes: Sequence[int], repeats: int, seed: int) -> tuple[list, dict]:
    """
    Erro RMS dos dois estimadores contra a entropia fechada, por S, e a
    inclinação log-log de cada curva (esperado ≈ -1/2).
    """
    exact = models.closed_form_entropy(model)
    rows = []
    for S in sizes:
        for method in ("monte_carlo", "resubstitution"):
            errs = []
            for r in range(repeats):
                s = [int(seed), int(S), r, _tag(method)]
                if method == "monte_carlo":
                    est = entropy.monte_carlo_entropy(model, S, s)
                else:
                    est = entropy.resubstitution_entropy(model.log_prob(models.sample(model, S, s)))
                errs.append(est.value - exact)
            rows.append((int(S), method, math.sqrt(math.fsum(e * e for e in errs) / repeats)))

    slopes = {}
    for method in ("monte_carlo", "resubstitution"):
        pts = [(math.log(S), math.log(err)) for S, m, err in rows if m == method]
        xs, ys = zip(*pts)
        slopes[method] = float(np.polyfit(xs, ys, 1)[0])
    return rows, slopes


def mode_paradox(p, q, n: int, seed: int) -> tuple[float, float]:
    """
    (média de log p em amostras de p, média de log p em amostras de q).
    """
    ll_p = p.log_prob(models.sample(p, n, [int(seed), 0]))
    ll_q = p.log_prob(models.sample(q, n, [int(seed), 1]))
    return float(np.mean(ll_p)), float(np.mean(ll_q))


def evaluate_models(p, q_models: Mapping[str, object], **overrides) -> RejectionReport:
    """Atalho: ExperimentConfig analítico + run_evaluation."""
    show = overrides.pop("show_progress", False)
    return run_evaluation(ExperimentConfig(model=p, ood_models=dict(q_models), **overrides), show_progress=show)
