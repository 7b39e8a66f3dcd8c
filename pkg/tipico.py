#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
tipico.py — Linha de comando do teste de tipicidade
---------------------------------------------------

Subcomandos:
  calibrate  treino + validação → Calibração JSON (limiar por bootstrap)
  test       Calibração + arquivo de teste → um veredicto CSV por lote
  simulate   experimentos sintéticos (annulus-sweep, m-sweep, evaluate,
             overlap, coverage, consistency, entropy-convergence)
  evaluate   protocolo de avaliação sobre arquivos de verossimilhança

Códigos de saída (contrato estável):
  0 sucesso · 2 erro de entrada/parse · 3 flags inválidas · 4 M incompatível

Erros saem em STDERR como uma linha JSON:
  {"erro": "<tipo>", "codigo": <n>, "mensagem": "<texto>"}
"""

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

import baselines
import config
import entropy
import harness
import logger
import models
from logger import log_aviso, log_info, log_ok
from records import RecordParseError, read_records
from typicality import (TYPICALITY, BatchSizeMismatch, CalibrationParseError, bootstrap_threshold,
                        decide, decide_statistic, load_calibration, save_calibration,
                        select_calibration, split_batches)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_FLAGS = 3
EXIT_MISMATCH = 4

EXPERIMENTS = ("annulus-sweep", "m-sweep", "evaluate", "overlap", "coverage", "consistency",
               "entropy-convergence")
CALIBRATE_TESTS = (TYPICALITY, baselines.ANNULUS, baselines.MMD, baselines.KSD)
TEST_TESTS = (TYPICALITY, baselines.ANNULUS, baselines.MMD, baselines.KSD, baselines.TTEST, baselines.KSTEST)
KSD_FILES = "ksd exige modelo analítico (score e Hessiana); use simulate --tests ksd."
DEFAULT_MODEL = "iso:d=16,sigma=1"


class FlagError(ValueError):
    """Flag ausente, fora do intervalo ou combinação inválida."""


class InputError(ValueError):
    """Arquivo de entrada sem dados suficientes."""


class _Parser(argparse.ArgumentParser):
    # argparse sairia com código 2; aqui uso incorreto é sempre 3
    def error(self, message):
        raise FlagError(f"{self.prog}: {message}")


# ============================================================
# Tipos de argumento
# ============================================================

def _int_list(raw: str) -> list[int]:
    try:
        values = [int(t) for t in raw.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"lista de inteiros inválida: {raw!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("lista vazia")
    return values


def _radii(raw: str) -> list[float]:
    """'0:8:0.25' (início:fim:passo, fim incluso) ou '1,2,4'."""
    try:
        if ":" in raw:
            start, stop, step = (float(t) for t in raw.split(":"))
            if step <= 0:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [start + i * step for i in range(n)]
        return [float(t) for t in raw.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"raios inválidos: {raw!r}") from None


def _named_spec(raw: str) -> tuple[str, str]:
    name, eq, value = raw.partition("=")
    if not eq or not name.strip() or not value.strip():
        raise argparse.ArgumentTypeError(f"use NOME=VALOR (obtido {raw!r})")
    return name.strip(), value.strip()


def _model(raw: str):
    try:
        return models.parse_model_spec(raw)
    except ValueError as e:
        raise FlagError(f"Modelo inválido {raw!r}: {e}") from None


# ============================================================
# Parser
# ============================================================

def _add_common(p: argparse.ArgumentParser, multi_m: bool = False):
    if multi_m:
        p.add_argument("--M", type=_int_list, default=None, help="Tamanhos de lote, separados por vírgula.")
    else:
        p.add_argument("--M", type=int, default=None, help="Tamanho do lote.")
    p.add_argument("--alpha", type=float, default=config.BOOTSTRAP_ALPHA,
                   help=f"Nível de confiança do limiar (padrão: {config.BOOTSTRAP_ALPHA}).")
    p.add_argument("--K", type=int, default=config.BOOTSTRAP_K,
                   help=f"Réplicas bootstrap (padrão: {config.BOOTSTRAP_K}).")
    p.add_argument("--seed", type=int, default=config.DEFAULT_SEED,
                   help=f"Semente (padrão: {config.DEFAULT_SEED}).")
    p.add_argument("--bits-per-dim", type=int, default=None, metavar="D",
                   help="Converte bits/dim → nats na leitura (d = D).")
    p.add_argument("--out", help="Arquivo de saída.")
    p.add_argument("--log-level", default=None, help="DEBUG, INFO, AVISO...")
    p.add_argument("--no-progress", action="store_true", help="Desativa a barra de progresso.")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tipico", description="Teste de tipicidade para detecção de OOD em lotes.")
    parser.add_argument("--version", action="version", version=f"tipico {config.VERSION}")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMANDO", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("calibrate", help="Calibra o limiar a partir de treino e validação.")
    _add_common(p)
    p.add_argument("--train", required=True, help="CSV de verossimilhanças de treino.")
    p.add_argument("--val", required=True, help="CSV de verossimilhanças de validação.")
    p.add_argument("--entropy", default=config.ENTROPY_METHOD, choices=("resub", "mc", "closed"),
                   help="Estimador da entropia (padrão: %(default)s).")
    p.add_argument("--model", help="Modelo analítico (necessário para --entropy mc/closed).")
    p.add_argument("--test-name", default=TYPICALITY, choices=CALIBRATE_TESTS)
    p.add_argument("--dimension", type=int, default=None, help="Dimensão d (annulus).")
    p.add_argument("--mmd-reference-size", type=int, default=config.MMD_REFERENCE_SIZE)

    p = sub.add_parser("test", help="Classifica os lotes de um arquivo de teste.")
    _add_common(p)
    p.add_argument("--input", required=True, help="CSV de verossimilhanças de teste.")
    p.add_argument("--calibration", action="append", default=[],
                   help="Calibração JSON (repetível: uma por M).")
    p.add_argument("--train", help="CSV de treino (referência de t/KS e do MMD).")
    p.add_argument("--test-name", default=None, choices=TEST_TESTS,
                   help="Padrão: o teste da calibração.")
    p.add_argument("--allow-m-mismatch", action="store_true",
                   help="Aceita lote sem M calibrado (usa o M mais próximo).")
    p.add_argument("--reference-size", type=int, default=config.REFERENCE_SIZE)

    p = sub.add_parser("simulate", help="Experimentos com modelos analíticos.")
    _add_common(p, multi_m=True)
    p.add_argument("experiment", metavar="EXPERIMENTO", help=", ".join(EXPERIMENTS))
    p.add_argument("--model", default=DEFAULT_MODEL, help="Modelo p (padrão: %(default)s).")
    p.add_argument("--ood", action="append", type=_named_spec, default=[],
                   help="Alternativa OOD NOME=MODELO (repetível).")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--d", type=int, default=16)
    p.add_argument("--radii", type=_radii, default=_radii("0:8:0.25"))
    p.add_argument("--n-batches", type=int, default=20)
    p.add_argument("--n", type=int, default=10_000, help="Amostras por lado (overlap).")
    p.add_argument("--sizes", type=_int_list, default=[1_000, 10_000, 100_000])
    p.add_argument("--repeats", type=int, default=30)
    _add_campaign(p)

    p = sub.add_parser("evaluate", help="Protocolo de avaliação sobre arquivos.")
    _add_common(p, multi_m=True)
    p.add_argument("--train", required=True, help="CSV de treino.")
    p.add_argument("--val", required=True, help="CSV in-distribution (validação + teste in-dist).")
    p.add_argument("--input", action="append", type=_named_spec, default=[],
                   help="Conjunto OOD NOME=CSV (repetível).")
    p.add_argument("--dimension", type=int, default=None)
    _add_campaign(p)
    return parser


def _add_campaign(p: argparse.ArgumentParser):
    p.add_argument("--tests", default=None,
                   help=f"Testes, separados por vírgula (padrão: {','.join(harness.DEFAULT_TESTS)}, "
                        "pulando os que os arquivos não suportam).")
    p.add_argument("--entropy", default=config.ENTROPY_METHOD, choices=("resub", "mc", "closed"))
    p.add_argument("--repetitions", type=int, default=config.REPETITIONS)
    p.add_argument("--validation-size", type=int, default=config.VALIDATION_SIZE)
    p.add_argument("--test-size", type=int, default=config.TEST_SIZE)
    p.add_argument("--train-size", type=int, default=config.TRAIN_SIZE)


def _validate(args):
    """Flags numéricas validadas antes de qualquer trabalho."""
    if not 0.0 < args.alpha < 1.0:
        raise FlagError(f"--alpha deve estar em (0, 1) (obtido {args.alpha}).")
    if args.K < 1:
        raise FlagError(f"--K deve ser >= 1 (obtido {args.K}).")
    if args.seed < 0:
        raise FlagError(f"--seed deve ser >= 0 (obtido {args.seed}).")
    if args.bits_per_dim is not None and args.bits_per_dim < 1:
        raise FlagError(f"--bits-per-dim deve ser >= 1 (obtido {args.bits_per_dim}).")
    ms = args.M if isinstance(args.M, list) else [args.M] if args.M is not None else []
    if any(m < 1 for m in ms):
        raise FlagError(f"--M deve ser >= 1 (obtido {args.M}).")
    for nome in ("repetitions", "validation_size", "test_size", "train_size", "n_batches", "n", "repeats",
                 "mmd_reference_size", "reference_size", "d", "dimension"):
        value = getattr(args, nome, None)
        if value is not None and value < 1:
            raise FlagError(f"--{nome.replace('_', '-')} deve ser >= 1 (obtido {value}).")
    if getattr(args, "sigma", 1.0) <= 0:
        raise FlagError(f"--sigma deve ser > 0 (obtido {args.sigma}).")


def _tests_list(raw: Optional[str]) -> Optional[tuple]:
    if raw is None:
        return None
    tests = tuple(t.strip() for t in raw.split(",") if t.strip())
    unknown = [t for t in tests if t not in harness.ALL_TESTS]
    if unknown or not tests:
        raise FlagError(f"Testes desconhecidos: {unknown} (disponíveis: {', '.join(harness.ALL_TESTS)}).")
    return tests


def _read(path, bits_per_dim) -> list:
    return read_records(path, bits_per_dim=bits_per_dim)


def _out_path(args) -> Path:
    if not args.out:
        raise FlagError("--out é obrigatório para este comando.")
    return Path(args.out)


# ============================================================
# calibrate
# ============================================================

def cmd_calibrate(args) -> int:
    if args.test_name == baselines.KSD:
        raise models.UnsupportedCapability(KSD_FILES)
    if args.M is None:
        raise FlagError("--M é obrigatório em calibrate.")
    out = _out_path(args)
    if args.entropy != "resub" and not args.model:
        raise FlagError(f"--entropy {args.entropy} exige --model.")
    model = _model(args.model) if args.model else None

    train = models.ExternalModel(_read(args.train, args.bits_per_dim), dimension=args.dimension)
    val = models.ExternalModel(_read(args.val, args.bits_per_dim), dimension=args.dimension)
    if len(val) == 0:
        raise InputError(f"{args.val}: validação sem linhas.")
    if len(val) < args.M:
        raise InputError(f"{args.val}: {len(val)} linhas, menor que M={args.M}.")

    if args.test_name == TYPICALITY:
        if args.entropy == "resub" and len(train) == 0:
            raise InputError(f"{args.train}: treino sem linhas.")
        H = entropy.estimate_entropy(args.entropy, model=model,
                                     train_logliks=train.logliks() if len(train) else None,
                                     S=config.MC_SAMPLES, seed=args.seed)
        cal = bootstrap_threshold(val.logliks(), H, args.M, args.K, args.alpha, args.seed)
    elif args.test_name == baselines.ANNULUS:
        d = args.dimension or args.bits_per_dim or val.dimension
        if d is None:
            raise FlagError("annulus exige --dimension (ou --bits-per-dim).")
        if not models.supports(val, "latent"):
            raise InputError(f"{args.val}: coluna latent_sqnorm ausente ou incompleta.")
        cal = baselines.bootstrap_baseline(baselines.ANNULUS, val.latent_sqnorms(), args.M, args.K,
                                           args.alpha, args.seed, d=d)
    else:
        if not (models.supports(train, "score") and models.supports(val, "score")):
            raise InputError("mmd exige colunas score_i no treino e na validação.")
        idx = baselines.select_reference(len(train), args.mmd_reference_size, args.seed)
        ids = train.ids
        reference = baselines.ScoreSet(train.scores()[idx])
        cal = baselines.bootstrap_baseline(baselines.MMD, baselines.ScoreSet(val.scores()), args.M, args.K,
                                           args.alpha, args.seed, reference=reference,
                                           metadata={"reference_ids": [ids[i] for i in idx]})

    save_calibration(out, cal)
    log_ok(f"Calibração gravada em {out}")
    if cal.entropy is not None:
        print(f"entropy={cal.entropy.value!r} method={cal.entropy.method.value}")
    print(f"test_name={cal.test_name} M={cal.M}")
    print(f"threshold={cal.threshold!r}")
    print(f"K={cal.K} alpha={cal.alpha!r}")
    return EXIT_OK


# ============================================================
# test
# ============================================================

def _batch_size_and_calibration(args):
    cals = [load_calibration(p) for p in args.calibration]
    if len(cals) == 1 and args.M is None:
        return cals[0].M, cals[0]
    if args.M is None:
        raise FlagError("Com várias calibrações informe --M.")
    cal = select_calibration(cals, args.M, nearest_m=args.allow_m_mismatch)
    if cal.M != args.M:
        log_aviso(f"Lotes de tamanho {args.M} decididos com limiar de M={cal.M}.")
    return args.M, cal


def _write_verdicts(rows: list) -> None:
    print("batch_index,statistic,threshold,is_ood")
    for i, stat, thr, ood in rows:
        print(f"{i},{stat!r},{thr!r},{'true' if ood else 'false'}")
    n_rej = sum(1 for r in rows if r[3])
    print(f"# fraction_rejected={n_rej / len(rows)!r} n_batches={len(rows)}")


def cmd_test(args) -> int:
    test_name = args.test_name
    if test_name == baselines.KSD:
        raise models.UnsupportedCapability(KSD_FILES)
    cal = None
    if test_name in (baselines.TTEST, baselines.KSTEST):
        if not args.train:
            raise FlagError(f"{test_name} exige --train (referência).")
        if args.M is None:
            raise FlagError(f"{test_name} exige --M.")
        M = args.M
    else:
        if not args.calibration:
            raise FlagError("Informe --calibration (ou --test-name ttest/kstest com --train).")
        M, cal = _batch_size_and_calibration(args)
        if test_name and test_name != cal.test_name:
            raise FlagError(f"--test-name {test_name} difere da calibração ({cal.test_name}).")
        test_name = cal.test_name

    test = models.ExternalModel(_read(args.input, args.bits_per_dim))
    if len(test) == 0:
        raise InputError(f"{args.input}: arquivo de teste vazio.")
    if len(test) < M:
        raise InputError(f"{args.input}: {len(test)} linhas, menor que M={M}.")
    batches = split_batches(len(test), M)
    if len(test) % M:
        log_aviso(f"{len(test) % M} linhas finais descartadas (lote incompleto).")

    rows = []
    if test_name in (baselines.TTEST, baselines.KSTEST):
        reference = models.ExternalModel(_read(args.train, args.bits_per_dim)).logliks()[:args.reference_size]
        fn = baselines.t_test if test_name == baselines.TTEST else baselines.ks_test
        ll = test.logliks()
        for i, b in enumerate(batches):
            res = fn(reference, ll[b], args.alpha)
            rows.append((i, abs(res.statistic), res.critical_value, res.reject))
    elif test_name == TYPICALITY:
        ll = test.logliks()
        for i, b in enumerate(batches):
            v = decide(ll[b], cal, nearest_m=args.allow_m_mismatch)
            rows.append((i, v.statistic, v.threshold, v.is_ood))
    elif test_name == baselines.ANNULUS:
        if not models.supports(test, "latent"):
            raise InputError(f"{args.input}: coluna latent_sqnorm ausente ou incompleta.")
        d = int(cal.metadata["d"])
        sq = test.latent_sqnorms()
        for i, b in enumerate(batches):
            v = decide_statistic(baselines.annulus_statistic(sq[b], d), cal, M)
            rows.append((i, v.statistic, v.threshold, v.is_ood))
    else:
        if not args.train:
            raise FlagError("mmd exige --train (scores de referência).")
        if not models.supports(test, "score"):
            raise InputError(f"{args.input}: colunas score_i ausentes.")
        train = models.ExternalModel(_read(args.train, args.bits_per_dim))
        ref_ids = cal.metadata.get("reference_ids")
        if not ref_ids:
            raise CalibrationParseError("Calibração mmd sem reference_ids.")
        reference = baselines.ScoreSet(train.score(ref_ids))
        sc = test.scores()
        for i, b in enumerate(batches):
            v = decide_statistic(baselines.mmd_statistic(baselines.ScoreSet(sc[b]), reference), cal, M)
            rows.append((i, v.statistic, v.threshold, v.is_ood))

    _write_verdicts(rows)
    return EXIT_OK


# ============================================================
# simulate / evaluate
# ============================================================

def _ood_models(args) -> dict:
    return {name: _model(spec) for name, spec in args.ood}


def cmd_simulate(args) -> int:
    if args.experiment not in EXPERIMENTS:
        raise FlagError(f"Experimento desconhecido: {args.experiment!r} (válidos: {', '.join(EXPERIMENTS)}).")
    out = _out_path(args)
    exp = args.experiment

    if exp == "annulus-sweep":
        M = (args.M or [16])[0]
        curve = harness.annulus_sweep(args.sigma, args.d, args.radii, M, args.seed, n_batches=args.n_batches)
        harness.write_rows_csv(out, ["radius", "mean_epsilon"], curve)
        best = min(curve, key=lambda t: t[1])
        print(f"min_radius={best[0]!r} mean_epsilon={best[1]!r}")
        return EXIT_OK

    p = _model(args.model)
    qs = _ood_models(args)

    if exp in ("evaluate", "m-sweep"):
        cfg = harness.ExperimentConfig(
            model=p, ood_models=qs,
            m_values=tuple(args.M or (config.SWEEP_M_VALUES if exp == "m-sweep" else config.M_VALUES)),
            alpha=args.alpha, K=args.K, repetitions=args.repetitions,
            validation_size=args.validation_size, test_size=args.test_size, train_size=args.train_size,
            seed=args.seed, tests=_tests_list(args.tests), entropy_method=args.entropy,
        )
        run = harness.m_sweep if exp == "m-sweep" else harness.run_evaluation
        report = run(cfg, show_progress=not args.no_progress)
        report.write(out)
        sys.stdout.write(report.to_csv())
        return EXIT_OK

    if exp == "overlap":
        if not qs:
            raise FlagError("overlap exige --ood NOME=MODELO.")
        name, q = next(iter(sorted(qs.items())))
        ref = p.log_prob(models.sample(p, args.n, [args.seed, 0]))
        other = p.log_prob(models.sample(q, args.n, [args.seed, 1]))
        summ = harness.overlap_diagnostic(ref, other)
        rows = [(float(summ.edges[i]), float(summ.edges[i + 1]), int(summ.reference_counts[i]),
                 int(summ.other_counts[i])) for i in range(len(summ.reference_counts))]
        harness.write_rows_csv(out, ["bin_left", "bin_right", "reference_count", "other_count"], rows)
        if summ.flagged:
            log_aviso(f"Sobreposição {summ.overlap:.3f}: verossimilhança sozinha não separa '{name}'.")
        print(f"overlap={summ.overlap!r} flagged={str(summ.flagged).lower()}")
        return EXIT_OK

    if exp == "coverage":
        M = (args.M or [64])[0]
        eps, cov = harness.typical_set_coverage(p, M, args.n_batches, args.seed)
        harness.write_rows_csv(out, ["M", "epsilon", "coverage"], [(M, eps, cov)])
        print(f"epsilon={eps!r} coverage={cov!r}")
        return EXIT_OK

    if exp == "consistency":
        ms = args.M or [1, 10, 100, 1000]
        rows = []
        for name, q in [(harness.IN_DIST, p)] + sorted(qs.items()):
            prof = harness.epsilon_profile(p, q, ms, args.n_batches, args.seed)
            rows.extend((name, M, v) for M, v in prof.items())
        harness.write_rows_csv(out, ["dataset", "M", "median_epsilon"], rows)
        return EXIT_OK

    rows, slopes = harness.entropy_convergence(p, args.sizes, args.repeats, args.seed)
    harness.write_rows_csv(out, ["S", "method", "rms_error"], rows)
    for method, slope in slopes.items():
        print(f"slope_{method}={slope!r}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    out = _out_path(args)
    dim = args.dimension or args.bits_per_dim
    source = harness.ExternalSource(
        train=_read(args.train, args.bits_per_dim),
        in_dist=_read(args.val, args.bits_per_dim),
        ood={name: _read(path, args.bits_per_dim) for name, path in args.input},
        dimension=dim,
    )
    if not source.in_dist or not source.train:
        raise InputError("Treino e pool in-distribution não podem ser vazios.")
    cfg = harness.ExperimentConfig(
        external=source, m_values=tuple(args.M or config.M_VALUES), alpha=args.alpha, K=args.K,
        repetitions=args.repetitions, validation_size=args.validation_size, test_size=args.test_size,
        train_size=args.train_size, seed=args.seed, tests=_tests_list(args.tests), entropy_method=args.entropy,
    )
    report = harness.run_evaluation(cfg, show_progress=not args.no_progress)
    report.write(out)
    sys.stdout.write(report.to_csv())
    return EXIT_OK


COMMANDS = {
    "calibrate": cmd_calibrate,
    "test": cmd_test,
    "simulate": cmd_simulate,
    "evaluate": cmd_evaluate,
}


# ============================================================
# Entrada
# ============================================================

def _emit_error(kind: str, code: int, message: str) -> int:
    sys.stderr.write(json.dumps({"erro": kind, "codigo": code, "mensagem": message}, ensure_ascii=False) + "\n")
    return code


def main(argv: Optional[list] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _validate(args)
    except FlagError as e:
        return _emit_error("flag", EXIT_FLAGS, str(e))

    logger.set_level(args.log_level or config.LOG_LEVEL)
    if config.LOGFILE:
        logger.set_logfile(config.LOGFILE)
    log_info(f"tipico {config.VERSION} · {args.command}")

    try:
        return COMMANDS[args.command](args)
    except (FlagError, models.UnsupportedCapability) as e:
        return _emit_error("flag", EXIT_FLAGS, str(e))
    except BatchSizeMismatch as e:
        return _emit_error("m_incompativel", EXIT_MISMATCH, str(e))
    except (RecordParseError, CalibrationParseError, InputError, FileNotFoundError, UnicodeDecodeError,
            KeyError) as e:
        return _emit_error("entrada", EXIT_INPUT, str(e))
    except ValueError as e:
        return _emit_error("entrada", EXIT_INPUT, str(e))
    finally:
        logger.close_logger()


if __name__ == "__main__":
    sys.exit(main())
