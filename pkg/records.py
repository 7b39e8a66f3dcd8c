#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
records.py — Ingestão de verossimilhanças externas (CSV)
--------------------------------------------------------

Lê e grava os arquivos de verossimilhança produzidos por modelos externos
(Glow, PixelCNN, VAE...). Cada linha é um LikelihoodRecord.

FORMATO:
    id,loglik[,latent_sqnorm][,score_0,...,score_{d-1}]

- UTF-8, separador decimal '.', notação científica aceita.
- `loglik` em nats; arquivos em bits/dim podem ser convertidos na leitura.
- Colunas além do cabeçalho são erro; log-verossimilhanças não finitas são
  rejeitadas na leitura (fronteira de confiança).
- A escrita usa repr() dos floats (menor representação que faz round-trip),
  de modo que parse → serialize → parse é a identidade.
"""

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence


class RecordParseError(ValueError):
    """Arquivo de verossimilhanças malformado."""


@dataclass(frozen=True)
class LikelihoodRecord:
    id: str
    loglik: float
    latent_sqnorm: Optional[float] = None
    score: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if not math.isfinite(self.loglik):
            raise RecordParseError(f"Registro {self.id!r}: loglik não finito ({self.loglik}).")
        if self.latent_sqnorm is not None and not (self.latent_sqnorm >= 0 and math.isfinite(self.latent_sqnorm)):
            raise RecordParseError(f"Registro {self.id!r}: latent_sqnorm inválido ({self.latent_sqnorm}).")
        if self.score is not None and not all(math.isfinite(s) for s in self.score):
            raise RecordParseError(f"Registro {self.id!r}: score com entradas não finitas.")


# ============================================================
# CABEÇALHO
# ============================================================

def _parse_header(header: list[str]) -> tuple[bool, int]:
    """
    Valida o cabeçalho e retorna (tem_latent, dimensao_score).
    """
    cols = [c.strip() for c in header]
    if len(cols) < 2 or cols[0] != "id" or cols[1] != "loglik":
        raise RecordParseError(f"Cabeçalho inválido: esperado 'id,loglik,...', obtido {','.join(cols)!r}.")

    rest = cols[2:]
    has_latent = bool(rest) and rest[0] == "latent_sqnorm"
    if has_latent:
        rest = rest[1:]

    for i, name in enumerate(rest):
        if name != f"score_{i}":
            raise RecordParseError(f"Coluna inesperada no cabeçalho: {name!r} (esperado 'score_{i}').")
    return has_latent, len(rest)


def _parse_float(raw: str, campo: str, linha: int) -> float:
    try:
        return float(raw.strip())
    except ValueError:
        raise RecordParseError(f"Linha {linha}: valor inválido em '{campo}': {raw!r}.") from None


# ============================================================
# PARSER
# ============================================================

def parse_records(text: str, bits_per_dim: Optional[int] = None) -> list[LikelihoodRecord]:
    """
    Converte o conteúdo CSV em registros.

    Args:
        text: Conteúdo do arquivo (já decodificado).
        bits_per_dim: Se informado (dimensão d dos dados), a coluna `loglik`
            é lida como bits/dim e convertida: loglik = -bpd * d * ln 2.

    Raises:
        RecordParseError: cabeçalho ausente/inválido, colunas extras, ids
            duplicados, valores não numéricos ou não finitos.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise RecordParseError("Arquivo vazio: cabeçalho 'id,loglik' ausente.") from None

    has_latent, score_dim = _parse_header(header)
    n_cols = len(header)
    if bits_per_dim is not None and bits_per_dim < 1:
        raise ValueError(f"bits_per_dim deve ser >= 1 (obtido {bits_per_dim}).")

    records = []
    seen = set()
    for linha, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != n_cols:
            raise RecordParseError(f"Linha {linha}: {len(row)} colunas, cabeçalho declara {n_cols}.")

        rid = row[0].strip()
        if not rid:
            raise RecordParseError(f"Linha {linha}: id vazio.")
        if rid in seen:
            raise RecordParseError(f"Linha {linha}: id duplicado {rid!r}.")
        seen.add(rid)

        loglik = _parse_float(row[1], "loglik", linha)
        if not math.isfinite(loglik):
            raise RecordParseError(f"Linha {linha}: loglik não finito ({row[1].strip()}).")
        if bits_per_dim is not None:
            loglik = -loglik * bits_per_dim * math.log(2.0)

        pos = 2
        latent = None
        if has_latent:
            raw = row[pos].strip()
            latent = _parse_float(raw, "latent_sqnorm", linha) if raw else None
            pos += 1

        score = None
        if score_dim:
            score = tuple(_parse_float(v, f"score_{i}", linha) for i, v in enumerate(row[pos:]))

        try:
            records.append(LikelihoodRecord(rid, loglik, latent, score))
        except RecordParseError as e:
            raise RecordParseError(f"Linha {linha}: {e}") from None
    return records


def read_records(path, bits_per_dim: Optional[int] = None) -> list[LikelihoodRecord]:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"Arquivo de verossimilhanças não encontrado: {p}")
    try:
        text = p.read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise RecordParseError(f"{p.name}: não é UTF-8 válido ({e}).") from None
    return parse_records(text, bits_per_dim=bits_per_dim)


# ============================================================
# ESCRITA
# ============================================================

def format_records(records: Sequence[LikelihoodRecord]) -> str:
    """
    Serializa os registros no formato CSV. As colunas opcionais são emitidas
    quando algum registro as possui.
    """
    has_latent = any(r.latent_sqnorm is not None for r in records)
    dims = {len(r.score) for r in records if r.score is not None}
    if len(dims) > 1:
        raise ValueError(f"Scores com dimensões diferentes: {sorted(dims)}.")
    score_dim = dims.pop() if dims else 0
    if score_dim and any(r.score is None for r in records):
        raise ValueError("Todos os registros precisam de score quando a coluna existe.")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["id", "loglik"]
    if has_latent:
        header.append("latent_sqnorm")
    header += [f"score_{i}" for i in range(score_dim)]
    writer.writerow(header)

    for r in records:
        row = [r.id, repr(float(r.loglik))]
        if has_latent:
            row.append("" if r.latent_sqnorm is None else repr(float(r.latent_sqnorm)))
        if score_dim:
            row += [repr(float(s)) for s in r.score]
        writer.writerow(row)
    return buf.getvalue()


def write_records(path, records: Iterable[LikelihoodRecord]) -> Path:
    p = Path(path)
    p.write_text(format_records(list(records)), encoding="utf-8")
    return p
