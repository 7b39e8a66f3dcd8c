#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
config.py — Configuration Loader
----------------------------------------

Este módulo gerencia as configurações do Tipico (teste de tipicidade).
As configurações são carregadas do arquivo `config.ini` (opcional); flags da
CLI têm prioridade sobre o arquivo, e o arquivo sobre os defaults abaixo.

OPÇÕES DO ARQUIVO DE CONFIGURAÇÃO (config.ini):

[BOOTSTRAP]
  k       : Número de réplicas bootstrap (K). Default: 50.
  alpha   : Nível de confiança do quantil (0 < alpha < 1). Default: 0.99.
  seed    : Semente padrão de todas as rotinas aleatórias. Default: 20200101.

[ENTROPIA]
  method     : Estimador padrão da entropia: 'resub', 'mc' ou 'closed'. Default: resub.
  mc_samples : Número de amostras S do estimador Monte-Carlo. Default: 50000.
  mc_chunk   : Tamanho do bloco de amostragem do Monte-Carlo (memória). Default: 10000.

[BASELINES]
  mmd_reference_size : Tamanho R do subconjunto de treino usado pelo MMD. Default: 500.
  reference_size     : Tamanho máximo da referência dos testes t e KS. Default: 5000.

[AVALIACAO]
  validation_size : Tamanho do pool de validação (bootstrap). Default: 5000.
  test_size       : Tamanho de cada pool de teste. Default: 5000.
  train_size      : Amostras de "treino" dos modelos analíticos. Default: 5000.
  repetitions     : Repetições R do protocolo completo. Default: 10.
  m_values        : Lista de tamanhos de lote M. Ex: "2,10,25".
  overlap_bins    : Número de bins do diagnóstico de sobreposição. Default: 50.
  overlap_flag    : Sobreposição a partir da qual o alerta é emitido. Default: 0.9.

[SETTINGS]
  threads   : Workers paralelos (ThreadPoolExecutor). Default: 4.
  log_level : Nível mínimo de log (DEBUG, INFO, OK, AVISO, ERRO). Default: INFO.
  logfile   : (Opcional) Caminho do arquivo de log.

CONSTANTES INTERNAS:
  BOOTSTRAP_K, BOOTSTRAP_ALPHA, DEFAULT_SEED, ENTROPY_METHOD, MC_SAMPLES,
  MMD_REFERENCE_SIZE, VALIDATION_SIZE, TEST_SIZE, REPETITIONS, M_VALUES,
  WORKERS, LOG_LEVEL, VERSION.
"""

import os
import sys
import configparser
from pathlib import Path

# === Versão do Aplicativo ===
VERSION = "1.0.0"

# === Caminho base e arquivo INI ===
BASE_DIR = Path(sys.executable if getattr(sys, "frozen", False) else __file__).resolve().parent
CONFIG_FILE = Path(os.environ.get("TIPICO_CONFIG", "") or BASE_DIR / "config.ini")

# === Leitura do config.ini ===
# O arquivo é opcional: sem ele valem os defaults do protocolo de avaliação.
parser = configparser.ConfigParser()
parser.read(CONFIG_FILE, encoding="utf-8")


def get(section: str, key: str, default=None):
    """
    Lê valor de configuração do arquivo INI com fallback seguro.

    Args:
        section: Nome da seção no config.ini (ex: 'BOOTSTRAP', 'SETTINGS')
        key: Chave da configuração dentro da seção
        default: Valor padrão caso a chave não exista

    Returns:
        str: Valor da configuração ou default se não encontrado
    """
    return parser.get(section, key, fallback=default)


def getint(section: str, key: str, default=None):
    """
    Lê valor inteiro de configuração do arquivo INI com fallback seguro.
    """
    try:
        return parser.getint(section, key, fallback=default)
    except (TypeError, ValueError):
        return default


def getfloat(section: str, key: str, default=None):
    """
    Lê valor real de configuração. Aceita notação científica (ex: 1e-3).
    """
    try:
        return parser.getfloat(section, key, fallback=default)
    except (TypeError, ValueError):
        return default


def getbool(section: str, key: str, default: bool = False) -> bool:
    """
    Lê valor booleano de configuração com fallback seguro.
    Aceita true/false, yes/no, on/off, 1/0 (case-insensitive).
    """
    try:
        return parser.getboolean(section, key, fallback=default)
    except (ValueError, TypeError):
        return default


def getintlist(section: str, key: str, default: str = "") -> list[int]:
    """
    Lê lista CSV de inteiros (ex: "2,10,25"). Tokens inválidos são ignorados.
    """
    raw = get(section, key, default) or ""
    valores = []
    for token in str(raw).replace(";", ",").split(","):
        token = token.strip()
        if token.isdigit():
            valores.append(int(token))
    return valores


# ============================================================
# Bootstrap / Limiar
# ============================================================

BOOTSTRAP_K = getint("BOOTSTRAP", "k", 50)
BOOTSTRAP_ALPHA = getfloat("BOOTSTRAP", "alpha", 0.99)
DEFAULT_SEED = getint("BOOTSTRAP", "seed", 20200101)

# Convenção de quantil: ⌈αK⌉-ésima estatística de ordem, sem interpolação
QUANTILE_RULE = "ceil-order-statistic"


# ============================================================
# Entropia
# ============================================================

_raw_method = get("ENTROPIA", "method", "resub").strip().lower()
ENTROPY_METHOD = _raw_method if _raw_method in ("resub", "mc", "closed") else "resub"
MC_SAMPLES = getint("ENTROPIA", "mc_samples", 50000)
MC_CHUNK = max(1, getint("ENTROPIA", "mc_chunk", 10000))


# ============================================================
# Baselines
# ============================================================

MMD_REFERENCE_SIZE = getint("BASELINES", "mmd_reference_size", 500)
REFERENCE_SIZE = getint("BASELINES", "reference_size", 5000)


# ============================================================
# Protocolo de Avaliação
# ============================================================

VALIDATION_SIZE = getint("AVALIACAO", "validation_size", 5000)
TEST_SIZE = getint("AVALIACAO", "test_size", 5000)
TRAIN_SIZE = getint("AVALIACAO", "train_size", 5000)
REPETITIONS = getint("AVALIACAO", "repetitions", 10)
M_VALUES = getintlist("AVALIACAO", "m_values", "2,10,25") or [2, 10, 25]
SWEEP_M_VALUES = getintlist("AVALIACAO", "sweep_m_values", "1,2,5,10,25,50,75,100,125,150")
OVERLAP_BINS = getint("AVALIACAO", "overlap_bins", 50)
OVERLAP_FLAG = getfloat("AVALIACAO", "overlap_flag", 0.9)


# ============================================================
# Execução
# ============================================================

# Quantidade de workers paralelos (ThreadPoolExecutor)
WORKERS = max(1, getint("SETTINGS", "threads", 4))
LOG_LEVEL = (os.environ.get("LOG_LEVEL") or get("SETTINGS", "log_level", "INFO")).upper()
LOGFILE = get("SETTINGS", "logfile", "").strip()


# === Diagnóstico ===
if __name__ == "__main__":
    print(f"--- Configuração Carregada ---")
    print(f"INI File:         {CONFIG_FILE} ({'ok' if CONFIG_FILE.exists() else 'ausente, usando defaults'})")
    print(f"Bootstrap:        K={BOOTSTRAP_K} alpha={BOOTSTRAP_ALPHA} seed={DEFAULT_SEED}")
    print(f"Quantil:          {QUANTILE_RULE}")
    print(f"Entropia:         {ENTROPY_METHOD} (S={MC_SAMPLES})")
    print(f"MMD referência:   {MMD_REFERENCE_SIZE}")
    print(f"Pools:            val={VALIDATION_SIZE} teste={TEST_SIZE} treino={TRAIN_SIZE}")
    print(f"Repetições:       {REPETITIONS}")
    print(f"M:                {M_VALUES}")
    print(f"Threads:          {WORKERS}")
    print(f"Log:              {LOG_LEVEL} {LOGFILE or '(sem arquivo)'}")
