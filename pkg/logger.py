"""
LOGGER — PADRÃO OPERACIONAL DO TIPICO

1. OBJETIVO
   Logger leve e determinístico para a CLI e as campanhas de simulação.

2. PRINCÍPIOS
   - Toda mensagem de log vai para STDERR (via rich.Console).
     STDOUT fica reservado para dados: fluxo CSV de veredictos e resumos
     de comandos, que precisam continuar parseáveis.
   - Arquivo de log opcional, aberto UMA única vez, sem códigos de cor.
   - Falhas no logger NUNCA são silenciosas (vão para stderr cru).

3. NÍVEIS
   - Hierárquicos e comparáveis; LOG_LEVEL controla a verbosidade.
   - Níveis de domínio: OK (etapa concluída), SKIP (teste não aplicável),
     FINALIZADO (fim de campanha).
"""

import os
import sys
from datetime import datetime
from typing import Optional, TextIO

from rich.console import Console
from rich.markup import escape

# =========================
# Níveis de log (ordinais)
# =========================

LEVELS = {
    "DEBUG": 10,
    "SKIP": 15,
    "INFO": 20,
    "OK": 25,
    "AVISO": 30,
    "ERRO": 40,
    "FINALIZADO": 50,
}

LOG_LEVEL = LEVELS.get(os.getenv("LOG_LEVEL", "INFO").upper(), 20)

STYLES = {
    "DEBUG": "magenta",
    "SKIP": "bright_black",
    "INFO": "white",
    "OK": "green",
    "AVISO": "yellow",
    "ERRO": "bright_red",
    "FINALIZADO": "bright_cyan",
}

# =========================
# Estado interno
# =========================

console = Console(stderr=True, no_color=bool(os.environ.get("NO_COLOR")), highlight=False)
_logfile_handle: Optional[TextIO] = None

# =========================
# Configuração pública
# =========================

def set_level(level: str):
    global LOG_LEVEL
    LOG_LEVEL = LEVELS.get(str(level).upper(), LOG_LEVEL)


def set_logfile(path: str):
    global _logfile_handle
    close_logger()
    _logfile_handle = open(path, "a", encoding="utf-8", buffering=1)


def close_logger():
    global _logfile_handle
    if _logfile_handle:
        _logfile_handle.close()
        _logfile_handle = None

# =========================
# Core do logger
# =========================

def log(msg: str, tipo: str = "INFO"):
    tipo = tipo.upper()
    level = LEVELS.get(tipo, LEVELS["INFO"])

    if level < LOG_LEVEL:
        return

    ts = datetime.now().strftime("%H:%M:%S")
    style = STYLES.get(tipo, "white")

    # Terminal
    console.print(f"[{ts}] [{style}]\\[{tipo}] {escape(str(msg))}[/{style}]")

    # Arquivo
    if _logfile_handle:
        try:
            _logfile_handle.write(f"[{ts}] [{tipo}] {msg}\n")
        except Exception as e:
            sys.__stderr__.write(f"[LOGGER][FILE ERROR] {e}\n")

# =========================
# Wrappers semânticos
# =========================

def log_debug(msg):      log(msg, "DEBUG")
def log_info(msg):       log(msg, "INFO")
def log_ok(msg):         log(msg, "OK")
def log_aviso(msg):      log(msg, "AVISO")
def log_erro(msg):       log(msg, "ERRO")
def log_finalizado(msg): log(msg, "FINALIZADO")
def log_skip(msg):       log(msg, "SKIP")
