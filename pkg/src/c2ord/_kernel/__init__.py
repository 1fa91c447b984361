"""Evaluation kernel with backend selection.

The compiled extension is preferred; the pure-Python twin is used when the
extension is missing or when C2ORD_FORCE_FALLBACK is set (useful for
benchmarks and differential tests).
"""

import os

from .bytecode import Program, CompileError, compile_formula, structure_tables
from . import fallback

if os.environ.get("C2ORD_FORCE_FALLBACK"):
    _impl = fallback
    BACKEND = "python"
else:
    try:
        from . import _speedups as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = fallback
        BACKEND = "python"

FOUND = fallback.FOUND
EXHAUSTED = fallback.EXHAUSTED
BUDGET = fallback.BUDGET
TRI_FALSE = fallback.TRI_FALSE
TRI_TRUE = fallback.TRI_TRUE
TRI_UNKNOWN = fallback.TRI_UNKNOWN

check = _impl.check
check3 = _impl.check3
find_model = _impl.find_model
sweep_succ_equiv = _impl.sweep_succ_equiv

__all__ = [
    "BACKEND",
    "BUDGET",
    "CompileError",
    "EXHAUSTED",
    "FOUND",
    "Program",
    "TRI_FALSE",
    "TRI_TRUE",
    "TRI_UNKNOWN",
    "check",
    "check3",
    "compile_formula",
    "fallback",
    "find_model",
    "structure_tables",
    "sweep_succ_equiv",
]
