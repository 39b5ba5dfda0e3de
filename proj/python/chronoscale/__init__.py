"""Dynamic equations on time scales: Hilger calculus, Green operators,
bounded and decaying solutions, Lyapunov exponents."""

import json as _json

from ._core import (
    ChronoscaleError,
    TimeScale,
    green_apply,
    hilger_exp,
    run_cli,
    step_ivp,
    ts_exponent,
)
from ._core import builtins as _builtins


def builtins():
    """Catalog of builtin scales, systems, nonlinearities and coefficient forms."""
    return _json.loads(_builtins())


__all__ = [
    "ChronoscaleError",
    "TimeScale",
    "builtins",
    "green_apply",
    "hilger_exp",
    "run_cli",
    "step_ivp",
    "ts_exponent",
]
