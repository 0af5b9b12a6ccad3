"""Matrix-vector products that exploit discrete, sparse inputs.

With binary inputs ``W @ x`` reduces to summing the columns of ``W`` selected
by the spikes, so no multiplier is needed.  Ternary inputs add or subtract
columns.  Anything else falls back to a dense product that skips zero entries.
Every routine reports its arithmetic to an optional :class:`OpLedger`.
"""

from __future__ import annotations

import numpy as np

from .errors import ModeError, ShapeError
from .ledger import OpLedger


def _check(x: np.ndarray, w: np.ndarray) -> None:
    if w.ndim != 2 or x.ndim != 1 or w.shape[1] != x.shape[0]:
        raise ShapeError(f"cannot multiply {w.shape} by {x.shape}")


def _active_weight_count(w: np.ndarray, cols: np.ndarray) -> int:
    return int(np.count_nonzero(w[:, cols]))


def is_binary(x: np.ndarray) -> bool:
    return bool(np.all((x == 0) | (x == 1)))


def is_ternary(x: np.ndarray) -> bool:
    return bool(np.all((x == 0) | (x == 1) | (x == -1)))


def accumulate_matvec(x, w, ledger: OpLedger | None = None, phase: str = "linear") -> np.ndarray:
    """``w @ x`` for binary ``x`` by summing the selected columns of ``w``."""
    x = np.asarray(x)
    w = np.asarray(w, dtype=np.float64)
    _check(x, w)
    if not is_binary(x):
        raise ModeError("accumulate_matvec needs a binary input")
    cols = np.flatnonzero(x)
    out = np.zeros(w.shape[0])
    for j in cols:
        out += w[:, j]
    if ledger is not None:
        ledger.count(phase, additions=_active_weight_count(w, cols))
    return out


def signed_accumulate_matvec(x, w, ledger: OpLedger | None = None, phase: str = "linear") -> np.ndarray:
    """``w @ x`` for ternary ``x``: add columns where x=+1, subtract where x=-1."""
    x = np.asarray(x)
    w = np.asarray(w, dtype=np.float64)
    _check(x, w)
    if not is_ternary(x):
        raise ModeError("signed_accumulate_matvec needs a ternary input")
    out = np.zeros(w.shape[0])
    for j in np.flatnonzero(x):
        if x[j] > 0:
            out += w[:, j]
        else:
            out -= w[:, j]
    if ledger is not None:
        ledger.count(phase, additions=_active_weight_count(w, np.flatnonzero(x)))
    return out


def dense_matvec(x, w, ledger: OpLedger | None = None, phase: str = "linear") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    _check(x, w)
    cols = np.flatnonzero(x)
    out = w[:, cols] @ x[cols]
    if ledger is not None:
        n = _active_weight_count(w, cols)
        ledger.count(phase, additions=n, multiplications=n)
    return out


def discrete_matvec(x, w, ledger: OpLedger | None = None, phase: str = "linear") -> np.ndarray:
    """Pick the cheapest exact route for ``w @ x`` given what ``x`` contains."""
    x = np.asarray(x)
    if is_binary(x):
        return accumulate_matvec(x, w, ledger, phase)
    if is_ternary(x):
        return signed_accumulate_matvec(x, w, ledger, phase)
    return dense_matvec(x, w, ledger, phase)
