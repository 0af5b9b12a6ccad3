"""Parallel evaluations of the linear recurrence h[t] = a[t] h[t-1] + u[t].

``toeplitz_forward`` covers constant gains as a lower-triangular Toeplitz
matrix product; ``parallel_scan`` handles time-varying gains with a
work-efficient (Brent-Kung) up-sweep/down-sweep over the associative operator

    (a1, u1) o (a2, u2) = (a1 a2, a2 u1 + u2)        # (a1, u1) comes first

Every level of either sweep is a batch of independent combines; the tree
shape is fixed, so results do not depend on scheduling.
"""

from __future__ import annotations

import warnings

import numpy as np

from ..ledger import OpLedger


def sequential_scan(a_seq, u_seq, h0=None) -> np.ndarray:
    a_seq = np.asarray(a_seq, dtype=np.float64)
    u_seq = np.asarray(u_seq, dtype=np.float64)
    h = np.zeros(u_seq.shape[1:]) if h0 is None else np.asarray(h0, dtype=np.float64)
    out = np.empty_like(u_seq)
    for t in range(u_seq.shape[0]):
        h = a_seq[t] * h + u_seq[t]
        out[t] = h
    return out


def toeplitz_matrix(a: float, b: float, t_steps: int) -> np.ndarray:
    """C[t, t'] = b a^(t - t') for t' <= t, zero above the diagonal."""
    lag = np.arange(t_steps)[:, None] - np.arange(t_steps)[None, :]
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        c = b * np.power(float(a), np.where(lag >= 0, lag, 0))
    return np.where(lag >= 0, c, 0.0)


def toeplitz_forward(a: float, b: float, kv_seq, block: int | None = None) -> np.ndarray:
    """States h[t] = sum_{t' <= t} a^(t-t') b kv[t'] for a D x T input, as D x T.

    ``block`` splits the output time axis into independent row blocks of the
    Toeplitz matrix, the unit of parallel work.
    """
    if abs(a) > 1:
        warnings.warn(f"|a| = {abs(a)} > 1: impulse response diverges", RuntimeWarning, stacklevel=2)
    kv = np.asarray(kv_seq, dtype=np.float64)
    squeeze = kv.ndim == 1
    kv = np.atleast_2d(kv)
    t_steps = kv.shape[1]
    c = toeplitz_matrix(a, b, t_steps)
    block = block or t_steps
    h = np.empty_like(kv)
    for start in range(0, t_steps, block):
        rows = slice(start, min(start + block, t_steps))
        h[:, rows] = kv[:, : rows.stop] @ c[rows, : rows.stop].T
    return h[0] if squeeze else h


def _combine(a1, u1, a2, u2):
    a2u = a2.reshape(a2.shape + (1,) * (u1.ndim - 1))
    return a1 * a2, a2u * u1 + u2


def parallel_scan(a_seq, u_seq, ledger: OpLedger | None = None) -> np.ndarray:
    """Inclusive scan of h[t] = a[t] h[t-1] + u[t] with h[0] = 0.

    ``u_seq`` may carry trailing dimensions (T x ...); gains are per step.
    Operator applications are tallied under ``"scan_combine"`` and stay
    below 2T.
    """
    a = np.array(a_seq, dtype=np.float64)
    u = np.array(u_seq, dtype=np.float64)
    n = a.shape[0]
    if u.shape[0] != n:
        raise ValueError(f"{n} gains for {u.shape[0]} inputs")
    width = int(np.prod(u.shape[1:], dtype=np.int64)) if u.ndim > 1 else 1
    applied = 0

    def apply(left, right):
        nonlocal applied
        a[right], u[right] = _combine(a[left], u[left], a[right], u[right])
        applied += len(right)

    # up-sweep: node k accumulates the block ending at k
    d = 1
    while 2 * d <= n:
        right = np.arange(2 * d - 1, n, 2 * d)
        apply(right - d, right)
        d *= 2
    # down-sweep: push block totals into the gaps
    d //= 2
    while d >= 1:
        left = np.arange(2 * d - 1, n - d, 2 * d)
        apply(left, left + d)
        d //= 2
    if ledger is not None:
        ledger.tally("scan_combine", applied)
        ledger.count("scan", multiplications=applied * (1 + width), additions=applied * width)
    return u
