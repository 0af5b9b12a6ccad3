"""Neuromorphic processing element: LIF state dynamics and spike mechanisms.

The state update is

    u[t] = alpha * u[t-1] + W_in @ x[t] - W_res @ s[t-1]

and the discrete output s[t] is derived entry-wise from u[t] by one of four
mechanisms (deterministic binary, probabilistic binary, ternary, multi-level).
Spikes produced at step t enter the reset term at step t+1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ShapeError
from .ledger import OpLedger
from .linalg import discrete_matvec, dense_matvec

MODES = ("deterministic-binary", "probabilistic-binary", "ternary", "multi-level")


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    # split by sign so neither branch overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def _scalar_or_array(out: np.ndarray):
    return int(out) if out.ndim == 0 else out


def spike_deterministic(u, gamma: float):
    """1 where ``u > gamma``, else 0 (no spike at equality)."""
    return _scalar_or_array((np.asarray(u, dtype=np.float64) > gamma).astype(np.int64))


def spike_probabilistic(u, gamma: float, rng: np.random.Generator):
    """Bernoulli draw with spiking probability ``sigmoid(u - gamma)``."""
    u = np.asarray(u, dtype=np.float64)
    p = np.asarray(sigmoid(u - gamma))
    draws = rng.random(p.shape)
    return _scalar_or_array((draws < p).astype(np.int64))


def spike_ternary(u, gamma1: float, gamma2: float):
    """-1 if ``u <= gamma1``, +1 if ``u > gamma2``, otherwise 0."""
    if not gamma1 < gamma2:
        raise ParameterError(f"ternary thresholds need gamma1 < gamma2, got {gamma1}, {gamma2}")
    u = np.asarray(u, dtype=np.float64)
    out = np.where(u <= gamma1, -1, np.where(u > gamma2, 1, 0)).astype(np.int64)
    return _scalar_or_array(out)


def _check_increasing(thresholds) -> np.ndarray:
    th = np.asarray(thresholds, dtype=np.float64).ravel()
    if th.size == 0:
        raise ParameterError("at least one threshold is required")
    if np.any(np.diff(th) <= 0):
        raise ParameterError(f"thresholds must be strictly increasing, got {th.tolist()}")
    return th


def spike_multilevel(u, thresholds):
    """Number of thresholds strictly below ``u`` (a level in 0..L)."""
    th = _check_increasing(thresholds)
    u = np.asarray(u, dtype=np.float64)
    out = (u[..., None] > th).sum(axis=-1).astype(np.int64)
    return _scalar_or_array(out)


def reset_matrix(gamma: float, d: int) -> np.ndarray:
    if d < 1:
        raise ParameterError("reset matrix dimension must be >= 1")
    return gamma * np.eye(d)


@dataclass(frozen=True)
class LifParams:
    alpha: float
    w_in: np.ndarray
    w_res: np.ndarray
    thresholds: tuple[float, ...] = (1.0,)
    mode: str = "deterministic-binary"

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ParameterError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.mode not in MODES:
            raise ParameterError(f"unknown spike mode {self.mode!r}")
        w_in = np.atleast_2d(np.asarray(self.w_in, dtype=np.float64))
        w_res = np.atleast_2d(np.asarray(self.w_res, dtype=np.float64))
        if w_res.shape != (w_in.shape[0], w_in.shape[0]):
            raise ShapeError(f"w_res must be {w_in.shape[0]}x{w_in.shape[0]}, got {w_res.shape}")
        th = np.asarray(self.thresholds, dtype=np.float64).ravel()
        # an infinite threshold (never/always spike) is allowed for a single level
        if th.size > 1:
            _check_increasing(th)
        need = {"deterministic-binary": 1, "probabilistic-binary": 1, "ternary": 2}.get(self.mode)
        if need is not None and th.size != need:
            raise ParameterError(f"mode {self.mode} needs exactly {need} threshold(s), got {th.size}")
        if th.size == 0:
            raise ParameterError("at least one threshold is required")
        object.__setattr__(self, "w_in", w_in)
        object.__setattr__(self, "w_res", w_res)
        object.__setattr__(self, "thresholds", tuple(float(g) for g in th))

    @property
    def d_in(self) -> int:
        return self.w_in.shape[1]

    @property
    def d_hidden(self) -> int:
        return self.w_in.shape[0]

    @property
    def levels(self):
        if self.mode == "ternary":
            return "ternary"
        if self.mode == "multi-level":
            return len(self.thresholds) if len(self.thresholds) > 1 else "binary"
        return "binary"

    @classmethod
    def lif(cls, w_in, alpha: float = 0.9, gamma: float = 1.0, reset: bool = True,
            mode: str = "deterministic-binary") -> LifParams:
        """Standard LIF layer: ``W_res = gamma * I`` when ``reset`` else zero."""
        w_in = np.atleast_2d(np.asarray(w_in, dtype=np.float64))
        d = w_in.shape[0]
        w_res = reset_matrix(gamma if math.isfinite(gamma) else 0.0, d) if reset else np.zeros((d, d))
        return cls(alpha, w_in, w_res, (gamma,), mode)


@dataclass
class NpeState:
    u: np.ndarray
    last_spikes: np.ndarray = field(default=None)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64).ravel()
        if self.last_spikes is None:
            self.last_spikes = np.zeros(self.u.shape, dtype=np.int64)
        self.last_spikes = np.asarray(self.last_spikes, dtype=np.int64).ravel()
        if self.u.shape != self.last_spikes.shape:
            raise ShapeError("u and last_spikes must have the same length")

    @classmethod
    def zeros(cls, d_hidden: int) -> NpeState:
        return cls(np.zeros(d_hidden))


def fire(u: np.ndarray, params: LifParams, rng: np.random.Generator | None = None,
         ledger: OpLedger | None = None, phase: str = "npe") -> np.ndarray:
    """Apply the spike mechanism selected by ``params.mode`` to a state vector."""
    u = np.asarray(u, dtype=np.float64)
    th = params.thresholds
    if params.mode == "deterministic-binary":
        s = np.asarray(spike_deterministic(u, th[0]))
        n_cmp = u.size
    elif params.mode == "probabilistic-binary":
        if rng is None:
            raise ParameterError("probabilistic spiking needs an rng")
        s = np.asarray(spike_probabilistic(u, th[0], rng))
        n_cmp = u.size
        if ledger is not None:
            ledger.count(f"{phase}.fire", rng_draws=u.size)
    elif params.mode == "ternary":
        s = np.asarray(spike_ternary(u, th[0], th[1]))
        n_cmp = 2 * u.size
    else:
        s = np.asarray(spike_multilevel(u, th))
        n_cmp = len(th) * u.size
    s = s.reshape(u.shape)
    if ledger is not None:
        ledger.count(f"{phase}.fire", comparisons=n_cmp, spikes_emitted=int(np.count_nonzero(s)))
    return s


def lif_step(state: NpeState, x, params: LifParams, rng: np.random.Generator | None = None,
             ledger: OpLedger | None = None, phase: str = "npe") -> NpeState:
    """One LIF update followed by spike generation.

    Discrete inputs go through the accumulate-only path; real inputs use a
    dense product.  The reset term uses the spikes stored in ``state``.
    """
    x = np.asarray(x)
    if x.ndim != 1 or x.shape[0] != params.d_in:
        raise ShapeError(f"input has shape {x.shape}, expected ({params.d_in},)")
    if state.u.shape[0] != params.d_hidden:
        raise ShapeError(f"state has {state.u.shape[0]} entries, params expect {params.d_hidden}")
    if params.alpha == 1.0:
        u = state.u.copy()
    else:
        u = params.alpha * state.u
        if ledger is not None:
            ledger.count(f"{phase}.decay", multiplications=u.size)
    if np.all(x == np.round(x)):
        u = u + discrete_matvec(x, params.w_in, ledger, f"{phase}.linear")
    else:
        u = u + dense_matvec(x, params.w_in, ledger, f"{phase}.linear")
    if np.any(state.last_spikes):
        u = u - discrete_matvec(state.last_spikes, params.w_res, ledger, f"{phase}.reset")
    s = fire(u, params, rng, ledger, phase)
    return NpeState(u, s)


def run_npe(xs, params: LifParams, rng: np.random.Generator | None = None,
            ledger: OpLedger | None = None, state: NpeState | None = None,
            phase: str = "npe") -> tuple[np.ndarray, np.ndarray]:
    """Drive an NPE with inputs ``xs`` (T x D).  Returns (states T x D_h, spikes T x D_h)."""
    xs = np.asarray(xs)
    if xs.ndim == 1:
        xs = xs[:, None]
    state = state or NpeState.zeros(params.d_hidden)
    us = np.empty((xs.shape[0], params.d_hidden))
    ss = np.empty((xs.shape[0], params.d_hidden), dtype=np.int64)
    for t, x in enumerate(xs):
        state = lif_step(state, x, params, rng, ledger, phase)
        us[t], ss[t] = state.u, state.last_spikes
    return us, ss
