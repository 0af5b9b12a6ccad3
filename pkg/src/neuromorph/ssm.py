"""Inter-token mixing through state-space dynamics.

For every value channel d the state h_d (length D_k) follows

    h_d[t] = a[t] h_d[t-1] + b[t] k[t] v_d[t],      y_d[t] = q[t] . h_d[t]

with the token index playing the role of time.  All D_v channel states are
stored as one D_v x D_k matrix and updated with a rank-1 write per step.
Constant gains a = b = 1 give (unnormalized) causal linear attention; the
selective schedule uses a[t] = exp(-delta[t]), b[t] = delta[t] with
delta[t] = softplus(w . z_t + c).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError
from .ledger import OpLedger
from .npe import sigmoid, spike_deterministic, spike_probabilistic
from .rng import as_rng


@dataclass(frozen=True)
class QkvBundle:
    w_v: np.ndarray  # D_v x D_z
    w_k: np.ndarray  # D_k x D_z
    w_q: np.ndarray  # D_k x D_z

    def __post_init__(self):
        mats = [np.atleast_2d(np.asarray(m, dtype=np.float64)) for m in (self.w_v, self.w_k, self.w_q)]
        w_v, w_k, w_q = mats
        if w_k.shape != w_q.shape:
            raise ShapeError(f"keys {w_k.shape} and queries {w_q.shape} must share a shape")
        if w_v.shape[1] != w_k.shape[1]:
            raise ShapeError("all projections must read the same input dimension")
        object.__setattr__(self, "w_v", w_v)
        object.__setattr__(self, "w_k", w_k)
        object.__setattr__(self, "w_q", w_q)

    @property
    def d_z(self) -> int:
        return self.w_v.shape[1]

    @property
    def d_v(self) -> int:
        return self.w_v.shape[0]

    @property
    def d_k(self) -> int:
        return self.w_k.shape[0]

    @classmethod
    def random(cls, d_z: int, d_k: int, d_v: int, seed: int = 0) -> QkvBundle:
        rng = as_rng(seed)
        s = 1.0 / np.sqrt(d_z)
        return cls(rng.normal(0, s, (d_v, d_z)), rng.normal(0, s, (d_k, d_z)), rng.normal(0, s, (d_k, d_z)))

    @classmethod
    def identity(cls, d: int) -> QkvBundle:
        return cls(np.eye(d), np.eye(d), np.eye(d))


@dataclass(frozen=True)
class GateSchedule:
    mode: str = "constant"
    a: float = 1.0
    b: float = 1.0
    w_delta: np.ndarray | None = None
    c_delta: float = 0.0

    def __post_init__(self):
        if self.mode not in ("constant", "selective"):
            raise ParameterError(f"unknown gate mode {self.mode!r}")
        if self.mode == "selective":
            if self.w_delta is None:
                raise ParameterError("selective gates need w_delta")
            object.__setattr__(self, "w_delta", np.asarray(self.w_delta, dtype=np.float64).ravel())

    @classmethod
    def constant(cls, a: float = 1.0, b: float = 1.0) -> GateSchedule:
        return cls("constant", a, b)

    @classmethod
    def selective(cls, w_delta, c_delta: float = 0.0) -> GateSchedule:
        return cls("selective", w_delta=w_delta, c_delta=c_delta)


def softplus(x):
    return np.logaddexp(0.0, x)


def qkv_project(z, bundle: QkvBundle, ledger: OpLedger | None = None):
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] != bundle.d_z:
        raise ShapeError(f"Z must have {bundle.d_z} rows, got shape {z.shape}")
    if ledger is not None:
        n = (bundle.d_v + 2 * bundle.d_k) * bundle.d_z * z.shape[1]
        ledger.count("qkv", multiplications=n, additions=n)
    return bundle.w_v @ z, bundle.w_k @ z, bundle.w_q @ z


def ssm_step(h_d, k, v_d: float, a: float, b: float) -> np.ndarray:
    h_d = np.asarray(h_d, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    return a * h_d + b * v_d * k


def ssm_output(h_d, q) -> float:
    return float(np.dot(np.asarray(q, dtype=np.float64), np.asarray(h_d, dtype=np.float64)))


def selective_gates(z_col, sched: GateSchedule) -> tuple[float, float]:
    if sched.mode != "selective":
        raise ParameterError("selective_gates needs a selective schedule")
    delta = float(softplus(np.dot(sched.w_delta, np.asarray(z_col, dtype=np.float64)) + sched.c_delta))
    return float(np.exp(-delta)), delta


def gains(z, sched: GateSchedule) -> tuple[np.ndarray, np.ndarray]:
    """Per-token gains (a[t], b[t]) for every column of Z."""
    n = np.asarray(z).shape[1]
    if sched.mode == "constant":
        return np.full(n, float(sched.a)), np.full(n, float(sched.b))
    ab = np.array([selective_gates(z[:, t], sched) for t in range(n)])
    return ab[:, 0], ab[:, 1]


def linear_attention_direct(q, k, v) -> np.ndarray:
    """Causal double sum  Y[d, t] = sum_{t' <= t} (q_t . k_t') V[d, t']."""
    q, k, v = (np.asarray(m, dtype=np.float64) for m in (q, k, v))
    n = q.shape[1]
    y = np.zeros((v.shape[0], n))
    for t in range(n):
        for tp in range(t + 1):
            y[:, t] += float(q[:, t] @ k[:, tp]) * v[:, tp]
    return y


def ssm_scan_states(k, v, a_seq, b_seq, h0=None):
    """Yield the D_v x D_k state after each step (rank-1 write per token)."""
    d_v, d_k = v.shape[0], k.shape[0]
    h = np.zeros((d_v, d_k)) if h0 is None else np.array(h0, dtype=np.float64)
    for t in range(k.shape[1]):
        h = a_seq[t] * h + b_seq[t] * np.outer(v[:, t], k[:, t])
        yield h


def ssm_forward(z, bundle: QkvBundle, sched: GateSchedule, ledger: OpLedger | None = None) -> np.ndarray:
    """Project Z, run the recursion over tokens and read out y_d[t] = q_t . h_d[t]."""
    z = np.asarray(z, dtype=np.float64)
    v, k, q = qkv_project(z, bundle, ledger)
    a_seq, b_seq = gains(z, sched)
    n = z.shape[1]
    y = np.empty((bundle.d_v, n))
    for t, h in enumerate(ssm_scan_states(k, v, a_seq, b_seq)):
        y[:, t] = h @ q[:, t]
    if ledger is not None:
        cells = bundle.d_v * bundle.d_k * n
        ledger.count("ssm", multiplications=4 * cells, additions=2 * cells)
    return y


def spiking_ssm_forward(z, bundle: QkvBundle, sched: GateSchedule, spike_mode: str = "probabilistic",
                        gamma: float = 0.0, rng: np.random.Generator | None = None,
                        ledger: OpLedger | None = None) -> np.ndarray:
    """Reset-free SSM whose outputs are passed through a spike mechanism.

    ``spike_mode`` is ``"probabilistic"`` (Bernoulli with sigmoid(y - gamma))
    or ``"deterministic"`` (y > gamma).  The state itself stays linear.
    """
    y = ssm_forward(z, bundle, sched, ledger)
    if spike_mode in ("deterministic", "deterministic-binary"):
        s = np.asarray(spike_deterministic(y, gamma), dtype=np.int64)
    elif spike_mode in ("probabilistic", "probabilistic-binary"):
        if rng is None:
            raise ParameterError("probabilistic spiking needs an rng")
        s = np.asarray(spike_probabilistic(y, gamma, rng), dtype=np.int64)
        if ledger is not None:
            ledger.count("ssm.fire", rng_draws=y.size)
    else:
        raise ParameterError(f"unknown spike mode {spike_mode!r}")
    if ledger is not None:
        ledger.count("ssm.fire", comparisons=y.size, spikes_emitted=int(np.count_nonzero(s)))
    return s.reshape(y.shape)


def spike_probability(z, bundle: QkvBundle, sched: GateSchedule, gamma: float = 0.0) -> np.ndarray:
    """Expected output of the probabilistic spiking SSM."""
    return np.asarray(sigmoid(ssm_forward(z, bundle, sched) - gamma))
