"""Conversion between real token entries and spike trains on the virtual time axis.

Schemes
-------
rate-unary        round(x*T) spikes at the lowest time indices
rate-random       round(x*T) spikes at uniformly random indices
bernoulli         T i.i.d. Bernoulli(x) draws
time-positional   T-bit binary expansion of an integer, MSB first
first-to-spike    one spike, earlier for larger x
multilevel-rate   rate code compressed into T/L steps with levels 0..L

Spike counts use round-half-to-even.  Inputs outside [0, 1] can be brought in
range with :class:`AffineMap`, which is kept so decoding can undo it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError
from .ledger import OpLedger
from .rng import as_rng
from .spikes import SpikeTrain

SCHEMES = ("rate-unary", "rate-random", "bernoulli", "time-positional", "first-to-spike",
           "multilevel-rate")


@dataclass(frozen=True)
class EncodingSpec:
    scheme: str = "rate-unary"
    t_steps: int = 8
    levels: int = 1
    seed: int | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ParameterError(f"unknown encoding scheme {self.scheme!r}")
        if int(self.t_steps) < 1:
            raise ParameterError("t_steps must be >= 1")
        if int(self.levels) < 1:
            raise ParameterError("levels must be >= 1")
        if self.scheme == "multilevel-rate" and self.t_steps % self.levels:
            raise ParameterError(f"T={self.t_steps} is not divisible by L={self.levels}")
        if self.scheme == "first-to-spike" and self.t_steps < 2:
            raise ParameterError("first-to-spike needs T >= 2")


@dataclass(frozen=True)
class AffineMap:
    """x_unit = (x - offset) / scale, recorded so decoding can invert it."""

    offset: float = 0.0
    scale: float = 1.0

    @classmethod
    def fit(cls, values) -> AffineMap:
        v = np.asarray(values, dtype=np.float64)
        lo, hi = float(v.min()), float(v.max())
        return cls(lo, hi - lo if hi > lo else 1.0)

    def to_unit(self, x):
        return np.clip((np.asarray(x, dtype=np.float64) - self.offset) / self.scale, 0.0, 1.0)

    def from_unit(self, y):
        return self.offset + self.scale * np.asarray(y, dtype=np.float64)


def _check_unit(x: float) -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"value {x} outside [0, 1]")
    return x


def spike_count(x: float, t_steps: int) -> int:
    # np.rint rounds half to even
    return int(np.rint(_check_unit(x) * t_steps))


def encode_rate(x: float, spec: EncodingSpec, rng: np.random.Generator | None = None) -> SpikeTrain:
    if spec.scheme not in ("rate-unary", "rate-random"):
        raise ParameterError(f"encode_rate cannot produce scheme {spec.scheme!r}")
    k = spike_count(x, spec.t_steps)
    train = np.zeros(spec.t_steps, dtype=np.int64)
    if spec.scheme == "rate-unary":
        train[:k] = 1
    else:
        rng = rng if rng is not None else as_rng(spec.seed)
        train[rng.choice(spec.t_steps, size=k, replace=False)] = 1
    return SpikeTrain(train)


def encode_bernoulli(x: float, spec: EncodingSpec, rng: np.random.Generator | None = None,
                     ledger: OpLedger | None = None) -> SpikeTrain:
    x = _check_unit(x)
    if rng is None:
        if spec.seed is None:
            raise ParameterError("Bernoulli encoding needs a seed or an rng")
        rng = as_rng(spec.seed)
    draws = rng.random(spec.t_steps)
    train = (draws < x).astype(np.int64)
    if ledger is not None:
        ledger.count("encode", rng_draws=spec.t_steps, comparisons=spec.t_steps)
    return SpikeTrain(train)


def encode_time_positional(v: int, spec: EncodingSpec) -> SpikeTrain:
    v = int(v)
    if not 0 <= v < 2 ** spec.t_steps:
        raise DomainError(f"{v} does not fit in {spec.t_steps} bits")
    bits = [(v >> (spec.t_steps - 1 - t)) & 1 for t in range(spec.t_steps)]
    return SpikeTrain(np.array(bits, dtype=np.int64))


def decode_time_positional(train: SpikeTrain) -> np.ndarray:
    weights = 2 ** np.arange(train.T - 1, -1, -1, dtype=np.int64)
    return weights @ train.data


def first_spike_index(x: float, t_steps: int) -> int:
    """1-based time of the single spike; larger values fire earlier."""
    x = _check_unit(x)
    return 1 + int(np.rint((1.0 - x) * (t_steps - 1)))


def encode_first_spike(x: float, spec: EncodingSpec) -> SpikeTrain:
    if spec.t_steps < 2:
        raise ParameterError("first-to-spike needs T >= 2")
    train = np.zeros(spec.t_steps, dtype=np.int64)
    train[first_spike_index(x, spec.t_steps) - 1] = 1
    return SpikeTrain(train)


def decode_first_spike(train: SpikeTrain) -> np.ndarray:
    out = np.zeros(train.D)
    for d in range(train.D):
        idx = np.flatnonzero(train.data[:, d])
        out[d] = 1.0 - idx[0] / (train.T - 1) if idx.size else np.nan
    return out


def encode_multilevel_rate(x: float, spec: EncodingSpec) -> SpikeTrain:
    """Greedy front-loaded multi-level rate code over T/L steps."""
    L = spec.levels
    if L < 2:
        raise ParameterError("multi-level rate coding needs L >= 2")
    if spec.t_steps % L:
        raise ParameterError(f"T={spec.t_steps} is not divisible by L={L}")
    k = spike_count(x, spec.t_steps)
    steps = spec.t_steps // L
    full, rest = divmod(k, L)
    train = np.zeros(steps, dtype=np.int64)
    train[:full] = L
    if rest:
        train[full] = rest
    return SpikeTrain(train, L)


def binary_equivalent_steps(train: SpikeTrain) -> int:
    """Length of the binary train a multi-level train stands in for."""
    return train.T * train.max_level if isinstance(train.levels, int) else train.T


def decode_rate(train: SpikeTrain):
    """Average spiking rate per channel; multi-level trains count each level as spikes.

    Returns a float for single-channel trains, otherwise an array of length D.
    """
    total = train.data.sum(axis=0)
    out = total / binary_equivalent_steps(train)
    return float(out[0]) if train.D == 1 else out


def encode(x: float, spec: EncodingSpec, rng: np.random.Generator | None = None,
           ledger: OpLedger | None = None) -> SpikeTrain:
    """Dispatch on ``spec.scheme`` for a single scalar."""
    if spec.scheme in ("rate-unary", "rate-random"):
        return encode_rate(x, spec, rng)
    if spec.scheme == "bernoulli":
        return encode_bernoulli(x, spec, rng, ledger)
    if spec.scheme == "time-positional":
        return encode_time_positional(int(x), spec)
    if spec.scheme == "first-to-spike":
        return encode_first_spike(x, spec)
    return encode_multilevel_rate(x, spec)


def encode_vector(xs, spec: EncodingSpec, rng: np.random.Generator | None = None,
                  ledger: OpLedger | None = None) -> SpikeTrain:
    """Encode each entry of a token into its own channel: returns T x D."""
    xs = np.asarray(xs, dtype=np.float64).ravel()
    if rng is None and spec.scheme in ("rate-random", "bernoulli"):
        rng = as_rng(spec.seed)
    trains = [encode(x, spec, rng, ledger) for x in xs]
    if not trains:
        return SpikeTrain(np.zeros((spec.t_steps, 0), dtype=np.int64))
    data = np.concatenate([tr.data for tr in trains], axis=1)
    return SpikeTrain(data, trains[0].levels)


def decode(train: SpikeTrain, scheme: str = "rate-unary", affine: AffineMap | None = None) -> np.ndarray:
    if scheme == "time-positional":
        out = decode_time_positional(train).astype(np.float64)
    elif scheme == "first-to-spike":
        out = decode_first_spike(train)
    else:
        out = np.atleast_1d(np.asarray(decode_rate(train), dtype=np.float64))
    return affine.from_unit(out) if affine is not None else out
