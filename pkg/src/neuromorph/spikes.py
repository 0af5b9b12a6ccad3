"""Spike trains: discrete activations over a (virtual or real) time axis.

A :class:`SpikeTrain` holds a ``T x D`` integer array plus its level set:

* ``"binary"``  - entries in {0, 1}
* ``"ternary"`` - entries in {-1, 0, 1}
* an int ``L >= 2`` - multi-level, entries in {0, ..., L}

Text format (one header line, then one line per time step)::

    T D levels
    s_11 s_12 ... s_1D
    ...

where ``levels`` is ``binary``, ``ternary`` or the integer ``L``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ModeError, ParameterError, ShapeError

Levels = Union[str, int]


def normalize_levels(levels: Levels) -> Levels:
    if levels in ("binary", 1):
        return "binary"
    if levels == "ternary":
        return "ternary"
    if isinstance(levels, (int, np.integer)) and not isinstance(levels, bool) and levels >= 2:
        return int(levels)
    raise ParameterError(f"unsupported level set {levels!r}")


def level_bounds(levels: Levels) -> tuple[int, int]:
    levels = normalize_levels(levels)
    if levels == "binary":
        return 0, 1
    if levels == "ternary":
        return -1, 1
    return 0, levels


@dataclass(frozen=True)
class SpikeTrain:
    data: np.ndarray
    levels: Levels = "binary"

    def __post_init__(self):
        levels = normalize_levels(self.levels)
        data = np.asarray(self.data)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2:
            raise ShapeError(f"spike train must be T x D, got shape {data.shape}")
        if data.size and not np.all(data == np.round(data)):
            raise ModeError("spike train entries must be integers")
        data = data.astype(np.int64)
        lo, hi = level_bounds(levels)
        if data.size and (data.min() < lo or data.max() > hi):
            raise ModeError(f"entries outside level set {levels!r}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "levels", levels)

    @property
    def T(self) -> int:
        return self.data.shape[0]

    @property
    def D(self) -> int:
        return self.data.shape[1]

    @property
    def max_level(self) -> int:
        return level_bounds(self.levels)[1]

    def spike_count(self) -> int:
        return int(np.count_nonzero(self.data))

    def sparsity(self) -> float:
        if self.data.size == 0:
            return 1.0
        return 1.0 - self.spike_count() / self.data.size

    def channel(self, d: int) -> np.ndarray:
        return self.data[:, d]

    def to_text(self) -> str:
        lines = [f"{self.T} {self.D} {self.levels}"]
        lines += [" ".join(str(int(v)) for v in row) for row in self.data]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> SpikeTrain:
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        if not rows or len(rows[0]) != 3:
            raise ParameterError("missing 'T D levels' header")
        t, d, lv = rows[0]
        levels: Levels = lv if lv in ("binary", "ternary") else int(lv)
        t, d = int(t), int(d)
        body = rows[1:]
        if len(body) != t or any(len(r) != d for r in body):
            raise ShapeError(f"header says {t}x{d}, body disagrees")
        data = np.array([[int(v) for v in r] for r in body], dtype=np.int64).reshape(t, d)
        return cls(data, levels)


def concat_channels(trains: list[SpikeTrain]) -> SpikeTrain:
    if not trains:
        raise ShapeError("nothing to concatenate")
    levels = trains[0].levels
    if any(tr.levels != levels for tr in trains):
        raise ModeError("mixed level sets")
    return SpikeTrain(np.concatenate([tr.data for tr in trains], axis=1), levels)
