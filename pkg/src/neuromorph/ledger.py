"""Operation counting and the energy proxy built on top of it.

The ledger records additions, multiplications, comparisons, random draws and
emitted spikes, both globally and per phase (a free-form label such as
``"layer0.linear"``).  Energy is never measured; ``energy_proxy`` weighs the
counters with a configurable :class:`CostModel`.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

COUNTERS = ("additions", "multiplications", "comparisons", "rng_draws", "spikes_emitted")


@dataclass
class OpLedger:
    additions: int = 0
    multiplications: int = 0
    comparisons: int = 0
    rng_draws: int = 0
    spikes_emitted: int = 0
    phases: dict[str, Counter] = field(default_factory=dict)
    # named event tallies that are not arithmetic, e.g. scan operator applications
    events: Counter = field(default_factory=Counter)

    def count(self, phase: str = "", **ops: int) -> None:
        """Increment counters, optionally attributing them to ``phase``.

        Counters only ever grow; a negative increment raises.
        """
        bucket = None
        if phase:
            bucket = self.phases.setdefault(phase, Counter())
        for name, n in ops.items():
            if name not in COUNTERS:
                raise KeyError(f"unknown counter {name!r}")
            n = int(n)
            if n < 0:
                raise DomainError(f"negative increment {n} for {name}")
            setattr(self, name, getattr(self, name) + n)
            if bucket is not None:
                bucket[name] += n

    def tally(self, event: str, n: int = 1) -> None:
        if n < 0:
            raise DomainError(f"negative tally {n} for {event}")
        self.events[event] += int(n)

    def phase(self, name: str) -> dict[str, int]:
        bucket = self.phases.get(name, Counter())
        return {c: int(bucket.get(c, 0)) for c in COUNTERS}

    def phase_total(self, counter: str, suffix: str) -> int:
        """Sum ``counter`` over every phase whose label ends with ``suffix``."""
        return sum(int(b.get(counter, 0)) for p, b in self.phases.items() if p.endswith(suffix))

    def totals(self) -> dict[str, int]:
        return {c: getattr(self, c) for c in COUNTERS}

    def merge(self, other: OpLedger) -> OpLedger:
        out = OpLedger(**{c: getattr(self, c) + getattr(other, c) for c in COUNTERS})
        for src in (self, other):
            for p, bucket in src.phases.items():
                out.phases.setdefault(p, Counter()).update(bucket)
            out.events.update(src.events)
        return out

    __add__ = merge

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OpLedger):
            return NotImplemented
        norm = lambda d: {k: +v for k, v in d.items() if +v}  # noqa: E731
        return (
            self.totals() == other.totals()
            and {p: norm(b) for p, b in self.phases.items() if norm(b)}
            == {p: norm(b) for p, b in other.phases.items() if norm(b)}
            and norm(self.events) == norm(other.events)
        )


@dataclass(frozen=True)
class CostModel:
    """Relative cost per operation.  Multiplications default to 4x an addition."""

    c_add: float = 1.0
    c_mul: float = 4.0
    c_cmp: float = 1.0
    c_rng: float = 1.0

    def __post_init__(self):
        for name in ("c_add", "c_mul", "c_cmp", "c_rng"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative")


def energy_proxy(ledger: OpLedger, model: CostModel = CostModel()) -> float:
    return (
        model.c_add * ledger.additions
        + model.c_mul * ledger.multiplications
        + model.c_cmp * ledger.comparisons
        + model.c_rng * ledger.rng_draws
    )


def sparsity(train) -> float:
    """Fraction of zero entries of a spike train (or any array)."""
    data = np.asarray(getattr(train, "data", train))
    if data.size == 0:
        return 1.0
    return float(np.count_nonzero(data == 0)) / data.size
