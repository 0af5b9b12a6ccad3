"""Energy/accuracy trade-off sweeps over the number of virtual time steps."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .codec import EncodingSpec, decode_rate, encode_bernoulli
from .errors import DomainError
from .ledger import CostModel, OpLedger, energy_proxy
from .rng import derive_rng


class SweepTask(Protocol):
    def run(self, t_steps: int, rng: np.random.Generator, ledger: OpLedger) -> float:
        """Run one trial with T virtual steps, logging ops; return the task error."""


@dataclass(frozen=True)
class BernoulliRateTask:
    """Bernoulli-encode each value, rate-decode it, report the mean squared error."""

    values: tuple[float, ...] = (0.1, 0.3, 0.5, 0.7, 0.9)

    def run(self, t_steps: int, rng: np.random.Generator, ledger: OpLedger) -> float:
        spec = EncodingSpec("bernoulli", t_steps)
        errs = []
        for x in self.values:
            train = encode_bernoulli(x, spec, rng, ledger)
            # summing the train costs one addition per spike
            ledger.count("decode", additions=train.spike_count())
            errs.append((decode_rate(train) - x) ** 2)
        return float(np.mean(errs))


@dataclass(frozen=True)
class SweepRow:
    T: int
    energy: float
    error: float
    trials: int
    seed: int


def tradeoff_sweep(task: SweepTask, t_values: Sequence[int], trials: int = 20, seed: int = 0,
                   cost: CostModel = CostModel(), workers: int = 1) -> list[SweepRow]:
    """Average energy proxy and task error per T.

    Trial ``j`` at ``T`` draws from ``derive_rng(seed, T, j)``, so the table is
    identical whatever the number of workers.
    """
    t_values = [int(t) for t in t_values]
    if not t_values:
        raise DomainError("tradeoff_sweep needs at least one T value")
    if trials < 1:
        raise DomainError("trials must be >= 1")

    def one(job):
        t, j = job
        ledger = OpLedger()
        err = task.run(t, derive_rng(seed, t, j), ledger)
        return energy_proxy(ledger, cost), err

    jobs = [(t, j) for t in t_values for j in range(trials)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(job) for job in jobs]
    rows = []
    for i, t in enumerate(t_values):
        chunk = np.array(results[i * trials:(i + 1) * trials])
        rows.append(SweepRow(t, float(chunk[:, 0].mean()), float(chunk[:, 1].mean()), trials, seed))
    return rows


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    lines = ["T,energy,error,trials,seed"]
    lines += [f"{r.T},{r.energy!r},{r.error!r},{r.trials},{r.seed}" for r in rows]
    return "\n".join(lines) + "\n"
