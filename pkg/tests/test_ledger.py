import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neuromorph.errors import DomainError, ModeError, ShapeError
from neuromorph.ledger import CostModel, OpLedger, energy_proxy, sparsity
from neuromorph.linalg import accumulate_matvec, dense_matvec, discrete_matvec, signed_accumulate_matvec
from neuromorph.sweep import BernoulliRateTask, sweep_csv, tradeoff_sweep

counts = st.fixed_dictionaries({
    "additions": st.integers(0, 1000), "multiplications": st.integers(0, 1000),
    "comparisons": st.integers(0, 1000), "rng_draws": st.integers(0, 1000),
})


def ledger_of(ops, phase="p"):
    led = OpLedger()
    led.count(phase, **ops)
    return led


class TestLedger:
    def test_counts_and_phases(self):
        led = OpLedger()
        led.count("a.linear", additions=3)
        led.count("b.linear", additions=2, multiplications=1)
        assert led.additions == 5
        assert led.phase("a.linear")["additions"] == 3
        assert led.phase_total("additions", ".linear") == 5

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            OpLedger().count(additions=-1)

    @settings(max_examples=50, deadline=None)
    @given(counts, counts, counts)
    def test_merge_associative(self, a, b, c):
        la, lb, lc = ledger_of(a, "x"), ledger_of(b, "y"), ledger_of(c, "x")
        assert (la + lb) + lc == la + (lb + lc)
        assert la + lb == lb + la

    @settings(max_examples=50, deadline=None)
    @given(counts, counts)
    def test_energy_additive(self, a, b):
        la, lb = ledger_of(a), ledger_of(b)
        assert energy_proxy(la + lb) == energy_proxy(la) + energy_proxy(lb)

    def test_energy_weights(self):
        led = ledger_of({"additions": 2, "multiplications": 3, "comparisons": 5, "rng_draws": 7})
        assert energy_proxy(led, CostModel(1, 4, 1, 1)) == 2 + 12 + 5 + 7
        assert energy_proxy(led, CostModel(0, 0, 0, 0)) == 0

    def test_sparsity(self):
        assert sparsity(np.array([[0, 1], [0, 0]])) == 0.75


class TestMatvec:
    def test_accumulate_matches_dense(self, rng):
        w = rng.normal(size=(6, 9))
        x = rng.integers(0, 2, size=9)
        led = OpLedger()
        np.testing.assert_allclose(accumulate_matvec(x, w, led), w @ x, atol=1e-12)
        assert led.multiplications == 0
        assert led.additions == 6 * int(x.sum())

    def test_zero_weights_not_counted(self):
        w = np.array([[1.0, 0.0], [0.0, 0.0]])
        led = OpLedger()
        accumulate_matvec(np.array([1, 1]), w, led)
        assert led.additions == 1

    def test_signed(self, rng):
        w = rng.normal(size=(4, 5))
        x = np.array([1, -1, 0, 0, 1])
        led = OpLedger()
        np.testing.assert_allclose(signed_accumulate_matvec(x, w, led), w @ x, atol=1e-12)
        assert led.multiplications == 0

    def test_mode_errors(self):
        with pytest.raises(ModeError):
            accumulate_matvec(np.array([0.5, 1]), np.eye(2))
        with pytest.raises(ShapeError):
            accumulate_matvec(np.array([0, 1, 1]), np.eye(2))

    def test_dense_counts_multiplications(self, rng):
        w = rng.normal(size=(3, 4))
        x = np.array([0.5, 0.0, 2.0, 0.0])
        led = OpLedger()
        np.testing.assert_allclose(dense_matvec(x, w, led), w @ x)
        assert led.multiplications == 6
        led2 = OpLedger()
        discrete_matvec(np.array([1, 0, 1, 1]), w, led2)
        assert led2.multiplications == 0


class TestSweep:
    def test_monotone_energy_and_error(self):
        rows = tradeoff_sweep(BernoulliRateTask(), [1, 4, 16, 64], trials=20, seed=0)
        energy = [r.energy for r in rows]
        error = [r.error for r in rows]
        assert all(a < b for a, b in zip(energy, energy[1:]))
        assert all(a >= b for a, b in zip(error, error[1:]))

    def test_workers_do_not_change_table(self):
        a = tradeoff_sweep(BernoulliRateTask(), [2, 8], trials=5, seed=3, workers=1)
        b = tradeoff_sweep(BernoulliRateTask(), [2, 8], trials=5, seed=3, workers=4)
        assert sweep_csv(a) == sweep_csv(b)

    def test_csv_header(self):
        text = sweep_csv(tradeoff_sweep(BernoulliRateTask((0.5,)), [1, 4], trials=2))
        lines = text.splitlines()
        assert lines[0] == "T,energy,error,trials,seed"
        assert len(lines) == 3

    def test_rejects_empty(self):
        with pytest.raises(DomainError):
            tradeoff_sweep(BernoulliRateTask(), [])
