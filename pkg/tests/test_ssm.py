import math

import numpy as np
import pytest

from neuromorph.errors import ParameterError, ShapeError
from neuromorph.ledger import OpLedger
from neuromorph.rng import make_rng
from neuromorph.ssm import (GateSchedule, QkvBundle, gains, linear_attention_direct, qkv_project,
                            selective_gates, softplus, spike_probability, spiking_ssm_forward, ssm_forward,
                            ssm_output, ssm_step)


def double_sum(q, k, v):
    d_v, n = v.shape
    y = np.zeros((d_v, n))
    for d in range(d_v):
        for t in range(n):
            y[d, t] = sum(sum(q[i, t] * k[i, s] for i in range(q.shape[0])) * v[d, s] for s in range(t + 1))
    return y


def channel_recursion(q, k, v, a_seq, b_seq):
    """Per-channel scalar recursion built from ssm_step / ssm_output."""
    d_v, n = v.shape
    y = np.zeros((d_v, n))
    for d in range(d_v):
        h = np.zeros(k.shape[0])
        for t in range(n):
            h = ssm_step(h, k[:, t], v[d, t], a_seq[t], b_seq[t])
            y[d, t] = ssm_output(h, q[:, t])
    return y


class TestPrimitives:
    def test_step_examples(self):
        np.testing.assert_array_equal(ssm_step([1, 0], [0, 1], 3.0, 0.5, 2.0), [0.5, 6.0])
        np.testing.assert_array_equal(ssm_step([0, 0], [2, 1], 3.0, 1.0, 1.0), [6.0, 3.0])
        np.testing.assert_array_equal(ssm_step([2, 4], [1, 1], 3.0, 0.25, 0.0), [0.5, 1.0])

    def test_output(self, rng):
        h, q = rng.normal(size=5), rng.normal(size=5)
        assert ssm_output(h, q) == pytest.approx(sum(a * b for a, b in zip(h, q)), abs=1e-14)
        assert ssm_output(h, np.eye(5)[2]) == h[2]

    def test_project(self, rng):
        b = QkvBundle.random(4, 3, 2, seed=1)
        z = rng.normal(size=(4, 6))
        v, k, q = qkv_project(z, b)
        for t in range(6):
            np.testing.assert_allclose(v[:, t], b.w_v @ z[:, t], atol=1e-12)
            np.testing.assert_allclose(k[:, t], b.w_k @ z[:, t], atol=1e-12)
        v, k, q = qkv_project(z, QkvBundle.identity(4))
        np.testing.assert_array_equal(k, z)
        with pytest.raises(ShapeError):
            qkv_project(np.zeros((3, 2)), b)


class TestGates:
    def test_softplus_oracle(self, rng):
        w = rng.normal(size=3)
        z = rng.normal(size=3)
        a, b = selective_gates(z, GateSchedule.selective(w, 0.2))
        delta = math.log1p(math.exp(float(w @ z) + 0.2))
        assert b == pytest.approx(delta, abs=1e-12)
        assert a == pytest.approx(math.exp(-delta), abs=1e-12)

    def test_large_delta_forgets(self):
        a, b = selective_gates(np.array([1.0]), GateSchedule.selective([30.0]))
        assert a < 1e-13 and b == pytest.approx(30.0)

    def test_small_delta_retains(self):
        a, b = selective_gates(np.array([1.0]), GateSchedule.selective([-800.0]))
        assert a == 1.0 and b == 0.0

    def test_nonnegative(self, rng):
        assert np.all(softplus(rng.normal(size=1000) * 50) >= 0)

    def test_requires_selective(self):
        with pytest.raises(ParameterError):
            selective_gates(np.zeros(2), GateSchedule.constant())


class TestForward:
    def test_linear_attention_equivalence(self, rng):
        for _ in range(10):
            n, dk, dv, dz = rng.integers(1, 12), rng.integers(1, 5), rng.integers(1, 4), 4
            b = QkvBundle.random(dz, dk, dv, seed=int(rng.integers(1000)))
            z = rng.normal(size=(dz, n))
            v, k, q = qkv_project(z, b)
            ref = double_sum(q, k, v)
            np.testing.assert_allclose(ssm_forward(z, b, GateSchedule.constant()), ref, rtol=1e-10, atol=1e-12)
            np.testing.assert_allclose(linear_attention_direct(q, k, v), ref, rtol=1e-10, atol=1e-12)

    def test_selective_matches_channel_recursion(self, rng):
        b = QkvBundle.random(3, 2, 2, seed=0)
        sched = GateSchedule.selective(rng.normal(size=3), -0.5)
        z = rng.normal(size=(3, 9))
        v, k, q = qkv_project(z, b)
        a_seq, b_seq = gains(z, sched)
        np.testing.assert_allclose(ssm_forward(z, b, sched), channel_recursion(q, k, v, a_seq, b_seq),
                                   rtol=1e-12, atol=1e-14)

    def test_single_token(self, rng):
        b = QkvBundle.random(3, 2, 2, seed=3)
        z = rng.normal(size=(3, 1))
        v, k, q = qkv_project(z, b)
        y = ssm_forward(z, b, GateSchedule.constant(0.3, 1.7))
        np.testing.assert_allclose(y[:, 0], 1.7 * float(q[:, 0] @ k[:, 0]) * v[:, 0], rtol=1e-12)

    def test_causality(self, rng):
        b = QkvBundle.random(3, 2, 2, seed=4)
        sched = GateSchedule.selective(rng.normal(size=3))
        z = rng.normal(size=(3, 8))
        z2 = z.copy()
        z2[:, 5:] += rng.normal(size=(3, 3))
        np.testing.assert_array_equal(ssm_forward(z, b, sched)[:, :5], ssm_forward(z2, b, sched)[:, :5])

    def test_linearity_in_values(self, rng):
        q, k = rng.normal(size=(2, 6)), rng.normal(size=(2, 6))
        v1, v2 = rng.normal(size=(3, 6)), rng.normal(size=(3, 6))
        a_seq, b_seq = rng.uniform(0.2, 1, 6), rng.uniform(0, 2, 6)
        lhs = channel_recursion(q, k, v1 + v2, a_seq, b_seq)
        rhs = channel_recursion(q, k, v1, a_seq, b_seq) + channel_recursion(q, k, v2, a_seq, b_seq)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_retention(self, rng):
        # a=1, b=0 after the first token: the state written at t=1 is preserved
        q, k, v = rng.normal(size=(2, 5)), rng.normal(size=(2, 5)), rng.normal(size=(1, 5))
        a_seq, b_seq = np.ones(5), np.r_[1.0, np.zeros(4)]
        h1 = v[0, 0] * k[:, 0]
        y = channel_recursion(q, k, v, a_seq, b_seq)
        for t in range(5):
            assert y[0, t] == pytest.approx(q[:, t] @ h1, abs=1e-14)

    def test_zero_values(self, rng):
        b = QkvBundle(np.zeros((2, 3)), rng.normal(size=(2, 3)), rng.normal(size=(2, 3)))
        assert not ssm_forward(rng.normal(size=(3, 4)), b, GateSchedule.constant()).any()


class TestSpiking:
    def test_always_spike(self, rng):
        b = QkvBundle.random(3, 2, 2)
        s = spiking_ssm_forward(rng.normal(size=(3, 4)), b, GateSchedule.constant(), "deterministic", -math.inf)
        assert np.all(s == 1)

    def test_reproducible(self, rng):
        b = QkvBundle.random(3, 2, 2)
        z = rng.normal(size=(3, 6))
        s1 = spiking_ssm_forward(z, b, GateSchedule.constant(), rng=make_rng(3))
        s2 = spiking_ssm_forward(z, b, GateSchedule.constant(), rng=make_rng(3))
        np.testing.assert_array_equal(s1, s2)

    def test_rate_tracks_sigmoid(self):
        b = QkvBundle.random(2, 2, 1, seed=2)
        z = np.array([[0.5, -0.3, 1.0], [0.2, 0.4, -0.6]])
        sched = GateSchedule.constant(0.9, 1.0)
        p = spike_probability(z, b, sched, gamma=0.1)
        rng, n = make_rng(11), 10_000
        total = sum(spiking_ssm_forward(z, b, sched, gamma=0.1, rng=rng) for _ in range(n))
        rate = total / n
        assert np.all(np.abs(rate - p) <= 3 * np.sqrt(p * (1 - p) / n))

    def test_ledger_logs_draws(self):
        led = OpLedger()
        spiking_ssm_forward(np.ones((2, 3)), QkvBundle.identity(2), GateSchedule.constant(), rng=make_rng(0),
                            ledger=led)
        assert led.rng_draws == 6 and led.comparisons == 6

    def test_unknown_mode(self):
        with pytest.raises(ParameterError):
            spiking_ssm_forward(np.ones((2, 2)), QkvBundle.identity(2), GateSchedule.constant(), "ternary")
