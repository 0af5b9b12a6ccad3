import math

import numpy as np
import pytest

from neuromorph.attention import (AttentionMask, attend, attention_forward, attention_scores,
                                  coincidence_score_and, coincidence_score_xnor, score_matrix_csv, softmax,
                                  spiking_attention_forward, spiking_attention_scores,
                                  stochastic_inner)
from neuromorph.codec import EncodingSpec
from neuromorph.errors import DegenerateRowError, DomainError, ParameterError, ShapeError
from neuromorph.ledger import OpLedger
from neuromorph.rng import make_rng
from neuromorph.ssm import QkvBundle, qkv_project

# reconstructed pair with one coincident spike and three agreeing positions
PAIR_A = [1, 0, 1, 0, 0, 1]
PAIR_B = [0, 0, 1, 1, 0, 0]


def brute_force(q, k, v, causal):
    d_k, n = q.shape
    y = np.zeros((v.shape[0], n))
    for i in range(n):
        logits = []
        for j in range(n):
            if causal and j > i:
                continue
            logits.append((j, sum(q[c, i] * k[c, j] for c in range(d_k)) / math.sqrt(d_k)))
        top = max(lg for _, lg in logits)
        weights = [(j, math.exp(lg - top)) for j, lg in logits]
        total = sum(w for _, w in weights)
        for j, w in weights:
            for d in range(v.shape[0]):
                y[d, i] += w / total * v[d, j]
    return y


class TestSoftmax:
    def test_examples(self):
        np.testing.assert_array_equal(softmax([0.0, -np.inf]), [1.0, 0.0])
        np.testing.assert_allclose(softmax([2.0, 2.0, 2.0, 2.0]), 0.25)
        e = [math.exp(x) for x in (1, 2, 3)]
        np.testing.assert_allclose(softmax([1.0, 2.0, 3.0]), [x / sum(e) for x in e], rtol=0, atol=1e-15)

    def test_degenerate(self):
        with pytest.raises(DegenerateRowError):
            softmax([-np.inf, -np.inf])

    def test_large_values_stable(self):
        out = softmax([1000.0, 1000.0])
        np.testing.assert_array_equal(out, [0.5, 0.5])


class TestExact:
    @pytest.mark.parametrize("causal", [False, True])
    def test_brute_force(self, rng, causal):
        for _ in range(20):
            n, d = rng.integers(1, 6), rng.integers(1, 4)
            q, k, v = rng.normal(size=(3, d, n))
            mask = AttentionMask.autoregressive(n) if causal else AttentionMask.full(n)
            s = attention_scores(q, k, mask)
            np.testing.assert_allclose(s.sum(axis=1), 1.0, atol=1e-12)
            if causal:
                assert np.all(s[np.triu_indices(n, 1)] == 0.0)
            np.testing.assert_allclose(attend(s, v), brute_force(q, k, v, causal), atol=1e-12)

    def test_first_row_autoregressive(self, rng):
        q, k = rng.normal(size=(2, 2, 4))
        s = attention_scores(q, k, AttentionMask.autoregressive(4))
        np.testing.assert_array_equal(s[0], [1.0, 0.0, 0.0, 0.0])

    def test_single_token(self):
        np.testing.assert_array_equal(attention_scores(np.ones((2, 1)), np.ones((2, 1))), [[1.0]])

    def test_attend_special_scores(self, rng):
        v = rng.normal(size=(3, 4))
        np.testing.assert_array_equal(attend(np.eye(4), v), v)
        np.testing.assert_allclose(attend(np.full((4, 4), 0.25), v), np.repeat(v.mean(axis=1, keepdims=True), 4, 1))

    def test_mask_causality(self, rng):
        b = QkvBundle.random(3, 2, 2, seed=0)
        z = rng.normal(size=(3, 6))
        z2 = z.copy()
        z2[:, 4:] = rng.normal(size=(3, 2))
        m = AttentionMask.autoregressive(6)
        np.testing.assert_allclose(attention_forward(z, b, m)[:, :4], attention_forward(z2, b, m)[:, :4],
                                   atol=1e-15)

    def test_mask_validation(self):
        with pytest.raises(ParameterError):
            AttentionMask(np.array([[0.0, -1.0], [0.0, 0.0]]))
        with pytest.raises(ShapeError):
            attention_scores(np.ones((2, 3)), np.ones((2, 3)), AttentionMask.full(2))

    def test_csv(self):
        text = score_matrix_csv(np.array([[1.0, 0.0], [0.5, 0.5]]))
        assert text == "1.0,0.0\n0.5,0.5\n"


class TestCoincidence:
    def test_golden_pair(self):
        assert coincidence_score_and(PAIR_A, PAIR_B) == 1
        assert coincidence_score_xnor(PAIR_A, PAIR_B) == 3

    def test_trivial_cases(self):
        ones = [1] * 7
        assert coincidence_score_and(ones, ones) == 7
        assert coincidence_score_and([1, 0, 1], [0, 1, 0]) == 0
        assert coincidence_score_xnor([1, 0, 1], [0, 1, 0]) == 0
        assert coincidence_score_xnor([1, 0, 0], [1, 0, 0]) == 3

    def test_bounds(self, rng):
        for _ in range(100):
            a, b = rng.integers(0, 2, size=(2, 20))
            s_and = coincidence_score_and(a, b)
            assert 0 <= s_and <= min(a.sum(), b.sum())
            assert 0 <= coincidence_score_xnor(a, b) <= 20

    def test_no_multiplications(self):
        led = OpLedger()
        coincidence_score_and(PAIR_A, PAIR_B, led)
        coincidence_score_xnor(PAIR_A, PAIR_B, led)
        assert led.multiplications == 0 and led.comparisons == 12

    def test_errors(self):
        with pytest.raises(ShapeError):
            coincidence_score_and([1, 0], [1, 0, 1])
        with pytest.raises(DomainError):
            coincidence_score_and([2, 0], [1, 0])


class TestStochasticInner:
    def test_trivial(self):
        assert stochastic_inner(np.ones(3), np.ones(3), 16, make_rng(0)) == 3.0
        assert stochastic_inner(np.zeros(3), np.full(3, 0.7), 16, make_rng(0)) == 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            stochastic_inner([1.2], [0.5], 8, make_rng(0))

    def test_unbiased(self):
        rng = make_rng(5)
        p, q = rng.uniform(size=6), rng.uniform(size=6)
        t, n = 64, 1000
        est = np.array([stochastic_inner(p, q, t, rng) for _ in range(n)])
        assert abs(est.mean() - p @ q) < 3 * est.std(ddof=1) / math.sqrt(n)

    def test_error_ratio(self):
        p = q = np.array([0.5, 0.5])
        err = {}
        for t in (256, 4096):
            err[t] = np.mean([abs(stochastic_inner(p, q, t, make_rng(s)) - 0.5) for s in range(100)])
        assert 2.5 <= err[256] / err[4096] <= 6


class TestSpikingForward:
    def setup_method(self):
        self.bundle = QkvBundle.random(4, 4, 4, seed=1)
        self.z = make_rng(2).normal(size=(4, 4))

    def test_stochastic_converges(self):
        exact = attention_forward(self.z, self.bundle)
        gaps = {}
        for t in (512, 8192):
            gaps[t] = np.mean([np.abs(spiking_attention_forward(self.z, self.bundle, "stochastic",
                                                                EncodingSpec("bernoulli", t), seed=s) - exact).max()
                               for s in range(20)])
        assert gaps[8192] < gaps[512]

    @pytest.mark.parametrize("variant", ["lif-and", "lif-xnor", "stochastic"])
    def test_identical_tokens_uniform(self, variant):
        z = np.repeat(make_rng(0).normal(size=(4, 1)), 3, axis=1)
        spec = EncodingSpec("bernoulli" if variant == "stochastic" else "rate-unary", 64)
        y, s = spiking_attention_forward(z, self.bundle, variant, spec, seed=1, return_scores=True)
        v, k, q = qkv_project(z, self.bundle)
        assert y.shape == (4, 3)
        np.testing.assert_allclose(s, 1.0 / 3.0, atol=1e-12)
        np.testing.assert_array_equal(s, spiking_attention_scores(q, k, variant, spec, seed=1))
        if variant != "stochastic":
            np.testing.assert_allclose(y, v, atol=1e-12)

    def test_silent_encodings_uniform(self):
        # thresholds that are never crossed leave every train silent
        y = spiking_attention_forward(self.z, self.bundle, "lif-and", EncodingSpec("rate-unary", 16), gamma=1e9)
        v, _, _ = qkv_project(self.z, self.bundle)
        np.testing.assert_allclose(y, np.repeat(v.mean(axis=1, keepdims=True), 4, 1), atol=1e-12)

    def test_lif_reasonable(self):
        exact = attention_forward(self.z, self.bundle, AttentionMask.autoregressive(4))
        y = spiking_attention_forward(self.z, self.bundle, "lif-and", EncodingSpec("rate-unary", 64),
                                      AttentionMask.autoregressive(4))
        np.testing.assert_allclose(y[:, 0], exact[:, 0], atol=1e-12)

    def test_reproducible(self):
        spec = EncodingSpec("bernoulli", 128)
        a = spiking_attention_forward(self.z, self.bundle, "stochastic", spec, seed=4)
        b = spiking_attention_forward(self.z, self.bundle, "stochastic", spec, seed=4)
        np.testing.assert_array_equal(a, b)

    def test_unknown_variant(self):
        with pytest.raises(ParameterError):
            spiking_attention_forward(self.z, self.bundle, "xor", EncodingSpec())
