"""Softmax self-attention and its spiking approximations.

Exact path: scores S = softmax_row((Q^T K + M) / sqrt(D_k)), output Y = V S^T.
Masked entries hold ``-inf`` and are left out of the exponent sum, so they come
out as exact zeros.

Spiking variants replace the query-key inner products:

``lif-and``     LIF-encode Q and K columns, count coincident spikes (AND)
``lif-xnor``    same encodings, count coincident binary digits (XNOR)
``stochastic``  Bernoulli bitstreams; AND of independent streams multiplies
                probabilities, so products (and the score-value mixing) are
                estimated without multipliers and converge as T grows.

Coincidence counts are divided by T before the usual scaling and softmax.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import AffineMap, EncodingSpec, encode_vector
from .errors import DegenerateRowError, DomainError, ParameterError, ShapeError
from .ledger import OpLedger
from .npe import LifParams, run_npe
from .rng import derive_rng
from .ssm import QkvBundle, qkv_project

VARIANTS = ("lif-and", "lif-xnor", "stochastic")


@dataclass(frozen=True)
class AttentionMask:
    m: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        m = np.asarray(self.m, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeError("mask must be square")
        if np.any((m != 0) & ~np.isneginf(m)):
            raise ParameterError("mask entries must be 0 or -inf")
        object.__setattr__(self, "m", m)

    @property
    def n(self) -> int:
        return self.m.shape[0]

    @property
    def visible(self) -> np.ndarray:
        return self.m == 0

    @classmethod
    def autoregressive(cls, n: int) -> AttentionMask:
        m = np.where(np.tril(np.ones((n, n), dtype=bool)), 0.0, -np.inf)
        return cls(m, "autoregressive")

    @classmethod
    def full(cls, n: int) -> AttentionMask:
        return cls(np.zeros((n, n)), "full")

    @classmethod
    def of_kind(cls, kind: str, n: int) -> AttentionMask:
        if kind == "autoregressive":
            return cls.autoregressive(n)
        if kind == "full":
            return cls.full(n)
        raise ParameterError(f"unknown mask kind {kind!r}")


def softmax(z) -> np.ndarray:
    """Max-subtracted softmax; ``-inf`` entries map to exactly 0."""
    z = np.asarray(z, dtype=np.float64)
    live = ~np.isneginf(z)
    if not live.any():
        raise DegenerateRowError("every entry is masked")
    out = np.zeros_like(z)
    e = np.exp(z[live] - z[live].max())
    out[live] = e / e.sum()
    return out


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    return np.stack([softmax(row) for row in logits])


def _mask_for(mask: AttentionMask | None, n: int) -> AttentionMask:
    mask = mask if mask is not None else AttentionMask.full(n)
    if mask.n != n:
        raise ShapeError(f"mask is {mask.n}x{mask.n} for {n} tokens")
    return mask


def scores_from_logits(logits, mask: AttentionMask | None, d_k: int, use_softmax: bool = True) -> np.ndarray:
    """Turn raw query-key similarities (N x N) into a score matrix."""
    logits = np.asarray(logits, dtype=np.float64)
    mask = _mask_for(mask, logits.shape[0])
    if not use_softmax:
        if not mask.visible.any(axis=1).all():
            raise DegenerateRowError("a row is fully masked")
        return np.where(mask.visible, logits, 0.0)
    return _softmax_rows((logits + mask.m) / np.sqrt(d_k))


def attention_scores(q, k, mask: AttentionMask | None = None) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    if q.shape != k.shape:
        raise ShapeError(f"Q {q.shape} and K {k.shape} must match")
    return scores_from_logits(q.T @ k, mask, q.shape[0])


def attend(scores, v) -> np.ndarray:
    """Y[d, n] = sum_n' S[n, n'] V[d, n']."""
    scores = np.asarray(scores, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if scores.shape[1] != v.shape[1]:
        raise ShapeError(f"scores {scores.shape} do not match V {v.shape}")
    return v @ scores.T


def attention_forward(z, bundle: QkvBundle, mask: AttentionMask | None = None,
                      ledger: OpLedger | None = None) -> np.ndarray:
    v, k, q = qkv_project(z, bundle, ledger)
    s = attention_scores(q, k, mask)
    if ledger is not None:
        n = s.shape[0]
        ledger.count("attn", multiplications=n * n * (bundle.d_k + bundle.d_v),
                     additions=n * n * (bundle.d_k + bundle.d_v))
    return attend(s, v)


def _bits(train) -> np.ndarray:
    data = np.asarray(getattr(train, "data", train)).ravel()
    if not np.all((data == 0) | (data == 1)):
        raise DomainError("coincidence scores need binary trains")
    return data.astype(bool)


def _pair(sa, sb) -> tuple[np.ndarray, np.ndarray]:
    a, b = _bits(sa), _bits(sb)
    if a.shape != b.shape:
        raise ShapeError(f"train lengths differ: {a.size} vs {b.size}")
    return a, b


def coincidence_score_and(sa, sb, ledger: OpLedger | None = None) -> int:
    """Number of time steps where both trains spike."""
    a, b = _pair(sa, sb)
    hits = a & b
    if ledger is not None:
        ledger.count("coincidence", comparisons=a.size, additions=int(hits.sum()))
    return int(hits.sum())


def coincidence_score_xnor(sa, sb, ledger: OpLedger | None = None) -> int:
    """Number of time steps where the trains agree (both 0 or both 1)."""
    a, b = _pair(sa, sb)
    agree = ~(a ^ b)
    if ledger is not None:
        ledger.count("coincidence", comparisons=a.size, additions=int(agree.sum()))
    return int(agree.sum())


def stochastic_inner(p, q, t_steps: int, rng: np.random.Generator,
                     ledger: OpLedger | None = None) -> float:
    """Unbiased bitstream estimate of p . q for p, q in [0, 1]^D."""
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    if p.shape != q.shape:
        raise ShapeError("p and q must have the same length")
    if np.any((p < 0) | (p > 1) | (q < 0) | (q > 1)):
        raise DomainError("stochastic inner product needs entries in [0, 1]")
    sp = rng.random((p.size, t_steps)) < p[:, None]
    sq = rng.random((q.size, t_steps)) < q[:, None]
    hits = sp & sq
    if ledger is not None:
        n = p.size * t_steps
        ledger.count("stochastic", rng_draws=2 * n, comparisons=3 * n, additions=int(hits.sum()))
    return float(hits.mean(axis=1).sum())


def lif_encode_columns(m, spec: EncodingSpec, seed: int, stream: int, alpha: float = 1.0,
                       gamma: float = 0.5, ledger: OpLedger | None = None) -> np.ndarray:
    """Rate-encode each column of ``m`` (already in [0, 1]) and pass it through a LIF NPE.

    Returns an (N, T, D) boolean array of output spikes.  Every column reuses
    the same random stream so identical columns yield identical trains.
    """
    d, n = m.shape
    params = LifParams.lif(np.eye(d), alpha=alpha, gamma=gamma)
    out = []
    for col in range(n):
        rng = derive_rng(seed, stream)
        x = encode_vector(m[:, col], spec, rng)
        _, s = run_npe(x.data, params, ledger=ledger, phase="attn.encode")
        out.append(s.astype(bool))
    return np.stack(out)


def _lif_scores(qn, kn, spec, variant, seed, alpha, gamma, ledger) -> np.ndarray:
    sq = lif_encode_columns(qn, spec, seed, 0, alpha, gamma, ledger)
    sk = lif_encode_columns(kn, spec, seed, 1, alpha, gamma, ledger)
    score = coincidence_score_and if variant == "lif-and" else coincidence_score_xnor
    n = qn.shape[1]
    counts = np.array([[score(sq[i], sk[j], ledger) for j in range(n)] for i in range(n)], dtype=np.float64)
    return counts / sq.shape[1]


def _bitstreams(unit: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Comparator bitstreams: (rows, cols, T) from values (rows, cols) and uniforms (rows, T)."""
    return uniforms[:, None, :] < unit[:, :, None]


def _stochastic_logits(q, k, spec, seed, ledger) -> np.ndarray:
    t_steps = spec.t_steps
    d_k, n = q.shape
    mq, mk = AffineMap.fit(q), AffineMap.fit(k)
    qn, kn = mq.to_unit(q), mk.to_unit(k)
    bq = _bitstreams(qn, derive_rng(seed, 0).random((d_k, t_steps)))   # D_k x N x T
    bk = _bitstreams(kn, derive_rng(seed, 1).random((d_k, t_steps)))
    # prod[n, n'] ~ sum_i qn[i, n] kn[i, n'] via AND of independent streams
    prod = np.einsum("int,imt->nm", bq.astype(np.float64), bk.astype(np.float64)) / t_steps
    sum_q = bq.mean(axis=2).sum(axis=0)
    sum_k = bk.mean(axis=2).sum(axis=0)
    if ledger is not None:
        draws = 2 * d_k * t_steps
        ledger.count("attn.stochastic", rng_draws=draws, comparisons=draws + d_k * n * n * t_steps,
                     additions=int(bq.sum() + bk.sum()))
    # undo the affine maps: q = a_q + s_q qn, k = a_k + s_k kn
    return (d_k * mq.offset * mk.offset
            + mq.offset * mk.scale * sum_k[None, :]
            + mk.offset * mq.scale * sum_q[:, None]
            + mq.scale * mk.scale * prod)


def _stochastic_mix(s, v, spec, seed, ledger) -> np.ndarray:
    """Bitstream estimate of ``attend(s, v)``; each score row draws its own stream."""
    t_steps = spec.t_steps
    n = s.shape[0]
    mv = AffineMap.fit(v)
    vn = mv.to_unit(v)
    d_v = v.shape[0]
    bv = _bitstreams(vn, derive_rng(seed, 3).random((d_v, t_steps)))   # D_v x N x T
    mix = np.empty((d_v, n))
    s_unit = np.clip(s, 0.0, 1.0)
    for row in range(n):
        bs = derive_rng(seed, 2, row).random((n, t_steps)) < s_unit[row][:, None]   # N x T
        mix[:, row] = (bs[None, :, :] & bv).mean(axis=2).sum(axis=1)
    if ledger is not None:
        draws = d_v * t_steps + n * n * t_steps
        ledger.count("attn.stochastic", rng_draws=draws, comparisons=draws + d_v * n * n * t_steps)
    return mv.offset * s.sum(axis=1)[None, :] + mv.scale * mix


def spiking_attention_scores(q, k, variant: str, spec: EncodingSpec, mask: AttentionMask | None = None,
                             seed: int = 0, ledger: OpLedger | None = None, use_softmax: bool = True,
                             alpha: float = 1.0, gamma: float = 0.5) -> np.ndarray:
    """Score matrix with spike-based estimates of the query-key inner products."""
    if variant not in VARIANTS:
        raise ParameterError(f"unknown spiking attention variant {variant!r}")
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    if q.shape != k.shape:
        raise ShapeError(f"Q {q.shape} and K {k.shape} must match")
    mask = _mask_for(mask, q.shape[1])
    if variant == "stochastic":
        logits = _stochastic_logits(q, k, spec, seed, ledger)
    else:
        qn, kn = AffineMap.fit(q).to_unit(q), AffineMap.fit(k).to_unit(k)
        logits = _lif_scores(qn, kn, spec, variant, seed, alpha, gamma, ledger)
    return scores_from_logits(logits, mask, q.shape[0], use_softmax)


def spiking_attention_forward(z, bundle: QkvBundle, variant: str, spec: EncodingSpec,
                              mask: AttentionMask | None = None, seed: int = 0,
                              ledger: OpLedger | None = None, use_softmax: bool = True,
                              alpha: float = 1.0, gamma: float = 0.5, return_scores: bool = False):
    """Attention whose inner products are estimated from spike trains of length T.

    Q and K (and V for the stochastic variant) are mapped into [0, 1] with a
    per-tensor affine map before encoding.  ``use_softmax=False`` feeds the
    raw normalized coincidence scores to the value mixing instead.  With
    ``return_scores`` the score matrix is returned alongside the output.
    """
    if variant not in VARIANTS:
        raise ParameterError(f"unknown spiking attention variant {variant!r}")
    v, k, q = qkv_project(z, bundle, ledger)
    s = spiking_attention_scores(q, k, variant, spec, mask, seed, ledger, use_softmax, alpha, gamma)
    y = _stochastic_mix(s, v, spec, seed, ledger) if variant == "stochastic" else attend(s, v)
    return (y, s) if return_scores else y


def score_matrix_csv(scores) -> str:
    return "\n".join(",".join(repr(float(x)) for x in row) for row in np.asarray(scores)) + "\n"


__all__ = [
    "AttentionMask", "attend", "attention_forward", "attention_scores",
    "coincidence_score_and", "coincidence_score_xnor", "scores_from_logits", "softmax",
    "spiking_attention_forward", "spiking_attention_scores", "stochastic_inner", "lif_encode_columns", "score_matrix_csv",
]
