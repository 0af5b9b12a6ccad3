"""Self-contained reproduction experiments, one per acceptance check.

Each function returns a JSON-ready dict with the measured quantities and a
boolean ``passed``.  They back the ``check`` task of the command-line runner,
so every check can be reproduced with a single invocation.
"""

from __future__ import annotations

import math
import tempfile
from pathlib import Path

import numpy as np

from .attention import (AttentionMask, attend, attention_forward, attention_scores, coincidence_score_and,
                        coincidence_score_xnor, spiking_attention_forward)
from .codec import EncodingSpec, decode_rate, encode_bernoulli, encode_rate
from .intra import build_network, snn_forward
from .ledger import OpLedger
from .rng import derive_rng, make_rng
from .ssm import GateSchedule, QkvBundle, linear_attention_direct, qkv_project, ssm_forward
from .sweep import BernoulliRateTask, tradeoff_sweep
from .training import (StdpParams, SurrogateSpec, bptt_grad, finite_difference_grad, parallel_scan,
                       run_bandit, sequential_scan, stdp_update, toeplitz_forward, train_char_lm)
from .training.lm import SpikingLM

# a spike pair with a single coincident spike and three agreeing positions
COINCIDENCE_PAIR = ([1, 0, 1, 0, 0, 1], [0, 0, 1, 1, 0, 0])


def _rel_err(got, ref) -> float:
    ref = np.asarray(ref)
    return float(np.max(np.abs(np.asarray(got) - ref)) / max(np.max(np.abs(ref)), 1e-300))


def codec_round_trip(seed: int = 0) -> dict:
    bad = [(t, k) for t in range(1, 65) for k in range(t + 1)
           if decode_rate(encode_rate(k / t, EncodingSpec("rate-unary", t))) != k / t]
    return {"failures": len(bad), "passed": not bad}


def bernoulli_convergence(seed: int = 0, x: float = 0.3, seeds: int = 100) -> dict:
    mae = {}
    for t in (256, 4096):
        errs = [abs(decode_rate(encode_bernoulli(x, EncodingSpec("bernoulli", t), derive_rng(seed, t, s))) - x)
                for s in range(seeds)]
        mae[t] = float(np.mean(errs))
    ratio = mae[256] / mae[4096]
    return {"mae_256": mae[256], "mae_4096": mae[4096], "ratio": ratio, "passed": 2.5 <= ratio <= 6.0}


def linear_attention(seed: int = 0, instances: int = 50) -> dict:
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(instances):
        n, d_k, d_v = int(rng.integers(1, 65)), int(rng.integers(1, 17)), int(rng.integers(1, 9))
        d_z = int(rng.integers(1, 9))
        bundle = QkvBundle.random(d_z, d_k, d_v, seed=int(rng.integers(2**31)))
        z = rng.normal(size=(d_z, n))
        v, k, q = qkv_project(z, bundle)
        worst = max(worst, _rel_err(ssm_forward(z, bundle, GateSchedule.constant()),
                                    linear_attention_direct(q, k, v)))
    return {"max_rel_err": worst, "passed": worst <= 1e-10}


def scan(seed: int = 0, t_steps: int = 4096) -> dict:
    rng = make_rng(seed)
    a = rng.uniform(0.9, 1.0, t_steps)
    u = rng.normal(size=(t_steps, 4))
    ledger = OpLedger()
    err = _rel_err(parallel_scan(a, u, ledger), sequential_scan(a, u))
    ops = ledger.events["scan_combine"]
    return {"max_rel_err": err, "combines": ops, "passed": err <= 1e-10 and ops <= 2 * t_steps}


def toeplitz(seed: int = 0, t_steps: int = 512) -> dict:
    rng = make_rng(seed)
    a, b = float(rng.uniform(0.9, 1.0)), float(rng.uniform(0.5, 1.5))
    kv = rng.normal(size=(4, t_steps))
    ref = sequential_scan(np.full(t_steps, a), b * kv.T).T
    err = _rel_err(toeplitz_forward(a, b, kv, block=64), ref)
    return {"max_rel_err": err, "passed": err <= 1e-10}


def _loop_attention(q, k, v, causal):
    d_k, n = q.shape
    y = np.zeros((v.shape[0], n))
    for i in range(n):
        cols = range(i + 1) if causal else range(n)
        logits = {j: sum(q[c, i] * k[c, j] for c in range(d_k)) / math.sqrt(d_k) for j in cols}
        top = max(logits.values())
        w = {j: math.exp(x - top) for j, x in logits.items()}
        total = sum(w.values())
        for j, wj in w.items():
            y[:, i] += wj / total * v[:, j]
    return y


def exact_attention(seed: int = 0, instances: int = 100) -> dict:
    rng = make_rng(seed)
    worst, row_err = 0.0, 0.0
    for _ in range(instances):
        n, d = int(rng.integers(1, 6)), int(rng.integers(1, 4))
        q, k, v = rng.normal(size=(3, d, n))
        for causal in (False, True):
            mask = AttentionMask.autoregressive(n) if causal else AttentionMask.full(n)
            s = attention_scores(q, k, mask)
            row_err = max(row_err, float(np.max(np.abs(s.sum(axis=1) - 1.0))))
            worst = max(worst, float(np.max(np.abs(attend(s, v) - _loop_attention(q, k, v, causal)))))
    return {"max_abs_err": worst, "row_sum_err": row_err, "passed": worst <= 1e-12 and row_err <= 1e-12}


def coincidence(seed: int = 0) -> dict:
    sa, sb = COINCIDENCE_PAIR
    s_and, s_xnor = coincidence_score_and(sa, sb), coincidence_score_xnor(sa, sb)
    return {"and": s_and, "xnor": s_xnor, "passed": s_and == 1 and s_xnor == 3}


def stochastic_attention(seed: int = 0, seeds: int = 20) -> dict:
    bundle = QkvBundle.random(4, 4, 4, seed=seed + 1)
    z = derive_rng(seed, 99).normal(size=(4, 4))
    exact = attention_forward(z, bundle)
    gaps = {}
    for t in (512, 8192):
        gaps[t] = float(np.mean([
            np.max(np.abs(spiking_attention_forward(z, bundle, "stochastic", EncodingSpec("bernoulli", t),
                                                    seed=seed * 1000 + s) - exact))
            for s in range(seeds)]))
    return {"gap_512": gaps[512], "gap_8192": gaps[8192], "passed": gaps[8192] < gaps[512]}


def gradient_check(seed: int = 0) -> dict:
    model = SpikingLM.create(5, 3, (6, 4), alpha=0.8, thresholds=(0.2,), reset=False, seed=seed)
    surrogate = SurrogateSpec("sigmoid", 2.0)
    batch = [[1, 3, 2, 5, 4, 1], [2, 2, 4, 5]]
    _, grads = bptt_grad(model, batch, surrogate, smooth=True)
    fd = finite_difference_grad(model, batch, surrogate)
    worst = 0.0
    for name, g in grads.items():
        denom = np.maximum(np.abs(g) + np.abs(fd[name]), 1e-6)
        worst = max(worst, float(np.max(np.abs(g - fd[name]) / denom)))
    return {"n_params": model.n_params(), "max_rel_err": worst,
            "passed": worst <= 1e-4 and model.n_params() <= 200}


def multiplication_free(seed: int = 0) -> dict:
    net = build_network([8, 16, 16, 4], alpha=0.9, gamma=0.5, encoding=EncodingSpec("rate-unary", 32), seed=seed)
    ledger = OpLedger()
    for n in range(4):
        snn_forward(derive_rng(seed, n).random(8), net, ledger)
    linear = ledger.phase_total("multiplications", ".linear") + ledger.phase_total("multiplications", ".reset")
    return {"linear_multiplications": linear, "decay_multiplications": ledger.phase_total("multiplications", ".decay"),
            "comparisons": ledger.comparisons, "passed": linear == 0}


def tradeoff(seed: int = 0) -> dict:
    rows = tradeoff_sweep(BernoulliRateTask(), [1, 4, 16, 64], trials=20, seed=seed)
    energy = [r.energy for r in rows]
    error = [r.error for r in rows]
    ok = all(a < b for a, b in zip(energy, energy[1:])) and all(a >= b for a, b in zip(error, error[1:]))
    return {"energy": energy, "error": error, "passed": ok}


def learning(seed: int = 0) -> dict:
    pre, post = np.zeros(10), np.zeros(10)
    pre[0], post[1] = 1, 1
    ltp = stdp_update(pre, post, 0.0, StdpParams())
    ltd = stdp_update(post, pre, 0.0, StdpParams())
    bandit = run_bandit(seed=seed)
    first, last = float(bandit.rewards[:100].mean()), float(bandit.rewards[-100:].mean())
    _, vocab, log = train_char_lm("hello world. hello spikes. ", steps=200, seed=seed)
    baseline = math.log(len(vocab))
    ok = ltp > 0 > ltd and last > first and log[-1].loss < baseline
    return {"stdp_ltp": ltp, "stdp_ltd": ltd, "bandit_first100": first, "bandit_last100": last,
            "lm_final_loss": log[-1].loss, "lm_baseline": baseline, "passed": ok}


def determinism(seed: int = 0) -> dict:
    from .cli import run
    from .config import validate

    cfg = {"version": 1, "task": "attn", "seed": seed, "codec": {"scheme": "bernoulli", "t_steps": 256},
           "model": {"d_z": 4, "d_k": 4, "d_v": 4, "variant": "stochastic"}, "input": {"n_tokens": 4}}
    blobs = []
    with tempfile.TemporaryDirectory() as tmp:
        for rep in range(2):
            paths = run(validate(dict(cfg)), Path(tmp) / str(rep))
            blobs.append({p.name: p.read_bytes() for p in paths})
    return {"artifacts": sorted(blobs[0]), "passed": blobs[0] == blobs[1]}


CHECKS = {
    "codec-round-trip": codec_round_trip,
    "bernoulli-convergence": bernoulli_convergence,
    "linear-attention": linear_attention,
    "parallel-scan": scan,
    "toeplitz": toeplitz,
    "exact-attention": exact_attention,
    "coincidence-pair": coincidence,
    "stochastic-attention": stochastic_attention,
    "gradient-check": gradient_check,
    "multiplication-free": multiplication_free,
    "tradeoff": tradeoff,
    "learning": learning,
    "determinism": determinism,
}


def run_checks(names=None, seed: int = 0) -> dict[str, dict]:
    names = list(CHECKS) if not names else list(names)
    return {name: CHECKS[name](seed) for name in names}
