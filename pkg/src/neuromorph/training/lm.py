"""Teacher-forced training of a small spiking character language model.

Architecture (per token, token index = time):

    x_t      = E[:, id_t]                                  embedding
    u^l_t    = alpha_l u^l_{t-1} + W_l x^l_t - r_l s^l_{t-1}
    s^l_t    = sum_k H(u^l_t - gamma_k)                    spikes (hard)
    logits_t = W_out s^L_t + b_out

Gradients come from hand-written backpropagation through time.  The threshold
H uses the surrogate derivative in the backward pass.  The reset term is a
non-differentiated pass-through: gradient flows through alpha * u only.
With ``smooth=True`` the threshold is replaced by the surrogate's primitive
in the forward pass too, which makes the whole network differentiable and
finite differences usable as an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import DomainError, ShapeError
from ..ledger import OpLedger
from ..rng import as_rng
from ..tokens import Vocabulary, tokenize
from .surrogate import SurrogateSpec, surrogate_derivative, surrogate_function


def log_softmax_columns(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=0, keepdims=True)
    return logits - m - np.log(np.exp(logits - m).sum(axis=0, keepdims=True))


def nll_loss(logit_seq, targets: Sequence[int]) -> float:
    """Mean negative log-likelihood of 1-based ``targets`` under V x N logits."""
    logits = np.asarray(logit_seq, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int64).ravel()
    if targets.size == 0:
        raise DomainError("nll_loss needs at least one target")
    if logits.ndim != 2 or logits.shape[1] != targets.size:
        raise ShapeError(f"logits {logits.shape} vs {targets.size} targets")
    logp = log_softmax_columns(logits)
    return float(-logp[targets - 1, np.arange(targets.size)].mean())


@dataclass
class LayerSpec:
    alpha: float = 0.9
    thresholds: tuple[float, ...] = (1.0,)
    reset: bool = True


@dataclass
class SpikingLM:
    params: dict[str, np.ndarray]
    layers: list[LayerSpec] = field(default_factory=list)

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def vocab_size(self) -> int:
        return self.params["embed"].shape[1]

    def n_params(self) -> int:
        return sum(p.size for p in self.params.values())

    def copy(self) -> SpikingLM:
        return SpikingLM({k: v.copy() for k, v in self.params.items()},
                         [LayerSpec(s.alpha, tuple(s.thresholds), s.reset) for s in self.layers])

    @classmethod
    def create(cls, vocab_size: int, d_emb: int, hidden: Sequence[int], alpha: float = 0.9,
               thresholds: Sequence[float] = (1.0,), reset: bool = True, seed: int = 0,
               init_scale: float = 1.0) -> SpikingLM:
        rng = as_rng(seed)
        params = {"embed": rng.normal(0.0, 1.0, (d_emb, vocab_size))}
        dims = [d_emb, *hidden]
        for i, (d_in, d_out) in enumerate(zip(dims, dims[1:])):
            bound = init_scale / np.sqrt(d_in)
            params[f"w{i}"] = rng.uniform(-bound, bound, (d_out, d_in))
        params["w_out"] = rng.normal(0.0, 1.0 / np.sqrt(dims[-1]), (vocab_size, dims[-1]))
        params["b_out"] = np.zeros(vocab_size)
        layers = [LayerSpec(alpha, tuple(thresholds), reset) for _ in hidden]
        return cls(params, layers)

    def forward(self, ids: Sequence[int], surrogate: SurrogateSpec | None = None, smooth: bool = False,
                ledger: OpLedger | None = None):
        """Logits (V x N) for inputs ``ids`` plus the cache needed by BPTT."""
        ids = np.asarray(ids, dtype=np.int64)
        surrogate = surrogate or SurrogateSpec()
        x = self.params["embed"][:, ids - 1]
        inputs, states, spikes = [], [], []
        for i, spec in enumerate(self.layers):
            w = self.params[f"w{i}"]
            drive = w @ x
            h, n = drive.shape
            u = np.empty((h, n))
            s = np.empty((h, n))
            u_prev, s_prev = np.zeros(h), np.zeros(h)
            for t in range(n):
                u_t = spec.alpha * u_prev + drive[:, t]
                if spec.reset:
                    u_t = u_t - spec.thresholds[0] * s_prev
                if smooth:
                    s_t = sum(surrogate_function(u_t, g, surrogate) for g in spec.thresholds)
                else:
                    s_t = sum((u_t > g).astype(np.float64) for g in spec.thresholds)
                u[:, t], s[:, t] = u_t, s_t
                u_prev, s_prev = u_t, s_t
            if ledger is not None:
                _count_layer(ledger, f"lm.layer{i}", w, x, s, spec)
            inputs.append(x)
            states.append(u)
            spikes.append(s)
            x = s
        logits = self.params["w_out"] @ x + self.params["b_out"][:, None]
        if ledger is not None:
            _count_dense(ledger, "lm.head", self.params["w_out"], x)
        return logits, (ids, inputs, states, spikes)


def _count_layer(ledger: OpLedger, phase: str, w, x, s, spec: LayerSpec) -> None:
    _count_dense(ledger, f"{phase}.linear", w, x)
    h, n = s.shape
    if spec.alpha != 1.0:
        ledger.count(f"{phase}.decay", multiplications=h * n)
    ledger.count(f"{phase}.fire", comparisons=h * n * len(spec.thresholds),
                 spikes_emitted=int(np.count_nonzero(s)))


def _count_dense(ledger: OpLedger, phase: str, w, x) -> None:
    """Event-driven cost of ``w @ x``: discrete inputs need additions only."""
    active = (x != 0).astype(np.int64)
    n = int((np.count_nonzero(w, axis=0) @ active).sum())
    discrete = np.all(x == np.round(x)) and np.all(np.abs(x) <= 1)
    if discrete:
        ledger.count(phase, additions=n)
    else:
        ledger.count(phase, additions=n, multiplications=n)


def _split(seq: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    seq = np.asarray(seq, dtype=np.int64)
    if seq.size < 2:
        raise DomainError("a training sequence needs at least two tokens")
    return seq[:-1], seq[1:]


def _as_batch(batch) -> list[Sequence[int]]:
    if len(batch) and np.ndim(batch[0]) == 0:
        return [batch]
    return list(batch)


def sequence_loss(model: SpikingLM, batch, surrogate: SurrogateSpec | None = None,
                  smooth: bool = False) -> float:
    seqs = _as_batch(batch)
    total = 0.0
    for seq in seqs:
        inp, tgt = _split(seq)
        logits, _ = model.forward(inp, surrogate, smooth)
        total += nll_loss(logits, tgt)
    return total / len(seqs)


def bptt_grad(model: SpikingLM, batch, surrogate: SurrogateSpec | None = None, smooth: bool = False,
              ledger: OpLedger | None = None) -> tuple[float, dict[str, np.ndarray]]:
    """Loss and exact reverse-mode gradient of the teacher-forced NLL.

    ``batch`` is one ID sequence or a list of them; each sequence predicts
    token t+1 from tokens 1..t.
    """
    surrogate = surrogate or SurrogateSpec()
    seqs = _as_batch(batch)
    grads = {k: np.zeros_like(v) for k, v in model.params.items()}
    total = 0.0
    for seq in seqs:
        inp, tgt = _split(seq)
        logits, (ids, inputs, states, spikes) = model.forward(inp, surrogate, smooth, ledger)
        n = tgt.size
        total += nll_loss(logits, tgt)
        dlogits = np.exp(log_softmax_columns(logits))
        dlogits[tgt - 1, np.arange(n)] -= 1.0
        dlogits /= n * len(seqs)
        grads["w_out"] += dlogits @ spikes[-1].T
        grads["b_out"] += dlogits.sum(axis=1)
        ds = model.params["w_out"].T @ dlogits
        for i in reversed(range(model.n_layers)):
            spec = model.layers[i]
            u = states[i]
            g = sum(surrogate_derivative(u, th, surrogate) for th in spec.thresholds)
            du = np.empty_like(u)
            carry = np.zeros(u.shape[0])
            for t in reversed(range(u.shape[1])):
                carry = ds[:, t] * g[:, t] + spec.alpha * carry
                du[:, t] = carry
            grads[f"w{i}"] += du @ inputs[i].T
            ds = model.params[f"w{i}"].T @ du
        np.add.at(grads["embed"].T, ids - 1, ds.T)
    return total / len(seqs), grads


def finite_difference_grad(model: SpikingLM, batch, surrogate: SurrogateSpec, h: float = 1e-5,
                           smooth: bool = True) -> dict[str, np.ndarray]:
    """Central differences of :func:`sequence_loss`, one parameter at a time."""
    out = {}
    for name, p in model.params.items():
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            up = sequence_loss(model, batch, surrogate, smooth)
            p[idx] = old - h
            down = sequence_loss(model, batch, surrogate, smooth)
            p[idx] = old
            g[idx] = (up - down) / (2 * h)
        out[name] = g
    return out


@dataclass
class TrainStep:
    step: int
    loss: float
    spike_sparsity: float
    additions: int
    multiplications: int


def train_char_lm(text: str, steps: int = 200, lr: float = 0.5, d_emb: int = 8,
                  hidden: Sequence[int] = (32,), alpha: float = 0.5, threshold: float = 0.5,
                  surrogate: SurrogateSpec | None = None, seed: int = 0,
                  vocab: Vocabulary | None = None) -> tuple[SpikingLM, Vocabulary, list[TrainStep]]:
    """Full-batch gradient descent on one text; returns model, vocabulary and a per-step log."""
    vocab = vocab or Vocabulary.from_text(text)
    ids = tokenize(text, vocab)
    model = SpikingLM.create(len(vocab), d_emb, hidden, alpha, (threshold,), True, seed)
    surrogate = surrogate or SurrogateSpec("sigmoid", 4.0)
    log = []
    for step in range(1, steps + 1):
        ledger = OpLedger()
        loss, grads = bptt_grad(model, ids, surrogate, ledger=ledger)
        emitted = ledger.phase_total("spikes_emitted", ".fire")
        slots = sum(model.params[f"w{i}"].shape[0] for i in range(model.n_layers)) * (len(ids) - 1)
        log.append(TrainStep(step, loss, 1.0 - emitted / slots, ledger.additions, ledger.multiplications))
        for k in model.params:
            model.params[k] -= lr * grads[k]
    return model, vocab, log


def training_log_csv(log: Sequence[TrainStep]) -> str:
    lines = ["step,loss,spike_sparsity,additions,multiplications"]
    lines += [f"{r.step},{r.loss!r},{r.spike_sparsity!r},{r.additions},{r.multiplications}" for r in log]
    return "\n".join(lines) + "\n"
