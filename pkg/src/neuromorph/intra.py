"""Multi-layer SNN for intra-token processing along the virtual time axis.

Each token is encoded into a spike train of T virtual steps, pushed through a
stack of LIF layers (diagonal reset, no bias), and the last layer's spikes are
rate-decoded.  Virtual time restarts at zero for every token, so tokens never
interact.

Checkpoint grammar (plain text, whitespace separated)::

    neuromorph-snn <version>
    encoding <scheme> <T> <L>
    layers <n>
    layer <i> <d_in> <d_out> <mode> <alpha>
    thresholds <g_1> ... <g_k>
    w_in
    <d_out lines of d_in floats>
    w_res_diag
    <d_out floats>
    ... (repeated per layer)
    end
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .codec import EncodingSpec, decode_rate, encode_vector
from .errors import ParameterError, ShapeError
from .ledger import OpLedger
from .linalg import accumulate_matvec, discrete_matvec
from .npe import LifParams, NpeState, lif_step
from .rng import as_rng
from .spikes import SpikeTrain

CHECKPOINT_VERSION = 1

__all__ = [
    "SnnLayer", "SnnNetwork", "accumulate_matvec", "neuron_update", "snn_run", "snn_forward",
    "snn_forward_matrix", "build_network", "save_checkpoint", "load_checkpoint",
]


@dataclass(frozen=True)
class SnnLayer:
    params: LifParams

    def __post_init__(self):
        w_res = self.params.w_res
        if np.count_nonzero(w_res - np.diag(np.diag(w_res))):
            raise ParameterError("SNN layers need a diagonal reset matrix")

    @property
    def d_in(self) -> int:
        return self.params.d_in

    @property
    def d_out(self) -> int:
        return self.params.d_hidden


@dataclass(frozen=True)
class SnnNetwork:
    layers: tuple[SnnLayer, ...]
    encoding: EncodingSpec = field(default_factory=EncodingSpec)
    decoding: str = "rate"

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ParameterError("network needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if a.d_out != b.d_in:
                raise ShapeError(f"layer dims do not chain: {a.d_out} -> {b.d_in}")
        if self.decoding != "rate":
            raise ParameterError("only rate decoding is supported")
        object.__setattr__(self, "layers", layers)

    @property
    def d_in(self) -> int:
        return self.layers[0].d_in

    @property
    def d_out(self) -> int:
        return self.layers[-1].d_out


def build_network(dims, alpha: float = 0.9, gamma: float = 1.0, mode: str = "deterministic-binary",
                  encoding: EncodingSpec | None = None, seed: int = 0, reset: bool = True) -> SnnNetwork:
    """Random network with weights ~ U(-1/sqrt(d_in), 1/sqrt(d_in))."""
    rng = as_rng(seed)
    layers = []
    for d_in, d_out in zip(dims, dims[1:]):
        bound = 1.0 / math.sqrt(d_in)
        w = rng.uniform(-bound, bound, size=(d_out, d_in))
        layers.append(SnnLayer(LifParams.lif(w, alpha, gamma, reset, mode)))
    return SnnNetwork(tuple(layers), encoding or EncodingSpec())


def neuron_update(u_i: float, w_i, x, alpha: float, ledger: OpLedger | None = None) -> float:
    """``alpha * u_i + w_i . x``; discrete ``x`` uses additions only."""
    w_i = np.asarray(w_i, dtype=np.float64).ravel()
    x = np.asarray(x).ravel()
    if w_i.shape != x.shape:
        raise ShapeError(f"weights {w_i.shape} vs input {x.shape}")
    acc = discrete_matvec(x, w_i[None, :], ledger, "neuron.linear")[0]
    if alpha != 1.0 and ledger is not None:
        ledger.count("neuron.decay", multiplications=1)
    return alpha * u_i + acc


def snn_run(token, net: SnnNetwork, ledger: OpLedger | None = None,
            rng: np.random.Generator | None = None) -> tuple[SpikeTrain, SpikeTrain]:
    """Encode a token and run every layer.  Returns (input train, output train)."""
    token = np.asarray(token, dtype=np.float64).ravel()
    if token.shape[0] != net.d_in:
        raise ShapeError(f"token has {token.shape[0]} entries, network expects {net.d_in}")
    enc_rng = rng if rng is not None else (as_rng(net.encoding.seed) if net.encoding.seed is not None else None)
    x_train = encode_vector(token, net.encoding, enc_rng, ledger)
    states = [NpeState.zeros(layer.d_out) for layer in net.layers]
    out = np.zeros((x_train.T, net.d_out), dtype=np.int64)
    for t in range(x_train.T):
        x = x_train.data[t]
        for i, layer in enumerate(net.layers):
            states[i] = lif_step(states[i], x, layer.params, enc_rng, ledger, f"layer{i}")
            x = states[i].last_spikes
        out[t] = x
    return x_train, SpikeTrain(out, net.layers[-1].params.levels)


def snn_forward(token, net: SnnNetwork, ledger: OpLedger | None = None,
                rng: np.random.Generator | None = None) -> np.ndarray:
    """Encode, run all layers for t = 1..T, and rate-decode the last layer."""
    _, out = snn_run(token, net, ledger, rng)
    return np.atleast_1d(np.asarray(decode_rate(out), dtype=np.float64))


def snn_forward_matrix(x, net: SnnNetwork, ledger: OpLedger | None = None,
                       rng: np.random.Generator | None = None) -> np.ndarray:
    """Apply :func:`snn_forward` to every column of a D x N token matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return np.stack([snn_forward(x[:, n], net, ledger, rng) for n in range(x.shape[1])], axis=1)


def _fmt(v: float) -> str:
    return repr(float(v))


def save_checkpoint(net: SnnNetwork) -> str:
    enc = net.encoding
    lines = [f"neuromorph-snn {CHECKPOINT_VERSION}",
             f"encoding {enc.scheme} {enc.t_steps} {enc.levels}",
             f"layers {len(net.layers)}"]
    for i, layer in enumerate(net.layers):
        p = layer.params
        lines.append(f"layer {i} {p.d_in} {p.d_hidden} {p.mode} {_fmt(p.alpha)}")
        lines.append("thresholds " + " ".join(_fmt(g) for g in p.thresholds))
        lines.append("w_in")
        lines += [" ".join(_fmt(v) for v in row) for row in p.w_in]
        lines.append("w_res_diag")
        lines.append(" ".join(_fmt(v) for v in np.diag(p.w_res)))
    lines.append("end")
    return "\n".join(lines) + "\n"


def load_checkpoint(text: str) -> SnnNetwork:
    tokens = iter([ln.split() for ln in text.splitlines() if ln.strip()])

    def expect(word: str) -> list[str]:
        row = next(tokens, None)
        if row is None or row[0] != word:
            raise ParameterError(f"checkpoint: expected '{word}', got {row}")
        return row[1:]

    version = int(expect("neuromorph-snn")[0])
    if version != CHECKPOINT_VERSION:
        raise ParameterError(f"unsupported checkpoint version {version}")
    scheme, t_steps, levels = expect("encoding")
    encoding = EncodingSpec(scheme, int(t_steps), int(levels))
    n_layers = int(expect("layers")[0])
    layers = []
    for _ in range(n_layers):
        _, d_in, d_out, mode, alpha = expect("layer")
        d_in, d_out = int(d_in), int(d_out)
        thresholds = tuple(float(g) for g in expect("thresholds"))
        expect("w_in")
        w = np.array([[float(v) for v in next(tokens)] for _ in range(d_out)])
        if w.shape != (d_out, d_in):
            raise ShapeError(f"checkpoint: w_in has shape {w.shape}, header says {(d_out, d_in)}")
        expect("w_res_diag")
        diag = np.array([float(v) for v in next(tokens, [])])
        layers.append(SnnLayer(LifParams(float(alpha), w, np.diag(diag), thresholds, mode)))
    expect("end")
    return SnnNetwork(tuple(layers), encoding)
