"""Character-level tokenization, embedding, positional encoding and greedy generation.

Token IDs are 1-based (1..V).  Vocabulary files hold one symbol per line with
line number = ID; ``\\n``, ``\\t`` and ``\\\\`` are escaped and the stop symbol
is written as ``<eos>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ShapeError, VocabularyError
from .rng import as_rng

STOP_MARK = "<eos>"
_ESCAPES = {"\n": "\\n", "\t": "\\t", "\\": "\\\\"}
_UNESCAPES = {v: k for k, v in _ESCAPES.items()}


@dataclass(frozen=True)
class Vocabulary:
    symbols: tuple[str, ...]
    stop_id: int

    def __post_init__(self):
        symbols = tuple(self.symbols)
        if len(set(symbols)) != len(symbols):
            raise VocabularyError("vocabulary symbols must be unique")
        if not 1 <= self.stop_id <= len(symbols):
            raise VocabularyError(f"stop_id {self.stop_id} outside 1..{len(symbols)}")
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "_index", {s: i + 1 for i, s in enumerate(symbols)})

    @property
    def size(self) -> int:
        return len(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def id_of(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise VocabularyError(f"symbol {symbol!r} not in vocabulary") from None

    def symbol(self, token_id: int) -> str:
        if not 1 <= token_id <= len(self.symbols):
            raise VocabularyError(f"token ID {token_id} outside 1..{len(self.symbols)}")
        return self.symbols[token_id - 1]

    @classmethod
    def from_text(cls, text: str, stop: str = STOP_MARK) -> Vocabulary:
        """Sorted characters of ``text`` followed by a stop symbol."""
        chars = sorted(set(text) - {stop})
        return cls(tuple(chars) + (stop,), len(chars) + 1)

    def to_file_text(self) -> str:
        lines = []
        for i, s in enumerate(self.symbols, start=1):
            if i == self.stop_id:
                lines.append(STOP_MARK)
            else:
                lines.append("".join(_ESCAPES.get(c, c) for c in s))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_file_text(cls, text: str) -> Vocabulary:
        symbols, stop_id = [], None
        for i, line in enumerate(text.split("\n")[:-1] if text.endswith("\n") else text.split("\n"), 1):
            if line == STOP_MARK:
                stop_id = i
                symbols.append(STOP_MARK)
                continue
            out, j = [], 0
            while j < len(line):
                if line[j] == "\\" and line[j:j + 2] in _UNESCAPES:
                    out.append(_UNESCAPES[line[j:j + 2]])
                    j += 2
                else:
                    out.append(line[j])
                    j += 1
            symbols.append("".join(out))
        if stop_id is None:
            raise VocabularyError("vocabulary file has no <eos> line")
        return cls(tuple(symbols), stop_id)


def tokenize(text: str, vocab: Vocabulary) -> list[int]:
    return [vocab.id_of(c) for c in text]


def detokenize(ids: Sequence[int], vocab: Vocabulary) -> str:
    return "".join(vocab.symbol(i) for i in ids if i != vocab.stop_id)


@dataclass(frozen=True)
class EmbeddingTable:
    e: np.ndarray  # D_emb x V, column v-1 embeds token v

    def __post_init__(self):
        e = np.asarray(self.e, dtype=np.float64)
        if e.ndim != 2:
            raise ShapeError("embedding table must be D_emb x V")
        object.__setattr__(self, "e", e)

    @property
    def dim(self) -> int:
        return self.e.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.e.shape[1]

    @classmethod
    def random(cls, dim: int, vocab_size: int, seed: int = 0, scale: float = 1.0) -> EmbeddingTable:
        rng = as_rng(seed)
        return cls(rng.normal(0.0, scale / np.sqrt(dim), size=(dim, vocab_size)))


def embed(ids: Sequence[int], table: EmbeddingTable) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.int64).ravel()
    if ids.size and (ids.min() < 1 or ids.max() > table.vocab_size):
        raise VocabularyError(f"token IDs must lie in 1..{table.vocab_size}")
    return table.e[:, ids - 1]


def positional_table(dim: int, n_tokens: int, base: float = 10000.0) -> np.ndarray:
    """Sinusoidal position vectors as columns; position n runs from 1.

    Row 2i holds sin(n / base^(2i/D)), row 2i+1 holds cos of the same angle.
    """
    pos = np.arange(1, n_tokens + 1, dtype=np.float64)
    i = np.arange(dim) // 2
    freq = base ** (-(2.0 * i) / dim)
    angle = freq[:, None] * pos[None, :]
    return np.where((np.arange(dim) % 2 == 0)[:, None], np.sin(angle), np.cos(angle))


def add_positional(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError("expected a D x N token matrix")
    return x + positional_table(*x.shape)


def softmax_columns(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=0, keepdims=True)
    ez = np.exp(z)
    return ez / ez.sum(axis=0, keepdims=True)


@dataclass(frozen=True)
class OutputHead:
    """Linear map to V logits followed by a softmax."""

    w: np.ndarray  # V x D
    b: np.ndarray | None = None

    def logits(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        out = self.w @ y
        if self.b is not None:
            out = out + (self.b[:, None] if out.ndim == 2 else self.b)
        return out

    def probs(self, y) -> np.ndarray:
        lg = self.logits(y)
        return softmax_columns(lg if lg.ndim == 2 else lg[:, None]).reshape(lg.shape)

    def decode(self, y) -> int:
        """Greedy choice; ties go to the lowest ID."""
        return int(np.argmax(self.logits(y))) + 1

    @classmethod
    def tied(cls, table: EmbeddingTable) -> OutputHead:
        return cls(table.e.T.copy())


Model = Callable[[np.ndarray], np.ndarray]


def generate(prompt_ids: Sequence[int], model: Model, head: OutputHead, max_steps: int,
             table: EmbeddingTable, stop_id: int | None = None, positional: bool = True) -> list[int]:
    """Greedy autoregressive generation.

    The model sees the whole embedded sequence each step; only its last output
    column is decoded and appended.  Stops after ``max_steps`` tokens or once
    ``stop_id`` is produced (the stop token is kept).
    """
    ids = list(prompt_ids)
    if max_steps <= 0:
        return ids
    if not ids:
        raise ShapeError("generation needs a non-empty prompt")
    for _ in range(max_steps):
        x = embed(ids, table)
        if positional:
            x = add_positional(x)
        y = np.asarray(model(x))
        nxt = head.decode(y[:, -1])
        ids.append(nxt)
        if stop_id is not None and nxt == stop_id:
            break
    return ids
