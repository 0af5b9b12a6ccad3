"""Neuromorphic processing toolkit.

Spiking processing elements, virtual-time spike codecs, intra-token SNNs,
inter-token state-space and attention mixers (exact and spiking), training
rules, and an operation-count energy proxy.
"""

from .codec import (AffineMap, EncodingSpec, decode_rate, encode_bernoulli, encode_first_spike,
                    encode_multilevel_rate, encode_rate, encode_time_positional, encode_vector)
from .errors import (DegenerateRowError, DomainError, ModeError, NeuromorphError, ParameterError,
                     ShapeError, VocabularyError)
from .ledger import CostModel, OpLedger, energy_proxy, sparsity
from .npe import (LifParams, NpeState, lif_step, reset_matrix, spike_deterministic, spike_multilevel,
                  spike_probabilistic, spike_ternary)
from .rng import derive_rng, make_rng
from .spikes import SpikeTrain

__version__ = "0.1.0"

__all__ = [
    "AffineMap", "CostModel", "DegenerateRowError", "DomainError", "EncodingSpec", "LifParams",
    "ModeError", "NeuromorphError", "NpeState", "OpLedger", "ParameterError", "ShapeError",
    "SpikeTrain", "VocabularyError", "decode_rate", "derive_rng", "encode_bernoulli",
    "encode_first_spike", "encode_multilevel_rate", "encode_rate", "encode_time_positional",
    "encode_vector", "energy_proxy", "lif_step", "make_rng", "reset_matrix", "sparsity",
    "spike_deterministic", "spike_multilevel", "spike_probabilistic", "spike_ternary",
]
