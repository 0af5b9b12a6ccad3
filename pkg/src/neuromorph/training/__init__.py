"""Learning procedures: BPTT with surrogate gradients, parallel linear scans, local rules."""

from .lm import (LayerSpec, SpikingLM, TrainStep, bptt_grad, finite_difference_grad, nll_loss, sequence_loss,
                 train_char_lm, training_log_csv)
from .plasticity import (EligibilityTrace, StdpParams, bernoulli_log_grad, run_bandit, stdp_pair_terms,
                         stdp_update, three_factor_update)
from .scan import parallel_scan, sequential_scan, toeplitz_forward, toeplitz_matrix
from .surrogate import SurrogateSpec, surrogate_derivative, surrogate_function

__all__ = [
    "EligibilityTrace", "LayerSpec", "SpikingLM", "StdpParams", "SurrogateSpec", "TrainStep", "bernoulli_log_grad",
    "bptt_grad", "finite_difference_grad", "nll_loss", "parallel_scan", "run_bandit", "sequence_loss",
    "sequential_scan", "stdp_pair_terms", "stdp_update", "surrogate_derivative", "surrogate_function", "three_factor_update",
    "toeplitz_forward", "toeplitz_matrix", "train_char_lm", "training_log_csv",
]
