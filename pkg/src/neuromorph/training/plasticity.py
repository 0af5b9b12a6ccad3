"""Local learning rules: pair-based STDP and reward-modulated three-factor updates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError
from ..npe import sigmoid
from ..rng import as_rng


@dataclass(frozen=True)
class StdpParams:
    a_plus: float = 0.01
    a_minus: float = 0.012
    tau_plus: float = 20.0
    tau_minus: float = 20.0


def _times(train) -> np.ndarray:
    data = np.asarray(getattr(train, "data", train)).ravel()
    return np.flatnonzero(data)


def stdp_pair_terms(pre_spikes, post_spikes, params: StdpParams = StdpParams()) -> np.ndarray:
    """Signed contribution of every (pre, post) spike pair, all-pairs, as an array."""
    pre, post = _times(pre_spikes), _times(post_spikes)
    if np.asarray(getattr(pre_spikes, "data", pre_spikes)).size != np.asarray(
            getattr(post_spikes, "data", post_spikes)).size:
        raise ShapeError("pre and post trains must have equal length")
    dt = post[None, :] - pre[:, None]   # > 0: pre before post
    terms = np.zeros(dt.shape)
    ltp, ltd = dt > 0, dt < 0
    terms[ltp] = params.a_plus * np.exp(-dt[ltp] / params.tau_plus)
    terms[ltd] = -params.a_minus * np.exp(dt[ltd] / params.tau_minus)
    return terms


def stdp_update(pre_spikes, post_spikes, w: float, params: StdpParams = StdpParams()) -> float:
    """Potentiate when pre precedes post, depress when post precedes pre."""
    return float(w + stdp_pair_terms(pre_spikes, post_spikes, params).sum())


@dataclass
class EligibilityTrace:
    e: np.ndarray
    decay: float = 0.9

    @classmethod
    def zeros_like(cls, weights, decay: float = 0.9) -> EligibilityTrace:
        return cls(np.zeros_like(np.asarray(weights, dtype=np.float64)), decay)

    def accumulate(self, increment) -> None:
        self.e = self.decay * self.e + np.asarray(increment, dtype=np.float64)

    def reset(self) -> None:
        self.e = np.zeros_like(self.e)


def bernoulli_log_grad(spikes, u, gamma: float, x) -> np.ndarray:
    """d/dW log p(s | u = W x) for sigmoid spiking: (s - sigmoid(u - gamma)) x^T."""
    s = np.atleast_1d(np.asarray(spikes, dtype=np.float64))
    p = np.atleast_1d(np.asarray(sigmoid(np.asarray(u, dtype=np.float64) - gamma)))
    return np.outer(s - p, np.atleast_1d(np.asarray(x, dtype=np.float64)))


def three_factor_update(trace: EligibilityTrace, reward: float, lr: float, weights) -> np.ndarray:
    return np.asarray(weights, dtype=np.float64) + lr * reward * trace.e


@dataclass
class BanditResult:
    rewards: np.ndarray
    actions: np.ndarray
    weights: np.ndarray
    spike_prob: list[float] = field(default_factory=list)


def run_bandit(arm_probs=(0.2, 0.8), episodes: int = 500, steps: int = 1, lr: float = 0.5,
               gamma: float = 0.0, decay: float = 0.9, d_in: int = 2, seed: int = 0) -> BanditResult:
    """Two-armed bandit played by one probabilistic spiking neuron.

    A spike picks arm 1, silence picks arm 0.  The neuron sees a constant
    input; its eligibility trace gathers the Bernoulli log-likelihood gradient
    over the episode and the episode reward scales the update.
    """
    rng = as_rng(seed)
    w = np.zeros((1, d_in))
    x = np.ones(d_in) / d_in
    rewards = np.empty(episodes)
    actions = np.empty(episodes, dtype=np.int64)
    probs = []
    for ep in range(episodes):
        trace = EligibilityTrace.zeros_like(w, decay)
        u = w @ x
        probs.append(float(sigmoid(u[0] - gamma)))
        action = 0
        for _ in range(steps):
            s = (rng.random(1) < sigmoid(u - gamma)).astype(np.float64)
            trace.accumulate(bernoulli_log_grad(s, u, gamma, x))
            action = int(s[0])
        reward = float(rng.random() < arm_probs[action])
        w = three_factor_update(trace, reward, lr, w)
        rewards[ep], actions[ep] = reward, action
    return BanditResult(rewards, actions, w, probs)
