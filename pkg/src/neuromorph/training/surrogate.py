"""Surrogate derivatives for the spike threshold.

The forward pass keeps the hard threshold; backward passes use one of these
bounded, non-negative pseudo-derivatives, each peaking at the threshold.
``surrogate_function`` gives a smooth stand-in for the threshold whose exact
derivative is ``surrogate_derivative``; it is used when a network is run fully
smoothed (e.g. for finite-difference gradient checks).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError
from ..npe import sigmoid

KINDS = ("sigmoid", "arctan", "piecewise-linear", "straight-through")


@dataclass(frozen=True)
class SurrogateSpec:
    kind: str = "sigmoid"
    beta: float = 4.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown surrogate kind {self.kind!r}")
        if not self.beta > 0:
            raise ParameterError("beta must be positive")


def surrogate_derivative(u, gamma, spec: SurrogateSpec):
    x = np.asarray(u, dtype=np.float64) - gamma
    b = spec.beta
    if spec.kind == "sigmoid":
        s = np.asarray(sigmoid(b * x))
        out = b * s * (1.0 - s)
    elif spec.kind == "arctan":
        out = b / (np.pi * (1.0 + (b * np.pi * x) ** 2))
    elif spec.kind == "piecewise-linear":
        out = np.maximum(0.0, 1.0 - b * np.abs(x))
    else:
        out = np.ones_like(x)
    return float(out) if np.ndim(out) == 0 else out


def surrogate_function(u, gamma, spec: SurrogateSpec):
    """Smooth threshold whose derivative is exactly :func:`surrogate_derivative`."""
    x = np.asarray(u, dtype=np.float64) - gamma
    b = spec.beta
    if spec.kind == "sigmoid":
        out = np.asarray(sigmoid(b * x))
    elif spec.kind == "arctan":
        out = np.arctan(b * np.pi * x) / np.pi ** 2 + 1.0 / (2.0 * np.pi)
    elif spec.kind == "piecewise-linear":
        c = np.clip(x, -1.0 / b, 1.0 / b)
        out = c - b * c * np.abs(c) / 2.0 + 1.0 / (2.0 * b)
    else:
        out = x.copy()
    return float(out) if np.ndim(out) == 0 else out
