"""Evaluation metrics: per-point relative spectrum error and error reduction.

The spectrum error is the mean over grid points of
|predicted - exact| / exact. Exact responses can touch zero (deep stop
bands), where the ratio is singular, so the denominator is floored at a
small epsilon; the number of floored points is reported so runs dominated
by the guard are visible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .spectrum import Spectrum

DEFAULT_EPSILON = 1e-3


@dataclass(frozen=True)
class SpectrumError:
    """Mean relative deviation of a predicted spectrum (fraction, not %)."""

    value: float
    n_points: int
    epsilon_guard: float
    guarded_points: int


def _as_values(spectrum) -> np.ndarray:
    if isinstance(spectrum, Spectrum):
        return spectrum.values
    return np.asarray(spectrum, dtype=float)


def spectrum_error(prediction, exact, epsilon: float = DEFAULT_EPSILON) -> SpectrumError:
    """Mean per-point relative error between a prediction and the exact spectrum."""
    pred = _as_values(prediction)
    ref = _as_values(exact)
    if pred.shape != ref.shape or pred.ndim != 1:
        raise DimensionError(
            f"prediction ({pred.shape}) and exact ({ref.shape}) grids do not match"
        )
    if np.any(ref < 0):
        raise ConfigError("exact spectrum values must be nonnegative")
    denom = np.maximum(ref, epsilon)
    value = float(np.mean(np.abs(pred - ref) / denom))
    return SpectrumError(
        value=value,
        n_points=int(pred.size),
        epsilon_guard=float(epsilon),
        guarded_points=int(np.count_nonzero(ref < epsilon)),
    )


def mean_spectrum_error(predictions: np.ndarray, exact: np.ndarray,
                        epsilon: float = DEFAULT_EPSILON) -> float:
    """Average spectrum error over a batch of (n_examples, n_points) arrays."""
    pred = np.asarray(predictions, dtype=float)
    ref = np.asarray(exact, dtype=float)
    if pred.shape != ref.shape or pred.ndim != 2:
        raise DimensionError(f"batch shapes differ: {pred.shape} vs {ref.shape}")
    denom = np.maximum(ref, epsilon)
    per_example = np.mean(np.abs(pred - ref) / denom, axis=1)
    return float(np.mean(per_example))


def relative_reduction(direct, other) -> float:
    """(direct - other) / direct; negative values signal negative transfer."""
    direct_value = direct.value if isinstance(direct, SpectrumError) else float(direct)
    other_value = other.value if isinstance(other, SpectrumError) else float(other)
    if direct_value <= 0:
        raise ZeroDivisionError("direct error must be positive to compute a reduction")
    return (direct_value - other_value) / direct_value
