"""Wavelength grids and sampled spectra.

The default grid is 400 nm (inclusive) to 800 nm (exclusive) in 2 nm steps,
i.e. 200 points, which is the sampling used for every generated dataset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError


@dataclass(frozen=True)
class WavelengthGrid:
    """Uniform wavelength grid in nm; ``stop`` is exclusive."""

    start: float = 400.0
    stop: float = 800.0
    step: float = 2.0

    def __post_init__(self):
        if self.step <= 0:
            raise ConfigError(f"grid step must be positive, got {self.step}")
        if self.stop <= self.start:
            raise ConfigError(f"grid stop {self.stop} must exceed start {self.start}")

    def wavelengths(self) -> np.ndarray:
        return np.arange(self.start, self.stop, self.step, dtype=float)

    @property
    def n_points(self) -> int:
        return len(self.wavelengths())

    def to_dict(self) -> dict:
        return {"start": self.start, "stop": self.stop, "step": self.step}

    @staticmethod
    def from_dict(d: dict) -> "WavelengthGrid":
        return WavelengthGrid(float(d["start"]), float(d["stop"]), float(d["step"]))


DEFAULT_GRID = WavelengthGrid()


@dataclass(frozen=True)
class Spectrum:
    """A response curve sampled on a wavelength grid."""

    wavelengths: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        wl = np.asarray(self.wavelengths, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if wl.ndim != 1 or vals.ndim != 1:
            raise DimensionError("spectrum arrays must be one-dimensional")
        if wl.shape != vals.shape:
            raise DimensionError(
                f"wavelengths ({wl.size}) and values ({vals.size}) differ in length"
            )
        if wl.size >= 2 and not np.all(np.diff(wl) > 0):
            raise DimensionError("wavelengths must be strictly increasing")
        object.__setattr__(self, "wavelengths", wl)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.wavelengths.size
