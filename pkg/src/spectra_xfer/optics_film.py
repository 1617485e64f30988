"""Transmission through planar dielectric stacks via characteristic matrices.

Normal incidence, single (degenerate) polarization, non-magnetic media. Each
layer contributes the standard characteristic matrix

    M = [[cos d,        i sin d / n],
         [i n sin d,    cos d     ]],    d = 2 pi n t / lambda,

with n the complex index and t the thickness; the stack matrix is the product
of layer matrices taken from the incidence side. Amplitude coefficients follow
from the ambient admittances (Macleod, "Thin-Film Optical Filters", ch. 2).
All arithmetic is double-precision complex.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError
from .materials import Material, VACUUM, index_on_grid
from .spectrum import DEFAULT_GRID, Spectrum, WavelengthGrid


@dataclass(frozen=True)
class FilmStack:
    """Ordered list of (thickness nm, material) from the incidence side.

    Thickness 0 is allowed (a zero-phase layer drops out of the product);
    an empty list is a bare ambient/ambient interface.
    """

    layers: tuple = ()
    ambient_in: Material = VACUUM
    ambient_out: Material = VACUUM

    def __post_init__(self):
        norm = []
        for entry in self.layers:
            thickness, material = entry
            thickness = float(thickness)
            if thickness < 0:
                raise ConfigError(f"layer thickness must be >= 0, got {thickness}")
            if not isinstance(material, Material):
                raise ConfigError("layer material must be a Material")
            norm.append((thickness, material))
        object.__setattr__(self, "layers", tuple(norm))

    def reversed(self) -> "FilmStack":
        return FilmStack(
            layers=tuple(reversed(self.layers)),
            ambient_in=self.ambient_out,
            ambient_out=self.ambient_in,
        )


def layer_characteristic_matrix(thickness: float, index: complex, wavelength: float) -> np.ndarray:
    """2x2 characteristic matrix of one layer at normal incidence.

    The determinant is exactly 1 analytically (cos^2 + sin^2); numerically it
    holds to roundoff.
    """
    if thickness < 0:
        raise ConfigError(f"thickness must be >= 0, got {thickness}")
    if wavelength <= 0:
        raise ConfigError(f"wavelength must be positive, got {wavelength}")
    n = complex(index)
    delta = 2.0 * np.pi * n * thickness / wavelength
    c = np.cos(delta)
    s = np.sin(delta)
    return np.array([[c, 1j * s / n], [1j * n * s, c]], dtype=complex)


def _amplitudes_on_grid(stack: FilmStack, wavelengths: np.ndarray):
    """Amplitude coefficients (t, r) and ambient admittances on a grid.

    Vectorized over wavelength; a scalar call is the one-point special case of
    the same arithmetic, so spectra and single-wavelength results agree bit
    for bit.
    """
    wl = np.atleast_1d(np.asarray(wavelengths, dtype=float))
    eta_in = index_on_grid(stack.ambient_in, wl)
    eta_out = index_on_grid(stack.ambient_out, wl)

    m00 = np.ones_like(wl, dtype=complex)
    m01 = np.zeros_like(m00)
    m10 = np.zeros_like(m00)
    m11 = np.ones_like(m00)
    for thickness, material in stack.layers:
        n = index_on_grid(material, wl)
        delta = (2.0 * np.pi * thickness / wl) * n
        c = np.cos(delta)
        s = np.sin(delta)
        a01 = 1j * s / n
        a10 = 1j * n * s
        m00, m01, m10, m11 = (
            m00 * c + m01 * a10,
            m00 * a01 + m01 * c,
            m10 * c + m11 * a10,
            m10 * a01 + m11 * c,
        )

    b = m00 + m01 * eta_out
    c_field = m10 + m11 * eta_out
    denom = eta_in * b + c_field
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (eta_in * b - c_field) / denom
        t = 2.0 * eta_in / denom
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(r))):
        raise NumericalError(
            f"non-finite field amplitudes for a {len(stack.layers)}-layer stack"
        )
    return t, r, eta_in, eta_out


def _transmission_reflection_on_grid(stack: FilmStack, wavelengths: np.ndarray):
    t, r, eta_in, eta_out = _amplitudes_on_grid(stack, wavelengths)
    power_ratio = eta_out.real / eta_in.real
    trans = power_ratio * np.abs(t) ** 2
    refl = np.abs(r) ** 2
    # clamp sub-roundoff excursions so transmission spectra stay inside [0, 1]
    return np.clip(trans, 0.0, 1.0), np.clip(refl, 0.0, 1.0)


def transmission_reflection(stack: FilmStack, wavelength: float) -> tuple[float, float]:
    """Power transmittance and reflectance of a stack at one wavelength."""
    trans, refl = _transmission_reflection_on_grid(stack, np.asarray([float(wavelength)]))
    return float(trans[0]), float(refl[0])


def transmittance(stack: FilmStack, wavelength: float) -> float:
    """Power transmittance of a stack at one wavelength."""
    return transmission_reflection(stack, wavelength)[0]


def reflectance(stack: FilmStack, wavelength: float) -> float:
    """Power reflectance of a stack at one wavelength."""
    return transmission_reflection(stack, wavelength)[1]


def transmission_spectrum(stack: FilmStack, grid=None) -> Spectrum:
    """Transmittance sampled over a wavelength grid (default 400..798 nm)."""
    if grid is None:
        grid = DEFAULT_GRID
    wl = grid.wavelengths() if isinstance(grid, WavelengthGrid) else np.asarray(grid, float)
    trans, _ = _transmission_reflection_on_grid(stack, wl)
    return Spectrum(wl, trans)
