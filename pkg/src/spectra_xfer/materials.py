"""Optical materials: constant or tabulated complex refractive indices.

Index convention is n = n' + i*k with k >= 0 (positive imaginary part damps
the wave). Tabulated models interpolate n' and k linearly in wavelength and
refuse to extrapolate. All wavelengths are vacuum wavelengths in nm.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, WavelengthRangeError

# Dispersion models are only trusted on the visible band used by the solvers.
WAVELENGTH_MIN_NM = 380.0
WAVELENGTH_MAX_NM = 820.0


def _check_indices(indices: np.ndarray, name: str) -> None:
    if np.any(indices.real < 1.0 - 1e-12):
        raise ConfigError(f"material {name!r}: real part of the index must be >= 1")
    if np.any(indices.imag < -1e-12):
        raise ConfigError(
            f"material {name!r}: imaginary part must be >= 0 (absorption convention)"
        )


@dataclass(frozen=True)
class Material:
    """A named dispersion model, either a constant index or a lookup table."""

    name: str
    model: str = "constant"  # "constant" | "table"
    index: complex = 1.0 + 0.0j
    table_wavelengths: np.ndarray | None = None
    table_indices: np.ndarray | None = None

    def __post_init__(self):
        if self.model == "constant":
            object.__setattr__(self, "index", complex(self.index))
            _check_indices(np.asarray([self.index]), self.name)
        elif self.model == "table":
            wl = np.asarray(self.table_wavelengths, dtype=float)
            idx = np.asarray(self.table_indices, dtype=complex)
            if wl.ndim != 1 or idx.shape != wl.shape or wl.size < 2:
                raise ConfigError(
                    f"material {self.name!r}: table needs matching 1-d arrays (>= 2 rows)"
                )
            if not np.all(np.diff(wl) > 0):
                raise ConfigError(
                    f"material {self.name!r}: table wavelengths must be strictly increasing"
                )
            _check_indices(idx, self.name)
            object.__setattr__(self, "table_wavelengths", wl)
            object.__setattr__(self, "table_indices", idx)
        else:
            raise ConfigError(f"unknown material model {self.model!r}")

    @staticmethod
    def constant(name: str, n: float, k: float = 0.0) -> "Material":
        return Material(name=name, model="constant", index=complex(n, k))

    @staticmethod
    def from_table(name: str, rows) -> "Material":
        """Build a tabulated material from (wavelength, n, k) rows."""
        rows = [tuple(map(float, r)) for r in rows]
        wl = np.array([r[0] for r in rows])
        idx = np.array([complex(r[1], r[2] if len(r) > 2 else 0.0) for r in rows])
        return Material(name=name, model="table", table_wavelengths=wl, table_indices=idx)


VACUUM = Material.constant("vacuum", 1.0)
SIO2 = Material.constant("SiO2", 1.46)
TIO2 = Material.constant("TiO2", 2.40)

BUILTIN_MATERIALS = {m.name: m for m in (VACUUM, SIO2, TIO2)}


def index_on_grid(material: Material, wavelengths) -> np.ndarray:
    """Complex refractive index at each wavelength of an array."""
    wl = np.atleast_1d(np.asarray(wavelengths, dtype=float))
    lo, hi = WAVELENGTH_MIN_NM, WAVELENGTH_MAX_NM
    if np.any(wl < lo) or np.any(wl > hi):
        raise WavelengthRangeError(
            f"wavelength outside [{lo}, {hi}] nm for material {material.name!r}"
        )
    if material.model == "constant":
        return np.full(wl.shape, material.index, dtype=complex)
    tw = material.table_wavelengths
    if np.any(wl < tw[0]) or np.any(wl > tw[-1]):
        raise WavelengthRangeError(
            f"wavelength outside tabulated range [{tw[0]}, {tw[-1]}] nm "
            f"for material {material.name!r}"
        )
    re = np.interp(wl, tw, material.table_indices.real)
    im = np.interp(wl, tw, material.table_indices.imag)
    return re + 1j * im


def refractive_index(material: Material, wavelength: float) -> complex:
    """Complex refractive index of a material at one wavelength (nm)."""
    return complex(index_on_grid(material, [float(wavelength)])[0])


def material_to_config(material: Material) -> dict:
    if material.model == "constant":
        return {
            "name": material.name,
            "model": "constant",
            "n": material.index.real,
            "k": material.index.imag,
        }
    rows = [
        [float(w), float(i.real), float(i.imag)]
        for w, i in zip(material.table_wavelengths, material.table_indices)
    ]
    return {"name": material.name, "model": "table", "rows": rows}


def material_from_config(cfg: dict) -> Material:
    try:
        name = cfg["name"]
        model = cfg["model"]
    except KeyError as exc:
        raise ConfigError(f"material config missing field {exc.args[0]!r}") from None
    if model == "constant":
        return Material.constant(name, float(cfg["n"]), float(cfg.get("k", 0.0)))
    if model == "table":
        return Material.from_table(name, cfg["rows"])
    raise ConfigError(f"unknown material model {model!r}")


def load_material(path) -> Material:
    return material_from_config(json.loads(Path(path).read_text()))


def resolve_material(material, registry: dict | None = None) -> Material:
    """Accept a Material or a registry name and return the Material."""
    if isinstance(material, Material):
        return material
    table = dict(BUILTIN_MATERIALS)
    if registry:
        table.update(registry)
    try:
        return table[material]
    except KeyError:
        raise ConfigError(f"unknown material name {material!r}") from None
