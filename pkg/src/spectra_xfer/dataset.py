"""Sampling, masking, splitting and persistence of labeled spectrum datasets.

Each example is a structure drawn uniformly from the task's thickness range,
masked into a fixed-width input vector (unused slots are exactly 0), and
paired with the exact spectrum from the matching solver. Files are CSV with
a JSON header line prefixed by '#'; numbers carry 17 significant digits so a
save/load round trip is exact and regeneration is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError, FormatError, VersionError
from .materials import Material, resolve_material
from .optics_film import FilmStack, transmission_spectrum
from .optics_sphere import SphereStack, scattering_spectrum
from .spectrum import DEFAULT_GRID, WavelengthGrid

DATASET_VERSION = 1
GENERATOR_TAG = "spectra-xfer"
DEFAULT_MASK_WIDTH = 16
SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class TaskSpec:
    """What to sample: solver kind, layer count, thickness range, materials."""

    kind: str  # "film" | "sphere"
    layer_count: int
    thickness_range: tuple = (30.0, 70.0)
    grid: WavelengthGrid = DEFAULT_GRID
    materials: tuple = ("SiO2", "TiO2")
    mask_width: int = DEFAULT_MASK_WIDTH

    def __post_init__(self):
        if self.kind not in ("film", "sphere"):
            raise ConfigError(f"unknown task kind {self.kind!r}")
        if self.layer_count < 1:
            raise ConfigError(f"layer_count must be >= 1, got {self.layer_count}")
        low, high = self.thickness_range
        if not low <= high:
            raise ConfigError(f"thickness range low {low} must be <= high {high}")
        if self.layer_count > self.mask_width:
            raise DimensionError(
                f"layer_count {self.layer_count} exceeds mask width {self.mask_width}"
            )
        if len(self.materials) != 2:
            raise ConfigError("materials must be an alternating pair")
        object.__setattr__(self, "thickness_range", (float(low), float(high)))
        object.__setattr__(self, "materials", tuple(self.materials))

    @property
    def task_id(self) -> str:
        return f"{self.kind}{self.layer_count}"

    def layer_materials(self, registry=None) -> list:
        pair = [resolve_material(m, registry) for m in self.materials]
        return [pair[i % 2] for i in range(self.layer_count)]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "layer_count": self.layer_count,
            "thickness_range": list(self.thickness_range),
            "grid": self.grid.to_dict(),
            "materials": list(self.materials),
            "mask_width": self.mask_width,
        }

    @staticmethod
    def from_dict(d: dict) -> "TaskSpec":
        return TaskSpec(
            kind=d["kind"],
            layer_count=int(d["layer_count"]),
            thickness_range=tuple(d.get("thickness_range", (30.0, 70.0))),
            grid=WavelengthGrid.from_dict(d["grid"]) if "grid" in d else DEFAULT_GRID,
            materials=tuple(d.get("materials", ("SiO2", "TiO2"))),
            mask_width=int(d.get("mask_width", DEFAULT_MASK_WIDTH)),
        )


@dataclass(frozen=True)
class LabeledDataset:
    """Masked thickness vectors paired with spectra plus frozen split tags."""

    features: np.ndarray  # (n, mask_width), raw nm
    targets: np.ndarray  # (n, n_points)
    split: tuple  # per-example tag
    spec: TaskSpec
    seed: int

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        targs = np.asarray(self.targets, dtype=float)
        if feats.ndim != 2 or targs.ndim != 2:
            raise DimensionError("features and targets must be 2-d arrays")
        if not (feats.shape[0] == targs.shape[0] == len(self.split)):
            raise DimensionError("features, targets and split lengths differ")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "targets", targs)
        object.__setattr__(self, "split", tuple(self.split))

    def __len__(self) -> int:
        return self.features.shape[0]

    def content_hash(self) -> str:
        """sha256 of the serialized file content (computed once, then cached)."""
        cached = getattr(self, "_content_hash", None)
        if cached is None:
            cached = dataset_content_hash(self)
            object.__setattr__(self, "_content_hash", cached)
        return cached

    def indices(self, split: str) -> np.ndarray:
        if split not in SPLITS:
            raise ConfigError(f"unknown split {split!r}")
        return np.array([i for i, s in enumerate(self.split) if s == split], dtype=int)

    def subset(self, split: str):
        idx = self.indices(split)
        return self.features[idx], self.targets[idx]


def sample_structure(spec: TaskSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw one structure: i.i.d. uniform thicknesses over the task range."""
    low, high = spec.thickness_range
    return rng.uniform(low, high, size=spec.layer_count)


def mask_input(thicknesses, mask_width: int) -> np.ndarray:
    """Copy thicknesses into a fixed-width vector; unused slots are exactly 0."""
    values = np.asarray(thicknesses, dtype=float)
    if values.ndim != 1:
        raise DimensionError("thickness vector must be one-dimensional")
    if values.size > mask_width:
        raise DimensionError(
            f"{values.size} thicknesses do not fit into mask width {mask_width}"
        )
    out = np.zeros(mask_width, dtype=float)
    out[: values.size] = values
    return out


def structure_spectrum(spec: TaskSpec, thicknesses, registry=None) -> np.ndarray:
    """Exact spectrum of one structure using the solver matching the task."""
    mats = spec.layer_materials(registry)
    layers = tuple((float(t), m) for t, m in zip(thicknesses, mats))
    if spec.kind == "film":
        return transmission_spectrum(FilmStack(layers=layers), spec.grid).values
    return scattering_spectrum(SphereStack(shells=layers), spec.grid).values


def assign_splits(n: int, rng: np.random.Generator) -> list:
    """Seeded shuffle, then an 80/10/10 partition rounding toward train."""
    n_val = n // 10
    n_test = n // 10
    perm = rng.permutation(n)
    split = ["train"] * n
    for i in perm[n - n_val - n_test : n - n_test]:
        split[i] = "val"
    for i in perm[n - n_test :]:
        split[i] = "test"
    return split


def generate_dataset(spec: TaskSpec, size: int, seed: int, registry=None) -> LabeledDataset:
    """Sample, solve and split ``size`` examples; fully determined by the seed."""
    if size < 10:
        raise ConfigError(f"dataset size must be >= 10, got {size}")
    rng = np.random.default_rng(seed)
    structures = [sample_structure(spec, rng) for _ in range(size)]
    split = assign_splits(size, rng)
    features = np.vstack([mask_input(s, spec.mask_width) for s in structures])
    targets = np.empty((size, spec.grid.n_points), dtype=float)
    for i, s in enumerate(structures):
        try:
            targets[i] = structure_spectrum(spec, s, registry)
        except Exception as exc:
            raise type(exc)(f"example {i}: {exc}") from exc
    return LabeledDataset(features=features, targets=targets, split=split,
                          spec=spec, seed=seed)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _header_dict(ds: LabeledDataset) -> dict:
    head = {"version": DATASET_VERSION, "seed": ds.seed, "generator": GENERATOR_TAG}
    head.update(ds.spec.to_dict())
    return head


def serialize_dataset(ds: LabeledDataset) -> str:
    lines = ["# " + json.dumps(_header_dict(ds), sort_keys=True, separators=(",", ":"))]
    for tag, feat, targ in zip(ds.split, ds.features, ds.targets):
        cells = [tag]
        cells.extend(_fmt(v) for v in feat)
        cells.extend(_fmt(v) for v in targ)
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def dataset_content_hash(ds: LabeledDataset) -> str:
    return hashlib.sha256(serialize_dataset(ds).encode()).hexdigest()


def save_dataset(ds: LabeledDataset, path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(serialize_dataset(ds))
    tmp.replace(path)


def _validate_loaded(ds: LabeledDataset) -> None:
    width = ds.spec.mask_width
    count = ds.spec.layer_count
    low, high = ds.spec.thickness_range
    if ds.features.shape[1] != width:
        raise FormatError(f"feature width {ds.features.shape[1]} != mask_width {width}")
    if np.any(ds.features[:, count:] != 0.0):
        raise FormatError("masked feature slots must be exactly 0")
    used = ds.features[:, :count]
    if np.any(used < low) or np.any(used > high):
        raise FormatError(f"unmasked thicknesses outside [{low}, {high}] nm")
    if ds.spec.kind == "film":
        if np.any(ds.targets < 0.0) or np.any(ds.targets > 1.0):
            raise FormatError("film targets must lie in [0, 1]")
    elif np.any(ds.targets < 0.0):
        raise FormatError("sphere targets must be nonnegative")


def load_dataset(path) -> LabeledDataset:
    path = Path(path)
    text = path.read_text()
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise FormatError(f"{path.name}: missing '#' JSON header line")
    try:
        head = json.loads(lines[0][1:])
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path.name}: malformed header JSON: {exc}") from None
    version = head.get("version")
    if version != DATASET_VERSION:
        raise VersionError(
            f"{path.name}: file version {version!r} != supported {DATASET_VERSION}"
        )
    try:
        spec = TaskSpec.from_dict(head)
        seed = int(head["seed"])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path.name}: header field missing/invalid: {exc}") from None

    n_cols = 1 + spec.mask_width + spec.grid.n_points
    split, features, targets = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != n_cols:
            raise FormatError(
                f"{path.name}:{lineno}: expected {n_cols} columns, found {len(cells)}"
            )
        if cells[0] not in SPLITS:
            raise FormatError(f"{path.name}:{lineno}: unknown split tag {cells[0]!r}")
        split.append(cells[0])
        try:
            row = np.array(cells[1:], dtype=float)
        except ValueError as exc:
            raise FormatError(f"{path.name}:{lineno}: bad number: {exc}") from None
        features.append(row[: spec.mask_width])
        targets.append(row[spec.mask_width :])
    if not features:
        raise FormatError(f"{path.name}: no data rows")
    ds = LabeledDataset(
        features=np.vstack(features),
        targets=np.vstack(targets),
        split=split,
        spec=spec,
        seed=seed,
    )
    _validate_loaded(ds)
    return ds
