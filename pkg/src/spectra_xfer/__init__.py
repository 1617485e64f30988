"""Analytic optical spectra and small-network transfer / multi-task learning.

Two exact solvers (multilayer-film transmission, multilayer-sphere scattering)
generate labeled spectrum datasets; a minimal dense network trained with Adam
supports direct learning, layer-range weight transfer with grid search, and
hard-parameter-sharing multi-task training. The CLI (``spectra-xfer``) wraps
every experiment with content-addressed caching and CSV/SVG reports.
"""

__version__ = "0.1.0"

from .errors import (
    CompatibilityError,
    ConfigError,
    DimensionError,
    FormatError,
    NumericalError,
    SpectraXferError,
    TrainingError,
    VersionError,
    WavelengthRangeError,
)
from .materials import (
    BUILTIN_MATERIALS,
    Material,
    SIO2,
    TIO2,
    VACUUM,
    load_material,
    material_from_config,
    refractive_index,
)
from .spectrum import DEFAULT_GRID, Spectrum, WavelengthGrid
from .optics_film import (
    FilmStack,
    layer_characteristic_matrix,
    reflectance,
    transmission_reflection,
    transmission_spectrum,
    transmittance,
)
from .optics_sphere import (
    MieCoefficients,
    RiccatiBessel,
    SphereStack,
    mie_coefficients,
    riccati_bessel,
    scattering_cross_section,
    scattering_efficiency,
    scattering_spectrum,
    wiscombe_order,
)

__all__ = [name for name in dir() if not name.startswith("_")]
