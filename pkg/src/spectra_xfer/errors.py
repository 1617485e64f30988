"""Exception types shared across the package."""


class SpectraXferError(Exception):
    """Base class for every package-specific error."""


class ConfigError(SpectraXferError):
    """Invalid configuration value, schema violation or unknown key."""


class DimensionError(SpectraXferError):
    """Mismatched array shapes or incompatible layer dimensions."""


class WavelengthRangeError(SpectraXferError):
    """Wavelength outside the validity range of a dispersion model."""


class NumericalError(SpectraXferError):
    """Non-finite values produced by a solver or recursion."""


class FormatError(SpectraXferError):
    """Malformed file: bad header, wrong column count, corrupted block."""


class VersionError(FormatError):
    """File version does not match what this code writes."""


class CompatibilityError(SpectraXferError):
    """Checkpoint architecture fingerprint does not match expectation."""


class TrainingError(SpectraXferError):
    """Training diverged (non-finite loss or activations)."""
