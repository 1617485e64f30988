"""Scattering efficiency of multilayer (core-shell) spheres.

Lorenz-Mie theory for stratified spheres, formulated with Riccati-Bessel
functions psi_n(z) = z j_n(z) and chi_n(z) = -z y_n(z). The multipole
coefficients a_n, b_n are obtained by recursing effective logarithmic
derivatives outward from the core: inside shell l the radial function is
c psi_n + d chi_n, and matching tangential fields at each interface updates
the admixture ratio d/c (Bohren & Huffman, "Absorption and Scattering of
Light by Small Particles", sec. 8.1, generalized to many shells). This
outward ratio recursion is numerically stable for thin lossless shells.

j_n is evaluated by downward recurrence with normalization against the n=0,1
closed forms; y_n by upward recurrence (stable in that direction). The series
is truncated at the Wiscombe order N = ceil(x + 4 x^(1/3) + 2) of the outer
size parameter x = 2 pi r / lambda.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError
from .materials import Material, VACUUM, index_on_grid
from .spectrum import DEFAULT_GRID, Spectrum, WavelengthGrid

# Downward recurrence grows roughly like (2n+1)!!/z^n toward n=0, so seed the
# start order with a tiny value to keep the normalized pass inside float range.
_DOWNWARD_SEED = 1e-100
_START_ORDER_PAD = 16


@dataclass(frozen=True)
class SphereStack:
    """Concentric shells, innermost first; the first thickness is the core radius."""

    shells: tuple = ()
    host: Material = VACUUM

    def __post_init__(self):
        norm = []
        for thickness, material in self.shells:
            thickness = float(thickness)
            if thickness <= 0:
                raise ConfigError(f"shell thickness must be > 0, got {thickness}")
            if not isinstance(material, Material):
                raise ConfigError("shell material must be a Material")
            norm.append((thickness, material))
        if not norm:
            raise ConfigError("a sphere needs at least one shell")
        object.__setattr__(self, "shells", tuple(norm))

    def radii(self) -> np.ndarray:
        return np.cumsum([t for t, _ in self.shells])


@dataclass(frozen=True)
class MieCoefficients:
    """Multipole amplitudes a_n, b_n for n = 1..order_max (index 0 is n=1)."""

    a: np.ndarray
    b: np.ndarray
    order_max: int

    def __post_init__(self):
        if len(self.a) != self.order_max or len(self.b) != self.order_max:
            raise ConfigError("coefficient arrays must have order_max entries")


@dataclass(frozen=True)
class RiccatiBessel:
    """psi, psi', chi, chi' for n = 0..order_max at a single argument."""

    psi: np.ndarray
    psi_prime: np.ndarray
    chi: np.ndarray
    chi_prime: np.ndarray


def wiscombe_order(x: float) -> int:
    """Series truncation order for size parameter x."""
    if x <= 0:
        raise ConfigError(f"size parameter must be positive, got {x}")
    return int(np.ceil(x + 4.0 * x ** (1.0 / 3.0) + 2.0))


def _riccati_tables(order_rows: int, z: np.ndarray, order_needed: np.ndarray):
    """Riccati-Bessel tables for a batch of complex arguments.

    Returns arrays of shape (order_rows + 1, len(z)). Each element's downward
    recurrence starts at max(order_needed, |z|) + pad for *that* element, so a
    one-element batch reproduces a scalar evaluation bit for bit. Rows above
    an element's start order are left at zero.
    """
    if order_rows < 1:
        raise ConfigError(f"order_rows must be >= 1, got {order_rows}")
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z == 0):
        raise ConfigError("Riccati-Bessel argument must be nonzero")
    order_needed = np.broadcast_to(np.asarray(order_needed, dtype=int), z.shape)
    # spurious-solution damping only begins past the oscillatory zone, which
    # ends near |z| + 4 |z|^(1/3); start the recurrence safely above it
    az = np.abs(z)
    osc_edge = np.ceil(az + 4.0 * az ** (1.0 / 3.0)).astype(int)
    start = np.maximum(order_needed, osc_edge) + _START_ORDER_PAD
    top = int(start.max())

    sin_z = np.sin(z)
    cos_z = np.cos(z)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # spherical j_n by downward recurrence, normalized afterwards
        j = np.zeros((order_rows + 1, z.size), dtype=complex)
        f_up = np.zeros_like(z)  # f_{n+1}
        f_cur = np.where(start == top, _DOWNWARD_SEED, 0.0).astype(complex)
        for n in range(top, 0, -1):
            if n <= order_rows:
                j[n] = f_cur
            f_down = ((2 * n + 1) / z) * f_cur - f_up
            f_up = f_cur
            f_cur = np.where(start == n - 1, _DOWNWARD_SEED, f_down)
        j[0] = f_cur

        # normalize against whichever closed form is farther from a zero
        # crossing (sin z and sin z / z - cos z never vanish together)
        j0 = sin_z / z
        j1 = sin_z / z**2 - cos_z / z
        scale0 = j0 / j[0]
        scale1 = j1 / j[1]
        j *= np.where(np.abs(j[0]) >= np.abs(j[1]), scale0, scale1)

        # spherical y_n by upward recurrence
        y = np.zeros_like(j)
        y[0] = -cos_z / z
        if order_rows >= 1:
            y[1] = -cos_z / z**2 - sin_z / z
        for n in range(1, order_rows):
            y[n + 1] = ((2 * n + 1) / z) * y[n] - y[n - 1]

        psi = z * j
        chi = -z * y
        orders = np.arange(order_rows + 1, dtype=float)[:, None]
        # f'_n = f_{n-1} - (n/z) f_n for any Riccati-Bessel solution;
        # the n=0 rows use psi_{-1} = cos z and chi_{-1} = -sin z.
        psi_prev = np.vstack([cos_z[None, :], psi[:-1]])
        chi_prev = np.vstack([-sin_z[None, :], chi[:-1]])
        psi_prime = psi_prev - orders * psi / z
        chi_prime = chi_prev - orders * chi / z
    return psi, psi_prime, chi, chi_prime


def riccati_bessel(order_max: int, argument: complex) -> RiccatiBessel:
    """Riccati-Bessel function tables psi, psi', chi, chi' for n = 0..order_max."""
    if order_max < 1:
        raise ConfigError(f"order_max must be >= 1, got {order_max}")
    if argument == 0:
        raise ConfigError("argument must be nonzero")
    psi, dpsi, chi, dchi = _riccati_tables(
        order_max, np.asarray([argument]), np.asarray([order_max])
    )
    tables = RiccatiBessel(psi[:, 0], dpsi[:, 0], chi[:, 0], dchi[:, 0])
    for name, arr in (("psi", tables.psi), ("chi", tables.chi)):
        bad = ~np.isfinite(arr)
        if np.any(bad):
            order = int(np.argmax(bad))
            raise NumericalError(
                f"{name}_n overflowed at order {order} for |z| = {abs(argument):g}"
            )
    return tables


def _mie_on_grid(stack: SphereStack, wavelengths: np.ndarray, order_max: int | None = None):
    """a_n, b_n rows (n = 1..n_rows) plus per-wavelength truncation orders.

    Rows above a wavelength's own truncation order are unreliable padding and
    must be masked by the caller; ``orders`` carries the per-point cutoffs.
    """
    wl = np.atleast_1d(np.asarray(wavelengths, dtype=float))
    if np.any(wl <= 0):
        raise ConfigError("wavelengths must be positive")
    host_n = index_on_grid(stack.host, wl)
    if np.any(host_n.imag != 0):
        raise ConfigError("host medium must be non-absorbing")
    host_n = host_n.real

    radii = stack.radii()
    n_shells = len(radii)
    x = (2.0 * np.pi * host_n / wl)[None, :] * radii[:, None]  # (shells, n_wl)
    m = np.vstack([index_on_grid(mat, wl) / host_n for _, mat in stack.shells])

    x_out = x[-1]
    if order_max is None:
        orders = np.array([wiscombe_order(v) for v in x_out], dtype=int)
    else:
        if order_max < 1:
            raise ConfigError(f"order_max must be >= 1, got {order_max}")
        orders = np.full(x_out.shape, int(order_max))
    n_rows = int(orders.max())

    # every Riccati argument needed, batched into one downward-recurrence pass:
    # core m_1 x_1; per interface l the outer-shell values at both radii;
    # finally the host-side values at x_out.
    args = [m[0] * x[0]]
    for l in range(n_shells - 1):
        args.append(m[l + 1] * x[l])
        args.append(m[l + 1] * x[l + 1])
    args.append(x_out.astype(complex))
    z_all = np.concatenate(args)
    need_all = np.tile(orders, len(args))
    psi, dpsi, chi, dchi = _riccati_tables(n_rows, z_all, need_all)

    n_wl = wl.size

    def block(i):
        sl = slice(i * n_wl, (i + 1) * n_wl)
        return psi[1:, sl], dpsi[1:, sl], chi[1:, sl], dchi[1:, sl]

    row_orders = np.arange(1, n_rows + 1)[:, None]
    valid = row_orders <= orders[None, :]

    def check_finite(arrays, where):
        for arr in arrays:
            if not np.all(np.isfinite(arr[valid])):
                raise NumericalError(f"non-finite Mie recursion ratio at {where}")

    p_core, dp_core, _, _ = block(0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h_a = dp_core / p_core
        h_b = h_a.copy()
        check_finite((h_a,), "shell 1 (core)")
        for l in range(n_shells - 1):
            p1, dp1, c1, dc1 = block(1 + 2 * l)
            p2, dp2, c2, dc2 = block(2 + 2 * l)
            m_in = m[l][None, :]
            m_out = m[l + 1][None, :]
            # TM: u and u'/m continuous across the interface
            w = (m_out / m_in) * h_a
            ratio = (dp1 - w * p1) / (w * c1 - dc1)
            h_a = (dp2 + ratio * dc2) / (p2 + ratio * c2)
            # TE: u/m and u' continuous across the interface
            v = (m_in / m_out) * h_b
            ratio = (dp1 - v * p1) / (v * c1 - dc1)
            h_b = (dp2 + ratio * dc2) / (p2 + ratio * c2)
            check_finite((h_a, h_b), f"shell {l + 2}")

        p_x, dp_x, c_x, dc_x = block(1 + 2 * (n_shells - 1))
        xi = p_x - 1j * c_x
        dxi = dp_x - 1j * dc_x
        m_last = m[-1][None, :]
        fa = h_a / m_last
        fb = h_b * m_last
        a = (fa * p_x - dp_x) / (fa * xi - dxi)
        b = (fb * p_x - dp_x) / (fb * xi - dxi)
        check_finite((a, b), "outer boundary")

    return a, b, orders, x_out, valid


def mie_coefficients(stack: SphereStack, wavelength: float, order_max: int | None = None) -> MieCoefficients:
    """Multipole coefficients of a stratified sphere at one wavelength."""
    a, b, orders, _, _ = _mie_on_grid(stack, np.asarray([float(wavelength)]), order_max)
    n = int(orders[0])
    return MieCoefficients(a=a[:n, 0].copy(), b=b[:n, 0].copy(), order_max=n)


def _efficiency_on_grid(stack: SphereStack, wavelengths, order_max: int | None = None) -> np.ndarray:
    a, b, orders, x_out, valid = _mie_on_grid(stack, wavelengths, order_max)
    n_rows = a.shape[0]
    acc = np.zeros(a.shape[1], dtype=float)
    # fixed ascending accumulation keeps scalar and grid paths bit-identical
    for i in range(n_rows):
        n = i + 1
        term = (2 * n + 1) * (np.abs(a[i]) ** 2 + np.abs(b[i]) ** 2)
        acc = acc + np.where(valid[i], term, 0.0)
    return (2.0 / x_out**2) * acc


def scattering_efficiency(stack: SphereStack, wavelength: float, order_max: int | None = None) -> float:
    """Scattering efficiency Q_sca = (2/x^2) sum (2n+1)(|a_n|^2 + |b_n|^2).

    The scattering cross-section is Q_sca * pi * r_outer^2; datasets store the
    dimensionless Q_sca.
    """
    return float(_efficiency_on_grid(stack, np.asarray([float(wavelength)]), order_max)[0])


def scattering_cross_section(stack: SphereStack, wavelength: float) -> float:
    """Scattering cross-section in nm^2."""
    r = float(stack.radii()[-1])
    return scattering_efficiency(stack, wavelength) * np.pi * r**2


def scattering_spectrum(stack: SphereStack, grid=None, order_max: int | None = None) -> Spectrum:
    """Q_sca sampled over a wavelength grid (default 400..798 nm)."""
    if grid is None:
        grid = DEFAULT_GRID
    wl = grid.wavelengths() if isinstance(grid, WavelengthGrid) else np.asarray(grid, float)
    return Spectrum(wl, _efficiency_on_grid(stack, wl, order_max))
