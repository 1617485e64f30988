import numpy as np
import pytest

from spectra_xfer import (
    ConfigError,
    Material,
    NumericalError,
    SIO2,
    SphereStack,
    TIO2,
    VACUUM,
    mie_coefficients,
    riccati_bessel,
    scattering_cross_section,
    scattering_efficiency,
    scattering_spectrum,
    wiscombe_order,
)

from oracles import (
    mie_multilayer_linear_system,
    mie_single_sphere,
    q_sca_from_coefficients,
    rayleigh_q_sca,
)


def alternating_shells(thicknesses, first=SIO2, second=TIO2):
    mats = (first, second)
    return SphereStack(shells=tuple((t, mats[i % 2]) for i, t in enumerate(thicknesses)))


class TestRiccatiBessel:
    def test_psi0_is_sin(self):
        assert riccati_bessel(1, 1.0).psi[0] == pytest.approx(np.sin(1.0), abs=1e-15)

    def test_chi0_is_cos(self):
        assert riccati_bessel(1, 1.0).chi[0] == pytest.approx(np.cos(1.0), abs=1e-15)

    def test_psi1_closed_form(self):
        expected = np.sin(2.0) / 2.0 - np.cos(2.0)
        # psi_1(z) = z j_1(z) = sin z / z - cos z
        assert riccati_bessel(1, 2.0).psi[1] == pytest.approx(expected, abs=1e-14)

    def test_low_order_closed_forms_over_range(self):
        # j_n closed forms for n in {0, 1, 2}: relative error < 1e-12 on |z| in [0.1, 50]
        for z in np.concatenate([np.linspace(0.1, 50.0, 120), [0.1 + 0.05j, 3.0 + 1.0j]]):
            z = complex(z)
            tab = riccati_bessel(2, z)
            psi0 = np.sin(z)
            psi1 = np.sin(z) / z - np.cos(z)
            psi2 = (3.0 / z**2 - 1.0) * np.sin(z) - 3.0 * np.cos(z) / z
            for got, want in ((tab.psi[0], psi0), (tab.psi[1], psi1), (tab.psi[2], psi2)):
                assert abs(got - want) <= 1e-12 * max(1.0, abs(want))
            chi0 = np.cos(z)
            chi1 = np.cos(z) / z + np.sin(z)
            assert abs(tab.chi[0] - chi0) <= 1e-12 * max(1.0, abs(chi0))
            assert abs(tab.chi[1] - chi1) <= 1e-12 * max(1.0, abs(chi1))

    def test_derivatives_match_finite_differences(self):
        h = 1e-6
        for z in (0.7, 5.3, 21.1):
            tab = riccati_bessel(4, z)
            plus = riccati_bessel(4, z + h)
            minus = riccati_bessel(4, z - h)
            fd_psi = (plus.psi - minus.psi) / (2 * h)
            fd_chi = (plus.chi - minus.chi) / (2 * h)
            assert np.allclose(tab.psi_prime, fd_psi, rtol=1e-6, atol=1e-8)
            assert np.allclose(tab.chi_prime, fd_chi, rtol=1e-6, atol=1e-8)

    def test_overflow_names_the_order(self):
        with pytest.raises(NumericalError, match="order"):
            riccati_bessel(220, 0.05)

    def test_invalid_arguments(self):
        with pytest.raises(ConfigError):
            riccati_bessel(0, 1.0)
        with pytest.raises(ConfigError):
            riccati_bessel(3, 0.0)


class TestMieCoefficients:
    def test_index_matched_sphere_scatters_nothing(self):
        stack = SphereStack(shells=((100.0, VACUUM), (50.0, VACUUM)))
        co = mie_coefficients(stack, 600.0)
        assert np.max(np.abs(co.a)) < 1e-14
        assert np.max(np.abs(co.b)) < 1e-14

    def test_two_identical_shells_equal_homogeneous_sphere(self):
        mat = Material.constant("glass", 1.5)
        two = SphereStack(shells=((80.0, mat), (120.0, mat)))
        lam = 500.0
        co = mie_coefficients(two, lam)
        x = 2.0 * np.pi * 200.0 / lam
        a_ref, b_ref = mie_single_sphere(1.5, x, co.order_max)
        assert np.max(np.abs(co.a - a_ref)) < 1e-10
        assert np.max(np.abs(co.b - b_ref)) < 1e-10

    def test_rayleigh_regime_is_dipole_dominated(self):
        lam = 500.0
        r = 0.01 * lam / (2.0 * np.pi)
        stack = SphereStack(shells=((r, Material.constant("glass", 1.5)),))
        co = mie_coefficients(stack, lam)
        assert abs(co.b[0]) / abs(co.a[0]) < 1e-3

    def test_multilayer_matches_boundary_condition_solve(self):
        shells = ((45.0, SIO2), (55.0, TIO2), (35.0, SIO2), (65.0, TIO2))
        stack = SphereStack(shells=shells)
        lam = 480.0
        co = mie_coefficients(stack, lam)
        radii = np.cumsum([t for t, _ in shells])
        a_ref, b_ref = mie_multilayer_linear_system([1.46, 2.40, 1.46, 2.40], radii, lam, co.order_max)
        assert np.max(np.abs(co.a - a_ref)) < 1e-10
        assert np.max(np.abs(co.b - b_ref)) < 1e-10

    def test_passive_sphere_coefficients_bounded(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            stack = alternating_shells(rng.uniform(30.0, 70.0, size=8))
            co = mie_coefficients(stack, rng.uniform(400.0, 798.0))
            assert np.max(np.abs(co.a)) <= 1.0 + 1e-12
            assert np.max(np.abs(co.b)) <= 1.0 + 1e-12


class TestScatteringEfficiency:
    def test_index_matched_gives_zero(self):
        stack = SphereStack(shells=((150.0, VACUUM),))
        assert scattering_efficiency(stack, 550.0) < 1e-15

    def test_rayleigh_closed_form(self):
        lam = 500.0
        x = 0.01
        r = x * lam / (2.0 * np.pi)
        for m in (1.33, 1.5, 2.0):
            q = scattering_efficiency(SphereStack(shells=((r, Material.constant("m", m)),)), lam)
            assert abs(q - rayleigh_q_sca(m, x)) / rayleigh_q_sca(m, x) < 0.01

    def test_eight_identical_shells_collapse(self):
        mat = Material.constant("glass", 1.8)
        thicknesses = [40.0, 55.0, 33.0, 61.0, 47.0, 52.0, 38.0, 66.0]
        multi = SphereStack(shells=tuple((t, mat) for t in thicknesses))
        single = SphereStack(shells=((sum(thicknesses), mat),))
        lam = 520.0
        q_multi = scattering_efficiency(multi, lam)
        q_single = scattering_efficiency(single, lam)
        assert abs(q_multi - q_single) <= 1e-10 * max(1.0, q_single)

    def test_efficiency_nonnegative_random(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            stack = alternating_shells(rng.uniform(30.0, 70.0, size=int(rng.integers(1, 9))))
            assert scattering_efficiency(stack, rng.uniform(400.0, 798.0)) >= 0.0

    def test_cross_section_is_q_times_area(self):
        stack = alternating_shells([50.0, 60.0])
        lam = 600.0
        q = scattering_efficiency(stack, lam)
        assert scattering_cross_section(stack, lam) == pytest.approx(q * np.pi * 110.0**2)

    def test_truncation_stability(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            stack = alternating_shells(rng.uniform(30.0, 70.0, size=8))
            lam = rng.uniform(400.0, 798.0)
            q = scattering_efficiency(stack, lam)
            n_rule = wiscombe_order(2.0 * np.pi * float(stack.radii()[-1]) / lam)
            q_more = scattering_efficiency(stack, lam, order_max=n_rule + 5)
            assert abs(q - q_more) <= 1e-8 * max(q, 1e-30)


class TestScatteringSpectrum:
    def test_index_matched_spectrum_is_zero(self):
        spec = scattering_spectrum(SphereStack(shells=((120.0, VACUUM),)))
        assert len(spec) == 200
        assert np.max(spec.values) < 1e-15

    def test_points_match_scalar_op_exactly(self):
        stack = alternating_shells([45.0, 55.0, 35.0, 65.0, 50.0, 40.0, 60.0, 30.0])
        spec = scattering_spectrum(stack)
        for i in (0, 73, 141, 199):
            assert spec.values[i] == scattering_efficiency(stack, float(spec.wavelengths[i]))

    def test_grid_truncation_stability(self):
        stack = alternating_shells([45.0, 55.0, 35.0, 65.0])
        base = scattering_spectrum(stack)
        n_rule = wiscombe_order(2.0 * np.pi * float(stack.radii()[-1]) / 400.0)
        more = scattering_spectrum(stack, order_max=n_rule + 5)
        rel = np.abs(base.values - more.values) / np.maximum(base.values, 1e-30)
        assert np.max(rel) < 1e-8

    def test_empty_stack_rejected(self):
        with pytest.raises(ConfigError):
            SphereStack(shells=())
