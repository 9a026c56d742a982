"""Closed-form energy expressions: frozen values, scaling, and split scans."""

import math

import numpy as np
import pytest

from dilutefermi.expansion import (
    LHY_COEFFICIENT,
    EnergyBreakdown,
    GasParameters,
    bose_energy_density,
    fermi_energy_density,
    optimal_polarization,
    two_component_energy,
)


class TestFermiEnergyDensity:
    def test_reference_point(self):
        out = fermi_energy_density(GasParameters(rho=1.0, q=2,
                                                 scattering_length=0.01))
        assert out.free_term == pytest.approx(0.6 * (3 * math.pi ** 2) ** (2 / 3),
                                              rel=1e-13)
        assert out.interaction_term == pytest.approx(0.02 * math.pi, rel=1e-13)
        assert out.total == out.free_term + out.interaction_term
        assert out.diluteness == pytest.approx(1e-6)

    def test_zero_length_leaves_free_term(self):
        out = fermi_energy_density(GasParameters(rho=2.0, q=3))
        assert out.interaction_term == 0.0
        assert out.total == out.free_term

    def test_single_species_has_no_interaction(self):
        out = fermi_energy_density(GasParameters(rho=1.0, q=1,
                                                 scattering_length=0.05))
        assert out.interaction_term == 0.0

    def test_diluteness_warning(self):
        with pytest.warns(UserWarning, match="rho a"):
            out = fermi_energy_density(GasParameters(rho=1.0, q=2,
                                                     scattering_length=0.5))
        assert out.diluteness_warning
        dilute = fermi_energy_density(GasParameters(rho=1.0, q=2,
                                                    scattering_length=0.01))
        assert not dilute.diluteness_warning

    def test_q_trend_toward_bosonic_coefficients(self):
        rho, a = 1.3, 0.02
        frees, interactions = [], []
        for q in (1, 2, 3, 5, 10, 100, 1000):
            out = fermi_energy_density(GasParameters(rho=rho, q=q,
                                                     scattering_length=a))
            frees.append(out.free_term)
            interactions.append(out.interaction_term)
        assert all(x > y for x, y in zip(frees, frees[1:]))
        assert all(x < y for x, y in zip(interactions, interactions[1:]))
        bose = bose_energy_density(rho, a).interaction_term
        assert interactions[-1] == pytest.approx(bose, rel=2e-3)

    def test_parameter_validation(self):
        with pytest.raises(ValueError, match="rho"):
            GasParameters(rho=0.0)
        with pytest.raises(ValueError, match="q"):
            GasParameters(rho=1.0, q=0)
        with pytest.raises(ValueError, match="q"):
            GasParameters(rho=1.0, q=2.0)  # type: ignore[arg-type]
        with pytest.raises(ValueError, match="nonnegative"):
            GasParameters(rho=1.0, scattering_length=-0.1)
        with pytest.raises(ValueError, match="does not match"):
            GasParameters(rho=1.0, rho_up=0.7, rho_down=0.4)
        with pytest.raises(ValueError, match="both"):
            GasParameters(rho=1.0, rho_up=0.5)


class TestTwoComponentEnergy:
    def test_single_species_limit(self):
        rho = 0.8
        expected = 0.6 * (6 * math.pi ** 2) ** (2 / 3) * rho ** (5 / 3)
        assert two_component_energy(rho, 0.0, 0.05) == pytest.approx(expected,
                                                                     rel=1e-13)

    def test_balanced_split_matches_q2_form(self):
        rho, a = 1.7, 0.03
        split = two_component_energy(rho / 2, rho / 2, a)
        total = fermi_energy_density(GasParameters(rho=rho, q=2,
                                                   scattering_length=a)).total
        assert split == pytest.approx(total, rel=1e-13)

    def test_unbalanced_split_is_higher(self):
        rho, a = 1.0, 0.01
        sym = two_component_energy(0.5 * rho, 0.5 * rho, a)
        asym = two_component_energy(0.6 * rho, 0.4 * rho, a)
        assert asym > sym

    def test_convex_along_constraint_line(self):
        rho, a = 1.0, 0.01
        x = np.linspace(0.01, 0.99, 99) * rho
        e = np.array([two_component_energy(xi, rho - xi, a) for xi in x])
        assert np.all(np.diff(e, 2) > 0)


class TestOptimalPolarization:
    def test_equal_split(self):
        assert optimal_polarization(1.0, 0.01) == (0.5, 0.5)
        assert optimal_polarization(3.0, 0.0) == (1.5, 1.5)

    def test_grid_scan_oracle(self):
        rho, a = 1.0, 0.01
        splits = np.linspace(0.0, rho, 101)
        energies = [two_component_energy(x, rho - x, a) for x in splits]
        best = splits[int(np.argmin(energies))]
        up, down = optimal_polarization(rho, a)
        assert best == pytest.approx(up, abs=1e-12)
        assert up + down == pytest.approx(rho, rel=1e-15)


class TestBoseEnergyDensity:
    def test_leading_term(self):
        out = bose_energy_density(2.0, 0.05)
        assert out.interaction_term == pytest.approx(4 * math.pi * 0.05 * 4.0,
                                                     rel=1e-13)
        assert out.lhy_term == 0.0 and out.free_term == 0.0

    def test_lhy_ratio_reference_point(self):
        out = bose_energy_density(1.0, 0.1, include_lhy=True)
        ratio = out.lhy_term / out.interaction_term
        expected = 128.0 / (15.0 * math.sqrt(math.pi)) * math.sqrt(1e-3)
        assert ratio == pytest.approx(expected, rel=1e-13)
        assert expected == pytest.approx(0.1522, abs=5e-4)

    def test_lhy_vanishes_in_dilute_limit(self):
        ratios = []
        for rho in (1e-2, 1e-4, 1e-6):
            out = bose_energy_density(rho, 0.1, include_lhy=True)
            ratios.append(out.lhy_term / out.interaction_term)
        assert all(x > y for x, y in zip(ratios, ratios[1:]))
        assert ratios[-1] < 1e-3

    def test_zero_length(self):
        out = bose_energy_density(1.0, 0.0, include_lhy=True)
        assert out.total == 0.0


class TestScalingCovariance:
    def test_all_densities_scale_as_lambda_minus_five(self):
        rng = np.random.default_rng(42)
        rho, a = 0.7, 0.02
        base_fermi = fermi_energy_density(
            GasParameters(rho=rho, q=2, scattering_length=a)).total
        base_two = two_component_energy(0.3 * rho, 0.7 * rho, a)
        base_bose = bose_energy_density(rho, a, include_lhy=True).total
        for lam in rng.uniform(0.5, 2.0, size=8):
            srho, sa = rho / lam ** 3, a * lam
            scaled_fermi = fermi_energy_density(
                GasParameters(rho=srho, q=2, scattering_length=sa)).total
            scaled_two = two_component_energy(0.3 * srho, 0.7 * srho, sa)
            scaled_bose = bose_energy_density(srho, sa, include_lhy=True).total
            assert scaled_fermi == pytest.approx(base_fermi / lam ** 5, rel=1e-12)
            assert scaled_two == pytest.approx(base_two / lam ** 5, rel=1e-12)
            assert scaled_bose == pytest.approx(base_bose / lam ** 5, rel=1e-12)


def test_breakdown_total_is_sum_of_terms():
    out = bose_energy_density(1.0, 0.1, include_lhy=True)
    assert isinstance(out, EnergyBreakdown)
    assert out.total == pytest.approx(
        out.free_term + out.interaction_term + out.lhy_term, rel=1e-15)
    assert LHY_COEFFICIENT == pytest.approx(128 / (15 * math.sqrt(math.pi)))
