"""Closed-form low-density energy expressions and the population split.

All quantities are energy densities in hbar = 2m = 1 units.  The leading
fermionic asymptotics is

    e(rho) = (3/5) (6 pi^2 / q)^{2/3} rho^{5/3} + 4 pi (1 - 1/q) a rho^2

and the bosonic counterpart 4 pi a rho^2 carries the next-order factor
(128 / 15 sqrt(pi)) sqrt(rho a^3).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

__all__ = [
    "DILUTENESS_THRESHOLD",
    "LHY_COEFFICIENT",
    "GasParameters",
    "EnergyBreakdown",
    "fermi_energy_density",
    "two_component_energy",
    "optimal_polarization",
    "bose_energy_density",
]

# the asymptotic series has uncontrolled o(rho^2) terms beyond this point
DILUTENESS_THRESHOLD = 1e-2

LHY_COEFFICIENT = 128.0 / (15.0 * math.sqrt(math.pi))

_FREE_PREFACTOR = 0.6 * (6.0 * math.pi ** 2) ** (2.0 / 3.0)


@dataclass(frozen=True)
class GasParameters:
    """State point of the gas: total density, spin count, scattering length.

    Optional per-species densities must add up to rho; when absent the
    population is assumed equally split among the q spin states.
    """

    rho: float
    q: int = 2
    scattering_length: float = 0.0
    rho_up: float | None = None
    rho_down: float | None = None

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho > 0 required, got {self.rho}")
        if isinstance(self.q, bool) or not isinstance(self.q, int) or self.q < 1:
            raise ValueError(f"q must be an integer >= 1, got {self.q!r}")
        if self.scattering_length < 0:
            raise ValueError("scattering length must be nonnegative")
        if (self.rho_up is None) != (self.rho_down is None):
            raise ValueError("give both per-species densities or neither")
        if self.rho_up is not None:
            if self.rho_up < 0 or self.rho_down < 0:
                raise ValueError("per-species densities must be nonnegative")
            if not math.isclose(self.rho_up + self.rho_down, self.rho,
                                rel_tol=1e-9):
                raise ValueError(
                    f"rho_up + rho_down = {self.rho_up + self.rho_down} "
                    f"does not match rho = {self.rho}")

    @property
    def diluteness(self) -> float:
        """The expansion parameter rho a^3."""
        return self.rho * self.scattering_length ** 3


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy density split into its expansion terms (absent terms are 0)."""

    free_term: float
    interaction_term: float
    lhy_term: float
    total: float
    diluteness: float

    @property
    def diluteness_warning(self) -> bool:
        return self.diluteness > DILUTENESS_THRESHOLD


def _warn_if_dense(diluteness: float) -> None:
    if diluteness > DILUTENESS_THRESHOLD:
        warnings.warn(
            f"rho a^3 = {diluteness:.3g} exceeds {DILUTENESS_THRESHOLD}; "
            "the two-term expansion is asymptotic and untrusted here",
            stacklevel=3)


def fermi_energy_density(params: GasParameters) -> EnergyBreakdown:
    """Two-term energy density of the dilute q-state Fermi gas.

    free term (3/5)(6 pi^2/q)^{2/3} rho^{5/3} plus the correlation term
    4 pi (1 - 1/q) a rho^2; for q = 1 the interaction drops out entirely.
    """
    rho, q, a = params.rho, params.q, params.scattering_length
    free = 0.6 * (6.0 * math.pi ** 2 / q) ** (2.0 / 3.0) * rho ** (5.0 / 3.0)
    interaction = 4.0 * math.pi * (1.0 - 1.0 / q) * a * rho ** 2
    _warn_if_dense(params.diluteness)
    return EnergyBreakdown(free_term=free, interaction_term=interaction,
                           lhy_term=0.0, total=free + interaction,
                           diluteness=params.diluteness)


def two_component_energy(rho_up: float, rho_down: float,
                         scattering_length: float) -> float:
    """Energy density of a two-species gas at given per-species densities.

    (3/5)(6 pi^2)^{2/3} (rho_up^{5/3} + rho_down^{5/3})
        + 8 pi a rho_up rho_down.
    For the balanced split this coincides with fermi_energy_density at q = 2.
    """
    if rho_up < 0 or rho_down < 0:
        raise ValueError("densities must be nonnegative")
    if scattering_length < 0:
        raise ValueError("scattering length must be nonnegative")
    free = _FREE_PREFACTOR * (rho_up ** (5.0 / 3.0) + rho_down ** (5.0 / 3.0))
    return free + 8.0 * math.pi * scattering_length * rho_up * rho_down


def optimal_polarization(rho: float, scattering_length: float
                         ) -> tuple[float, float]:
    """Split rho across two species to minimize two_component_energy.

    The free part is strictly convex and symmetric in the split, so it alone
    is minimized at rho/2.  The cross term peaks there instead, but within
    the dilute validity range (rho a^3 well below 0.1) convexity dominates
    and the equal split is the global minimum; outside that range the
    expansion itself is untrusted, so the equal split is still returned and
    the diluteness warning fires.
    """
    if not rho > 0:
        raise ValueError(f"rho > 0 required, got {rho}")
    if scattering_length < 0:
        raise ValueError("scattering length must be nonnegative")
    _warn_if_dense(rho * scattering_length ** 3)
    return (0.5 * rho, 0.5 * rho)


def bose_energy_density(rho: float, scattering_length: float,
                        include_lhy: bool = False) -> EnergyBreakdown:
    """Leading bosonic energy density 4 pi a rho^2, optionally with the
    next-order factor (128 / 15 sqrt(pi)) sqrt(rho a^3)."""
    if not rho > 0:
        raise ValueError(f"rho > 0 required, got {rho}")
    if scattering_length < 0:
        raise ValueError("scattering length must be nonnegative")
    diluteness = rho * scattering_length ** 3
    leading = 4.0 * math.pi * scattering_length * rho ** 2
    lhy = leading * LHY_COEFFICIENT * math.sqrt(diluteness) if include_lhy else 0.0
    _warn_if_dense(diluteness)
    return EnergyBreakdown(free_term=0.0, interaction_term=leading,
                           lhy_term=lhy, total=leading + lhy,
                           diluteness=diluteness)
