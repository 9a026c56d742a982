"""Tabulate the dilute ground-state energy density across regimes.

The script sweeps the diluteness parameter rho a^3 for the two-component
gas, splits the energy into the free Fermi term and the interaction
term, shows how polarization removes the interaction term at this order,
and contrasts with the bosonic expansion where the correction enters at
a lower power of the density.
"""

from dilutefermi.expansion import (
    GasParameters,
    bose_energy_density,
    fermi_energy_density,
    optimal_polarization,
)


def main():
    a = 1.0
    print("two components (q = 2), scattering length a = 1")
    print(f"{'rho a^3':>10} {'free term':>14} {'interaction':>14} "
          f"{'total':>14} {'inter/free':>11}")
    for diluteness in (1e-6, 1e-4, 1e-2):
        params = GasParameters(rho=diluteness, q=2, scattering_length=a)
        breakdown = fermi_energy_density(params)
        print(f"{diluteness:10.0e} {breakdown.free_term:14.6e} "
              f"{breakdown.interaction_term:14.6e} {breakdown.total:14.6e} "
              f"{breakdown.interaction_term / breakdown.free_term:11.4f}")

    print()
    print("polarized limit: one component pays more kinetic energy but "
          "loses the interaction term")
    rho = 1e-3
    paired = fermi_energy_density(
        GasParameters(rho=rho, q=2, scattering_length=a))
    polarized = fermi_energy_density(
        GasParameters(rho=rho, q=1, scattering_length=a))
    print(f"  paired:    free {paired.free_term:.6e}  "
          f"interaction {paired.interaction_term:.6e}")
    print(f"  polarized: free {polarized.free_term:.6e}  "
          f"interaction {polarized.interaction_term:.6e}")
    print(f"  kinetic penalty factor {polarized.free_term / paired.free_term:.4f} "
          f"vs interaction saving {paired.interaction_term:.3e}")
    up, down = optimal_polarization(rho, a)
    print(f"  energy-minimizing split at rho = {rho}: "
          f"rho_up = {up:.4e}, rho_down = {down:.4e}")

    print()
    print("bosons at the same densities, with and without the "
          "next-order correction")
    for diluteness in (1e-6, 1e-4, 1e-2):
        plain = bose_energy_density(diluteness, a)
        refined = bose_energy_density(diluteness, a, include_lhy=True)
        rel = refined.lhy_term / refined.interaction_term
        print(f"  rho a^3 = {diluteness:7.0e}: leading "
              f"{plain.total:.6e}, corrected {refined.total:.6e} "
              f"(correction {100 * rel:.2f}% of the interaction term)")
        if refined.diluteness_warning:
            print("    note: expansion parameter is no longer small here")


if __name__ == "__main__":
    main()
