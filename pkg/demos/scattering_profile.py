"""Walk through the zero-energy scattering solver on three potentials.

For each shape the script solves the radial problem, reports the
scattering length against the known closed form where one exists, checks
the energy identity that the solver satisfies by construction, and
compares against the Born integral, which bounds the scattering length
from above for nonnegative potentials.
"""

import math

import numpy as np

from dilutefermi.scattering import (
    born_scattering_length,
    check_energy_identity,
    hard_sphere,
    sampled_potential,
    shell_barrier,
    solve_zero_energy,
    square_barrier,
)


def describe(name, potential, exact=None):
    solution = solve_zero_energy(potential)
    a = solution.scattering_length
    print(f"{name}")
    print(f"  scattering length a_v = {a:.10f}")
    if exact is not None:
        print(f"  closed form          = {exact:.10f} "
              f"(difference {abs(a - exact):.2e})")
    identity = check_energy_identity(solution)
    print(f"  energy identity: integral {identity.integral:.10f} vs "
          f"4 pi a = {identity.expected:.10f} "
          f"(residual {identity.residual:.2e})")
    if potential.hard_core == 0.0:
        born = born_scattering_length(potential)
        print(f"  Born integral (8 pi)^-1 int v = {born:.6f}, "
              f"ratio a_v / Born = {a / born:.4f} (always <= 1)")
    print()
    return solution


def main():
    describe("hard core, radius 1", hard_sphere(1.0), exact=1.0)
    describe("square barrier, height 2, range 1", square_barrier(2.0, 1.0),
             exact=1.0 - math.tanh(1.0))
    describe("shell barrier, height 3 on [0.5, 1]",
             shell_barrier(3.0, 0.5, 1.0))

    r = np.linspace(0.0, 2.5, 260)
    bump = 1.4 * np.exp(-((r / 0.9) ** 2))
    solution = describe("sampled smooth bump", sampled_potential(r, bump))

    print("profile of the sampled-bump solution, u(r)/r -> 1 - a/r:")
    a = solution.scattering_length
    for radius in (0.5, 1.0, 2.0, 4.0, 8.0):
        idx = np.searchsorted(solution.r, min(radius, solution.r_max))
        idx = min(idx, len(solution.r) - 1)
        phi = solution.u[idx] / (solution.slope * solution.r[idx])
        print(f"  r = {solution.r[idx]:5.2f}: phi = {phi:.6f}, "
              f"asymptote 1 - a/r = {1.0 - a / solution.r[idx]:.6f}")


if __name__ == "__main__":
    main()
