"""Show the dressed-determinant overlap approaching the identity.

A Slater determinant of box modes is dressed by a pair factor centered
at a few fixed scatterer positions.  The overlap matrix of the dressed
orbitals measures how much the dressing disturbs orthonormality; as the
scatterer spacing grows relative to the scattering length the deviation
from the identity dies off.  A small brute-force marginalization check
confirms the determinant algebra behind the scan.
"""

import numpy as np

from dilutefermi.slater import (
    BoxQuadrature,
    key_estimate_scan,
    m_particle_density,
    make_correlation_kernel,
    overlap_matrix,
    sine_orbitals,
    slater_norm,
)
from dilutefermi.dyson import separated_centers


def main():
    side = 6.0
    quad = BoxQuadrature(side, 20)
    base = sine_orbitals(3, side, quad)
    centers = separated_centers(3, 0.8, side, seed=2, periodic=False)
    print(f"three box modes, three centers at least 0.8 apart "
          f"(side {side})")
    print(f"{'spacing/a_v':>12} {'a_v':>9} {'|I - M|':>12}")
    rows = key_estimate_scan(base, centers, separation=0.8,
                             ratios=(5, 10, 20, 40), cutoff=0.4)
    for row in rows:
        print(f"{row.ratio:12.0f} {row.scattering_length:9.4f} "
              f"{row.deviation_norm:12.3e}")
    print("the deviation shrinks as the centers decouple from the "
          "correlation holes\n")

    print("cross-check of the underlying determinant algebra:")
    orbitals = sine_orbitals(3, 2.0, BoxQuadrature(2.0, 10))
    norm = slater_norm(overlap_matrix(orbitals))
    print(f"  orthonormal modes: norm = {norm:.12f} "
          f"(1 up to the quadrature)")
    kernel = make_correlation_kernel(orbitals)
    point = np.array([0.7, 1.1, 0.9])
    single = m_particle_density(kernel, [point])
    pair_same = m_particle_density(kernel, [point, point])
    print(f"  one-particle density at a point: {single:.6f}")
    print(f"  two particles at the same point: {pair_same:.2e} "
          f"(antisymmetry forces zero)")
    diag = kernel.diagonal(orbitals.quadrature.points)
    mass = orbitals.quadrature.integrate(diag)
    print(f"  density integrates to the particle count: {mass:.10f}")


if __name__ == "__main__":
    main()
