"""Determinant norms, correlation kernels, and point densities of
antisymmetrized orbital products.

An antisymmetrized product of n one-particle orbitals has squared norm
det M, where M is the orbital overlap matrix; the reproducing kernel
built from the inverse overlap turns every m-point density of the state
into an m x m determinant.  Everything here integrates with one shared
tensor-product quadrature so the fast formulas and the brute-force
reference computations in the tests carry the same discretization error,
isolating formula mistakes from quadrature mistakes.  The module also
provides the deviation-norm scan ||I - M(Y)|| for orbitals dressed by a
pair function around scattering centers, the quantity controlling how
far the dressed determinant drifts from the bare one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .scattering import hard_sphere, make_pair_function, solve_zero_energy

__all__ = [
    "BoxQuadrature",
    "OrbitalSet",
    "OverlapMatrix",
    "CorrelationKernel",
    "KeyEstimateRow",
    "RankDeficiencyError",
    "sine_modes",
    "sine_orbitals",
    "dressed_orbitals",
    "overlap_matrix",
    "slater_norm",
    "make_correlation_kernel",
    "m_particle_density",
    "key_estimate_scan",
]


class RankDeficiencyError(ValueError):
    """Linearly dependent orbitals, with the offending null direction."""

    def __init__(self, message: str, null_direction: np.ndarray,
                 eigenvalue: float):
        super().__init__(message)
        self.null_direction = null_direction
        self.eigenvalue = eigenvalue


@dataclass(frozen=True)
class BoxQuadrature:
    """Tensor-product Gauss-Legendre rule over the cube [0, side]^3."""

    side: float
    nodes_per_axis: int

    def __post_init__(self):
        if not self.side > 0:
            raise ValueError("box side must be positive")
        if self.nodes_per_axis < 2:
            raise ValueError("need at least 2 quadrature nodes per axis")

    @cached_property
    def axis_nodes(self) -> np.ndarray:
        x, _ = np.polynomial.legendre.leggauss(self.nodes_per_axis)
        return 0.5 * self.side * (x + 1.0)

    @cached_property
    def axis_weights(self) -> np.ndarray:
        _, w = np.polynomial.legendre.leggauss(self.nodes_per_axis)
        return 0.5 * self.side * w

    @cached_property
    def points(self) -> np.ndarray:
        """All q^3 nodes as an (q^3, 3) array, last axis fastest."""
        x = self.axis_nodes
        grids = np.meshgrid(x, x, x, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    @cached_property
    def weights(self) -> np.ndarray:
        w = self.axis_weights
        return (w[:, None, None] * w[None, :, None] * w[None, None, :]).ravel()

    def integrate(self, values) -> complex | float:
        total = np.dot(self.weights, values)
        return complex(total) if np.iscomplexobj(values) else float(total)


@dataclass(frozen=True)
class OrbitalSet:
    """n one-particle functions with an integration rule over their box.

    evaluator maps an (m, 3) array of positions to the (m, n) array of
    orbital values; linear independence is not assumed here but is
    verified whenever an overlap matrix is assembled.
    """

    n: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    quadrature: BoxQuadrature
    label: str = "orbitals"

    def values(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.asarray(self.evaluator(pts))
        if out.shape != (len(pts), self.n):
            raise ValueError(
                f"evaluator returned shape {out.shape}, "
                f"expected {(len(pts), self.n)}")
        return out


def sine_modes(count: int) -> np.ndarray:
    """Index triples of the count lowest box sine modes.

    Ordered by frequency norm n1^2+n2^2+n3^2 with lexicographic
    tie-breaking, so partially filled degenerate shells are deterministic.
    """
    if count < 1:
        raise ValueError("need at least one mode")
    top = int(math.ceil(count ** (1.0 / 3.0))) + 2
    triples = sorted(
        ((n1 * n1 + n2 * n2 + n3 * n3, n1, n2, n3)
         for n1 in range(1, top + 1)
         for n2 in range(1, top + 1)
         for n3 in range(1, top + 1)))
    return np.array([t[1:] for t in triples[:count]], dtype=int)


def sine_orbitals(count: int, side: float,
                  quadrature: BoxQuadrature | None = None) -> OrbitalSet:
    """The count lowest normalized sine modes of the box with walls."""
    if quadrature is None:
        quadrature = BoxQuadrature(side, 24)
    modes = sine_modes(count)
    amplitude = (2.0 / side) ** 1.5

    def evaluator(points):
        phases = (math.pi / side) * points[:, None, :] * modes[None, :, :]
        return amplitude * np.sin(phases).prod(axis=2)

    return OrbitalSet(n=count, evaluator=evaluator, quadrature=quadrature,
                      label=f"{count} sine modes")


def dressed_orbitals(base: OrbitalSet, pair, centers,
                     label: str | None = None) -> OrbitalSet:
    """Multiply every base orbital by prod_j f(|x - y_j|) over the centers.

    pair is any object with a value(radii) method, such as a scattering
    pair function; the unit pair function leaves the set unchanged.
    """
    centers = np.asarray(centers, dtype=float).reshape(-1, 3)

    def evaluator(points):
        vals = base.values(points)
        factor = np.ones(len(points))
        for y in centers:
            factor = factor * np.asarray(
                pair.value(np.linalg.norm(points - y, axis=1)), dtype=float)
        return vals * factor[:, None]

    return OrbitalSet(n=base.n, evaluator=evaluator,
                      quadrature=base.quadrature,
                      label=label or f"{base.label}, pair-dressed")


@dataclass(frozen=True)
class OverlapMatrix:
    """Hermitian positive-definite Gram matrix of an orbital set."""

    entries: np.ndarray
    source: str
    smallest_eigenvalue: float
    hermiticity_defect: float


def overlap_matrix(orbitals: OrbitalSet,
                   rank_tol: float = 1e-10) -> OverlapMatrix:
    """Gram matrix by the set's own quadrature, with definiteness checks.

    Raises RankDeficiencyError carrying the null direction when the
    smallest eigenvalue falls below rank_tol relative to the largest,
    which is how linear dependence among the orbitals shows up.
    """
    quad = orbitals.quadrature
    phi = orbitals.values(quad.points)
    entries = phi.conj().T @ (quad.weights[:, None] * phi)
    defect = float(np.abs(entries - entries.conj().T).max())
    entries = 0.5 * (entries + entries.conj().T)
    if np.isrealobj(phi):
        entries = entries.real
    scale = float(np.abs(entries).max())
    if defect > 1e-12 * max(scale, 1.0):
        raise ValueError(f"overlap matrix is not Hermitian; defect {defect:.3g}")
    vals, vecs = np.linalg.eigh(entries)
    if vals[0] <= rank_tol * max(vals[-1], 0.0):
        direction = vecs[:, 0]
        raise RankDeficiencyError(
            f"orbitals are linearly dependent: smallest overlap eigenvalue "
            f"{vals[0]:.3g} with null direction {np.round(direction, 6)}",
            null_direction=direction, eigenvalue=float(vals[0]))
    return OverlapMatrix(entries=entries, source=orbitals.label,
                         smallest_eigenvalue=float(vals[0]),
                         hermiticity_defect=defect)


def slater_norm(overlap: OverlapMatrix) -> float:
    """Squared norm of the antisymmetrized product, det of the overlap."""
    try:
        factor, _ = cho_factor(overlap.entries, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ValueError("overlap matrix is not positive definite") from exc
    return float(np.prod(np.diag(factor).real ** 2))


class CorrelationKernel:
    """Reproducing kernel of the orbital span under the overlap metric.

    K(x, y) = sum_ab phi_a(x) (M^{-1})_{ab} phi_b*(y); it reproduces
    itself under the set's quadrature and integrates on the diagonal to
    the orbital count.  The overlap factorization is computed once.
    """

    def __init__(self, orbitals: OrbitalSet,
                 overlap: OverlapMatrix | None = None):
        if overlap is None:
            overlap = overlap_matrix(orbitals)
        self.orbitals = orbitals
        self.overlap = overlap
        self._factor = cho_factor(overlap.entries, lower=True)

    @property
    def n(self) -> int:
        return self.orbitals.n

    def evaluate(self, x_points, y_points) -> np.ndarray:
        """Kernel values on a grid of point pairs, shape (mx, my)."""
        fx = self.orbitals.values(x_points)
        fy = self.orbitals.values(y_points)
        return fx @ cho_solve(self._factor, fy.conj().T)

    def __call__(self, x, y) -> complex | float:
        value = self.evaluate(x, y)[0, 0]
        return complex(value) if np.iscomplexobj(value) else float(value)

    def diagonal(self, points) -> np.ndarray:
        """K(x, x) for each point, without the full cross matrix."""
        f = self.orbitals.values(points)
        solved = cho_solve(self._factor, f.conj().T)
        return np.einsum("mn,nm->m", f.conj(), solved).real


def make_correlation_kernel(orbitals: OrbitalSet,
                            overlap: OverlapMatrix | None = None
                            ) -> CorrelationKernel:
    return CorrelationKernel(orbitals, overlap)


def m_particle_density(kernel: CorrelationKernel, points) -> float:
    """Joint density of finding particles at the m given points.

    The m x m determinant of the correlation kernel; the convention here
    integrates over all m arguments to n!/(n-m)!.  For m beyond the
    orbital count the antisymmetrized product degenerates and the density
    is identically zero, returned as an exact 0.0.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != 3:
        raise ValueError("points must be given as an (m, 3) array")
    if len(pts) > kernel.n:
        return 0.0
    gram = kernel.evaluate(pts, pts)
    return float(np.linalg.det(gram).real)


@dataclass(frozen=True)
class KeyEstimateRow:
    """One point of the deviation-norm scan."""

    ratio: float
    scattering_length: float
    deviation_norm: float


def key_estimate_scan(base: OrbitalSet, centers, separation: float,
                      ratios: Sequence[float], cutoff: float
                      ) -> list[KeyEstimateRow]:
    """Scan ||I - M(Y)|| over the separation-to-scattering-length ratio.

    The geometry stays fixed: centers (pairwise at least separation
    apart), box, base orbitals, and the pair cutoff.  Each ratio sets a
    hard-core radius separation/ratio, rebuilds the zero-energy pair
    function at the given cutoff, dresses the base orbitals, and measures
    the spectral norm of I minus their overlap matrix.  The norm is
    driven by the deviation mass of the pair function from 1 around each
    center, which shrinks with the core radius, so the scanned norms
    decrease as the ratio grows.
    """
    centers = np.asarray(centers, dtype=float).reshape(-1, 3)
    if separation <= 0:
        raise ValueError("separation floor must be positive")
    if cutoff <= 0:
        raise ValueError("pair cutoff must be positive")
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            d = float(np.linalg.norm(centers[i] - centers[j]))
            if d < separation:
                raise ValueError(
                    f"centers {i} and {j} are {d:.4g} apart, closer than "
                    f"the separation floor {separation}")
    rows = []
    identity = np.eye(base.n)
    for ratio in ratios:
        if ratio <= 0:
            raise ValueError(f"ratios must be positive, got {ratio}")
        core = separation / float(ratio)
        if core >= cutoff:
            raise ValueError(
                f"ratio {ratio} puts the core radius {core:.4g} at or "
                f"beyond the pair cutoff {cutoff}")
        solution = solve_zero_energy(hard_sphere(core),
                                     r_max=max(2.0 * cutoff, 8.0 * core, 2.0))
        pair = make_pair_function(solution, cutoff)
        dressed = dressed_orbitals(base, pair, centers)
        entries = overlap_matrix(dressed).entries
        deviation = float(np.linalg.norm(identity - entries, 2))
        rows.append(KeyEstimateRow(ratio=float(ratio),
                                   scattering_length=core,
                                   deviation_norm=deviation))
    return rows
