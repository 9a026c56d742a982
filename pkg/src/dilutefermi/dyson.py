"""Soft-potential replacement and certified operator lower bounds.

The hard short-range pair potential can be traded for a normalized soft
shell U at the price of kinetic energy localized in a ball (radial form),
or of high-momentum kinetic energy only, in which case a momentum cutoff
chi(p) generates an error potential from the kernel of the complement.
This module builds those objects and certifies the resulting operator
inequalities numerically: a conforming finite-element discretization for
the radial form, and matrix-free spectral operators on a box grid for the
three-dimensional and multi-center forms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.fft
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .scattering import RadialPotential, solve_zero_energy

__all__ = [
    "SoftShellPotential",
    "MomentumCutoff",
    "ErrorPotential",
    "BoxGrid",
    "RadialGapReport",
    "GapReport",
    "MultiCenterOperator",
    "make_soft_shell",
    "gaussian_cutoff",
    "constant_cutoff",
    "custom_cutoff",
    "complement_kernel",
    "build_error_potential",
    "regularize_hard_core",
    "dyson_gap_radial",
    "generalized_dyson_gap",
    "multi_center_operator",
    "sum_lowest_eigenvalues",
    "separated_centers",
]


# ---------------------------------------------------------------------------
# soft shell


@dataclass(frozen=True)
class SoftShellPotential:
    """Constant radial bump on [inner, outer] normalized to integral 4 pi."""

    inner: float
    outer: float

    @property
    def amplitude(self) -> float:
        return 3.0 / (self.outer ** 3 - self.inner ** 3)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.where((r >= self.inner) & (r <= self.outer),
                        self.amplitude, 0.0)

    def integral(self) -> float:
        """The exact space integral, 4 pi by construction."""
        return 4.0 * math.pi


def make_soft_shell(inner: float, outer: float) -> SoftShellPotential:
    """Shell bump with int U = 4 pi; amplitude 3/(outer^3 - inner^3)."""
    if inner < 0:
        raise ValueError("inner radius must be nonnegative")
    if outer <= inner:
        raise ValueError(f"need outer > inner, got [{inner}, {outer}]")
    return SoftShellPotential(inner=float(inner), outer=float(outer))


# ---------------------------------------------------------------------------
# momentum cutoff and its kernels


@dataclass(frozen=True)
class MomentumCutoff:
    """Radial momentum profile chi(p) in [0, 1] splitting the kinetic energy.

    The complement 1 - chi must decay fast enough that its inverse transform
    h(x) = (2 pi)^{-3} int (1 - chi(p)) e^{ipx} d^3p  is bounded and
    integrable; analytic_kernel is that h when known in closed form.
    """

    kind: str
    scale: float
    profile: Callable[[np.ndarray], np.ndarray]
    analytic_kernel: Callable[[np.ndarray], np.ndarray] | None = None
    integrable_complement: bool = True

    def chi(self, p):
        return self.profile(np.asarray(p, dtype=float))

    def complement(self, p):
        return 1.0 - self.chi(p)


def gaussian_cutoff(scale: float) -> MomentumCutoff:
    """chi with Gaussian complement 1 - chi(p) = exp(-p^2 / (2 scale^2)).

    The kernel of the complement is then the Gaussian
    h(x) = scale^3 (2 pi)^{-3/2} exp(-scale^2 x^2 / 2).
    """
    if not scale > 0:
        raise ValueError(f"cutoff scale must be positive, got {scale}")
    kc = float(scale)

    def profile(p):
        return 1.0 - np.exp(-0.5 * (p / kc) ** 2)

    def kernel(r):
        r = np.asarray(r, dtype=float)
        return kc ** 3 / (2.0 * math.pi) ** 1.5 * np.exp(-0.5 * (kc * r) ** 2)

    return MomentumCutoff(kind="gaussian", scale=kc, profile=profile,
                          analytic_kernel=kernel)


def constant_cutoff(value: float) -> MomentumCutoff:
    """chi identically equal to value; complement integrable only at 1."""
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"chi values must lie in [0, 1], got {value}")
    val = float(value)
    if val == 1.0:
        return MomentumCutoff(kind="constant", scale=0.0,
                              profile=lambda p: np.ones_like(np.asarray(p, float)),
                              analytic_kernel=lambda r: np.zeros_like(
                                  np.asarray(r, float)))
    return MomentumCutoff(kind="constant", scale=0.0,
                          profile=lambda p: np.full_like(np.asarray(p, float), val),
                          integrable_complement=False)


def custom_cutoff(profile: Callable, scale: float) -> MomentumCutoff:
    """User-supplied radial chi(p); the complement kernel goes by quadrature."""
    if not scale > 0:
        raise ValueError(f"cutoff scale must be positive, got {scale}")
    return MomentumCutoff(kind="custom", scale=float(scale), profile=profile)


def complement_kernel(cutoff: MomentumCutoff, radii,
                      method: str = "auto") -> np.ndarray:
    """Kernel h of the complement 1 - chi sampled on the given radii.

    Convention: h(x) = (2 pi)^{-3} int (1 - chi(p)) e^{ip.x} d^3p, which for
    radial chi reduces to (2 pi^2)^{-1} int (1 - chi(p)) p^2 sinc(pr) dp.
    method "analytic" requires a closed form; "quadrature" forces numerics;
    "auto" prefers the closed form.
    """
    radii = np.asarray(radii, dtype=float)
    if method not in ("auto", "analytic", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if method in ("auto", "analytic") and cutoff.analytic_kernel is not None:
        return cutoff.analytic_kernel(radii)
    if method == "analytic":
        raise ValueError(f"no closed-form kernel for cutoff kind {cutoff.kind!r}")
    if not cutoff.integrable_complement:
        raise ValueError("complement of chi is not integrable; no kernel")
    # pick p_max where the complement has decayed to numerical noise
    p_max = _complement_support(cutoff)
    nodes, weights = np.polynomial.legendre.leggauss(400)
    p = 0.5 * p_max * (nodes + 1.0)
    w = 0.5 * p_max * weights
    comp = cutoff.complement(p)
    # sinc(pr) covers the removable singularity at r = 0
    pr = np.outer(radii, p)
    return (np.sinc(pr / math.pi) @ (comp * p ** 2 * w)) / (2.0 * math.pi ** 2)


def _complement_support(cutoff: MomentumCutoff, tol: float = 1e-13) -> float:
    scale = cutoff.scale if cutoff.scale > 0 else 1.0
    p = scale
    for _ in range(60):
        if cutoff.complement(np.array([p]))[0] < tol:
            return p
        p *= 1.3
    raise ValueError("complement of chi does not decay; kernel not integrable")


@dataclass(frozen=True)
class ErrorPotential:
    """Shift envelope and error potential of a cutoff at ball radius R.

    shift_envelope(r) bounds sup over |y| <= R of |h(x-y) - h(x)| from above
    (a 5% inflation keeps it an upper envelope, which is the conservative
    side for the certified inequality); error_potential is
    (2/pi^2) * envelope * int envelope.
    """

    cutoff: MomentumCutoff
    radius: float
    radii: np.ndarray
    shift_envelope: np.ndarray
    error_potential: np.ndarray
    envelope_integral: float

    def envelope_at(self, r):
        return np.interp(np.asarray(r, dtype=float), self.radii,
                         self.shift_envelope, right=0.0)

    def __call__(self, r):
        """Interpolated error potential, zero beyond the sampled range."""
        return np.interp(np.asarray(r, dtype=float), self.radii,
                         self.error_potential, right=0.0)


def build_error_potential(cutoff: MomentumCutoff, radius: float,
                          radii=None, inflation: float = 1.05) -> ErrorPotential:
    """Envelope of kernel shifts over a ball and the derived error potential.

    For radial h the sup over the ball |y| <= R at radius r is a sup over
    kernel arguments s in [|r - R|, r + R]; it is evaluated on a dense
    s-grid and inflated by the safety factor.
    """
    if radius < 0:
        raise ValueError("ball radius must be nonnegative")
    if radii is None:
        reach = 8.0 / cutoff.scale if cutoff.scale > 0 else 8.0
        radii = np.linspace(0.0, radius + reach, 2049)
    radii = np.asarray(radii, dtype=float)
    h = complement_kernel(cutoff, radii)
    if radius == 0.0 or not np.any(h):
        zeros = np.zeros_like(radii)
        return ErrorPotential(cutoff=cutoff, radius=float(radius), radii=radii,
                              shift_envelope=zeros, error_potential=zeros,
                              envelope_integral=0.0)

    n_window = 257
    envelope = np.empty_like(radii)
    h_at = (cutoff.analytic_kernel if cutoff.analytic_kernel is not None
            else lambda s: np.interp(s, radii, h, right=0.0))
    for i, r in enumerate(radii):
        s = np.linspace(abs(r - radius), r + radius, n_window)
        envelope[i] = np.max(np.abs(h_at(s) - h[i]))
    envelope *= inflation

    integral = 4.0 * math.pi * _simpson_nonuniform(envelope * radii ** 2, radii)
    return ErrorPotential(cutoff=cutoff, radius=float(radius), radii=radii,
                          shift_envelope=envelope,
                          error_potential=(2.0 / math.pi ** 2) * envelope * integral,
                          envelope_integral=integral)


def _simpson_nonuniform(y: np.ndarray, x: np.ndarray) -> float:
    # the grids used here are uniform; keep the trapezoid fallback honest
    dx = np.diff(x)
    if np.allclose(dx, dx[0], rtol=1e-12):
        n = len(x) - 1
        if n % 2 == 0:
            w = np.ones(n + 1)
            w[1:-1:2], w[2:-1:2] = 4.0, 2.0
            return float(dx[0] / 3.0 * np.dot(w, y))
    return float(np.trapezoid(y, x))


def regularize_hard_core(potential: RadialPotential,
                         height_factor: float = 1e4) -> RadialPotential:
    """Replace a hard core by a tall finite barrier of height factor/core^2.

    Grid operators cannot represent an infinite wall; the replacement has a
    slightly smaller scattering length of its own, which callers must use so
    the certified inequality stays self-consistent.
    """
    core = potential.hard_core
    if core == 0.0:
        return potential
    height = height_factor / core ** 2
    barrier = (0.0, core, lambda r, h=height: np.full_like(
        np.asarray(r, dtype=float), h))
    return RadialPotential(kind=f"{potential.kind}+barrier", hard_core=0.0,
                           pieces=(barrier,) + potential.pieces)


# ---------------------------------------------------------------------------
# radial certification by conforming finite elements


@dataclass(frozen=True)
class RadialGapReport:
    """Minimum eigenvalue per angular channel of the radial soft-shell form."""

    min_eigenvalues: np.ndarray  # indexed by l = 0..l_max
    tol: float
    scattering_length: float
    n_elements: int
    radius: float

    @property
    def certified(self) -> bool:
        return bool(np.all(self.min_eigenvalues >= -self.tol))


def dyson_gap_radial(potential: RadialPotential, shell: SoftShellPotential,
                     l_max: int = 4, n_elements: int = 2000,
                     scattering_length: float | None = None,
                     tol: float = 1e-8) -> RadialGapReport:
    """Certify the soft-shell replacement channel by channel.

    For each angular momentum l the quadratic form
        int_0^R u'^2 + l(l+1) u^2/r^2 dr - u(R)^2/R
            + (1/2) int v u^2 - a int U u^2
    (the exact radial reduction of the ball form, natural boundary at R)
    is assembled with piecewise-linear elements aligned to every potential
    and shell breakpoint, with closed-form element integrals.  The element
    space is conforming, so each reported minimum is an upper bound for the
    continuum minimum; certification asserts all minima >= -tol.
    """
    outer = shell.outer
    support = potential.support
    if shell.inner < support - 1e-12:
        raise ValueError(
            f"shell must start at or beyond the potential range: "
            f"inner = {shell.inner} < range = {support}")
    short = min(support if support > 0 else outer,
                shell.outer - shell.inner)
    if n_elements < 8 * outer / short:
        raise ValueError(
            f"grid too coarse: {n_elements} elements cannot resolve the "
            f"shortest length {short:.3g} over [0, {outer}]; "
            f"need at least {math.ceil(8 * outer / short)}")
    if scattering_length is None:
        scattering_length = solve_zero_energy(potential).scattering_length

    nodes = _aligned_nodes(potential, shell, outer, n_elements)
    mins = np.array([
        _radial_channel_minimum(nodes, potential, shell, scattering_length, ell)
        for ell in range(l_max + 1)])
    return RadialGapReport(min_eigenvalues=mins, tol=tol,
                           scattering_length=scattering_length,
                           n_elements=len(nodes) - 1, radius=outer)


def _aligned_nodes(potential, shell, outer, n_elements) -> np.ndarray:
    breaks = {0.0, outer, shell.inner, shell.outer}
    if potential.hard_core > 0:
        breaks.add(potential.hard_core)
    for lo, hi, _ in potential.pieces:
        breaks.update((lo, hi))
    breaks = sorted(b for b in breaks if 0.0 <= b <= outer)
    h_target = outer / n_elements
    nodes = [0.0]
    for lo, hi in zip(breaks, breaks[1:]):
        n = max(1, round((hi - lo) / h_target))
        nodes.extend(np.linspace(lo, hi, n + 1)[1:])
    return np.asarray(nodes)


def _hat_coeffs(r0: float, r1: float):
    """Each hat on [r0, r1] as alpha + beta r: (left hat, right hat)."""
    h = r1 - r0
    return ((r1 / h, -1.0 / h), (-r0 / h, 1.0 / h))


def _int_linlin(c1, c2, r0, r1, moment: int) -> float:
    """Exact int (a1 + b1 r)(a2 + b2 r) r^moment dr over [r0, r1].

    moment 0 gives the mass/potential integrals, moment -2 the centrifugal
    ones (closed form with a logarithm; the r0 = 0 case only ever appears
    with both constant coefficients zero, where the integrand is constant).
    """
    (a1, b1), (a2, b2) = c1, c2
    if moment == 0:
        p0 = a1 * a2
        p1 = a1 * b2 + a2 * b1
        p2 = b1 * b2
        return (p0 * (r1 - r0) + p1 * (r1 ** 2 - r0 ** 2) / 2.0
                + p2 * (r1 ** 3 - r0 ** 3) / 3.0)
    if moment == -2:
        aa = a1 * a2
        ab = a1 * b2 + a2 * b1
        bb = b1 * b2
        if r0 == 0.0:
            if abs(aa) > 1e-300 or abs(ab) > 1e-300:
                raise ValueError("singular centrifugal integral at the origin")
            return bb * (r1 - r0)
        return (aa * (1.0 / r0 - 1.0 / r1) + ab * math.log(r1 / r0)
                + bb * (r1 - r0))
    raise ValueError(f"unsupported moment {moment}")


def _radial_channel_minimum(nodes, potential, shell, a, ell) -> float:
    n_nodes = len(nodes)
    # essential conditions: u(0) = 0, and u = 0 at and inside a hard core
    # (the wall forces the boundary value, not just the interior, to vanish)
    core = potential.hard_core
    active = np.flatnonzero(nodes > core)
    index = -np.ones(n_nodes, dtype=int)
    index[active] = np.arange(len(active))
    dim = len(active)
    rows, cols, k_vals, m_vals = [], [], [], []
    gauss_x, gauss_w = np.polynomial.legendre.leggauss(3)

    for e in range(n_nodes - 1):
        r0, r1 = nodes[e], nodes[e + 1]
        if r1 <= core + 1e-15:
            continue
        h = r1 - r0
        coeffs = _hat_coeffs(r0, r1)
        v_piece = _piece_on(potential, r0, r1)
        u_amp = shell.amplitude if (r0 >= shell.inner - 1e-12
                                    and r1 <= shell.outer + 1e-12) else 0.0
        mid = 0.5 * (r0 + r1)
        gp = mid + 0.5 * h * gauss_x
        gw = 0.5 * h * gauss_w
        v_gp = v_piece(gp) if v_piece is not None else None
        for li, ci in ((0, coeffs[0]), (1, coeffs[1])):
            i = e + li
            if index[i] < 0:
                continue
            for lj, cj in ((0, coeffs[0]), (1, coeffs[1])):
                j = e + lj
                if index[j] < 0:
                    continue
                stiff = (1.0 if li == lj else -1.0) / h
                if ell > 0:
                    stiff += ell * (ell + 1) * _int_linlin(ci, cj, r0, r1, -2)
                mass = _int_linlin(ci, cj, r0, r1, 0)
                pot = 0.0
                if v_gp is not None:
                    hats_i = ci[0] + ci[1] * gp
                    hats_j = cj[0] + cj[1] * gp
                    pot += 0.5 * float(np.dot(gw, v_gp * hats_i * hats_j))
                if u_amp:
                    pot -= a * u_amp * mass
                rows.append(index[i])
                cols.append(index[j])
                k_vals.append(stiff + pot)
                m_vals.append(mass)

    k_mat = sp.coo_matrix((k_vals, (rows, cols)), shape=(dim, dim)).tocsc()
    m_mat = sp.coo_matrix((m_vals, (rows, cols)), shape=(dim, dim)).tocsc()
    # natural boundary term of the radial reduction, -u(R)^2 / R
    last = index[n_nodes - 1]
    k_mat = k_mat.tolil()
    k_mat[last, last] -= 1.0 / nodes[-1]
    k_mat = k_mat.tocsc()
    return _smallest_generalized(k_mat, m_mat)


def _piece_on(potential, r0, r1):
    for lo, hi, func in potential.pieces:
        if lo <= r0 + 1e-15 and r1 <= hi + 1e-15:
            return func
    return None


def _smallest_generalized(k_mat, m_mat, k: int = 1) -> float:
    dim = k_mat.shape[0]
    try:
        vals = eigsh(k_mat, k=k, M=m_mat, sigma=-1.0, which="LM",
                     return_eigenvectors=False)
        return float(np.min(vals))
    except (ArpackNoConvergence, RuntimeError):
        from scipy.linalg import eigh
        vals = eigh(k_mat.toarray(), m_mat.toarray(), eigvals_only=True,
                    subset_by_index=(0, k - 1))
        return float(vals[0])

# ---------------------------------------------------------------------------
# box grids with spectral transforms


@dataclass(frozen=True)
class BoxGrid:
    """Cubic grid of side L with periodic or Dirichlet spectral transforms.

    Periodic: points x = i L/M, plane-wave modes k = 2 pi n / L.
    Dirichlet: M interior points x = (i+1) L/(M+1), sine modes k = pi n / L
    (n = 1..M); the sine transform is orthogonal and involutive, so the
    spectral Laplacian has the exact continuum sine eigenvalues.
    """

    side: float
    points: int
    boundary: str = "periodic"

    def __post_init__(self):
        if self.points < 8:
            raise ValueError(f"need at least 8 points per axis, got {self.points}")
        if self.boundary not in ("periodic", "dirichlet"):
            raise ValueError(f"boundary must be periodic or dirichlet, "
                             f"got {self.boundary!r}")
        if not self.side > 0:
            raise ValueError("box side must be positive")

    @property
    def spacing(self) -> float:
        if self.boundary == "periodic":
            return self.side / self.points
        return self.side / (self.points + 1)

    @property
    def size(self) -> int:
        return self.points ** 3

    def axis_coordinates(self) -> np.ndarray:
        if self.boundary == "periodic":
            return self.spacing * np.arange(self.points)
        return self.spacing * (np.arange(self.points) + 1.0)

    def axis_wavenumbers(self) -> np.ndarray:
        if self.boundary == "periodic":
            return 2.0 * math.pi * np.fft.fftfreq(self.points, d=self.spacing)
        return math.pi * np.arange(1, self.points + 1) / self.side

    def wavenumber_meshes(self):
        k = self.axis_wavenumbers()
        return (k[:, None, None], k[None, :, None], k[None, None, :])

    def to_spectral(self, field: np.ndarray) -> np.ndarray:
        if self.boundary == "periodic":
            return np.fft.fftn(field)
        return scipy.fft.dstn(field, type=1, norm="ortho")

    def from_spectral(self, coef: np.ndarray) -> np.ndarray:
        if self.boundary == "periodic":
            return np.fft.ifftn(coef)
        return scipy.fft.dstn(coef, type=1, norm="ortho")

    def apply_symbol(self, field: np.ndarray, symbol: np.ndarray) -> np.ndarray:
        out = self.from_spectral(symbol * self.to_spectral(field))
        return out.real if self.boundary == "periodic" else out

    def distance_field(self, center, offset=(0.0, 0.0, 0.0)) -> np.ndarray:
        """Distance from each grid point (shifted by offset) to center,
        with the minimum image convention on a periodic grid."""
        x = self.axis_coordinates()
        parts = []
        for axis in range(3):
            d = np.abs(x + offset[axis] - center[axis])
            if self.boundary == "periodic":
                d = np.minimum(d, self.side - d)
            shape = [1, 1, 1]
            shape[axis] = self.points
            parts.append(d.reshape(shape) ** 2)
        return np.sqrt(parts[0] + parts[1] + parts[2])

    def cell_average(self, radial_func, center, subsamples: int = 3) -> np.ndarray:
        """Average a radial profile about center over each grid cell."""
        offsets = ((np.arange(subsamples) + 0.5) / subsamples - 0.5) * self.spacing
        total = np.zeros((self.points,) * 3)
        for ox in offsets:
            for oy in offsets:
                for oz in offsets:
                    total += radial_func(self.distance_field(center, (ox, oy, oz)))
        return total / subsamples ** 3

    def warn_if_underresolved(self, scales: dict[str, float]) -> list[str]:
        """Warn when any named length is not covered by 4 grid spacings."""
        flagged = []
        for name, scale in scales.items():
            if scale > 0 and self.spacing > scale / 4.0:
                flagged.append(name)
        if flagged:
            warnings.warn(
                f"grid spacing {self.spacing:.3g} exceeds a quarter of "
                f"{', '.join(flagged)}; results are under-resolved",
                stacklevel=3)
        return flagged


# ---------------------------------------------------------------------------
# generalized certification on a periodic box


@dataclass(frozen=True)
class GapReport:
    """Smallest eigenvalue of the certified operator with its evidence."""

    gap: float
    residual: float
    pointwise_floor: float
    tol: float
    eps: float
    scattering_length: float

    @property
    def certified_gap(self) -> float:
        """Ritz value minus residual norm, the conservative margin: some
        eigenvalue is guaranteed to lie above this, independent of how far
        the iteration converged."""
        return self.gap - self.residual

    @property
    def certified(self) -> bool:
        """Gap at or above -tol, or a nonnegative potential floor.

        The floor route is rigorous on its own: the kinetic part is a sum
        of squares, so a pointwise nonnegative potential field makes the
        whole operator nonnegative without any eigensolve.  The gap route
        compares the returned extremal eigenvalue against -tol; its
        convergence quality is reported separately as the residual.
        """
        return self.gap >= -self.tol or self.pointwise_floor >= -self.tol


def generalized_dyson_gap(potential: RadialPotential,
                          shell: SoftShellPotential,
                          cutoff: MomentumCutoff,
                          eps: float,
                          grid: BoxGrid,
                          tol_factor: float = 1e-6,
                          subsamples: int = 3) -> GapReport:
    """Certify the cutoff soft-shell replacement on a periodic box.

    Assembles A = -grad chi theta chi grad + v/2 - (1-eps) a U + (a/eps) w
    matrix-free: the kinetic part via spectral derivatives (a sum of squares,
    hence positive semidefinite on the grid by construction) and the
    potentials as cell-averaged radial fields about the box center.  Hard
    cores are regularized to tall barriers with their own scattering length.
    Returns the smallest eigenvalue with an explicit residual; the report
    also carries the pointwise floor of the potential field, which alone
    certifies nonnegativity whenever it is >= 0.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if grid.boundary != "periodic":
        raise ValueError("the certified box is periodic; use a periodic grid")
    if grid.side < 2.0 * shell.outer:
        raise ValueError("box side must be at least twice the shell radius")

    reg = regularize_hard_core(potential)
    a = solve_zero_energy(reg).scattering_length
    if shell.inner < reg.support - 1e-12:
        raise ValueError("shell must start at or beyond the potential range")
    error_pot = build_error_potential(cutoff, shell.outer)

    grid.warn_if_underresolved({
        "potential range": reg.support,
        "inverse cutoff scale": 1.0 / cutoff.scale if cutoff.scale > 0 else 0.0,
        "shell width": shell.outer - shell.inner,
    })

    center = np.full(3, 0.5 * grid.side)
    half_v = 0.5 * grid.cell_average(reg, center, subsamples)
    u_field = grid.cell_average(shell, center, subsamples)
    w_field = grid.cell_average(error_pot, center, subsamples)
    pot_field = half_v - (1.0 - eps) * a * u_field + (a / eps) * w_field
    theta = (grid.distance_field(center) <= shell.outer).astype(float)

    kx, ky, kz = grid.wavenumber_meshes()
    k_sq = kx ** 2 + ky ** 2 + kz ** 2
    chi_k = cutoff.chi(np.sqrt(k_sq))
    op = _CutoffKineticOperator(grid, chi_k, theta, pot_field)

    tol = tol_factor * (2.0 * math.pi * grid.points / grid.side) ** 2
    gap, residual = _preconditioned_lowest(op, chi_k ** 2 * k_sq)
    return GapReport(gap=gap, residual=residual,
                     pointwise_floor=float(pot_field.min()),
                     tol=tol, eps=eps, scattering_length=a)


class _CutoffKineticOperator(LinearOperator):
    """Matrix-free A = sum_j D_j^T theta D_j + diag(pot), D_j = i k_j chi."""

    def __init__(self, grid: BoxGrid, chi_k, theta, pot_field):
        self.grid = grid
        self.theta = theta
        self.pot_field = pot_field
        self.deriv_symbols = tuple(1j * k_j * chi_k
                                   for k_j in grid.wavenumber_meshes())
        n = grid.size
        super().__init__(dtype=np.float64, shape=(n, n))

    def _matvec(self, x):
        m = self.grid.points
        psi = np.asarray(x).reshape((m, m, m))
        psi_hat = np.fft.fftn(psi)
        acc = np.zeros_like(psi_hat)
        for d_sym in self.deriv_symbols:
            d_j = np.fft.ifftn(d_sym * psi_hat).real
            acc += d_sym * np.fft.fftn(self.theta * d_j)
        kinetic = -np.fft.ifftn(acc).real
        return (kinetic + self.pot_field * psi).ravel()


def _preconditioned_lowest(op: _CutoffKineticOperator, kinetic_symbol,
                           block: int = 5, maxiter: int = 400,
                           seed: int = 11):
    """Lowest eigenvalue of the cutoff operator with an explicit residual.

    The kinetic symbol chi(k)^2 k^2 is extremely flat at low momentum (that
    is the point of the cutoff), which starves unpreconditioned Lanczos
    iterations; a block method preconditioned by the inverse of the kinetic
    symbol plus a unit shift converges instead.  The returned residual is
    recomputed from the operator, so the certificate never relies on the
    solver's own convergence claim.
    """
    from scipy.sparse.linalg import lobpcg

    m = op.grid.points
    inv_symbol = 1.0 / (kinetic_symbol + 1.0)

    def precondition(x):
        fields = np.asarray(x).reshape((m, m, m, -1))
        out = np.empty_like(fields)
        for c in range(fields.shape[-1]):
            out[..., c] = np.fft.ifftn(
                inv_symbol * np.fft.fftn(fields[..., c])).real
        return out.reshape(x.shape)

    n = op.shape[0]
    rng = np.random.default_rng(seed)
    start = rng.normal(size=(n, block))
    start[:, 0] = 1.0
    prec = LinearOperator(shape=(n, n), matvec=precondition,
                          rmatvec=precondition, dtype=np.float64)
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="Exited")
        vals, vecs = lobpcg(op, start, M=prec, tol=1e-8,
                            maxiter=maxiter, largest=False)
    i = int(np.argmin(vals))
    v = vecs[:, i]
    residual = float(np.linalg.norm(op.matvec(v) - vals[i] * v)
                     / np.linalg.norm(v))
    return float(vals[i]), residual


# ---------------------------------------------------------------------------
# multi-center one-body operator and eigenvalue sums


class MultiCenterOperator(LinearOperator):
    """One-body handle -grad (1 - chi(p)) grad + scattering bumps at centers.

    The potential is the sum over retained centers y of
    (1 - eps) a U(x - y) - (a / eps) w(x - y); a center is retained only if
    its nearest neighbor sits at least 2 radius away, and both members of
    any closer pair are dropped (excluded_count reports how many).  The
    kinetic symbol k^2 (1 - chi(k)) acts through the grid's spectral
    transforms, so the handle works on periodic and Dirichlet boxes alike.
    """

    def __init__(self, grid: BoxGrid, symbol: np.ndarray,
                 pot_field: np.ndarray, centers_used: np.ndarray,
                 excluded_count: int, scattering_length: float, eps: float):
        self.grid = grid
        self.symbol = symbol
        self.pot_field = pot_field
        self.centers_used = centers_used
        self.excluded_count = excluded_count
        self.scattering_length = scattering_length
        self.eps = eps
        super().__init__(dtype=np.float64, shape=(grid.size, grid.size))

    def _matvec(self, x):
        m = self.grid.points
        psi = np.asarray(x).reshape((m, m, m))
        out = self.grid.apply_symbol(psi, self.symbol)
        return (out + self.pot_field * psi).ravel()

    def dense(self, limit: int = 4500) -> np.ndarray:
        """Materialize the matrix column by column (small grids only)."""
        dim = self.shape[0]
        if dim > limit:
            raise ValueError(f"grid dimension {dim} too large to materialize "
                             f"(limit {limit})")
        cols = np.empty((dim, dim))
        e = np.zeros(dim)
        for j in range(dim):
            e[j] = 1.0
            cols[:, j] = self._matvec(e)
            e[j] = 0.0
        return 0.5 * (cols + cols.T)


def multi_center_operator(potential: RadialPotential,
                          shell: SoftShellPotential,
                          cutoff: MomentumCutoff,
                          eps: float,
                          centers,
                          grid: BoxGrid,
                          radius: float | None = None,
                          error_potential: ErrorPotential | None | str = "auto",
                          subsamples: int = 3) -> MultiCenterOperator:
    """Assemble the one-body lower-bound operator for scatterers at centers.

    radius defaults to the shell's outer edge and sets both the exclusion
    distance (2 radius) and the ball over which the cutoff's shift-error
    potential is built.  Pass error_potential=None to omit that term when
    the cutoff complement has no integrable kernel (the handle then loses
    its certified error budget and is a plain cross-check operator).
    Distances between centers honor the grid's boundary: minimum image on
    a periodic box, plain Euclidean otherwise.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    radius = shell.outer if radius is None else float(radius)
    if radius <= 0:
        raise ValueError("exclusion radius must be positive")
    centers = np.asarray(centers, dtype=float).reshape(-1, 3)

    reg = regularize_hard_core(potential)
    a = solve_zero_energy(reg).scattering_length

    if isinstance(error_potential, str):
        if error_potential != "auto":
            raise ValueError(f"unknown error_potential mode {error_potential!r}")
        if not cutoff.integrable_complement:
            raise ValueError(
                "cutoff complement has no integrable kernel; pass "
                "error_potential=None to omit the shift-error term")
        error_potential = build_error_potential(cutoff, radius)

    keep = _separation_mask(centers, 2.0 * radius, grid)
    kept = centers[keep]
    excluded = int(len(centers) - len(kept))

    pot_field = np.zeros((grid.points,) * 3)
    for y in kept:
        pot_field += (1.0 - eps) * a * grid.cell_average(shell, y, subsamples)
        if error_potential is not None:
            pot_field -= (a / eps) * grid.cell_average(error_potential, y,
                                                       subsamples)

    kx, ky, kz = grid.wavenumber_meshes()
    k_sq = kx ** 2 + ky ** 2 + kz ** 2
    symbol = k_sq * cutoff.complement(np.sqrt(k_sq))
    return MultiCenterOperator(grid=grid, symbol=symbol, pot_field=pot_field,
                               centers_used=kept, excluded_count=excluded,
                               scattering_length=a, eps=eps)


def _separation_mask(centers: np.ndarray, min_separation: float,
                     grid: BoxGrid) -> np.ndarray:
    keep = np.ones(len(centers), dtype=bool)
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            d = centers[i] - centers[j]
            if grid.boundary == "periodic":
                d -= grid.side * np.round(d / grid.side)
            if float(np.linalg.norm(d)) < min_separation:
                keep[i] = keep[j] = False
    return keep


def sum_lowest_eigenvalues(op: LinearOperator, count: int,
                           maxiter: int | None = None) -> float:
    """Sum of the count lowest eigenvalues of a symmetric operator handle.

    Small grids are materialized and solved densely; larger ones go through
    the iterative extremal-eigenvalue method.  count must stay a small
    fraction of the grid dimension for the Krylov subspace to make sense.
    """
    dim = op.shape[0]
    if count < 1:
        raise ValueError(f"need at least one eigenvalue, got count = {count}")
    if count > dim // 8:
        raise ValueError(f"count = {count} is too large a fraction of the "
                         f"grid dimension {dim}; refine the grid")
    if dim <= 4500 and hasattr(op, "dense"):
        from scipy.linalg import eigh
        vals = eigh(op.dense(), eigvals_only=True,
                    subset_by_index=(0, count - 1))
        return float(np.sum(vals))
    try:
        vals = eigsh(op, k=count, which="SA",
                     ncv=min(dim, max(40, 4 * count)),
                     maxiter=maxiter, return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        raise RuntimeError(
            f"eigenvalue-sum iteration did not converge: "
            f"{len(exc.eigenvalues)} of {count} eigenvalues found") from exc
    return float(np.sum(np.sort(vals)[:count]))


def separated_centers(count: int, min_separation: float, side: float,
                      seed: int = 0, periodic: bool = True) -> np.ndarray:
    """Draw center positions in the box with pairwise separation enforced.

    Rejection sampling from the seeded generator; raises when the requested
    packing cannot be reached in a reasonable number of draws.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    rng = np.random.default_rng(seed)
    centers: list[np.ndarray] = []
    tries = 0
    limit = 10_000 * max(count, 1)
    while len(centers) < count:
        if tries >= limit:
            raise RuntimeError(
                f"placed only {len(centers)} of {count} centers at "
                f"separation {min_separation} in a box of side {side}; "
                f"the packing is too dense")
        tries += 1
        y = rng.uniform(0.0, side, size=3)
        ok = True
        for z in centers:
            d = y - z
            if periodic:
                d -= side * np.round(d / side)
            if float(np.linalg.norm(d)) < min_separation:
                ok = False
                break
        if ok:
            centers.append(y)
    return np.array(centers).reshape(count, 3)
