"""Zero-energy radial scattering and the pair profiles built on top of it.

Units are hbar = 2m = 1 throughout, so the relative two-body problem at zero
energy reads -u'' + (1/2) v u = 0 for u(r) = r * phi(r), and the scattering
length a is read off the affine tail u ~ c (r - a).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "PotentialFormatError",
    "RadialPotential",
    "ScatteringSolution",
    "PairFunction",
    "JastrowFactor",
    "square_barrier",
    "shell_barrier",
    "hard_sphere",
    "sampled_potential",
    "free_potential",
    "load_potential",
    "solve_zero_energy",
    "check_energy_identity",
    "born_scattering_length",
    "make_pair_function",
    "make_jastrow",
]


class PotentialFormatError(ValueError):
    """Raised by load_potential with the full list of config problems."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


# A piece is (lo, hi, func) with func smooth on the closed interval [lo, hi].
Piece = tuple[float, float, Callable[[np.ndarray], np.ndarray]]


def _as_float(r) -> np.ndarray:
    """Promote to a floating array, keeping extended precision if given."""
    r = np.asarray(r)
    return r if r.dtype.kind == "f" else r.astype(float)


@dataclass(frozen=True)
class RadialPotential:
    """Nonnegative radial pair potential of finite range.

    The profile is a tuple of smooth pieces covering (hard_core, support);
    the potential vanishes beyond the last piece.  hard_core > 0 means an
    infinite wall at and below that radius.
    """

    kind: str
    hard_core: float
    pieces: tuple[Piece, ...]

    @property
    def support(self) -> float:
        """Outer edge of the potential (the range R0); hard core counts."""
        if self.pieces:
            return self.pieces[-1][1]
        return self.hard_core

    def breakpoints(self) -> list[float]:
        """Radii where the profile may lose smoothness, hard core included."""
        pts = [self.hard_core] if self.hard_core > 0 else [0.0]
        for lo, hi, _ in self.pieces:
            if not pts or lo > pts[-1]:
                pts.append(lo)
            pts.append(hi)
        return pts

    def __call__(self, r):
        """Pointwise value; piece boundaries resolve to the left piece."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for lo, hi, func in self.pieces:
            mask = (r > lo) & (r <= hi) if lo > 0 else (r >= lo) & (r <= hi)
            if np.any(mask):
                out[mask] = func(r[mask])
        if self.hard_core > 0:
            out = np.where(r < self.hard_core, np.inf, out)
        return out


def _constant(value: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda r: np.full_like(np.asarray(r, dtype=float), value)


def square_barrier(height: float, radius: float, hard_core: float = 0.0) -> RadialPotential:
    """Constant barrier of the given height on (hard_core, radius]."""
    _check_geometry(height, hard_core, radius)
    return RadialPotential(
        kind="square",
        hard_core=hard_core,
        pieces=((hard_core, float(radius), _constant(float(height))),),
    )


def shell_barrier(height: float, inner: float, outer: float,
                  hard_core: float = 0.0) -> RadialPotential:
    """Constant barrier supported on the shell [inner, outer]."""
    _check_geometry(height, hard_core, outer)
    if not inner < outer:
        raise ValueError(f"shell needs inner < outer, got [{inner}, {outer}]")
    if inner < hard_core:
        raise ValueError("shell reaches inside the hard core")
    return RadialPotential(
        kind="shell",
        hard_core=hard_core,
        pieces=((float(inner), float(outer), _constant(float(height))),),
    )


def hard_sphere(radius: float) -> RadialPotential:
    """Pure hard core: infinite below radius, zero beyond."""
    if radius <= 0:
        raise ValueError(f"hard sphere radius must be positive, got {radius}")
    return RadialPotential(kind="hard_core", hard_core=float(radius), pieces=())


def free_potential() -> RadialPotential:
    """The zero potential (used for free-gas reference runs)."""
    return RadialPotential(kind="none", hard_core=0.0, pieces=())


def sampled_potential(r: Sequence[float], v: Sequence[float],
                      hard_core: float = 0.0) -> RadialPotential:
    """Piecewise-linear profile through (r, v) samples, zero beyond the last.

    Sample radii must be strictly increasing and start at or beyond any hard
    core; values must be nonnegative.
    """
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    if r.ndim != 1 or r.shape != v.shape or len(r) < 2:
        raise ValueError("need matching 1d arrays with at least two samples")
    if np.any(np.diff(r) <= 0):
        raise ValueError("sample radii must be strictly increasing")
    if not np.all(np.isfinite(r)) or not np.all(np.isfinite(v)):
        raise ValueError("potential samples must be finite")
    bad = np.flatnonzero(v < 0)
    if bad.size:
        raise ValueError(f"negative potential value {v[bad[0]]} at r = {r[bad[0]]}")
    if hard_core < 0:
        raise ValueError("hard core radius must be nonnegative")
    if r[0] < hard_core:
        raise ValueError("samples reach inside the hard core")
    pieces = []
    for i in range(len(r) - 1):
        lo, hi = float(r[i]), float(r[i + 1])
        va, vb = float(v[i]), float(v[i + 1])
        slope = (vb - va) / (hi - lo)
        pieces.append((lo, hi, (lambda x, lo=lo, va=va, slope=slope:
                                va + slope * (np.asarray(x, dtype=float) - lo))))
    return RadialPotential(kind="samples", hard_core=float(hard_core),
                           pieces=tuple(pieces))


def _check_geometry(height: float, hard_core: float, outer: float) -> None:
    if height < 0:
        raise ValueError(f"negative potential value {height}")
    if hard_core < 0:
        raise ValueError("hard core radius must be nonnegative")
    if outer <= hard_core:
        raise ValueError(f"range {outer} must exceed the hard core {hard_core}")


def load_potential(table: dict) -> RadialPotential:
    """Build a potential from a parsed config section.

    Accepted fields: kind ("square" | "shell" | "samples" | "hard_core" |
    "none"), hard_core_radius, and the kind's parameters (height/radius
    for square, height/inner_radius/outer_radius for shell, r/v tables
    for samples; hard_core takes its core size from radius or
    hard_core_radius).  All problems are collected before raising.
    """
    errors: list[str] = []
    known = {"kind", "hard_core_radius", "height", "radius",
             "inner_radius", "outer_radius", "r", "v"}
    for key in table:
        if key not in known:
            errors.append(f"potential: unknown field '{key}'")
    kind = table.get("kind")
    core = table.get("hard_core_radius", 0.0)
    if not isinstance(core, (int, float)) or core < 0:
        errors.append(f"potential: hard_core_radius must be a nonnegative number, got {core!r}")
        core = 0.0
    if kind not in ("square", "shell", "samples", "hard_core", "none"):
        errors.append(f"potential: kind must be square|shell|samples|hard_core|none, got {kind!r}")
        raise PotentialFormatError(errors)
    if kind == "hard_core":
        if "hard_core_radius" not in table:
            val = table.get("radius")
            if not isinstance(val, (int, float)) or val <= 0:
                errors.append("potential: kind hard_core needs a positive "
                              "radius or hard_core_radius")
                val = 1.0
            core = float(val)
        elif core <= 0:
            errors.append("potential: kind hard_core needs a positive "
                          "hard_core_radius")
        kind = "none"

    def need(name: str) -> float:
        val = table.get(name)
        if not isinstance(val, (int, float)):
            errors.append(f"potential: field '{name}' (number) required for kind {kind}")
            return 1.0
        return float(val)

    try:
        if kind == "square":
            pot = square_barrier(need("height"), need("radius"), hard_core=core)
        elif kind == "shell":
            pot = shell_barrier(need("height"), need("inner_radius"),
                                need("outer_radius"), hard_core=core)
        elif kind == "samples":
            r, v = table.get("r"), table.get("v")
            if not isinstance(r, list) or not isinstance(v, list):
                errors.append("potential: kind samples needs 'r' and 'v' arrays")
                raise PotentialFormatError(errors)
            pot = sampled_potential(r, v, hard_core=core)
        else:
            pot = hard_sphere(core) if core > 0 else free_potential()
    except PotentialFormatError:
        raise
    except ValueError as exc:
        errors.append(f"potential: {exc}")
        raise PotentialFormatError(errors) from None
    if errors:
        raise PotentialFormatError(errors)
    return pot


# ---------------------------------------------------------------------------
# zero-energy solve


@dataclass(frozen=True)
class ScatteringSolution:
    """Zero-energy radial solution u with u(core) = 0, u'(core) = 1.

    The tail is affine, u = slope * (r - scattering_length); phi = u/(slope r)
    is the profile normalized to 1 at infinity.
    """

    potential: RadialPotential
    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    segments: tuple[tuple[int, int, Callable | None], ...]
    slope: float
    scattering_length: float
    tail_rel_error: float
    r_max: float

    def phi(self, r):
        """Normalized scattering profile, phi -> 1 at infinity."""
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        a = self.scattering_length
        core = self.potential.hard_core
        inside = r <= core if core > 0 else np.zeros(r.shape, dtype=bool)
        tail = (~inside) & (r >= self.potential.support)
        mid = ~inside & ~tail
        out[inside] = 0.0
        rt = r[tail]
        out[tail] = 1.0 - np.divide(a, rt, out=np.zeros_like(rt), where=rt > 0)
        if np.any(mid):
            u, du = _hermite_eval(self.r, self.u, self.du, r[mid])
            # at the origin u vanishes linearly, so u/r -> u'(0)
            out[mid] = np.divide(u, r[mid], out=du, where=r[mid] > 0) / self.slope
        return out


def solve_zero_energy(potential: RadialPotential, r_max: float | None = None,
                      n_points: int = 10_000) -> ScatteringSolution:
    """Integrate -u'' + (1/2) v u = 0 outward and fit the affine tail.

    Fixed-step RK4 on a grid aligned to the potential's breakpoints, then a
    least-squares affine fit on the outer 20% of (support, r_max].  Raises if
    r_max does not clear the potential or n_points < 100; warns if the tail
    is not affine to 1e-8 (underresolved or r_max too small).
    """
    if n_points < 100:
        raise ValueError(f"n_points must be at least 100, got {n_points}")
    core = potential.hard_core
    support = potential.support
    if r_max is None:
        # enough room for an affine-tail window: the scattering length is at
        # most R0, estimated by the core radius or the Born integral
        if potential.pieces and core == 0.0:
            a_est = min(support, born_scattering_length(potential))
        elif potential.pieces:
            a_est = support
        else:
            a_est = core
        r_max = max(4.0 * support, 8.0 * a_est, 2.0)
    if r_max <= support:
        raise ValueError(f"r_max = {r_max} must exceed the potential range {support}")

    # breakpoint-aligned grid: one uniform run of steps per smooth piece,
    # free segments filling any gaps, and the tail out to r_max
    edges: list[tuple[float, float, Callable | None]] = []
    prev = core
    for lo, hi, func in potential.pieces:
        lo = max(lo, core)
        if lo > prev:
            edges.append((prev, lo, None))
        edges.append((lo, hi, func))
        prev = hi
    edges.append((prev, r_max, None))
    h_target = (r_max - core) / n_points

    rs = [np.array([core])]
    segments: list[tuple[int, int, Callable | None]] = []
    u0, du0 = 0.0, 1.0
    us, dus = [np.array([u0])], [np.array([du0])]
    idx = 0
    for lo, hi, func in edges:
        n_steps = max(2, math.ceil((hi - lo) / h_target))
        if n_steps % 2:
            n_steps += 1
        nodes = np.linspace(lo, hi, n_steps + 1)
        u_seg, du_seg = _rk4_segment(nodes, func, u0, du0)
        rs.append(nodes[1:])
        us.append(u_seg[1:])
        dus.append(du_seg[1:])
        segments.append((idx, idx + n_steps, func))
        idx += n_steps
        u0, du0 = float(u_seg[-1]), float(du_seg[-1])

    r = np.concatenate(rs)
    u = np.concatenate(us)
    du = np.concatenate(dus)

    # affine tail fit on the outer 20% of the potential-free region
    window = r >= support + 0.8 * (r_max - support)
    rw, uw = r[window], u[window]
    design = np.stack([rw, np.ones_like(rw)], axis=1)
    (alpha, beta), *_ = np.linalg.lstsq(design, uw, rcond=None)
    a = -beta / alpha
    resid = uw - (alpha * rw + beta)
    rel = float(np.linalg.norm(resid) / np.linalg.norm(uw))
    if rel > 1e-8:
        warnings.warn(
            f"tail fit residual {rel:.2e} exceeds 1e-8; "
            "increase r_max or n_points", stacklevel=2)
    if np.any(np.diff(u) < -1e-12 * np.max(np.abs(u))):
        warnings.warn("u is not nondecreasing although v >= 0; "
                      "the solve looks underresolved", stacklevel=2)
    return ScatteringSolution(
        potential=potential, r=r, u=u, du=du, segments=tuple(segments),
        slope=float(alpha), scattering_length=float(a),
        tail_rel_error=rel, r_max=float(r_max))


def _rk4_segment(nodes: np.ndarray, func: Callable | None,
                 u0: float, du0: float) -> tuple[np.ndarray, np.ndarray]:
    """RK4 for u'' = w(r) u across one smooth piece (w = v/2, None = free)."""
    n = len(nodes) - 1
    u = np.empty(n + 1)
    du = np.empty(n + 1)
    u[0], du[0] = u0, du0
    if func is None:
        # exact free propagation
        u[1:] = u0 + du0 * (nodes[1:] - nodes[0])
        du[1:] = du0
        return u, du
    w_nodes = 0.5 * np.asarray(func(nodes), dtype=float)
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    w_mids = 0.5 * np.asarray(func(mids), dtype=float)
    for i in range(n):
        h = nodes[i + 1] - nodes[i]
        wa, wm, wb = w_nodes[i], w_mids[i], w_nodes[i + 1]
        y, dy = u[i], du[i]
        k1u, k1d = dy, wa * y
        k2u, k2d = dy + 0.5 * h * k1d, wm * (y + 0.5 * h * k1u)
        k3u, k3d = dy + 0.5 * h * k2d, wm * (y + 0.5 * h * k2u)
        k4u, k4d = dy + h * k3d, wb * (y + h * k3u)
        u[i + 1] = y + h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
        du[i + 1] = dy + h / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d)
    return u, du


def _simpson(y: np.ndarray, x: np.ndarray) -> float:
    """Composite Simpson on a uniform grid with an even step count."""
    n = len(x) - 1
    h = (x[-1] - x[0]) / n
    weights = np.ones(n + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return float(h / 3.0 * np.dot(weights, y))


def _hermite_eval(r, u, du, query):
    """Cubic Hermite interpolation of (u, du) at query radii."""
    j = np.clip(np.searchsorted(r, query, side="right") - 1, 0, len(r) - 2)
    h = r[j + 1] - r[j]
    t = (query - r[j]) / h
    h00 = (1 + 2 * t) * (1 - t) ** 2
    h10 = t * (1 - t) ** 2
    h01 = t * t * (3 - 2 * t)
    h11 = t * t * (t - 1)
    uq = h00 * u[j] + h10 * h * du[j] + h01 * u[j + 1] + h11 * h * du[j + 1]
    d00 = 6 * t * (t - 1) / h
    d10 = (1 - t) * (1 - 3 * t)
    d01 = -d00
    d11 = t * (3 * t - 2)
    duq = d00 * u[j] + d10 * du[j] + d01 * u[j + 1] + d11 * du[j + 1]
    return uq, duq


# ---------------------------------------------------------------------------
# energy identity and Born integral


@dataclass(frozen=True)
class IdentityCheck:
    """Quadrature of int |grad phi|^2 + (1/2) v phi^2 against 4 pi a."""

    integral: float
    expected: float
    residual: float
    tail_correction: float


def check_energy_identity(solution: ScatteringSolution) -> IdentityCheck:
    """Evaluate int |grad phi|^2 + (1/2) v |phi|^2 = 4 pi a by quadrature.

    The grid covers [core, r_max]; beyond r_max the profile is affine and the
    remaining gradient mass is added in closed form, 4 pi a^2 / r_max.
    """
    r, u, du = solution.r, solution.u, solution.du
    a = solution.scattering_length
    kinetic = np.empty_like(r)
    nonzero = r > 0
    kinetic[nonzero] = (du[nonzero] - u[nonzero] / r[nonzero]) ** 2
    kinetic[~nonzero] = 0.0  # u ~ r near the origin, so the limit vanishes
    total = 0.0
    for i0, i1, func in solution.segments:
        integrand = kinetic[i0:i1 + 1].copy()
        if func is not None:
            w = 0.5 * np.asarray(func(r[i0:i1 + 1]), dtype=float)
            integrand += w * u[i0:i1 + 1] ** 2
        total += _simpson(integrand, r[i0:i1 + 1])
    total /= solution.slope ** 2
    tail = a * a / solution.r_max
    integral = 4.0 * math.pi * (total + tail)
    expected = 4.0 * math.pi * a
    return IdentityCheck(integral=integral, expected=expected,
                         residual=abs(integral - expected),
                         tail_correction=4.0 * math.pi * tail)


def born_scattering_length(potential: RadialPotential, n_sub: int = 512) -> float:
    """First-order (Born) value (8 pi)^{-1} int v = (1/2) int v(r) r^2 dr.

    Exact for the square, shell and sampled kinds (the integrand is a cubic
    per piece).  Raises for a hard core, whose integral is infinite.
    """
    if potential.hard_core > 0:
        raise ValueError("Born integral is infinite for a hard core")
    total = 0.0
    for lo, hi, func in potential.pieces:
        nodes = np.linspace(lo, hi, 2 * n_sub + 1)
        total += _simpson(np.asarray(func(nodes)) * nodes ** 2, nodes)
    return 0.5 * total


# ---------------------------------------------------------------------------
# pair factor and Jastrow ramp


@dataclass(frozen=True)
class PairFunction:
    """Pair factor f = phi/phi(b) below the cutoff b, 1 beyond.

    Continuous, C^1 except at b where f' jumps to zero.  Inside a hard core
    f vanishes (log_value returns -inf there).  pair_energy is the quadrature
    value of int |grad f|^2 + (1/2) v |f|^2, which for the scaled zero-energy
    profile equals 4 pi a / (1 - a/b).
    """

    scattering_length: float
    cutoff: float
    core: float
    support: float
    pair_energy: float
    solution: ScatteringSolution | None = None

    @property
    def phi_b(self) -> float:
        if self.cutoff == 0.0:
            return 1.0
        return 1.0 - self.scattering_length / self.cutoff

    @classmethod
    def unit(cls) -> "PairFunction":
        """The trivial factor f == 1 (free runs)."""
        return cls(scattering_length=0.0, cutoff=0.0, core=0.0,
                   support=0.0, pair_energy=0.0)

    def _regions(self, r):
        inside = (r <= self.core) if self.core > 0 else np.zeros(np.shape(r), bool)
        interior = (~inside) & (r < self.support) if self.support > self.core \
            else np.zeros(np.shape(r), bool)
        tail = (~inside) & (~interior) & (r < self.cutoff)
        return inside, interior, tail

    def value(self, r):
        r = _as_float(r)
        out = np.ones_like(r)
        inside, interior, tail = self._regions(r)
        out[inside] = 0.0
        a = self.scattering_length
        if np.any(interior):
            sol = self.solution
            u, _ = _hermite_eval(sol.r, sol.u, sol.du, r[interior])
            out[interior] = u / (sol.slope * r[interior] * self.phi_b)
        out[tail] = (1.0 - a / r[tail]) / self.phi_b
        return out

    def log_value(self, r):
        """log f; -inf at and inside a hard core."""
        with np.errstate(divide="ignore"):
            return np.log(self.value(r))

    def dlog(self, r):
        """d/dr log f, zero outside (core, cutoff)."""
        r = _as_float(r)
        out = np.zeros_like(r)
        _, interior, tail = self._regions(r)
        a = self.scattering_length
        if np.any(interior):
            sol = self.solution
            u, du = _hermite_eval(sol.r, sol.u, sol.du, r[interior])
            out[interior] = du / u - 1.0 / r[interior]
        out[tail] = a / (r[tail] * (r[tail] - a))
        return out

    def d2log(self, r):
        """d^2/dr^2 log f; uses the radial equation in the potential region."""
        r = _as_float(r)
        out = np.zeros_like(r)
        _, interior, tail = self._regions(r)
        a = self.scattering_length
        if np.any(interior):
            sol = self.solution
            ri = r[interior]
            u, du = _hermite_eval(sol.r, sol.u, sol.du, ri)
            w = 0.5 * sol.potential(np.asarray(ri, dtype=float))
            out[interior] = w - (du / u) ** 2 + 1.0 / ri ** 2
        rt = r[tail]
        out[tail] = -1.0 / (rt - a) ** 2 + 1.0 / rt ** 2
        return out


def make_pair_function(solution: ScatteringSolution, cutoff: float) -> PairFunction:
    """Scale the scattering profile into the pair factor truncated at cutoff.

    The energy integral is quadrature over the potential region plus the
    closed-form gradient mass of the affine tail on (support, cutoff].
    """
    a = solution.scattering_length
    support = solution.potential.support
    if cutoff <= support:
        raise ValueError(f"cutoff {cutoff} must exceed the potential range {support}")
    if cutoff <= a:
        raise ValueError(f"cutoff {cutoff} must exceed the scattering length {a}")
    phi_b = 1.0 - a / cutoff

    # interior energy: same integrand as the identity check, stopped at the
    # edge of the potential
    r, u, du = solution.r, solution.u, solution.du
    interior = 0.0
    for i0, i1, func in solution.segments:
        if func is None:
            continue
        rseg = r[i0:i1 + 1]
        kin = np.empty_like(rseg)
        pos = rseg > 0
        kin[pos] = (du[i0:i1 + 1][pos] - u[i0:i1 + 1][pos] / rseg[pos]) ** 2
        kin[~pos] = 0.0
        w = 0.5 * np.asarray(func(rseg), dtype=float)
        interior += _simpson(kin + w * u[i0:i1 + 1] ** 2, rseg)
    interior /= solution.slope ** 2
    inner_edge = max(support, solution.potential.hard_core)
    tail = a * a * (1.0 / inner_edge - 1.0 / cutoff) if inner_edge > 0 else 0.0
    energy = 4.0 * math.pi * (interior + tail) / phi_b ** 2
    return PairFunction(scattering_length=a, cutoff=float(cutoff),
                        core=solution.potential.hard_core, support=support,
                        pair_energy=energy, solution=solution)


@dataclass(frozen=True)
class JastrowFactor:
    """Same-species ramp: zero at and below start, cubic smoothstep to 1.

    g(r) = t^2 (3 - 2t) with t = (r - start)/(finish - start), clipped.
    """

    start: float
    finish: float

    @classmethod
    def unit(cls) -> "JastrowFactor":
        """The trivial ramp g == 1 (free runs)."""
        return cls(start=0.0, finish=0.0)

    def _t(self, r):
        if self.finish == self.start:
            return np.ones_like(_as_float(r))
        return np.clip((_as_float(r) - self.start) / (self.finish - self.start), 0.0, 1.0)

    def value(self, r):
        t = self._t(r)
        return t * t * (3.0 - 2.0 * t)

    def log_value(self, r):
        """log g; -inf at and below the ramp start."""
        with np.errstate(divide="ignore"):
            return np.log(self.value(r))

    def dlog(self, r):
        """d/dr log g on the ramp, zero outside it."""
        t = self._t(r)
        out = np.zeros_like(t)
        on = (t > 0.0) & (t < 1.0)
        width = self.finish - self.start
        out[on] = 6.0 * (1.0 - t[on]) / (width * t[on] * (3.0 - 2.0 * t[on]))
        return out

    def d2log(self, r):
        t = self._t(r)
        out = np.zeros_like(t)
        on = (t > 0.0) & (t < 1.0)
        width = self.finish - self.start
        ton = t[on]
        g = ton * ton * (3.0 - 2.0 * ton)
        dg = 6.0 * ton * (1.0 - ton) / width
        ddg = (6.0 - 12.0 * ton) / width ** 2
        out[on] = ddg / g - (dg / g) ** 2
        return out


def make_jastrow(start: float, finish: float) -> JastrowFactor:
    """Cubic smoothstep ramp from zero at start to one at finish."""
    if start < 0:
        raise ValueError("ramp start must be nonnegative")
    if finish <= start and not (finish == start == 0.0):
        raise ValueError(f"ramp needs finish > start, got [{start}, {finish}]")
    return JastrowFactor(start=float(start), finish=float(finish))
