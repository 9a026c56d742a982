"""Variational Monte Carlo for a two-species Fermi gas in a hard-wall box.

The trial state is a product of one Slater determinant of box sine modes
per spin species, a symmetric ramp factor g over same-spin pairs, and a
scattering-derived pair factor f over opposite-spin pairs.  Metropolis
sampling of |Psi|^2 with single-particle moves gives a stochastic upper
bound on the ground-state energy; blocking handles the autocorrelated
error bars, and a nearest-neighbor counting diagnostic checks that close
same-species encounters are suppressed quadratically in the counting
radius.  Units are hbar = 2m = 1 throughout: the kinetic operator is
minus the Laplacian, and a box mode n has energy pi^2 |n|^2 / L^2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .scattering import JastrowFactor, PairFunction, RadialPotential
from .slater import OrbitalSet, sine_modes, sine_orbitals

__all__ = [
    "TrialStateSpec",
    "ParticleConfiguration",
    "ChainResult",
    "BlockingResult",
    "VmcResult",
    "IrReport",
    "make_trial_state",
    "free_trial_state",
    "default_cutoffs",
    "make_configuration",
    "dirichlet_orbitals",
    "log_psi",
    "local_energy",
    "metropolis_chain",
    "blocking",
    "vmc_upper_bound",
    "ir_diagnostic",
]


class _ModeTable:
    """Values and derivatives of the lowest box sine modes, row-batched."""

    def __init__(self, side: float, count: int):
        self.side = side
        self.count = count
        self.modes = sine_modes(count)
        self.wavevectors = (math.pi / side) * self.modes.astype(float)
        self.eigenvalues = (self.wavevectors ** 2).sum(axis=1)
        self.amplitude = (2.0 / side) ** 1.5

    def matrix(self, positions: np.ndarray, dtype=np.float64) -> np.ndarray:
        """Mode values at the given positions, one row per particle."""
        pos = np.asarray(positions, dtype=dtype)
        phases = pos[:, None, :] * self.wavevectors.astype(dtype)[None, :, :]
        return dtype(self.amplitude) * np.sin(phases).prod(axis=2)

    def derivatives(self, positions: np.ndarray):
        """Values (m, n), gradients (m, n, 3), Laplacians (m, n)."""
        pos = np.asarray(positions, dtype=float)
        phases = pos[:, None, :] * self.wavevectors[None, :, :]
        s = np.sin(phases)
        c = np.cos(phases)
        value = self.amplitude * s.prod(axis=2)
        k = self.wavevectors
        gradient = np.empty_like(phases)
        gradient[:, :, 0] = self.amplitude * k[None, :, 0] * c[:, :, 0] \
            * s[:, :, 1] * s[:, :, 2]
        gradient[:, :, 1] = self.amplitude * k[None, :, 1] * s[:, :, 0] \
            * c[:, :, 1] * s[:, :, 2]
        gradient[:, :, 2] = self.amplitude * k[None, :, 2] * s[:, :, 0] \
            * s[:, :, 1] * c[:, :, 2]
        laplacian = -self.eigenvalues[None, :] * value
        return value, gradient, laplacian


@dataclass(frozen=True)
class TrialStateSpec:
    """Trial state: determinants times same-spin ramp times pair factor.

    n_up and n_down particles occupy the lowest sine modes of the box
    [0, side]^3; jastrow multiplies same-spin pairs and pair multiplies
    opposite-spin pairs.  Build through make_trial_state, which checks
    the length-scale ordering (potential range < ramp end <= pair cutoff)
    and warns about open shells and oversized cutoffs.
    """

    n_up: int
    n_down: int
    side: float
    potential: RadialPotential
    pair: PairFunction
    jastrow: JastrowFactor

    @property
    def total(self) -> int:
        return self.n_up + self.n_down

    @property
    def density(self) -> float:
        return self.total / self.side ** 3

    @cached_property
    def _up_table(self) -> _ModeTable | None:
        return _ModeTable(self.side, self.n_up) if self.n_up else None

    @cached_property
    def _down_table(self) -> _ModeTable | None:
        return _ModeTable(self.side, self.n_down) if self.n_down else None

    @cached_property
    def e0_finite(self) -> float:
        """Exact energy of the same mode filling without interactions."""
        total = 0.0
        for table in (self._up_table, self._down_table):
            if table is not None:
                total += float(table.eigenvalues.sum())
        return total


def _is_closed_shell(count: int) -> bool:
    if count == 0:
        return True
    modes = sine_modes(count + 1)
    return int((modes[count - 1] ** 2).sum()) < int((modes[count] ** 2).sum())


def default_cutoffs(n_up: int, n_down: int, side: float) -> tuple[float, float]:
    """Default pair cutoff b and ramp end s for a given box filling.

    b = min(0.4 rho^(-1/3), side/8) keeps the pair factor well inside the
    mean spacing and the box; s = 0.25 rho^(-1/3) keeps the same-spin
    ramp short of the spacing.
    """
    spacing = (side ** 3 / max(n_up + n_down, 1)) ** (1.0 / 3.0)
    return min(0.4 * spacing, side / 8.0), 0.25 * spacing


def make_trial_state(n_up: int, n_down: int, side: float,
                     potential: RadialPotential, pair: PairFunction,
                     jastrow: JastrowFactor) -> TrialStateSpec:
    """Validate and assemble a trial state.

    Errors enforce the orderings that keep the state admissible: the
    same-spin ramp must vanish across the hard core and end beyond the
    potential range, and it must not outreach the opposite-spin cutoff.
    Warnings flag open shells (partially filled degenerate mode levels,
    resolved lexicographically) and cutoffs crowding the mean spacing.
    """
    if n_up < 1:
        raise ValueError("need at least one up particle")
    if n_down < 0:
        raise ValueError("down count must be nonnegative")
    if side <= 0:
        raise ValueError("box side must be positive")
    span = potential.support
    if jastrow.start < potential.hard_core:
        raise ValueError(
            f"same-spin ramp starts at {jastrow.start}, inside the hard "
            f"core {potential.hard_core}; the ramp must vanish there")
    if span > 0 and jastrow.finish <= span:
        raise ValueError(
            f"same-spin ramp must end beyond the potential range: "
            f"ramp end {jastrow.finish} <= range {span}")
    if n_down > 0:
        if potential.hard_core > 0 and pair.core < potential.hard_core:
            raise ValueError(
                f"pair factor core {pair.core} does not cover the hard "
                f"core {potential.hard_core}")
        if pair.cutoff > 0 and jastrow.finish > pair.cutoff:
            raise ValueError(
                f"ramp end {jastrow.finish} exceeds the pair cutoff "
                f"{pair.cutoff}")
    spec = TrialStateSpec(n_up=n_up, n_down=n_down, side=float(side),
                          potential=potential, pair=pair, jastrow=jastrow)
    spacing = spec.density ** (-1.0 / 3.0)
    if jastrow.finish > 0.5 * spacing:
        warnings.warn(
            f"ramp end {jastrow.finish:.3g} exceeds half the mean spacing "
            f"{spacing:.3g}; same-spin correlations overlap", RuntimeWarning)
    if pair.cutoff > 0.5 * side:
        warnings.warn(
            f"pair cutoff {pair.cutoff:.3g} exceeds half the box side",
            RuntimeWarning)
    for count, name in ((n_up, "up"), (n_down, "down")):
        if not _is_closed_shell(count):
            warnings.warn(
                f"{name} count {count} fills a degenerate mode level "
                f"partially; lexicographic order decides the occupation",
                RuntimeWarning)
    return spec


def free_trial_state(n_up: int, n_down: int, side: float) -> TrialStateSpec:
    """No interaction and unit correlation factors: an exact eigenstate."""
    from .scattering import free_potential
    return make_trial_state(n_up, n_down, side, free_potential(),
                            PairFunction.unit(), JastrowFactor.unit())


@dataclass(frozen=True)
class ParticleConfiguration:
    """Positions of both species, each an (n, 3) array inside the box."""

    x: np.ndarray
    y: np.ndarray


def make_configuration(spec: TrialStateSpec, x, y) -> ParticleConfiguration:
    """Shape-check positions and require them strictly inside the box."""
    x = np.asarray(x, dtype=float).reshape(-1, 3)
    y = np.asarray(y, dtype=float).reshape(-1, 3)
    if len(x) != spec.n_up or len(y) != spec.n_down:
        raise ValueError(
            f"expected {spec.n_up}+{spec.n_down} particles, "
            f"got {len(x)}+{len(y)}")
    for name, pos in (("up", x), ("down", y)):
        if pos.size and not ((pos > 0.0) & (pos < spec.side)).all():
            raise ValueError(f"{name} positions must lie strictly inside "
                             f"(0, {spec.side})^3")
    return ParticleConfiguration(x=x, y=y)


def dirichlet_orbitals(side: float, count: int) -> OrbitalSet:
    """The count lowest hard-wall box modes as an orbital set.

    Ordering matches the determinant rows used here: by mode energy
    pi^2 |n|^2 / side^2, ties lexicographic on (n1, n2, n3).
    """
    if count < 1:
        raise ValueError("need at least one orbital")
    return sine_orbitals(count, side)


def _slogdet_extended(matrix: np.ndarray):
    """Sign and log-magnitude of a determinant in the matrix's own dtype.

    Gaussian elimination with partial pivoting; needed because the
    stock determinant routines do not accept extended precision.
    """
    a = matrix.copy()
    n = len(a)
    sign = 1.0
    log_abs = a.dtype.type(0.0)
    for col in range(n):
        pivot_row = col + int(np.argmax(np.abs(a[col:, col])))
        if a[pivot_row, col] == 0.0:
            return 0.0, -np.inf
        if pivot_row != col:
            a[[col, pivot_row]] = a[[pivot_row, col]]
            sign = -sign
        pivot = a[col, col]
        log_abs += np.log(np.abs(pivot))
        if pivot < 0:
            sign = -sign
        if col + 1 < n:
            factors = a[col + 1:, col] / pivot
            a[col + 1:, col + 1:] -= factors[:, None] * a[col, col + 1:]
    return sign, log_abs


def _pair_distances(positions: np.ndarray) -> np.ndarray:
    m = len(positions)
    if m < 2:
        return np.empty(0, dtype=positions.dtype)
    diff = positions[:, None, :] - positions[None, :, :]
    grid = np.sqrt((diff ** 2).sum(axis=2))
    return grid[np.triu_indices(m, k=1)]


def log_psi(spec: TrialStateSpec, config: ParticleConfiguration,
            dtype=np.float64):
    """log |Psi| at a configuration; -inf when any factor vanishes.

    Pass dtype=np.longdouble for extended-precision evaluation (the mode
    frequencies and factor coefficients stay the float64 constants that
    define the state, so both precisions evaluate the same function).
    """
    total = dtype(0.0)
    for positions, table in ((np.asarray(config.x, dtype=dtype),
                              spec._up_table),
                             (np.asarray(config.y, dtype=dtype),
                              spec._down_table)):
        if table is None:
            continue
        if dtype is np.float64:
            sign, log_det = np.linalg.slogdet(table.matrix(positions))
        else:
            sign, log_det = _slogdet_extended(table.matrix(positions, dtype))
        if sign == 0.0 or not np.isfinite(log_det):
            return float("-inf")
        total = total + log_det
        radii = _pair_distances(positions)
        if radii.size:
            logs = spec.jastrow.log_value(radii)
            if not np.isfinite(logs).all():
                return float("-inf")
            total = total + logs.sum()
    if spec.n_up and spec.n_down:
        x = np.asarray(config.x, dtype=dtype)
        y = np.asarray(config.y, dtype=dtype)
        cross = np.sqrt(((x[:, None, :] - y[None, :, :]) ** 2).sum(axis=2))
        logs = spec.pair.log_value(cross.ravel())
        if not np.isfinite(logs).all():
            return float("-inf")
        total = total + logs.sum()
    return float(total) if dtype is np.float64 else total


def _accumulate_pairs(factor, left, right, grad, lap, left_idx, right_idx,
                      potential, cross: bool):
    """Add pair log-derivative and potential terms for one pair family.

    left and right are position blocks; for a same-spin family they are
    the same block and only i < j pairs enter.  grad and lap are the
    per-particle accumulators over the stacked (up then down) ordering.
    """
    if cross:
        diff = left[:, None, :] - right[None, :, :]
        radii = np.sqrt((diff ** 2).sum(axis=2))
        i_idx = np.repeat(np.arange(len(left)), len(right))
        j_idx = np.tile(np.arange(len(right)), len(left))
        flat_diff = diff.reshape(-1, 3)
        flat_r = radii.ravel()
    else:
        m = len(left)
        if m < 2:
            return 0.0
        diff = left[:, None, :] - left[None, :, :]
        radii = np.sqrt((diff ** 2).sum(axis=2))
        i_idx, j_idx = np.triu_indices(m, k=1)
        flat_diff = diff[i_idx, j_idx]
        flat_r = radii[i_idx, j_idx]
    if flat_r.size == 0:
        return 0.0
    values = potential(flat_r)
    if np.isinf(values).any():
        raise ValueError("configuration reaches inside the hard core; "
                         "local energy requires log_psi to be finite")
    first = factor.dlog(flat_r)
    second = factor.d2log(flat_r)
    radial = second + 2.0 * first / flat_r
    unit = flat_diff / flat_r[:, None]
    np.add.at(grad, left_idx[i_idx], first[:, None] * unit)
    np.add.at(grad, right_idx[j_idx], -first[:, None] * unit)
    np.add.at(lap, left_idx[i_idx], radial)
    np.add.at(lap, right_idx[j_idx], radial)
    return float(values.sum())


def _local_terms(spec: TrialStateSpec, config: ParticleConfiguration):
    """Per-particle kinetic contributions and the total potential energy.

    Kinetic part of particle i is -(Delta_i Psi)/Psi assembled from the
    determinant column identities and the radial log-derivatives of the
    pair factors; the hard core never contributes to the potential term
    because admissible configurations stay outside it.
    """
    x = np.asarray(config.x, dtype=float)
    y = np.asarray(config.y, dtype=float)
    n_up, n_down = spec.n_up, spec.n_down
    total = n_up + n_down
    det_grad = np.zeros((total, 3))
    det_lap = np.zeros(total)
    for offset, positions, table in ((0, x, spec._up_table),
                                     (n_up, y, spec._down_table)):
        if table is None:
            continue
        value, gradient, laplacian = table.derivatives(positions)
        inverse = np.linalg.inv(value)
        block = slice(offset, offset + len(positions))
        det_grad[block] = np.einsum("ai,iad->id", inverse, gradient)
        det_lap[block] = np.einsum("ai,ia->i", inverse, laplacian)
    pair_grad = np.zeros((total, 3))
    pair_lap = np.zeros(total)
    up_idx = np.arange(n_up)
    down_idx = np.arange(n_up, total)
    potential_energy = 0.0
    potential_energy += _accumulate_pairs(
        spec.jastrow, x, x, pair_grad, pair_lap, up_idx, up_idx,
        spec.potential, cross=False)
    potential_energy += _accumulate_pairs(
        spec.jastrow, y, y, pair_grad, pair_lap, down_idx, down_idx,
        spec.potential, cross=False)
    if n_up and n_down:
        potential_energy += _accumulate_pairs(
            spec.pair, x, y, pair_grad, pair_lap, up_idx, down_idx,
            spec.potential, cross=True)
    cross_term = 2.0 * (det_grad * pair_grad).sum(axis=1)
    square_term = (pair_grad ** 2).sum(axis=1)
    kinetic = -(det_lap + cross_term + pair_lap + square_term)
    return kinetic, potential_energy


def local_energy(spec: TrialStateSpec, config: ParticleConfiguration) -> float:
    """(H Psi)/Psi from analytic derivatives of every log factor."""
    kinetic, potential_energy = _local_terms(spec, config)
    return float(kinetic.sum() + potential_energy)


@dataclass(frozen=True)
class ChainResult:
    """Recorded sample stream of one Metropolis chain."""

    samples: list
    acceptance_rate: float
    final: ParticleConfiguration
    steps: int
    step_size: float
    seed: int


def _initial_configuration(spec: TrialStateSpec,
                           rng: np.random.Generator) -> ParticleConfiguration:
    for _ in range(500):
        x = rng.uniform(0.0, spec.side, (spec.n_up, 3))
        y = rng.uniform(0.0, spec.side, (spec.n_down, 3))
        config = ParticleConfiguration(x=x, y=y)
        if np.isfinite(log_psi(spec, config)):
            return config
    raise RuntimeError("could not draw a starting configuration with "
                       "nonzero weight; cutoffs leave too little room")


def metropolis_chain(spec: TrialStateSpec, steps: int, step_size: float,
                     seed: int, start: ParticleConfiguration | None = None,
                     record_every: int | None = 1,
                     warn_acceptance: bool = True) -> ChainResult:
    """Sample |Psi|^2 with Gaussian single-particle moves.

    Particles are updated round-robin; a proposal is accepted with
    probability min(1, |Psi'/Psi|^2), and moves that leave the open box
    or hit a zero of Psi are always rejected.  Every record_every-th
    state is snapshot into the sample stream (record_every=None records
    nothing); the chain is a pure function of (spec, start, seed).
    """
    if step_size <= 0:
        raise ValueError("step size must be positive")
    if steps < 0:
        raise ValueError("step count must be nonnegative")
    rng = np.random.default_rng(seed)
    if start is None:
        start = _initial_configuration(spec, rng)
    positions = np.vstack([np.asarray(start.x, dtype=float).reshape(-1, 3),
                           np.asarray(start.y, dtype=float).reshape(-1, 3)])
    if len(positions) != spec.total:
        raise ValueError(f"start configuration has {len(positions)} "
                         f"particles, expected {spec.total}")

    def snapshot() -> ParticleConfiguration:
        return ParticleConfiguration(x=positions[:spec.n_up].copy(),
                                     y=positions[spec.n_up:].copy())

    current = log_psi(spec, snapshot())
    if not np.isfinite(current):
        raise ValueError("start configuration has zero weight")
    accepted = 0
    samples: list[ParticleConfiguration] = []
    for step in range(steps):
        index = step % spec.total
        move = rng.normal(0.0, step_size, 3)
        proposed = positions[index] + move
        if ((proposed > 0.0) & (proposed < spec.side)).all():
            saved = positions[index].copy()
            positions[index] = proposed
            candidate = log_psi(spec, snapshot())
            if np.isfinite(candidate) and \
                    math.log(rng.uniform()) < 2.0 * (candidate - current):
                current = candidate
                accepted += 1
            else:
                positions[index] = saved
        if record_every is not None and (step + 1) % record_every == 0:
            samples.append(snapshot())
    rate = accepted / steps if steps else 0.0
    if warn_acceptance and steps and not 0.1 <= rate <= 0.9:
        warnings.warn(f"acceptance rate {rate:.3f} outside [0.1, 0.9]; "
                      f"step size {step_size:.3g} is poorly tuned",
                      RuntimeWarning)
    return ChainResult(samples=samples, acceptance_rate=rate,
                       final=snapshot(), steps=steps, step_size=step_size,
                       seed=seed)


@dataclass(frozen=True)
class BlockingResult:
    """Mean and autocorrelation-safe error from block doubling."""

    mean: float
    error: float
    block_size: int
    block_means: np.ndarray
    levels: tuple


def blocking(values, min_blocks: int = 20) -> BlockingResult:
    """Blocked mean and error with automatic block-length doubling.

    Doubles the block length while at least min_blocks blocks remain and
    takes the largest error estimate across levels, which is where the
    doubling transform plateaus for an autocorrelated but mixing chain.
    """
    series = np.asarray(values, dtype=float)
    if series.ndim != 1:
        raise ValueError("blocking expects a one-dimensional series")
    if len(series) < 2 * min_blocks:
        raise ValueError(f"need at least {2 * min_blocks} values for "
                         f"{min_blocks} blocks at one doubling")
    mean = float(series.mean())
    levels = []
    chosen = (0.0, 1, series)
    current = series
    size = 1
    while len(current) >= min_blocks:
        count = len(current)
        error = float(np.sqrt(current.var(ddof=1) / count))
        levels.append((size, error, count))
        if error > chosen[0]:
            chosen = (error, size, current)
        half = count // 2
        current = 0.5 * (current[0:2 * half:2] + current[1:2 * half:2])
        size *= 2
    return BlockingResult(mean=mean, error=chosen[0], block_size=chosen[1],
                          block_means=chosen[2].copy(),
                          levels=tuple(levels))


@dataclass(frozen=True)
class VmcResult:
    """Blocked energy estimate of one variational run."""

    energy: float
    error: float
    acceptance_rate: float
    samples: int
    seed: int
    e0_finite: float
    step_size: float
    block_size: int
    block_means: np.ndarray


def vmc_upper_bound(spec: TrialStateSpec, steps: int, seed: int,
                    step_size: float | None = None,
                    equilibration: int | None = None,
                    record_every: int | None = None) -> VmcResult:
    """Stochastic upper bound on the ground-state energy of the box.

    Equilibrates for at least 1000 steps per particle while tuning the
    move size toward mid-range acceptance, then freezes the step size
    and records one sample per sweep for the blocked estimate.  The
    exact free-filling energy e0_finite travels with the result so the
    interaction correction is read off directly.
    """
    if record_every is None:
        record_every = spec.total
    if equilibration is None:
        equilibration = 1000 * spec.total
    if equilibration < 1000 * spec.total:
        raise ValueError(f"equilibration {equilibration} is below 1000 "
                         f"steps per particle ({1000 * spec.total})")
    if step_size is None:
        step_size = 0.25 * spec.density ** (-1.0 / 3.0)
    chunk_seeds = np.random.SeedSequence(seed).generate_state(10)
    chunks = 8
    chunk_len = max(equilibration // chunks + 1, 1)
    state = None
    for chunk in range(chunks):
        burn = metropolis_chain(spec, chunk_len, step_size,
                                int(chunk_seeds[chunk]), start=state,
                                record_every=None, warn_acceptance=False)
        state = burn.final
        if burn.acceptance_rate < 0.35:
            step_size *= 0.8
        elif burn.acceptance_rate > 0.65:
            step_size *= 1.25
    production = metropolis_chain(spec, steps, step_size,
                                  int(chunk_seeds[chunks]), start=state,
                                  record_every=record_every)
    energies = np.array([local_energy(spec, sample)
                         for sample in production.samples])
    blocked = blocking(energies)
    return VmcResult(energy=blocked.mean, error=blocked.error,
                     acceptance_rate=production.acceptance_rate,
                     samples=len(energies), seed=seed,
                     e0_finite=spec.e0_finite, step_size=step_size,
                     block_size=blocked.block_size,
                     block_means=blocked.block_means)


@dataclass(frozen=True)
class IrReport:
    """Close-encounter count against the kinetic-energy quadratic bound."""

    radius: float
    mean_count: float
    kinetic_energy: float
    ratio: float
    samples: int


def ir_diagnostic(samples, radius: float, spec: TrialStateSpec,
                  kinetic_cap: int = 2000) -> IrReport:
    """Mean count of down particles within 2 radius of a down neighbor.

    The count is averaged over the sample stream and compared with the
    down-species kinetic energy T through the ratio mean / (T radius^2),
    which stays bounded as the radius shrinks for any admissible state;
    T is estimated on an evenly spaced subsample capped at kinetic_cap
    configurations.
    """
    samples = list(samples)
    if len(samples) < 50:
        raise ValueError(f"need at least 50 samples, got {len(samples)}")
    if spec.n_down < 2:
        raise ValueError("the diagnostic counts down-species neighbors; "
                         "need at least two down particles")
    if radius <= 0:
        raise ValueError("counting radius must be positive")
    counts = np.empty(len(samples))
    for k, config in enumerate(samples):
        y = np.asarray(config.y, dtype=float)
        diff = y[:, None, :] - y[None, :, :]
        grid = np.sqrt((diff ** 2).sum(axis=2))
        np.fill_diagonal(grid, np.inf)
        counts[k] = int((grid.min(axis=1) < 2.0 * radius).sum())
    stride = max(len(samples) // kinetic_cap, 1)
    kinetic_values = [
        float(_local_terms(spec, config)[0][spec.n_up:].sum())
        for config in samples[::stride]]
    kinetic = float(np.mean(kinetic_values))
    mean_count = float(counts.mean())
    return IrReport(radius=float(radius), mean_count=mean_count,
                    kinetic_energy=kinetic,
                    ratio=mean_count / (kinetic * radius ** 2),
                    samples=len(samples))
