"""Command-line frontend: config parsing, dispatch, and serialization.

One TOML config per run.  Top-level keys name the run (subcommand, seed,
threads, output, verbosity) and the potential (inline [potential] table
or a potential_file path); a table named after the subcommand holds its
parameters.  Validation collects every problem before reporting, naming
the violated invariant.  All stochastic output is a pure function of
(config, seed): summaries are JSON with sorted keys and no timestamps,
tables are CSV with full-precision floats, so identical runs are
byte-identical.  Exit status: 0 success, 1 computation failure, 2 bad
config.  Quantities are in hbar = 2m = 1 units (energy = 1/length^2).
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

import numpy as np

from .dyson import (
    BoxGrid,
    dyson_gap_radial,
    gaussian_cutoff,
    generalized_dyson_gap,
    make_soft_shell,
    regularize_hard_core,
    separated_centers,
)
from .expansion import GasParameters, bose_energy_density, fermi_energy_density
from .scattering import (
    JastrowFactor,
    PairFunction,
    PotentialFormatError,
    check_energy_identity,
    load_potential,
    make_jastrow,
    make_pair_function,
    solve_zero_energy,
)
from .slater import (
    BoxQuadrature,
    OrbitalSet,
    key_estimate_scan,
    make_correlation_kernel,
    m_particle_density,
    overlap_matrix,
    sine_orbitals,
    slater_norm,
)
from .vmc import default_cutoffs, make_trial_state, vmc_upper_bound

__all__ = ["ConfigError", "RunConfig", "parse_config", "run", "main"]

SCHEMA_VERSION = 1
UNITS = {
    "convention": "hbar = 2m = 1",
    "length": "box units",
    "energy": "1 / length^2",
}
SUBCOMMANDS = ("scatter", "energy", "dyson-check", "slater-check", "vmc")


class ConfigError(ValueError):
    """Raised by parse_config with the full list of config problems."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass(frozen=True)
class RunConfig:
    """A validated run: subcommand, typed parameters, and output plumbing."""

    subcommand: str
    parameters: dict
    output: Path
    seed: int
    threads: int
    verbosity: int


# ---------------------------------------------------------------------------
# field helpers: every reader appends to the shared error list and returns
# a usable placeholder so validation can keep going


def _number(table, key, errors, *, default=None, required=False,
            minimum=None, strict=False, invariant=None):
    if key not in table:
        if required:
            errors.append(f"{key}: required field is missing")
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{key}: expected a number, got {value!r}")
        return default
    value = float(value)
    if minimum is not None and (value <= minimum if strict
                                else value < minimum):
        bound = f"{key} > {minimum}" if strict else f"{key} >= {minimum}"
        errors.append(f"{invariant or bound} required, got {value}")
        return default
    return value


def _integer(table, key, errors, *, default=None, required=False,
             minimum=None, invariant=None):
    if key not in table:
        if required:
            errors.append(f"{key}: required field is missing")
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, int):
        errors.append(f"{key}: expected an integer, got {value!r}")
        return default
    if minimum is not None and value < minimum:
        errors.append(f"{invariant or f'{key} >= {minimum}'} required, "
                      f"got {value}")
        return default
    return value


def _boolean(table, key, errors, *, default=False):
    value = table.get(key, default)
    if not isinstance(value, bool):
        errors.append(f"{key}: expected true or false, got {value!r}")
        return default
    return value


def _number_list(table, key, errors, *, required=False, integers=False):
    if key not in table:
        if required:
            errors.append(f"{key}: required field is missing")
        return None
    value = table[key]
    kind = int if integers else (int, float)
    ok = isinstance(value, list) and value and all(
        not isinstance(v, bool) and isinstance(v, kind) for v in value)
    if not ok:
        what = "integers" if integers else "numbers"
        errors.append(f"{key}: expected a non-empty list of {what}, "
                      f"got {value!r}")
        return None
    return list(value)


def _resolve_potential(data: dict, base_dir: Path | None, errors: list):
    """Potential from the inline table or a referenced file, or None."""
    inline = "potential" in data
    from_file = "potential_file" in data
    if inline and from_file:
        errors.append("give potential or potential_file, not both")
        return None
    if from_file:
        rel = data["potential_file"]
        if not isinstance(rel, str):
            errors.append(f"potential_file: expected a path string, "
                          f"got {rel!r}")
            return None
        path = Path(rel)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            errors.append(f"potential_file: {exc}")
            return None
        try:
            loaded = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            errors.append(f"potential_file: syntax error: {exc}")
            return None
        table = loaded.get("potential", loaded)
    else:
        table = data.get("potential")
        if table is None:
            return None
    if not isinstance(table, dict):
        errors.append(f"potential: expected a table, got {table!r}")
        return None
    try:
        return load_potential(table)
    except PotentialFormatError as exc:
        errors.extend(exc.errors)
        return None


def _reject_unknown(table, known, errors, section):
    for key in table:
        if key not in known:
            errors.append(f"[{section}] unknown key '{key}'")


# ---------------------------------------------------------------------------
# per-subcommand validation, each returning the typed parameter map


def _validate_scatter(table, potential, errors, seed):
    _reject_unknown(table, {"r_max", "n_points", "pair_cutoff"}, errors,
                    "scatter")
    if potential is None:
        errors.append("scatter: a [potential] table or potential_file "
                      "is required")
    params = {
        "potential": potential,
        "r_max": _number(table, "r_max", errors, minimum=0.0, strict=True),
        "n_points": _integer(table, "n_points", errors, default=10_000,
                             minimum=100),
        "pair_cutoff": _number(table, "pair_cutoff", errors, minimum=0.0,
                               strict=True),
    }
    b = params["pair_cutoff"]
    if b is not None and potential is not None and b <= potential.support:
        errors.append(f"pair_cutoff: b > R0 required, got b = {b} with "
                      f"potential range R0 = {potential.support}")
    return params


def _validate_energy(table, potential, errors, seed):
    _reject_unknown(table, {"rho", "q", "scattering_length", "rho_up",
                            "rho_down", "bose", "lhy"}, errors, "energy")
    rho = _number(table, "rho", errors, required=True, minimum=0.0,
                  strict=True, invariant="rho > 0")
    scattering_length = _number(table, "scattering_length", errors,
                                minimum=0.0)
    if scattering_length is not None and potential is not None:
        errors.append("give scattering_length or a potential, not both")
    bose = _boolean(table, "bose", errors)
    lhy = _boolean(table, "lhy", errors)
    if lhy and not bose:
        errors.append("lhy: the LHY term belongs to the Bose branch; "
                      "set bose = true")
    q = _integer(table, "q", errors, default=2, minimum=1)
    rho_up = _number(table, "rho_up", errors, minimum=0.0)
    rho_down = _number(table, "rho_down", errors, minimum=0.0)
    if (rho_up is None) != (rho_down is None):
        errors.append("give both rho_up and rho_down or neither")
    elif rho_up is not None and rho is not None and \
            not math.isclose(rho_up + rho_down, rho, rel_tol=1e-9):
        errors.append(f"rho_up + rho_down must equal rho, got "
                      f"{rho_up + rho_down} vs {rho}")
    if bose and ("q" in table or rho_up is not None):
        errors.append("bose: q and the species split do not apply to the "
                      "Bose branch")
    return {"potential": potential, "rho": rho, "q": q,
            "scattering_length": scattering_length, "rho_up": rho_up,
            "rho_down": rho_down, "bose": bose, "lhy": lhy}


def _validate_dyson_check(table, potential, errors, seed):
    mode = table.get("mode", "radial")
    if mode not in ("radial", "generalized"):
        errors.append(f"mode: expected radial or generalized, got {mode!r}")
        mode = "radial"
    if potential is None:
        errors.append("dyson-check: a [potential] table or potential_file "
                      "is required")
    common = {"mode", "shell_inner", "shell_outer"}
    if mode == "radial":
        _reject_unknown(table, common | {"l_max", "n_elements", "tol"},
                        errors, "dyson-check")
    else:
        _reject_unknown(table, common | {"cutoff_scale", "eps",
                                         "grid_points", "side",
                                         "regularize_height", "tol_factor"},
                        errors, "dyson-check")
    inner = _number(table, "shell_inner", errors, required=True, minimum=0.0)
    outer = _number(table, "shell_outer", errors, required=True, minimum=0.0,
                    strict=True)
    if inner is not None and outer is not None and outer <= inner:
        errors.append(f"shell radii: 0 <= inner < outer required, got "
                      f"[{inner}, {outer}]")
    params = {"potential": potential, "mode": mode, "shell_inner": inner,
              "shell_outer": outer}
    if mode == "radial":
        params["l_max"] = _integer(table, "l_max", errors, default=4,
                                   minimum=0)
        params["n_elements"] = _integer(table, "n_elements", errors,
                                        default=2000, minimum=100)
        params["tol"] = _number(table, "tol", errors, default=1e-8,
                                minimum=0.0, strict=True)
    else:
        params["cutoff_scale"] = _number(table, "cutoff_scale", errors,
                                         required=True, minimum=0.0,
                                         strict=True)
        eps = _number_list(table, "eps", errors, required=True)
        if eps is not None and not all(0.0 < e < 1.0 for e in eps):
            errors.append(f"eps: every value must lie in (0, 1), got {eps}")
            eps = None
        params["eps"] = eps
        params["grid_points"] = _integer(table, "grid_points", errors,
                                         required=True, minimum=8)
        params["side"] = _number(table, "side", errors, required=True,
                                 minimum=0.0, strict=True)
        params["regularize_height"] = _number(
            table, "regularize_height", errors, default=1e4, minimum=1.0,
            strict=True)
        params["tol_factor"] = _number(table, "tol_factor", errors,
                                       default=1e-6, minimum=0.0,
                                       strict=True)
    return params


def _validate_slater_check(table, potential, errors, seed):
    if potential is not None:
        errors.append("slater-check builds its hard cores from the ratio "
                      "list; it does not take a potential")
    _reject_unknown(table, {"side", "orbital_count", "centers", "separation",
                            "ratios", "cutoff", "quadrature_points",
                            "scan_seed"}, errors, "slater-check")
    params = {
        "side": _number(table, "side", errors, required=True, minimum=0.0,
                        strict=True),
        "orbital_count": _integer(table, "orbital_count", errors, default=3,
                                  minimum=1),
        "centers": _integer(table, "centers", errors, required=True,
                            minimum=1),
        "separation": _number(table, "separation", errors, required=True,
                              minimum=0.0, strict=True),
        "cutoff": _number(table, "cutoff", errors, required=True,
                          minimum=0.0, strict=True),
        "quadrature_points": _integer(table, "quadrature_points", errors,
                                      default=24, minimum=2),
        "scan_seed": _integer(table, "scan_seed", errors, default=seed,
                              minimum=0),
    }
    ratios = _number_list(table, "ratios", errors, required=True)
    if ratios is not None and not all(r > 0 for r in ratios):
        errors.append(f"ratios: every ratio must be positive, got {ratios}")
        ratios = None
    params["ratios"] = ratios
    if ratios is not None and params["separation"] is not None and \
            params["cutoff"] is not None:
        largest_core = params["separation"] / min(ratios)
        if params["cutoff"] <= largest_core:
            errors.append(
                f"cutoff: must exceed the largest hard core "
                f"separation/ratio = {largest_core}, got {params['cutoff']}")
    return params


def _validate_vmc(table, potential, errors, seed):
    _reject_unknown(table, {"n_up", "n_down", "side", "rho", "steps",
                            "seeds", "pair_cutoff", "ramp_start", "ramp_end",
                            "step_size", "equilibration", "record_every"},
                    errors, "vmc")
    if potential is None:
        errors.append("vmc: a [potential] table or potential_file is "
                      "required (kind = \"none\" for the free gas)")
    n_up = _integer(table, "n_up", errors, required=True, minimum=1,
                    invariant="n_up >= 1")
    n_down = _integer(table, "n_down", errors, default=0, minimum=0)
    side = _number(table, "side", errors, minimum=0.0, strict=True)
    rho = _number(table, "rho", errors, minimum=0.0, strict=True,
                  invariant="rho > 0")
    if ("side" in table) == ("rho" in table):
        errors.append("give exactly one of side or rho")
    elif rho is not None and n_up is not None and n_down is not None:
        side = ((n_up + n_down) / rho) ** (1.0 / 3.0)
    steps = _integer(table, "steps", errors, required=True, minimum=1)
    seeds = _number_list(table, "seeds", errors, integers=True)
    if seeds is None:
        if "seeds" not in table:
            seeds = [seed]
        else:
            seeds = []
    params = {
        "potential": potential, "n_up": n_up, "n_down": n_down,
        "side": side, "steps": steps, "seeds": seeds,
        "pair_cutoff": _number(table, "pair_cutoff", errors, minimum=0.0,
                               strict=True),
        "ramp_start": _number(table, "ramp_start", errors, minimum=0.0),
        "ramp_end": _number(table, "ramp_end", errors, minimum=0.0,
                            strict=True),
        "step_size": _number(table, "step_size", errors, minimum=0.0,
                             strict=True),
        "equilibration": _integer(table, "equilibration", errors, minimum=0),
        "record_every": _integer(table, "record_every", errors, minimum=1),
    }
    if potential is not None and params["ramp_end"] is not None and \
            params["ramp_end"] <= potential.support:
        errors.append(
            f"jastrow ramp: s > R0 required, got ramp_end "
            f"{params['ramp_end']} <= potential range {potential.support}")
    if params["ramp_end"] is not None and params["pair_cutoff"] is not None \
            and params["ramp_end"] > params["pair_cutoff"]:
        errors.append(f"jastrow ramp: s <= b required, got ramp_end "
                      f"{params['ramp_end']} > pair_cutoff "
                      f"{params['pair_cutoff']}")
    if params["equilibration"] is not None and n_up is not None and \
            n_down is not None and \
            params["equilibration"] < 1000 * (n_up + n_down):
        errors.append(f"equilibration >= 1000 steps per particle required, "
                      f"got {params['equilibration']} for "
                      f"{n_up + n_down} particles")
    return params


_VALIDATORS = {
    "scatter": _validate_scatter,
    "energy": _validate_energy,
    "dyson-check": _validate_dyson_check,
    "slater-check": _validate_slater_check,
    "vmc": _validate_vmc,
}


def parse_config(text: str, subcommand: str | None = None,
                 overrides: dict | None = None,
                 base_dir: Path | None = None) -> RunConfig:
    """Parse and validate one TOML config into a RunConfig.

    subcommand (from the command line) must agree with any subcommand key
    in the file; overrides (from flags or the environment) replace the
    file's top-level values before validation.  Raises ConfigError
    carrying every problem found, not just the first.
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"syntax error: {exc}"]) from None
    if overrides:
        data = {**data, **overrides}
    errors: list[str] = []
    sub = data.get("subcommand", subcommand)
    if subcommand is not None and "subcommand" in data and sub != subcommand:
        errors.append(f"subcommand: config says {sub!r} but the command "
                      f"line says {subcommand!r}")
        sub = subcommand
    if sub not in SUBCOMMANDS:
        errors.append(f"subcommand: expected one of {', '.join(SUBCOMMANDS)}"
                      f", got {sub!r}")
        raise ConfigError(errors)
    known_top = {"subcommand", "seed", "threads", "output", "verbosity",
                 "potential", "potential_file", sub}
    for key in data:
        if key not in known_top:
            errors.append(f"unknown top-level key '{key}'")
    seed = _integer(data, "seed", errors, default=0, minimum=0)
    threads = _integer(data, "threads", errors, default=1, minimum=1)
    verbosity = _integer(data, "verbosity", errors, default=0, minimum=0)
    output = data.get("output", ".")
    if not isinstance(output, (str, Path)):
        errors.append(f"output: expected a path string, got {output!r}")
        output = "."
    section = data.get(sub, {})
    if not isinstance(section, dict):
        errors.append(f"[{sub}] must be a table of parameters")
        section = {}
    potential = _resolve_potential(data, base_dir, errors)
    parameters = _VALIDATORS[sub](section, potential, errors,
                                  seed if seed is not None else 0)
    if errors:
        raise ConfigError(errors)
    return RunConfig(subcommand=sub, parameters=parameters,
                     output=Path(output), seed=seed, threads=threads,
                     verbosity=verbosity)


# ---------------------------------------------------------------------------
# serialization


def _pythonize(obj):
    if isinstance(obj, dict):
        return {key: _pythonize(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_pythonize(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return [_pythonize(value) for value in obj.tolist()]
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_json(path: Path, record: dict) -> None:
    text = json.dumps(_pythonize(record), indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_cell(value) for value in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# dispatchers: each returns (result record, named CSV tables, report lines)


def _run_scatter(config: RunConfig):
    params = config.parameters
    solution = solve_zero_energy(params["potential"], r_max=params["r_max"],
                                 n_points=params["n_points"])
    identity = check_energy_identity(solution)
    result = {
        "scattering_length": solution.scattering_length,
        "tail_rel_error": solution.tail_rel_error,
        "identity": {
            "integral": identity.integral,
            "expected": identity.expected,
            "residual": identity.residual,
            "tail_correction": identity.tail_correction,
        },
        "grid": {
            "n_points": int(len(solution.r)),
            "r_max": solution.r_max,
            "hard_core": params["potential"].hard_core,
            "range": params["potential"].support,
        },
    }
    report = [f"scattering length a_v = {solution.scattering_length:.12g}",
              f"energy identity residual = {identity.residual:.3e}",
              f"tail fit error = {solution.tail_rel_error:.3e}"]
    if params["pair_cutoff"] is not None:
        pair = make_pair_function(solution, params["pair_cutoff"])
        result["pair"] = {"cutoff": pair.cutoff,
                          "pair_energy": pair.pair_energy,
                          "normalization": pair.phi_b}
        report.append(f"pair energy at b = {pair.cutoff:g}: "
                      f"{pair.pair_energy:.12g}")
    return result, {}, report


def _run_energy(config: RunConfig):
    params = config.parameters
    a = params["scattering_length"]
    if params["potential"] is not None:
        a = solve_zero_energy(params["potential"]).scattering_length
    if a is None:
        a = 0.0
    if params["bose"]:
        branch = "bose"
        breakdown = bose_energy_density(params["rho"], a,
                                        include_lhy=params["lhy"])
        q_out = ""
    else:
        branch = "fermi"
        gas = GasParameters(rho=params["rho"], q=params["q"],
                            scattering_length=a, rho_up=params["rho_up"],
                            rho_down=params["rho_down"])
        breakdown = fermi_energy_density(gas)
        q_out = params["q"]
    result = {
        "branch": branch,
        "rho": params["rho"],
        "scattering_length": a,
        "free_term": breakdown.free_term,
        "interaction_term": breakdown.interaction_term,
        "lhy_term": breakdown.lhy_term,
        "total": breakdown.total,
        "diluteness": breakdown.diluteness,
        "diluteness_warning": breakdown.diluteness_warning,
    }
    if branch == "fermi":
        result["q"] = params["q"]
    header = ["branch", "rho", "q", "scattering_length", "free_term",
              "interaction_term", "lhy_term", "total", "diluteness"]
    row = [branch, params["rho"], q_out, a, breakdown.free_term,
           breakdown.interaction_term, breakdown.lhy_term, breakdown.total,
           breakdown.diluteness]
    report = [f"{branch} energy density at rho = {params['rho']:g}: "
              f"total = {breakdown.total:.12g} "
              f"(free {breakdown.free_term:.12g}, interaction "
              f"{breakdown.interaction_term:.12g})"]
    if breakdown.diluteness_warning:
        report.append(f"warning: diluteness rho a^3 = "
                      f"{breakdown.diluteness:.3g} is outside the dilute "
                      f"regime")
    return result, {"energy.csv": (header, [row])}, report


def _run_dyson_check(config: RunConfig):
    params = config.parameters
    shell = make_soft_shell(params["shell_inner"], params["shell_outer"])
    if params["mode"] == "radial":
        report_obj = dyson_gap_radial(params["potential"], shell,
                                      l_max=params["l_max"],
                                      n_elements=params["n_elements"],
                                      tol=params["tol"])
        rows = [(l, float(value))
                for l, value in enumerate(report_obj.min_eigenvalues)]
        result = {
            "mode": "radial",
            "certified": report_obj.certified,
            "tol": report_obj.tol,
            "scattering_length": report_obj.scattering_length,
            "radius": report_obj.radius,
            "channels": [{"l": l, "min_eigenvalue": value}
                         for l, value in rows],
        }
        table = {"gap_table.csv": (["channel_l", "min_eigenvalue"], rows)}
        lines = [f"l = {l}: min eigenvalue {value:.6e}" for l, value in rows]
    else:
        potential = params["potential"]
        if potential.hard_core > 0:
            potential = regularize_hard_core(potential,
                                             params["regularize_height"])
        cutoff = gaussian_cutoff(params["cutoff_scale"])
        grid = BoxGrid(params["side"], params["grid_points"])
        cases = []
        for eps in params["eps"]:
            gap = generalized_dyson_gap(potential, shell, cutoff, eps, grid,
                                        tol_factor=params["tol_factor"])
            cases.append(gap)
        rows = [(case.eps, case.gap, case.residual, case.pointwise_floor,
                 case.certified) for case in cases]
        result = {
            "mode": "generalized",
            "certified": all(case.certified for case in cases),
            "scattering_length": cases[0].scattering_length,
            "cases": [{"eps": case.eps, "gap": case.gap,
                       "residual": case.residual,
                       "pointwise_floor": case.pointwise_floor,
                       "tol": case.tol, "certified": case.certified}
                      for case in cases],
        }
        table = {"gap_table.csv": (["eps", "gap", "residual",
                                    "pointwise_floor", "certified"], rows)}
        lines = [f"eps = {case.eps:g}: gap {case.gap:.6e} "
                 f"(tol {case.tol:.1e}) "
                 f"{'certified' if case.certified else 'NOT certified'}"
                 for case in cases]
    lines.append(f"certification: "
                 f"{'pass' if result['certified'] else 'FAIL'}")
    return result, table, lines


def _mixed_orbitals(count: int, seed: int,
                    quadrature: BoxQuadrature) -> OrbitalSet:
    """Non-orthogonal test orbitals: sine modes plus a seeded admixture."""
    base = sine_orbitals(count + 2, quadrature.side, quadrature)
    rng = np.random.default_rng(seed)
    mix = np.eye(count, count + 2) + 0.3 * rng.uniform(
        -1.0, 1.0, (count, count + 2))

    def evaluator(points):
        return base.values(points) @ mix.T

    return OrbitalSet(n=count, evaluator=evaluator, quadrature=quadrature,
                      label="mixed orbitals")


def _permutation_norm(entries: np.ndarray) -> float:
    """Antisymmetrized squared norm by the literal double permutation sum."""
    n = len(entries)
    indices = list(range(n))
    total = 0.0
    for sigma in itertools.permutations(indices):
        sign_sigma = _permutation_sign(sigma)
        for tau in itertools.permutations(indices):
            product = sign_sigma * _permutation_sign(tau)
            for i in indices:
                product *= entries[sigma[i], tau[i]]
            total += product
    return total / math.factorial(n)


def _permutation_sign(perm) -> int:
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        pos = start
        while not seen[pos]:
            seen[pos] = True
            pos = perm[pos]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _run_slater_check(config: RunConfig):
    params = config.parameters
    quadrature = BoxQuadrature(params["side"], params["quadrature_points"])
    oracles = []
    for count in (2, 3, 4):
        orbitals = _mixed_orbitals(count, params["scan_seed"] + count,
                                   quadrature)
        overlap = overlap_matrix(orbitals)
        fast = slater_norm(overlap)
        brute = _permutation_norm(overlap.entries)
        error = abs(fast - brute) / abs(brute)
        oracles.append({"name": f"norm_vs_permutation_sum_n{count}",
                        "max_error": error, "tolerance": 1e-10,
                        "passed": error < 1e-10})
    orbitals = _mixed_orbitals(3, params["scan_seed"] + 3, quadrature)
    kernel = make_correlation_kernel(orbitals)
    norm = slater_norm(kernel.overlap)
    point_values = orbitals.values(quadrature.points)
    probe = np.array([[0.31, 0.47, 0.36], [0.62, 0.24, 0.55]]) \
        * params["side"]
    probe_values = orbitals.values(probe)
    stacked = np.empty((len(quadrature.points), 3, 3))
    stacked[:, :2, :] = probe_values[None, :, :]
    stacked[:, 2, :] = point_values
    dets = np.linalg.det(stacked)
    brute_pair = float(quadrature.weights @ dets ** 2) / norm
    fast_pair = m_particle_density(kernel, probe)
    error = abs(fast_pair - brute_pair) / abs(brute_pair)
    oracles.append({"name": "pair_density_vs_marginalization_n3",
                    "max_error": error, "tolerance": 1e-8,
                    "passed": error < 1e-8})
    k_pp = float(kernel.diagonal(probe[:1])[0])
    k_qq = kernel.diagonal(quadrature.points)
    k_pq = kernel.evaluate(probe[:1], quadrature.points)[0]
    pair_slice = k_pp * k_qq - np.abs(k_pq) ** 2
    integrated = float(quadrature.integrate(pair_slice))
    expected = (3 - 1) * k_pp
    error = abs(integrated - expected) / abs(expected)
    oracles.append({"name": "density_hierarchy_n3",
                    "max_error": error, "tolerance": 1e-10,
                    "passed": error < 1e-10})

    centers = separated_centers(params["centers"], params["separation"],
                                params["side"], seed=params["scan_seed"],
                                periodic=False)
    base = sine_orbitals(params["orbital_count"], params["side"], quadrature)
    scan = key_estimate_scan(base, centers, params["separation"],
                             params["ratios"], params["cutoff"])
    norms = [row.deviation_norm for row in scan]
    decreasing = all(a > b for a, b in zip(norms, norms[1:]))
    rows = [(row.ratio, row.scattering_length, row.deviation_norm)
            for row in scan]
    result = {
        "oracles": oracles,
        "scan": {
            "ratios": [row.ratio for row in scan],
            "scattering_lengths": [row.scattering_length for row in scan],
            "deviation_norms": norms,
            "strictly_decreasing": decreasing,
        },
        "passed": decreasing and all(o["passed"] for o in oracles),
    }
    lines = [f"{o['name']}: error {o['max_error']:.3e} "
             f"{'pass' if o['passed'] else 'FAIL'}" for o in oracles]
    lines.extend(f"ratio {row.ratio:g}: a_v = {row.scattering_length:g}, "
                 f"|I - M| = {row.deviation_norm:.6e}" for row in scan)
    lines.append(f"deviation norms strictly decreasing: "
                 f"{'yes' if decreasing else 'NO'}")
    lines.append(f"overall: {'pass' if result['passed'] else 'FAIL'}")
    table = {"key_estimate.csv": (["ratio", "scattering_length",
                                   "deviation_norm"], rows)}
    return result, table, lines


def _run_vmc(config: RunConfig):
    params = config.parameters
    potential = params["potential"]
    n_up, n_down, side = params["n_up"], params["n_down"], params["side"]
    trivial = potential.hard_core == 0.0 and potential.support == 0.0
    default_b, default_s = default_cutoffs(n_up, n_down, side)
    scattering_length = 0.0
    if trivial:
        pair = PairFunction.unit()
        if params["ramp_end"] is None:
            jastrow = JastrowFactor.unit()
        else:
            jastrow = make_jastrow(params["ramp_start"] or 0.0,
                                   params["ramp_end"])
    else:
        solution = solve_zero_energy(potential)
        scattering_length = solution.scattering_length
        if n_down > 0:
            cutoff = params["pair_cutoff"] or default_b
            pair = make_pair_function(solution, cutoff)
        else:
            pair = PairFunction.unit()
        start = params["ramp_start"]
        if start is None:
            start = potential.support
        jastrow = make_jastrow(start, params["ramp_end"] or default_s)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        state = make_trial_state(n_up, n_down, side, potential, pair,
                                 jastrow)
    state_warnings = sorted(str(w.message) for w in caught)
    runs = [vmc_upper_bound(state, steps=params["steps"], seed=chain_seed,
                            step_size=params["step_size"],
                            equilibration=params["equilibration"],
                            record_every=params["record_every"])
            for chain_seed in params["seeds"]]
    count = len(runs)
    energy = sum(r.energy for r in runs) / count
    error = math.sqrt(sum(r.error ** 2 for r in runs)) / count
    acceptance = sum(r.acceptance_rate for r in runs) / count
    volume = side ** 3
    gas = GasParameters(rho=state.total / volume, q=2,
                        scattering_length=scattering_length,
                        rho_up=n_up / volume, rho_down=n_down / volume)
    breakdown = fermi_energy_density(gas)
    result = {
        "energy": energy,
        "error": error,
        "acceptance": acceptance,
        "e0_finite": state.e0_finite,
        "interaction_correction": energy - state.e0_finite,
        "scattering_length": scattering_length,
        "predicted": {
            "energy_density": breakdown.total,
            "total_energy": breakdown.total * volume,
            "free_term_density": breakdown.free_term,
            "interaction_term_density": breakdown.interaction_term,
            "interaction_total": breakdown.interaction_term * volume,
            "diluteness": breakdown.diluteness,
        },
        "state": {
            "n_up": n_up, "n_down": n_down, "side": side,
            "rho": state.density,
            "pair_cutoff": pair.cutoff,
            "ramp_start": jastrow.start, "ramp_end": jastrow.finish,
        },
        "runs": [{"seed": r.seed, "energy": r.energy, "error": r.error,
                  "acceptance": r.acceptance_rate, "samples": r.samples,
                  "step_size": r.step_size, "block_size": r.block_size}
                 for r in runs],
        "warnings": state_warnings,
    }
    rows = []
    for r in runs:
        rows.extend((r.seed, index, float(value))
                    for index, value in enumerate(r.block_means))
    table = {"block_means.csv": (["seed", "block_index", "block_mean"],
                                 rows)}
    lines = [f"E = {energy:.10g} +/- {error:.3g} "
             f"(acceptance {acceptance:.3f})",
             f"E0_finite = {state.e0_finite:.10g}, interaction correction "
             f"= {energy - state.e0_finite:.6g}",
             f"predicted total from the density expansion = "
             f"{breakdown.total * volume:.10g}"]
    lines.extend(f"note: {message}" for message in state_warnings)
    return result, table, lines


_DISPATCH = {
    "scatter": _run_scatter,
    "energy": _run_energy,
    "dyson-check": _run_dyson_check,
    "slater-check": _run_slater_check,
    "vmc": _run_vmc,
}


def _apply_thread_limit(threads: int):
    """Cap BLAS pools; results are independent of the thread count."""
    try:
        import threadpoolctl
    except ModuleNotFoundError:
        return None
    return threadpoolctl.threadpool_limits(threads)


def run(config: RunConfig) -> int:
    """Dispatch a validated config and write its artifacts.

    The JSON summary and CSV tables land in the output directory; module
    errors are serialized into the summary with exit status 1.
    """
    config.output.mkdir(parents=True, exist_ok=True)
    summary_path = config.output / f"{config.subcommand}.json"
    base = {"schema_version": SCHEMA_VERSION, "units": UNITS,
            "subcommand": config.subcommand, "seed": config.seed}
    _apply_thread_limit(config.threads)
    try:
        result, tables, report = _DISPATCH[config.subcommand](config)
    except (ValueError, RuntimeError, ArithmeticError,
            np.linalg.LinAlgError) as exc:
        base["error"] = str(exc)
        _write_json(summary_path, base)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    base["result"] = result
    _write_json(summary_path, base)
    for name, (header, rows) in tables.items():
        _write_csv(config.output / name, header, rows)
    for line in report:
        print(line)
    if config.verbosity > 0:
        written = [summary_path.name, *tables]
        print(f"wrote {', '.join(written)} to {config.output}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dilutefermi",
        description="Dilute Fermi gas toolkit: scattering, energy "
                    "expansion, operator certification, overlap checks, "
                    "and variational Monte Carlo.")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    descriptions = {
        "scatter": "zero-energy scattering length and identity residuals",
        "energy": "dilute expansion of the ground-state energy density",
        "dyson-check": "certify the soft-shell operator bounds",
        "slater-check": "overlap oracles and the dressed-determinant scan",
        "vmc": "variational upper bound for the boxed two-species gas",
    }
    for name in SUBCOMMANDS:
        sub = subparsers.add_parser(name, help=descriptions[name])
        sub.add_argument("config", type=Path,
                         help="TOML config for this run")
        sub.add_argument("--seed", type=int, default=None,
                         help="override the config seed")
        sub.add_argument("--threads", type=int, default=None,
                         help="cap worker threads (DILUTEFERMI_THREADS "
                              "overrides)")
        sub.add_argument("--out", type=str, default=None,
                         help="output directory for JSON/CSV artifacts")
        sub.add_argument("-v", "--verbose", action="count", default=0,
                         help="list written artifacts")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        text = args.config.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"config: {exc}", file=sys.stderr)
        return 2
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    env_threads = os.environ.get("DILUTEFERMI_THREADS")
    if env_threads is not None:
        try:
            overrides["threads"] = int(env_threads)
        except ValueError:
            print(f"config: DILUTEFERMI_THREADS must be an integer, got "
                  f"{env_threads!r}", file=sys.stderr)
            return 2
    if args.out is not None:
        overrides["output"] = args.out
    if args.verbose:
        overrides["verbosity"] = args.verbose
    try:
        config = parse_config(text, subcommand=args.subcommand,
                              overrides=overrides,
                              base_dir=args.config.parent)
    except ConfigError as exc:
        for message in exc.errors:
            print(f"config: {message}", file=sys.stderr)
        return 2
    return run(config)
