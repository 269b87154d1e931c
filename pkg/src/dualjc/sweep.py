"""Parameter sweeps over any model quantity, with per-cell error isolation.

A sweep config is an INI file::

    [sweep]
    task = fluctuations        ; meanfield, critical, fluctuations, stability, lindblad, sagnac
    output = out/diagram       ; writes out/diagram.csv and out/diagram.json
    workers = 4                ; optional, defaults to the number of cores

    [axis:lambda]              ; one section per axis, first axis varies slowest
    min = 0.2
    max = 2.6
    count = 120
    scale = linear             ; or log

    [model]                    ; fixed values, same keys as the model section
    delta = 2
    ...

    [options]                  ; task options (branch for stability, n_a and n_b for lindblad)

Axis names are model keys (including ``lambda``, ``lambda_a``, ``lambda_b`` and
``G_over_kappa``) or, for the ``sagnac`` task, physical-setup keys.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import criticality, fluctuations, lindblad, meanfield, stability
from .errors import ConfigError, DualJCError
from .model import (
    LAMBDA_KEYS,
    MODEL_FIELDS,
    PHYSICAL_FIELDS,
    intrinsic_loss,
    params_from_mapping,
    physical_from_mapping,
    sagnac_shift,
)
from .serialize import manifest, write_csv, write_json

ENV_PREFIX = "DUALJC_"
SWEEP_KEYS = ("task", "output", "workers")
OPTION_KEYS = ("branch", "n_a", "n_b")
MODEL_KEYS = MODEL_FIELDS + LAMBDA_KEYS + ("G_over_kappa",)


# cell tasks -----------------------------------------------------------------------

def _meanfield_cell(values: Mapping[str, str], options: Mapping[str, str]) -> list:
    p = params_from_mapping(values)
    roots = meanfield.steady_states(p)
    s = meanfield.physical_solution(p)
    return [s.branch, s.phase, s.alpha.real, s.alpha.imag, s.beta.real, s.beta.imag,
            s.spin.x, s.spin.y, s.spin.z, meanfield.fixed_point_residual(p, s), len(roots)]


def _critical_cell(values: Mapping[str, str], options: Mapping[str, str]) -> list:
    p = params_from_mapping(values)
    la, lb = p.lambdas()
    first = criticality.g_crit_first_general(p).value
    if math.isclose(la, lb, rel_tol=1e-12):
        second = criticality.g_crit_second(p).value
    else:
        second = criticality.g_crit_second_numeric(p).value
    return [first / p.kappa, second / p.kappa, criticality.lambda_tricritical(p)]


def _fluctuations_cell(values: Mapping[str, str], options: Mapping[str, str]) -> list:
    c = fluctuations.analyse_cell(params_from_mapping(values))
    return [c.regime, c.stable_count, c.state, c.n_c, c.n_d, c.angle, c.note]


def _stability_cell(values: Mapping[str, str], options: Mapping[str, str]) -> list:
    p = params_from_mapping(values)
    branch = stability.MapBranch(options.get("branch", "combined"))
    absc, status = stability.cell_status(p, branch)
    return [status, absc, stability.stable_solution_count(p)]


def _lindblad_cell(values: Mapping[str, str], options: Mapping[str, str]) -> list:
    p = params_from_mapping(values)
    spec = lindblad.FockSpec(int(options.get("n_a", 12)), int(options.get("n_b", 12)))
    r = lindblad.solve(p, spec)
    return [r.photons_a, r.photons_b, r.sigma_z, r.parity, lindblad.squeezing_sx(r, "a"),
            r.diagnostics.top_population_a, r.diagnostics.top_population_b]


def _sagnac_cell(values: Mapping[str, str], options: Mapping[str, str]) -> list:
    setup = physical_from_mapping(values)
    return [sagnac_shift(setup), intrinsic_loss(setup)]


@dataclass(frozen=True)
class Task:
    columns: tuple[str, ...]
    run: Callable[[Mapping[str, str], Mapping[str, str]], list]
    keys: tuple[str, ...] = MODEL_KEYS


TASKS: dict[str, Task] = {
    "meanfield": Task(("branch", "phase", "alpha_re", "alpha_im", "beta_re", "beta_im",
                       "spin_x", "spin_y", "spin_z", "residual", "n_roots"), _meanfield_cell),
    "critical": Task(("g_c1_over_kappa", "g_c2_over_kappa", "lambda_tric"), _critical_cell),
    "fluctuations": Task(("regime", "stable_count", "state", "n_c", "n_d", "squeeze_angle", "note"),
                         _fluctuations_cell),
    "stability": Task(("status", "spectral_abscissa", "stable_count"), _stability_cell),
    "lindblad": Task(("n_a", "n_b", "sigma_z", "parity", "s_x", "top_population_a",
                      "top_population_b"), _lindblad_cell),
    "sagnac": Task(("sagnac_shift_hz", "intrinsic_loss_hz"), _sagnac_cell, PHYSICAL_FIELDS),
}


# parsing ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    count: int
    scale: str = "linear"

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.start])
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class SweepSpec:
    task: str
    axes: tuple[Axis, ...]
    fixed: dict[str, str]
    options: dict[str, str] = field(default_factory=dict)
    output: Path = Path("sweep")
    workers: int = 1

    def cells(self) -> list[dict[str, str]]:
        """Parameter mappings in row-major order over the axes."""
        grids = [ax.values() for ax in self.axes]
        out = []
        for combo in np.array(np.meshgrid(*grids, indexing="ij")).reshape(len(grids), -1).T:
            cell = dict(self.fixed)
            for ax, v in zip(self.axes, combo):
                cell[ax.name] = repr(float(v))
            out.append(cell)
        return out


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from exc


def parse_sweep(config: Mapping[str, Mapping[str, str]]) -> SweepSpec:
    head = dict(config.get("sweep", {}))
    task = head.get("task")
    if task not in TASKS:
        raise ConfigError(f"[sweep] task must be one of {sorted(TASKS)}, got {task!r}")
    keys = TASKS[task].keys
    stray = [n for n in config if n not in ("sweep", "model", "physical", "options")
             and not n.startswith("axis:")]
    if stray:
        raise ConfigError(f"unknown config sections: {stray}")
    fixed = dict(config.get("physical" if task == "sagnac" else "model", {}))
    axes = []
    for name, section in config.items():
        if not name.startswith("axis:"):
            continue
        axis_name = name.split(":", 1)[1].strip()
        if axis_name not in keys:
            raise ConfigError(f"axis {axis_name!r} is not a parameter of task {task!r}")
        try:
            ax = Axis(axis_name, float(section["min"]), float(section.get("max", section["min"])),
                      _parse_int(f"{name}.count", section.get("count", "1")),
                      section.get("scale", "linear"))
        except KeyError as exc:
            raise ConfigError(f"[{name}] is missing {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"[{name}]: {exc}") from exc
        if ax.count < 1 or ax.scale not in ("linear", "log"):
            raise ConfigError(f"[{name}] needs count >= 1 and scale linear or log")
        if ax.scale == "log" and min(ax.start, ax.stop) <= 0:
            raise ConfigError(f"[{name}] log axes need positive bounds")
        axes.append(ax)
    if not axes:
        raise ConfigError("a sweep needs at least one [axis:<name>] section")
    options = dict(config.get("options", {}))
    unknown = set(options) - set(OPTION_KEYS)
    if unknown:
        raise ConfigError(f"unknown task options: {sorted(unknown)}")
    workers = _parse_int("workers", head.get("workers", str(os.cpu_count() or 1)))
    return SweepSpec(task, tuple(axes), fixed, options, Path(head.get("output", "sweep")),
                     max(1, workers))


def _route(key: str) -> tuple[str, str]:
    """Section that a flat override key belongs to."""
    if "." in key:
        section, name = key.split(".", 1)
        return section, name
    if key in SWEEP_KEYS:
        return "sweep", key
    if key in OPTION_KEYS:
        return "options", key
    if key in PHYSICAL_FIELDS:
        return "physical", key
    return "model", key


def env_overrides(environ: Mapping[str, str] | None = None) -> dict[str, str]:
    """``DUALJC_<KEY>=value`` pairs, keys matched case-insensitively."""
    environ = os.environ if environ is None else environ
    known = {k.lower(): k for k in SWEEP_KEYS + OPTION_KEYS + MODEL_KEYS + PHYSICAL_FIELDS}
    out = {}
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        key = name[len(ENV_PREFIX):].lower()
        if key not in known:
            raise ConfigError(f"environment variable {name} does not name a parameter")
        out[known[key]] = value
    return out


def apply_overrides(config: Mapping[str, Mapping[str, str]],
                    *layers: Mapping[str, str]) -> dict[str, dict[str, str]]:
    """Config with flat overrides merged in; later layers win."""
    out = {k: dict(v) for k, v in config.items()}
    for layer in layers:
        for key, value in layer.items():
            section, name = _route(key)
            out.setdefault(section, {})[name] = str(value)
    return out


# running ---------------------------------------------------------------------------

def _guarded(job: tuple[str, dict[str, str], dict[str, str]]) -> tuple[list | None, str | None]:
    task, values, options = job
    try:
        return TASKS[task].run(values, options), None
    except (DualJCError, ArithmeticError, ValueError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def parallel_map(func: Callable, items: Sequence, workers: int) -> list:
    """``map`` over a process pool; results come back in input order."""
    if workers <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    chunk = max(1, len(items) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items, chunksize=chunk))


@dataclass(frozen=True)
class SweepResult:
    header: tuple[str, ...]
    rows: list[list]
    errors: list[dict]
    wall_clock: float

    @property
    def exit_code(self) -> int:
        return 2 if self.errors else 0


def run_sweep(spec: SweepSpec) -> SweepResult:
    t0 = time.perf_counter()
    task = TASKS[spec.task]
    cells = spec.cells()
    outcomes = parallel_map(_guarded, [(spec.task, c, spec.options) for c in cells], spec.workers)
    header = tuple(ax.name for ax in spec.axes) + task.columns + ("error",)
    rows, errors = [], []
    for i, (cell, (values, err)) in enumerate(zip(cells, outcomes)):
        coords = [float(cell[ax.name]) for ax in spec.axes]
        if err is None:
            rows.append(coords + list(values) + [""])
        else:
            rows.append(coords + [None] * len(task.columns) + [err])
            errors.append({"cell": i, "axes": dict(zip((ax.name for ax in spec.axes), coords)),
                           "error": err})
    return SweepResult(header, rows, errors, time.perf_counter() - t0)


def write_sweep(spec: SweepSpec, result: SweepResult, config: Any) -> tuple[Path, Path]:
    csv_path = write_csv(spec.output.with_suffix(".csv"), result.header, result.rows)
    json_path = spec.output.with_suffix(".json")
    write_json(json_path, manifest(config, result.wall_clock, len(result.rows), result.errors,
                                   [csv_path], task=spec.task))
    return csv_path, json_path
