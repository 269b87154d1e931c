"""Bundled parameter sets that regenerate the data behind each figure.

Each recipe writes CSV tables into an output directory and returns their paths.
Amplitudes and couplings carry forward-picture labels: ``alpha`` and ``lambda_a``
belong to the pumped mode whichever direction the pump comes from.
Model-key overrides replace the recipe's own values; ``n_a``/``n_b`` set the Fock
truncation of the full quantum recipes.
"""

from __future__ import annotations

import math
import time
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from . import criticality, fluctuations, lindblad, meanfield, stability
from .errors import DualJCError, UnknownFigureError
from .model import ModelParams, PumpDirection, params_from_mapping
from .serialize import manifest, write_csv, write_json, write_wigner

BASE = {"delta": "2", "sagnac": "1", "delta_q": "1e4", "kappa": "0.1"}
OPTION_KEYS = ("n_a", "n_b")


def _params(overrides: Mapping[str, str], **fixed) -> ModelParams:
    values = dict(BASE)
    values.update({k: str(v) for k, v in fixed.items()})
    values.update({k: v for k, v in overrides.items() if k not in OPTION_KEYS})
    return params_from_mapping(values)


def _or_nan(func: Callable[[], float]) -> float:
    try:
        return func()
    except DualJCError:
        return math.nan


def _coupling_map(p: ModelParams, axis: np.ndarray):
    for la in axis:
        for lb in axis:
            q = p.with_lambdas(float(la), float(lb))
            sol = meanfield.physical_solution(q)
            a, b = sol.alpha, sol.beta
            yield la, lb, sol.phase, a.real, a.imag, b.real, b.imag


MAP_HEADER = ("lambda_a", "lambda_b", "phase", "alpha_re", "alpha_im", "beta_re", "beta_im")
DIRECTIONS = (("forward", PumpDirection.FORWARD), ("backward", PumpDirection.BACKWARD))


def fig1(out: Path, overrides: Mapping[str, str]) -> list[Path]:
    """Phase boundaries in the coupling plane at G = 1.5 kappa for both pump directions."""
    paths = []
    lam_a = np.linspace(0.0, 3.0, 301)
    for name, direction in DIRECTIONS:
        p = _params(overrides, G_over_kappa=1.5, lambda_a=1.0, pump_direction=direction.value)
        chi = _or_nan(lambda: criticality.chi_crit(p))
        rows = []
        for x in lam_a:
            lo = _or_nan(lambda: criticality.lambda_b_boundary_2nd(p, float(x)))
            hi = _or_nan(lambda: criticality.lambda_b_boundary_2nd(p, float(x), upper=True))
            rows.append((x, chi * x, lo, hi))
        paths.append(write_csv(out / f"fig1_{name}_boundaries.csv",
                               ("lambda_a", "lambda_b_first", "lambda_b_second_lower",
                                "lambda_b_second_upper"), rows))
        paths.append(write_csv(out / f"fig1_{name}_map.csv", MAP_HEADER,
                               _coupling_map(p, np.linspace(0.0, 3.0, 61))))
    return paths


def fig2(out: Path, overrides: Mapping[str, str]) -> list[Path]:
    """Order parameters against pump strength and the four critical pumps."""
    paths, crit = [], []
    pumps = np.linspace(0.01, 5.0, 500)
    for lam, order in ((1.5, "first"), (1.36, "second")):
        for name, direction in DIRECTIONS:
            p = _params(overrides, lambda_a=lam, pump_direction=direction.value)
            rows = []
            for g in pumps:
                q = p.replace(pump_strength=float(g) * p.kappa)
                sol = meanfield.physical_solution(q)
                a, b = sol.alpha, sol.beta
                rows.append((g, sol.branch, a.real, a.imag, b.real, b.imag))
            paths.append(write_csv(out / f"fig2_{name}_lambda{lam:g}.csv",
                                   ("G_over_kappa", "branch", "alpha_re", "alpha_im", "beta_re",
                                    "beta_im"), rows))
            crit.append((name, lam, order, criticality.critical_pump(p, order).over_kappa))
    paths.append(write_csv(out / "fig2_critical.csv",
                           ("direction", "lambda", "order", "G_c_over_kappa"), crit))
    return paths


FIG3_DIAGRAMS = (("static", 0.0, PumpDirection.FORWARD), ("forward", None, PumpDirection.FORWARD),
                 ("backward", None, PumpDirection.BACKWARD))
FIG3_WIGNER = (("I", 1.0, 1.1), ("II1", 1.42, 4.0))


def fig3(out: Path, overrides: Mapping[str, str]) -> list[Path]:
    """Regime diagrams, their special points and reduced-detuning Wigner functions."""
    paths, points = [], []
    lambdas = np.linspace(0.2, 2.6, 120)
    pumps_k = np.linspace(0.0, 3.2, 121)[1:]
    for name, sagnac, direction in FIG3_DIAGRAMS:
        fixed = {"lambda_a": 1.0, "pump_direction": direction.value}
        if sagnac is not None:
            fixed["sagnac"] = sagnac
        p = _params(overrides, **fixed)
        diagram = fluctuations.fluctuation_phase_diagram(p, lambdas, pumps_k * p.kappa)
        paths.append(write_csv(out / f"fig3_{name}.csv",
                               ("lambda", "G_over_kappa", "regime", "n_c", "n_d", "stable_count"),
                               diagram.rows()))
        points.append((name, "tricritical", criticality.lambda_tricritical(p),
                       criticality.g_crit_first(p).over_kappa))
        for j in fluctuations.multicritical_points(diagram, p):
            points.append((name, "multicritical", j.lam, j.pump / p.kappa))
    paths.append(write_csv(out / "fig3_points.csv", ("diagram", "kind", "lambda", "G_over_kappa"),
                           points))
    n_a = int(overrides.get("n_a", 16))
    n_b = int(overrides.get("n_b", n_a))
    for regime, lam, gk in FIG3_WIGNER:
        q = _params(overrides, lambda_a=lam, G_over_kappa=gk, delta_q=50, gamma=0.1)
        result = lindblad.solve(q, lindblad.FockSpec(n_a, n_b))
        paths.append(write_wigner(out / f"fig3_wigner_{regime}.csv",
                                  lindblad.wigner(lindblad.reduce_mode(result, "a"))))
    return paths


def figS1(out: Path, overrides: Mapping[str, str]) -> list[Path]:
    """Order parameters over the coupling plane for both pump directions."""
    return [write_csv(out / f"figS1_{name}.csv", MAP_HEADER,
                      _coupling_map(_params(overrides, G_over_kappa=1.5, lambda_a=1.0,
                                            pump_direction=direction.value),
                                    np.linspace(0.0, 3.0, 61)))
            for name, direction in DIRECTIONS]


def figS2(out: Path, overrides: Mapping[str, str]) -> list[Path]:
    """Critical pumps and the tricritical coupling against the Sagnac shift."""
    rows = []
    base = _params(overrides, lambda_a=1.36)
    for ratio in np.linspace(-0.95, 0.95, 39):
        p = base.replace(sagnac=float(ratio) * base.delta).with_lambdas(1.36)
        rows.append((ratio, criticality.g_crit_first(p).over_kappa,
                     criticality.g_crit_second(p).over_kappa,
                     criticality.lambda_tricritical(p) - math.sqrt(2),
                     criticality.lambda_tricritical_approx(p) - math.sqrt(2)))
    return [write_csv(out / "figS2.csv", ("sagnac_over_delta", "g_c1_over_kappa",
                                          "g_c2_over_kappa_lambda1.36", "lambda_tric_minus_sqrt2",
                                          "lambda_tric_approx_minus_sqrt2"), rows)]


def figS3(out: Path, overrides: Mapping[str, str]) -> list[Path]:
    """Stability maps of the normal state, the Z+ branch and their combination."""
    paths = []
    lambdas = np.linspace(0.2, 2.6, 80)
    for name, direction in DIRECTIONS:
        p = _params(overrides, lambda_a=1.0, pump_direction=direction.value)
        pumps = np.linspace(0.0, 3.2, 81)[1:] * p.kappa
        for branch in (stability.MapBranch.NORMAL, stability.MapBranch.Z_PLUS,
                       stability.MapBranch.COMBINED):
            m = stability.stability_map(p, lambdas, pumps, branch)
            paths.append(write_csv(out / f"figS3_{name}_{branch.value}.csv",
                                   ("lambda", "G_over_kappa", "status", "spectral_abscissa"),
                                   m.rows(p.kappa)))
    return paths


def figS6(out: Path, overrides: Mapping[str, str]) -> list[Path]:
    """Effect of intermode hopping on the order parameter and on the fluctuations."""
    paths = []
    for jk in (0.0, 1.0, 2.0):
        p = _params(overrides, lambda_a=1.0, G_over_kappa=1.5)
        p = p.replace(hopping=jk * p.kappa)
        paths.append(write_csv(out / f"figS6_map_J{jk:g}.csv", MAP_HEADER,
                               _coupling_map(p, np.linspace(0.0, 3.0, 61))))
        d = fluctuations.fluctuation_phase_diagram(p, np.linspace(0.2, 2.6, 60),
                                                   np.linspace(0.0, 3.2, 61)[1:] * p.kappa)
        paths.append(write_csv(out / f"figS6_fluctuations_J{jk:g}.csv",
                               ("lambda", "G_over_kappa", "regime", "n_c", "n_d", "stable_count"),
                               d.rows()))
    return paths


def figS7(out: Path, overrides: Mapping[str, str]) -> list[Path]:
    """Full quantum photon number against pump at two atomic detunings, with the
    infinite-detuning fluctuation result."""
    n_a = int(overrides.get("n_a", 18))
    n_b = int(overrides.get("n_b", n_a))
    fock = lindblad.FockSpec(n_a, n_b)
    base = _params(overrides, sagnac=0, lambda_a=1.4, gamma=0.1, hopping=0.1,
                   thermal_occupation=7.4e-3)
    rows = []
    for g in np.linspace(0.01, 0.13, 7):
        row = [g]
        for ratio in (25, 50):
            q = _params(overrides, sagnac=0, lambda_a=1.4, gamma=0.1, hopping=0.1,
                        thermal_occupation=7.4e-3, pump_strength=g, delta_q=ratio * base.delta)
            row.append(_or_nan(lambda: lindblad.solve(q, fock).photons_a))
        limit = base.replace(pump_strength=float(g))
        row.append(_or_nan(lambda: fluctuations.steady_correlators(
            fluctuations.np_system(limit)).n_c))
        rows.append(row)
    return [write_csv(out / "figS7.csv", ("G", "n_a_dq25", "n_a_dq50", "n_a_limit"), rows)]


RECIPES: dict[str, Callable[[Path, Mapping[str, str]], list[Path]]] = {
    "fig1": fig1, "fig2": fig2, "fig3": fig3, "figS1": figS1, "figS2": figS2,
    "figS3": figS3, "figS6": figS6, "figS7": figS7,
}


def reproduce(figure: str, out: str | Path, overrides: Mapping[str, str] | None = None) -> list[Path]:
    """Run a recipe and write ``<figure>_manifest.json`` next to its tables."""
    if figure not in RECIPES:
        raise UnknownFigureError(f"unknown figure {figure!r}; known: {', '.join(RECIPES)}")
    out = Path(out)
    overrides = dict(overrides or {})
    t0 = time.perf_counter()
    paths = RECIPES[figure](out, overrides)
    write_json(out / f"{figure}_manifest.json",
               manifest({"figure": figure, "overrides": overrides}, time.perf_counter() - t0,
                        len(paths), [], paths))
    return paths
