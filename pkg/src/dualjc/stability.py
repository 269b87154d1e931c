"""Linear stability of mean-field fixed points.

Fluctuations are collected as (d Re alpha, d Im alpha, d Re beta, d Im beta, dX, dY);
dZ is removed with the linearised spin-length constraint. The spin rows scale with
the atomic detuning, so maps are computed at a large explicit ``delta_q``
(1e4 by default, through the parameters passed in).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ZeroInversionError
from .meanfield import Branch, MeanFieldSolution, steady_states
from .model import ModelParams, forward_form

STABILITY_TOL = 1e-9
DEFAULT_DELTA_Q = 1e4


class Status(str, enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"
    NO_SOLUTION = "no_solution"


class MapBranch(str, enum.Enum):
    NORMAL = "normal"
    Z_PLUS = "z_plus"
    Z_MINUS = "z_minus"
    COMBINED = "combined"


@dataclass(frozen=True)
class StabilityReport:
    eigenvalues: np.ndarray
    spectral_abscissa: float
    stable: bool
    marginal: bool
    branch: Branch | None = None

    @property
    def status(self) -> Status:
        if self.stable:
            return Status.STABLE
        return Status.MARGINAL if self.marginal else Status.UNSTABLE


def build_m(params: ModelParams, solution: MeanFieldSolution) -> np.ndarray:
    """6x6 real drift of small deviations around ``solution``."""
    f = forward_form(params)
    x, y, z = solution.spin.x, solution.spin.y, solution.spin.z
    if z == 0:
        raise ZeroInversionError("Z = 0 at the fixed point")
    a, b = solution.alpha, solution.beta
    dp, dm, k, g, la, lb, dq = f.d_plus, f.d_minus, f.kappa, f.pump, f.lambda_a, f.lambda_b, f.delta_q
    jp = f.hopping * math.sqrt(dp / dm)
    jm = f.hopping * math.sqrt(dm / dp)
    si = la * a.imag + lb * b.imag
    sr = la * a.real + lb * b.real
    return np.array([
        [-k, dp - 2 * g, 0, jp, 0, -la * dp / 4],
        [-(dp + 2 * g), -k, -jp, 0, -la * dp / 4, 0],
        [0, jm, -k, dm, 0, -lb * dm / 4],
        [-jm, 0, -dm, -k, -lb * dm / 4, 0],
        [0, -la * dq * z, 0, -lb * dq * z, x / z * dq * si, dq * (-1 + y / z * si)],
        [-la * dq * z, 0, -lb * dq * z, 0, dq * (1 + x / z * sr), dq * y / z * sr],
    ])


def assess(matrix: np.ndarray, branch: Branch | None = None,
           tol: float = STABILITY_TOL) -> StabilityReport:
    ev = np.linalg.eigvals(np.asarray(matrix))
    sa = float(np.max(ev.real))
    return StabilityReport(ev, sa, sa < -tol, abs(sa) <= tol, branch)


def solution_reports(params: ModelParams) -> list[tuple[MeanFieldSolution, StabilityReport]]:
    """Every fixed point from :func:`steady_states` with its stability report."""
    return [(sol, assess(build_m(params, sol), sol.branch)) for sol in steady_states(params)]


def branch_reports(params: ModelParams) -> dict[Branch, StabilityReport]:
    """Stability of the normal state and of each existing SP branch (first root per label)."""
    out: dict[Branch, StabilityReport] = {}
    for sol, rep in solution_reports(params):
        out.setdefault(sol.branch, rep)
    return out


def stable_solution_count(params: ModelParams) -> int:
    """Number of stable fixed points; each SP root counts twice (parity pair)."""
    return sum((1 if sol.branch is Branch.NORMAL else 2)
               for sol, rep in solution_reports(params) if rep.stable)


@dataclass(frozen=True)
class StabilityMap:
    lambdas: np.ndarray
    pumps: np.ndarray
    branch: MapBranch
    abscissa: np.ndarray
    status: np.ndarray

    def rows(self, kappa: float):
        """Row-major records (lambda, G/kappa, status, abscissa)."""
        for i, g in enumerate(self.pumps):
            for j, lam in enumerate(self.lambdas):
                yield lam, g / kappa, self.status[i, j], self.abscissa[i, j]


def cell_status(params: ModelParams, branch: MapBranch) -> tuple[float, Status]:
    reps = branch_reports(params)
    if branch is MapBranch.COMBINED:
        picked = [r for b, r in reps.items() if b in (Branch.NORMAL, Branch.Z_PLUS)]
        if any(r.stable for r in picked):
            return min(r.spectral_abscissa for r in picked), Status.STABLE
        best = min(picked, key=lambda r: r.spectral_abscissa)
        return best.spectral_abscissa, best.status
    key = {MapBranch.NORMAL: Branch.NORMAL, MapBranch.Z_PLUS: Branch.Z_PLUS,
           MapBranch.Z_MINUS: Branch.Z_MINUS}[branch]
    rep = reps.get(key)
    if rep is None:
        return math.nan, Status.NO_SOLUTION
    return rep.spectral_abscissa, rep.status


def stability_map(params: ModelParams, lambdas: Sequence[float], pumps: Sequence[float],
                  branch: MapBranch | str = MapBranch.COMBINED) -> StabilityMap:
    """Stability over an equal-coupling / pump grid (rows follow ``pumps``).

    The combined map counts a cell stable when the normal state or the Z+ branch is
    stable; the Z- branch is left out of it.
    """
    branch = MapBranch(branch)
    lambdas = np.asarray(lambdas, dtype=float)
    pumps = np.asarray(pumps, dtype=float)
    absc = np.full((len(pumps), len(lambdas)), np.nan)
    status = np.empty((len(pumps), len(lambdas)), dtype=object)
    for i, g in enumerate(pumps):
        row = params.replace(pump_strength=float(g))
        for j, lam in enumerate(lambdas):
            absc[i, j], status[i, j] = cell_status(row.with_lambdas(float(lam)), branch)
    return StabilityMap(lambdas, pumps, branch, absc, status)
