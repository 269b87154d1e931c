"""Critical pump strengths, phase boundaries and the tricritical coupling.

Closed forms are paired with numerical oracles that locate the same points by
root bracketing, so that each analytic expression can be checked independently.
Critical values are returned in the model frequency unit; ``CriticalPoint.over_kappa``
gives them in units of the cavity decay rate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import InvalidRegimeError, NoBoundaryError, NoRootError, OutOfWindowError
from .meanfield import z_discriminant
from .model import ForwardForm, ModelParams, PumpDirection, forward_form

BRACKET_POINTS = 64
BISECTION_XTOL = 1e-12


class Order(str, enum.Enum):
    FIRST = "first"
    SECOND = "second"


class Method(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    BISECTION = "bisection"


@dataclass(frozen=True)
class CriticalPoint:
    value: float
    order: Order
    direction: PumpDirection
    method: Method
    kappa: float

    @property
    def over_kappa(self) -> float:
        return self.value / self.kappa


@dataclass(frozen=True)
class BoundaryCurve:
    axis: str
    samples: tuple[tuple[float, float], ...]
    order: Order

    def as_array(self) -> np.ndarray:
        return np.array(self.samples, dtype=float).reshape(-1, 2)


@dataclass(frozen=True)
class Coefficients:
    """Shared shorthands of the boundary formulas."""

    d_plus: float
    d_minus: float
    u: float
    p: float
    q: float
    h1: float
    h2: float
    q1: float


def coefficients(params: ModelParams, lam: float | None = None) -> Coefficients:
    f = forward_form(params)
    la = f.lambda_a if lam is None else lam
    lb = f.lambda_b if lam is None else lam
    dp, dm, k, g = f.d_plus, f.d_minus, f.kappa, f.pump
    return Coefficients(
        d_plus=dp, d_minus=dm,
        u=dp * (dm**2 + k**2),
        p=la**2 - 2,
        q=k**2 - 2 * f.sagnac**2,
        h1=dp * (dm**2 + k**2) * la**2,
        h2=dm * (dp**2 - 4 * g**2 + k**2) * lb**2,
        q1=dp**2 - 4 * g**2 + k**2,
    )


def pump_window(params: ModelParams) -> tuple[float, float]:
    """Open interval of pump strengths for which the first-order ratio is real."""
    f = forward_form(params)
    return f.kappa / 2, math.sqrt(f.d_plus**2 + f.kappa**2) / 2


def _point(params: ModelParams, value: float, order: Order, method: Method) -> CriticalPoint:
    return CriticalPoint(value, order, params.pump_direction, method, params.kappa)


def _check_basics(f: ForwardForm) -> None:
    if f.d_minus <= 0:
        raise InvalidRegimeError("delta - sagnac must be positive")
    if f.kappa <= 0:
        raise InvalidRegimeError("closed forms need kappa > 0")


# first order ----------------------------------------------------------------------

def g_crit_first(params: ModelParams) -> CriticalPoint:
    """First-order critical pump for equal couplings; it does not depend on the coupling."""
    f = forward_form(params)
    _check_basics(f)
    if not math.isclose(f.lambda_a, f.lambda_b, rel_tol=1e-9, abs_tol=1e-12):
        raise InvalidRegimeError("equal couplings required; use g_crit_first_general")
    dp, dm, k = f.d_plus, f.d_minus, f.kappa
    u = dp * (dm**2 + k**2)
    value = (-u + math.sqrt((u + 2 * dm * k**2) ** 2 + 4 * dp**2 * dm**2 * k**2)) / (4 * k * dm)
    return _point(params, value, Order.FIRST, Method.CLOSED_FORM)


def g_crit_first_general(params: ModelParams) -> CriticalPoint:
    """First-order critical pump for unequal couplings. Diverges as lambda_b -> 0."""
    f = forward_form(params)
    _check_basics(f)
    dp, dm, k, la, lb = f.d_plus, f.d_minus, f.kappa, f.lambda_a, f.lambda_b
    if la <= 0:
        raise InvalidRegimeError("lambda_a must be positive")
    if lb == 0:
        return _point(params, math.inf, Order.FIRST, Method.CLOSED_FORM)
    w = dp * (dm**2 + k**2) * la**2
    root_arg = (w + 2 * dm * k**2 * lb**2) ** 2 + 4 * dp**2 * dm**2 * k**2 * lb**4
    value = (-w + math.sqrt(root_arg)) / (4 * dm * k * lb**2)
    return _point(params, value, Order.FIRST, Method.CLOSED_FORM)


def _log_grid(upper: float) -> np.ndarray:
    return np.geomspace(upper * 1e-6, upper, BRACKET_POINTS)


def _first_crossing(func: Callable[[float], float], grid: Sequence[float],
                    rising: bool = True) -> float:
    """Bisect the first sign change of ``func`` on ``grid`` (from - to + when rising)."""
    vals = [func(x) for x in grid]
    for i in range(len(grid) - 1):
        lo, hi = vals[i], vals[i + 1]
        hit = (lo < 0 <= hi) if rising else (lo >= 0 > hi)
        if hit:
            if hi == 0:
                return float(grid[i + 1])
            return brentq(func, grid[i], grid[i + 1], xtol=BISECTION_XTOL,
                          rtol=4 * np.finfo(float).eps, maxiter=500)
    raise NoRootError("no sign change inside the admissible pump window")


def g_crit_first_numeric(params: ModelParams) -> CriticalPoint:
    """Pump at which the Z-branch radicand first turns non-negative."""
    _, upper = pump_window(params)
    value = _first_crossing(lambda g: z_discriminant(params.replace(pump_strength=g)),
                            _log_grid(upper))
    return _point(params, value, Order.FIRST, Method.BISECTION)


def chi_crit(params: ModelParams, pump: float | None = None) -> float:
    """Slope lambda_b / lambda_a of the first-order boundary at the given pump."""
    f = forward_form(params)
    g = f.pump if pump is None else pump
    lo, hi = pump_window(params)
    if not lo <= g <= hi:
        raise OutOfWindowError(f"pump {g} outside [{lo}, {hi}]")
    dp, dm, k = f.d_plus, f.d_minus, f.kappa
    den = dm * k * (dp**2 - 4 * g**2 + k**2)
    if den == 0:
        return math.inf
    return math.sqrt(2 * g - k) * math.sqrt(dp * (dm**2 + k**2)) / math.sqrt(den)


# second order ---------------------------------------------------------------------

def _with_pump_and_lambda(params: ModelParams, pump: float | None, lam: float | None) -> ModelParams:
    p = params if pump is None else params.replace(pump_strength=pump)
    return p if lam is None else p.with_lambdas(lam, lam)


def g_crit_second(params: ModelParams, lam: float | None = None) -> CriticalPoint:
    """Continuous-onset critical pump for equal couplings ``lam``."""
    f = forward_form(_with_pump_and_lambda(params, None, lam))
    if not math.isclose(f.lambda_a, f.lambda_b, rel_tol=1e-9, abs_tol=1e-12):
        raise InvalidRegimeError("equal couplings required")
    lam2 = f.lambda_a**2
    d, df, k, dm = f.delta, f.sagnac, f.kappa, f.d_minus
    p = lam2 - 2
    den = 16 * k**2 + dm**2 * (lam2 - 4) ** 2
    if den <= 0:
        raise InvalidRegimeError("degenerate denominator (lambda = 2 with no loss)")
    num = d**4 * p**2 + (2 * k**2 - df**2 * p) ** 2 + d**2 * (k**2 * (p**2 + 4) - 2 * df**2 * p**2)
    return _point(params, math.sqrt(num / den), Order.SECOND, Method.CLOSED_FORM)


def sigma_np(params: ModelParams, pump: float | None = None) -> np.ndarray:
    """Drift of the first moments (<a>, <a^+>, <b>, <b^+>) about the normal state."""
    f = forward_form(params)
    g = f.pump if pump is None else pump
    da = f.d_plus * (1 - f.lambda_a**2 / 4)
    db = f.d_minus * (1 - f.lambda_b**2 / 4)
    js = f.hopping - f.lambda_a * f.lambda_b * math.sqrt(f.d_plus * f.d_minus) / 4
    k = f.kappa
    return np.array([
        [-1j * da - k, -2j * g, -1j * js, 0],
        [2j * g, 1j * da - k, 0, 1j * js],
        [-1j * js, 0, -1j * db - k, 0],
        [0, 1j * js, 0, 1j * db - k],
    ], dtype=complex)


def sigma_np_eigenvalues(params: ModelParams, lam: float | None = None) -> np.ndarray:
    """Closed-form eigenvalues of the normal-state drift for equal couplings and no hopping."""
    f = forward_form(_with_pump_and_lambda(params, None, lam))
    lam_ = f.lambda_a
    d, df, k, g = f.delta, f.sagnac, f.kappa, f.pump
    p = lam_**2 - 2
    outer = 16 * g**2 + 4 * df**2 * p - d**2 * (p**2 + 4)
    inner = ((d**4 * lam_**4 - 32 * d * df * g**2 - 8 * d**2 * df**2 * p) * (p - 2) ** 2
             - 16 * g**2 * lam_**4 * f.d_plus * f.d_minus + 256 * g**4)
    root = np.sqrt(complex(inner))
    out = []
    for sign in (-1, 1):
        half = np.sqrt(complex(outer + sign * root)) / (2 * math.sqrt(2))
        out += [-k + half, -k - half]
    return np.array(out)


def spectral_abscissa(matrix: np.ndarray) -> float:
    return float(np.max(np.linalg.eigvals(matrix).real))


def g_crit_second_numeric(params: ModelParams, lam: float | None = None) -> CriticalPoint:
    """First pump at which the normal-state drift acquires a growing mode."""
    p = _with_pump_and_lambda(params, None, lam)
    _, upper = pump_window(p)
    value = _first_crossing(lambda g: spectral_abscissa(sigma_np(p, g)), _log_grid(upper))
    return _point(params, value, Order.SECOND, Method.BISECTION)


def lambda_b_boundary_2nd(params: ModelParams, lambda_ac: float, pump: float | None = None,
                          upper: bool = False) -> float:
    """lambda_b on the continuous-onset boundary for a given lambda_a and pump.

    The boundary condition is quadratic in lambda_b^2. The default is the smaller
    root; ``upper=True`` returns the larger one, which closes the boundary curve.
    """
    f = forward_form(params)
    g = f.pump if pump is None else pump
    dp, dm, k, df = f.d_plus, f.d_minus, f.kappa, f.sagnac
    q1 = dp**2 - 4 * g**2 + k**2
    if q1 == 0:
        raise NoBoundaryError("q1 = 0")
    l2 = lambda_ac**2
    inner = (4 * k**2 * q1 * (df * dp * l2 - q1)
             + dp**2 * (dm**2 * g**2 + (g**2 - df**2) * k**2) * l2**2)
    if inner < 0:
        raise NoBoundaryError("negative inner radicand")
    sign = 1.0 if upper else -1.0
    outer = 4 * q1 * dm - dp * (dp * dm + k**2) * l2 + sign * 2 * math.sqrt(inner)
    ratio = outer / (q1 * dm)
    if ratio < 0:
        raise NoBoundaryError("negative outer radicand")
    return math.sqrt(ratio)


def first_order_boundary(params: ModelParams, lambda_a: Sequence[float],
                         pump: float | None = None) -> BoundaryCurve:
    chi = chi_crit(params, pump)
    return BoundaryCurve("lambda_a", tuple((float(x), float(chi * x)) for x in lambda_a), Order.FIRST)


def second_order_boundary(params: ModelParams, lambda_a: Sequence[float],
                          pump: float | None = None, upper: bool = False) -> BoundaryCurve:
    """Samples of the continuous-onset boundary; points without a real crossing are skipped."""
    pts = []
    for x in lambda_a:
        try:
            pts.append((float(x), lambda_b_boundary_2nd(params, float(x), pump, upper)))
        except NoBoundaryError:
            continue
    return BoundaryCurve("lambda_a", tuple(pts), Order.SECOND)


def tricritical_couplings(params: ModelParams, pump: float | None = None,
                          tol: float = 1e-6) -> tuple[float, float]:
    """Point where the first-order ray touches the continuous-onset curve.

    The ray is tangent to the larger-root branch of the onset curve, so the point is
    found as the maximum of their vertical gap, which must vanish to ``tol``.
    """
    chi = chi_crit(params, pump)

    def gap(x: float) -> float:
        try:
            return lambda_b_boundary_2nd(params, x, pump, upper=True) - chi * x
        except NoBoundaryError:
            return -1e3

    grid = np.linspace(1e-3, 4.0, 4001)
    vals = np.array([gap(x) for x in grid])
    i = int(np.argmax(vals))
    if vals[i] <= -1e3:
        raise NoRootError("no continuous-onset boundary on lambda_a in (0, 4]")
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    best = minimize_scalar(lambda x: -gap(x), bounds=(lo, hi), method="bounded",
                           options={"xatol": 1e-12})
    x = float(best.x)
    if abs(gap(x)) > tol:
        raise NoRootError(f"boundaries stay {abs(gap(x)):.2e} apart")
    return x, chi * x


# tricritical coupling and nonreciprocity -------------------------------------------

def lambda_tricritical(params: ModelParams) -> float:
    """Equal coupling at which the first- and second-order critical pumps coincide."""
    f = forward_form(params)
    dp, dm, k, d, df = f.d_plus, f.d_minus, f.kappa, f.delta, f.sagnac
    pre = (dm**2 + k**2) / (dm**3 * (dp * dm + k**2))
    rad = dm**4 * dp**2 + 2 * dm**2 * dp * (5 * d + df) * k**2 + (df - 3 * d) ** 2 * k**4
    inner = 3 * dm**2 * dp - (df - 3 * d) * k**2 - math.sqrt(rad)
    return math.sqrt(pre) * math.sqrt(inner)


def lambda_tricritical_approx(params: ModelParams) -> float:
    """Small-loss approximation of :func:`lambda_tricritical` (close to sqrt 2)."""
    f = forward_form(params)
    dp, dm, k = f.d_plus, f.d_minus, f.kappa
    return math.sqrt(2 * dp * (dm**2 + k**2) / (dm * (dp * dm + k**2)))


def critical_pump(params: ModelParams, order: Order | str, lam: float | None = None) -> CriticalPoint:
    order = Order(order)
    if order is Order.FIRST:
        p = params if lam is None else params.with_lambdas(lam, lam)
        return g_crit_first(p)
    return g_crit_second(params, lam)


def nonreciprocity_window(params: ModelParams, lam: float, order: Order | str) -> tuple[float, float]:
    """Critical pumps (forward, backward) at equal couplings ``lam``."""
    order = Order(order)
    out = []
    for direction in (PumpDirection.FORWARD, PumpDirection.BACKWARD):
        p = params.replace(pump_direction=direction).with_lambdas(lam, lam)
        out.append(critical_pump(p, order).value)
    return out[0], out[1]
