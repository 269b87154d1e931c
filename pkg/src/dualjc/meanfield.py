"""Semiclassical steady states of the driven dual-mode cavity with one atom.

Cavity amplitudes are rescaled as ``<a> = alpha * sqrt(eta_plus)`` and
``<b> = beta * sqrt(eta_minus)``, which makes the fixed points independent of the
atomic detuning. Time derivatives below are written in that rescaled frame and in
the forward-pump picture (see :func:`dualjc.model.effective_params`).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import root

from .errors import (
    InvalidParameterError,
    NoRealSolutionError,
    NotConvergedError,
    SingularClosedFormError,
)
from .model import ForwardForm, ModelParams, derive, effective_params, forward_form

AMPLITUDE_TOL = 1e-6
RESIDUAL_TOL = 1e-9
ODE_RTOL = 1e-10
_SQRT_SLACK = 1e-12


class Branch(str, enum.Enum):
    Z_PLUS = "z_plus"
    Z_MINUS = "z_minus"
    NORMAL = "normal"
    RELAXED = "relaxed"


class Phase(str, enum.Enum):
    NP = "NP"
    SP = "SP"


@dataclass(frozen=True)
class SpinState:
    x: float
    y: float
    z: float

    @property
    def norm(self) -> float:
        return math.sqrt(self.x**2 + self.y**2 + self.z**2)


@dataclass(frozen=True)
class CavityAmplitudes:
    alpha: complex
    beta: complex


@dataclass(frozen=True)
class MeanFieldSolution:
    spin: SpinState
    amplitudes: CavityAmplitudes
    branch: Branch
    phase: Phase
    intermediates: dict[str, float] | None = field(default=None, compare=False)

    @property
    def alpha(self) -> complex:
        return self.amplitudes.alpha

    @property
    def beta(self) -> complex:
        return self.amplitudes.beta

    def partner(self) -> "MeanFieldSolution":
        """The parity image (-alpha, -beta) with the same Z."""
        s = self.spin
        return MeanFieldSolution(
            SpinState(-s.x, -s.y, s.z),
            CavityAmplitudes(-self.alpha, -self.beta),
            self.branch, self.phase, self.intermediates)

    def as_vector(self) -> np.ndarray:
        a, b, s = self.alpha, self.beta, self.spin
        return np.array([a.real, a.imag, b.real, b.imag, s.x, s.y, s.z])

    def cavity_expectations(self, params: ModelParams) -> tuple[complex, complex]:
        """Unscaled <a>, <b> in the forward picture."""
        d = derive(effective_params(params))
        return self.alpha * math.sqrt(d.eta_plus), self.beta * math.sqrt(d.eta_minus)


class ZRoot(NamedTuple):
    branch: Branch
    z: float


def normal_solution() -> MeanFieldSolution:
    return MeanFieldSolution(SpinState(0.0, 0.0, -1.0), CavityAmplitudes(0j, 0j),
                             Branch.NORMAL, Phase.NP)


def classify_phase(solution: MeanFieldSolution, tol: float = AMPLITUDE_TOL) -> Phase:
    big = max(abs(solution.alpha), abs(solution.beta))
    return Phase.SP if big > tol else Phase.NP


# closed forms (no hopping) -------------------------------------------------------

def _z_pieces(f: ForwardForm) -> tuple[float, float, float]:
    dp, dm, k, g, la, lb = f.d_plus, f.d_minus, f.kappa, f.pump, f.lambda_a, f.lambda_b
    h1 = dp * (dm**2 + k**2) * la**2
    h2 = dm * (dp**2 - 4 * g**2 + k**2) * lb**2
    disc = (h1 * (2 * g - k) - k * h2) * (h1 * (2 * g + k) + k * h2)
    den = dp * h1 * la**2 + 2 * dp * dm * (dp * dm + k**2) * la**2 * lb**2 + dm * h2 * lb**2
    return disc, -dp * h1 - dm * h2, den


def z_discriminant(params: ModelParams) -> float:
    """Radicand of the two-branch formula for Z. Negative means no SP solution."""
    return _z_pieces(forward_form(params))[0]


def z_candidates(params: ModelParams) -> tuple[float, float] | None:
    """Both roots (plus, minus) of the Z equation, unfiltered; None if complex."""
    f = forward_form(params)
    if f.lambda_a == 0 and f.lambda_b == 0:
        raise SingularClosedFormError("lambda_a = lambda_b = 0: the Z formula is undefined")
    disc, lin, den = _z_pieces(f)
    if den == 0:
        raise SingularClosedFormError("vanishing denominator in the Z formula")
    if disc < 0:
        return None
    s = math.sqrt(disc)
    return 4 * (lin + s) / den, 4 * (lin - s) / den


def solve_z_branches(params: ModelParams) -> list[ZRoot]:
    """Real roots for the spin projection Z lying in [-1, 0); empty means NP only."""
    if params.hopping != 0:
        raise InvalidParameterError("closed-form Z branches need hopping = 0")
    roots = z_candidates(params)
    if roots is None:
        return []
    out = []
    for branch, z in zip((Branch.Z_PLUS, Branch.Z_MINUS), roots):
        if -1 - _SQRT_SLACK <= z < 0:
            out.append(ZRoot(branch, max(z, -1.0)))
    return out


def gamma_coefficients(params: ModelParams, z: float, as_printed: bool = False) -> dict[str, float]:
    """Quadratic-form coefficients relating alpha to the spin constraint.

    With ``as_printed=True`` the kappa^2 term of Gamma_1 and Gamma_3 is not multiplied
    by 16. That variant fails the fixed-point residual and is kept only to document
    the discrepancy.
    """
    f = forward_form(params)
    dp, dm, k, g, la, lb = f.d_plus, f.d_minus, f.kappa, f.pump, f.lambda_a, f.lambda_b
    scale = dp**2 * la**2
    if scale == 0:
        raise SingularClosedFormError("lambda_a = 0: amplitude closed form undefined")
    if as_printed:
        g1 = (16 * (dp + 2 * g) ** 2 + k**2) / scale
        g3 = (16 * (dp - 2 * g) ** 2 + k**2) / scale
    else:
        g1 = 16 * ((dp + 2 * g) ** 2 + k**2) / scale
        g3 = 16 * ((dp - 2 * g) ** 2 + k**2) / scale
    g2 = 128 * g * k / scale
    kk = 16 * (dm**2 + k**2) * la**2 * z**2 / (16 * k**2 + dm**2 * (4 + lb**2 * z) ** 2)
    return {"Gamma1": g1, "Gamma2": g2, "Gamma3": g3, "K": kk, "C": 1 - z**2}


def _real_sqrt(x: float, what: str) -> float:
    if x < 0:
        if x > -_SQRT_SLACK * max(1.0, abs(x)):
            return 0.0
        raise NoRealSolutionError(f"negative radicand in {what}: {x:.3e}")
    return math.sqrt(x)


def solve_amplitudes(params: ModelParams, z: float, branch: Branch | None = None,
                     as_printed: bool = False) -> MeanFieldSolution:
    """Closed-form cavity amplitudes for a given spin projection Z.

    The representative with ``Re(alpha) >= 0`` is returned.
    """
    f = forward_form(params)
    if f.hopping != 0:
        raise InvalidParameterError("closed-form amplitudes need hopping = 0")
    if f.lambda_b * z == 0:
        raise SingularClosedFormError("lambda_b * Z = 0: amplitude closed form undefined")
    if not -1 - _SQRT_SLACK <= z <= 1:
        raise InvalidParameterError(f"Z must lie in [-1, 1], got {z}")
    z = max(z, -1.0)
    co = gamma_coefficients(params, z, as_printed)
    g1, g2, g3, kk, c = co["Gamma1"], co["Gamma2"], co["Gamma3"], co["K"], co["C"]
    if branch is None:
        branch = Branch.NORMAL if c == 0 else _guess_branch(params, z)
    if c <= 0:
        return MeanFieldSolution(SpinState(0.0, 0.0, z), CavityAmplitudes(0j, 0j),
                                 branch, Phase.NP, co)
    dp, k, g, la, lb = f.d_plus, f.kappa, f.pump, f.lambda_a, f.lambda_b
    r = _real_sqrt(g2**2 + 4 * (g1 - kk) * (kk - g3), "r")
    num = g2**2 - 2 * (g1 - g3) * (g3 - kk) + g2 * r
    ratio = num / (2 * (g2**2 + (g1 - g3) ** 2) * kk)
    a_re = math.sqrt(c) * _real_sqrt(ratio, "alpha_re")
    if kk == g3:
        raise SingularClosedFormError("K = Gamma3: alpha_im closed form undefined")
    a_im = (g2 - r) / (2 * (kk - g3)) * a_re
    pre = 4.0 / (dp * la * lb * z)
    b_re = -pre * ((dp + 2 * g) * a_re + k * a_im) - la / lb * a_re
    b_im = -pre * ((dp - 2 * g) * a_im - k * a_re) - la / lb * a_im
    alpha, beta = complex(a_re, a_im), complex(b_re, b_im)
    s = z * (la * alpha + lb * beta)
    sol = MeanFieldSolution(SpinState(s.real, -s.imag, z), CavityAmplitudes(alpha, beta),
                            branch, Phase.NP, co)
    return MeanFieldSolution(sol.spin, sol.amplitudes, branch, classify_phase(sol), co)


def _guess_branch(params: ModelParams, z: float) -> Branch:
    roots = z_candidates(params)
    if roots is None:
        return Branch.RELAXED
    return Branch.Z_PLUS if abs(roots[0] - z) <= abs(roots[1] - z) else Branch.Z_MINUS


# equations of motion --------------------------------------------------------------

def heisenberg_rhs(params: ModelParams, y: Sequence[float]) -> np.ndarray:
    """Time derivative of (Re a, Im a, Re b, Im b, X, Y, Z) in the rescaled frame."""
    f = forward_form(params)
    return _rhs(f, np.asarray(y, dtype=float))


def _hop(f: ForwardForm) -> tuple[float, float]:
    return f.hopping * math.sqrt(f.d_plus / f.d_minus), f.hopping * math.sqrt(f.d_minus / f.d_plus)


def _rhs(f: ForwardForm, y: np.ndarray) -> np.ndarray:
    ar, ai, br, bi, x, yy, z = y
    dp, dm, k, g, la, lb, dq = f.d_plus, f.d_minus, f.kappa, f.pump, f.lambda_a, f.lambda_b, f.delta_q
    jp, jm = _hop(f)
    ca, cb = la * dp / 4, lb * dm / 4
    si = la * ai + lb * bi
    sr = la * ar + lb * br
    return np.array([
        -k * ar + (dp - 2 * g) * ai + jp * bi - ca * yy,
        -(dp + 2 * g) * ar - k * ai - jp * br - ca * x,
        -k * br + dm * bi + jm * ai - cb * yy,
        -dm * br - k * bi - jm * ar - cb * x,
        dq * (-yy - z * si),
        dq * (x - z * sr),
        dq * (x * si + yy * sr),
    ])


def _jac(f: ForwardForm, y: np.ndarray) -> np.ndarray:
    ar, ai, br, bi, x, yy, z = y
    dp, dm, k, g, la, lb, dq = f.d_plus, f.d_minus, f.kappa, f.pump, f.lambda_a, f.lambda_b, f.delta_q
    jp, jm = _hop(f)
    ca, cb = la * dp / 4, lb * dm / 4
    si = la * ai + lb * bi
    sr = la * ar + lb * br
    j = np.zeros((7, 7))
    j[0, :] = [-k, dp - 2 * g, 0, jp, 0, -ca, 0]
    j[1, :] = [-(dp + 2 * g), -k, -jp, 0, -ca, 0, 0]
    j[2, :] = [0, jm, -k, dm, 0, -cb, 0]
    j[3, :] = [-jm, 0, -dm, -k, -cb, 0, 0]
    j[4, :] = dq * np.array([0, -z * la, 0, -z * lb, 0, -1, -si])
    j[5, :] = dq * np.array([-z * la, 0, -z * lb, 0, 1, 0, -sr])
    j[6, :] = dq * np.array([yy * la, x * la, yy * lb, x * lb, si, sr, 0])
    return j


def _scaled_residual(f: ForwardForm, y: np.ndarray) -> np.ndarray:
    r = _rhs(f, y)
    r[4:] /= f.delta_q
    return r


def fixed_point_residual(params: ModelParams, solution: MeanFieldSolution) -> float:
    """Largest time derivative at the solution (spin rows divided by delta_q)."""
    f = forward_form(params)
    return float(np.max(np.abs(_scaled_residual(f, solution.as_vector()))))


def _polish(f: ForwardForm, y0: np.ndarray) -> np.ndarray:
    """Newton refinement on the field equations, two spin equations and the spin norm."""
    def fun(y):
        r = _scaled_residual(f, y)
        return np.concatenate([r[:6], [y[4] ** 2 + y[5] ** 2 + y[6] ** 2 - 1]])

    def jac(y):
        j = _jac(f, y)
        j[4:] /= f.delta_q
        return np.vstack([j[:6], [0, 0, 0, 0, 2 * y[4], 2 * y[5], 2 * y[6]]])

    sol = root(fun, y0, jac=jac, method="hybr", options={"xtol": 1e-14})
    return sol.x


def _from_vector(y: np.ndarray, branch: Branch) -> MeanFieldSolution:
    sol = MeanFieldSolution(SpinState(*map(float, y[4:7])),
                            CavityAmplitudes(complex(y[0], y[1]), complex(y[2], y[3])),
                            branch, Phase.NP)
    return MeanFieldSolution(sol.spin, sol.amplitudes, branch, classify_phase(sol))


def _slaved_rhs(f: ForwardForm, v: np.ndarray) -> np.ndarray:
    """Field flow with the spin pinned to its lower eigenstate (infinite atomic detuning)."""
    alpha, beta = complex(v[0], v[1]), complex(v[2], v[3])
    jp, jm = _hop(f)
    s = f.lambda_a * alpha + f.lambda_b * beta
    zs = -s / math.sqrt(1.0 + abs(s) ** 2)
    da = (-(1j * f.d_plus + f.kappa) * alpha - 2j * f.pump * alpha.conjugate()
          - 1j * jp * beta - 0.25j * f.lambda_a * f.d_plus * zs)
    db = -(1j * f.d_minus + f.kappa) * beta - 1j * jm * alpha - 0.25j * f.lambda_b * f.d_minus * zs
    return np.array([da.real, da.imag, db.real, db.imag])


def _spin_from_fields(f: ForwardForm, v: np.ndarray) -> np.ndarray:
    s = f.lambda_a * complex(v[0], v[1]) + f.lambda_b * complex(v[2], v[3])
    z = -1.0 / math.sqrt(1.0 + abs(s) ** 2)
    return np.array([(z * s).real, -(z * s).imag, z])


def relax_ode(params: ModelParams, initial: MeanFieldSolution | None = None,
              t_max: float | None = None, dt: float | None = None,
              tol: float | None = None, adiabatic: bool = True) -> MeanFieldSolution:
    """Integrate the mean-field equations until they settle on a fixed point.

    Works for any hopping. ``dt`` is the length of the integration segments between
    convergence checks (default ``50 / kappa``) and ``t_max`` the total budget
    (default ``1000 / kappa``). The end point is refined by Newton iteration on the
    full equations and accepted when it lies next to the trajectory with largest
    derivative below ``tol`` (default ``1e-10 * kappa``).

    By default the spin is slaved to the instantaneous field, which is the flow in
    the limit of large atomic detuning and shares its fixed points with the full
    equations. ``adiabatic=False`` integrates all seven variables at the given
    ``delta_q``; that is stiff and slow when ``delta_q`` is large.
    """
    f = forward_form(params)
    k = f.kappa
    if k <= 0:
        raise InvalidParameterError("relaxation needs kappa > 0")
    tol = 1e-10 * k if tol is None else tol
    dt = 50.0 / k if dt is None else dt
    t_max = 1000.0 / k if t_max is None else t_max
    if initial is None:
        y = np.array([1e-3, 0.0, 1e-3, 0.0, 0.0, 0.0, -1.0])
        y[4:7] = _spin_from_fields(f, y[:4])
    else:
        y = initial.as_vector()
    norm0 = np.linalg.norm(y[4:7])
    t = 0.0
    while True:
        if adiabatic:
            out = solve_ivp(lambda _t, v: _slaved_rhs(f, v), (0.0, dt), y[:4], method="DOP853",
                            rtol=ODE_RTOL, atol=1e-13)
        else:
            out = solve_ivp(lambda _t, v: _rhs(f, v), (0.0, dt), y, method="Radau",
                            jac=lambda _t, v: _jac(f, v), rtol=ODE_RTOL, atol=1e-12)
        if not out.success:
            raise NotConvergedError(f"integrator failed: {out.message}")
        end = out.y[:, -1]
        y = np.concatenate([end, _spin_from_fields(f, end)]) if adiabatic else end
        t += dt
        if abs(np.linalg.norm(y[4:7]) - norm0) > 1e-6:
            raise NotConvergedError("spin norm drifted during relaxation")
        slope = (float(np.max(np.abs(_slaved_rhs(f, y[:4])))) if adiabatic
                 else float(np.max(np.abs(_scaled_residual(f, y)))))
        if slope < 1e-5 * k:
            polished = _polish(f, y)
            res = float(np.max(np.abs(_scaled_residual(f, polished))))
            if res < tol and np.max(np.abs(polished - y)) < 1e-3:
                return _from_vector(polished, Branch.RELAXED)
        if t >= t_max:
            raise NotConvergedError(
                f"derivative norm {slope:.3e} still above tolerance at t = {t:.3g}")


# convenience ---------------------------------------------------------------------

def _ring_seeds() -> list[np.ndarray]:
    out = []
    for r in (0.3, 1.0):
        for phase in np.linspace(0.0, np.pi, 4, endpoint=False):
            a = r * np.exp(1j * phase)
            out.append(np.array([a.real, a.imag, a.real, a.imag]))
    return out


def _closed_form_seeds(params: ModelParams) -> list[tuple[Branch, np.ndarray]]:
    """Z-branch solutions of the same parameters without hopping, as starting points."""
    bare = effective_params(params).replace(hopping=0.0)
    f = forward_form(bare)
    if f.lambda_a == 0 or f.lambda_b == 0:
        return []
    out = []
    for zr in solve_z_branches(bare):
        try:
            sol = solve_amplitudes(bare, zr.z, zr.branch)
        except (NoRealSolutionError, SingularClosedFormError):
            continue
        if sol.phase is Phase.SP:
            out.append((zr.branch, sol.as_vector()[:4]))
    return out


def find_fixed_points(params: ModelParams) -> list[MeanFieldSolution]:
    """Superradiant fixed points by Newton iteration from several starting amplitudes.

    Starting points are the closed-form branches at zero hopping (their labels carry
    over to the roots they lead to) and a ring of generic amplitudes (labelled
    ``relaxed``). Roots are kept once per parity pair.
    """
    f = forward_form(params)
    seeds = _closed_form_seeds(params) + [(Branch.RELAXED, v) for v in _ring_seeds()]
    found: list[MeanFieldSolution] = []
    for branch, v0 in seeds:
        sol = root(lambda v: _slaved_rhs(f, v), v0, method="hybr", options={"xtol": 1e-13})
        if not sol.success:
            continue
        y = _polish(f, np.concatenate([sol.x, _spin_from_fields(f, sol.x)]))
        if float(np.max(np.abs(_scaled_residual(f, y)))) > RESIDUAL_TOL or y[6] >= 0:
            continue
        cand = _from_vector(y, branch)
        if cand.phase is not Phase.SP:
            continue
        vec = cand.as_vector()
        if any(min(np.max(np.abs(vec - o.as_vector())), np.max(np.abs(vec - o.partner().as_vector())))
               < 1e-6 for o in found):
            continue
        found.append(cand)
    return found


def steady_states(params: ModelParams) -> list[MeanFieldSolution]:
    """Every fixed point: the normal state first, then the Z+ and Z- branches.

    With hopping or a vanishing coupling the closed forms do not apply and the
    superradiant roots come from :func:`find_fixed_points` instead.
    """
    f = forward_form(params)
    out = [normal_solution()]
    if f.hopping != 0 or f.lambda_a == 0 or f.lambda_b == 0:
        return out + find_fixed_points(params)
    for zr in solve_z_branches(params):
        try:
            sol = solve_amplitudes(params, zr.z, zr.branch)
        except (NoRealSolutionError, SingularClosedFormError):
            continue
        if sol.phase is Phase.SP:
            out.append(sol)
    return out


def physical_solution(params: ModelParams) -> MeanFieldSolution:
    """The Z+ superradiant solution when it exists, else the normal state."""
    sols = steady_states(params)
    for s in sols:
        if s.branch in (Branch.Z_PLUS, Branch.RELAXED):
            return s
    return sols[0]
