"""Gaussian fluctuations around the mean-field states and the regime diagram.

Fluctuation operators are ``c = a - <a>`` and ``d = b - <b>``. The ten second
moments are ordered

    <c+c>, <c+^2>, <c^2>, <cd>, <c+d+>, <cd+>, <c+d>, <d+d>, <d^2>, <d+^2>

and obey ``dv/dt = W v + R`` with cavity loss ``kappa`` on both modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .criticality import g_crit_first, lambda_tricritical
from .errors import SingularDriftError, UnstableDriftError
from .meanfield import Branch, MeanFieldSolution, Phase, normal_solution, steady_states
from .model import ModelParams, forward_form
from .stability import assess, build_m

MOMENT_NAMES = ("cdag_c", "cdag2", "c2", "cd", "cdag_ddag", "c_ddag", "cdag_d", "ddag_d", "d2", "ddag2")
DRIFT_TOL = 1e-12


@dataclass(frozen=True)
class EffParams:
    theta: float
    phi: float
    delta_q_tilde: float
    lambdas: tuple[float, float, float, float, float, float]
    gamma_phase: float = -math.pi / 2

    @property
    def squeeze_phase(self) -> complex:
        """exp(2 i phi), the phase attached to Lambda_4..Lambda_6."""
        return complex(math.cos(2 * self.phi), math.sin(2 * self.phi))


def eff_params(params: ModelParams, solution: MeanFieldSolution) -> EffParams:
    """Coefficients of the quadratic fluctuation Hamiltonian around ``solution``."""
    f = forward_form(params)
    la, lb, dp, dm, dq = f.lambda_a, f.lambda_b, f.d_plus, f.d_minus, f.delta_q
    a, b = solution.alpha, solution.beta
    r2 = (la**2 * abs(a) ** 2 + 2 * la * lb * (a.imag * b.imag + a.real * b.real)
          + lb**2 * abs(b) ** 2)
    r = math.sqrt(max(r2, 0.0))
    dq_t = dq * math.sqrt(1 + r2)
    theta = -0.5 * math.atan(r)
    s2, c2 = math.sin(theta) ** 2, math.cos(theta) ** 2
    fw, hw = s2**2 + c2**2, s2 * c2
    ratio = dq / dq_t
    root = math.sqrt(dp * dm)
    lam = (
        dp * (1 - la**2 * ratio * fw / 4),
        dm * (1 - lb**2 * ratio * fw / 4),
        f.hopping - root * la * lb * ratio * fw / 4,
        -dp * la**2 * ratio * hw / 4,
        -dm * lb**2 * ratio * hw / 4,
        -root * la * lb * ratio * hw / 2,
    )
    phi = 0.0
    if r > 0:
        phi = float(np.angle(1j * (la * a.conjugate() + lb * b.conjugate()) / r))
    return EffParams(theta, phi, dq_t, lam)


def normal_eff_params(params: ModelParams) -> EffParams:
    return eff_params(params, normal_solution())


@dataclass(frozen=True)
class FluctuationSystem:
    drift: np.ndarray
    inhomogeneity: np.ndarray
    phase: Phase

    @property
    def spectral_abscissa(self) -> float:
        return float(np.max(np.linalg.eigvals(self.drift).real))


_IDX = {name: i for i, name in enumerate(("Cc", "CC", "cc", "cd", "CD", "cD", "Cd", "Dd", "dd", "DD"))}


def np_system(params: ModelParams) -> FluctuationSystem:
    """Moment equations about the normal state."""
    f = forward_form(params)
    da = f.d_plus * (1 - f.lambda_a**2 / 4)
    db = f.d_minus * (1 - f.lambda_b**2 / 4)
    js = f.hopping - f.lambda_a * f.lambda_b * math.sqrt(f.d_plus * f.d_minus) / 4
    g, k, i = f.pump, f.kappa, 1j
    w11 = [[-2 * k, -2 * i * g, 2 * i * g, 0, 0],
           [4 * i * g, 2 * i * da - 2 * k, 0, 0, 2 * i * js],
           [-4 * i * g, 0, -2 * i * da - 2 * k, -2 * i * js, 0],
           [0, 0, -i * js, -i * (da + db) - 2 * k, 0],
           [0, i * js, 0, 0, i * (da + db) - 2 * k]]
    w12 = [[i * js, -i * js, 0, 0, 0],
           [0, 0, 0, 0, 0],
           [0, 0, 0, 0, 0],
           [0, -2 * i * g, 0, -i * js, 0],
           [2 * i * g, 0, 0, 0, i * js]]
    w21 = [[i * js, 0, 0, 0, -2 * i * g],
           [-i * js, 0, 0, 2 * i * g, 0],
           [0, 0, 0, 0, 0],
           [0, 0, 0, -2 * i * js, 0],
           [0, 0, 0, 0, 2 * i * js]]
    w22 = [[-i * (da - db) - 2 * k, 0, -i * js, 0, 0],
           [0, i * (da - db) - 2 * k, i * js, 0, 0],
           [-i * js, i * js, -2 * k, 0, 0],
           [0, 0, 0, -2 * i * db - 2 * k, 0],
           [0, 0, 0, 0, 2 * i * db - 2 * k]]
    drift = np.block([[np.array(w11), np.array(w12)], [np.array(w21), np.array(w22)]]).astype(complex)
    rhs = np.zeros(10, dtype=complex)
    rhs[1], rhs[2] = 2j * g, -2j * g
    return FluctuationSystem(drift, rhs, Phase.NP)


def sp_system(params: ModelParams, eff: EffParams, as_printed: bool = False) -> FluctuationSystem:
    """Moment equations about a superradiant state with coefficients ``eff``.

    The damping of <d^2> is ``-2 i (Lambda_2 - i kappa)``. ``as_printed=True`` flips
    the sign of that kappa, which turns the loss into gain; it exists only so the
    discrepancy can be demonstrated.
    """
    f = forward_form(params)
    l1, l2, l3, l4, l5, l6 = eff.lambdas
    g, k, i = f.pump, f.kappa, 1j
    e = eff.squeeze_phase
    ec = e.conjugate()
    w = np.zeros((10, 10), dtype=complex)
    rhs = np.zeros(10, dtype=complex)

    def t(row: str, col: str | None, val: complex) -> None:
        if col is None:
            rhs[_IDX[row]] += val
        else:
            w[_IDX[row], _IDX[col]] += val

    ge, gec = g + l4 * e, g + l4 * ec
    t("Cc", "cc", 2 * i * ge); t("Cc", "CC", -2 * i * gec); t("Cc", "cD", i * l3)
    t("Cc", "Cd", -i * l3); t("Cc", "cd", i * l6 * e); t("Cc", "CD", -i * l6 * ec)
    t("Cc", "Cc", -2 * k)

    t("CC", "CC", 2 * i * (l1 + i * k)); t("CC", "Cc", 4 * i * ge); t("CC", None, 2 * i * ge)
    t("CC", "CD", 2 * i * l3); t("CC", "Cd", 2 * i * l6 * e)

    t("cc", "cc", -2 * i * (l1 - i * k)); t("cc", "Cc", -4 * i * gec); t("cc", None, -2 * i * gec)
    t("cc", "cd", -2 * i * l3); t("cc", "cD", -2 * i * l6 * ec)

    t("cd", "cd", -i * (l1 + l2 - 2 * i * k)); t("cd", "Cd", -2 * i * gec); t("cd", "cc", -i * l3)
    t("cd", "dd", -i * l3); t("cd", "cD", -2 * i * l5 * ec); t("cd", "Dd", -i * l6 * ec)
    t("cd", "Cc", -i * l6 * ec); t("cd", None, -i * l6 * ec)

    t("CD", "CD", i * (l1 + l2 + 2 * i * k)); t("CD", "cD", 2 * i * ge); t("CD", "CC", i * l3)
    t("CD", "DD", i * l3); t("CD", "Cd", 2 * i * l5 * e); t("CD", "Dd", i * l6 * e)
    t("CD", None, i * l6 * e); t("CD", "Cc", i * l6 * e)

    t("cD", "cD", -i * (l1 - l2 - 2 * i * k)); t("cD", "CD", -2 * i * gec); t("cD", "Cc", i * l3)
    t("cD", "Dd", -i * l3); t("cD", "cd", 2 * i * l5 * e); t("cD", "DD", -i * l6 * ec)
    t("cD", "cc", i * l6 * e)

    t("Cd", "Cd", i * (l1 - l2 + 2 * i * k)); t("Cd", "cd", 2 * i * ge); t("Cd", "Cc", -i * l3)
    t("Cd", "Dd", i * l3); t("Cd", "CD", -2 * i * l5 * ec); t("Cd", "dd", i * l6 * e)
    t("Cd", "CC", -i * l6 * ec)

    t("Dd", "cD", -i * l3); t("Dd", "Cd", i * l3); t("Dd", "cd", i * l6 * e)
    t("Dd", "CD", -i * l6 * ec); t("Dd", "dd", 2 * i * l5 * e); t("Dd", "DD", -2 * i * l5 * ec)
    t("Dd", "Dd", -2 * k)

    damp = i * k if as_printed else -i * k
    t("dd", "dd", -2 * i * (l2 + damp)); t("dd", "cd", -2 * i * l3); t("dd", "Cd", -2 * i * l6 * ec)
    t("dd", "Dd", -4 * i * l5 * ec); t("dd", None, -2 * i * l5 * ec)

    t("DD", "DD", 2 * i * (l2 + i * k)); t("DD", "CD", 2 * i * l3); t("DD", "cD", 2 * i * l6 * e)
    t("DD", "Dd", 4 * i * l5 * e); t("DD", None, 2 * i * l5 * e)
    return FluctuationSystem(w, rhs, Phase.SP)


@dataclass(frozen=True)
class CorrelatorVector:
    values: np.ndarray

    def __getattr__(self, name: str) -> complex:
        if name in MOMENT_NAMES:
            return complex(self.values[MOMENT_NAMES.index(name)])
        raise AttributeError(name)

    @property
    def n_c(self) -> float:
        return float(self.values[0].real)

    @property
    def n_d(self) -> float:
        return float(self.values[7].real)

    def pairing_error(self) -> float:
        v = self.values
        pairs = ((1, 2), (4, 3), (6, 5), (9, 8))
        err = max(abs(v[p] - np.conj(v[q])) for p, q in pairs)
        return float(max(err, abs(v[0].imag), abs(v[7].imag)))

    def second_moments(self) -> np.ndarray:
        """<x_i x_j> for x = (c, d, c+, d+)."""
        v = self.values
        c, d, cd_, dd_ = 0, 1, 2, 3
        s = np.zeros((4, 4), dtype=complex)
        s[c, c], s[cd_, cd_], s[d, d], s[dd_, dd_] = v[2], v[1], v[8], v[9]
        s[cd_, c], s[c, cd_] = v[0], v[0] + 1
        s[dd_, d], s[d, dd_] = v[7], v[7] + 1
        s[c, d] = s[d, c] = v[3]
        s[cd_, dd_] = s[dd_, cd_] = v[4]
        s[c, dd_] = s[dd_, c] = v[5]
        s[cd_, d] = s[d, cd_] = v[6]
        return s

    def covariance(self) -> np.ndarray:
        """Symmetrised covariance of (q_c, p_c, q_d, p_d); vacuum gives identity / 2."""
        r = 1 / math.sqrt(2)
        t = np.array([[r, 0, r, 0], [-1j * r, 0, 1j * r, 0],
                      [0, r, 0, r], [0, -1j * r, 0, 1j * r]])
        m = t @ self.second_moments() @ t.T
        return ((m + m.T) / 2).real

    def uncertainty_eigenvalues(self) -> np.ndarray:
        """Eigenvalues of V + i Omega / 2; all are >= 0 for a physical Gaussian state."""
        om = np.kron(np.eye(2), np.array([[0, 1], [-1, 0]]))
        return np.linalg.eigvalsh(self.covariance() + 0.5j * om)

    def squeezing_angle(self, mode: str = "c") -> float:
        """Major-axis angle of the single-mode covariance ellipse, in (-pi/2, pi/2]."""
        v = self.covariance()
        j = 0 if mode == "c" else 2
        return 0.5 * math.atan2(2 * v[j, j + 1], v[j, j] - v[j + 1, j + 1])


def steady_correlators(system: FluctuationSystem) -> CorrelatorVector:
    """Stationary moments ``-W^{-1} R``; growth or criticality is reported, not clamped."""
    sa = system.spectral_abscissa
    scale = max(1.0, float(np.max(np.abs(system.drift))))
    if abs(sa) <= DRIFT_TOL * scale:
        raise SingularDriftError("drift has a zero-real-part eigenvalue (critical point)")
    if sa > 0:
        raise UnstableDriftError(f"drift spectral abscissa {sa:.3e} > 0")
    v = np.linalg.solve(system.drift, -system.inhomogeneity)
    res = np.linalg.norm(system.drift @ v + system.inhomogeneity)
    if res > 1e-10 * max(np.linalg.norm(system.inhomogeneity), 1e-300):
        v = np.linalg.lstsq(system.drift, -system.inhomogeneity, rcond=None)[0]
    return CorrelatorVector(v)


# regime diagram -----------------------------------------------------------------

ROMAN = {0: "U", 1: "I", 2: "II", 3: "III", 4: "IV", 5: "V"}


@dataclass(frozen=True)
class CellResult:
    stable_count: int
    regime: str
    state: str
    n_c: float
    n_d: float
    angle: float
    note: str = ""


def _sp_candidates(params: ModelParams) -> list[MeanFieldSolution]:
    return [s for s in steady_states(params) if s.phase is Phase.SP]


def analyse_cell(params: ModelParams) -> CellResult:
    """Count stable fixed points, then attach the fluctuations of the reported state.

    The reported state is the stable Z+ branch when there is one (with hopping, any
    stable superradiant root), otherwise the stable normal state. The regime is the
    Roman numeral of the stable count (each superradiant branch counts twice).
    Regimes II and higher get subscript 1 when the pumped mode's normal-state
    detuning ``d_plus * (1 - lambda_a^2 / 4)`` is positive and 2 when the atom has
    pulled it negative.
    """
    np_stable = assess(build_m(params, normal_solution())).stable
    count = 1 if np_stable else 0
    reported: tuple[str, FluctuationSystem] | None = None
    stable_sp = [s for s in _sp_candidates(params) if assess(build_m(params, s)).stable]
    count += 2 * len(stable_sp)
    preferred = [s for s in stable_sp if s.branch is not Branch.Z_MINUS]
    if preferred:
        pick = next((s for s in preferred if s.branch is Branch.Z_PLUS), preferred[0])
        reported = ("SP", sp_system(params, eff_params(params, pick)))
    if reported is None and np_stable:
        reported = ("NP", np_system(params))
    label = ROMAN.get(count, str(count))
    if reported is None:
        return CellResult(count, label, "none", math.nan, math.nan, math.nan, "no stable state")
    state, system = reported
    try:
        cv = steady_correlators(system)
    except SingularDriftError:
        return CellResult(count, label, state, math.inf, math.inf, math.nan, "divergent")
    except UnstableDriftError:
        return CellResult(count, label, state, math.nan, math.nan, math.nan, "unstable fluctuations")
    angle = cv.squeezing_angle("c")
    if count >= 2:
        f = forward_form(params)
        label += "1" if f.d_plus * (1 - f.lambda_a**2 / 4) > 0 else "2"
    return CellResult(count, label, state, cv.n_c, cv.n_d, angle)


@dataclass(frozen=True)
class PhaseDiagram:
    lambdas: np.ndarray
    pumps: np.ndarray
    kappa: float
    cells: tuple[tuple[CellResult, ...], ...]

    def field(self, name: str) -> np.ndarray:
        return np.array([[getattr(c, name) for c in row] for row in self.cells])

    @property
    def counts(self) -> np.ndarray:
        return self.field("stable_count").astype(int)

    def rows(self):
        """(lambda, G/kappa, regime, n_c, n_d, stable_count) in row-major order."""
        for i, g in enumerate(self.pumps):
            for j, lam in enumerate(self.lambdas):
                c = self.cells[i][j]
                yield lam, g / self.kappa, c.regime, c.n_c, c.n_d, c.stable_count


def fluctuation_phase_diagram(params: ModelParams, lambdas: Sequence[float],
                              pumps: Sequence[float]) -> PhaseDiagram:
    lambdas = np.asarray(lambdas, dtype=float)
    pumps = np.asarray(pumps, dtype=float)
    cells = []
    for g in pumps:
        row = params.replace(pump_strength=float(g))
        cells.append(tuple(analyse_cell(row.with_lambdas(float(lam))) for lam in lambdas))
    return PhaseDiagram(lambdas, pumps, params.kappa, tuple(cells))


def _major_class(count: int) -> int:
    """Collapse stable counts to the three named regimes (0 stays 0, >=3 becomes 3)."""
    return min(count, 3)


@dataclass(frozen=True)
class Junction:
    lam: float
    pump: float
    cells: int
    tricritical: bool


def regime_junctions(diagram: PhaseDiagram, tricritical: tuple[float, float] | None = None,
                     exclusion_cells: float = 3.0) -> list[Junction]:
    """Points where regimes I, II and III meet.

    A junction is any 2x2 block of neighbouring cells that contains all three
    regimes; touching blocks are merged. A cluster lying within ``exclusion_cells``
    grid steps of ``tricritical`` (lambda, G) is tagged as the tricritical point.
    """
    cls = np.vectorize(_major_class)(diagram.counts)
    n_g, n_l = cls.shape
    hit = np.zeros((n_g - 1, n_l - 1), dtype=bool)
    for i in range(n_g - 1):
        for j in range(n_l - 1):
            block = set(cls[i:i + 2, j:j + 2].ravel().tolist())
            hit[i, j] = {1, 2, 3} <= block
    labels, n = ndimage.label(hit, structure=np.ones((3, 3)))
    dl = diagram.lambdas[1] - diagram.lambdas[0] if n_l > 1 else 1.0
    dg = diagram.pumps[1] - diagram.pumps[0] if n_g > 1 else 1.0
    out = []
    for k in range(1, n + 1):
        ii, jj = np.nonzero(labels == k)
        lam = float(np.mean(diagram.lambdas[jj] + dl / 2))
        g = float(np.mean(diagram.pumps[ii] + dg / 2))
        near = False
        if tricritical is not None:
            dist = np.hypot((diagram.lambdas[jj] + dl / 2 - tricritical[0]) / dl,
                            (diagram.pumps[ii] + dg / 2 - tricritical[1]) / dg)
            near = bool(np.min(dist) <= exclusion_cells)
        out.append(Junction(lam, g, len(ii), near))
    return out


def multicritical_points(diagram: PhaseDiagram, params: ModelParams,
                         exclusion_cells: float = 3.0) -> list[Junction]:
    """Junctions of regimes I, II and III other than the analytic tricritical point."""
    tri = (lambda_tricritical(params), g_crit_first(params.with_lambdas(1.0)).value)
    return [j for j in regime_junctions(diagram, tri, exclusion_cells) if not j.tricritical]
