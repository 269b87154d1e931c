"""Full quantum model on truncated Fock spaces.

Basis ordering is qubit (x) mode a (x) mode b with every index ascending. Qubit index
0 is the ground state |down> and 1 the excited state |up>, so ``sigma_minus = |0><1|``
and the qubit index doubles as its excitation number. Density operators are
vectorised row-major (``rho.ravel()``), for which ``vec(A X B) = (A kron B.T) vec(X)``.

Dissipators use ``D[o] rho = 2 o rho o^dag - o^dag o rho - rho o^dag o`` at the rate
attached to each collapse operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import ndimage

from .errors import (
    GridTooSmallError,
    InvalidParameterError,
    NonUniqueSteadyStateError,
    NotConvergedError,
    TruncationTooSmallError,
)
from .meanfield import MeanFieldSolution
from .model import ModelParams, PumpDirection, forward_form

TRUNCATION_TOL = 1e-6
DIRECT_LIMIT = 10_000          # largest D**2 solved by sparse LU; beyond it GMRES
RESIDUAL_TOL = 1e-9
UNIQUENESS_TOL = 1e-6
PRECONDITIONER_SHIFT = 1e-4
GRID_EDGE_TOL = 1e-4


@dataclass(frozen=True)
class FockSpec:
    n_a: int
    n_b: int

    def __post_init__(self) -> None:
        for name in ("n_a", "n_b"):
            value = getattr(self, name)
            if int(value) != value or value < 2:
                raise InvalidParameterError(f"{name} must be an integer >= 2, got {value!r}")

    @property
    def dim(self) -> int:
        return 2 * self.n_a * self.n_b

    def index(self, qubit: int, n_a: int, n_b: int) -> int:
        """Position of the product state |qubit, n_a, n_b> in the basis."""
        return (qubit * self.n_a + n_a) * self.n_b + n_b


def _lowering(n: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, n, dtype=float)), 1, format="csr")


@dataclass(frozen=True)
class Operators:
    spec: FockSpec
    a: sp.csr_matrix
    b: sp.csr_matrix
    sigma_minus: sp.csr_matrix

    @property
    def sigma_z(self) -> sp.csr_matrix:
        sp_ = self.sigma_minus.T
        return (sp_ @ self.sigma_minus - self.sigma_minus @ sp_).tocsr()

    @property
    def excitations(self) -> sp.csr_matrix:
        """a^dag a + b^dag b + (sigma_z + 1)/2, diagonal in the product basis."""
        return (self.a.T @ self.a + self.b.T @ self.b + self.sigma_minus.T @ self.sigma_minus).tocsr()

    @property
    def parity(self) -> sp.csr_matrix:
        n = self.excitations.diagonal().round().astype(int)
        return sp.diags(np.where(n % 2 == 0, 1.0, -1.0), format="csr")


def operators(spec: FockSpec) -> Operators:
    eye_q, eye_a, eye_b = sp.identity(2), sp.identity(spec.n_a), sp.identity(spec.n_b)
    lower_q = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
    a = sp.kron(sp.kron(eye_q, _lowering(spec.n_a)), eye_b, format="csr")
    b = sp.kron(sp.kron(eye_q, eye_a), _lowering(spec.n_b), format="csr")
    s = sp.kron(sp.kron(lower_q, eye_a), eye_b, format="csr")
    return Operators(spec, a, b, s)


def build_hamiltonian(params: ModelParams, spec: FockSpec,
                      ops: Operators | None = None) -> sp.csr_matrix:
    """Rotating-frame Hamiltonian with physical labels.

    Mode a sits at ``delta + sagnac`` and mode b at ``delta - sagnac``; the
    two-photon drive acts on a for a forward pump and on b for a backward one.
    """
    ops = ops or operators(spec)
    a, b, s = ops.a, ops.b, ops.sigma_minus
    ad, bd, sd = a.T.tocsr(), b.T.tocsr(), s.T.tocsr()
    pumped = a if params.pump_direction is PumpDirection.FORWARD else b
    h = ((params.delta + params.sagnac) * (ad @ a)
         + (params.delta - params.sagnac) * (bd @ b)
         + 0.5 * params.delta_q * ops.sigma_z
         + params.pump_strength * (pumped.T @ pumped.T + pumped @ pumped)
         + (params.g_a * a + params.g_b * b) @ sd
         + (params.g_a * ad + params.g_b * bd) @ s
         + params.hopping * (ad @ b + bd @ a))
    return sp.csr_matrix(h, dtype=complex)


def collapse_operators(params: ModelParams, ops: Operators) -> list[tuple[sp.csr_matrix, float]]:
    """(operator, rate) pairs; thermal excitation terms only when the occupation is nonzero."""
    nbar = params.thermal_occupation
    out = [(ops.a, params.kappa * (1 + nbar)), (ops.b, params.kappa * (1 + nbar)),
           (ops.sigma_minus, params.gamma)]
    if nbar > 0:
        out += [(ops.a.T.tocsr(), params.kappa * nbar), (ops.b.T.tocsr(), params.kappa * nbar)]
    return [(c, r) for c, r in out if r > 0]


class Liouvillian:
    """Generator of the master equation, applied matrix-free or assembled on demand."""

    def __init__(self, hamiltonian: sp.csr_matrix, collapse: Sequence[tuple[sp.csr_matrix, float]],
                 spec: FockSpec, ops: Operators | None = None):
        self.hamiltonian = sp.csr_matrix(hamiltonian, dtype=complex)
        self.collapse = [(sp.csr_matrix(c, dtype=complex), float(r)) for c, r in collapse]
        self.spec = spec
        self.ops = ops or operators(spec)
        self._terms = [(c, c.conj().T.tocsr(), (c.conj().T @ c).tocsr(), r) for c, r in self.collapse]

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def effective_hamiltonian(self) -> np.ndarray:
        """H - i sum_k r_k c_k^dag c_k as a dense array."""
        h = self.hamiltonian.toarray()
        for _, _, cdc, r in self._terms:
            h = h - 1j * r * cdc.toarray()
        return h

    def apply(self, rho: np.ndarray) -> np.ndarray:
        h = self.hamiltonian
        out = -1j * (h @ rho - _right(rho, h))
        for c, cd, cdc, r in self._terms:
            out += r * (2 * (c @ _right(rho, cd)) - cdc @ rho - _right(rho, cdc))
        return out

    def superoperator(self) -> sp.csr_matrix:
        """D^2 x D^2 sparse matrix acting on row-major vectorised density operators."""
        eye = sp.identity(self.dim, format="csr")
        h = self.hamiltonian
        out = -1j * (sp.kron(h, eye) - sp.kron(eye, h.T))
        for c, cd, cdc, r in self._terms:
            out = out + r * (2 * sp.kron(c, cd.T) - sp.kron(cdc, eye) - sp.kron(eye, cdc.T))
        return out.tocsr()


def _right(x: np.ndarray, m: sp.spmatrix) -> np.ndarray:
    """Dense ``x @ m`` for sparse ``m``."""
    return (m.T @ x.T).T


def build_liouvillian(params: ModelParams, spec: FockSpec) -> Liouvillian:
    ops = operators(spec)
    return Liouvillian(build_hamiltonian(params, spec, ops), collapse_operators(params, ops), spec, ops)


def parity_superoperator(spec: FockSpec) -> sp.csr_matrix:
    p = operators(spec).parity
    return sp.kron(p, p, format="csr")


# steady state -----------------------------------------------------------------------

@dataclass(frozen=True)
class Diagnostics:
    method: str
    residual: float
    trace_deviation: float
    hermiticity: float
    min_eigenvalue: float
    top_population_a: float
    top_population_b: float
    uniqueness_gap: float | None


@dataclass(frozen=True)
class SteadyStateResult:
    rho: np.ndarray
    spec: FockSpec
    photons_a: float
    photons_b: float
    sigma_z: float
    mean_a: complex
    mean_b: complex
    parity: float
    diagnostics: Diagnostics = field(repr=False)

    def observables(self) -> dict[str, float]:
        return {
            "n_a": self.photons_a, "n_b": self.photons_b, "sigma_z": self.sigma_z,
            "a_re": self.mean_a.real, "a_im": self.mean_a.imag,
            "b_re": self.mean_b.real, "b_im": self.mean_b.imag, "parity": self.parity,
        }


def _solve_direct(liouv: Liouvillian, pivot: int) -> np.ndarray:
    d = liouv.dim
    m = liouv.superoperator().tolil()
    row = pivot * d + pivot
    m[row, :] = 0
    m[row, np.arange(d) * (d + 1)] = 1.0
    rhs = np.zeros(d * d, dtype=complex)
    rhs[row] = 1.0
    try:
        x = spla.splu(m.tocsc()).solve(rhs)
    except RuntimeError as exc:
        raise NonUniqueSteadyStateError(f"trace-constrained generator is singular: {exc}") from exc
    return x.reshape(d, d)


def _preconditioner(liouv: Liouvillian) -> Callable[[np.ndarray], np.ndarray]:
    """Exact inverse of the no-jump part X -> -i (H_eff X - X H_eff^dag), slightly shifted."""
    ev, vec = sla.eig(liouv.effective_hamiltonian)
    vinv = sla.inv(vec)
    denom = 1j / (ev[:, None] - np.conj(ev)[None, :] + 1j * PRECONDITIONER_SHIFT)

    def inverse(b: np.ndarray) -> np.ndarray:
        return vec @ ((vinv @ b @ vinv.conj().T) * denom) @ vec.conj().T

    return inverse


def _solve_gmres(liouv: Liouvillian, anchor: np.ndarray, inverse, rtol: float) -> np.ndarray:
    """Solve L(rho) + anchor * tr(rho) = anchor; the unique solution is the steady state."""
    d = liouv.dim

    def matvec(y):
        x = inverse(y.reshape(d, d))
        return (liouv.apply(x) + anchor * np.trace(x)).ravel()

    op = spla.LinearOperator((d * d, d * d), matvec=matvec, dtype=complex)
    y, info = spla.gmres(op, anchor.ravel(), rtol=rtol, restart=300, maxiter=10)
    if info < 0:
        raise NotConvergedError(f"gmres failed with code {info}")
    return inverse(y.reshape(d, d))


def _finish(raw: np.ndarray) -> tuple[np.ndarray, float, float]:
    tr = np.trace(raw)
    rho = raw / tr
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    return 0.5 * (rho + rho.conj().T), float(abs(tr.imag) / max(abs(tr), 1e-300)), herm


def steady_state(liouv: Liouvillian, *, method: str = "auto", check_unique: bool = True,
                 truncation_tol: float = TRUNCATION_TOL, rtol: float = 1e-11) -> SteadyStateResult:
    """Unique steady state of ``liouv`` with physicality and truncation checks.

    ``method`` is "direct" (sparse LU of the trace-row replaced superoperator),
    "iterative" (preconditioned GMRES) or "auto", which picks LU for small spaces.
    With ``check_unique`` a second solve under a different normalisation anchor must
    agree, which fails when the generator has more than one stationary state.
    """
    d = liouv.dim
    if method == "auto":
        method = "direct" if d * d <= DIRECT_LIMIT else "iterative"
    if method == "direct":
        raw = _solve_direct(liouv, 0)
        second = _solve_direct(liouv, d - 1) if check_unique else None
    elif method == "iterative":
        inverse = _preconditioner(liouv)
        raw = _solve_gmres(liouv, np.eye(d) / d, inverse, rtol)
        if check_unique:
            weights = np.linspace(1.0, 2.0, d)
            second = _solve_gmres(liouv, np.diag(weights / weights.sum()), inverse, rtol)
        else:
            second = None
    else:
        raise InvalidParameterError(f"unknown method {method!r}")

    rho, trace_dev, herm = _finish(raw)
    gap = None
    if second is not None:
        gap = float(np.max(np.abs(rho - _finish(second)[0])))
        if not np.isfinite(gap) or gap > UNIQUENESS_TOL:
            raise NonUniqueSteadyStateError(f"steady state depends on the normalisation (gap {gap:.2e})")
    residual = float(np.linalg.norm(liouv.apply(rho)))
    if not residual < RESIDUAL_TOL * np.linalg.norm(rho):
        raise NotConvergedError(f"steady-state residual {residual:.2e} too large")
    min_eig = float(np.linalg.eigvalsh(rho)[0])
    if min_eig < -1e-8:
        raise NotConvergedError(f"steady state not positive (min eigenvalue {min_eig:.2e})")

    spec, ops = liouv.spec, liouv.ops
    pa, pb = _populations(rho, spec)
    if max(pa[-1], pb[-1]) > truncation_tol:
        raise TruncationTooSmallError(
            f"top Fock populations {pa[-1]:.2e} (a), {pb[-1]:.2e} (b) exceed {truncation_tol:g}")

    def expect(op):
        return complex(np.sum(op.multiply(rho.T)))

    diag = Diagnostics(method, residual, trace_dev, herm, min_eig, float(pa[-1]), float(pb[-1]), gap)
    return SteadyStateResult(
        rho=rho, spec=spec,
        photons_a=float(np.dot(np.arange(spec.n_a), pa)),
        photons_b=float(np.dot(np.arange(spec.n_b), pb)),
        sigma_z=expect(ops.sigma_z).real,
        mean_a=expect(ops.a), mean_b=expect(ops.b),
        parity=float(np.real(np.dot(ops.parity.diagonal(), np.diag(rho)))),
        diagnostics=diag,
    )


def _populations(rho: np.ndarray, spec: FockSpec) -> tuple[np.ndarray, np.ndarray]:
    p = np.real(np.diag(rho)).reshape(2, spec.n_a, spec.n_b)
    return p.sum(axis=(0, 2)), p.sum(axis=(0, 1))


def solve(params: ModelParams, spec: FockSpec, **kwargs) -> SteadyStateResult:
    return steady_state(build_liouvillian(params, spec), **kwargs)


# reduced states, phase space ---------------------------------------------------------

def reduce_mode(result: SteadyStateResult, mode: str = "a") -> np.ndarray:
    """Single-mode density operator after tracing out the qubit and the other mode."""
    spec = result.spec
    r = result.rho.reshape(2, spec.n_a, spec.n_b, 2, spec.n_a, spec.n_b)
    if mode == "a":
        return np.einsum("iajibj->ab", r)
    if mode == "b":
        return np.einsum("iajiak->jk", r)
    raise InvalidParameterError(f"mode must be 'a' or 'b', got {mode!r}")


def _quadrature_moments(rho: np.ndarray) -> tuple[float, float, float, float]:
    """<x>, <p>, <x^2>, <p^2> with x = (a + a^dag)/sqrt 2 and p = (a - a^dag)/(i sqrt 2)."""
    a = _lowering(rho.shape[0]).toarray()
    x = (a + a.T) / math.sqrt(2)
    p = (a - a.T) / (1j * math.sqrt(2))
    ev = [np.trace(o @ rho).real for o in (x, p, x @ x, p @ p)]
    return ev[0], ev[1], ev[2], ev[3]


def squeezing_sx(result: SteadyStateResult | np.ndarray, mode: str = "a") -> float:
    """2 Var(x) - 1 for the mode's position quadrature; 0 for vacuum, -1 at the bound."""
    rho = reduce_mode(result, mode) if isinstance(result, SteadyStateResult) else np.asarray(result)
    mx, _, xx, _ = _quadrature_moments(rho)
    return 2 * (xx - mx * mx) - 1


@dataclass(frozen=True)
class WignerGrid:
    """W(x, p) sampled on ``values[i, j] = W(x[j], p[i])`` with hbar = 1."""

    x: np.ndarray
    p: np.ndarray
    values: np.ndarray

    @property
    def cell_area(self) -> float:
        return float((self.x[1] - self.x[0]) * (self.p[1] - self.p[0]))

    def normalization(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def reflection_asymmetry(self) -> float:
        """max |W(x, p) - W(-x, -p)|; requires axes symmetric about zero."""
        if not (np.allclose(self.x, -self.x[::-1]) and np.allclose(self.p, -self.p[::-1])):
            raise InvalidParameterError("point reflection needs axes symmetric about the origin")
        return float(np.max(np.abs(self.values - self.values[::-1, ::-1])))

    def peaks(self, rel_height: float = 0.1) -> list[tuple[float, float, float]]:
        """Local maxima above ``rel_height`` of the global maximum, as (x, p, W)."""
        w = self.values
        local = (w == ndimage.maximum_filter(w, size=5, mode="nearest")) & (w > rel_height * w.max())
        return [(float(self.x[j]), float(self.p[i]), float(w[i, j])) for i, j in zip(*np.nonzero(local))]


def default_axis(rho: np.ndarray, points: int = 201, width: float = 6.0) -> np.ndarray:
    """Symmetric axis over +-width*sigma, sigma from the raw quadrature second moments."""
    _, _, xx, pp = _quadrature_moments(rho)
    sigma = math.sqrt(max(xx, pp, 0.5))
    return np.linspace(-width * sigma, width * sigma, points)


def wigner(rho: np.ndarray, x: np.ndarray | None = None, p: np.ndarray | None = None,
           *, points: int = 201, width: float = 6.0) -> WignerGrid:
    """Wigner function of a single-mode density operator.

    Evaluates (1/pi) tr[rho D(alpha) Parity D(alpha)^dag] at alpha = (x + i p)/sqrt 2 by
    summing the Fock-basis Laguerre kernels through their three-term recursion.
    """
    rho = np.asarray(rho, dtype=complex)
    n = rho.shape[0]
    if x is None:
        x = default_axis(rho, points, width)
    if p is None:
        p = x
    x, p = np.asarray(x, dtype=float), np.asarray(p, dtype=float)
    photons = float(np.real(np.dot(np.arange(n), np.diag(rho))))
    reach = min(np.max(np.abs(x)), np.max(np.abs(p)))
    if reach ** 2 < 2 * photons + 1:
        raise GridTooSmallError(f"grid half-width {reach:.3g} below the state's extent")

    xx, pp = np.meshgrid(x, p)
    amp = (xx + 1j * pp) / math.sqrt(2)
    two_a, two_ac = 2 * amp, 2 * np.conj(amp)
    kernel = [np.exp(-2 * np.abs(amp) ** 2) / math.pi]
    w = np.real(rho[0, 0]) * kernel[0].real
    for k in range(1, n):
        kernel.append(two_a * kernel[k - 1] / math.sqrt(k))
        w = w + 2 * np.real(rho[0, k] * kernel[k])
    for m in range(1, n):
        prev = kernel[m].copy()
        kernel[m] = (two_ac * prev - math.sqrt(m) * kernel[m - 1]) / math.sqrt(m)
        w = w + np.real(rho[m, m] * kernel[m])
        for k in range(m + 1, n):
            nxt = (two_a * kernel[k - 1] - math.sqrt(m) * prev) / math.sqrt(k)
            prev = kernel[k].copy()
            kernel[k] = nxt
            w = w + 2 * np.real(rho[m, k] * kernel[k])

    edge = max(np.abs(w[0]).max(), np.abs(w[-1]).max(), np.abs(w[:, 0]).max(), np.abs(w[:, -1]).max())
    if edge > GRID_EDGE_TOL * np.abs(w).max():
        raise GridTooSmallError(f"Wigner function reaches {edge:.2e} on the grid boundary")
    return WignerGrid(x, p, w)


def sigma_z_groundstate_check(params: ModelParams, solution: MeanFieldSolution) -> tuple[float, float]:
    """Mean-field <sigma_z> next to the lower qubit eigenstate's value in the classical field."""
    f = forward_form(params)
    drive = f.lambda_a * solution.alpha + f.lambda_b * solution.beta
    return solution.spin.z, -1.0 / math.sqrt(1.0 + abs(drive) ** 2)
