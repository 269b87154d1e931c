import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm
from scipy.special import gammaln

from dualjc import lindblad as lb
from dualjc import meanfield as mf
from dualjc.errors import (
    GridTooSmallError,
    InvalidParameterError,
    NonUniqueSteadyStateError,
    TruncationTooSmallError,
)
from dualjc.model import ModelParams

from conftest import base

SMALL = lb.FockSpec(4, 3)


def small(**kw):
    values = dict(delta=2.0, sagnac=1.0, delta_q=5.0, kappa=0.5, gamma=0.5, lambda_a=1.0,
                  pump_strength=0.2)
    values.update(kw)
    return ModelParams.from_lambdas(**values)


def dense_liouvillian(params, spec):
    """Reference generator assembled from dense operators, row-major vectorisation."""
    q = np.array([[0.0, 1.0], [0.0, 0.0]])
    la = np.diag(np.sqrt(np.arange(1, spec.n_a)), 1)
    lbm = np.diag(np.sqrt(np.arange(1, spec.n_b)), 1)
    ia, ib, iq = np.eye(spec.n_a), np.eye(spec.n_b), np.eye(2)
    a = np.kron(np.kron(iq, la), ib)
    b = np.kron(np.kron(iq, ia), lbm)
    s = np.kron(np.kron(q, ia), ib)
    sz = s.T @ s - s @ s.T
    pumped = a if params.pump_direction.value == "forward" else b
    h = ((params.delta + params.sagnac) * a.T @ a + (params.delta - params.sagnac) * b.T @ b
         + 0.5 * params.delta_q * sz + params.pump_strength * (pumped.T @ pumped.T + pumped @ pumped)
         + params.g_a * (a @ s.T + a.T @ s) + params.g_b * (b @ s.T + b.T @ s)
         + params.hopping * (a.T @ b + b.T @ a))
    n = h.shape[0]
    eye = np.eye(n)
    gen = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    nbar = params.thermal_occupation
    for op, rate in ((a, params.kappa * (1 + nbar)), (b, params.kappa * (1 + nbar)),
                     (s, params.gamma), (a.T, params.kappa * nbar), (b.T, params.kappa * nbar)):
        od = op.conj().T
        gen += rate * (2 * np.kron(op, op.conj()) - np.kron(od @ op, eye) - np.kron(eye, (od @ op).T))
    return gen


def random_density(d, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = m @ m.conj().T
    return rho / np.trace(rho)


# operators ---------------------------------------------------------------------------

def test_fock_spec_validation():
    with pytest.raises(InvalidParameterError):
        lb.FockSpec(1, 4)
    with pytest.raises(InvalidParameterError):
        lb.FockSpec(3, 2.5)
    assert lb.FockSpec(3, 4).dim == 24


def test_matrix_elements():
    spec = lb.FockSpec(4, 4)
    p = small(pump_strength=0.3)
    h = lb.build_hamiltonian(p, spec).toarray()
    vac = spec.index(0, 0, 0)
    assert h[spec.index(0, 2, 0), vac] == pytest.approx(math.sqrt(2) * 0.3)
    assert h[spec.index(0, 0, 2), vac] == 0
    assert h[spec.index(1, 0, 0), spec.index(0, 1, 0)] == pytest.approx(p.g_a)
    assert h[spec.index(1, 0, 0), spec.index(0, 0, 1)] == pytest.approx(p.g_b)
    back = lb.build_hamiltonian(small(pump_strength=0.3, pump_direction="backward"), spec).toarray()
    assert back[spec.index(0, 0, 2), vac] == pytest.approx(math.sqrt(2) * 0.3)


@given(st.floats(0.0, 2.0), st.floats(-1.5, 1.5), st.floats(0.0, 1.0), st.floats(0.0, 1.0),
       st.sampled_from(["forward", "backward"]))
def test_hamiltonian_hermitian_and_parity_even(lam, sagnac, pump, hopping, direction):
    spec = lb.FockSpec(4, 3)
    p = small(lambda_a=lam, sagnac=sagnac, pump_strength=pump, hopping=hopping,
              pump_direction=direction)
    ops = lb.operators(spec)
    h = lb.build_hamiltonian(p, spec, ops)
    assert abs(h - h.conj().T).max() < 1e-14
    assert abs(h @ ops.parity - ops.parity @ h).max() < 1e-14


@settings(max_examples=20)
@given(st.floats(0.0, 2.0), st.floats(0.0, 0.5), st.floats(0.0, 0.3), st.floats(0.0, 0.2))
def test_superoperator_matches_dense_reference(lam, pump, hopping, nbar):
    p = small(lambda_a=lam, pump_strength=pump, hopping=hopping, thermal_occupation=nbar)
    liouv = lb.build_liouvillian(p, SMALL)
    assert np.allclose(liouv.superoperator().toarray(), dense_liouvillian(p, SMALL), atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_generator_is_trace_free_and_parity_symmetric(seed):
    p = small(thermal_occupation=0.1, hopping=0.2)
    liouv = lb.build_liouvillian(p, SMALL)
    rho = random_density(SMALL.dim, seed)
    out = liouv.apply(rho)
    assert abs(np.trace(out)) < 1e-12
    assert np.allclose(out, (liouv.superoperator() @ rho.ravel()).reshape(out.shape), atol=1e-12)
    big, par = liouv.superoperator(), lb.parity_superoperator(SMALL)
    assert abs(big @ par - par @ big).max() < 1e-12


# steady states -----------------------------------------------------------------------

def test_vacuum_without_drive():
    r = lb.solve(small(lambda_a=0.0, pump_strength=0.0), SMALL)
    assert r.rho[0, 0].real == pytest.approx(1.0, abs=1e-12)
    assert r.photons_a == pytest.approx(0.0, abs=1e-12)
    assert r.sigma_z == pytest.approx(-1.0, abs=1e-12)


def test_thermal_occupation():
    spec = lb.FockSpec(12, 12)
    r = lb.solve(small(lambda_a=0.0, pump_strength=0.0, thermal_occupation=0.05), spec)
    assert r.photons_a == pytest.approx(0.05, rel=1e-6)
    assert r.photons_b == pytest.approx(0.05, rel=1e-6)


def test_decoupled_qubit_without_decay_is_not_unique():
    with pytest.raises(NonUniqueSteadyStateError):
        lb.solve(small(lambda_a=0.0, gamma=0.0), SMALL)


@pytest.mark.parametrize("pump", [0.3, 0.6, 1.0])
def test_parametric_amplifier_photon_number(pump):
    # Without the atom the pumped mode is a detuned degenerate amplifier.
    p = small(lambda_a=0.0, pump_strength=pump, kappa=0.2)
    r = lb.solve(p, lb.FockSpec(40, 2))
    dp, k = 3.0, 0.2
    assert r.photons_a == pytest.approx(2 * pump**2 / (k**2 + dp**2 - 4 * pump**2), rel=1e-6)


def test_direct_and_iterative_agree():
    spec = lb.FockSpec(8, 6)
    p = small(hopping=0.1, thermal_occupation=0.02)
    liouv = lb.build_liouvillian(p, spec)
    d = lb.steady_state(liouv, method="direct")
    i = lb.steady_state(liouv, method="iterative")
    assert np.max(np.abs(d.rho - i.rho)) < 1e-9
    assert d.diagnostics.method == "direct" and i.diagnostics.method == "iterative"


def test_symmetric_steady_state_properties():
    r = lb.solve(small(lambda_a=1.4, pump_strength=0.6), lb.FockSpec(12, 8))
    d = r.diagnostics
    assert d.residual < 1e-9 and d.min_eigenvalue > -1e-8 and d.uniqueness_gap < 1e-6
    assert abs(r.mean_a) < 1e-9 and abs(r.mean_b) < 1e-9
    assert -1 <= r.parity <= 1
    assert np.allclose(r.rho, r.rho.conj().T)


def test_truncation_guard():
    with pytest.raises(TruncationTooSmallError):
        lb.solve(small(pump_strength=1.2), lb.FockSpec(4, 3))
    r = lb.solve(small(pump_strength=1.2), lb.FockSpec(4, 3), truncation_tol=1.0)
    assert r.diagnostics.top_population_a > 1e-6


def test_truncation_convergence():
    p = small(lambda_a=1.2, pump_strength=0.5)
    coarse = lb.solve(p, lb.FockSpec(10, 10), truncation_tol=1e-4)
    fine = lb.solve(p, lb.FockSpec(14, 14))
    assert coarse.photons_a == pytest.approx(fine.photons_a, rel=1e-3)


def test_reduced_states():
    r = lb.solve(small(hopping=0.2), lb.FockSpec(6, 5))
    for mode, n in (("a", 6), ("b", 5)):
        rho = lb.reduce_mode(r, mode)
        assert rho.shape == (n, n)
        assert np.trace(rho).real == pytest.approx(1.0)
        assert np.trace(rho @ rho).real <= 1.0 + 1e-12
    assert np.dot(np.arange(6), np.diag(lb.reduce_mode(r, "a")).real) == pytest.approx(r.photons_a)
    with pytest.raises(InvalidParameterError):
        lb.reduce_mode(r, "c")


def test_unknown_method():
    with pytest.raises(InvalidParameterError):
        lb.steady_state(lb.build_liouvillian(small(), SMALL), method="magic")


# quadratures and phase space ------------------------------------------------------------

def squeezed_vacuum(r, n=60):
    a = np.diag(np.sqrt(np.arange(1, n)), 1)
    psi = expm(0.5 * r * (a @ a - a.T @ a.T))[:, 0]
    return np.outer(psi, psi.conj())


@pytest.mark.parametrize("r", [0.0, 0.3, 0.8])
def test_squeezing_parameter(r):
    assert lb.squeezing_sx(squeezed_vacuum(r)) == pytest.approx(math.exp(-2 * r) - 1, abs=1e-9)


def coherent(beta, n=40):
    k = np.arange(n)
    amps = np.exp(-abs(beta) ** 2 / 2 - 0.5 * gammaln(k + 1)) * np.asarray(beta) ** k
    return np.outer(amps, amps.conj())


def test_wigner_vacuum_and_normalisation():
    vac = np.zeros((8, 8))
    vac[0, 0] = 1
    w = lb.wigner(vac)
    assert w.values.max() == pytest.approx(1 / math.pi, abs=1e-12)
    assert w.normalization() == pytest.approx(1.0, abs=1e-6)
    assert w.reflection_asymmetry() < 1e-15


def test_wigner_coherent_state():
    beta = 1.2 - 0.7j
    x = np.linspace(-7, 7, 141)
    w = lb.wigner(coherent(beta), x)
    x0, p0 = math.sqrt(2) * beta.real, math.sqrt(2) * beta.imag
    xx, pp = np.meshgrid(x, x)
    exact = np.exp(-(xx - x0) ** 2 - (pp - p0) ** 2) / math.pi
    assert np.max(np.abs(w.values - exact)) < 1e-10
    assert len(w.peaks()) == 1


def test_wigner_single_photon():
    rho = np.zeros((4, 4))
    rho[1, 1] = 1
    x = np.linspace(-6, 6, 121)
    w = lb.wigner(rho, x)
    xx, pp = np.meshgrid(x, x)
    r2 = xx**2 + pp**2
    assert np.max(np.abs(w.values - (2 * r2 - 1) * np.exp(-r2) / math.pi)) < 1e-12


def test_wigner_equals_displaced_parity():
    n, pad = 6, 40
    rho = random_density(n, 7)
    big = np.zeros((pad, pad), dtype=complex)
    big[:n, :n] = rho
    a = np.diag(np.sqrt(np.arange(1, pad)), 1)
    parity = np.diag((-1.0) ** np.arange(pad))
    x = np.linspace(-6, 6, 61)
    w = lb.wigner(rho, x)
    for xv, pv in ((0.6, -0.4), (-1.2, 1.4), (0.0, 2.0)):
        alpha = (xv + 1j * pv) / math.sqrt(2)
        disp = expm(alpha * a.T - np.conj(alpha) * a)
        ref = np.trace(big @ disp @ parity @ disp.conj().T).real / math.pi
        i, j = np.argmin(np.abs(x - pv)), np.argmin(np.abs(x - xv))
        assert w.values[i, j] == pytest.approx(ref, abs=1e-9)


def test_wigner_two_peaks_for_cat_mixture():
    rho = 0.5 * (coherent(1.8) + coherent(-1.8))
    w = lb.wigner(rho)
    assert len(w.peaks()) == 2
    assert w.reflection_asymmetry() < 1e-12


def test_wigner_grid_guards():
    with pytest.raises(GridTooSmallError):
        lb.wigner(coherent(2.0), np.linspace(-1, 1, 21))
    with pytest.raises(GridTooSmallError):
        lb.wigner(coherent(2.5), np.linspace(-3.5, 3.5, 71))
    w = lb.wigner(coherent(0.3), np.linspace(-6, 6, 61), np.linspace(-5, 7, 61))
    with pytest.raises(InvalidParameterError):
        w.reflection_asymmetry()


def test_spin_sits_in_its_lower_eigenstate():
    p = base(lambda_a=1.5, pump_strength=0.3)
    for sol in mf.steady_states(p):
        z, expected = lb.sigma_z_groundstate_check(p, sol)
        assert z == pytest.approx(expected, abs=1e-9)


def test_sparse_types():
    ops = lb.operators(SMALL)
    assert sp.issparse(ops.a) and ops.a.shape == (SMALL.dim, SMALL.dim)
    n = ops.excitations.diagonal()
    assert np.allclose(n, np.round(n))
