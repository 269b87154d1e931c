import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.linalg import solve_sylvester

from dualjc import criticality as cr
from dualjc import fluctuations as fl
from dualjc.errors import SingularDriftError, UnstableDriftError
from dualjc.meanfield import Phase

from conftest import base


def lyapunov_moments(p):
    """<x_i x_j> for x = (a, a+, b, b+) from the first-moment drift and vacuum noise."""
    a = cr.sigma_np(p)
    noise = np.zeros((4, 4), dtype=complex)
    noise[0, 1] = noise[2, 3] = 2 * p.kappa
    return solve_sylvester(a, a.T, -noise)


@settings(max_examples=60)
@given(st.floats(0.2, 2.4), st.floats(-1.5, 1.5), st.floats(0.0, 0.3), st.floats(0.0, 0.3))
def test_normal_state_moments_match_lyapunov(lam, sagnac, pump, hopping):
    p = base(lambda_a=lam, sagnac=sagnac, pump_strength=pump, hopping=hopping)
    system = fl.np_system(p)
    assume(system.spectral_abscissa < -1e-3)
    cv = fl.steady_correlators(system)
    m = lyapunov_moments(p)
    assert cv.n_c == pytest.approx(m[1, 0].real, rel=1e-7, abs=1e-12)
    assert cv.n_d == pytest.approx(m[3, 2].real, rel=1e-7, abs=1e-12)
    assert cv.c2 == pytest.approx(m[0, 0], rel=1e-7, abs=1e-12)
    assert cv.cd == pytest.approx(m[0, 2], rel=1e-7, abs=1e-12)


@given(st.floats(0.0, 0.7))
def test_uncoupled_parametric_amplifier(pump):
    # Without the atom only the pumped mode responds: n = 2G^2 / (kappa^2 + D^2 - 4 G^2).
    p = base(lambda_a=0.0, pump_strength=pump)
    cv = fl.steady_correlators(fl.np_system(p))
    dp, k = 3.0, 0.1
    assert cv.n_c == pytest.approx(2 * pump**2 / (k**2 + dp**2 - 4 * pump**2), abs=1e-12)
    assert cv.n_d == pytest.approx(0.0, abs=1e-14)


@settings(max_examples=60)
@given(st.floats(0.2, 2.6), st.floats(0.05, 3.2), st.sampled_from(["forward", "backward"]))
def test_reported_state_is_physical(lam, gk, direction):
    cell = fl.analyse_cell(base(lambda_a=lam, pump_strength=gk * 0.1, pump_direction=direction))
    if cell.note:
        return
    assert cell.n_c >= -1e-12 and cell.n_d >= -1e-12


@settings(max_examples=40)
@given(st.floats(0.2, 2.6), st.floats(0.05, 3.2))
def test_superradiant_covariance_obeys_uncertainty(lam, gk):
    p = base(lambda_a=lam, pump_strength=gk * 0.1)
    for sol in fl._sp_candidates(p):
        system = fl.sp_system(p, fl.eff_params(p, sol))
        if system.spectral_abscissa >= -1e-9:
            continue
        cv = fl.steady_correlators(system)
        assert cv.pairing_error() < 1e-8
        assert np.min(cv.uncertainty_eigenvalues()) > -1e-9


def test_printed_damping_sign_is_unstable():
    p = base(lambda_a=1.42, pump_strength=0.26)
    sol = fl._sp_candidates(p)[0]
    eff = fl.eff_params(p, sol)
    assert fl.sp_system(p, eff).spectral_abscissa < 0
    assert fl.sp_system(p, eff, as_printed=True).spectral_abscissa > 0


def test_vacuum_covariance():
    cv = fl.steady_correlators(fl.np_system(base(lambda_a=1.0, pump_strength=0.0)))
    assert np.allclose(cv.covariance(), np.eye(4) / 2, atol=1e-12)


def test_divergence_and_growth_are_reported():
    p = base(lambda_a=1.0, sagnac=0.0)
    g_c = cr.g_crit_second_numeric(p).value
    with pytest.raises(UnstableDriftError):
        fl.steady_correlators(fl.np_system(p.replace(pump_strength=1.05 * g_c)))
    below = [fl.steady_correlators(fl.np_system(p.replace(pump_strength=g_c * (1 - e)))).n_c
             for e in (1e-2, 1e-3, 1e-4)]
    assert below[0] < below[1] < below[2]
    exact = fl.FluctuationSystem(np.diag([0.0, -1.0]).astype(complex), np.ones(2), Phase.NP)
    with pytest.raises(SingularDriftError):
        fl.steady_correlators(exact)


@pytest.mark.parametrize("lam,gk,regime", [
    (1.0, 1.1, "I"), (1.42, 2.6, "II1"), (1.8, 1.98, "III1"), (2.04, 2.24, "II2"),
    (2.2, 2.42, "III2"),
])
@pytest.mark.parametrize("direction", ["forward", "backward"])
def test_reference_regimes(lam, gk, regime, direction):
    cell = fl.analyse_cell(base(lambda_a=lam, pump_strength=gk * 0.1, pump_direction=direction))
    assert cell.regime == regime


def test_hopping_cells_are_analysed():
    cell = fl.analyse_cell(base(lambda_a=1.6, pump_strength=0.25, hopping=0.1))
    assert cell.stable_count >= 1
    assert cell.regime.startswith(("I", "II", "III"))


def test_junction_finder_on_synthetic_diagram():
    counts = np.array([[1, 1, 2, 2],
                       [1, 1, 2, 2],
                       [3, 3, 3, 3]])
    cells = tuple(tuple(fl.CellResult(int(c), "", "", 0.0, 0.0, 0.0) for c in row) for row in counts)
    diagram = fl.PhaseDiagram(np.arange(4.0), np.arange(3.0), 1.0, cells)
    found = fl.regime_junctions(diagram)
    assert len(found) == 1
    assert found[0].lam == pytest.approx(1.5)
    assert found[0].pump == pytest.approx(1.5)
    tagged = fl.regime_junctions(diagram, tricritical=(1.5, 1.5))
    assert tagged[0].tricritical
