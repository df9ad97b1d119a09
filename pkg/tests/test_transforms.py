import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PROLATE_BOX, SPHERE_BOX, prolate, random_points, sphere
from magsurf.calculus import ScalarField
from magsurf.coords import PointUVW
from magsurf.equilibria import prolate_labels, spherical_labels
from magsurf.report import GridSpec
from magsurf.transforms import (EquilibriumState, LineLabelFunction, TransformError, anisotropy_ratio,
                                bogoyavlenskij, composite_coefficient, identity_bogoyavlenskij, mhd_to_cgl,
                                tune_f_for_coefficient, with_name)
from magsurf.verify import residual_cgl, residual_mhd_dynamic


def _static(mu=1.0, P=0.0, rho=1.0):
    sol = sphere()
    return EquilibriumState.static(sol.B, P, rho, mu=mu, name="sphere")


def _pts(state, n=60):
    return random_points(state.chart, n, box=SPHERE_BOX)


# -- Bogoyavlenskij map ---------------------------------------------------------------

def test_identity_bogoyavlenskij_is_exact():
    s = _static(P=0.7, rho=2.0)
    u, v, w = _pts(s)
    a, b = s.evaluate(u, v, w), identity_bogoyavlenskij(s, box=SPHERE_BOX).evaluate(u, v, w)
    for k in a:
        assert np.max(np.abs(a[k] - b[k])) == 0.0, k


def test_bogoyavlenskij_composes_like_boosts():
    # with a = 1 the map acts on (B, sqrt(mu rho) V) as [[m, n], [n, m]]
    s = _static(mu=1.0, P=0.3, rho=1.5)
    t1, t2 = 0.3, -0.7
    two = bogoyavlenskij(bogoyavlenskij(s, math.cosh(t1), math.sinh(t1), 1.0, box=SPHERE_BOX),
                         math.cosh(t2), math.sinh(t2), 1.0, box=SPHERE_BOX)
    one = bogoyavlenskij(s, math.cosh(t1 + t2), math.sinh(t1 + t2), 1.0, box=SPHERE_BOX)
    u, v, w = _pts(s)
    a, b = two.evaluate(u, v, w), one.evaluate(u, v, w)
    for k in a:
        np.testing.assert_allclose(a[k], b[k], atol=1e-13, err_msg=k)


def test_bogoyavlenskij_static_to_dynamic_balance():
    sol = sphere()
    lab = spherical_labels(sol)
    s = EquilibriumState.static(sol.B, 0.4, LineLabelFunction(lambda r, zeta: 1 + 0.2 * np.cos(zeta), lab, "rho")
                                .field(sol.chart))
    m = LineLabelFunction(lambda r, zeta: np.cosh(0.3 * r), lab, "m")
    n = LineLabelFunction(lambda r, zeta: np.sinh(0.3 * r), lab, "n")
    a = LineLabelFunction(lambda r, zeta: 1 + 0.1 * np.sin(zeta), lab, "a")
    dyn = bogoyavlenskij(s, m, n, a, 1.0, box=SPHERE_BOX)
    assert dyn.kind == "mhd_dynamic" and dyn.flags["C"] == 1.0
    assert residual_mhd_dynamic(dyn, GridSpec(SPHERE_BOX, 6), tolerance=1e-5).passed


def test_non_label_scaling_breaks_balance():
    # negative control: a that varies across field lines is not allowed by the theory
    s = _static(P=0.4)
    a = ScalarField(s.chart, lambda t, p, r: 1 + 0.3 * np.sin(t) * np.cos(p))
    dyn = bogoyavlenskij(s, math.cosh(0.5), math.sinh(0.5), a, box=SPHERE_BOX)
    assert not residual_mhd_dynamic(dyn, GridSpec(SPHERE_BOX, 6), tolerance=1e-5).passed


def test_bogoyavlenskij_refusals():
    s = _static()
    with pytest.raises(TransformError, match="m\\^2 - n\\^2"):
        bogoyavlenskij(s, ScalarField(s.chart, lambda t, p, r: 1 + 0 * t + 0.1 * r), 0.0, 1.0, box=SPHERE_BOX)
    with pytest.raises(TransformError, match="density"):
        bogoyavlenskij(_static(rho=-1.0), 1.0, 0.0, 1.0, box=SPHERE_BOX)
    with pytest.raises(TransformError, match="vanishes"):
        bogoyavlenskij(s, 1.0, 0.0, 0.0, box=SPHERE_BOX)
    cgl = mhd_to_cgl(s, 1.0, 1.0, 1.0, 0.0, box=SPHERE_BOX)
    with pytest.raises(TransformError):
        bogoyavlenskij(cgl, 1.0, 0.0, 1.0, box=SPHERE_BOX)
    with pytest.raises(TransformError):
        mhd_to_cgl(cgl, 1.0, 1.0, 1.0, 0.0, box=SPHERE_BOX)


def test_explicit_constant_must_match():
    with pytest.raises(TransformError):
        bogoyavlenskij(_static(), 2.0, 1.0, 1.0, C=1.0, box=SPHERE_BOX)
    assert bogoyavlenskij(_static(), 2.0, 1.0, 1.0, box=SPHERE_BOX).flags["C"] == 3.0


# -- MHD to CGL -----------------------------------------------------------------------

def test_identity_cgl_map():
    s = _static(mu=2.0, P=0.7, rho=1.3)
    c = mhd_to_cgl(s, 1.0, 1.0, C0=0.5, C1=0.0, box=SPHERE_BOX)
    u, v, w = _pts(s)
    a, b = s.evaluate(u, v, w), c.evaluate(u, v, w)
    for k in ("B", "V", "rho"):
        assert np.max(np.abs(a[k] - b[k])) == 0.0
    np.testing.assert_allclose(b["p_perp"], a["P"], atol=1e-15)
    np.testing.assert_allclose(b["p_par"], a["P"], atol=1e-15)
    assert not c.flags["firehose_unstable"]


def test_cgl_from_prolate_dynamic_balances():
    sol = prolate()
    lab = prolate_labels(sol, 0.0)
    s = EquilibriumState.static(sol.B, 1.0, 1.0, mu=1.0)
    dyn = bogoyavlenskij(s, math.cosh(0.2), math.sinh(0.2), 1.1, box=PROLATE_BOX)
    f = LineLabelFunction(lambda psi, phi: 1 + 0.2 * np.cos(phi), lab, "f")
    cgl = mhd_to_cgl(dyn, f, 0.5, C0=0.8, C1=0.1, box=PROLATE_BOX)
    assert residual_cgl(cgl, GridSpec(PROLATE_BOX, 6), tolerance=1e-5).passed


def test_firehose_is_flagged_not_refused():
    with pytest.warns(UserWarning, match="fire-hose"):
        c = mhd_to_cgl(_static(), 1.0, 1.0, C0=-0.5, C1=0.0, box=SPHERE_BOX)
    assert c.flags["firehose_unstable"]


def test_vanishing_g_refused():
    s = _static()
    with pytest.raises(TransformError, match="g vanishes"):
        mhd_to_cgl(s, 1.0, 0.0, 1.0, 0.0, box=SPHERE_BOX)


def test_tau_is_pressure_difference_over_B2():
    s = _static(mu=1.0, P=0.5)
    c = mhd_to_cgl(s, 0.7, 1.0, C0=1.2, C1=0.0, box=SPHERE_BOX)
    u, v, w = _pts(s)
    # p_par - p_perp = -(C0 - f^2/mu) B^2 and B_cgl = f B
    np.testing.assert_allclose(c.tau(u, v, w), -(1.2 - 0.49) / 0.49, rtol=1e-12)
    assert np.all(s.tau(u, v, w) == 0.0)


# -- anisotropy -------------------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(t=st.floats(-1.0, 1.0), f=st.floats(0.3, 2.0), C0=st.floats(0.2, 3.0), C1=st.floats(2.0, 5.0),
       a=st.floats(0.5, 2.0))
def test_composite_coefficient_two_routes(t, f, C0, C1, a):
    # closed form against the value read back from the composed fields
    s = _static(mu=1.0)
    m, n = math.cosh(t), math.sinh(t)
    cgl = mhd_to_cgl(bogoyavlenskij(s, m, n, a, box=SPHERE_BOX), f, 1.0, C0, C1, box=SPHERE_BOX)
    u, v, w = _pts(s, 5)
    for i in range(5):
        r = anisotropy_ratio(cgl, PointUVW(s.chart, u[i], v[i], w[i]))
        k = float(composite_coefficient(C0, m * m - n * n, f, m, n, 1.0))
        assert r.coefficient == pytest.approx(k, rel=1e-10, abs=1e-10)
        assert r.via_coefficient == pytest.approx(r.ratio, rel=1e-12)


def test_coefficient_simplifies():
    C0, mu = 1.3, 0.7
    for f, t in [(0.5, 0.1), (1.5, 2.0)]:
        got = composite_coefficient(C0, 1.0, f, math.cosh(t), math.sinh(t), mu)
        assert got == pytest.approx(2 * C0 / f ** 2 - 2 / mu, rel=1e-12)


def test_tune_f_round_trip_and_refusal():
    f = tune_f_for_coefficient(0.847, 1.3, 1.0)
    assert float(composite_coefficient(1.3, 1.0, f, 1.0, 0.0, 1.0)) == pytest.approx(0.847, rel=1e-14)
    with pytest.raises(TransformError):
        tune_f_for_coefficient(-5.0, 1.3, 1.0)
    with pytest.raises(TransformError):
        tune_f_for_coefficient(0.5, -1.0, 1.0)


def test_anisotropy_ratio_refusals():
    s = _static()
    p = PointUVW(s.chart, 1.0, 1.0, 1.0)
    with pytest.raises(TransformError):
        anisotropy_ratio(s, p)
    zero = mhd_to_cgl(s, 1.0, 1.0, C0=1.0, C1=0.0, box=SPHERE_BOX)  # both pressures vanish
    with pytest.raises(ZeroDivisionError):
        anisotropy_ratio(zero, p)


# -- state and label plumbing ---------------------------------------------------------------

def test_state_validation():
    B = sphere().B
    with pytest.raises(TransformError):
        EquilibriumState("plasma", B, ScalarField(B.chart, lambda *x: 1.0))
    with pytest.raises(TransformError):
        EquilibriumState.static(B, mu=0.0)
    with pytest.raises(TransformError):
        EquilibriumState("cgl", B, ScalarField(B.chart, lambda *x: 1.0))
    assert with_name(_static(), "x").name == "x"


def test_label_function_plumbing():
    sol = sphere()
    lab = spherical_labels(sol)
    c = LineLabelFunction.constant(2.5)
    assert c.is_constant and float(c(1.0, 1.0, 1.0)) == 2.5
    with pytest.raises(TransformError):
        LineLabelFunction(lambda r, zeta: r).field(sol.chart)
    with pytest.raises(TransformError):
        LineLabelFunction(lambda psi, phi: psi, prolate_labels(prolate(), 0.0)).field(sol.chart)
    g = LineLabelFunction(lambda r, zeta: r * 2, lab, "g")
    assert float(g(1.0, 1.0, 1.5)[()]) == pytest.approx(3.0)
