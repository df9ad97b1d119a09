import math
import warnings

import numpy as np
import pytest

from conftest import ELLIPSOID_BOX, ELLIPTIC_BOX, PROLATE_BOX, SPHERE_BOX, ellipsoid, prolate, random_points, sphere
from magsurf.calculus import ScalarField, curl, directional, grad
from magsurf.coords import SingularPointError, make_builtin_chart, spherical_chart
from magsurf.equilibria import (ConstraintError, EquilibriumError, FluxFunctionPair, MetricConditionError,
                                PotentialSolution, add_polar_component, caseA_build, caseB_build,
                                conformal_force_free, conjugate_period, ellipsoid_labels, ellipsoid_reference_field,
                                ellipsoid_vacuum, elliptic_cylinder_example, glue_jet, harmonic_conjugate,
                                prolate_labels, prolate_psi, spherical_force_free,
                                spherical_labels, winding_extension)
from magsurf.equilibria.labels import LineLabels, coordinate_labels, gauss_legendre_integral
from magsurf.report import GridSpec
from magsurf.verify import force_free_alpha, potential_system_residuals, residual_mhd_static, residual_vacuum


def _rel_err(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


# -- flux pairs ----------------------------------------------------------------------

def test_flux_pair_complex_step_derivatives():
    pair = FluxFunctionPair(lambda w: np.sin(w ** 2), lambda w: np.cos(w ** 2))
    w = np.linspace(0.1, 2, 7)
    _, _, d1, d2 = pair.values(w)
    np.testing.assert_allclose(d1, 2 * w * np.cos(w ** 2), rtol=1e-14)
    np.testing.assert_allclose(d2, -2 * w * np.sin(w ** 2), rtol=1e-14)
    assert pair.constraint_residual(w) < 1e-14


def test_flux_pair_real_only_callable_falls_back_to_differences():
    pair = FluxFunctionPair(lambda w: np.sin(np.real(w)), lambda w: np.cos(np.real(w)))
    _, _, d1, _ = pair.values(np.array([0.4]))
    assert float(d1[0]) == pytest.approx(math.cos(0.4), rel=1e-8)


def test_rotating_pair_obeys_constraint():
    pair = FluxFunctionPair.rotating(lambda w: w ** 3, amplitude=2.0)
    assert pair.constraint_residual(np.linspace(-1, 1, 11)) < 1e-13


# -- spherical family (case A) ---------------------------------------------------------

def test_spherical_alpha_is_C1prime_over_C2():
    sol = sphere()
    u, v, w = random_points(sol.chart, 100, box=SPHERE_BOX)
    np.testing.assert_allclose(sol.alpha_field()(u, v, w), 2 * w, rtol=1e-13)
    alpha, rep = force_free_alpha(sol.B, GridSpec(SPHERE_BOX, 8))
    assert rep.passed
    np.testing.assert_allclose(alpha(u, v, w), 2 * w, atol=1e-6)


def test_spherical_other_pair():
    # C1 = cos(w^3), C2 = sin(w^3): C1'/C2 = -3 w^2
    sol = spherical_force_free(FluxFunctionPair(lambda w: np.cos(w ** 3), lambda w: np.sin(w ** 3)),
                               box=((0.3, 2.8), (0.0, 6.0), (0.6, 1.4)))
    u, v, w = random_points(sol.chart, 50, box=((0.3, 2.8), (0.0, 6.0), (0.6, 1.4)))
    alpha, _ = force_free_alpha(sol.B, GridSpec(((0.3, 2.8), (0.0, 6.0), (0.6, 1.4)), 4))
    np.testing.assert_allclose(alpha(u, v, w), -3 * w ** 2, atol=1e-6)


def test_closed_form_current_matches_curl():
    sol = sphere()
    u, v, w = random_points(sol.chart, 100, box=SPHERE_BOX)
    np.testing.assert_allclose(sol.J(u, v, w), curl(sol.B)(u, v, w) / sol.mu, atol=1e-7)


def test_case_A_on_polar_cylinder():
    ch = make_builtin_chart("conformal_exp")
    box = ((-0.8, 0.8), (-2.5, 2.5), (0.2, 1.5))
    one = lambda x: 1.0 + 0.0 * np.asarray(x, float)  # noqa: E731
    sol = caseA_build(ch, one, one, one, FluxFunctionPair(np.cos, np.sin), box=box)
    u, v, w = random_points(ch, 60, box=box)
    alpha, rep = force_free_alpha(sol.B, GridSpec(box, 6))
    assert rep.passed
    np.testing.assert_allclose(alpha(u, v, w), sol.alpha_field()(u, v, w), atol=1e-6)


def test_case_A_refuses_wrong_metric_ratio():
    one = lambda x: 1.0 + 0.0 * np.asarray(x, float)  # noqa: E731
    with pytest.raises(MetricConditionError):
        caseA_build(spherical_chart(), one, one, one, FluxFunctionPair(np.cos, np.sin), box=SPHERE_BOX)


def test_case_A_refuses_bad_pair():
    with pytest.raises(ConstraintError):
        spherical_force_free(FluxFunctionPair(lambda w: w, lambda w: w))


def test_spherical_labels_are_line_invariants():
    sol = sphere()
    lab = spherical_labels(sol)
    u, v, w = random_points(sol.chart, 100, box=SPHERE_BOX)
    for name in lab.names:
        f = lab.field(name)
        rate = directional(sol.B, f)(u, v, w) / np.linalg.norm(sol.B(u, v, w), axis=0)
        assert np.max(np.abs(rate)) < 1e-7, name


# -- case B ---------------------------------------------------------------------------

@pytest.mark.parametrize("variant", [1, 2])
@pytest.mark.parametrize("tau", [1, -1])
def test_case_B_is_force_free(variant, tau):
    ch = make_builtin_chart("conformal_identity")
    box = ((-0.9, 0.9), (-0.9, 0.9), (0.2, 1.8))
    pair = FluxFunctionPair(lambda w: np.cos(w ** 2), lambda w: np.sin(w ** 2))
    sol = caseB_build(ch, [(1.0, 1.0), (0.5, 2.0)], tau, variant, pair, box=box)
    u, v, w = random_points(ch, 60, box=box)
    alpha, rep = force_free_alpha(sol.B, GridSpec(box, 6))
    assert rep.passed, rep.summary_lines()
    # the stated coefficient against the one read off curl B
    np.testing.assert_allclose(alpha(u, v, w), sol.alpha_field()(u, v, w), atol=1e-6)


def test_case_B_two_mode_potential_is_harmonic():
    ch = make_builtin_chart("conformal_exp")
    box = ((-0.5, 0.5), (-2.5, 2.5), (0.0, 1.0))
    sol = caseB_build(ch, [(1.0, 1.0), (0.3, 3.0)], 1, 1, FluxFunctionPair(np.cos, np.sin), box=box)
    rep = potential_system_residuals(sol, GridSpec(box, 6))
    assert rep["laplacian_uv"].max_rel < 1e-6


@pytest.mark.parametrize("kw,err", [({"tau": 2}, EquilibriumError), ({"variant": 3}, EquilibriumError)])
def test_case_B_argument_checks(kw, err):
    args = {"tau": 1, "variant": 1} | kw
    with pytest.raises(err):
        caseB_build(make_builtin_chart("conformal_identity"), [(1, 1)], args["tau"], args["variant"],
                    FluxFunctionPair(np.cos, np.sin))


def test_case_B_overflow_guard():
    ch = make_builtin_chart("conformal_identity")
    with pytest.raises(EquilibriumError, match="exponent"):
        caseB_build(ch, [(1.0, 800.0)], 1, 1, FluxFunctionPair(np.cos, np.sin), box=((-1, 1), (-1, 1), (0, 1)))


def test_case_B_refuses_curved_g33():
    with pytest.raises(MetricConditionError):
        caseB_build(spherical_chart(), [(1, 1)], 1, 1, FluxFunctionPair(np.cos, np.sin), box=SPHERE_BOX)


# -- ellipsoid vacuum field -----------------------------------------------------------

def test_ellipsoid_is_vacuum_and_tangent():
    sol = ellipsoid()
    rep = residual_vacuum(sol.B, GridSpec(ELLIPSOID_BOX, 10))
    assert rep.passed
    u, v, w = random_points(sol.chart, 50, box=ELLIPSOID_BOX)
    assert np.all(sol.B(u, v, w)[2] == 0.0)


def test_ellipsoid_matches_reference_closed_form():
    # the reference expression carries a different overall constant
    sol = ellipsoid()
    u, v, w = random_points(sol.chart, 200, box=ELLIPSOID_BOX)
    ref = ellipsoid_reference_field(sol)(u, v, w)
    ours = sol.B(u, v, w)
    np.testing.assert_allclose(ours, -ref / 300.0, rtol=1e-10, atol=1e-14 * np.max(np.abs(ours)))


def test_ellipsoid_potential_is_harmonic_on_surfaces():
    sol = ellipsoid()
    rep = potential_system_residuals(sol, GridSpec(ELLIPSOID_BOX, 6))
    assert rep["laplacian_uv"].max_rel < 1e-6


def test_ellipsoid_stream_label_is_invariant():
    sol = ellipsoid()
    lab = ellipsoid_labels(sol)
    u, v, w = random_points(sol.chart, 100, box=ELLIPSOID_BOX)
    chi = lab.field("chi")
    rate = directional(sol.B, chi)(u, v, w)
    scale = np.linalg.norm(sol.B(u, v, w), axis=0) * np.linalg.norm(grad(chi)(u, v, w), axis=0)
    assert np.max(np.abs(rate) / scale) < 1e-6


def test_ellipsoid_other_octant():
    sol = ellipsoid_vacuum(7, 10, 0.2, 0.01, -0.1, 1 / 30, y_sign=-1, z_sign=-1)
    assert residual_vacuum(sol.B, GridSpec(ELLIPSOID_BOX, 6)).passed


# -- prolate vacuum field and its extensions ----------------------------------------------

def test_prolate_vacuum():
    assert residual_vacuum(prolate().B, GridSpec(PROLATE_BOX, 10)).passed


@pytest.mark.parametrize("D", [0.0, 2.13])
def test_prolate_flux_label_is_invariant(D):
    sol = prolate()
    B = add_polar_component(sol, D, box=PROLATE_BOX) if D else sol.B
    psi = prolate_psi(sol)
    u, v, w = random_points(sol.chart, 100, box=PROLATE_BOX)
    rate = directional(B, psi)(u, v, w)
    scale = np.linalg.norm(B(u, v, w), axis=0) * np.linalg.norm(grad(psi)(u, v, w), axis=0)
    assert np.max(np.abs(rate) / scale) < 1e-7
    assert prolate_labels(sol, D).surface == ("phi" if D == 0 else "psi")


def test_polar_component_keeps_vacuum_and_adds_only_w():
    sol = prolate()
    B = add_polar_component(sol, 2.13, box=PROLATE_BOX)
    u, v, w = random_points(sol.chart, 50, box=PROLATE_BOX)
    diff = B(u, v, w) - sol.B(u, v, w)
    assert np.max(np.abs(diff[:2])) == 0.0
    h3 = sol.chart.scale_factors(u, v, w)[2]
    np.testing.assert_allclose(diff[2], 2.13 / h3, rtol=1e-14)
    assert residual_vacuum(B, GridSpec(PROLATE_BOX, 8)).passed


def test_polar_component_refuses_axis():
    B = add_polar_component(prolate(), 1.0, box=PROLATE_BOX)
    with pytest.raises(SingularPointError):
        B(np.array([1.0]), np.array([0.0]), np.array([0.5]))


def test_polar_component_refuses_w_dependent_ratio():
    # on spheres w = r, h1 h2 / h3 = r / sin(theta) grows with r
    with pytest.raises(MetricConditionError):
        add_polar_component(sphere(), 1.0, box=SPHERE_BOX)


def test_glue_warns_when_copies_are_close():
    with pytest.warns(UserWarning, match="separation"):
        glue_jet(prolate(), 5.0)
    with pytest.raises(EquilibriumError):
        glue_jet(sphere(), 1000.0)


# -- conformal cylinders ----------------------------------------------------------------

@pytest.mark.parametrize("name", ["conformal_identity", "conformal_exp", "elliptic_cylindrical"])
def test_conformal_force_free(name):
    ch = make_builtin_chart(name)
    box = ELLIPTIC_BOX if name == "elliptic_cylindrical" else ch.default_box(margin=0.1)
    pair = FluxFunctionPair(lambda w: 2 * np.cos(3 * w), lambda w: 2 * np.sin(3 * w))
    cf = conformal_force_free(ch, pair, box=box)
    alpha, rep = force_free_alpha(cf.B, GridSpec(box, 6))
    assert rep.passed
    u, v, w = random_points(ch, 50, box=box)
    np.testing.assert_allclose(alpha(u, v, w), cf.alpha(u, v, w), atol=1e-6)
    np.testing.assert_allclose(cf.J(u, v, w), curl(cf.B)(u, v, w), atol=1e-7)


def test_constant_D_changes_B_but_not_J():
    ch = make_builtin_chart("conformal_exp")
    pair = FluxFunctionPair(np.cos, np.sin)
    plain, wound = conformal_force_free(ch, pair), conformal_force_free(ch, pair, 1.5)
    u, v, w = random_points(ch, 100)
    assert np.max(np.abs(wound.B(u, v, w)[2] - plain.B(u, v, w)[2] - 1.5)) == 0.0
    assert np.max(np.abs(curl(wound.B)(u, v, w) - curl(plain.B)(u, v, w))) <= 1e-10
    # it is no longer force-free
    assert not force_free_alpha(wound.B, GridSpec(ch.default_box(margin=0.1), 4))[1].passed


def test_conformal_refusals():
    with pytest.raises(MetricConditionError):
        conformal_force_free(spherical_chart(), FluxFunctionPair(np.cos, np.sin), box=SPHERE_BOX)
    with pytest.raises(ConstraintError):
        conformal_force_free(make_builtin_chart("conformal_identity"), FluxFunctionPair(np.cos, np.cos))


# -- harmonic conjugates and the winding extension ------------------------------------------

def test_conjugate_of_re_z_cubed():
    ch = make_builtin_chart("conformal_identity")
    box = ((-1.0, 1.0), (-1.0, 1.0), (0.0, 1.0))
    phi = ScalarField(ch, lambda u, v, w: np.real((u + 1j * v) ** 3))
    K = harmonic_conjugate(phi, box=box, base=(0.0, 0.0))
    u, v, w = random_points(ch, 100, box=box)
    np.testing.assert_allclose(K(u, v, w), np.imag((u + 1j * v) ** 3), atol=1e-12)


def test_conjugate_of_coordinate_u_is_v():
    ch = make_builtin_chart("conformal_identity")
    box = ((-1.0, 1.0), (-2.0, 2.0), (0.0, 1.0))
    K = harmonic_conjugate(ScalarField(ch, lambda u, v, w: u + 0.0 * v), box=box, base=(0.0, 0.0))
    u, v, w = random_points(ch, 50, box=box)
    np.testing.assert_allclose(K(u, v, w), v, atol=1e-13)


def test_elliptic_example_conjugate_agrees_with_closed_form():
    phi, K = elliptic_cylinder_example(1.0)
    Kn = harmonic_conjugate(phi, box=ELLIPTIC_BOX)
    u, v, w = random_points(phi.chart, 100, box=ELLIPTIC_BOX)
    d = Kn(u, v, w) - K(u, v, w)
    assert np.ptp(d) < 1e-12  # equal up to the additive constant


def test_conjugate_period_detected():
    # phi = log|Z| on the exp chart (phi = u) has conjugate v, period 2 pi
    ch = make_builtin_chart("conformal_exp")
    phi = ScalarField(ch, lambda u, v, w: u + 0.0 * v)
    assert conjugate_period(phi, 0.3) == pytest.approx(2 * math.pi, rel=1e-12)
    with pytest.warns(UserWarning, match="multivalued"):
        harmonic_conjugate(phi, box=((-0.5, 0.5), (-math.pi, math.pi), (0, 1)))


def test_conjugate_refuses_non_harmonic():
    ch = make_builtin_chart("conformal_identity")
    with pytest.raises(EquilibriumError):
        harmonic_conjugate(ScalarField(ch, lambda u, v, w: u * u + 0.0 * v), box=((-1, 1), (-1, 1), (0, 1)))


def test_winding_extension_balance():
    phi, K = elliptic_cylinder_example(1.0)
    wf = winding_extension(phi, K, C=1.0, box=ELLIPTIC_BOX)
    rep = residual_mhd_static(wf.B, wf.pressure, GridSpec(ELLIPTIC_BOX, 10), tolerance=1e-5)
    assert rep.passed
    u, v, w = random_points(phi.chart, 50, box=ELLIPTIC_BOX)
    # curl B is the in-plane part of B for this construction
    cb = curl(wf.B)(u, v, w)
    b = wf.B(u, v, w)
    np.testing.assert_allclose(cb[:2], b[:2], atol=1e-6 * np.max(np.abs(b)))


def test_winding_extension_scaled_conjugate():
    phi, K = elliptic_cylinder_example(1.0)
    wf = winding_extension(phi, 2.0 * K, box=ELLIPTIC_BOX)
    assert residual_mhd_static(wf.B, wf.pressure, GridSpec(ELLIPTIC_BOX, 6), tolerance=1e-5).passed


def test_winding_extension_refuses_non_conjugate():
    phi, _ = elliptic_cylinder_example(1.0)
    with pytest.raises(EquilibriumError):
        winding_extension(phi, phi, box=ELLIPTIC_BOX)


# -- labels helpers --------------------------------------------------------------------

def test_gauss_legendre_integral():
    got = gauss_legendre_integral(np.cos, np.zeros(3), np.array([0.5, 1.0, 2.0]))
    np.testing.assert_allclose(got, np.sin([0.5, 1.0, 2.0]), rtol=1e-14)


def test_line_labels_compose_and_surface():
    ch = make_builtin_chart("cartesian")
    lab = LineLabels(ch, ("a", "b"), lambda u, v, w: (u + v, w), "b")
    g = lab.compose(lambda a, b: a * b, "ab")
    assert float(g(1.0, 2.0, 3.0)) == 9.0
    assert float(lab.surface_field()(1.0, 2.0, 3.0)) == 3.0
    assert coordinate_labels(ch).names == ("w",)


def test_potential_solution_validation():
    ch = make_builtin_chart("cartesian")
    Phi = ScalarField(ch, lambda u, v, w: u)
    with pytest.raises(EquilibriumError):
        PotentialSolution(ch, Phi, kind="magic")
    with pytest.raises(EquilibriumError):
        PotentialSolution(ch, Phi, mu=-1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert PotentialSolution(ch, Phi).alpha_field() is None
