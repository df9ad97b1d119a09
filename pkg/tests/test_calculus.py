import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import chart, random_points
from magsurf.calculus import (ScalarField, VectorField, cross, curl, directional, div, dot, grad, laplacian_uv,
                              partial, scalar_constant, step_for_depth)
from magsurf.coords import BUILTIN_CHARTS, FD_STEP, FD_STEP_NESTED, cartesian_chart, spherical_chart

ALL = list(BUILTIN_CHARTS)
FD_BOX = {"ellipsoidal": ((7.3, 9.7), (-5.6, 5.6), (10.5, 14.0))}


def _cart_scalar(x, y, z):
    return np.sin(0.3 * x) * np.cos(0.2 * y) + 0.1 * x * z + np.exp(0.05 * z)


def _cart_grad(x, y, z):
    return np.array([0.3 * np.cos(0.3 * x) * np.cos(0.2 * y) + 0.1 * z,
                     -0.2 * np.sin(0.3 * x) * np.sin(0.2 * y),
                     0.1 * x + 0.05 * np.exp(0.05 * z)])


def _cart_vec(x, y, z):
    return np.array([0.1 * z * np.sin(0.2 * y), np.cos(0.3 * z) + 0.01 * x * x, 0.1 * x * y])


def _cart_curl(x, y, z):
    return np.array([0.1 * x + 0.3 * np.sin(0.3 * z),
                     0.1 * np.sin(0.2 * y) - 0.1 * y,
                     0.02 * x - 0.02 * z * np.cos(0.2 * y)])


def _cart_div(x, y, z):
    return 0.0 * x  # each component is independent of its own coordinate


def _on(ch):
    return ScalarField(ch, lambda u, v, w: _cart_scalar(*ch.to_cartesian(u, v, w))), \
        VectorField.from_cartesian(ch, _cart_vec)


@pytest.mark.parametrize("name", ALL)
def test_grad_against_cartesian_closed_form(name):
    ch = chart(name)
    u, v, w = random_points(ch, 100, box=FD_BOX.get(name))
    s, _ = _on(ch)
    got = grad(s).cartesian(u, v, w)
    ref = _cart_grad(*ch.to_cartesian(u, v, w))
    np.testing.assert_allclose(got, ref, atol=1e-7)


@pytest.mark.parametrize("name", ALL)
def test_curl_and_div_against_cartesian_closed_form(name):
    ch = chart(name)
    u, v, w = random_points(ch, 100, box=FD_BOX.get(name))
    _, A = _on(ch)
    xyz = ch.to_cartesian(u, v, w)
    np.testing.assert_allclose(curl(A).cartesian(u, v, w), _cart_curl(*xyz), atol=1e-6)
    np.testing.assert_allclose(div(A)(u, v, w), _cart_div(*xyz), atol=1e-6)


@pytest.mark.parametrize("name", ALL)
def test_second_order_identities(name):
    ch = chart(name)
    u, v, w = random_points(ch, 128, seed=7)
    s, A = _on(ch)
    assert np.max(np.abs(curl(grad(s))(u, v, w))) <= 1e-6
    assert np.max(np.abs(div(curl(A))(u, v, w))) <= 1e-6


def test_spherical_closed_forms():
    ch = spherical_chart()
    u, v, w = random_points(ch, 50)
    r_hat = VectorField(ch, lambda t, p, r: np.stack([0 * r, 0 * r, r]))  # r e_r
    assert np.max(np.abs(div(r_hat)(u, v, w) - 3.0)) < 1e-8
    swirl = VectorField(ch, lambda t, p, r: np.stack([0 * r, r * np.sin(t), 0 * r]))  # (-y, x, 0)
    ref = np.stack([-2 * np.sin(u), 0 * u, 2 * np.cos(u)])  # 2 e_z in the (e_theta, e_phi, e_r) frame
    np.testing.assert_allclose(curl(swirl)(u, v, w), ref, atol=1e-8)


def test_left_handed_chart_curl_is_true_curl():
    ch = chart("ellipsoidal")
    assert ch.orientation == -1
    u, v, w = random_points(ch, 30, box=FD_BOX["ellipsoidal"])
    A = VectorField.from_cartesian(ch, lambda x, y, z: np.array([-y, x, 0 * z]))
    np.testing.assert_allclose(curl(A).cartesian(u, v, w), np.broadcast_to([[0], [0], [2]], (3, u.size)), atol=1e-7)
    # cross product of e_x and e_y is e_z in any chart
    ex = VectorField.from_cartesian(ch, lambda x, y, z: np.array([1 + 0 * x, 0 * x, 0 * x]))
    ey = VectorField.from_cartesian(ch, lambda x, y, z: np.array([0 * x, 1 + 0 * x, 0 * x]))
    np.testing.assert_allclose(cross(ex, ey).cartesian(u, v, w), np.broadcast_to([[0], [0], [1]], (3, u.size)),
                               atol=1e-12)


def test_exact_partials_are_used():
    ch = cartesian_chart()
    calls = []

    def partials(u, v, w):
        calls.append(1)
        return 2 * u, 0 * v, 0 * w

    s = ScalarField(ch, lambda u, v, w: u * u, partials=partials)
    g = grad(s)
    assert g.fd_depth == 0
    np.testing.assert_array_equal(g(np.array([1.5]), np.array([0.0]), np.array([0.0]))[0], [3.0])
    assert calls


def test_nested_step_widening():
    assert step_for_depth(0) == FD_STEP == 1e-5
    assert step_for_depth(1) == FD_STEP_NESTED == 1e-4
    ch = cartesian_chart()
    seen = []

    def probe(u, v, w):
        seen.append(step_for_depth(0))
        return u ** 3

    inner = ScalarField(ch, probe)
    lap = div(grad(inner))
    val = lap(np.array([1.0]), np.array([0.0]), np.array([0.0]))
    assert 1e-4 in seen and 1e-5 not in seen  # both levels use the wide step
    assert float(val[0]) == pytest.approx(6.0, rel=1e-6)


def test_richardson_is_fourth_order():
    ch = cartesian_chart()
    f = lambda u, v, w: np.sin(3 * u)  # noqa: E731
    x = np.array([0.7])
    errs = [abs(float(partial(f, ch, 0, x, 0 * x, 0 * x, rel=h, richardson=True)[0]) - 3 * math.cos(2.1))
            for h in (1e-2, 5e-3)]
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.1)
    plain = abs(float(partial(f, ch, 0, x, 0 * x, 0 * x, rel=1e-2)[0]) - 3 * math.cos(2.1))
    assert errs[0] < plain


def test_partial_divides_by_step_taken():
    # near a domain edge the step shrinks; the quotient must still be right
    ch = spherical_chart()
    t = np.array([2e-6])
    d = partial(lambda t, p, r: np.sin(t), ch, 0, t, 0 * t + 1.0, 0 * t + 1.0)
    assert float(d[0]) == pytest.approx(1.0, rel=1e-9)


def test_laplacian_uv_of_harmonic_function():
    ch = chart("conformal_exp")
    u, v, w = random_points(ch, 50)
    # Re(Z^3) in the image plane is harmonic there, hence in (u, v) as well
    s = ScalarField(ch, lambda u, v, w: np.real((np.exp(u + 1j * v)) ** 3))
    # second derivatives are of size 9 e^{3u}; nested differences leave ~1e-7 of that
    assert np.max(np.abs(laplacian_uv(s)(u, v, w)) / (9 * np.exp(3 * u))) < 1e-6


def test_scalar_arithmetic_and_helpers():
    ch = cartesian_chart()
    a = ScalarField(ch, lambda u, v, w: u)
    b = scalar_constant(ch, 2.0)
    x = (np.array([3.0]), np.array([0.0]), np.array([0.0]))
    assert float((a + b)(*x)[0]) == 5.0
    assert float((a - b)(*x)[0]) == 1.0
    assert float((2.0 * a)(*x)[0]) == 6.0
    assert float((-a)(*x)[0]) == -3.0
    V = VectorField(ch, lambda u, v, w: np.stack([u, v, w]))
    assert float(dot(V, V)(*x)[0]) == 9.0
    assert float(V.magnitude()(*x)[0]) == 3.0
    assert float(directional(V, a)(*x)[0]) == pytest.approx(3.0)
    np.testing.assert_array_equal((V - V)(*x), np.zeros((3, 1)))
    np.testing.assert_array_equal(VectorField.zero(ch)(*x), np.zeros((3, 1)))


@settings(max_examples=50, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_grad_of_linear_function_is_exact_enough(x, y, z):
    ch = cartesian_chart()
    s = ScalarField(ch, lambda u, v, w: 1.5 * u - 2.0 * v + 0.5 * w)
    np.testing.assert_allclose(grad(s)(x, y, z), [1.5, -2.0, 0.5], atol=1e-9)
