"""Vector calculus on orthogonal charts.

Fields are lazy: a :class:`ScalarField` or :class:`VectorField` wraps a
vectorised callable of ``(u, v, w)``.  Vector components are always taken in
the orthonormal frame ``(e_u, e_v, e_w)``.  Differential operators return new
lazy fields whose derivatives are central differences; ``fd_depth`` counts how
many finite differences are nested inside a field so that the step can be
widened when differentiating an already-differenced quantity.
"""
from __future__ import annotations

import contextvars
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .coords import FD_STEP, FD_STEP_NESTED, Chart, _arr


# set while an outer difference evaluates an inner one, so both levels of a
# second derivative use the wider step
_NESTED = contextvars.ContextVar("magsurf_fd_nested", default=False)


def step_for_depth(depth: int) -> float:
    return FD_STEP if depth == 0 and not _NESTED.get() else FD_STEP_NESTED


@dataclass(frozen=True)
class ScalarField:
    """Scalar function on a chart.

    ``partials`` may supply exact ``(f_u, f_v, f_w)``; operators use it in
    place of finite differences.
    """

    chart: Chart
    fn: Callable[..., np.ndarray]
    fd_depth: int = 0
    name: str = ""
    partials: Callable[..., tuple] | None = field(default=None, compare=False)

    def __call__(self, u, v, w) -> np.ndarray:
        u, v, w = _arr(u, v, w)
        return np.broadcast_to(np.asarray(self.fn(u, v, w), dtype=float), u.shape)

    def __add__(self, other):
        return _combine_scalar(self, other, np.add)

    def __sub__(self, other):
        return _combine_scalar(self, other, np.subtract)

    def __mul__(self, other):
        return _combine_scalar(self, other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


def _combine_scalar(a: ScalarField, b, op) -> ScalarField:
    if isinstance(b, ScalarField):
        return ScalarField(a.chart, lambda u, v, w: op(a(u, v, w), b(u, v, w)), max(a.fd_depth, b.fd_depth))
    b = float(b)
    return ScalarField(a.chart, lambda u, v, w: op(a(u, v, w), b), a.fd_depth)


@dataclass(frozen=True)
class VectorField:
    """Vector field given by its orthonormal-frame components, shape ``(3, ...)``."""

    chart: Chart
    fn: Callable[..., np.ndarray]
    fd_depth: int = 0
    name: str = ""

    def __call__(self, u, v, w) -> np.ndarray:
        u, v, w = _arr(u, v, w)
        out = np.asarray(self.fn(u, v, w), dtype=float)
        return np.broadcast_to(out, (3,) + u.shape)

    def cartesian(self, u, v, w) -> np.ndarray:
        return self.chart.frame_to_cartesian(u, v, w, self(u, v, w))

    def magnitude(self) -> ScalarField:
        return ScalarField(self.chart, lambda u, v, w: np.sqrt(np.sum(self(u, v, w) ** 2, axis=0)), self.fd_depth)

    def square(self) -> ScalarField:
        return ScalarField(self.chart, lambda u, v, w: np.sum(self(u, v, w) ** 2, axis=0), self.fd_depth)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.chart, lambda u, v, w: self(u, v, w) + other(u, v, w),
                           max(self.fd_depth, other.fd_depth))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.chart, lambda u, v, w: self(u, v, w) - other(u, v, w),
                           max(self.fd_depth, other.fd_depth))

    def scaled(self, s) -> "VectorField":
        """Multiply by a constant or by a :class:`ScalarField`."""
        if isinstance(s, ScalarField):
            return VectorField(self.chart, lambda u, v, w: s(u, v, w) * self(u, v, w),
                               max(self.fd_depth, s.fd_depth))
        s = float(s)
        return VectorField(self.chart, lambda u, v, w: s * self(u, v, w), self.fd_depth)

    __mul__ = scaled
    __rmul__ = scaled

    def __neg__(self):
        return self.scaled(-1.0)

    @classmethod
    def zero(cls, chart: Chart) -> "VectorField":
        return cls(chart, lambda u, v, w: np.zeros((3,) + np.shape(u)), 0, "0")

    @classmethod
    def from_cartesian(cls, chart: Chart, fn_xyz, fd_depth: int = 0) -> "VectorField":
        """Wrap a Cartesian field ``fn_xyz(x, y, z) -> (3, ...)``."""

        def fn(u, v, w):
            x, y, z = chart.to_cartesian(u, v, w)
            return chart.cartesian_to_frame(u, v, w, np.asarray(fn_xyz(x, y, z)))

        return cls(chart, fn, fd_depth)


def scalar_constant(chart: Chart, c: float) -> ScalarField:
    c = float(c)
    zero = lambda u, v, w: (np.zeros_like(u), np.zeros_like(u), np.zeros_like(u))
    return ScalarField(chart, lambda u, v, w: np.full(np.shape(u), c), 0, str(c), zero)


# -- finite differences ----------------------------------------------------------

def partial(f: Callable, chart: Chart, axis: int, u, v, w, rel: float | None = None,
            depth: int = 0, richardson: bool = False) -> np.ndarray:
    """Central difference of ``f`` along one chart axis.

    ``f`` may return a scalar array or a stacked array; the step is
    ``rel * local scale`` with ``rel`` chosen from ``depth`` when omitted.
    ``richardson`` combines steps ``h`` and ``h/2`` to cancel the leading
    error term (fourth order).
    """
    u, v, w = _arr(u, v, w)
    rel = step_for_depth(depth) if rel is None else rel
    h = chart.fd_steps(u, v, w, rel)[axis]
    pts = [u, v, w]

    def d(hh):
        p = list(pts)
        m = list(pts)
        p[axis] = pts[axis] + hh
        m[axis] = pts[axis] - hh
        token = _NESTED.set(True) if depth > 0 else None
        try:
            fp, fm = np.asarray(f(*p)), np.asarray(f(*m))
        finally:
            if token is not None:
                _NESTED.reset(token)
        # divide by the step actually taken, not the nominal one
        return (fp - fm) / (p[axis] - m[axis])

    if not richardson:
        return d(h)
    return (4.0 * d(0.5 * h) - d(h)) / 3.0


def _partials(s: ScalarField, u, v, w, rel=None, richardson=False):
    if s.partials is not None:
        return tuple(np.broadcast_to(np.asarray(p, dtype=float), np.shape(u)) for p in s.partials(u, v, w))
    return tuple(partial(s, s.chart, j, u, v, w, rel, s.fd_depth, richardson) for j in range(3))


# -- operators -------------------------------------------------------------------

def grad(s: ScalarField, rel: float | None = None, richardson: bool = False) -> VectorField:
    """Gradient in the orthonormal frame, ``(f_u / h1, f_v / h2, f_w / h3)``."""
    ch = s.chart

    def fn(u, v, w):
        d = _partials(s, u, v, w, rel, richardson)
        h = ch.scale_factors(u, v, w)
        return np.stack([d[i] / h[i] for i in range(3)])

    return VectorField(ch, fn, s.fd_depth + (0 if s.partials is not None else 1), f"grad({s.name})")


def div(A: VectorField, rel: float | None = None, richardson: bool = False) -> ScalarField:
    """Divergence, ``(1/H) sum_i d_i(H A_i / h_i)`` with ``H = h1 h2 h3``."""
    ch = A.chart

    def flux(u, v, w):
        h = np.asarray(ch.scale_factors(u, v, w))
        H = h[0] * h[1] * h[2]
        return A(u, v, w) * (H / h)

    def fn(u, v, w):
        h = ch.scale_factors(u, v, w)
        H = h[0] * h[1] * h[2]
        tot = 0.0
        for j in range(3):
            tot = tot + partial(lambda *p: flux(*p)[j], ch, j, u, v, w, rel, A.fd_depth, richardson)
        return tot / H

    return ScalarField(ch, fn, A.fd_depth + 1, f"div({A.name})")


def curl(A: VectorField, rel: float | None = None, richardson: bool = False) -> VectorField:
    """Curl in the orthonormal frame.

    ``(curl A)_1 = [d_v(h3 A_3) - d_w(h2 A_2)] / (h2 h3)`` and cyclic, times
    the chart orientation so that left-handed charts give the true curl.
    """
    ch = A.chart

    def hA(u, v, w):
        return np.asarray(ch.scale_factors(u, v, w)) * A(u, v, w)

    def fn(u, v, w):
        h = ch.scale_factors(u, v, w)
        d = {}
        for j in range(3):
            d[j] = partial(hA, ch, j, u, v, w, rel, A.fd_depth, richardson)  # d[j][i] = d_j(h_i A_i)
        c1 = (d[1][2] - d[2][1]) / (h[1] * h[2])
        c2 = (d[2][0] - d[0][2]) / (h[0] * h[2])
        c3 = (d[0][1] - d[1][0]) / (h[0] * h[1])
        return ch.orientation * np.stack([c1, c2, c3])

    return VectorField(ch, fn, A.fd_depth + 1, f"curl({A.name})")


def cross(A: VectorField, B: VectorField) -> VectorField:
    """Cross product of frame components, orientation-corrected."""
    ch = A.chart

    def fn(u, v, w):
        return ch.orientation * np.cross(A(u, v, w), B(u, v, w), axis=0)

    return VectorField(ch, fn, max(A.fd_depth, B.fd_depth))


def dot(A: VectorField, B: VectorField) -> ScalarField:
    return ScalarField(A.chart, lambda u, v, w: np.sum(A(u, v, w) * B(u, v, w), axis=0),
                       max(A.fd_depth, B.fd_depth))


def cross_values(chart: Chart, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return chart.orientation * np.cross(a, b, axis=0)


def directional(A: VectorField, s: ScalarField) -> ScalarField:
    """``A . grad s``."""
    return dot(A, grad(s))


# -- the two-dimensional reduced operators -------------------------------------

def grad_uv(s: ScalarField, u, v, w, rel=None, richardson=False):
    """``(s_u, s_v)`` as raw partial derivatives."""
    d = _partials(s, u, v, w, rel, richardson)
    return d[0], d[1]


def laplacian_uv(s: ScalarField, rel: float | None = None, richardson: bool = False) -> ScalarField:
    """``d_u(s_u h2 h3 / h1) + d_v(s_v h1 h3 / h2)``, the in-surface Laplacian
    (without the ``1/H`` prefactor) whose zero set defines tangent potentials."""
    ch = s.chart

    def fu(u, v, w):
        h1, h2, h3 = ch.scale_factors(u, v, w)
        return grad_uv(s, u, v, w)[0] * h2 * h3 / h1

    def fv(u, v, w):
        h1, h2, h3 = ch.scale_factors(u, v, w)
        return grad_uv(s, u, v, w)[1] * h1 * h3 / h2

    depth = s.fd_depth + (0 if s.partials is not None else 1)

    def fn(u, v, w):
        return (partial(fu, ch, 0, u, v, w, rel, depth, richardson)
                + partial(fv, ch, 1, u, v, w, rel, depth, richardson))

    return ScalarField(ch, fn, depth + 1, f"lap_uv({s.name})")
