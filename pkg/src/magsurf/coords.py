"""Orthogonal coordinate charts.

A :class:`Chart` bundles the forward map to Cartesian space, the diagonal
metric ``(g11, g22, g33)``, the parameter box, and a predicate for the
singular set that must be kept out of every residual norm.  All maps are
vectorised: they take three broadcastable arrays and return arrays.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .report import GridSpec, ResidualReport, residual_norms

FD_STEP = 1e-5
FD_STEP_NESTED = 1e-4
DEFAULT_EPS = 1e-3

Triple = tuple[np.ndarray, np.ndarray, np.ndarray]


class ChartError(ValueError):
    """Invalid chart name or parameters."""


class ConformalMapError(ChartError):
    """Plane map violates the Cauchy-Riemann conditions."""


class SingularPointError(ValueError):
    """Evaluation requested inside the excluded singular set."""


class StepUnderflowError(ValueError):
    """Finite-difference step had to shrink below the floor near a domain edge."""


def _arr(*xs):
    return np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in xs))


def coords_of(p) -> Triple:
    """Unpack a :class:`PointUVW`, a 3-sequence of arrays or a ``(3, ...)`` array."""
    if isinstance(p, PointUVW):
        return _arr(p.u, p.v, p.w)
    if isinstance(p, np.ndarray):
        if p.shape[0] != 3:
            raise ValueError("point arrays need a leading axis of length 3")
        return _arr(p[0], p[1], p[2])
    u, v, w = p
    return _arr(u, v, w)


@dataclass(frozen=True)
class Chart:
    """An orthogonal coordinate system ``(u, v, w)``.

    ``forward`` maps chart coordinates to ``(x, y, z)``; ``metric`` returns the
    diagonal metric; ``singular`` gets ``(u, v, w, eps)`` and flags points to
    exclude.  ``jacobian`` (optional) returns ``d(x, y, z)/d(u, v, w)`` with
    shape ``(3, 3, ...)`` indexed ``[cartesian, coordinate]``; without it a
    central-difference Jacobian is used.
    """

    name: str
    params: Mapping[str, float]
    domain: tuple[tuple[float, float], tuple[float, float], tuple[float, float]]
    forward: Callable[..., Triple]
    metric_fn: Callable[..., Triple]
    singular_fn: Callable[..., np.ndarray] | None = None
    jacobian_fn: Callable[..., np.ndarray] | None = None
    inverse_fn: Callable[..., Triple] | None = None
    labels: tuple[str, str, str] = ("u", "v", "w")
    periodic: tuple[bool, bool, bool] = (False, False, False)
    angular: tuple[bool, bool, bool] = (False, False, False)
    eps: float = DEFAULT_EPS
    orientation: int = field(default=0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "params", dict(self.params))
        object.__setattr__(self, "domain", tuple((float(a), float(b)) for a, b in self.domain))
        if self.orientation == 0:
            object.__setattr__(self, "orientation", self._detect_orientation())

    # -- evaluation -------------------------------------------------------
    def to_cartesian(self, u, v, w) -> Triple:
        u, v, w = _arr(u, v, w)
        return tuple(np.broadcast_to(c, u.shape) for c in self.forward(u, v, w))  # type: ignore[return-value]

    def from_cartesian(self, x, y, z) -> Triple:
        if self.inverse_fn is None:
            raise NotImplementedError(f"chart {self.name!r} has no inverse map")
        x, y, z = _arr(x, y, z)
        return self.inverse_fn(x, y, z)

    def metric(self, u, v, w) -> Triple:
        u, v, w = _arr(u, v, w)
        return tuple(np.broadcast_to(np.asarray(g, dtype=float), u.shape) for g in self.metric_fn(u, v, w))  # type: ignore[return-value]

    def scale_factors(self, u, v, w) -> Triple:
        return tuple(np.sqrt(g) for g in self.metric(u, v, w))  # type: ignore[return-value]

    def volume_element(self, u, v, w) -> np.ndarray:
        g1, g2, g3 = self.metric(u, v, w)
        return np.sqrt(g1 * g2 * g3)

    def inside(self, u, v, w) -> np.ndarray:
        u, v, w = _arr(u, v, w)
        ok = np.ones(u.shape, dtype=bool)
        for x, (lo, hi), per in zip((u, v, w), self.domain, self.periodic):
            if not per:
                ok &= (x >= lo) & (x <= hi)
        return ok

    def singular(self, u, v, w, eps: float | None = None) -> np.ndarray:
        u, v, w = _arr(u, v, w)
        if self.singular_fn is None:
            return np.zeros(u.shape, dtype=bool)
        eps = self.eps if eps is None else eps
        return np.broadcast_to(np.asarray(self.singular_fn(u, v, w, eps), dtype=bool), u.shape)

    def check_points(self, u, v, w, eps: float | None = None):
        """Raise :class:`SingularPointError` if any point is excluded."""
        bad = self.singular(u, v, w, eps) | ~self.inside(u, v, w)
        if np.any(bad):
            i = np.flatnonzero(bad.ravel())[0]
            pt = tuple(float(np.ravel(np.broadcast_to(c, bad.shape))[i]) for c in (u, v, w))
            raise SingularPointError(f"point {pt} lies in the excluded set of chart {self.name!r}")

    # -- geometry ---------------------------------------------------------
    def fd_steps(self, u, v, w, rel: float = FD_STEP) -> np.ndarray:
        """Central-difference steps per axis, ``rel * local scale``.

        Steps shrink to fit inside non-periodic domain edges; a step below
        ``1e-3`` of its nominal value raises :class:`StepUnderflowError`.
        """
        u, v, w = _arr(u, v, w)
        out = np.empty((3,) + u.shape)
        for j, (x, (lo, hi), per, ang) in enumerate(zip((u, v, w), self.domain, self.periodic, self.angular)):
            scale = np.ones_like(x) if ang else np.maximum(1.0, np.abs(x))
            h = rel * scale
            if not per:
                room = np.minimum(x - lo, hi - x)
                shrunk = np.minimum(h, 0.5 * room)
                if np.any(shrunk < 1e-3 * h):
                    raise StepUnderflowError(
                        f"finite-difference step underflow on axis {self.labels[j]!r} of chart {self.name!r}"
                    )
                h = shrunk
            out[j] = h
        return out

    def fd_jacobian(self, u, v, w, rel: float = FD_STEP) -> np.ndarray:
        u, v, w = _arr(u, v, w)
        hs = self.fd_steps(u, v, w, rel)
        J = np.empty((3, 3) + u.shape)
        base = [u, v, w]
        for j in range(3):
            plus = list(base)
            minus = list(base)
            plus[j] = base[j] + hs[j]
            minus[j] = base[j] - hs[j]
            fp = self.to_cartesian(*plus)
            fm = self.to_cartesian(*minus)
            for i in range(3):
                J[i, j] = (fp[i] - fm[i]) / (2.0 * hs[j])
        return J

    def jacobian(self, u, v, w) -> np.ndarray:
        u, v, w = _arr(u, v, w)
        if self.jacobian_fn is not None:
            J = np.asarray(self.jacobian_fn(u, v, w), dtype=float)
            return np.broadcast_to(J, (3, 3) + u.shape)
        return self.fd_jacobian(u, v, w)

    def frame(self, u, v, w) -> np.ndarray:
        """Unit tangent vectors ``e_u, e_v, e_w`` as columns, shape ``(3, 3, ...)``."""
        J = self.jacobian(u, v, w)
        h = np.asarray(self.scale_factors(u, v, w))
        return J / h[None, :]

    def frame_to_cartesian(self, u, v, w, comps) -> np.ndarray:
        E = self.frame(u, v, w)
        comps = np.asarray(comps, dtype=float)
        return np.einsum("ij...,j...->i...", E, comps)

    def cartesian_to_frame(self, u, v, w, vec) -> np.ndarray:
        E = self.frame(u, v, w)
        vec = np.asarray(vec, dtype=float)
        return np.einsum("ij...,i...->j...", E, vec)

    def interior_point(self) -> tuple[float, float, float]:
        pt = []
        for lo, hi in self.domain:
            if math.isfinite(lo) and math.isfinite(hi):
                pt.append(0.5 * (lo + hi))
            elif math.isfinite(lo):
                pt.append(lo + 1.0)
            elif math.isfinite(hi):
                pt.append(hi - 1.0)
            else:
                pt.append(0.0)
        return tuple(pt)  # type: ignore[return-value]

    def _detect_orientation(self) -> int:
        c = np.array(self.interior_point())
        rng = np.random.default_rng(0)
        for k in range(32):
            p = c if k == 0 else c + 0.05 * rng.standard_normal(3)
            try:
                if self.singular(*p) or not self.inside(*p):
                    continue
                det = float(np.linalg.det(self.jacobian(*p).reshape(3, 3)))
            except (StepUnderflowError, FloatingPointError, ValueError):
                continue
            if math.isfinite(det) and det != 0.0:
                return 1 if det > 0 else -1
        return 1

    def default_box(self, margin: float = 0.05, span: float = 2.0):
        box = []
        for (lo, hi), per in zip(self.domain, self.periodic):
            if math.isfinite(lo) and math.isfinite(hi):
                d = hi - lo
                box.append((lo, hi) if per else (lo + margin * d, hi - margin * d))
            elif math.isfinite(lo):
                box.append((lo + margin, lo + span))
            elif math.isfinite(hi):
                box.append((hi - span, hi - margin))
            else:
                box.append((-span / 2, span / 2))
        return tuple(box)


@dataclass(frozen=True)
class PointUVW:
    chart: Chart
    u: float
    v: float
    w: float

    def __post_init__(self):
        if not bool(np.all(self.chart.inside(self.u, self.v, self.w))):
            raise ValueError(f"point ({self.u}, {self.v}, {self.w}) is outside the domain of {self.chart.name!r}")

    def to_xyz(self) -> "PointXYZ":
        x, y, z = self.chart.to_cartesian(self.u, self.v, self.w)
        return PointXYZ(float(x), float(y), float(z))

    def __iter__(self):
        return iter((self.u, self.v, self.w))


@dataclass(frozen=True)
class PointXYZ:
    x: float
    y: float
    z: float

    def __iter__(self):
        return iter((self.x, self.y, self.z))


# -- builtin charts ----------------------------------------------------------

INF = math.inf


def cartesian_chart() -> Chart:
    one = lambda u, v, w: (np.ones_like(u), np.ones_like(u), np.ones_like(u))

    def jac(u, v, w):
        J = np.zeros((3, 3) + np.shape(u))
        for i in range(3):
            J[i, i] = 1.0
        return J

    return Chart(
        name="cartesian", params={}, domain=((-INF, INF),) * 3,
        forward=lambda u, v, w: (u, v, w), metric_fn=one, jacobian_fn=jac,
        inverse_fn=lambda x, y, z: (x, y, z), labels=("x", "y", "z"),
    )


def spherical_chart() -> Chart:
    """``(u, v, w) = (theta, phi, r)``: ``g = (r^2, r^2 sin^2 theta, 1)``."""

    def fwd(t, p, r):
        return r * np.sin(t) * np.cos(p), r * np.sin(t) * np.sin(p), r * np.cos(t)

    def met(t, p, r):
        return r * r, (r * np.sin(t)) ** 2, np.ones_like(r)

    def jac(t, p, r):
        st, ct, sp, cp = np.sin(t), np.cos(t), np.sin(p), np.cos(p)
        z = np.zeros_like(t + p + r)
        return np.array([
            [r * ct * cp, -r * st * sp, st * cp],
            [r * ct * sp, r * st * cp, st * sp],
            [-r * st + z, z, ct + z],
        ])

    def inv(x, y, z):
        r = np.sqrt(x * x + y * y + z * z)
        return np.arctan2(np.hypot(x, y), z), np.mod(np.arctan2(y, x), 2 * np.pi), r

    return Chart(
        name="spherical", params={}, domain=((0.0, math.pi), (0.0, 2 * math.pi), (0.0, INF)),
        forward=fwd, metric_fn=met, jacobian_fn=jac, inverse_fn=inv,
        singular_fn=lambda t, p, r, eps: (np.abs(np.sin(t)) < eps) | (r < eps),
        labels=("theta", "phi", "r"), periodic=(False, True, False), angular=(True, True, False),
    )


def ellipsoidal_chart(b: float, c: float, y_sign: int = 1, z_sign: int = 1) -> Chart:
    """Ellipsoidal coordinates ``(u, v, w) = (theta, lam, eta)``.

    ``b < theta < c`` (one-sheet hyperboloids), ``-b < lam < b`` (two-sheet
    hyperboloids, the sign of ``lam`` is the sign of ``x``), ``eta > c``
    (ellipsoids).  ``y_sign``/``z_sign`` pick the half-spaces; the chart is
    degenerate on ``y = 0`` (``theta = b`` or ``|lam| = b``) and ``z = 0``.
    """
    b, c = float(b), float(c)
    if not (0.0 < b < c):
        raise ChartError(f"ellipsoidal chart needs 0 < b < c, got b={b}, c={c}")
    if y_sign not in (1, -1) or z_sign not in (1, -1):
        raise ChartError("y_sign and z_sign must be +1 or -1")
    b2, c2 = b * b, c * c

    def fwd(t, l, e):
        x = e * t * l / (b * c)
        y = y_sign * np.sqrt(np.maximum((e * e - b2) * (t * t - b2) * (b2 - l * l), 0.0) / (b2 * (c2 - b2)))
        z = z_sign * np.sqrt(np.maximum((e * e - c2) * (c2 - t * t) * (c2 - l * l), 0.0) / (c2 * (c2 - b2)))
        return x, y, z

    def met(t, l, e):
        t2, l2, e2 = t * t, l * l, e * e
        g_t = (t2 - l2) * (e2 - t2) / ((t2 - b2) * (c2 - t2))
        g_l = (e2 - l2) * (t2 - l2) / ((b2 - l2) * (c2 - l2))
        g_e = (e2 - t2) * (e2 - l2) / ((e2 - b2) * (e2 - c2))
        return g_t, g_l, g_e

    def jac(t, l, e):
        x, y, z = fwd(t, l, e)
        t2, l2, e2 = t * t, l * l, e * e
        return np.array([
            [e * l / (b * c), e * t / (b * c), t * l / (b * c)],
            [y * t / (t2 - b2), -y * l / (b2 - l2), y * e / (e2 - b2)],
            [-z * t / (c2 - t2), -z * l / (c2 - l2), z * e / (e2 - c2)],
        ])

    def inv(x, y, z):
        x, y, z = _arr(x, y, z)
        x2, y2, z2 = x * x, y * y, z * z
        A = b2 + c2 + x2 + y2 + z2
        B = b2 * c2 + x2 * (b2 + c2) + y2 * c2 + z2 * b2
        C = x2 * b2 * c2
        comp = np.zeros(x.shape + (3, 3))
        comp[..., 0, :] = np.stack([A, -B, C], axis=-1)
        comp[..., 1, 0] = 1.0
        comp[..., 2, 1] = 1.0
        roots = np.sort(np.real(np.linalg.eigvals(comp)), axis=-1)
        s_l, s_t, s_e = roots[..., 0], roots[..., 1], roots[..., 2]
        lam = np.sign(x) * np.sqrt(np.clip(s_l, 0.0, b2))
        return np.sqrt(np.clip(s_t, b2, c2)), lam, np.sqrt(np.maximum(s_e, c2))

    def sing(t, l, e, eps):
        return (t - b < eps) | (c - t < eps) | (b - np.abs(l) < eps) | (e - c < eps)

    return Chart(
        name="ellipsoidal", params={"b": b, "c": c, "y_sign": y_sign, "z_sign": z_sign},
        domain=((b, c), (-b, b), (c, INF)), forward=fwd, metric_fn=met, jacobian_fn=jac,
        inverse_fn=inv, singular_fn=sing, labels=("theta", "lam", "eta"),
    )


def prolate_spheroidal_chart(a: float) -> Chart:
    """Prolate spheroidal coordinates ``(u, v, w) = (eta, theta, phi)``.

    ``g_eta = g_theta = a^2 (sinh^2 eta + sin^2 theta)``,
    ``g_phi = a^2 sinh^2 eta sin^2 theta``; ``eta = const`` are spheroids and
    ``phi = const`` half-planes, so axisymmetric potentials are tangent to the
    ``w``-surfaces.
    """
    a = float(a)
    if not a > 0:
        raise ChartError(f"prolate spheroidal chart needs a > 0, got {a}")

    def fwd(e, t, p):
        rho = a * np.sinh(e) * np.sin(t)
        return rho * np.cos(p), rho * np.sin(p), a * np.cosh(e) * np.cos(t)

    def met(e, t, p):
        g = a * a * (np.sinh(e) ** 2 + np.sin(t) ** 2)
        return g, g, (a * np.sinh(e) * np.sin(t)) ** 2 + 0.0 * p

    def jac(e, t, p):
        she, che, st, ct, sp, cp = np.sinh(e), np.cosh(e), np.sin(t), np.cos(t), np.sin(p), np.cos(p)
        z = np.zeros_like(e + t + p)
        return a * np.array([
            [che * st * cp, she * ct * cp, -she * st * sp],
            [che * st * sp, she * ct * sp, she * st * cp],
            [she * ct, -che * st, z],
        ])

    def inv(x, y, z):
        rho2 = x * x + y * y
        d1 = np.sqrt(rho2 + (z + a) ** 2)
        d2 = np.sqrt(rho2 + (z - a) ** 2)
        s = d1 + d2
        she = np.sqrt(np.maximum((s - 2 * a) * (s + 2 * a), 0.0)) / (2 * a)
        che = s / (2 * a)
        # arctan2 keeps theta accurate near the axis, where arccos loses half the digits
        with np.errstate(invalid="ignore"):
            t = np.where(she > 1e-8, np.arctan2(np.sqrt(rho2) * che, z * she),
                         np.arccos(np.clip(2 * z / s, -1.0, 1.0)))
        return np.arcsinh(she), t, np.mod(np.arctan2(y, x), 2 * np.pi)

    return Chart(
        name="prolate_spheroidal", params={"a": a},
        domain=((0.0, INF), (0.0, math.pi), (0.0, 2 * math.pi)),
        forward=fwd, metric_fn=met, jacobian_fn=jac, inverse_fn=inv,
        singular_fn=lambda e, t, p, eps: (np.abs(np.sin(t)) < eps) | (np.sinh(e) < eps),
        labels=("eta", "theta", "phi"), periodic=(False, False, True), angular=(False, True, True),
    )


# -- conformal cylinders -------------------------------------------------------

@dataclass(frozen=True)
class PlaneMap:
    """Plane map ``(u, v) -> (xi1, xi2)`` with its four partial derivatives.

    ``d(u, v)`` returns ``(dxi1/du, dxi2/du, dxi1/dv, dxi2/dv)``.
    """

    xi: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]
    d: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]
    name: str = "conformal"
    inverse: Callable | None = None

    @classmethod
    def identity(cls) -> "PlaneMap":
        one = lambda u, v: (np.ones_like(u + v), np.zeros_like(u + v), np.zeros_like(u + v), np.ones_like(u + v))
        return cls(lambda u, v: (u + 0.0 * v, v + 0.0 * u), one, "identity", lambda x, y: (x, y))

    @classmethod
    def exp(cls) -> "PlaneMap":
        def xi(u, v):
            return np.exp(u) * np.cos(v), np.exp(u) * np.sin(v)

        def d(u, v):
            eu = np.exp(u)
            return eu * np.cos(v), eu * np.sin(v), -eu * np.sin(v), eu * np.cos(v)

        return cls(xi, d, "exp", lambda x, y: (0.5 * np.log(x * x + y * y), np.arctan2(y, x)))

    @classmethod
    def cosh(cls, a: float = 1.0) -> "PlaneMap":
        """``Z' = a cosh Z``: elliptic-cylindrical coordinates."""

        def xi(u, v):
            return a * np.cosh(u) * np.cos(v), a * np.sinh(u) * np.sin(v)

        def d(u, v):
            return (a * np.sinh(u) * np.cos(v), a * np.cosh(u) * np.sin(v),
                    -a * np.cosh(u) * np.sin(v), a * np.sinh(u) * np.cos(v))

        def inv(x, y):
            Z = np.arccosh((x + 1j * y) / a)
            return np.abs(Z.real), np.where(Z.real < 0, -Z.imag, Z.imag)

        return cls(xi, d, "cosh", inv)

    @classmethod
    def from_complex(cls, f, df, name: str = "complex") -> "PlaneMap":
        """Build from an analytic ``f(Z)`` and its derivative ``df(Z)``."""

        def xi(u, v):
            Z = f(u + 1j * v)
            return np.real(Z), np.imag(Z)

        def d(u, v):
            D = df(u + 1j * v)
            return np.real(D), np.imag(D), -np.imag(D), np.real(D)

        return cls(xi, d, name)


def cauchy_riemann_residual(pmap: PlaneMap, u, v) -> np.ndarray:
    xu, yu, xv, yv = pmap.d(*np.broadcast_arrays(u, v))
    return np.abs(xu - yv) + np.abs(xv + yu)


def conformal_cylinder_chart(
    pmap: PlaneMap,
    domain=((-INF, INF), (-INF, INF)),
    *,
    name: str | None = None,
    params: Mapping[str, float] | None = None,
    periodic_v: bool = False,
    angular_v: bool = False,
    validation_box=None,
    n_validate: int = 17,
    cr_tol: float = 1e-8,
    eps: float = DEFAULT_EPS,
    extra_singular: Callable | None = None,
) -> Chart:
    """Cylindrical chart ``x = xi1(u, v), y = xi2(u, v), z = w`` from a conformal map.

    The map is validated on an ``n_validate^2`` grid: a Cauchy-Riemann residual
    above ``cr_tol`` (relative to ``|xi'|``) rejects it.  Points where ``|xi'|``
    falls below ``eps`` (branch points) become part of the singular set and
    trigger a warning if found on the validation grid.
    """
    (ulo, uhi), (vlo, vhi) = domain
    if validation_box is None:
        vb = []
        for lo, hi in ((ulo, uhi), (vlo, vhi)):
            lo_ = lo if math.isfinite(lo) else -2.0
            hi_ = hi if math.isfinite(hi) else (lo_ + 4.0 if math.isfinite(lo) else 2.0)
            vb.append((lo_, hi_))
        validation_box = vb
    (a0, a1), (b0, b1) = validation_box
    U, V = np.meshgrid(np.linspace(a0, a1, n_validate), np.linspace(b0, b1, n_validate), indexing="ij")
    xu, yu, xv, yv = pmap.d(U, V)
    g = xu * xu + yu * yu
    with np.errstate(invalid="ignore"):
        cr = cauchy_riemann_residual(pmap, U, V) / np.maximum(1.0, np.sqrt(g))
    if not np.all(cr <= cr_tol):
        raise ConformalMapError(f"plane map {pmap.name!r} violates Cauchy-Riemann: max residual {np.nanmax(cr):.3e}")
    if np.any(g < eps * eps):
        warnings.warn(f"plane map {pmap.name!r} has vanishing derivative (branch point) inside the domain; "
                      "those points are excluded", RuntimeWarning, stacklevel=2)

    def fwd(u, v, w):
        x, y = pmap.xi(u, v)
        return x + 0.0 * w, y + 0.0 * w, w + 0.0 * u

    def met(u, v, w):
        du1, du2, _, _ = pmap.d(u, v)
        g = du1 * du1 + du2 * du2 + 0.0 * w
        return g, g, np.ones_like(g)

    def jac(u, v, w):
        xu, yu, xv, yv = (np.broadcast_to(t, np.broadcast(u, v, w).shape) for t in pmap.d(u, v))
        z, o = np.zeros_like(xu), np.ones_like(xu)
        return np.array([[xu, xv, z], [yu, yv, z], [z, z, o]])

    def sing(u, v, w, eps_):
        du1, du2, _, _ = pmap.d(u, v)
        bad = du1 * du1 + du2 * du2 < eps_ * eps_
        if extra_singular is not None:
            bad = bad | extra_singular(u, v, w, eps_)
        return bad

    inv = None
    if pmap.inverse is not None:
        def inv(x, y, z):
            u, v = pmap.inverse(x, y)
            return u, v, z

    return Chart(
        name=name or f"conformal_{pmap.name}", params=dict(params or {}),
        domain=(tuple(domain[0]), tuple(domain[1]), (-INF, INF)),
        forward=fwd, metric_fn=met, jacobian_fn=jac, inverse_fn=inv, singular_fn=sing,
        periodic=(False, periodic_v, False), angular=(False, angular_v, False), eps=eps,
    )


def elliptic_cylindrical_chart(a: float = 1.0) -> Chart:
    """``x = a cosh u cos v, y = a sinh u sin v, z = w``; ``g11 = g22 = a^2 (cosh^2 u - cos^2 v)``."""
    a = float(a)
    if not a > 0:
        raise ChartError(f"elliptic cylindrical chart needs a > 0, got {a}")
    return conformal_cylinder_chart(
        PlaneMap.cosh(a), ((0.0, INF), (-math.pi, math.pi)), name="elliptic_cylindrical",
        params={"a": a}, periodic_v=True, angular_v=True, validation_box=((0.05, 2.0), (-3.0, 3.0)),
        extra_singular=lambda u, v, w, eps: u < eps,
    )


def chart_from_map(name: str, forward, domain, labels=("u", "v", "w")) -> Chart:
    """Chart from a bare forward map; the metric is read off the FD Jacobian.

    Useful for checking candidate coordinates (the result need not be
    orthogonal; :func:`check_orthogonality` reports how far off it is).
    """
    holder: dict[str, Chart] = {}

    def met(u, v, w):
        J = holder["c"].fd_jacobian(u, v, w)
        return tuple(np.sum(J[:, j] ** 2, axis=0) for j in range(3))

    ch = Chart(name=name, params={}, domain=domain, forward=forward, metric_fn=met, labels=labels, orientation=1)
    holder["c"] = ch
    return ch


BUILTIN_CHARTS = {
    "cartesian": lambda **p: cartesian_chart(),
    "spherical": lambda **p: spherical_chart(),
    "ellipsoidal": lambda b, c, y_sign=1, z_sign=1: ellipsoidal_chart(b, c, y_sign, z_sign),
    "prolate_spheroidal": lambda a: prolate_spheroidal_chart(a),
    "elliptic_cylindrical": lambda a=1.0: elliptic_cylindrical_chart(a),
    "conformal_identity": lambda **p: conformal_cylinder_chart(PlaneMap.identity(), name="conformal_identity"),
    "conformal_exp": lambda **p: conformal_cylinder_chart(
        PlaneMap.exp(), ((-INF, INF), (-math.pi, math.pi)), name="conformal_exp", periodic_v=True, angular_v=True),
}


def make_builtin_chart(name: str, params: Mapping[str, float] | None = None) -> Chart:
    """Construct one of the named charts.

    >>> make_builtin_chart("spherical").metric(np.pi / 2, 0.0, 2.0)[0]
    array(4.)
    """
    if name not in BUILTIN_CHARTS:
        raise ChartError(f"unknown chart {name!r}; choose from {sorted(BUILTIN_CHARTS)}")
    try:
        return BUILTIN_CHARTS[name](**dict(params or {}))
    except TypeError as exc:
        raise ChartError(f"bad parameters for chart {name!r}: {exc}") from None


def check_orthogonality(chart: Chart, grid: GridSpec, tolerance: float = 1e-6) -> ResidualReport:
    """Orthogonality and metric consistency from a finite-difference Jacobian.

    Reports the largest normalised dot product between distinct Jacobian
    columns and the largest relative mismatch between squared column norms
    and the chart's metric.
    """
    s = grid.sample(chart).require_nonempty()
    J = chart.fd_jacobian(*s.points)
    cols = [J[:, j] for j in range(3)]
    norms = [np.sqrt(np.sum(c * c, axis=0)) for c in cols]
    dots = []
    for i, j in ((0, 1), (0, 2), (1, 2)):
        dots.append(np.abs(np.sum(cols[i] * cols[j], axis=0)) / (norms[i] * norms[j]))
    ortho = np.max(np.stack(dots), axis=0)
    g = chart.metric(*s.points)
    mism = np.max(np.stack([np.abs(n * n - gi) / gi for n, gi in zip(norms, g)]), axis=0)
    eqs = [
        residual_norms("orthogonality", ortho, s.n_excluded, tolerance, scale=1.0),
        residual_norms("metric", mism, s.n_excluded, tolerance, scale=1.0),
    ]
    return ResidualReport(eqs, grid.to_dict(), title=f"orthogonality[{chart.name}]")
