"""Closed-form solution families.

Force-free fields from flux-function pairs (two metric shapes), vacuum fields
tangent to ellipsoids and to meridional half-planes of prolate spheroids, and
force-free fields on conformal cylinders.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import ellipj

from ..calculus import ScalarField, VectorField
from ..coords import (Chart, ellipsoidal_chart, prolate_spheroidal_chart, spherical_chart)
from ..special import ellint_F, legendre_PQ
from .base import (MU0, ConstraintError, EquilibriumError, FluxFunctionPair, MetricConditionError,
                   PotentialSolution, sample_metric_box)
from .labels import LineLabels, gauss_legendre_integral

OVERFLOW_EXP = 700.0


def _antiderivative(f: Callable, x0: float) -> Callable:
    return lambda x: gauss_legendre_integral(f, x0 + 0.0 * np.asarray(x, dtype=float), x)


def _default_box(chart: Chart, box):
    return chart.default_box(margin=0.1) if box is None else box


def _rel(a, b):
    return np.abs(a - b) / np.maximum(np.abs(b), 1e-300)


# -- Case A ----------------------------------------------------------------------

@dataclass(frozen=True)
class CaseAData:
    a: Callable
    b: Callable
    c: Callable
    mu_fn: Callable
    lam_fn: Callable


def caseA_build(chart: Chart, a: Callable, b: Callable, c: Callable, pair: FluxFunctionPair, *,
                mu_fn: Callable | None = None, lam_fn: Callable | None = None, box=None,
                tol: float = 1e-6, constraint_tol: float = 1e-8, mu: float = MU0, name: str = "caseA") -> PotentialSolution:
    """Force-free field ``Phi = C1(w) m(u) + C2(w) l(v)`` with ``m' = a``, ``l' = 1/b``.

    Requires ``g11/g22 = a^2 b^2 c^2`` and ``C1 g33_u + a b c^2 C2 g33_v = 0``
    (``g33`` constant along the direction in which ``Phi`` is linear), both
    checked on samples of ``box``, plus ``(C1^2)' + c^2 (C2^2)' = 0``.
    The force-free coefficient is ``alpha = C1' / (c h3 C2)``.
    """
    box = _default_box(chart, box)
    u, v, w = sample_metric_box(chart, box)
    g1, g2, g3 = chart.metric(u, v, w)
    A, Bv, Cw = np.asarray(a(u), float), np.asarray(b(v), float), np.asarray(c(w), float)
    err = float(np.max(_rel(g1 / g2, (A * Bv * Cw) ** 2)))
    if not err <= tol:
        raise MetricConditionError(f"g11/g22 != a^2 b^2 c^2 on chart {chart.name!r} (relative error {err:.2e})")
    c1, c2, d1, d2 = pair.values(w)
    from ..calculus import partial
    g33 = lambda *p: chart.metric(*p)[2]
    gu = partial(g33, chart, 0, u, v, w)
    gv = partial(g33, chart, 1, u, v, w)
    shape_err = float(np.max(np.abs(c1 * gu + A * Bv * Cw ** 2 * c2 * gv) / np.maximum(g3, 1e-300)))
    if not shape_err <= tol:
        raise MetricConditionError(f"g33 is not constant along the flux direction (residual {shape_err:.2e})")
    cres = pair.constraint_residual(np.unique(w), c)
    if not cres <= constraint_tol:
        raise ConstraintError(f"flux pair violates (C1^2)' + c^2 (C2^2)' = 0 (residual {cres:.2e})")

    lo_u = 0.5 * (box[0][0] + box[0][1])
    lo_v = 0.5 * (box[1][0] + box[1][1])
    mu_fn = mu_fn or _antiderivative(a, lo_u)
    lam_fn = lam_fn or _antiderivative(lambda x: 1.0 / np.asarray(b(x), float), lo_v)

    def phi(u, v, w):
        c1, c2, _, _ = pair.values(w)
        return c1 * mu_fn(u) + c2 * lam_fn(v)

    def partials(u, v, w):
        c1, c2, d1, d2 = pair.values(w)
        return c1 * a(u), c2 / b(v), d1 * mu_fn(u) + d2 * lam_fn(v)

    def mixed(u, v, w):
        _, _, d1, d2 = pair.values(w)
        return d1 * a(u), d2 / b(v)

    def alpha_xyz(u, v, w):
        c1, c2, d1, d2 = pair.values(w)
        h3 = np.sqrt(chart.metric(u, v, w)[2])
        cw = np.asarray(c(w), float)
        # two equivalent forms; use whichever denominator is larger
        return chart.orientation * np.where(np.abs(c2) * cw >= np.abs(c1) / np.maximum(cw, 1e-300),
                                            d1 / (cw * h3 * np.where(c2 == 0, 1.0, c2)),
                                            -cw * d2 / (h3 * np.where(c1 == 0, 1.0, c1)))

    Phi = ScalarField(chart, phi, 0, "Phi", partials)
    sol = PotentialSolution(chart, Phi, kind="force_free", mu=mu, mixed=mixed, name=name,
                            params={"tol": tol})
    return _with_alpha_field(sol, alpha_xyz, CaseAData(a, b, c, mu_fn, lam_fn), pair)


def _with_alpha_field(sol: PotentialSolution, alpha_uvw: Callable, data, pair) -> PotentialSolution:
    # alpha may depend on (u, v) through h3; expose it as a field and keep the data
    object.__setattr__(sol, "alpha", alpha_uvw)
    extras = dict(sol.params)
    extras["_data"] = data
    extras["_pair"] = pair
    object.__setattr__(sol, "params", extras)
    return sol


def spherical_force_free(pair: FluxFunctionPair, *, mu: float = MU0, box=None) -> PotentialSolution:
    """``B = (C1(r), C2(r), 0) / (r sin theta)`` on spheres, ``C1^2 + C2^2 = const``.

    Chart ``(theta, phi, r)``; the force-free coefficient is ``C1'/C2``.
    """
    ch = spherical_chart()
    box = box or ((0.3, math.pi - 0.3), (0.0, 2 * math.pi), (0.5, 3.0))
    sol = caseA_build(
        ch, lambda u: 1.0 / np.sin(u), lambda v: 1.0 + 0.0 * np.asarray(v, float),
        lambda w: 1.0 + 0.0 * np.asarray(w, float), pair,
        mu_fn=lambda u: np.log(np.tan(0.5 * np.asarray(u, float))), lam_fn=lambda v: np.asarray(v, float) + 0.0,
        box=box, mu=mu, name="spherical_force_free",
    )
    return sol


def spherical_labels(sol: PotentialSolution) -> LineLabels:
    """``(r, zeta)`` with ``zeta = l(v) - m(u) c^2 C2 / C1``; lines are straight in ``(m, l)``."""
    data: CaseAData = sol.params["_data"]
    pair: FluxFunctionPair = sol.params["_pair"]

    def fn(u, v, w):
        c1, c2, _, _ = pair.values(w)
        cw = np.asarray(data.c(w), float)
        m, l = data.mu_fn(u), data.lam_fn(v)
        # pick the form that stays finite when C1 vanishes
        zeta = np.where(np.abs(c1) >= np.abs(c2) * cw ** 2,
                        l - m * cw ** 2 * c2 / np.where(c1 == 0, 1.0, c1),
                        m - l * c1 / (cw ** 2 * np.where(c2 == 0, 1.0, c2)))
        return w, zeta

    return LineLabels(sol.chart, ("r", "zeta"), fn, "r")


# -- Case B ----------------------------------------------------------------------

def caseB_build(chart: Chart, modes: Sequence[tuple[float, float]], tau: int, variant: int,
                pair: FluxFunctionPair, *, a: Callable | None = None, b: Callable | None = None,
                F: Callable | None = None, mu_fn: Callable | None = None, lam_fn: Callable | None = None,
                box=None, tol: float = 1e-6, constraint_tol: float = 1e-8, mu: float = MU0) -> PotentialSolution:
    """Force-free mode sums for ``g11/g22 = a^2 b^2``, ``g33 = F(w)^2``.

    ``modes`` is a list of ``(t_k, n_k)``.  Variant 1:
    ``Phi = sum t_k e^{tau n_k m} (C1 cos(n_k l) + C2 sin(n_k l))``; variant 2
    exchanges the roles of ``m(u)`` and ``l(v)``.  ``a, b`` default to 1 and
    ``F`` to ``sqrt(g33)``.  The coefficient is ``+-tau C1' / (F C2)`` (sign
    flips for variant 2).
    """
    if tau not in (1, -1):
        raise EquilibriumError("tau must be +1 or -1")
    if variant not in (1, 2):
        raise EquilibriumError("variant must be 1 or 2")
    one = lambda x: 1.0 + 0.0 * np.asarray(x, float)
    a = a or one
    b = b or one
    box = _default_box(chart, box)
    u, v, w = sample_metric_box(chart, box)
    g1, g2, g3 = chart.metric(u, v, w)
    err = float(np.max(_rel(g1 / g2, (np.asarray(a(u), float) * np.asarray(b(v), float)) ** 2)))
    if not err <= tol:
        raise MetricConditionError(f"g11/g22 != a^2 b^2 on chart {chart.name!r} (relative error {err:.2e})")
    if F is None:
        from ..calculus import partial
        g33 = lambda *p: chart.metric(*p)[2]
        var = float(np.max((np.abs(partial(g33, chart, 0, u, v, w)) + np.abs(partial(g33, chart, 1, u, v, w)))
                           / np.maximum(g3, 1e-300)))
        if not var <= tol:
            raise MetricConditionError(f"g33 depends on (u, v) on chart {chart.name!r} (variation {var:.2e})")
        F = lambda w_: np.sqrt(chart.metric(0.5 * (box[0][0] + box[0][1]) + 0.0 * np.asarray(w_, float),
                                            0.5 * (box[1][0] + box[1][1]) + 0.0 * np.asarray(w_, float),
                                            w_)[2])
    else:
        ferr = float(np.max(_rel(g3, np.asarray(F(w), float) ** 2)))
        if not ferr <= tol:
            raise MetricConditionError(f"g33 != F(w)^2 (relative error {ferr:.2e})")
    cres = pair.constraint_residual(np.unique(w))
    if not cres <= constraint_tol:
        raise ConstraintError(f"flux pair violates (C1^2 + C2^2)' = 0 (residual {cres:.2e})")

    u0 = 0.5 * (box[0][0] + box[0][1])
    v0 = 0.5 * (box[1][0] + box[1][1])
    mu_fn = mu_fn or _antiderivative(a, u0)
    lam_fn = lam_fn or _antiderivative(lambda x: 1.0 / np.asarray(b(x), float), v0)
    modes = [(float(t), float(n)) for t, n in modes]
    # guard against overflow of the exponential over the box corners and samples
    grow = mu_fn(u) if variant == 1 else lam_fn(v)
    worst = max((abs(n) * float(np.max(np.abs(grow))) for _, n in modes), default=0.0)
    if worst > OVERFLOW_EXP:
        raise EquilibriumError(f"mode exponent reaches {worst:.1f} > {OVERFLOW_EXP} on the box; shrink the box or n_k")

    def terms(u, v, w, order):
        c1, c2, d1, d2 = pair.values(w)
        if order == "w":
            c1, c2 = d1, d2
        m, l = mu_fn(u), lam_fn(v)
        if variant == 2:
            m, l = l, m
        S = np.zeros(np.shape(m)), np.zeros(np.shape(m)), np.zeros(np.shape(m))
        val, dm, dl = S
        for t, n in modes:
            e = np.exp(tau * n * m)
            cs, sn = np.cos(n * l), np.sin(n * l)
            val = val + t * e * (c1 * cs + c2 * sn)
            dm = dm + t * tau * n * e * (c1 * cs + c2 * sn)
            dl = dl + t * n * e * (-c1 * sn + c2 * cs)
        if variant == 2:
            dm, dl = dl, dm
        return val, dm, dl

    def phi(u, v, w):
        return terms(u, v, w, "")[0]

    def partials(u, v, w):
        _, dm, dl = terms(u, v, w, "")
        vw, _, _ = terms(u, v, w, "w")
        return dm * a(u), dl / b(v), vw

    def mixed(u, v, w):
        _, dm, dl = terms(u, v, w, "w")
        return dm * a(u), dl / b(v)

    sgn = tau if variant == 1 else -tau

    def alpha_uvw(u, v, w):
        c1, c2, d1, d2 = pair.values(w)
        Fw = np.asarray(F(w), float)
        return chart.orientation * sgn * np.where(np.abs(c2) >= np.abs(c1),
                                                  d1 / (Fw * np.where(c2 == 0, 1.0, c2)),
                                                  -d2 / (Fw * np.where(c1 == 0, 1.0, c1)))

    Phi = ScalarField(chart, phi, 0, "Phi", partials)
    sol = PotentialSolution(chart, Phi, kind="force_free", mu=mu, mixed=mixed, name="caseB",
                            params={"tau": tau, "variant": variant, "n_modes": len(modes)})
    return _with_alpha_field(sol, alpha_uvw, None, pair)


# -- vacuum fields tangent to ellipsoids -------------------------------------------

@dataclass(frozen=True)
class EllipsoidConstants:
    b: float
    c: float
    A1: float
    B1: float
    A2: float
    B2: float

    @property
    def k_theta(self) -> float:
        return math.sqrt(self.c ** 2 - self.b ** 2) / self.c

    @property
    def k_lam(self) -> float:
        return self.b / self.c


def _F_theta(k: EllipsoidConstants, t):
    z = np.sqrt(np.clip((k.c ** 2 - t * t) / (k.c ** 2 - k.b ** 2), 0.0, 1.0))
    return ellint_F(z, k.k_theta)


def _F_lam(k: EllipsoidConstants, l):
    return ellint_F(np.clip(l / k.b, -1.0, 1.0), k.k_lam)


def ellipsoid_vacuum(b: float, c: float, A1: float = 0.0, B1: float = 0.01, A2: float = 0.0, B2: float = 1 / 30,
                     *, y_sign: int = 1, z_sign: int = 1, mu: float = MU0) -> PotentialSolution:
    """Vacuum field tangent to the ellipsoids ``eta = const``.

    ``Phi = (A1 + B1 F(sqrt((c^2 - theta^2)/(c^2 - b^2)), sqrt(c^2 - b^2)/c))
    (A2 + B2 F(lam / b, b / c))``, independent of ``eta``.  Its gradient
    equals ``-c B1 B2`` times the normalised closed form
    ``(F(lam/b, b/c) / sqrt((theta^2 - lam^2)(eta^2 - theta^2)), ...)`` when
    ``A1 = A2 = 0``.
    """
    chart = ellipsoidal_chart(b, c, y_sign, z_sign)
    k = EllipsoidConstants(float(b), float(c), float(A1), float(B1), float(A2), float(B2))
    b2, c2 = k.b ** 2, k.c ** 2

    def theta_part(t):
        return k.A1 + k.B1 * _F_theta(k, t)

    def lam_part(l):
        return k.A2 + k.B2 * _F_lam(k, l)

    def phi(t, l, e):
        return theta_part(t) * lam_part(l) + 0.0 * e

    def partials(t, l, e):
        dFt = -k.c / np.sqrt((c2 - t * t) * (t * t - b2))
        dFl = k.c / np.sqrt((b2 - l * l) * (c2 - l * l))
        return k.B1 * dFt * lam_part(l) + 0.0 * e, theta_part(t) * k.B2 * dFl + 0.0 * e, np.zeros(np.shape(t + l + e))

    zero2 = lambda t, l, e: (np.zeros(np.shape(t + l + e)), np.zeros(np.shape(t + l + e)))
    Phi = ScalarField(chart, phi, 0, "Phi", partials)
    return PotentialSolution(chart, Phi, kind="vacuum", mu=mu, mixed=zero2, name="ellipsoid_vacuum",
                             params={"b": k.b, "c": k.c, "A1": k.A1, "B1": k.B1, "A2": k.A2, "B2": k.B2,
                                     "y_sign": y_sign, "z_sign": z_sign})


def ellipsoid_reference_field(sol: PotentialSolution) -> VectorField:
    """The normalised closed form (valid for ``A1 = A2 = 0``) in the ``(theta, lam, eta)`` frame."""
    p = sol.params
    k = EllipsoidConstants(p["b"], p["c"], 0.0, 1.0, 0.0, 1.0)

    def fn(t, l, e):
        Bt = _F_lam(k, l) / np.sqrt((t * t - l * l) * (e * e - t * t))
        Bl = -_F_theta(k, t) / np.sqrt((e * e - l * l) * (t * t - l * l))
        return np.stack([Bt, Bl, np.zeros_like(Bt)])

    return VectorField(sol.chart, fn, 0, "B_ref")


def _sn2_integral(s, k, A, B):
    """``int_0^s (A + B x) sn^2(x, k) dx``."""
    m = k * k
    f = lambda x: (A + B * x) * ellipj(x, m)[0] ** 2
    return gauss_legendre_integral(f, np.zeros_like(s), s, 48)


def ellipsoid_labels(sol: PotentialSolution) -> LineLabels:
    """Line labels ``(eta, chi)`` for :func:`ellipsoid_vacuum`.

    ``chi`` is the in-surface stream function: with ``t = F_theta``,
    ``s = F_lam``,
    ``chi = B1 [eta^2 (A2 s + B2 s^2/2) - b^2 int_0^s (A2 + B2 x) sn^2(x, b/c) dx]
    - B2 [(eta^2 - c^2)(A1 t + B1 t^2/2) + (c^2 - b^2) int_0^t (A1 + B1 x) sn^2(x, k_theta) dx]``.
    """
    p = sol.params
    k = EllipsoidConstants(p["b"], p["c"], p["A1"], p["B1"], p["A2"], p["B2"])
    b2, c2 = k.b ** 2, k.c ** 2

    def fn(t, l, e):
        tt = _F_theta(k, t)
        ss = _F_lam(k, l)
        e2 = e * e
        I_lam = e2 * (k.A2 * ss + 0.5 * k.B2 * ss * ss) - b2 * _sn2_integral(ss, k.k_lam, k.A2, k.B2)
        I_th = (e2 - c2) * (k.A1 * tt + 0.5 * k.B1 * tt * tt) + (c2 - b2) * _sn2_integral(tt, k.k_theta, k.A1, k.B1)
        return e, k.B1 * I_lam - k.B2 * I_th

    return LineLabels(sol.chart, ("eta", "chi"), fn, "eta")


# -- prolate spheroids -------------------------------------------------------------

@dataclass(frozen=True)
class ProlateConstants:
    a: float
    M0: float
    eta0: float

    @property
    def x0(self) -> float:
        return math.cosh(self.eta0)

    @property
    def q0(self) -> float:
        return float(legendre_PQ(1, self.x0)[1])


def _prolate_h(k: ProlateConstants, e):
    """``h(eta) = cosh eta - cosh eta0 Q1(cosh eta)/Q1(cosh eta0)`` and ``dh/deta``."""
    x = np.cosh(e)
    _, Q, _, dQ = legendre_PQ(1, x, derivative=True)
    h = x - k.x0 * Q / k.q0
    dh = np.sinh(e) * (1.0 - k.x0 * dQ / k.q0)
    return h, dh


def prolate_vacuum(a: float, M0: float = 1.0, eta0: float = 0.3, *, mu: float = MU0) -> PotentialSolution:
    """Axisymmetric vacuum field normal to the spheroid ``eta = eta0``.

    Chart ``(u, v, w) = (eta, theta, phi)``; ``Phi = M0 a cos(theta) h(eta)``
    tends to ``M0 z`` far away, and the field lies in the half-planes
    ``phi = const``.
    """
    if not a > 0 or not eta0 > 0:
        raise EquilibriumError(f"prolate_vacuum needs a > 0 and eta0 > 0, got a={a}, eta0={eta0}")
    chart = prolate_spheroidal_chart(a)
    k = ProlateConstants(float(a), float(M0), float(eta0))

    def phi(e, t, p):
        h, _ = _prolate_h(k, e)
        return k.M0 * k.a * np.cos(t) * h + 0.0 * p

    def partials(e, t, p):
        h, dh = _prolate_h(k, e)
        z = np.zeros(np.shape(e + t + p))
        return k.M0 * k.a * np.cos(t) * dh + z, -k.M0 * k.a * np.sin(t) * h + z, z

    zero2 = lambda e, t, p: (np.zeros(np.shape(e + t + p)), np.zeros(np.shape(e + t + p)))
    Phi = ScalarField(chart, phi, 0, "Phi", partials)
    return PotentialSolution(chart, Phi, kind="vacuum", mu=mu, mixed=zero2, name="prolate_vacuum",
                             params={"a": k.a, "M0": k.M0, "eta0": k.eta0})


def prolate_psi(sol: PotentialSolution) -> ScalarField:
    """Tube label ``psi = (M0 a^2 / 2) sin^2(theta) sinh(eta) h'(eta)``."""
    k = ProlateConstants(sol.params["a"], sol.params["M0"], sol.params["eta0"])

    def fn(e, t, p):
        _, dh = _prolate_h(k, e)
        return 0.5 * k.M0 * k.a ** 2 * np.sin(t) ** 2 * np.sinh(e) * dh + 0.0 * p

    return ScalarField(sol.chart, fn, 0, "psi")


def prolate_theta0(sol: PotentialSolution, psi) -> np.ndarray:
    """Polar angle (in ``[0, pi/2]``) where the tube ``psi`` meets the base spheroid."""
    k = ProlateConstants(sol.params["a"], sol.params["M0"], sol.params["eta0"])
    _, dh0 = _prolate_h(k, np.asarray(k.eta0))
    s2 = 2.0 * np.asarray(psi, float) / (k.M0 * k.a ** 2 * math.sinh(k.eta0) * float(dh0))
    return np.arcsin(np.sqrt(np.clip(s2, 0.0, 1.0)))


def prolate_labels(sol: PotentialSolution, D: float = 0.0) -> LineLabels:
    """``(psi, phi)`` for the straight field; only ``psi`` survives a winding component."""
    psi = prolate_psi(sol)
    if D == 0.0:
        return LineLabels(sol.chart, ("psi", "phi"), lambda e, t, p: (psi(e, t, p), p), "phi")
    return LineLabels(sol.chart, ("psi",), lambda e, t, p: (psi(e, t, p),), "psi")


def prolate_cartesian_field(sol: PotentialSolution, D: float = 0.0) -> Callable:
    """Cartesian evaluator ``B(x, y, z) -> (3, ...)`` of the (optionally wound) prolate field.

    Uses ``B_phi e_phi = D dr/dphi / h_phi^2`` so the axis is regular when
    ``D = 0``.
    """
    chart = sol.chart
    a = sol.params["a"]

    def fn(x, y, z):
        e, t, p = chart.from_cartesian(x, y, z)
        du, dv, _ = sol.Phi.partials(e, t, p)
        g = a * a * (np.sinh(e) ** 2 + np.sin(t) ** 2)
        J = chart.jacobian(e, t, p)
        out = J[:, 0] * (du / g) + J[:, 1] * (dv / g)
        if D != 0.0:
            g3 = (a * np.sinh(e) * np.sin(t)) ** 2
            out = out + J[:, 2] * (D / g3)
        return out

    return fn


# -- conformal cylinders -------------------------------------------------------------

def conformal_force_free(chart: Chart, pair: FluxFunctionPair, D: float = 0.0, *, box=None,
                         tol: float = 1e-6, constraint_tol: float = 1e-8, mu: float = MU0):
    """``B = (C1(w)/h, C2(w)/h, D)`` on a chart with ``g11 = g22 = h^2``, ``g33 = 1``.

    For ``D = 0`` the field is force-free with ``alpha = C1'/C2``.  A constant
    ``D`` leaves the current unchanged; the result is then no longer
    force-free (``curl B`` stays in the plane while ``B`` does not).
    """
    box = _default_box(chart, box)
    u, v, w = sample_metric_box(chart, box)
    g1, g2, g3 = chart.metric(u, v, w)
    err = max(float(np.max(_rel(g1, g2))), float(np.max(np.abs(g3 - 1.0))))
    if not err <= tol:
        raise MetricConditionError(f"chart {chart.name!r} is not a conformal cylinder (error {err:.2e})")
    cres = pair.constraint_residual(np.unique(w))
    if not cres <= constraint_tol:
        raise ConstraintError(f"flux pair violates (C1^2 + C2^2)' = 0 (residual {cres:.2e})")
    D = float(D)

    def fn(u, v, w):
        c1, c2, _, _ = pair.values(w)
        h = chart.scale_factors(u, v, w)[0]
        return np.stack([c1 / h, c2 / h, D + 0.0 * h])

    def current(u, v, w):
        _, _, d1, d2 = pair.values(w)
        h = chart.scale_factors(u, v, w)[0]
        return chart.orientation / mu * np.stack([-d2 / h, d1 / h, 0.0 * h])

    def alpha(u, v, w):
        c1, c2, d1, d2 = pair.values(w)
        return chart.orientation * np.where(np.abs(c2) >= np.abs(c1), d1 / np.where(c2 == 0, 1.0, c2),
                                            -d2 / np.where(c1 == 0, 1.0, c1)) + 0.0 * u

    B = VectorField(chart, fn, 0, f"B_ff[D={D}]")
    J = VectorField(chart, current, 0, "J_ff")
    labels = LineLabels(chart, ("w", "s"), lambda u, v, w: (w, pair.values(w)[1] * u - pair.values(w)[0] * v), "w")
    return ConformalForceFree(B, J, ScalarField(chart, alpha, 0, "alpha"), labels, D, mu)


@dataclass(frozen=True)
class ConformalForceFree:
    B: VectorField
    J: VectorField
    alpha: ScalarField
    labels: LineLabels
    D: float
    mu: float = MU0


def elliptic_cylinder_example(a: float = 1.0):
    """Harmonic pair on the elliptic cylinder chart:
    ``phi = sinh u cos v + 0.1 sinh 2u cos 2v - 3v`` and its conjugate
    ``K = cosh u sin v + 0.1 cosh 2u sin 2v + 3u``, with exact partials."""
    from ..coords import elliptic_cylindrical_chart

    ch = elliptic_cylindrical_chart(a)

    def phi(u, v, w):
        return np.sinh(u) * np.cos(v) + 0.1 * np.sinh(2 * u) * np.cos(2 * v) - 3.0 * v + 0.0 * w

    def dphi(u, v, w):
        z = np.zeros(np.shape(u + v + w))
        return (np.cosh(u) * np.cos(v) + 0.2 * np.cosh(2 * u) * np.cos(2 * v) + z,
                -np.sinh(u) * np.sin(v) - 0.2 * np.sinh(2 * u) * np.sin(2 * v) - 3.0 + z, z)

    def K(u, v, w):
        return np.cosh(u) * np.sin(v) + 0.1 * np.cosh(2 * u) * np.sin(2 * v) + 3.0 * u + 0.0 * w

    def dK(u, v, w):
        pu, pv, z = dphi(u, v, w)
        return -pv, pu, z

    return ScalarField(ch, phi, 0, "phi", dphi), ScalarField(ch, K, 0, "K", dK)
