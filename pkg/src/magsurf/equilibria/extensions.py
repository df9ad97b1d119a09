"""Extensions of two-dimensional equilibria by a ``w``-component.

* :func:`add_polar_component` adds ``D / h3 e_w`` to a vacuum field, which
  stays vacuum when ``h1 h2 / h3`` does not depend on ``w``.
* :func:`winding_extension` adds the harmonic conjugate ``K`` as the
  ``w``-component on a conformal cylinder; the pressure ``C - K^2/(2 mu)``
  balances the resulting Lorentz force.
* :func:`glue_jet` superposes a prolate field with a rotated, translated and
  sign-flipped copy of itself.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..calculus import ScalarField, VectorField, _partials
from ..coords import Chart, SingularPointError, cartesian_chart
from .base import MU0, EquilibriumError, MetricConditionError, PotentialSolution, sample_metric_box
from .families import prolate_cartesian_field
from .labels import gauss_legendre_integral


def _box(chart: Chart, box):
    return chart.default_box(margin=0.1) if box is None else box


def _B_of(sol_or_B) -> VectorField:
    return sol_or_B.B if isinstance(sol_or_B, PotentialSolution) else sol_or_B


def add_polar_component(sol, D: float, *, box=None, tol: float = 1e-6) -> VectorField:
    """``B + (D / h3) e_w``.

    Requires ``h1 h2 / h3`` independent of ``w`` (checked on samples of
    ``box``).  Points where ``h3`` vanishes raise :class:`SingularPointError`
    when ``D != 0``.
    """
    B = _B_of(sol)
    ch = B.chart
    D = float(D)
    if D == 0.0:
        return B
    u, v, w = sample_metric_box(ch, _box(ch, box))

    def ratio(u, v, w):
        h1, h2, h3 = ch.scale_factors(u, v, w)
        return h1 * h2 / h3

    from ..calculus import partial

    r = ratio(u, v, w)
    var = float(np.max(np.abs(partial(ratio, ch, 2, u, v, w)) / np.maximum(np.abs(r), 1e-300)))
    if not var <= tol:
        raise MetricConditionError(f"h1 h2 / h3 depends on w on chart {ch.name!r} (variation {var:.2e})")

    def fn(u, v, w):
        h3 = ch.scale_factors(u, v, w)[2]
        if np.any(h3 == 0.0):
            raise SingularPointError(f"polar component D/h3 is singular where h3 = 0 on chart {ch.name!r}")
        base = B(u, v, w)
        return base + np.stack([np.zeros_like(h3), np.zeros_like(h3), D / h3])

    return VectorField(ch, fn, B.fd_depth, f"{B.name}+D/h3")


# -- harmonic conjugates ---------------------------------------------------------

def _check_conformal(chart: Chart, box, tol: float):
    u, v, w = sample_metric_box(chart, box)
    g1, g2, g3 = chart.metric(u, v, w)
    err = float(np.max(np.abs(g1 - g2) / np.maximum(g1, 1e-300)))
    if not err <= tol:
        raise MetricConditionError(f"chart {chart.name!r} does not have g11 = g22 (relative error {err:.2e})")
    from ..calculus import partial
    g33 = lambda *p: chart.metric(*p)[2]
    var = float(np.max((np.abs(partial(g33, chart, 0, u, v, w)) + np.abs(partial(g33, chart, 1, u, v, w)))
                       / np.maximum(g3, 1e-300)))
    if not var <= tol:
        raise MetricConditionError(f"g33 depends on (u, v) on chart {chart.name!r} (variation {var:.2e})")
    return u, v, w


def _laplacian_rel(s: ScalarField, u, v, w) -> float:
    """``max |s_uu + s_vv|`` relative to the first-derivative scale."""
    from ..calculus import partial

    du = lambda *p: _partials(s, *p)[0]
    dv = lambda *p: _partials(s, *p)[1]
    depth = s.fd_depth + (0 if s.partials is not None else 1)
    lap = partial(du, s.chart, 0, u, v, w, depth=depth) + partial(dv, s.chart, 1, u, v, w, depth=depth)
    su, sv, _ = _partials(s, u, v, w)
    scale = max(float(np.max(np.hypot(su, sv))), 1e-300)
    return float(np.max(np.abs(lap))) / scale


def harmonic_conjugate(phi: ScalarField, *, box=None, base: tuple[float, float] | None = None,
                       tol: float = 1e-5, n_quad: int = 64) -> ScalarField:
    """``K`` with ``K_u = -phi_v``, ``K_v = phi_u``, zero at ``base``.

    The value at ``(u, v)`` is integrated along the rectangular path
    ``(u0, v0) -> (u, v0) -> (u, v)`` with ``n_quad``-point Gauss-Legendre;
    ``base`` defaults to the centre of ``box``.  The returned field carries
    the exact partials ``(-phi_v, phi_u, 0)``.  On a periodic ``v`` axis a
    nonzero period of ``K`` around the cylinder triggers a warning.
    """
    ch = phi.chart
    box = _box(ch, box)
    u, v, w = _check_conformal(ch, box, 1e-6)
    lap = _laplacian_rel(phi, u, v, w)
    if not lap <= tol:
        raise EquilibriumError(f"phi is not harmonic in (u, v): relative Laplacian {lap:.2e}")
    u0, v0 = base if base is not None else (0.5 * (box[0][0] + box[0][1]), 0.5 * (box[1][0] + box[1][1]))

    def d(axis, uu, vv, ww):
        return _partials(phi, uu, vv, ww)[axis]

    def fn(u, v, w):
        # leg 1 along u at v0, leg 2 along v at fixed u
        leg1 = gauss_legendre_integral(lambda s: -d(1, s, v0 + 0.0 * s, w[..., None] + 0.0 * s),
                                       u0 + 0.0 * u, u, n_quad)
        leg2 = gauss_legendre_integral(lambda t: d(0, u[..., None] + 0.0 * t, t, w[..., None] + 0.0 * t),
                                       v0 + 0.0 * v, v, n_quad)
        return leg1 + leg2

    def partials(u, v, w):
        pu, pv, _ = _partials(phi, u, v, w)
        return -pv, pu, np.zeros_like(pu)

    if ch.periodic[1]:
        per = conjugate_period(phi, u0, w=0.5 * (box[2][0] + box[2][1]) if math.isfinite(box[2][0]) else 0.0,
                               n_quad=4 * n_quad)
        if abs(per) > tol:
            warnings.warn(f"harmonic conjugate is multivalued around the v-cycle: period {per:.6g}", stacklevel=2)
    return ScalarField(ch, fn, phi.fd_depth, f"conj({phi.name})", partials)


def conjugate_period(phi: ScalarField, u0: float, w: float = 0.0, n_quad: int = 256) -> float:
    """``oint phi_u dv`` around the periodic ``v`` axis at ``u = u0``."""
    ch = phi.chart
    lo, hi = ch.domain[1]
    # split the cycle so the rule never straddles the seam
    t, wt = np.polynomial.legendre.leggauss(n_quad)
    vs = lo + 1e-12 + (hi - lo - 2e-12) * 0.5 * (t + 1.0)
    val = _partials(phi, np.full_like(vs, u0), vs, np.full_like(vs, w))[0]
    return float(0.5 * (hi - lo) * np.sum(wt * val))


# -- winding extension -----------------------------------------------------------

@dataclass(frozen=True)
class WindingField:
    B: VectorField
    K: ScalarField
    pressure: ScalarField
    C: float
    mu: float = MU0


def winding_extension(phi: ScalarField, K: ScalarField, *, C: float = 0.0, mu: float = MU0, box=None,
                      tol: float = 1e-5) -> WindingField:
    """``B = (phi_u / h, phi_v / h, K)`` with pressure ``C - K^2 / (2 mu)``.

    ``K`` must be harmonic with gradient orthogonal to ``grad phi`` and
    ``|grad K| = s |grad phi|`` for a constant ``s``; both are checked on
    samples of ``box``.
    """
    ch = phi.chart
    if K.chart is not ch and K.chart != ch:
        raise EquilibriumError("phi and K must share a chart")
    box = _box(ch, box)
    u, v, w = _check_conformal(ch, box, 1e-6)
    for name, s in (("phi", phi), ("K", K)):
        lap = _laplacian_rel(s, u, v, w)
        if not lap <= tol:
            raise EquilibriumError(f"{name} is not harmonic in (u, v): relative Laplacian {lap:.2e}")
    pu, pv, _ = _partials(phi, u, v, w)
    ku, kv, kw = _partials(K, u, v, w)
    gp = np.hypot(pu, pv)
    gk = np.hypot(ku, kv)
    scale = float(np.max(gp * gk)) or 1.0
    orth = float(np.max(np.abs(pu * ku + pv * kv))) / scale
    ok = gp > 1e-8 * float(np.max(gp))
    ratio = gk[ok] / gp[ok]
    spread = float(np.ptp(ratio) / max(np.max(ratio), 1e-300)) if ratio.size else 0.0
    wdep = float(np.max(np.abs(kw))) / max(float(np.max(gk)), 1e-300)
    if not (orth <= tol and spread <= tol and wdep <= tol):
        raise EquilibriumError(
            f"K is not a harmonic conjugate of phi: orthogonality {orth:.2e}, modulus spread {spread:.2e}, "
            f"w-dependence {wdep:.2e}")
    C = float(C)

    def fn(u, v, w):
        du, dv, _ = _partials(phi, u, v, w)
        h = ch.scale_factors(u, v, w)[0]
        return np.stack([du / h, dv / h, K(u, v, w)])

    def pres(u, v, w):
        return C - K(u, v, w) ** 2 / (2.0 * mu)

    def pres_partials(u, v, w):
        k = K(u, v, w)
        ku, kv, kw = _partials(K, u, v, w)
        return -k * ku / mu, -k * kv / mu, -k * kw / mu

    depth = max(phi.fd_depth + (0 if phi.partials is not None else 1), K.fd_depth)
    B = VectorField(ch, fn, depth, "B_winding")
    P = ScalarField(ch, pres, K.fd_depth, "P_winding",
                    pres_partials if K.partials is not None else None)
    return WindingField(B, K, P, C, mu)


# -- glued jets ------------------------------------------------------------------

_R_PI = np.diag([1.0, -1.0, -1.0])


def glue_jet(sol: PotentialSolution, separation: float, D: float = 0.0) -> VectorField:
    """``B(r) - R B(R (r - L e_z))`` with ``R`` the half-turn about the x-axis.

    The copy sits at ``z = L``, pointing back towards the original; far from
    both the two uniform parts add up.  Pure superposition, so the result is
    exactly divergence- and curl-free wherever both terms are.  A
    ``separation`` below ``10 a`` raises a warning.
    """
    a = sol.params.get("a")
    if a is None:
        raise EquilibriumError("glue_jet needs a prolate solution")
    L = float(separation)
    if L < 10.0 * a:
        warnings.warn(f"separation {L} is below 10 a = {10 * a}; the copies interact strongly", stacklevel=2)
    Bxyz = prolate_cartesian_field(sol, D)
    fn = glued_cartesian(Bxyz, L)
    return VectorField(cartesian_chart(), fn, 0, f"glued[L={L}]")


def glued_cartesian(Bxyz: Callable, L: float) -> Callable:
    def fn(x, y, z):
        x, y, z = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (x, y, z)))
        b0 = np.asarray(Bxyz(x, y, z))
        # R (r - L e_z) = (x, -y, L - z)
        b1 = np.asarray(Bxyz(x, -y, L - z))
        return b0 - np.einsum("ij,j...->i...", _R_PI, b1)

    return fn


def radial_ratio_slope(field_xyz: Callable, z: np.ndarray, rho: np.ndarray) -> tuple[float, np.ndarray]:
    """Least-squares slope of ``log|B_rho / B_z|`` against ``log z`` at points ``(rho, 0, z)``.

    Returns the slope and the sampled ratios.
    """
    z = np.asarray(z, dtype=float)
    rho = np.broadcast_to(np.asarray(rho, dtype=float), z.shape)
    B = np.asarray(field_xyz(rho, np.zeros_like(z), z))
    ratio = B[0] / B[2]
    slope = float(np.polyfit(np.log(z), np.log(np.abs(ratio)), 1)[0])
    return slope, ratio
