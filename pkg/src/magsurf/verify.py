"""Residuals of the equilibrium systems, force-free coefficients, energies and
boundary current sheets.

Every residual routine samples a :class:`~magsurf.report.GridSpec`, drops
points in the chart's singular set and reduces pointwise residual magnitudes
to a :class:`~magsurf.report.ResidualReport`.  Tolerances are absolute.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .calculus import ScalarField, VectorField, cross_values, curl, div, grad, partial
from .coords import Chart
from .equilibria.base import MU0, PotentialSolution, _phi_uv
from .report import GridSample, GridSpec, ResidualReport, residual_norms
from .transforms import EquilibriumState

DEFAULT_TOL = 1e-6
TRANSFORM_TOL = 1e-5
CHUNK = 4096


def _norm(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.asarray(x) ** 2, axis=0))


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("MAGSURF_WORKERS", "1")))
    except ValueError:
        return 1


def _sample(chart: Chart, grid: GridSpec) -> GridSample:
    return grid.sample(chart).require_nonempty()


def _map_chunks(fn: Callable, s: GridSample) -> list:
    """Evaluate ``fn(u, v, w) -> tuple of arrays`` over chunks of the sample set.

    Chunks run on ``MAGSURF_WORKERS`` threads; results are concatenated in
    chunk order so serial and parallel runs agree exactly.
    """
    u, v, w = s.points
    bounds = [(i, min(i + CHUNK, u.size)) for i in range(0, u.size, CHUNK)]
    job = lambda b: fn(u[b[0]:b[1]], v[b[0]:b[1]], w[b[0]:b[1]])
    nw = _workers()
    if nw > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(nw) as ex:
            parts = list(ex.map(job, bounds))
    else:
        parts = [job(b) for b in bounds]
    return [np.concatenate([p[k] for p in parts], axis=-1) for k in range(len(parts[0]))]


def _report(title: str, s: GridSample, rows: Sequence[tuple[str, np.ndarray, np.ndarray]], tol: float,
            **extras) -> ResidualReport:
    eqs = [residual_norms(name, vals, s.n_excluded, tol, scale) for name, vals, scale in rows]
    return ResidualReport(eqs, s.spec.to_dict(), title, dict(extras))


# -- static and dynamic MHD --------------------------------------------------------

def residual_mhd_static(B: VectorField, P, grid: GridSpec, *, mu: float = MU0,
                        tolerance: float = DEFAULT_TOL) -> ResidualReport:
    """``curl B x B - mu grad P`` and ``div B``."""
    ch = B.chart
    Pf = P if isinstance(P, ScalarField) else ScalarField(ch, lambda u, v, w: float(P) + 0.0 * u, 0, "P")
    cB, dB, gP = curl(B), div(B), grad(Pf)

    def fn(u, v, w):
        b = B(u, v, w)
        lor = cross_values(ch, cB(u, v, w), b)
        gp = mu * gP(u, v, w)
        return _norm(lor - gp), np.maximum(_norm(lor), _norm(gp)), dB(u, v, w), _norm(b)

    s = _sample(ch, grid)
    fb, fs, d, bm = _map_chunks(fn, s)
    return _report("mhd_static", s, [("force_balance", fb, fs), ("div_B", d, bm)], tolerance)


def _dynamic_terms(state: EquilibriumState):
    """Closures for the momentum equation pieces shared by the MHD and CGL residuals."""
    ch = state.chart
    B, V, rho = state.B, state.V, state.rho
    cB, cV = curl(B), curl(V)
    V2 = ScalarField(ch, lambda u, v, w: 0.5 * np.sum(V(u, v, w) ** 2, axis=0), V.fd_depth, "V2/2")
    gV2 = grad(V2)
    rhoV = VectorField(ch, lambda u, v, w: rho(u, v, w) * V(u, v, w), max(rho.fd_depth, V.fd_depth), "rhoV")
    VxB = VectorField(ch, lambda u, v, w: cross_values(ch, V(u, v, w), B(u, v, w)), max(B.fd_depth, V.fd_depth),
                      "VxB")
    return cB, cV, gV2, div(rhoV), curl(VxB), div(B), div(V)


def residual_mhd_dynamic(state: EquilibriumState, grid: GridSpec, *,
                         tolerance: float = TRANSFORM_TOL) -> ResidualReport:
    """``rho V x curl V - B x curl B / mu - grad P - rho grad(V^2/2)`` plus
    ``div(rho V)``, ``curl(V x B)``, ``div B`` and ``div V``."""
    if state.kind == "cgl":
        raise ValueError("residual_mhd_dynamic needs an MHD state")
    ch, mu = state.chart, state.mu
    B, V, rho = state.B, state.V, state.rho
    cB, cV, gV2, dRV, cVB, dB, dV = _dynamic_terms(state)
    gP = grad(state.P)

    def fn(u, v, w):
        b, vv, r = B(u, v, w), V(u, v, w), rho(u, v, w)
        t1 = r * cross_values(ch, vv, cV(u, v, w))
        t2 = cross_values(ch, b, cB(u, v, w)) / mu
        t3 = gP(u, v, w)
        t4 = r * gV2(u, v, w)
        mom = t1 - t2 - t3 - t4
        scale = np.max(np.stack([_norm(t) for t in (t1, t2, t3, t4)]), axis=0)
        bm = _norm(b)
        return (_norm(mom), scale, dRV(u, v, w), r * _norm(vv), _norm(cVB(u, v, w)), _norm(vv) * bm,
                dB(u, v, w), bm, dV(u, v, w), _norm(vv))

    s = _sample(ch, grid)
    m, ms, a, as_, c, cs, d, ds, e, es = _map_chunks(fn, s)
    return _report("mhd_dynamic", s, [("momentum", m, ms), ("div_rhoV", a, as_), ("curl_VxB", c, cs),
                                      ("div_B", d, ds), ("div_V", e, es)], tolerance)


def residual_cgl(state: EquilibriumState, grid: GridSpec, *, tolerance: float = TRANSFORM_TOL) -> ResidualReport:
    """CGL momentum balance
    ``rho V x curl V - (1/mu - tau) B x curl B - grad p_perp - rho grad(V^2/2)
    - tau grad(B^2/2) - B (B . grad tau)`` plus the constraint equations."""
    if state.kind != "cgl":
        raise ValueError("residual_cgl needs a cgl state")
    ch, mu = state.chart, state.mu
    B, V, rho = state.B, state.V, state.rho
    cB, cV, gV2, dRV, cVB, dB, dV = _dynamic_terms(state)
    tau = state.tau
    gtau = grad(tau)
    gpp = grad(state.p_perp)
    B2 = ScalarField(ch, lambda u, v, w: 0.5 * np.sum(B(u, v, w) ** 2, axis=0), B.fd_depth, "B2/2")
    gB2 = grad(B2)

    def fn(u, v, w):
        b, vv, r, t = B(u, v, w), V(u, v, w), rho(u, v, w), tau(u, v, w)
        terms = [
            r * cross_values(ch, vv, cV(u, v, w)),
            -(1.0 / mu - t) * cross_values(ch, b, cB(u, v, w)),
            -gpp(u, v, w),
            -r * gV2(u, v, w),
            -t * gB2(u, v, w),
            -b * np.sum(b * gtau(u, v, w), axis=0),
        ]
        mom = sum(terms)
        scale = np.max(np.stack([_norm(x) for x in terms]), axis=0)
        bm = _norm(b)
        return (_norm(mom), scale, dRV(u, v, w), r * _norm(vv), _norm(cVB(u, v, w)), _norm(vv) * bm,
                dB(u, v, w), bm, dV(u, v, w), _norm(vv))

    s = _sample(ch, grid)
    m, ms, a, as_, c, cs, d, ds, e, es = _map_chunks(fn, s)
    return _report("cgl", s, [("momentum", m, ms), ("div_rhoV", a, as_), ("curl_VxB", c, cs),
                              ("div_B", d, ds), ("div_V", e, es)], tolerance,
                   firehose_unstable=bool(state.flags.get("firehose_unstable", False)))


def residual_vacuum(B: VectorField, grid: GridSpec, *, tolerance: float = DEFAULT_TOL) -> ResidualReport:
    """``div B`` and ``|curl B|``."""
    ch = B.chart
    cB, dB = curl(B), div(B)

    def fn(u, v, w):
        bm = _norm(B(u, v, w))
        return dB(u, v, w), _norm(cB(u, v, w)), bm

    s = _sample(ch, grid)
    d, c, bm = _map_chunks(fn, s)
    return _report("vacuum", s, [("div_B", d, bm), ("curl_B", c, bm)], tolerance)


def potential_system_residuals(sol: PotentialSolution, grid: GridSpec, *,
                               tolerance: float = DEFAULT_TOL) -> ResidualReport:
    """Residuals of the reduced two-equation system for ``(Phi, P)``:
    the truncated Laplacian and
    ``Phi_u Phi_uw / g11 + Phi_v Phi_vw / g22 + mu P'(w)``."""
    from .calculus import laplacian_uv

    ch = sol.chart
    lap = laplacian_uv(sol.Phi)
    P = sol.pressure

    def mixed(u, v, w):
        if sol.mixed is not None:
            return sol.mixed(u, v, w)
        d = partial(lambda *p: np.stack(_phi_uv(sol, *p)), ch, 2, u, v, w, depth=1)
        return d[0], d[1]

    def fn(u, v, w):
        pu, pv = _phi_uv(sol, u, v, w)
        puw, pvw = mixed(u, v, w)
        g1, g2, g3 = ch.metric(u, v, w)
        h1, h2, h3 = np.sqrt(g1), np.sqrt(g2), np.sqrt(g3)
        dP = partial(lambda uu, vv, ww: np.asarray(P(ww), dtype=float) + 0.0 * uu, ch, 2, u, v, w)
        a, b = pu * puw / g1, pv * pvw / g2
        r2 = a + b + sol.mu * dP
        s1 = np.maximum(np.abs(pu * h2 * h3 / h1), np.abs(pv * h1 * h3 / h2))
        return lap(u, v, w), s1, r2, np.maximum(np.maximum(np.abs(a), np.abs(b)), np.abs(sol.mu * dP))

    s = _sample(ch, grid)
    l, ls, r, rs = _map_chunks(fn, s)
    return _report("potential_system", s, [("laplacian_uv", l, ls), ("pressure_balance", r, rs)], tolerance)


# -- force-free coefficient --------------------------------------------------------

def force_free_alpha(B: VectorField, grid: GridSpec, *, tolerance: float = DEFAULT_TOL,
                     floor: float = 1e-12) -> tuple[ScalarField, ResidualReport]:
    """``alpha = curl B . B / B^2`` and the report of ``|curl B - alpha B|``
    plus the spread of ``alpha`` on each grid surface ``w = const``."""
    ch = B.chart
    cB = curl(B)

    def alpha_fn(u, v, w):
        b, c = B(u, v, w), cB(u, v, w)
        b2 = np.sum(b * b, axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(b2 > floor ** 2, np.sum(c * b, axis=0) / b2, np.nan)

    alpha = ScalarField(ch, alpha_fn, B.fd_depth + 1, "alpha")

    def fn(u, v, w):
        b, c = B(u, v, w), cB(u, v, w)
        b2 = np.sum(b * b, axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(b2 > floor ** 2, np.sum(c * b, axis=0) / b2, 0.0)
        return _norm(c - a * b), _norm(c), a

    s = _sample(ch, grid)
    r, rs, a = _map_chunks(fn, s)
    # spread of alpha on each w-plane of the grid
    wi = s.index[:, 2]
    spreads = np.zeros(s.n_samples)
    per_surface = {}
    for k in np.unique(wi):
        sel = wi == k
        vals = a[sel]
        spreads[sel] = np.ptp(vals) if vals.size else 0.0
        per_surface[float(s.w[sel][0])] = float(np.mean(vals))
    rep = _report("force_free", s, [("curlB_minus_alphaB", r, rs), ("alpha_surface_spread", spreads, a)],
                  tolerance, alpha_by_surface=per_surface)
    return alpha, rep


# -- energy ----------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSpec:
    """Tensor midpoint rule on ``box`` after the endpoint-clustering map
    ``x = lo + (hi - lo)(1 - cos(pi t))/2``; ``n`` cells per axis at the
    coarsest level, doubled ``levels - 1`` times."""

    box: tuple
    n: int | tuple[int, int, int] = 16
    levels: int = 3
    stretch: tuple[bool, bool, bool] = (True, True, True)

    def __post_init__(self):
        n = (self.n,) * 3 if np.isscalar(self.n) else tuple(self.n)
        object.__setattr__(self, "n", tuple(int(k) for k in n))
        object.__setattr__(self, "box", tuple((float(a), float(b)) for a, b in self.box))
        if self.levels < 3:
            raise ValueError("the ratio test needs at least three refinement levels")


@dataclass(frozen=True)
class EnergyResult:
    value: float
    levels: tuple[float, ...]
    converged: bool
    ratio: float
    n_excluded: int = 0

    @property
    def divergent(self) -> bool:
        return not self.converged

    def to_dict(self) -> dict:
        return {"value": self.value, "levels": list(self.levels), "converged": self.converged,
                "ratio": self.ratio, "n_excluded": self.n_excluded}


def _nodes(lo: float, hi: float, n: int, stretch: bool):
    t = (np.arange(n) + 0.5) / n
    if stretch:
        x = lo + 0.5 * (hi - lo) * (1.0 - np.cos(np.pi * t))
        wgt = 0.5 * (hi - lo) * np.pi * np.sin(np.pi * t) / n
    else:
        x = lo + (hi - lo) * t
        wgt = np.full(n, (hi - lo) / n)
    return x, wgt


def _energy_level(B: VectorField, box, n, stretch, mu: float) -> tuple[float, int]:
    ch = B.chart
    (xu, wu), (xv, wv), (xw, ww) = (_nodes(lo, hi, k, st) for (lo, hi), k, st in zip(box, n, stretch))
    total = []
    excluded = 0
    for i, w in enumerate(xw):
        U, V = np.meshgrid(xu, xv, indexing="ij")
        W = np.full_like(U, w)
        b = B(U, V, W)
        dens = np.sum(b * b, axis=0) / (2.0 * mu) * ch.volume_element(U, V, W)
        bad = ~np.isfinite(dens)
        excluded += int(bad.sum())
        dens = np.where(bad, 0.0, dens)
        total.append(ww[i] * float(np.einsum("i,ij,j->", wu, dens, wv)))
    return math.fsum(total), excluded


def energy_shell(B: VectorField, w1: float, w2: float, quad: QuadratureSpec | None = None, *,
                 uv_box=None, mu: float = MU0, rtol: float = 0.01) -> EnergyResult:
    """``int B^2 / (2 mu) dV`` over ``w in [w1, w2]``.

    ``uv_box`` (or ``quad.box``) fixes the ``(u, v)`` ranges.  The value is
    computed at ``levels`` successive doublings; it is declared convergent
    when the last change is below ``rtol`` of the value and smaller than half
    the previous change.
    """
    ch = B.chart
    if quad is None:
        if uv_box is None:
            uv_box = ch.default_box(margin=0.0)[:2]
        quad = QuadratureSpec((tuple(uv_box[0]), tuple(uv_box[1]), (w1, w2)))
    else:
        quad = QuadratureSpec((quad.box[0], quad.box[1], (w1, w2)), quad.n, quad.levels, quad.stretch)
    vals, excl = [], 0
    for lev in range(quad.levels):
        n = tuple(k * 2 ** lev for k in quad.n)
        e, x = _energy_level(B, quad.box, n, quad.stretch, mu)
        vals.append(e)
        excl += x
    d1 = vals[-2] - vals[-3]
    d2 = vals[-1] - vals[-2]
    ratio = abs(d2) / abs(d1) if d1 != 0 else (0.0 if d2 == 0 else math.inf)
    rel = abs(d2) / abs(vals[-1]) if vals[-1] != 0 else (0.0 if d2 == 0 else math.inf)
    converged = bool(rel < rtol and (ratio <= 0.5 or rel < 1e-12))
    return EnergyResult(vals[-1], tuple(vals), converged, ratio, excl)


def energy_gradient_check(B: VectorField, P, grid: GridSpec, *, mu: float = MU0,
                          tolerance: float = DEFAULT_TOL) -> ResidualReport:
    """``(1/h3) d/dw (B^2 / (2 mu) + P)``.

    The identity holds for potential solutions on charts with ``g11, g22``
    independent of ``w``; the report records whether the chart qualifies.
    """
    ch = B.chart
    Pf = P if isinstance(P, ScalarField) else ScalarField(ch, lambda u, v, w: float(P) + 0.0 * u, 0, "P")
    tot = ScalarField(ch, lambda u, v, w: np.sum(B(u, v, w) ** 2, axis=0) / (2 * mu) + Pf(u, v, w),
                      max(B.fd_depth, Pf.fd_depth), "energy")

    def fn(u, v, w):
        h3 = ch.scale_factors(u, v, w)[2]
        d = partial(tot, ch, 2, u, v, w, depth=tot.fd_depth) / h3
        g12 = lambda *p: np.stack(ch.metric(*p)[:2])
        dg = partial(g12, ch, 2, u, v, w)
        g1, g2, _ = ch.metric(u, v, w)
        wdep = np.maximum(np.abs(dg[0]) / g1, np.abs(dg[1]) / g2)
        return d, np.abs(tot(u, v, w)), wdep

    s = _sample(ch, grid)
    d, sc, wdep = _map_chunks(fn, s)
    return _report("energy_gradient", s, [("d_dw_energy", d, sc)], tolerance,
                   metric_w_independent=bool(np.max(wdep) < 1e-6))


# -- boundary current sheets ------------------------------------------------------

@dataclass(frozen=True)
class SurfaceCurrent:
    """Current sheet ``i_b = B x n_out / mu`` sampled on ``w = w0``.

    ``i_frame`` and ``n_frame`` are orthonormal-frame components; the
    ``*_xyz`` arrays are Cartesian.
    """

    u: np.ndarray
    v: np.ndarray
    w0: float
    B_frame: np.ndarray
    i_frame: np.ndarray
    n_frame: np.ndarray
    i_xyz: np.ndarray
    n_xyz: np.ndarray
    xyz: np.ndarray
    mu: float

    def normal_component(self) -> np.ndarray:
        return np.sum(self.i_frame * self.n_frame, axis=0)


def surface_current(B: VectorField, w0: float, uv_grid: tuple, n: int | tuple[int, int] = 32, *,
                    outward: int = 1, mu: float = MU0, eps: float | None = None) -> SurfaceCurrent:
    """Sheet current on the boundary ``w = w0`` of a domain lying on the
    ``outward = -1`` side (``n_out = outward * e_w``)."""
    if outward not in (1, -1):
        raise ValueError("outward must be +1 or -1")
    ch = B.chart
    nn = (n, n) if np.isscalar(n) else tuple(n)
    spec = GridSpec((tuple(uv_grid[0]), tuple(uv_grid[1]), (w0, w0)), (nn[0], nn[1], 1), eps)
    s = _sample(ch, spec)
    u, v, w = s.points
    b = B(u, v, w)
    nf = np.zeros_like(b)
    nf[2] = float(outward)
    i_b = cross_values(ch, b, nf) / mu
    return SurfaceCurrent(
        u, v, float(w0), b, i_b, nf, ch.frame_to_cartesian(u, v, w, i_b), ch.frame_to_cartesian(u, v, w, nf),
        np.stack(ch.to_cartesian(u, v, w)), mu,
    )


# -- finite-difference order ------------------------------------------------------

@dataclass(frozen=True)
class OrderFit:
    steps: tuple[float, ...]
    errors: tuple[float, ...]
    slope: float


def convergence_order(error_at: Callable[[float], float], h0: float = 1e-2, halvings: int = 4) -> OrderFit:
    """Fit ``log(error) = p log(h) + c`` over ``h0, h0/2, ...``."""
    hs = [h0 / 2 ** k for k in range(halvings + 1)]
    errs = [float(error_at(h)) for h in hs]
    if any(not (e > 0 and math.isfinite(e)) for e in errs):
        raise ValueError(f"errors must be positive and finite for the fit, got {errs}")
    slope = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    return OrderFit(tuple(hs), tuple(errs), slope)


def fd_residual_order(B: VectorField, grid: GridSpec, h0: float = 1e-2, halvings: int = 4) -> OrderFit:
    """Order of ``max |div_h B|`` in the relative step ``h`` for a
    divergence-free ``B`` (the truncation error is the whole residual)."""
    s = _sample(B.chart, grid)
    u, v, w = s.points
    return convergence_order(lambda h: float(np.max(np.abs(div(B, rel=h)(u, v, w)))), h0, halvings)


def collinear(A: VectorField, B: VectorField, grid: GridSpec, tol: float = 1e-10) -> bool:
    """``|A x B| <= tol |A| |B|`` on all samples (flow aligned with the field)."""
    s = _sample(A.chart, grid)
    a, b = A(*s.points), B(*s.points)
    return bool(np.all(_norm(np.cross(a, b, axis=0)) <= tol * _norm(a) * _norm(b) + 1e-300))
