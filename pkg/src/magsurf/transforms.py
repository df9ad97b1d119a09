"""Symmetry transformations of incompressible equilibria.

The Bogoyavlenskij map mixes ``B`` and ``V`` with functions constant on
field lines and streamlines; the MHD to CGL map rescales them and splits the
pressure into ``p_perp`` and ``p_par``.  Free functions are supplied as
:class:`LineLabelFunction` objects built on a family's line labels.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from .calculus import ScalarField, VectorField, scalar_constant
from .coords import Chart, PointUVW
from .equilibria.labels import LineLabels
from .report import GridSpec

MU0 = 1.0
KINDS = ("mhd_static", "mhd_dynamic", "cgl")


class TransformError(ValueError):
    """Transformation preconditions do not hold."""


@dataclass(frozen=True)
class LineLabelFunction:
    """``g(labels)`` for a label map, or a constant when ``labels`` is None.

    ``g`` receives the label arrays as keyword arguments.
    """

    g: Callable[..., np.ndarray] | float
    labels: LineLabels | None = None
    name: str = ""

    @classmethod
    def constant(cls, c: float, name: str = "") -> "LineLabelFunction":
        return cls(float(c), None, name or repr(float(c)))

    @property
    def is_constant(self) -> bool:
        return self.labels is None

    def field(self, chart: Chart) -> ScalarField:
        if self.labels is None:
            if callable(self.g):
                raise TransformError(f"label function {self.name!r} has no label map")
            return scalar_constant(chart, float(self.g))
        if self.labels.chart is not chart and self.labels.chart != chart:
            raise TransformError(f"label function {self.name!r} lives on a different chart")
        return self.labels.compose(self.g, self.name)

    def __call__(self, u, v, w) -> np.ndarray:
        if self.labels is None:
            return np.full(np.shape(np.broadcast_arrays(u, v, w)[0]), float(self.g))
        return self.field(self.labels.chart)(u, v, w)


def _as_field(x, chart: Chart) -> ScalarField:
    if isinstance(x, ScalarField):
        return x
    if isinstance(x, LineLabelFunction):
        return x.field(chart)
    return scalar_constant(chart, float(x))


@dataclass(frozen=True)
class EquilibriumState:
    """Fields of an (incompressible) equilibrium on one chart.

    MHD states carry ``P``; CGL states carry ``p_perp`` and ``p_par``.
    ``flags`` records non-fatal findings such as fire-hose instability.
    """

    kind: str
    B: VectorField
    rho: ScalarField
    V: VectorField | None = None
    P: ScalarField | None = None
    p_perp: ScalarField | None = None
    p_par: ScalarField | None = None
    mu: float = MU0
    flags: Mapping[str, object] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise TransformError(f"unknown state kind {self.kind!r}; expected one of {KINDS}")
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise TransformError(f"permeability must be positive, got {self.mu}")
        if self.V is None:
            object.__setattr__(self, "V", VectorField.zero(self.B.chart))
        if self.kind == "cgl":
            if self.p_perp is None or self.p_par is None:
                raise TransformError("a cgl state needs p_perp and p_par")
        elif self.P is None:
            raise TransformError(f"a {self.kind} state needs P")

    @property
    def chart(self) -> Chart:
        return self.B.chart

    @property
    def tau(self) -> ScalarField:
        """``(p_par - p_perp) / B^2`` (NaN where ``B = 0``); zero for MHD states."""
        ch = self.chart
        if self.kind != "cgl":
            return scalar_constant(ch, 0.0)
        B, pp, pl = self.B, self.p_perp, self.p_par

        def fn(u, v, w):
            b2 = np.sum(B(u, v, w) ** 2, axis=0)
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(b2 > 0, (pl(u, v, w) - pp(u, v, w)) / b2, np.nan)

        return ScalarField(ch, fn, max(B.fd_depth, pp.fd_depth, pl.fd_depth), "tau")

    @classmethod
    def static(cls, B: VectorField, P=0.0, rho=1.0, mu: float = MU0, name: str = "") -> "EquilibriumState":
        ch = B.chart
        return cls("mhd_static", B, _as_field(rho, ch), None, _as_field(P, ch), mu=mu, name=name)

    def evaluate(self, u, v, w) -> dict[str, np.ndarray]:
        out = {"B": self.B(u, v, w), "V": self.V(u, v, w), "rho": self.rho(u, v, w)}
        if self.kind == "cgl":
            out["p_perp"] = self.p_perp(u, v, w)
            out["p_par"] = self.p_par(u, v, w)
        else:
            out["P"] = self.P(u, v, w)
        return out


def _samples(chart: Chart, box, n: int = 9):
    s = GridSpec(chart.default_box(margin=0.1) if box is None else box, n).sample(chart).require_nonempty()
    return s.points


def bogoyavlenskij(state: EquilibriumState, m, n, a, C: float | None = None, *, box=None,
                   tol: float = 1e-10) -> EquilibriumState:
    """Apply the Bogoyavlenskij symmetry.

    ``B1 = m B + n sqrt(mu rho) V``, ``V1 = n B / (a sqrt(mu rho)) + m V / a``,
    ``rho1 = a^2 rho``, ``P1 = C P + (C B^2 - B1^2) / (2 mu)`` with
    ``m^2 - n^2 = C``.  ``m, n, a`` are label functions, scalar fields or
    constants.  The constraint and ``rho > 0``, ``a != 0`` are checked on
    samples of ``box``.
    """
    if state.kind == "cgl":
        raise TransformError("bogoyavlenskij acts on MHD states")
    ch = state.chart
    mf, nf, af = (_as_field(x, ch) for x in (m, n, a))
    u, v, w = _samples(ch, box)
    mm, nn, aa = mf(u, v, w), nf(u, v, w), af(u, v, w)
    cc = mm * mm - nn * nn
    if C is None:
        C = float(np.median(cc))
    dev = float(np.max(np.abs(cc - C)))
    if not dev <= tol * max(1.0, abs(C)):
        raise TransformError(f"m^2 - n^2 is not the constant {C}: deviation {dev:.2e}")
    rr = state.rho(u, v, w)
    if not np.all(rr > 0):
        raise TransformError("density must be positive for the Bogoyavlenskij map")
    if not np.all(np.abs(aa) > 0):
        raise TransformError("scaling function a vanishes")
    mu = state.mu
    B0, V0, rho0, P0 = state.B, state.V, state.rho, state.P
    C = float(C)

    def B1(u, v, w):
        s = np.sqrt(mu * rho0(u, v, w))
        return mf(u, v, w) * B0(u, v, w) + nf(u, v, w) * s * V0(u, v, w)

    def V1(u, v, w):
        s = np.sqrt(mu * rho0(u, v, w))
        aa = af(u, v, w)
        return nf(u, v, w) / (aa * s) * B0(u, v, w) + mf(u, v, w) / aa * V0(u, v, w)

    def rho1(u, v, w):
        return af(u, v, w) ** 2 * rho0(u, v, w)

    def P1(u, v, w):
        b0 = B0(u, v, w)
        b1 = B1(u, v, w)
        return C * P0(u, v, w) + (C * np.sum(b0 * b0, axis=0) - np.sum(b1 * b1, axis=0)) / (2.0 * mu)

    depth = max(B0.fd_depth, V0.fd_depth, rho0.fd_depth, mf.fd_depth, nf.fd_depth, af.fd_depth)
    return EquilibriumState(
        "mhd_dynamic", VectorField(ch, B1, depth, "B1"), ScalarField(ch, rho1, depth, "rho1"),
        VectorField(ch, V1, depth, "V1"), ScalarField(ch, P1, max(depth, P0.fd_depth), "P1"),
        mu=mu, flags={**state.flags, "C": C}, name=f"bogoyavlenskij({state.name})",
    )


def mhd_to_cgl(state: EquilibriumState, f, g, C0: float, C1: float, *, box=None) -> EquilibriumState:
    """Map an incompressible MHD equilibrium to a CGL one.

    ``B1 = f B``, ``V1 = g V``, ``rho1 = C0 rho mu / g^2``,
    ``p_perp = C0 mu P + C1 + (C0 - f^2/mu) B^2 / 2``,
    ``p_par = C0 mu P + C1 - (C0 - f^2/mu) B^2 / 2``.
    ``C0 <= 0`` is accepted but flagged as fire-hose unstable; a vanishing
    ``g`` is refused.
    """
    if state.kind == "cgl":
        raise TransformError("mhd_to_cgl acts on MHD states")
    ch = state.chart
    ff, gf = _as_field(f, ch), _as_field(g, ch)
    u, v, w = _samples(ch, box)
    gg = gf(u, v, w)
    if not np.all(np.abs(gg) > 1e-12):
        raise TransformError("g vanishes on the sample set")
    C0, C1 = float(C0), float(C1)
    flags = dict(state.flags)
    flags["firehose_unstable"] = C0 <= 0
    if C0 <= 0:
        warnings.warn(f"C0 = {C0} <= 0: the CGL state is fire-hose unstable", stacklevel=2)
    mu = state.mu
    B0, V0, rho0, P0 = state.B, state.V, state.rho, state.P

    def anis(u, v, w):
        b = B0(u, v, w)
        return (C0 - ff(u, v, w) ** 2 / mu) * np.sum(b * b, axis=0) / 2.0

    def base(u, v, w):
        return C0 * mu * P0(u, v, w) + C1

    depth = max(B0.fd_depth, V0.fd_depth, rho0.fd_depth, ff.fd_depth, gf.fd_depth, P0.fd_depth)
    return EquilibriumState(
        "cgl",
        VectorField(ch, lambda u, v, w: ff(u, v, w) * B0(u, v, w), depth, "B_cgl"),
        ScalarField(ch, lambda u, v, w: C0 * rho0(u, v, w) * mu / gf(u, v, w) ** 2, depth, "rho_cgl"),
        VectorField(ch, lambda u, v, w: gf(u, v, w) * V0(u, v, w), depth, "V_cgl"),
        p_perp=ScalarField(ch, lambda u, v, w: base(u, v, w) + anis(u, v, w), depth, "p_perp"),
        p_par=ScalarField(ch, lambda u, v, w: base(u, v, w) - anis(u, v, w), depth, "p_par"),
        mu=mu, flags={**flags, "C0": C0, "C1": C1}, name=f"cgl({state.name})",
    )


@dataclass(frozen=True)
class AnisotropyResult:
    ratio: float
    coefficient: float
    via_coefficient: float


def anisotropy_ratio(state: EquilibriumState, p: PointUVW) -> AnisotropyResult:
    """``p_perp / p_par`` at ``p`` and the coefficient ``k`` in
    ``p_perp / p_par = 1 + k B^2 / (2 p_par)``.

    ``k = 2 (p_perp - p_par) / B^2``; ``via_coefficient`` rebuilds the ratio
    from ``k`` so the two routes can be compared.
    """
    if state.kind != "cgl":
        raise TransformError("anisotropy_ratio needs a cgl state")
    u, v, w = p.u, p.v, p.w
    pp = float(state.p_perp(u, v, w))
    pl = float(state.p_par(u, v, w))
    if pl == 0.0:
        raise ZeroDivisionError("p_par vanishes at the evaluation point")
    b2 = float(np.sum(state.B(u, v, w) ** 2))
    if b2 == 0.0:
        raise ZeroDivisionError("B vanishes at the evaluation point")
    k = 2.0 * (pp - pl) / b2
    return AnisotropyResult(pp / pl, k, 1.0 + k * b2 / (2.0 * pl))


def composite_coefficient(C0: float, C: float, f, m, n, mu: float = MU0):
    """Anisotropy coefficient of the two-step composite (symmetry, then CGL map)
    for a static seed with zero pressure: ``(2 k + 2 C0 mu n^2) / (mu f^2 m^2)``
    with ``k = C0 C mu - f^2 m^2``."""
    f, m, n = (np.asarray(x, dtype=float) for x in (f, m, n))
    k = C0 * C * mu - f * f * m * m
    return (2.0 * k + 2.0 * C0 * mu * n * n) / (mu * f * f * m * m)


def tune_f_for_coefficient(target: float, C0: float, mu: float = MU0) -> float:
    """Constant ``f`` giving anisotropy coefficient ``target`` (``2 C0 / f^2 - 2 / mu``)."""
    den = target + 2.0 / mu
    if C0 <= 0 or den <= 0:
        raise TransformError(f"no real f gives coefficient {target} with C0={C0}, mu={mu}")
    return math.sqrt(2.0 * C0 / den)


def identity_bogoyavlenskij(state: EquilibriumState, **kw) -> EquilibriumState:
    return bogoyavlenskij(state, 1.0, 0.0, 1.0, 1.0, **kw)


def with_name(state: EquilibriumState, name: str) -> EquilibriumState:
    return replace(state, name=name)
