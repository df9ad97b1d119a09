"""Potential representation of equilibria tangent to the surfaces ``w = const``.

A field tangent to the coordinate surfaces is written through a potential
``Phi(u, v, w)``; the surface pressure ``P(w)`` closes the static system.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from ..calculus import ScalarField, VectorField, partial
from ..coords import Chart, _arr

MU0 = 1.0


class EquilibriumError(ValueError):
    """A constructor's preconditions do not hold."""


class MetricConditionError(EquilibriumError):
    """The chart metric does not have the shape a construction requires."""


class ConstraintError(EquilibriumError):
    """Flux functions violate their compatibility constraint."""


def _fd1(f: Callable, w, h: float = 1e-5):
    w = np.asarray(w, dtype=float)
    hh = h * np.maximum(1.0, np.abs(w))
    wp, wm = w + hh, w - hh
    return (f(wp) - f(wm)) / (wp - wm)


def derivative_of(f: Callable, df: Callable | None = None) -> Callable:
    """``df`` if given, else a complex-step derivative when ``f`` accepts
    complex input, else a central difference."""
    if df is not None:
        return df

    def d(w):
        w = np.asarray(w, dtype=float)
        fd = _fd1(f, w)
        try:
            with np.errstate(all="ignore"):
                val = np.asarray(f(w + 1e-30j))
        except (TypeError, ValueError):
            return fd
        if not np.iscomplexobj(val):
            return fd
        cs = val.imag / 1e-30
        # a callable that silently drops the imaginary part would give zero here
        if np.all(np.isfinite(cs)) and np.all(np.abs(cs - fd) <= 1e-5 * np.maximum(1.0, np.abs(fd))):
            return cs
        return fd

    return d


@dataclass(frozen=True)
class FluxFunctionPair:
    """Surface functions ``C1(w), C2(w)`` with derivatives.

    Missing derivatives are taken by complex step (exact to rounding for
    analytic callables) or, failing that, central differences.
    """

    C1: Callable
    C2: Callable
    dC1: Callable | None = None
    dC2: Callable | None = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "dC1", derivative_of(self.C1, self.dC1))
        object.__setattr__(self, "dC2", derivative_of(self.C2, self.dC2))

    def values(self, w):
        w = np.asarray(w, dtype=float)
        return (np.real(self.C1(w)) + 0.0 * w, np.real(self.C2(w)) + 0.0 * w,
                np.real(self.dC1(w)) + 0.0 * w, np.real(self.dC2(w)) + 0.0 * w)

    def constraint_residual(self, w, c: Callable | None = None) -> float:
        """Max of ``|d(C1^2)/dw + c^2 d(C2^2)/dw|`` over samples ``w`` (``c = 1`` by default)."""
        c1, c2, d1, d2 = self.values(w)
        cc = 1.0 if c is None else np.asarray(c(np.asarray(w, dtype=float)), dtype=float)
        return float(np.max(np.abs(2 * c1 * d1 + cc * cc * 2 * c2 * d2)))

    @classmethod
    def constant(cls, c1: float, c2: float) -> "FluxFunctionPair":
        z = lambda w: 0.0 * np.asarray(w, dtype=float)
        return cls(lambda w: c1 + z(w), lambda w: c2 + z(w), z, z, f"const({c1},{c2})")

    @classmethod
    def rotating(cls, omega: Callable, domega: Callable | None = None, amplitude: float = 1.0) -> "FluxFunctionPair":
        """``C1 = A sin(omega(w)), C2 = A cos(omega(w))``; the sum of squares is constant."""
        dom = derivative_of(omega, domega)
        return cls(
            lambda w: amplitude * np.sin(omega(w)), lambda w: amplitude * np.cos(omega(w)),
            lambda w: amplitude * np.cos(omega(w)) * dom(w), lambda w: -amplitude * np.sin(omega(w)) * dom(w),
            "rotating",
        )


@dataclass(frozen=True)
class PotentialSolution:
    """A potential ``Phi`` on a chart plus the surface pressure ``P(w)``.

    ``mixed`` optionally gives the exact ``(Phi_uw, Phi_vw)`` used by
    :func:`current_from_potential`; ``alpha(u, v, w)`` is the force-free
    coefficient when the family has one.
    """

    chart: Chart
    Phi: ScalarField
    pressure: Callable = field(default=lambda w: 0.0 * np.asarray(w, dtype=float))
    kind: str = "vacuum"
    mu: float = MU0
    mixed: Callable | None = None
    alpha: Callable | None = None
    name: str = ""
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("vacuum", "force_free", "pressure_balanced"):
            raise EquilibriumError(f"unknown solution kind {self.kind!r}")
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise EquilibriumError(f"permeability must be positive, got {self.mu}")

    @property
    def B(self) -> VectorField:
        return field_from_potential(self)

    @property
    def J(self) -> VectorField:
        return current_from_potential(self)

    def P(self) -> ScalarField:
        p = self.pressure
        return ScalarField(self.chart, lambda u, v, w: np.asarray(p(w), dtype=float) + 0.0 * u, 0, "P")

    def alpha_field(self) -> ScalarField | None:
        if self.alpha is None:
            return None
        a = self.alpha
        return ScalarField(self.chart, lambda u, v, w: np.asarray(a(u, v, w), dtype=float) + 0.0 * u, 0, "alpha")


def _phi_uv(sol: PotentialSolution, u, v, w):
    if sol.Phi.partials is not None:
        d = sol.Phi.partials(u, v, w)
        return np.asarray(d[0], dtype=float), np.asarray(d[1], dtype=float)
    ch = sol.chart
    return (partial(sol.Phi, ch, 0, u, v, w, depth=sol.Phi.fd_depth),
            partial(sol.Phi, ch, 1, u, v, w, depth=sol.Phi.fd_depth))


def field_from_potential(sol: PotentialSolution) -> VectorField:
    """``B = (Phi_u / h1, Phi_v / h2, 0)``."""
    ch = sol.chart

    def fn(u, v, w):
        pu, pv = _phi_uv(sol, u, v, w)
        h1, h2, _ = ch.scale_factors(u, v, w)
        return np.stack([pu / h1, pv / h2, np.zeros_like(h1)])

    depth = sol.Phi.fd_depth + (0 if sol.Phi.partials is not None else 1)
    return VectorField(ch, fn, depth, f"B[{sol.name}]")


def current_from_potential(sol: PotentialSolution) -> VectorField:
    """``J = (1/mu) (-Phi_vw / (h2 h3), Phi_uw / (h1 h3), 0)`` (sign follows the chart orientation)."""
    ch = sol.chart
    depth = sol.Phi.fd_depth + (0 if sol.Phi.partials is not None else 1)

    def mixed(u, v, w):
        if sol.mixed is not None:
            a, b = sol.mixed(u, v, w)
            return np.asarray(a, dtype=float) + 0.0 * u, np.asarray(b, dtype=float) + 0.0 * u
        duv = lambda *p: np.stack(_phi_uv(sol, *p))
        d = partial(duv, ch, 2, u, v, w, depth=depth)
        return d[0], d[1]

    def fn(u, v, w):
        puw, pvw = mixed(u, v, w)
        h1, h2, h3 = ch.scale_factors(u, v, w)
        return ch.orientation / sol.mu * np.stack([-pvw / (h2 * h3), puw / (h1 * h3), np.zeros_like(h1)])

    return VectorField(ch, fn, depth + (0 if sol.mixed is not None else 1), f"J[{sol.name}]")


def sample_metric_box(chart: Chart, box, n: int = 9, eps: float | None = None):
    """Points of an ``n^3`` grid in ``box`` outside the chart's singular set."""
    from ..report import GridSpec

    s = GridSpec(box, n, eps).sample(chart)
    if s.n_samples == 0:
        raise MetricConditionError(f"no admissible points in {box!r} for chart {chart.name!r}")
    return s.points


def check_w_independent(chart: Chart, fn: Callable, box, tol: float = 1e-6, what: str = "quantity") -> float:
    """Relative ``w``-variation of ``fn(u, v, w)`` over a sample box; raise above ``tol``."""
    u, v, w = sample_metric_box(chart, box)
    f = lambda *p: np.asarray(fn(*p), dtype=float)
    d = partial(f, chart, 2, u, v, w)
    ref = np.maximum(np.abs(f(u, v, w)), 1e-300)
    scale = np.maximum(1.0, np.abs(w))
    err = float(np.max(np.abs(d) * scale / ref))
    if not err <= tol:
        raise MetricConditionError(f"{what} depends on w on chart {chart.name!r} (relative variation {err:.2e})")
    return err


def const_fn(c: float) -> Callable:
    c = float(c)
    return lambda w: c + 0.0 * np.asarray(w, dtype=float)


def _as_arrays(*xs):
    return _arr(*xs)
