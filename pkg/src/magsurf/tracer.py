"""Field-line tracing in chart coordinates.

Lines are integrated as ``du_i/ds = B_i / (h_i |B|)`` with an adaptive
Runge-Kutta pair, which keeps surface labels such as ``w`` fixed to the
integrator tolerance instead of accumulating Cartesian round-off.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .calculus import ScalarField, VectorField
from .coords import Chart, PointUVW, SingularPointError, StepUnderflowError
from .equilibria.labels import LineLabels

B_FLOOR = 1e-12


class TracingError(RuntimeError):
    """The integrator failed (repeated step rejection)."""


@dataclass(frozen=True)
class Polyline:
    """Samples of a traced line; ``status`` says why integration ended."""

    s: np.ndarray
    uvw: np.ndarray      # (3, n), periodic axes wrapped into the domain
    xyz: np.ndarray      # (3, n)
    Bmag: np.ndarray
    chart: Chart
    status: str
    raw_uvw: np.ndarray  # unwrapped coordinates

    @property
    def length(self) -> float:
        return float(self.s[-1] - self.s[0])

    @property
    def end(self) -> tuple[float, float, float]:
        return tuple(float(x) for x in self.raw_uvw[:, -1])

    def rows(self):
        for i in range(self.s.size):
            yield (self.s[i], *self.uvw[:, i], *self.xyz[:, i], self.Bmag[i])

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["s", "u", "v", "w", "x", "y", "z", "absB"])
        for r in self.rows():
            wr.writerow([repr(float(x)) for x in r])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "chart": self.chart.name, "status": self.status, "length": self.length,
            "columns": ["s", "u", "v", "w", "x", "y", "z", "absB"],
            "data": [[float(x) for x in r] for r in self.rows()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def _wrap(chart: Chart, y: np.ndarray) -> np.ndarray:
    out = np.array(y, dtype=float, copy=True)
    for j, ((lo, hi), per) in enumerate(zip(chart.domain, chart.periodic)):
        if per:
            out[j] = lo + np.mod(out[j] - lo, hi - lo)
    return out


def _admissible(chart: Chart, y, margin: float | None) -> bool:
    u, v, w = _wrap(chart, np.asarray(y, dtype=float))
    if not bool(chart.inside(u, v, w)) or bool(chart.singular(u, v, w, margin)):
        return False
    try:
        chart.scale_factors(u, v, w)
    except StepUnderflowError:
        # a differenced metric has no room for its stencil this close to the edge
        return False
    return True


def trace_line(B: VectorField, start, length: float, *, rtol: float = 1e-9, atol: float = 1e-11,
               max_step: float | None = None, direction: int = 1, n_out: int = 201, margin: float | None = None,
               method: str = "DOP853", floor: float = B_FLOOR) -> Polyline:
    """Integrate ``dr/ds = direction * B/|B|`` from ``start`` for arclength ``length``.

    Stops early at the domain edge, inside the singular margin, or where
    ``|B|`` falls below ``floor``; the reason is stored in ``status``.
    ``max_step`` defaults to ``length / 100`` so that the stop events are
    bracketed by short steps.
    """
    if max_step is None:
        max_step = abs(float(length)) / 100.0
    chart = B.chart
    if isinstance(start, PointUVW):
        y0 = np.array([start.u, start.v, start.w], dtype=float)
    else:
        y0 = np.asarray(start, dtype=float)
    if not _admissible(chart, y0, margin):
        raise SingularPointError(f"start point {tuple(y0)} is excluded on chart {chart.name!r}")
    b0 = B(*_wrap(chart, y0))
    if not float(np.linalg.norm(b0)) > floor:
        raise ValueError(f"|B| vanishes at the start point {tuple(y0)}")
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")

    def rhs(s, y):
        yy = _wrap(chart, y)
        if not _admissible(chart, yy, margin):
            return np.zeros(3)
        b = B(*yy)
        nb = float(np.linalg.norm(b))
        if not nb > floor:
            return np.zeros(3)
        h = np.asarray(chart.scale_factors(*yy), dtype=float)
        return direction * b / (h * nb)

    def ev_domain(s, y):
        return 1.0 if _admissible(chart, y, margin) else -1.0

    def ev_floor(s, y):
        yy = _wrap(chart, y)
        if not _admissible(chart, yy, margin):
            return 1.0
        return float(np.linalg.norm(B(*yy))) - floor

    ev_domain.terminal = True
    ev_floor.terminal = True
    sol = solve_ivp(rhs, (0.0, float(length)), y0, method=method, rtol=rtol, atol=atol, max_step=max_step,
                    events=(ev_domain, ev_floor), dense_output=True)
    if sol.status == -1:
        raise TracingError(f"integration failed: {sol.message}")
    status = "complete"
    s_end = float(length)
    if sol.status == 1:
        if sol.t_events[0].size:
            status, s_end = "boundary", float(sol.t_events[0][0])
        else:
            status, s_end = "stagnation", float(sol.t_events[1][0])
        # back off so the last sample is still admissible
        s_end = max(0.0, s_end * (1 - 1e-9))
    s = np.linspace(0.0, s_end, n_out)
    raw = sol.sol(s)
    raw[:, 0] = y0
    uvw = _wrap(chart, raw)
    xyz = np.stack(chart.to_cartesian(*uvw))
    Bm = np.linalg.norm(B(*uvw), axis=0)
    return Polyline(s, uvw, xyz, Bm, chart, status, raw)


def _label_values(poly: Polyline, label) -> np.ndarray:
    u, v, w = poly.uvw
    if label is None or label == "w":
        return w
    if label in ("u", "v"):
        return {"u": u, "v": v}[label]
    if isinstance(label, ScalarField):
        return label(u, v, w)
    if isinstance(label, LineLabels):
        return label(u, v, w)[label.surface]
    if callable(label):
        return np.asarray(label(u, v, w), dtype=float)
    raise TypeError(f"cannot use {label!r} as a surface label")


def surface_drift(poly: Polyline, w_label=None) -> float:
    """``max |label - label(start)|`` along the line divided by its arclength.

    ``w_label`` is ``None``/``'w'`` (the chart coordinate), ``'u'``, ``'v'``, a
    :class:`ScalarField`, a :class:`LineLabels` (its surface label) or a
    callable of ``(u, v, w)``.
    """
    vals = _label_values(poly, w_label)
    L = poly.length
    if L <= 0:
        return 0.0
    return float(np.max(np.abs(vals - vals[0]))) / L


def label_variation(poly: Polyline, fn: Callable) -> float:
    """Peak-to-peak of ``fn(u, v, w)`` along a traced line (smoothness and
    line-constancy check for label functions)."""
    u, v, w = poly.uvw
    return float(np.ptp(np.asarray(fn(u, v, w), dtype=float)))


def retrace_error(B: VectorField, start, length: float, **kw) -> float:
    """Trace forward, then backward from the end point; distance (in chart
    coordinates, unwrapped) between the return point and ``start``."""
    fwd = trace_line(B, start, length, **kw)
    kw = dict(kw)
    kw["direction"] = -kw.get("direction", 1)
    back = trace_line(B, fwd.end, fwd.length, **kw)
    y0 = np.array(start if not isinstance(start, PointUVW) else (start.u, start.v, start.w), dtype=float)
    d = np.asarray(back.end) - y0
    for j, ((lo, hi), per) in enumerate(zip(B.chart.domain, B.chart.periodic)):
        if per:
            P = hi - lo
            d[j] = (d[j] + 0.5 * P) % P - 0.5 * P
    return float(np.linalg.norm(d))
