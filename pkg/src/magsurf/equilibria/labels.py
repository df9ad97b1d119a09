"""Field-line labels: functions constant along the lines of a given field.

Arbitrary functions in the transformations must be constant on field lines;
composing them with a label map makes that constructive.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..calculus import ScalarField
from ..coords import Chart, _arr


@dataclass(frozen=True)
class LineLabels:
    """Named label functions on a chart.

    ``fn(u, v, w)`` returns one array per name.  ``surface`` names the label
    whose level sets are the magnetic surfaces (for most families that is
    ``w`` itself).
    """

    chart: Chart
    names: tuple[str, ...]
    fn: Callable[..., Sequence[np.ndarray]]
    surface: str

    def __post_init__(self):
        if self.surface not in self.names:
            raise ValueError(f"surface label {self.surface!r} is not among {self.names}")

    def __call__(self, u, v, w) -> dict[str, np.ndarray]:
        u, v, w = _arr(u, v, w)
        vals = self.fn(u, v, w)
        return {n: np.broadcast_to(np.asarray(x, dtype=float), u.shape) for n, x in zip(self.names, vals)}

    def field(self, name: str) -> ScalarField:
        if name not in self.names:
            raise KeyError(f"unknown label {name!r}; available: {self.names}")
        return ScalarField(self.chart, lambda u, v, w: self(u, v, w)[name], 0, name)

    def surface_field(self) -> ScalarField:
        return self.field(self.surface)

    def compose(self, g: Callable[..., np.ndarray], name: str = "") -> ScalarField:
        """Scalar field ``g(**labels)``, constant on every field line."""

        def fn(u, v, w):
            vals = self(u, v, w)
            return np.asarray(g(**vals), dtype=float) + 0.0 * u

        return ScalarField(self.chart, fn, 0, name)


def coordinate_labels(chart: Chart, names: Sequence[str] = ("w",), surface: str = "w") -> LineLabels:
    """Labels that are chart coordinates (``'u'``, ``'v'`` or ``'w'``)."""
    idx = {"u": 0, "v": 1, "w": 2}
    sel = [idx[n] for n in names]
    return LineLabels(chart, tuple(names), lambda u, v, w: tuple((u, v, w)[i] for i in sel), surface)


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre_integral(f: Callable, x0, x1, n: int = 64) -> np.ndarray:
    """``int_{x0}^{x1} f`` with an ``n``-point Gauss-Legendre rule, vectorised over limits."""
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    t, wt = _GL_CACHE[n]
    x0 = np.asarray(x0, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    half = 0.5 * (x1 - x0)
    mid = 0.5 * (x1 + x0)
    nodes = mid[..., None] + half[..., None] * t
    return half * np.sum(wt * f(nodes), axis=-1)
