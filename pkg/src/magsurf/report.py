"""Sample grids and residual reports shared by the verification routines."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

Box = tuple[tuple[float, float], tuple[float, float], tuple[float, float]]


class EmptyGridError(ValueError):
    """Every grid point fell inside the excluded (singular) set."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor grid in chart coordinates.

    ``n`` points per axis, endpoints included.  Points within ``eps`` of the
    chart's singular set are dropped at sampling time (``eps=None`` uses the
    chart default).
    """

    box: Box
    n: int | tuple[int, int, int] = 32
    eps: float | None = None

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        if len(box) != 3 or any(not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi) for lo, hi in box):
            raise ValueError(f"grid box must be three finite (lo, hi) pairs, got {self.box!r}")
        object.__setattr__(self, "box", box)
        n = (self.n,) * 3 if np.isscalar(self.n) else tuple(self.n)
        if len(n) != 3 or any(int(k) < 1 for k in n):
            raise ValueError(f"grid resolution must be positive, got {self.n!r}")
        object.__setattr__(self, "n", tuple(int(k) for k in n))

    def axes(self) -> list[np.ndarray]:
        out = []
        for (lo, hi), k in zip(self.box, self.n):
            out.append(np.array([0.5 * (lo + hi)]) if k == 1 else np.linspace(lo, hi, k))
        return out

    def with_resolution(self, n) -> "GridSpec":
        return GridSpec(self.box, n, self.eps)

    def sample(self, chart) -> "GridSample":
        axes = self.axes()
        U, V, W = np.meshgrid(*axes, indexing="ij")
        eps = chart.eps if self.eps is None else self.eps
        bad = chart.singular(U, V, W, eps=eps) | ~chart.inside(U, V, W)
        keep = ~bad
        idx = np.argwhere(keep)
        return GridSample(
            u=U[keep], v=V[keep], w=W[keep], index=idx, shape=U.shape,
            n_excluded=int(bad.sum()), spec=self,
        )

    def to_dict(self) -> dict[str, Any]:
        return {"box": [list(b) for b in self.box], "n": list(self.n), "eps": self.eps}


@dataclass(frozen=True)
class GridSample:
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    index: np.ndarray
    shape: tuple[int, ...]
    n_excluded: int
    spec: GridSpec

    @property
    def n_samples(self) -> int:
        return int(self.u.size)

    @property
    def points(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.u, self.v, self.w

    def require_nonempty(self) -> "GridSample":
        if self.n_samples == 0:
            raise EmptyGridError("no grid points left after singular-set exclusion")
        return self


@dataclass
class EquationResidual:
    """Residual norms of one equation over a sample set.

    ``scale`` is the largest magnitude among the terms entering the equation,
    so ``max_rel = max_abs / scale`` is a dimensionless companion to the
    absolute verdict.
    """

    equation: str
    max_abs: float
    rms: float
    n_samples: int
    n_excluded: int
    tolerance: float
    scale: float = float("nan")

    @property
    def max_rel(self) -> float:
        if not self.scale or not math.isfinite(self.scale):
            return float("nan") if self.max_abs else 0.0
        return self.max_abs / self.scale

    @property
    def verdict(self) -> str:
        return "pass" if self.max_abs <= self.tolerance else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict[str, Any]:
        return {
            "equation": self.equation,
            "max_abs": self.max_abs,
            "rms": self.rms,
            "n_samples": self.n_samples,
            "n_excluded": self.n_excluded,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "scale": self.scale,
            "max_rel": self.max_rel,
        }


def residual_norms(name: str, values, n_excluded: int, tolerance: float, scale=None) -> EquationResidual:
    """Reduce pointwise residual magnitudes to max and RMS.

    The RMS uses ``math.fsum`` so the result does not depend on how the
    samples were partitioned among workers.
    """
    vals = np.abs(np.asarray(values, dtype=float)).ravel()
    if vals.size == 0:
        raise EmptyGridError(f"{name}: no samples to reduce")
    if not np.all(np.isfinite(vals)):
        max_abs = float("inf")
        rms = float("inf")
    else:
        max_abs = float(vals.max())
        rms = math.sqrt(math.fsum((vals * vals).tolist()) / vals.size)
    if scale is None:
        sc = float("nan")
    else:
        s = np.abs(np.asarray(scale, dtype=float)).ravel()
        sc = float(s[np.isfinite(s)].max()) if np.any(np.isfinite(s)) else float("nan")
    return EquationResidual(name, max_abs, rms, int(vals.size), int(n_excluded), float(tolerance), sc)


@dataclass
class ResidualReport:
    """Per-equation residuals plus the grid they were taken on."""

    equations: list[EquationResidual] = field(default_factory=list)
    grid: dict[str, Any] = field(default_factory=dict)
    title: str = ""
    extras: dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, name: str) -> EquationResidual:
        for eq in self.equations:
            if eq.equation == name:
                return eq
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(eq.equation == name for eq in self.equations)

    @property
    def passed(self) -> bool:
        return all(eq.passed for eq in self.equations)

    @property
    def excluded_fraction(self) -> float:
        if not self.equations:
            return 0.0
        eq = self.equations[0]
        total = eq.n_samples + eq.n_excluded
        return eq.n_excluded / total if total else 0.0

    @property
    def max_abs(self) -> float:
        return max((eq.max_abs for eq in self.equations), default=0.0)

    def merge(self, other: "ResidualReport") -> "ResidualReport":
        return ResidualReport(self.equations + other.equations, self.grid or other.grid,
                              self.title or other.title, {**other.extras, **self.extras})

    def to_dict(self) -> dict[str, Any]:
        return {
            "title": self.title,
            "verdict": "pass" if self.passed else "fail",
            "excluded_fraction": self.excluded_fraction,
            "grid": self.grid,
            "equations": [eq.to_dict() for eq in self.equations],
            "extras": _jsonable(self.extras),
        }

    def to_json(self, **kw) -> str:
        kw.setdefault("indent", 2)
        kw.setdefault("sort_keys", True)
        return json.dumps(self.to_dict(), **kw)

    def summary_lines(self) -> list[str]:
        return [
            f"{eq.equation:<28s} max={eq.max_abs:.3e} rms={eq.rms:.3e} "
            f"rel={eq.max_rel:.2e} n={eq.n_samples} excl={eq.n_excluded} [{eq.verdict}]"
            for eq in self.equations
        ]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def reports_to_json(reports: Iterable[ResidualReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True)


def as_box(box: Sequence[Sequence[float]]) -> Box:
    return tuple((float(lo), float(hi)) for lo, hi in box)  # type: ignore[return-value]
