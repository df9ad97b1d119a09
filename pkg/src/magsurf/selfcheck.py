"""Quick self-test run by ``magsurf --seed-check``.

Each check compares a library result with an independent route (scipy,
a closed form or an exact identity) and returns ``(name, ok, detail)``.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.special import ellipkinc

from .calculus import ScalarField, curl, grad
from .coords import BUILTIN_CHARTS, make_builtin_chart
from .equilibria import ellipsoid_vacuum, prolate_vacuum
from .report import GridSpec
from .special import ellint_F
from .verify import residual_vacuum

_PARAMS = {"ellipsoidal": {"b": 7.0, "c": 10.0}, "prolate_spheroidal": {"a": 2.0}}


def check_ellint():
    rng = np.random.default_rng(0)
    z, k = rng.uniform(0, 0.99, 20), rng.uniform(0, 0.95, 20)
    ref = ellipkinc(np.arcsin(z), k * k)
    err = float(np.max(np.abs(ellint_F(z, k) - ref)))
    return "ellint_F vs scipy", err < 1e-12, f"max err {err:.2e}"


def check_quad():
    k = 0.7
    ref = quad(lambda t: 1 / math.sqrt((1 - t * t) * (1 - k * k * t * t)), 0, 0.5)[0]
    err = abs(float(ellint_F(0.5, k)) - ref)
    return "ellint_F vs quadrature", err < 1e-12, f"err {err:.2e}"


def check_identities():
    worst = 0.0
    rng = np.random.default_rng(1)
    for name in BUILTIN_CHARTS:
        ch = make_builtin_chart(name, _PARAMS.get(name))
        box = ch.default_box(margin=0.15)
        pts = [rng.uniform(lo, hi, 50) for lo, hi in box]
        f = ScalarField(ch, lambda u, v, w: np.sin(u + 0.3 * v) * np.cos(0.5 * w) + u * v, 0, "f")
        worst = max(worst, float(np.max(np.abs(curl(grad(f))(*pts)))))
    return "curl grad = 0 on builtin charts", worst < 1e-6, f"max {worst:.2e}"


def check_vacuum():
    e = ellipsoid_vacuum(7, 10, 0, 0.01, 0, 1 / 30)
    r1 = residual_vacuum(e.B, GridSpec(((7.1, 9.9), (-6.9, 6.9), (10.5, 14.0)), 8), tolerance=1e-5)
    p = prolate_vacuum(2.0, 1.0, 0.3)
    r2 = residual_vacuum(p.B, GridSpec(((0.35, 2.3), (0.1, math.pi - 0.1), (0.0, 2 * math.pi)), 8), tolerance=1e-5)
    worst = max(r1.max_abs, r2.max_abs)
    return "vacuum residuals", r1.passed and r2.passed, f"max {worst:.2e}"


CHECKS = (check_ellint, check_quad, check_identities, check_vacuum)


def run() -> list[tuple[str, bool, str]]:
    return [c() for c in CHECKS]
