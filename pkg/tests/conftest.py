import functools
import math

import numpy as np
import pytest

from magsurf.coords import make_builtin_chart
from magsurf.equilibria import (FluxFunctionPair, add_polar_component, ellipsoid_labels, ellipsoid_vacuum,
                                prolate_labels, prolate_vacuum, spherical_force_free)

CHART_PARAMS = {"ellipsoidal": {"b": 7.0, "c": 10.0}, "prolate_spheroidal": {"a": 2.0}}

# boxes that stay clear of singular margins
ELLIPSOID_BOX = ((7.06, 9.94), (-6.94, 6.94), (10.5, 14.0))
PROLATE_BOX = ((0.35, 2.3), (0.1, math.pi - 0.1), (0.0, 2 * math.pi))
SPHERE_BOX = ((0.3, math.pi - 0.3), (0.0, 2 * math.pi), (0.5, 3.0))
ELLIPTIC_BOX = ((0.2, 1.5), (-3.0, 3.0), (0.0, 1.0))

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def chart(name):
    return make_builtin_chart(name, CHART_PARAMS.get(name))


def random_points(ch, n=128, seed=0, box=None, margin=0.1):
    """``n`` admissible random points of ``ch`` as three arrays."""
    rng = np.random.default_rng(seed)
    box = ch.default_box(margin=margin) if box is None else box
    got = []
    while sum(g.shape[1] for g in got) < n:
        P = np.array([rng.uniform(lo, hi, 4 * n) for lo, hi in box])
        ok = ch.inside(*P) & ~ch.singular(*P)
        got.append(P[:, ok])
    P = np.concatenate(got, axis=1)[:, :n]
    return P[0], P[1], P[2]


@functools.lru_cache(maxsize=None)
def ellipsoid():
    return ellipsoid_vacuum(7.0, 10.0, 0.0, 1 / 100, 0.0, 1 / 30)


@functools.lru_cache(maxsize=None)
def prolate():
    return prolate_vacuum(2.0, 1.0, 0.3)


@functools.lru_cache(maxsize=None)
def prolate_wound(D=2.13):
    return add_polar_component(prolate(), D, box=PROLATE_BOX)


@functools.lru_cache(maxsize=None)
def sphere():
    return spherical_force_free(FluxFunctionPair(lambda w: np.sin(w ** 2), lambda w: np.cos(w ** 2)))


@pytest.fixture
def ellipsoid_sol():
    return ellipsoid()


@pytest.fixture
def ellipsoid_lbl():
    return ellipsoid_labels(ellipsoid())


@pytest.fixture
def prolate_sol():
    return prolate()


@pytest.fixture
def prolate_lbl():
    return prolate_labels(prolate(), 0.0)


@pytest.fixture
def sphere_sol():
    return sphere()
