"""Special functions used by the closed-form equilibria.

Only what the solution families need: the incomplete elliptic integral of the
first kind (through Carlson's symmetric R_F) and Legendre functions of integer
degree, both vectorised over numpy arrays.
"""
from __future__ import annotations

import numpy as np


class SpecialFunctionError(ValueError):
    """Argument outside the domain where the function is finite and real."""


def carlson_rf(x, y, z, rtol: float = 1e-15):
    """Carlson's symmetric integral R_F(x, y, z) by the duplication theorem.

    At most one of ``x, y, z`` may vanish; all must be non-negative.
    """
    x, y, z = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, z)))
    if np.any((x < 0) | (y < 0) | (z < 0)):
        raise SpecialFunctionError("carlson_rf needs non-negative arguments")
    if np.any(((x == 0) & (y == 0)) | ((y == 0) & (z == 0)) | ((x == 0) & (z == 0))):
        raise SpecialFunctionError("carlson_rf diverges when two arguments vanish")
    x, y, z = x.copy(), y.copy(), z.copy()
    # termination criterion from Carlson (1995): error ~ tol^6 / 4^(6n)
    a0 = (x + y + z) / 3.0
    q = np.maximum.reduce([np.abs(a0 - x), np.abs(a0 - y), np.abs(a0 - z)]) / (3.0 * rtol) ** (1.0 / 6.0)
    a = a0.copy()
    fac = np.ones_like(a)
    for _ in range(60):
        if np.all(q * fac < np.abs(a)):
            break
        sx, sy, sz = np.sqrt(x), np.sqrt(y), np.sqrt(z)
        lam = sx * sy + sy * sz + sz * sx
        x = 0.25 * (x + lam)
        y = 0.25 * (y + lam)
        z = 0.25 * (z + lam)
        a = 0.25 * (a + lam)
        fac *= 0.25
    dx = 1.0 - x / a
    dy = 1.0 - y / a
    dz = -(dx + dy)
    e2 = dx * dy - dz * dz
    e3 = dx * dy * dz
    series = 1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0
    out = series / np.sqrt(a)
    return out[()] if out.ndim == 0 else out


def ellint_F(z, k):
    """Incomplete elliptic integral of the first kind in Jacobi's argument form.

    ``F(z, k) = int_0^z dt / (sqrt(1 - t^2) sqrt(1 - k^2 t^2))``, i.e. the
    inverse of ``sn(., k)``.

    Parameters
    ----------
    z : array_like
        Upper limit, ``|z| <= 1``.
    k : array_like
        Modulus, ``0 <= k <= 1``; ``k == 1`` is only allowed for ``|z| < 1``.

    Returns
    -------
    ndarray or float
        Odd in ``z``.
    """
    z = np.asarray(z, dtype=float)
    k = np.asarray(k, dtype=float)
    if np.any(np.abs(z) > 1.0):
        raise SpecialFunctionError("ellint_F needs |z| <= 1")
    if np.any((k < 0.0) | (k > 1.0)):
        raise SpecialFunctionError("ellint_F needs 0 <= k <= 1")
    z, k = np.broadcast_arrays(z, k)
    if np.any((k == 1.0) & (np.abs(z) == 1.0)):
        raise SpecialFunctionError("ellint_F diverges for k = 1, |z| = 1")
    z2 = z * z
    out = z * carlson_rf(1.0 - z2, 1.0 - k * k * z2, np.ones_like(z))
    out = np.asarray(out)
    return out[()] if out.ndim == 0 else out


def ellint_F_dz(z, k):
    """Derivative of :func:`ellint_F` with respect to ``z``."""
    z = np.asarray(z, dtype=float)
    return 1.0 / (np.sqrt(1.0 - z * z) * np.sqrt(1.0 - (k * z) ** 2))


def _q0(x):
    # real-axis convention on the cut, log((x+1)/(x-1)) off it
    inside = np.abs(x) < 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        cut = 0.5 * np.log((1.0 + x) / (1.0 - x))
        off = 0.5 * np.log((x + 1.0) / (x - 1.0))
    return np.where(inside, cut, off)


def _q_backward(p: int, x: np.ndarray):
    """``(Q_{p-1}, Q_p)`` for ``|x| > 1`` by Miller's backward recurrence,
    normalised with the closed-form ``Q_0``."""
    ax = np.abs(x)
    rate = np.log(ax + np.sqrt(ax * ax - 1.0))        # Q_n ~ rate^-n
    N = int(p + 10 + np.ceil(40.0 / max(float(np.min(rate)), 1e-3)))
    N = min(N, p + 200000)
    hi, cur = np.zeros_like(x), np.full_like(x, 1e-30)
    keep_p = keep_pm = None
    for n in range(N, 0, -1):
        # Q_{n-1} = ((2n+1) x Q_n - (n+1) Q_{n+1}) / n
        lo = ((2 * n + 1) * x * cur - (n + 1) * hi) / n
        hi, cur = cur, lo
        if n == p + 1:
            keep_p = cur.copy()
        if n == p:
            keep_pm = cur.copy()
        big = np.abs(cur) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            hi, cur = hi * scale, cur * scale
            keep_p = None if keep_p is None else keep_p * scale
            keep_pm = None if keep_pm is None else keep_pm * scale
    if keep_p is None:  # p == N cannot happen; guards the invariant
        raise SpecialFunctionError("backward recurrence too short")
    norm = _q0(x) / cur
    return keep_pm * norm, keep_p * norm


def legendre_PQ(p: int, x, derivative: bool = False):
    """Legendre functions ``P_p(x)`` and ``Q_p(x)`` of integer degree ``p >= 0``.

    On ``|x| < 1`` the second kind uses ``Q_0 = 1/2 log((1+x)/(1-x))``, for
    ``|x| > 1`` (``cosh eta`` arguments) ``Q_0 = 1/2 log((x+1)/(x-1))``.
    Higher degrees follow the three-term recurrence.

    With ``derivative=True`` returns ``(P, Q, dP/dx, dQ/dx)``.
    """
    if isinstance(p, bool) or not float(p).is_integer() or p < 0:
        raise SpecialFunctionError(f"only non-negative integer degrees are supported, got {p!r}")
    p = int(p)
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) == 1.0):
        raise SpecialFunctionError("Q_p is singular at x = +-1")

    P_prev, P = np.ones_like(x), x.copy()
    Q_prev = _q0(x)
    Q = x * Q_prev - 1.0
    if p == 0:
        P, Q, P_prev, Q_prev = P_prev, Q_prev, None, None
    else:
        for n in range(1, p):
            P_prev, P = P, ((2 * n + 1) * x * P - n * P_prev) / (n + 1)
            Q_prev, Q = Q, ((2 * n + 1) * x * Q - n * Q_prev) / (n + 1)
    outside = np.abs(x) > 1.0
    if p >= 1 and np.any(outside):
        # off the cut Q_p is the minimal solution, so the forward recurrence
        # loses ~p log10(2x) digits; redo those points backwards
        qm, qp = _q_backward(p, x[outside])
        Q = np.array(Q, copy=True)
        Q_prev = np.array(Q_prev, copy=True)
        Q[outside], Q_prev[outside] = qp, qm

    def _finish(a):
        return a[()] if a.ndim == 0 else a

    if not derivative:
        return _finish(P), _finish(Q)
    if p == 0:
        dP = np.zeros_like(x)
        dQ = 1.0 / (1.0 - x * x)
    else:
        # (x^2 - 1) y_p' = p (x y_p - y_{p-1})
        dP = p * (x * P - P_prev) / (x * x - 1.0)
        dQ = p * (x * Q - Q_prev) / (x * x - 1.0)
    return _finish(P), _finish(Q), _finish(dP), _finish(dQ)
