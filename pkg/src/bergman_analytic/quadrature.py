"""Adaptive Gauss-Legendre quadrature on intervals and polar tensor grids."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import QuadratureNotConverged


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _panel(f, a: float, b: float, n: int, absolute: bool = False):
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    vals = f(mid + half * x)
    if absolute:
        vals = np.abs(vals)
    return half * np.sum(w * vals, axis=-1)


def adaptive_gl(f, a: float, b: float, tol: float = 1e-13, order: int = 20,
                max_depth: int = 40, breakpoints=(), scale: float | None = None):
    """Integrate a vectorized ``f`` over ``[a, b]``.

    Each panel is compared against the same panel at double order; panels
    whose difference exceeds their share of ``tol`` times an estimate of
    ``int |f|`` (or the supplied ``scale``) are bisected. Returns ``(value, error_estimate)``.
    """
    edges = sorted({a, b, *[p for p in breakpoints if a < p < b]})
    work = [(lo, hi, 0) for lo, hi in zip(edges[:-1], edges[1:])]
    total = 0.0
    err = 0.0
    if scale is None:
        scale = sum(_panel(f, lo, hi, 2 * order, absolute=True) for lo, hi, _ in work)
    scale = scale or 1.0
    while work:
        lo, hi, depth = work.pop()
        lo_val = _panel(f, lo, hi, order)
        hi_val = _panel(f, lo, hi, 2 * order)
        diff = abs(hi_val - lo_val)
        share = tol * scale * (hi - lo) / (b - a)
        if diff <= share or depth >= max_depth:
            if depth >= max_depth and diff > share:
                raise QuadratureNotConverged(f"no convergence on [{lo}, {hi}]")
            total += hi_val
            err += diff
        else:
            mid = 0.5 * (lo + hi)
            work.append((lo, mid, depth + 1))
            work.append((mid, hi, depth + 1))
    return total, err


def polar_integral(f, center: complex, radius: float, tol: float = 1e-12,
                   breakpoints=(), n_theta: int = 64, r_order: int = 20):
    """``int_{|y - center| < radius} f(y) dA(y)`` in polar coordinates.

    ``f`` takes a complex ndarray. The angular integral uses Gauss-Legendre
    on ``[0, 2 pi]`` and is checked against twice as many nodes.
    """

    def ring(nt, fn=f):
        t, wt = gauss_legendre(nt)
        theta = np.pi * (t + 1.0)
        wtheta = np.pi * wt
        e = np.exp(1j * theta)

        def g(r):
            r = np.atleast_1d(r)
            y = center + r[:, None] * e[None, :]
            return r * (fn(y) @ wtheta)
        return g

    mag = adaptive_gl(ring(n_theta, lambda y: np.abs(f(y))), 0.0, radius, tol=1e-6,
                      order=r_order, breakpoints=breakpoints)[0]
    val, err = adaptive_gl(ring(n_theta), 0.0, radius, tol=tol, order=r_order,
                           breakpoints=breakpoints, scale=mag)
    val2, err2 = adaptive_gl(ring(2 * n_theta), 0.0, radius, tol=tol, order=r_order,
                             breakpoints=breakpoints, scale=mag)
    ang = abs(val2 - val)
    if ang > max(1e3 * tol * mag, 1e-300):
        raise QuadratureNotConverged(f"angular rule not converged (diff {ang:.3e})")
    return val2, err2 + ang
