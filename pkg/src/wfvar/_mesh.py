"""Internal helpers: cubic Hermite shapes, composite Gauss cells, FD weights."""

from __future__ import annotations

import numpy as np

_GAUSS_CACHE = {}


def gauss_rule(n):
    if n not in _GAUSS_CACHE:
        _GAUSS_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GAUSS_CACHE[n]


def gauss_cells(edges, a, b, n=4):
    """Composite Gauss-Legendre points/weights on [a, b] subdivided at `edges`.

    Cells are the intervals between consecutive values of sorted(edges)
    clipped to [a, b]; a and b become cell boundaries themselves.
    """
    edges = np.asarray(edges, dtype=float)
    if b <= a:
        return np.empty(0), np.empty(0)
    inside = edges[(edges > a) & (edges < b)]
    cuts = np.unique(np.concatenate(([a], inside, [b])))
    xi, wi = gauss_rule(n)
    lo = cuts[:-1][:, None]
    hi = cuts[1:][:, None]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    t = (mid + half * xi[None, :]).ravel()
    w = (half * wi[None, :]).ravel()
    keep = w > 0
    return t[keep], w[keep]


def hermite_shapes(s, h, order=0):
    """Cubic Hermite basis (h00, h10, h01, h11) on a cell of width h at local s.

    order 0..3 selects the value or derivative with respect to the global
    parameter; velocity shapes carry their h scaling already.
    """
    s = np.asarray(s, dtype=float)
    if order == 0:
        return (
            1 - 3 * s**2 + 2 * s**3,
            h * (s - 2 * s**2 + s**3),
            3 * s**2 - 2 * s**3,
            h * (-(s**2) + s**3),
        )
    if order == 1:
        return (
            (-6 * s + 6 * s**2) / h,
            1 - 4 * s + 3 * s**2,
            (6 * s - 6 * s**2) / h,
            -2 * s + 3 * s**2,
        )
    if order == 2:
        return (
            (-6 + 12 * s) / h**2,
            (-4 + 6 * s) / h,
            (6 - 12 * s) / h**2,
            (-2 + 6 * s) / h,
        )
    if order == 3:
        one = np.ones_like(s)
        return 12 * one / h**3, 6 * one / h**2, -12 * one / h**3, 6 * one / h**2
    raise ValueError(f"unsupported derivative order {order}")


def fd_weights(ts, t0, m=1):
    """Fornberg weights for the m-th derivative at t0 from samples at ts."""
    ts = np.asarray(ts, dtype=float)
    n = len(ts)
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = ts[0] - t0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = ts[i] - t0
        for j in range(i):
            c3 = ts[i] - ts[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]
