"""Central finite-difference stencils on uniform axes.

Only first-derivative stencils exist here; second derivatives are taken
by composing first derivatives, which keeps every differential operator
in the package consistent with a single discrete derivative and gives the
periodic operators an exact summation-by-parts property (the transpose of
a central stencil is its negative), on which the discrete Stokes checks
rely.

Interior stencils are central, order 2 or 4.  Truncated axes switch to
one-sided stencils of the same order inside a boundary band of width
order/2; weights come from Fornberg's recursion.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .exceptions import GridError

SUPPORTED_ORDERS = (2, 4)

# offset -> weight at unit spacing, antisymmetric by construction
_CENTRAL_FIRST = {
    2: ((-1, -0.5), (1, 0.5)),
    4: ((-2, 1.0 / 12.0), (-1, -2.0 / 3.0), (1, 2.0 / 3.0), (2, -1.0 / 12.0)),
}


def fornberg_weights(x0: float, xs, m: int) -> np.ndarray:
    """Weights of the m-th derivative at x0 from samples at points xs.

    Standard Fornberg (1988) recursion; exact for polynomials up to
    degree len(xs)-1.
    """
    xs = np.asarray(xs, dtype=float)
    npts = len(xs)
    if m >= npts:
        raise ValueError(f"need more than {m} points for derivative order {m}")
    c = np.zeros((npts, m + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = xs[0] - x0
    for i in range(1, npts):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
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


def effective_order(order: int, n_nodes: int) -> int:
    """Fall back from order 4 to order 2 when the axis is too short."""
    if order not in SUPPORTED_ORDERS:
        raise GridError(f"stencil order must be one of {SUPPORTED_ORDERS}")
    if order == 4 and n_nodes < 6:
        return 2
    return order


@lru_cache(maxsize=None)
def _truncated_matrix(n: int, spacing: float, order: int) -> sp.csr_matrix:
    """Sparse d/dx on a truncated axis: central interior, one-sided band."""
    half = order // 2
    rows, cols, vals = [], [], []
    central = _CENTRAL_FIRST[order]
    npts = order + 1  # one-sided stencil width for an order-`order` derivative
    for i in range(n):
        if half <= i < n - half:
            for off, w in central:
                rows.append(i)
                cols.append(i + off)
                vals.append(w / spacing)
        else:
            start = 0 if i < half else n - npts
            xs = np.arange(start, start + npts) * spacing
            for j, w in zip(range(start, start + npts), fornberg_weights(i * spacing, xs, 1)):
                rows.append(i)
                cols.append(j)
                vals.append(w)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def diff(values: np.ndarray, grid, axis: int, order: int = 4) -> np.ndarray:
    """First partial derivative of a node array along one grid axis.

    Component axes (anything beyond `grid.dim`) ride along untouched.
    """
    n = grid.shape[axis]
    h = grid.spacing[axis]
    order = effective_order(order, n)
    if grid.periodic[axis]:
        out = np.zeros_like(values)
        for off, w in _CENTRAL_FIRST[order]:
            out += w * np.roll(values, -off, axis=axis)
        out /= h
        return out
    mat = _truncated_matrix(n, h, order)
    moved = np.moveaxis(values, axis, 0)
    flat = moved.reshape(n, -1)
    res = mat @ flat
    return np.moveaxis(res.reshape(moved.shape), 0, axis)


def boundary_band(order: int) -> int:
    """Width of the one-sided stencil band on truncated axes."""
    return order // 2


def interior_trim(grid, order: int, fraction: float = 0.1) -> int:
    """Nodes to exclude next to each truncated edge for interior norms.

    At least the reach of a composed second-derivative stencil, but no
    less than a fixed fraction of the axis: a node-count fraction keeps
    the compared region geometrically stable under refinement, so
    interior residual norms follow the stencil order instead of being
    dominated by whatever the error does ever closer to the edge.
    """
    counts = [grid.shape[a] for a in range(grid.dim) if not grid.periodic[a]]
    if not counts:
        return 0
    return max(2 * boundary_band(order), math.ceil(fraction * min(counts)))
