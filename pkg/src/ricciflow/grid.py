"""Uniform chart grids and tensor fields stored as node arrays.

A :class:`ChartGrid` is a single coordinate chart sampled on a uniform
lattice.  Axes are independently periodic (circle factor) or truncated
(open interval); a grid with every axis periodic models a closed flat-
topology manifold, anything else is a truncated patch of a noncompact
space.  Tensor components live in the chart coordinates as numpy arrays
with one trailing axis per tensor slot.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exceptions import GridError

MIN_NODES_PER_AXIS = 5  # order-4 interior stencils need five points


def _as_tuple(value, dim, cast):
    if np.isscalar(value):
        return (cast(value),) * dim
    out = tuple(cast(v) for v in value)
    if len(out) != dim:
        raise GridError(f"expected {dim} per-axis entries, got {len(out)}")
    return out


class ChartGrid:
    """Uniform lattice on a product of circles and intervals.

    Parameters
    ----------
    shape : sequence of int
        Nodes per axis; every entry must be >= 5.
    spacing : float or sequence of float
        Node spacing per axis, > 0.
    periodic : bool or sequence of bool
        Axis topology.  A periodic axis of N nodes and spacing h covers a
        circle of circumference N*h (no duplicated seam node); a truncated
        axis covers the closed interval [origin, origin + (N-1)*h].
    origin : float or sequence of float, optional
        Coordinate of node 0 per axis (default 0).
    """

    def __init__(self, shape, spacing, periodic=True, origin=0.0):
        self.shape = tuple(int(n) for n in shape)
        self.dim = len(self.shape)
        if self.dim == 0:
            raise GridError("grid needs at least one axis")
        for n in self.shape:
            if n < MIN_NODES_PER_AXIS:
                raise GridError(
                    f"axis with {n} nodes; at least {MIN_NODES_PER_AXIS} required"
                )
        self.spacing = _as_tuple(spacing, self.dim, float)
        if any(h <= 0 for h in self.spacing):
            raise GridError(f"spacing must be positive, got {self.spacing}")
        self.periodic = _as_tuple(periodic, self.dim, bool)
        self.origin = _as_tuple(origin, self.dim, float)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def closed(self) -> bool:
        """True when every axis is periodic (closed manifold)."""
        return all(self.periodic)

    @property
    def max_spacing(self) -> float:
        return max(self.spacing)

    def extent(self, axis: int) -> float:
        """Coordinate length covered by an axis (circumference if periodic)."""
        n, h = self.shape[axis], self.spacing[axis]
        return n * h if self.periodic[axis] else (n - 1) * h

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.spacing[axis] * np.arange(self.shape[axis])

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Broadcast coordinate arrays, one per axis, each of shape `shape`."""
        axes = [self.axis_coords(a) for a in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij", copy=False))

    @cached_property
    def quad_weights(self) -> np.ndarray:
        """Coordinate-cell quadrature weights of shape `shape`.

        Periodic axes use the node (midpoint) rule with full weight h.
        Truncated axes use composite trapezoid weights (h/2 at the ends) so
        the covered interval is integrated exactly for constants.
        """
        w = np.ones(self.shape)
        for a in range(self.dim):
            wa = np.full(self.shape[a], self.spacing[a])
            if not self.periodic[a]:
                wa[0] *= 0.5
                wa[-1] *= 0.5
            shape = [1] * self.dim
            shape[a] = self.shape[a]
            w = w * wa.reshape(shape)
        return w

    def interior_mask(self, band: int) -> np.ndarray:
        """Boolean mask excluding `band` nodes next to each truncated edge."""
        mask = np.ones(self.shape, dtype=bool)
        if band <= 0:
            return mask
        for a in range(self.dim):
            if self.periodic[a]:
                continue
            idx = [slice(None)] * self.dim
            idx[a] = slice(0, band)
            mask[tuple(idx)] = False
            idx[a] = slice(self.shape[a] - band, self.shape[a])
            mask[tuple(idx)] = False
        return mask

    def __eq__(self, other):
        return (
            isinstance(other, ChartGrid)
            and self.shape == other.shape
            and self.spacing == other.spacing
            and self.periodic == other.periodic
            and self.origin == other.origin
        )

    def __hash__(self):
        return hash((self.shape, self.spacing, self.periodic, self.origin))

    def __repr__(self):
        return (
            f"ChartGrid(shape={self.shape}, spacing={self.spacing}, "
            f"periodic={self.periodic}, origin={self.origin})"
        )


@dataclass
class TensorField:
    """Tensor components on a grid.

    `slots` encodes the index character, one letter per slot: 'u' for a
    contravariant (upper) slot, 'd' for a covariant (lower) slot.  A scalar
    has `slots == ""`.  `values` has shape `grid.shape + (dim,) * rank`.
    """

    grid: ChartGrid
    slots: str
    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        if any(c not in "ud" for c in self.slots):
            raise GridError(f"slots must be 'u'/'d' letters, got {self.slots!r}")
        self.values = np.asarray(self.values, dtype=float)
        expected = self.grid.shape + (self.grid.dim,) * len(self.slots)
        if self.values.shape != expected:
            raise GridError(
                f"component array has shape {self.values.shape}, "
                f"expected {expected} for slots {self.slots!r}"
            )

    @property
    def rank(self) -> int:
        return len(self.slots)

    def check_finite(self):
        if not np.all(np.isfinite(self.values)):
            bad = np.argwhere(~np.isfinite(self.values))[0]
            raise GridError(f"non-finite component at index {tuple(bad)}")
        return self

    def component_max(self) -> float:
        """Max absolute component over all nodes (coordinate norm)."""
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def symmetrized(self) -> "TensorField":
        """Exactly symmetric storage for a rank-2 field."""
        if self.rank != 2:
            raise GridError("symmetrized() expects a rank-2 field")
        sym = 0.5 * (self.values + np.swapaxes(self.values, -1, -2))
        return TensorField(self.grid, self.slots, sym, name=self.name)

    def symmetry_defect(self) -> float:
        if self.rank != 2:
            raise GridError("symmetry_defect() expects a rank-2 field")
        return float(
            np.max(np.abs(self.values - np.swapaxes(self.values, -1, -2)))
        )

    @classmethod
    def scalar(cls, grid, values, name=""):
        return cls(grid, "", np.asarray(values, dtype=float), name=name)

    @classmethod
    def vector(cls, grid, values, name=""):
        return cls(grid, "u", values, name=name)

    @classmethod
    def one_form(cls, grid, values, name=""):
        return cls(grid, "d", values, name=name)

    @classmethod
    def sym2(cls, grid, values, name=""):
        field = cls(grid, "dd", values, name=name)
        return field.symmetrized()

    @classmethod
    def zero(cls, grid, slots, name=""):
        shape = grid.shape + (grid.dim,) * len(slots)
        return cls(grid, slots, np.zeros(shape), name=name)
