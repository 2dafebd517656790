"""Metric state and curvature tensors on a chart grid.

Index conventions (fixed package-wide, enforced by the unit tests):

    Gamma^k_ij = (1/2) g^kl (d_i g_jl + d_j g_il - d_l g_ij)
    R^l_ijk    = d_i Gamma^l_jk - d_j Gamma^l_ik
                 + Gamma^p_jk Gamma^l_ip - Gamma^p_ik Gamma^l_jp
    R_ijkl     = g_lm R^m_ijk          (antisymmetric pairs (i,j) and (k,l))
    Ric_ik     = g^jl R_ijkl           (= R^j_ijk)
    s          = g^ik Ric_ik

With these choices constant sectional curvature K has
R_ijkl = K (g_ik g_jl - g_il g_jk), so the round sphere carries
Ric = (n-1)/r^2 g and s = n(n-1)/r^2 > 0.

A MetricState is immutable: derived caches (inverse, Christoffel symbols,
curvature) are computed lazily and never invalidated because the stored
metric array is frozen.  Flows produce a new state per step.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from . import stencils
from .exceptions import DegenerateMetricError, GridError
from .grid import ChartGrid, TensorField

# stored symmetric tensors are exactly symmetric; inputs may deviate by
# roundoff only
_SYMMETRY_INPUT_TOL = 1e-8


class MetricState:
    """Riemannian metric sampled on a ChartGrid with cached curvature.

    Parameters
    ----------
    grid : ChartGrid
    values : ndarray, shape grid.shape + (dim, dim)
        Symmetric positive-definite metric components.
    order : int
        Finite-difference stencil order (4 default, 2 fallback).
    """

    def __init__(self, grid: ChartGrid, values: np.ndarray, order: int = 4):
        if not isinstance(grid, ChartGrid):
            raise GridError("grid must be a ChartGrid")
        self.grid = grid
        g = np.asarray(values, dtype=float)
        expected = grid.shape + (grid.dim, grid.dim)
        if g.shape != expected:
            raise GridError(f"metric shape {g.shape}, expected {expected}")
        asym = np.max(np.abs(g - np.swapaxes(g, -1, -2)))
        scale = max(np.max(np.abs(g)), 1.0)
        if asym > _SYMMETRY_INPUT_TOL * scale:
            raise GridError(f"metric input asymmetric by {asym:.3e}")
        g = 0.5 * (g + np.swapaxes(g, -1, -2))
        if not np.all(np.isfinite(g)):
            bad = np.argwhere(~np.isfinite(g))[0][: grid.dim]
            raise DegenerateMetricError(bad, "non-finite components")
        self._assert_positive_definite(g)
        g.setflags(write=False)
        self.g = g
        self.order = stencils.effective_order(order, min(grid.shape))

    def _assert_positive_definite(self, g):
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            flat = g.reshape(-1, self.grid.dim, self.grid.dim)
            eigmin = np.linalg.eigvalsh(flat)[:, 0]
            worst = int(np.argmin(eigmin))
            node = np.unravel_index(worst, self.grid.shape)
            raise DegenerateMetricError(
                node, f"min eigenvalue {eigmin[worst]:.3e}"
            ) from None

    # -- derivatives ----------------------------------------------------

    def pdiff(self, values: np.ndarray, axis: int) -> np.ndarray:
        """Partial derivative along a grid axis at this state's order."""
        return stencils.diff(values, self.grid, axis, self.order)

    def pgrad(self, values: np.ndarray) -> np.ndarray:
        """All partials, stacked on a new axis placed after the grid axes."""
        parts = [self.pdiff(values, a) for a in range(self.grid.dim)]
        return np.stack(parts, axis=self.grid.dim)

    # -- lazy caches ----------------------------------------------------

    @cached_property
    def g_inv(self) -> np.ndarray:
        inv = np.linalg.inv(self.g)
        ident = np.einsum("...ij,...jk->...ik", self.g, inv)
        eye = np.eye(self.grid.dim)
        resid = np.max(np.abs(ident - eye))
        # relative to the local conditioning; a clean SPD inverse sits at eps
        scale = max(1.0, float(np.max(np.abs(self.g)) * np.max(np.abs(inv))))
        if resid > 1e-12 * scale:
            raise DegenerateMetricError(
                np.unravel_index(0, self.grid.shape),
                f"inverse residual {resid:.3e} exceeds 1e-12 x conditioning",
            )
        inv.setflags(write=False)
        return inv

    @cached_property
    def det(self) -> np.ndarray:
        return np.linalg.det(self.g)

    @cached_property
    def vol_density(self) -> np.ndarray:
        """sqrt(det g) at every node."""
        return np.sqrt(self.det)

    @cached_property
    def dg(self) -> np.ndarray:
        """d_a g_ij, derivative axis first among component axes."""
        return self.pgrad(self.g)

    @cached_property
    def christoffel(self) -> np.ndarray:
        """Gamma^k_ij with layout [..., k, i, j]."""
        dg = self.dg
        half = 0.5 * self.g_inv
        gamma = np.einsum("...kl,...ijl->...kij", half, dg)
        gamma += np.einsum("...kl,...jil->...kij", half, dg)
        gamma -= np.einsum("...kl,...lij->...kij", half, dg)
        return gamma

    @cached_property
    def riemann_up(self) -> np.ndarray:
        """R^l_ijk with layout [..., l, i, j, k].

        R^l_ijk = d_j Gamma^l_ik - d_i Gamma^l_jk
                  + Gamma^l_jp Gamma^p_ik - Gamma^l_ip Gamma^p_jk

        oriented so that Ric_ik = g^jl R_ijkl reproduces the standard
        contraction R^j_ijk (round sphere comes out positive).
        """
        gamma = self.christoffel
        dgamma = self.pgrad(gamma)  # [..., a, l, i, j]
        r = np.einsum("...jlik->...lijk", dgamma) - np.einsum(
            "...iljk->...lijk", dgamma
        )
        gg = np.einsum("...ljp,...pik->...lijk", gamma, gamma)
        r += gg
        r -= np.einsum("...lijk->...ljik", gg)
        return r

    @cached_property
    def riemann(self) -> np.ndarray:
        """Lowered curvature R_ijkl with layout [..., i, j, k, l]."""
        return np.einsum("...lm,...mijk->...ijkl", self.g, self.riemann_up)

    @cached_property
    def ricci(self) -> np.ndarray:
        """Ric_ik = g^jl R_ijkl, stored exactly symmetric."""
        ric = np.einsum("...jl,...ijkl->...ik", self.g_inv, self.riemann)
        return 0.5 * (ric + np.swapaxes(ric, -1, -2))

    @cached_property
    def scalar_curv(self) -> np.ndarray:
        return np.einsum("...ik,...ik->...", self.g_inv, self.ricci)

    @cached_property
    def ricci_norm_sq(self) -> np.ndarray:
        """|Ric|^2 = g^ik g^jl Ric_ij Ric_kl pointwise."""
        up = np.einsum("...ik,...jl,...kl->...ij", self.g_inv, self.g_inv, self.ricci)
        return np.einsum("...ij,...ij->...", up, self.ricci)

    # -- tensor field helpers -------------------------------------------

    def metric_field(self) -> TensorField:
        return TensorField(self.grid, "dd", np.array(self.g), name="g")

    def ricci_field(self) -> TensorField:
        return TensorField(self.grid, "dd", np.array(self.ricci), name="Ric")

    def riemann_field(self) -> TensorField:
        return TensorField(self.grid, "dddd", np.array(self.riemann), name="Rm")

    def scalar_field(self, values, name="") -> TensorField:
        return TensorField.scalar(self.grid, values, name=name)

    def lower(self, field: TensorField, slot: int = 0) -> TensorField:
        """Lower one contravariant slot with g."""
        return self._move(field, slot, "u", "d", self.g)

    def raise_(self, field: TensorField, slot: int = 0) -> TensorField:
        """Raise one covariant slot with the inverse metric."""
        return self._move(field, slot, "d", "u", self.g_inv)

    def _move(self, field, slot, want, becomes, mover):
        if field.grid != self.grid:
            raise GridError("field lives on a different grid")
        if not 0 <= slot < field.rank or field.slots[slot] != want:
            raise GridError(
                f"slot {slot} of {field.slots!r} is not {want!r}"
            )
        letters = "abcdefgh"[: field.rank]
        src = letters.replace(letters[slot], "m")
        spec = f"...{letters[slot]}m,...{src}->...{letters}"
        vals = np.einsum(spec, mover, field.values)
        slots = field.slots[:slot] + becomes + field.slots[slot + 1 :]
        return TensorField(self.grid, slots, vals, name=field.name)

    def with_metric(self, new_values: np.ndarray) -> "MetricState":
        """New state on the same grid/order (the only way to 'change' g)."""
        return MetricState(self.grid, new_values, order=self.order)

    def __repr__(self):
        return (
            f"MetricState(shape={self.grid.shape}, order={self.order}, "
            f"closed={self.grid.closed})"
        )
