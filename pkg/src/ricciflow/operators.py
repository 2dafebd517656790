"""Differential operators on tensor fields.

Sign conventions, encoded once here and relied on everywhere else:

* ``laplace_beltrami`` is the geometer's scalar Laplacian Delta = div grad
  (Delta sin x = -sin x on flat space, Delta x^2 > 0).  It is discretized
  in divergence form  Delta(phi) = det(g)^(-1/2) d_a(det(g)^(1/2) g^ab d_b phi)
  so that its integral over a closed grid vanishes to roundoff (discrete
  Stokes), not merely to stencil order.
* ``connection_laplacian`` is the Bochner Laplacian  Dbar = -tr grad^2.
  On scalars it returns exactly ``-laplace_beltrami`` (the same array,
  negated): the two operators are negatives of one another by convention,
  and the package encodes that in a single code path.
* ``rough_laplacian`` is +tr grad^2 on tensors of any rank (the negative
  of the connection Laplacian); evolution equations for curvature
  quantities are phrased with it.

Covariant derivatives prepend the derivative slot:  for T with slots
'dd', ``covariant_derivative`` returns slots 'ddd' with values indexed
[..., a, i, j] = (grad_a T)_ij.
"""

from __future__ import annotations

import numpy as np

from .exceptions import GridError
from .grid import TensorField
from .metric import MetricState

_LETTERS = "bcdefgh"  # slot letters; 'a' reserved for the derivative index


def covariant_derivative(state: MetricState, field: TensorField) -> TensorField:
    """Levi-Civita covariant derivative, derivative slot first.

    Partial derivatives come from the grid stencils; each tensor slot gets
    the usual Christoffel correction, + for 'u' slots, - for 'd' slots.
    """
    if field.grid != state.grid:
        raise GridError("field lives on a different grid")
    vals = field.values
    out = state.pgrad(vals)
    if field.rank > len(_LETTERS):
        raise GridError(f"rank {field.rank} exceeds supported maximum")
    gamma = state.christoffel
    base = _LETTERS[: field.rank]
    for s, kind in enumerate(field.slots):
        tgt = base[s]
        src = base[:s] + "m" + base[s + 1 :]
        if kind == "u":
            out += np.einsum(f"...{tgt}am,...{src}->...a{base}", gamma, vals)
        else:
            out -= np.einsum(f"...ma{tgt},...{src}->...a{base}", gamma, vals)
    return TensorField(state.grid, "d" + field.slots, out, name=field.name)


def gradient(state: MetricState, phi: TensorField) -> TensorField:
    """grad(phi)^a = g^ab d_b phi for a scalar field."""
    _expect_scalar(phi)
    dphi = state.pgrad(phi.values)
    vals = np.einsum("...ab,...b->...a", state.g_inv, dphi)
    return TensorField(state.grid, "u", vals, name=phi.name)


def divergence(state: MetricState, xi: TensorField) -> TensorField:
    """Div(xi) = grad_a xi^a for a vector field."""
    _expect_slots(xi, "u")
    cov = covariant_derivative(state, xi)
    return TensorField.scalar(state.grid, np.einsum("...aa->...", cov.values))


def laplace_beltrami(state: MetricState, phi: TensorField) -> TensorField:
    """Scalar Laplace-Beltrami operator in conservative divergence form."""
    _expect_scalar(phi)
    dphi = state.pgrad(phi.values)
    flux = state.vol_density[..., None] * np.einsum(
        "...ab,...b->...a", state.g_inv, dphi
    )
    div = np.zeros(state.grid.shape)
    for a in range(state.grid.dim):
        div += state.pdiff(flux[..., a], a)
    return TensorField.scalar(state.grid, div / state.vol_density, name=phi.name)


def connection_laplacian(state: MetricState, field: TensorField) -> TensorField:
    """Bochner Laplacian Dbar = -tr grad^2 on tensors of any rank.

    On scalars this is exactly the negated Laplace-Beltrami array, keeping
    the Dbar(phi) = -Delta(phi) convention bit-for-bit.
    """
    if field.rank == 0:
        lb = laplace_beltrami(state, field)
        return TensorField.scalar(state.grid, -lb.values, name=field.name)
    dd = covariant_derivative(state, covariant_derivative(state, field))
    rest = _LETTERS[: field.rank]
    # y/z are outside the slot-letter pool, so the two derivative slots
    # contract without capturing same-named field slots
    vals = -np.einsum(f"...yz,...yz{rest}->...{rest}", state.g_inv, dd.values)
    return TensorField(state.grid, field.slots, vals, name=field.name)


def rough_laplacian(state: MetricState, field: TensorField) -> TensorField:
    """+tr grad^2, the Laplacian appearing in the curvature evolution laws."""
    cl = connection_laplacian(state, field)
    return TensorField(state.grid, cl.slots, -cl.values, name=field.name)


def hessian(state: MetricState, phi: TensorField) -> TensorField:
    """(Hess phi)_ij = d_i d_j phi - Gamma^k_ij d_k phi, stored symmetric."""
    _expect_scalar(phi)
    df = covariant_derivative(state, phi)
    h = covariant_derivative(state, df)
    return TensorField(state.grid, "dd", h.values, name=phi.name).symmetrized()


# -- Lie derivatives --------------------------------------------------------


def lie_metric(state: MetricState, xi: TensorField) -> TensorField:
    """(L_xi g)_ij = grad_i xi_j + grad_j xi_i (xi lowered with g)."""
    _expect_slots(xi, "u")
    theta = state.lower(xi)
    a = covariant_derivative(state, theta).values
    return TensorField(
        state.grid, "dd", a + np.swapaxes(a, -1, -2), name="lie_g"
    )


def lie_sym2(state: MetricState, xi: TensorField, phi: TensorField) -> TensorField:
    """Lie derivative of a covariant symmetric 2-tensor along xi."""
    _expect_slots(xi, "u")
    _expect_slots(phi, "dd")
    dphi = covariant_derivative(state, phi).values
    dxi = covariant_derivative(state, xi).values  # [..., a, m] = grad_a xi^m
    out = np.einsum("...m,...mij->...ij", xi.values, dphi)
    out += np.einsum("...im,...mj->...ij", dxi, phi.values)
    out += np.einsum("...jm,...im->...ij", dxi, phi.values)
    return TensorField(state.grid, "dd", out, name="lie_" + (phi.name or "phi"))


def lie_riemann(state: MetricState, xi: TensorField) -> TensorField:
    """Lie derivative of the lowered curvature tensor along xi.

    L_xi R_ijkl = xi^m grad_m R_ijkl + grad_i xi^m R_mjkl
                  + grad_j xi^m R_imkl + grad_k xi^m R_ijml
                  + grad_l xi^m R_ijkm
    """
    _expect_slots(xi, "u")
    rm = state.riemann
    drm = covariant_derivative(state, state.riemann_field()).values
    dxi = covariant_derivative(state, xi).values
    out = np.einsum("...m,...mijkl->...ijkl", xi.values, drm)
    out += np.einsum("...im,...mjkl->...ijkl", dxi, rm)
    out += np.einsum("...jm,...imkl->...ijkl", dxi, rm)
    out += np.einsum("...km,...ijml->...ijkl", dxi, rm)
    out += np.einsum("...lm,...ijkm->...ijkl", dxi, rm)
    return TensorField(state.grid, "dddd", out, name="lie_Rm")


# -- Weitzenboeck machinery --------------------------------------------------


def weitzenboeck_ricci(state: MetricState, phi: TensorField) -> TensorField:
    """Curvature term of the Weitzenboeck decomposition on symmetric 2-tensors.

    In the package index convention:

        W(phi)_ij = -2 phi^kl R_ikjl + Ric_ik phi^k_j + Ric_jk phi^k_i

    Its g-trace vanishes identically in the continuum, which is what makes
    the trace of the tensor evolution close on the scalar evolution.
    """
    _expect_symmetric2(phi)
    ginv = state.g_inv
    phi_up = np.einsum("...ka,...lb,...ab->...kl", ginv, ginv, phi.values)
    phi_mix = np.einsum("...ka,...aj->...kj", ginv, phi.values)
    out = -2.0 * np.einsum("...kl,...ikjl->...ij", phi_up, state.riemann)
    out += np.einsum("...ik,...kj->...ij", state.ricci, phi_mix)
    out += np.einsum("...jk,...ki->...ij", state.ricci, phi_mix)
    return TensorField(state.grid, "dd", out, name="W(phi)").symmetrized()


def sampson_laplacian(state: MetricState, phi: TensorField) -> TensorField:
    """Sampson Laplacian on symmetric 2-tensors via the Weitzenboeck route.

    Implemented as  rough_laplacian(phi) - W(phi), the orientation under
    which the Ricci tensor of a Ricci flow satisfies
    d(Ric)/dt = sampson_laplacian(Ric) and the g-trace of the operator
    closes on the scalar Laplace-Beltrami operator:
    tr_g(sampson(phi)) = laplace_beltrami(tr_g phi) + O(h^order).
    """
    _expect_symmetric2(phi)
    rough = rough_laplacian(state, phi)
    w = weitzenboeck_ricci(state, phi)
    return TensorField(
        state.grid, "dd", rough.values - w.values, name="sampson"
    ).symmetrized()


def yano_laplacian(state: MetricState, theta: TensorField) -> TensorField:
    """Yano operator on 1-forms: box(theta) = Dbar(theta) - Ric(xi, .).

    xi is theta raised; box(theta) = 0 together with Div(xi) = 0
    characterizes infinitesimal isometries.
    """
    _expect_slots(theta, "d")
    dbar = connection_laplacian(state, theta)
    ric_xi = np.einsum(
        "...ij,...jk,...k->...i", state.ricci, state.g_inv, theta.values
    )
    return TensorField(state.grid, "d", dbar.values - ric_xi, name="yano")


def ricci_contraction(state: MetricState, xi: TensorField) -> TensorField:
    """One-form Ric(xi, .)_i = Ric_ij xi^j."""
    _expect_slots(xi, "u")
    vals = np.einsum("...ij,...j->...i", state.ricci, xi.values)
    return TensorField(state.grid, "d", vals, name="Ric(xi,.)")


def scalar_trace_rm(state: MetricState, t4: TensorField) -> TensorField:
    """Double trace g^ik g^jl T_ijkl (yields the scalar curvature on Rm)."""
    _expect_slots(t4, "dddd")
    vals = np.einsum(
        "...ik,...jl,...ijkl->...", state.g_inv, state.g_inv, t4.values
    )
    return TensorField.scalar(state.grid, vals, name="tr " + (t4.name or "T"))


# -- pointwise norms ---------------------------------------------------------


def pointwise_norm_sq(state: MetricState, field: TensorField) -> np.ndarray:
    """|T|^2_g at every node ('d' slots paired with g^-1, 'u' with g)."""
    if field.rank == 0:
        return field.values**2
    l1 = _LETTERS[: field.rank]
    l2 = "mnopqrs"[: field.rank]
    operands = [field.values, field.values]
    spec = [f"...{l1}", f"...{l2}"]
    for s, kind in enumerate(field.slots):
        operands.append(state.g_inv if kind == "d" else state.g)
        spec.append(f"...{l1[s]}{l2[s]}")
    out = np.einsum(",".join(spec) + "->...", *operands)
    return np.maximum(out, 0.0)


def pointwise_norm(state: MetricState, field: TensorField) -> np.ndarray:
    return np.sqrt(pointwise_norm_sq(state, field))


def max_norm(state: MetricState, field: TensorField, mask=None) -> float:
    """Max over nodes of the pointwise g-norm (restricted to mask if given)."""
    norm = pointwise_norm(state, field)
    if mask is not None:
        norm = norm[mask]
    return float(np.max(norm)) if norm.size else 0.0


def l2_norm(state: MetricState, field: TensorField, mask=None) -> float:
    """L2 norm sqrt( integral |T|^2 dvol ) over the (masked) grid."""
    dens = pointwise_norm_sq(state, field) * state.vol_density * state.grid.quad_weights
    if mask is not None:
        dens = dens[mask]
    return float(np.sqrt(max(np.sum(dens), 0.0)))


# -- guards ------------------------------------------------------------------


def _expect_scalar(field: TensorField):
    if field.rank != 0:
        raise GridError(f"expected a scalar field, got slots {field.slots!r}")


def _expect_slots(field: TensorField, slots: str):
    if field.slots != slots:
        raise GridError(f"expected slots {slots!r}, got {field.slots!r}")


def _expect_symmetric2(field: TensorField, tol: float = 1e-8):
    _expect_slots(field, "dd")
    defect = field.symmetry_defect()
    scale = max(field.component_max(), 1.0)
    if defect > tol * scale:
        raise GridError(
            f"expected a symmetric 2-tensor; asymmetry {defect:.3e}"
        )
