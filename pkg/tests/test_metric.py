"""Curvature pipeline against independently derived references.

The conformal-torus reference is built here from scratch with sympy:
generic Christoffel/Riemann machinery applied to the metric components,
no conformal shortcut, so it exercises every einsum in the pipeline.
"""

import numpy as np
import pytest
import sympy as sp

import ricciflow as rf
from ricciflow import MetricState, TensorField
from ricciflow.exceptions import DegenerateMetricError
from ricciflow.stencils import interior_trim


# -- sympy reference ------------------------------------------------------------


def _sympy_conformal_reference():
    """Gamma, Ric, s for g = exp(2u) delta, u = 0.1 sin x sin y.

    Index conventions under test:
      Gamma^k_ij = (1/2) g^kl (d_i g_jl + d_j g_il - d_l g_ij)
      R^l_ijk  = d_j Gamma^l_ik - d_i Gamma^l_jk + Gamma^l_jp Gamma^p_ik
                 - Gamma^l_ip Gamma^p_jk
      Ric_ik   = R^j_ijk  (positive on the round sphere)
    """
    x, y = sp.symbols("x y", real=True)
    X = (x, y)
    u = sp.Rational(1, 10) * sp.sin(x) * sp.sin(y)
    g = sp.exp(2 * u) * sp.eye(2)
    ginv = g.inv()

    def gamma(k, i, j):
        return sum(
            ginv[k, l]
            * (sp.diff(g[j, l], X[i]) + sp.diff(g[i, l], X[j]) - sp.diff(g[i, j], X[l]))
            for l in range(2)
        ) / 2

    G = [[[sp.simplify(gamma(k, i, j)) for j in range(2)] for i in range(2)]
         for k in range(2)]

    def r_up(l, i, j, k):
        term = sp.diff(G[l][i][k], X[j]) - sp.diff(G[l][j][k], X[i])
        term += sum(
            G[l][j][p] * G[p][i][k] - G[l][i][p] * G[p][j][k] for p in range(2)
        )
        return term

    ric = [[sp.simplify(sum(r_up(j, i, j, k) for j in range(2))) for k in range(2)]
           for i in range(2)]
    scal = sp.simplify(
        sum(ginv[i, k] * ric[i][k] for i in range(2) for k in range(2))
    )

    # cross-check of the reference itself: in 2D the scalar curvature of a
    # conformal metric must equal -2 exp(-2u) Lap0 u
    lap0_u = sp.diff(u, x, 2) + sp.diff(u, y, 2)
    assert sp.simplify(scal + 2 * sp.exp(-2 * u) * lap0_u) == 0

    lam = sp.lambdify
    return {
        "gamma": [[[lam((x, y), G[k][i][j]) for j in range(2)] for i in range(2)]
                  for k in range(2)],
        "ric": [[lam((x, y), ric[i][k]) for k in range(2)] for i in range(2)],
        "scal": lam((x, y), scal),
    }


@pytest.fixture(scope="module")
def sympy_ref():
    return _sympy_conformal_reference()


def _conformal_errors(ref, shape):
    fam = rf.conformal_torus(
        rf.TrigPoly.product_of_waves(
            (2 * np.pi, 2 * np.pi), [("sin", 0, 1), ("sin", 1, 1)], amplitude=0.1
        ),
        shape=shape,
        order=4,
    )
    state = fam.state
    x, y = state.grid.coords
    e_gamma = max(
        np.max(np.abs(state.christoffel[..., k, i, j] - ref["gamma"][k][i][j](x, y)))
        for k in range(2) for i in range(2) for j in range(2)
    )
    e_ric = max(
        np.max(np.abs(state.ricci[..., i, k] - ref["ric"][i][k](x, y)))
        for i in range(2) for k in range(2)
    )
    e_scal = np.max(np.abs(state.scalar_curv - ref["scal"](x, y)))
    return e_gamma, e_ric, e_scal


def test_conformal_curvature_matches_sympy(sympy_ref):
    e_gamma, e_ric, e_scal = _conformal_errors(sympy_ref, (24, 24))
    assert e_gamma < 2e-4
    assert e_ric < 1e-3
    assert e_scal < 2e-3


def test_conformal_curvature_refines_at_stencil_order(sympy_ref):
    coarse = _conformal_errors(sympy_ref, (24, 24))
    fine = _conformal_errors(sympy_ref, (48, 48))
    for ec, ef in zip(coarse, fine):
        assert ec / ef > 8.0  # 4th-order stencils double-resolution gain is 16


# -- exact special cases ---------------------------------------------------------


def test_flat_torus_curvature_is_exactly_zero(flat16):
    state = flat16.state
    assert np.max(np.abs(state.christoffel)) < 1e-14
    assert np.max(np.abs(state.ricci)) < 1e-14
    assert np.max(np.abs(state.riemann)) < 1e-14
    assert np.max(np.abs(state.scalar_curv)) < 1e-14


def test_sphere_band_constant_curvature(band32):
    state = band32.state
    mask = state.grid.interior_mask(interior_trim(state.grid, state.order))
    # unit sphere: s = 2, Ric = g, K = 1
    assert np.max(np.abs(state.scalar_curv[mask] - 2.0)) < 5e-3
    assert np.max(np.abs((state.ricci - state.g)[mask])) < 5e-3
    r1212 = state.riemann[..., 0, 1, 0, 1]
    det_g = state.g[..., 0, 0] * state.g[..., 1, 1]
    gauss = r1212 / det_g
    assert np.max(np.abs(gauss[mask] - 1.0)) < 5e-3


def test_sphere_band_scaled_radius():
    fam = rf.sphere_band(radius=1.25, theta_margin=0.4, n_theta=40, n_phi=80)
    state = fam.state
    mask = state.grid.interior_mask(interior_trim(state.grid, state.order))
    assert np.max(np.abs(state.scalar_curv[mask] - 2.0 / 1.25**2)) < 5e-3


def test_cigar_scalar_curvature_closed_form(cigar161):
    state = cigar161.state
    x, y = state.grid.coords
    mask = state.grid.interior_mask(interior_trim(state.grid, state.order))
    expected = 4.0 / (1.0 + x**2 + y**2)
    assert np.max(np.abs(state.scalar_curv - expected)[mask]) < 2e-4


def test_gaussian_family_is_stencil_exact(gaussian21):
    state = gaussian21.state
    assert gaussian21.stencil_exact
    assert np.max(np.abs(state.ricci)) < 1e-13
    assert np.max(np.abs(state.scalar_curv)) < 1e-13


# -- structural identities --------------------------------------------------------


def test_riemann_symmetries_and_first_bianchi(conformal24):
    state = conformal24.state
    rm = state.riemann
    scale = np.max(np.abs(rm))
    # antisymmetry in the first pair is exact by construction; the other
    # symmetries close at stencil-error level
    assert np.max(np.abs(rm + np.swapaxes(rm, -4, -3))) < 1e-12
    assert np.max(np.abs(rm + np.swapaxes(rm, -2, -1))) < 2e-3 * scale
    pair_swap = np.einsum("...ijkl->...klij", rm)
    assert np.max(np.abs(rm - pair_swap)) < 2e-3 * scale
    bianchi = rm + np.einsum("...ijkl->...jkil", rm) + np.einsum("...ijkl->...kijl", rm)
    assert np.max(np.abs(bianchi)) < 2e-3 * scale


def test_ricci_is_symmetric_exactly(conformal24):
    ric = conformal24.state.ricci
    assert np.max(np.abs(ric - np.swapaxes(ric, -1, -2))) == 0.0


def test_scalar_is_trace_of_ricci(conformal24):
    state = conformal24.state
    tr = np.einsum("...ik,...ik->...", state.g_inv, state.ricci)
    assert np.max(np.abs(tr - state.scalar_curv)) < 1e-14


def test_metric_inverse_and_volume_density(conformal24):
    state = conformal24.state
    eye = np.einsum("...ij,...jk->...ik", state.g, state.g_inv)
    assert np.max(np.abs(eye - np.eye(2))) < 1e-12
    assert np.allclose(state.vol_density, np.sqrt(np.linalg.det(state.g)))


def test_lower_raise_roundtrip(conformal24):
    state = conformal24.state
    rng = np.random.default_rng(3)
    v = TensorField.vector(state.grid, rng.normal(size=state.grid.shape + (2,)))
    back = state.raise_(state.lower(v))
    assert back.slots == "u"
    assert np.max(np.abs(back.values - v.values)) < 1e-12


def test_with_metric_rescales_curvature(conformal24):
    # s(c g) = s(g) / c for constant c
    state = conformal24.state
    scaled = state.with_metric(4.0 * state.g)
    assert np.max(np.abs(scaled.scalar_curv - 0.25 * state.scalar_curv)) < 1e-10


def test_degenerate_metric_is_rejected():
    grid = rf.ChartGrid((6, 6), 0.1, periodic=True)
    g = np.zeros((6, 6, 2, 2))  # rank-deficient everywhere
    with pytest.raises(DegenerateMetricError):
        MetricState(grid, g)
