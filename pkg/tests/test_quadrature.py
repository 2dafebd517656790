import numpy as np
import pytest
from scipy import integrate as scipy_integrate

import ricciflow as rf
from ricciflow import TensorField
import ricciflow.operators as ops
from ricciflow.quadrature import (
    ball_volume,
    distance_field,
    grad_pairing,
    inner_product,
    integrate,
    volume,
    volume_growth,
)
from ricciflow.families import random_trig_poly, TWO_PI


def test_flat_torus_volume(flat32):
    assert volume(flat32.state) == pytest.approx((2 * np.pi) ** 2, abs=1e-12)


def test_conformal_volume_against_scipy(conformal24):
    # independent reference: adaptive quadrature of the area element
    ref, err = scipy_integrate.dblquad(
        lambda yy, xx: np.exp(0.2 * np.sin(xx) * np.sin(yy)),
        0.0, 2 * np.pi, 0.0, 2 * np.pi, epsabs=1e-12, epsrel=1e-12,
    )
    assert err < 1e-8
    # the node rule is spectrally accurate on smooth periodic integrands
    assert volume(conformal24.state) == pytest.approx(ref, abs=1e-10)


@pytest.mark.filterwarnings("ignore:integrating over a truncated chart")
def test_sphere_band_volume_closed_form(band32):
    # truncated-chart warning is exercised separately below
    # area of the band theta in [m, pi-m] on radius r: 4 pi r^2 cos(m);
    # trapezoid rule on 32 theta nodes carries ~6e-4 relative error
    assert volume(band32.state) == pytest.approx(
        4 * np.pi * np.cos(0.3), rel=1e-3
    )


def test_stokes_vanishing_for_random_fields(flat32, conformal24):
    for fam in (flat32, conformal24):
        state = fam.state
        vol = volume(state)
        for seed in range(20):
            poly = random_trig_poly((TWO_PI, TWO_PI), seed=seed, amplitude=0.5)
            f = TensorField.scalar(state.grid, poly(state.grid.coords))
            lap = ops.laplace_beltrami(state, f)
            assert abs(integrate(state, lap.values)) <= 1e-10 * vol


def test_summation_by_parts_is_exact(conformal24):
    # int f Lap(h) + int <grad f, grad h> = 0 to roundoff on closed grids
    state = conformal24.state
    x, y = state.grid.coords
    f = TensorField.scalar(state.grid, np.sin(x) * np.cos(2 * y))
    h = TensorField.scalar(state.grid, np.cos(x + y))
    left = integrate(state, f.values * ops.laplace_beltrami(state, h).values)
    right = grad_pairing(state, f, h)
    assert abs(left + right) < 1e-12


def test_grad_pairing_is_symmetric(conformal24):
    state = conformal24.state
    x, y = state.grid.coords
    f = TensorField.scalar(state.grid, np.sin(x))
    h = TensorField.scalar(state.grid, np.cos(y) + 0.3 * np.sin(2 * x))
    assert grad_pairing(state, f, h) == pytest.approx(
        grad_pairing(state, h, f), abs=1e-12
    )


def test_inner_product_of_metric_with_itself(conformal24):
    # <g, g>_g = n pointwise, so the integral is n * Vol
    state = conformal24.state
    g = state.metric_field()
    assert inner_product(state, g, g) == pytest.approx(2.0 * volume(state), rel=1e-12)


def test_distance_field_flat_axes(flat32):
    state = flat32.state
    dist = distance_field(state, (0, 0))
    h = state.grid.spacing[0]
    # along an axis the graph distance is the coordinate distance
    assert dist[0, 0] == 0.0
    assert dist[5, 0] == pytest.approx(5 * h, rel=1e-12)
    # periodic wrap: the far side is reached the short way around
    assert dist[-1, 0] == pytest.approx(h, rel=1e-12)


def test_ball_volume_monotone(flat32):
    state = flat32.state
    radii = np.array([0.5, 1.0, 1.5, 2.0])
    vols = ball_volume(state, (16, 16), radii)
    assert np.all(np.diff(vols) > 0)


def test_volume_growth_flat_exponent(gaussian21):
    # flat chart: vol(B_r) ~ pi r^2, slope near 2 before saturation
    out = volume_growth(gaussian21.state, n_radii=6)
    good = ~out["saturated"][1:]
    slopes = out["slopes"][good]
    assert np.nanmean(slopes) == pytest.approx(2.0, abs=0.5)


def test_volume_growth_flags_saturated_balls(gaussian21):
    state = gaussian21.state
    out = volume_growth(
        state, radii=np.array([0.5, 1.0, 10.0])
    )
    assert bool(out["saturated"][-1])
    assert out["volumes"][-1] == pytest.approx(out["chart_volume"], rel=1e-12)


def test_truncated_chart_volume_is_flagged(cigar161):
    # integrate() emits a truncation warning on non-closed grids
    state = cigar161.state
    with pytest.warns(UserWarning):
        volume(state)
