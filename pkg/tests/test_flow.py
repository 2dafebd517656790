"""Time integration: sphere reduction, grid flow, residuals, monitors."""

import numpy as np
import pytest

from ricciflow.exceptions import (
    ClosedManifoldRequiredError,
    ConfigError,
    CurvatureBlowupError,
    ExtinctionError,
    HistoryError,
    StabilityError,
)
from ricciflow.families import RoundSphere
from ricciflow.flow import (
    MONITOR_COLUMNS,
    FlowConfig,
    decreasing_average_probe,
    monitor_maximum_principle,
    ricci_evolution_residual,
    riemann_evolution_residual,
    run_flow,
    run_sphere_flow,
    scalar_evolution_residual,
    sphere_riemann_evolution_residual,
    stability_bound,
    step,
)

S2 = RoundSphere(dim=2, radius=1.0)


@pytest.fixture(scope="module")
def short_conformal_traj(conformal24):
    # seven stored slices; enough interior windows for central differences
    cfg = FlowConfig(t_end=0.05, store_stride=1)
    return run_flow(conformal24.state, cfg)


# -- exact sphere reduction ----------------------------------------------------


def _sphere_error(scheme, dt):
    return run_sphere_flow(S2, dt=dt, t_end=0.4, scheme=scheme).r_sq_deviation()


def test_sphere_rk4_is_fourth_order():
    dts = [2e-2, 1e-2, 5e-3]
    errs = [_sphere_error("rk4", dt) for dt in dts]
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert slope > 3.5


def test_sphere_euler_is_first_order():
    dts = [2e-2, 1e-2, 5e-3]
    errs = [_sphere_error("euler", dt) for dt in dts]
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert 0.8 < slope < 1.3


def test_sphere_rk4_tracks_closed_form():
    res = run_sphere_flow(S2, dt=1e-4, t_end=0.4, scheme="rk4")
    assert res.r_sq_deviation() <= 1e-6
    assert abs(res.extinction_estimate() - 0.5) <= 1e-3
    # curvature blows up monotonically: s_min never decreases
    s = res.monitors["s_min"]
    assert np.all(np.diff(s) >= 0.0)


def test_sphere_diagnostic_series():
    res = run_sphere_flow(S2, dt=1e-3, t_end=0.3, scheme="rk4")
    # 2 n (n-1)^2 / r^4 starts at 4 and grows; strictly positive throughout
    eineq1 = res.eineq1_series()
    assert eineq1[0] == pytest.approx(4.0, rel=1e-9)
    assert np.all(eineq1 > 0.0)
    assert np.all(np.abs(res.scalar_residual_series()) <= 1e-10)
    assert set(res.monitors) == set(MONITOR_COLUMNS)


def test_sphere_flow_guards():
    with pytest.raises(ExtinctionError):
        run_sphere_flow(S2, dt=1e-3, t_end=0.5)
    with pytest.raises(ConfigError):
        run_sphere_flow(S2, dt=-1e-3, t_end=0.1)
    with pytest.raises(ConfigError):
        run_sphere_flow(S2, dt=1e-3, t_end=0.1, scheme="leapfrog")


def test_sphere_substitution_residual_is_roundoff():
    assert sphere_riemann_evolution_residual() <= 1e-8


# -- grid flow mechanics --------------------------------------------------------


def test_flat_torus_is_a_fixed_point(flat16):
    cfg = FlowConfig(t_end=1e-3, dt=1e-5)
    traj = run_flow(flat16.state, cfg)
    drift = np.max(np.abs(traj.metric_values(-1) - flat16.state.g))
    assert drift <= 1e-12
    assert np.max(np.abs(traj.monitors["s_max"])) <= 1e-12


def test_store_stride_and_spacing(conformal24):
    cfg = FlowConfig(t_end=0.02, dt=1e-3, store_stride=5)
    traj = run_flow(conformal24.state, cfg)
    # 20 steps, stride 5: slices at 0, 5, 10, 15, 20
    assert traj.n_stored == 5
    assert traj.stored_spacing == pytest.approx(5e-3, rel=1e-12)
    assert traj.times[-1] == pytest.approx(0.02, rel=1e-12)


def test_step_preserves_metric_symmetry(conformal24):
    out = step(conformal24.state, 1e-4)
    assert np.array_equal(out.g, np.swapaxes(out.g, -1, -2))


def test_step_guards(conformal24):
    with pytest.raises(ConfigError):
        step(conformal24.state, -1e-4)
    with pytest.raises(ConfigError):
        step(conformal24.state, 1e-4, scheme="ab2")


def test_flow_config_validation():
    with pytest.raises(ConfigError):
        FlowConfig(t_end=0.0)
    with pytest.raises(ConfigError):
        FlowConfig(t_end=0.1, scheme="verlet")
    with pytest.raises(ConfigError):
        FlowConfig(t_end=0.1, dt=0.0)
    with pytest.raises(ConfigError):
        FlowConfig(t_end=0.1, safety=-1.0)


def test_stability_error_on_oversized_step(conformal24):
    ceiling = stability_bound(conformal24.state)
    with pytest.raises(StabilityError):
        run_flow(conformal24.state, FlowConfig(t_end=1.0, dt=10 * ceiling))


def test_blowup_guard_trips(conformal24):
    # the conformal wave has |s| ~ 0.4 at t=0, far above this threshold
    cfg = FlowConfig(t_end=0.01, dt=1e-4, blowup_scalar=1e-3)
    with pytest.raises(CurvatureBlowupError) as exc:
        run_flow(conformal24.state, cfg)
    assert exc.value.t == 0.0


def test_history_window_guard(short_conformal_traj):
    traj = short_conformal_traj
    with pytest.raises(HistoryError):
        traj.require_window(0)
    with pytest.raises(HistoryError):
        traj.require_window(traj.n_stored - 1)
    # negative indices resolve against the stored count
    assert traj.require_window(-2) == traj.n_stored - 2


# -- evolution residuals on a live flow ----------------------------------------


def test_scalar_evolution_residual_small(short_conformal_traj):
    rep = scalar_evolution_residual(short_conformal_traj, 3, tolerance=5e-3)
    assert rep.name == "eq2_scalar_evolution"
    assert rep.verdict
    assert rep.max_norm < 5e-3
    assert rep.t == pytest.approx(short_conformal_traj.times[3])


def test_ricci_trace_consistency(short_conformal_traj):
    eq4, eq5 = ricci_evolution_residual(
        short_conformal_traj, 3, tolerance=5e-3, trace_tolerance=1e-2
    )
    assert eq4.verdict and eq5.verdict
    # pointwise bound |tr E| <= sqrt(n) |E|_g, so n covers it with room
    assert eq5.max_norm <= 2.0 * eq4.max_norm
    assert eq5.extra["trace_closure_max"] < 5e-3


def test_riemann_evolution_residual(short_conformal_traj):
    rep = riemann_evolution_residual(short_conformal_traj, 3, tolerance=1e-2)
    assert rep.verdict
    assert "eineq1_min" in rep.extra and "eineq1_max" in rep.extra


def test_averaged_scalar_probe(short_conformal_traj):
    # residual carries the O(window^2) central-difference error, ~6e-4 here
    out = decreasing_average_probe(short_conformal_traj, 3, tolerance=5e-3)
    assert out["verdict"]
    # the laplacian integral vanishes discretely, so the check reduces to
    # int(ds/dt) = 2 int|Ric|^2, both positive on the relaxing wave
    assert out["int_ric_sq"] > 0.0
    assert out["int_ds_dt"] == pytest.approx(
        2.0 * out["int_ric_sq"], abs=5e-3
    )
    assert not out["nonincreasing_average"]


@pytest.mark.filterwarnings("ignore:integrating over a truncated chart")
def test_averaged_probe_needs_closed_chart(band32):
    cfg = FlowConfig(t_end=2e-4, dt=5e-5, store_stride=1)
    traj = run_flow(band32.state, cfg)
    with pytest.raises(ClosedManifoldRequiredError):
        decreasing_average_probe(traj, 1)


# -- monitor report semantics ---------------------------------------------------


def test_maximum_principle_passes_on_clean_monitors():
    t = np.linspace(0.0, 0.1, 11)
    s_min = 2.0 / (1.0 - 2.0 * t)  # the sphere curve, above the barrier
    rep = monitor_maximum_principle({"t": t, "s_min": s_min}, dim=2)
    assert rep["monotone_ok"]
    assert rep["bound_checked"]
    assert rep["bound_ok"]
    assert rep["first_violation_t"] is None


def test_maximum_principle_flags_a_drop():
    t = np.linspace(0.0, 0.1, 11)
    s_min = np.full(11, 2.0)
    s_min[4] = 1.5  # injected dip
    rep = monitor_maximum_principle({"t": t, "s_min": s_min}, dim=2)
    assert not rep["monotone_ok"]
    assert rep["first_violation_t"] == pytest.approx(t[4])
    assert rep["worst_drop"] == pytest.approx(-0.5)


def test_maximum_principle_flags_barrier_violation():
    # frozen at s=2 the curve crosses the barrier 1/(1 - 2t) at t = 1/4,
    # well inside the horizon 1/2
    t = np.linspace(0.0, 0.45, 11)
    s_min = np.full(11, 2.0)
    rep = monitor_maximum_principle({"t": t, "s_min": s_min}, dim=2)
    assert rep["monotone_ok"]
    assert rep["bound_checked"]
    assert not rep["bound_ok"]
    assert rep["max_bound_deficit"] > 0.0
    assert rep["bound_horizon"] == pytest.approx(0.5)


def test_maximum_principle_skips_barrier_when_not_positive():
    t = np.linspace(0.0, 0.1, 5)
    s_min = np.array([-1.0, -0.9, -0.8, -0.7, -0.6])
    rep = monitor_maximum_principle({"t": t, "s_min": s_min}, dim=2)
    assert rep["monotone_ok"]
    assert not rep["bound_checked"]
    assert rep["bound_ok"] is None
