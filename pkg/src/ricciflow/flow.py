"""Time integration of dg/dt = -2 Ric and residual checks along the way.

Residuals compare central time differences of stored curvature fields
against the right sides of the evolution identities

    d s/dt   = Lap s + 2 |Ric|^2
    d Ric/dt = sampson_laplacian(Ric)        (trace closes on Lap s)
    d Rm/dt  = rough_laplacian(Rm) + 2 Sigma(B) - Ric-contraction terms

with B_ijkl = g^pr g^qm R_ipjq R_krlm and
Sigma(B) = B_ijkl - B_ijlk + B_ikjl - B_iljk in the package index
convention.  The scalar diagnostic g^jk g^il d/dt R_ijkl is evaluated and
reported as a sign field only; it is a hypothesis of the source theorems,
never an equation the engine enforces.

The round sphere never runs on a grid: it uses the exact one-parameter
reduction dr/dt = -(n-1)/r (see `run_sphere_flow`), which the full closed
form r(t)^2 = r0^2 - 2(n-1)t certifies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import operators as ops
from .exceptions import (
    ClosedManifoldRequiredError,
    ConfigError,
    CurvatureBlowupError,
    DegenerateMetricError,
    ExtinctionError,
    HistoryError,
    StabilityError,
)
from .families import RoundSphere
from .grid import TensorField
from .metric import MetricState
from .quadrature import integrate
from .reports import ResidualReport

MONITOR_COLUMNS = ("t", "s_min", "s_max", "vol", "int_s", "int_ric_sq")


@dataclass
class FlowConfig:
    """Integration parameters; dt=None derives safety*h^2/(1+max|s0|)."""

    t_end: float
    scheme: str = "rk4"
    dt: float | None = None
    safety: float = 0.2
    stability_factor: float = 1.0
    store_stride: int | None = None  # None: aim for about 12 stored slices
    blowup_scalar: float = 1e6

    def __post_init__(self):
        if self.t_end <= 0:
            raise ConfigError("t_end must be positive")
        if self.scheme not in ("euler", "rk4"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.dt is not None and self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.safety <= 0 or self.stability_factor <= 0:
            raise ConfigError("safety factors must be positive")


class FlowTrajectory:
    """Immutable record of a flow run: stored metrics plus per-step monitors."""

    def __init__(self, grid, order, scheme, dt, stride, times, metrics, monitors):
        self.grid = grid
        self.order = order
        self.scheme = scheme
        self.dt = float(dt)
        self.stride = int(stride)
        self.times = np.asarray(times, dtype=float)
        self._metrics = metrics
        self.monitors = monitors
        self._cache: dict[int, MetricState] = {}

    @property
    def n_stored(self) -> int:
        return len(self._metrics)

    @property
    def stored_spacing(self) -> float:
        return self.stride * self.dt

    def metric_values(self, i: int) -> np.ndarray:
        return self._metrics[i]

    def state(self, i: int) -> MetricState:
        i = int(i)
        if i < 0:
            i += self.n_stored
        if i not in self._cache:
            if len(self._cache) > 6:
                self._cache.pop(next(iter(self._cache)))
            self._cache[i] = MetricState(self.grid, self._metrics[i], self.order)
        return self._cache[i]

    def require_window(self, i: int) -> int:
        if i < 0:
            i += self.n_stored
        if not 1 <= i <= self.n_stored - 2:
            raise HistoryError(
                f"central time difference needs stored neighbors around index {i}; "
                f"have {self.n_stored} stored states"
            )
        return i


def stability_bound(state: MetricState, factor: float = 1.0) -> float:
    """Parabolic step ceiling factor * h_min^2 / (1 + max|s|)."""
    h_min = min(state.grid.spacing)
    s_max = float(np.max(np.abs(state.scalar_curv)))
    return factor * h_min * h_min / (1.0 + s_max)


def _rhs(state: MetricState) -> np.ndarray:
    return -2.0 * state.ricci


def step(state: MetricState, dt: float, scheme: str = "rk4", t: float = 0.0) -> MetricState:
    """One explicit step of dg/dt = -2 Ric; preserves symmetry exactly."""
    if dt <= 0:
        raise ConfigError("dt must be positive")
    remake = lambda vals: MetricState(state.grid, vals, state.order)
    try:
        if scheme == "euler":
            return remake(state.g + dt * _rhs(state))
        if scheme == "rk4":
            k1 = _rhs(state)
            k2 = _rhs(remake(state.g + 0.5 * dt * k1))
            k3 = _rhs(remake(state.g + 0.5 * dt * k2))
            k4 = _rhs(remake(state.g + dt * k3))
            return remake(state.g + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    except DegenerateMetricError as err:
        raise CurvatureBlowupError(t, err.node) from err
    raise ConfigError(f"unknown scheme {scheme!r}")


def run_flow(state0: MetricState, config: FlowConfig) -> FlowTrajectory:
    """Integrate to t_end, storing every stride-th metric and full monitors.

    The step count is rounded up to a stride multiple so stored slices are
    evenly spaced (central differences need a uniform window); with
    automatic dt the step is then shrunk to land exactly on t_end.
    """
    grid = state0.grid
    auto_dt = config.dt is None
    dt = config.dt if config.dt is not None else stability_bound(state0, config.safety)
    n_steps = max(1, math.ceil(config.t_end / dt - 1e-12))
    stride = config.store_stride or max(1, n_steps // 12)
    stride = max(1, min(int(stride), n_steps))
    n_steps = stride * math.ceil(n_steps / stride)
    if auto_dt:
        dt = config.t_end / n_steps

    monitors = {c: np.zeros(n_steps + 1) for c in MONITOR_COLUMNS}
    times, metrics = [], []
    state = state0
    for k in range(n_steps + 1):
        t = k * dt
        ceiling = stability_bound(state, config.stability_factor)
        if dt > ceiling:
            raise StabilityError(
                f"dt={dt:.3e} exceeds the stability ceiling {ceiling:.3e} at t={t:.6g}"
            )
        s = state.scalar_curv
        s_abs_max = float(np.max(np.abs(s)))
        if s_abs_max > config.blowup_scalar:
            node = np.unravel_index(int(np.argmax(np.abs(s))), grid.shape)
            raise CurvatureBlowupError(t, node)
        monitors["t"][k] = t
        monitors["s_min"][k] = float(np.min(s))
        monitors["s_max"][k] = float(np.max(s))
        monitors["vol"][k] = integrate(state, np.ones(grid.shape))
        monitors["int_s"][k] = integrate(state, s)
        monitors["int_ric_sq"][k] = integrate(state, state.ricci_norm_sq)
        if k % stride == 0:
            times.append(t)
            metrics.append(state.g)
        if k < n_steps:
            state = step(state, dt, config.scheme, t=t)
    return FlowTrajectory(
        grid, state0.order, config.scheme, dt, stride, times, metrics, monitors
    )


# -- residuals along a trajectory ---------------------------------------------


def _central_diff(traj: FlowTrajectory, i: int, extract) -> np.ndarray:
    dtw = 2.0 * traj.stored_spacing
    return (extract(traj.state(i + 1)) - extract(traj.state(i - 1))) / dtw


def scalar_evolution_residual(
    traj: FlowTrajectory, i: int, tolerance: float | None = None
) -> ResidualReport:
    """Residual of d s/dt = Lap s + 2 |Ric|^2 at stored index i."""
    i = traj.require_window(i)
    state = traj.state(i)
    ds_dt = _central_diff(traj, i, lambda st: st.scalar_curv)
    lap_s = ops.laplace_beltrami(state, state.scalar_field(state.scalar_curv))
    resid = TensorField.scalar(
        state.grid, ds_dt - lap_s.values - 2.0 * state.ricci_norm_sq
    )
    return ResidualReport(
        name="eq2_scalar_evolution",
        max_norm=ops.max_norm(state, resid),
        l2_norm=ops.l2_norm(state, resid),
        h=state.grid.max_spacing,
        t=float(traj.times[i]),
        tolerance=tolerance,
        extra={"window": traj.stored_spacing},
    )


def ricci_evolution_residual(
    traj: FlowTrajectory,
    i: int,
    tolerance: float | None = None,
    trace_tolerance: float | None = None,
) -> tuple[ResidualReport, ResidualReport]:
    """Residuals of the Ricci evolution and of its scalar trace.

    Returns (tensor report, trace report).  The trace identity
    tr_g(d Ric/dt) = Lap s is the g-contraction of the tensor law, so the
    trace residual is measured as |tr_g(E)| of the tensor residual E; the
    pointwise bound |tr_g E| <= sqrt(n) |E|_g then keeps it within a
    factor n of the tensor residual at every node.  How well the traced
    right side closes on the independently discretized scalar Laplacian
    is reported separately as trace_closure_max, and the pointwise
    extrema of tr_g(d Ric/dt) ride along as sign diagnostics.
    """
    i = traj.require_window(i)
    state = traj.state(i)
    d_ric = _central_diff(traj, i, lambda st: st.ricci)
    ric = TensorField.sym2(state.grid, state.ricci, name="Ric")
    rhs = ops.sampson_laplacian(state, ric)
    e4 = TensorField(state.grid, "dd", d_ric - rhs.values, name="eq4 residual")
    eq4 = ResidualReport(
        name="eq4_ricci_evolution",
        max_norm=ops.max_norm(state, e4),
        l2_norm=ops.l2_norm(state, e4),
        h=state.grid.max_spacing,
        t=float(traj.times[i]),
        tolerance=tolerance,
    )
    trace = np.einsum("...ij,...ij->...", state.g_inv, d_ric)
    rhs_trace = np.einsum("...ij,...ij->...", state.g_inv, rhs.values)
    lap_s = ops.laplace_beltrami(state, state.scalar_field(state.scalar_curv))
    e5 = TensorField.scalar(state.grid, trace - rhs_trace)
    eq5 = ResidualReport(
        name="eq5_trace_evolution",
        max_norm=ops.max_norm(state, e5),
        l2_norm=ops.l2_norm(state, e5),
        h=state.grid.max_spacing,
        t=float(traj.times[i]),
        tolerance=trace_tolerance,
        extra={
            "trace_min": float(np.min(trace)),
            "trace_max": float(np.max(trace)),
            "trace_closure_max": float(np.max(np.abs(rhs_trace - lap_s.values))),
        },
    )
    return eq4, eq5


def riemann_rhs_from_parts(ginv, rm, ric, lap_rm) -> np.ndarray:
    """Right side of the curvature-tensor evolution from raw arrays.

    lap_rm is the rough Laplacian of Rm (zero for symmetric spaces, where
    Rm is parallel).  Shared by the grid engine and the closed-form
    constant-curvature check.
    """
    b = np.einsum("...pr,...qm,...ipjq,...krlm->...ijkl", ginv, ginv, rm, rm)
    sigma = (
        b
        - np.einsum("...ijlk->...ijkl", b)
        + np.einsum("...ikjl->...ijkl", b)
        - np.einsum("...iljk->...ijkl", b)
    )
    ric_mix = np.einsum("...pq,...qi->...pi", ginv, ric)
    ric_terms = np.einsum("...pi,...pjkl->...ijkl", ric_mix, rm)
    ric_terms += np.einsum("...pj,...ipkl->...ijkl", ric_mix, rm)
    ric_terms += np.einsum("...pk,...ijpl->...ijkl", ric_mix, rm)
    ric_terms += np.einsum("...pl,...ijkp->...ijkl", ric_mix, rm)
    return lap_rm + 2.0 * sigma - ric_terms


def riemann_evolution_residual(
    traj: FlowTrajectory, i: int, tolerance: float | None = None
) -> ResidualReport:
    """Residual of the full curvature-tensor evolution at stored index i.

    Also evaluates the scalar diagnostic g^jk g^il d/dt R_ijkl and reports
    its pointwise extrema (a theorem hypothesis, reported never enforced).
    """
    i = traj.require_window(i)
    state = traj.state(i)
    d_rm = _central_diff(traj, i, lambda st: st.riemann)
    lap_rm = ops.rough_laplacian(state, state.riemann_field()).values
    rhs = riemann_rhs_from_parts(state.g_inv, state.riemann, state.ricci, lap_rm)
    resid = TensorField(state.grid, "dddd", d_rm - rhs, name="Rm evolution residual")
    diag = np.einsum("...jk,...il,...ijkl->...", state.g_inv, state.g_inv, d_rm)
    return ResidualReport(
        name="rm_evolution",
        max_norm=ops.max_norm(state, resid),
        l2_norm=ops.l2_norm(state, resid),
        h=state.grid.max_spacing,
        t=float(traj.times[i]),
        tolerance=tolerance,
        extra={
            "eineq1_min": float(np.min(diag)),
            "eineq1_max": float(np.max(diag)),
        },
    )


def sphere_riemann_evolution_residual(
    r0: float = 1.0, t: float = 0.0, shape=(8, 16)
) -> float:
    """Constant-curvature substitution check of the Rm evolution law.

    All tensors on a round 2-sphere of radius r(t) are exact closed forms
    (Rm is parallel, so the Laplacian term vanishes identically); the
    residual of d Rm/dt = (2 r'/r) Rm against the assembled right side is
    pure rounding.
    """
    from .families import sphere_band

    sphere = RoundSphere(dim=2, radius=r0)
    r = sphere.radius_at(t)
    inst = sphere_band(radius=r, n_theta=shape[0], n_phi=shape[1])
    rm = inst.exact.riemann
    ric = inst.exact.ricci
    ginv = np.linalg.inv(inst.state.g)
    r_dot = -(sphere.dim - 1) / r
    lhs = (2.0 * r_dot / r) * rm
    rhs = riemann_rhs_from_parts(ginv, rm, ric, np.zeros_like(rm))
    return float(np.max(np.abs(lhs - rhs)))


# -- trajectory-level reports --------------------------------------------------


def monitor_maximum_principle(
    monitors: dict, dim: int, tol: float = 1e-9
) -> dict:
    """Monotonicity of s_min plus the lower barrier when s_min(0) > 0.

    The barrier 1/((n/s_min(0)) - 2t) applies on closed manifolds with
    initially positive minimum scalar curvature; the monotonicity clause
    always runs.
    """
    t = np.asarray(monitors["t"], dtype=float)
    s_min = np.asarray(monitors["s_min"], dtype=float)
    drops = np.nonzero(np.diff(s_min) < -tol)[0]
    report = {
        "monotone_ok": bool(drops.size == 0),
        "first_violation_t": float(t[drops[0] + 1]) if drops.size else None,
        "worst_drop": float(np.min(np.diff(s_min))) if len(s_min) > 1 else 0.0,
        "tolerance": tol,
        "bound_checked": False,
        "bound_ok": None,
        "max_bound_deficit": None,
    }
    s0 = s_min[0]
    if s0 > 0:
        horizon = dim / (2.0 * s0)
        valid = t < horizon
        bound = 1.0 / (dim / s0 - 2.0 * t[valid])
        deficit = bound - s_min[valid]
        report["bound_checked"] = True
        report["bound_ok"] = bool(np.all(deficit <= tol))
        report["max_bound_deficit"] = float(np.max(deficit))
        report["bound_horizon"] = horizon
    return report


def decreasing_average_probe(
    traj: FlowTrajectory, i: int, tolerance: float | None = None
) -> dict:
    """Integral bookkeeping of the averaged scalar evolution at index i.

    Checks int(ds/dt) dvol = int(Lap s) dvol + 2 int|Ric|^2 dvol (the
    Laplacian integral vanishing by the divergence theorem) and reports
    whether the nonincreasing-average hypothesis held, which forces
    int|Ric|^2 = 0, i.e. a stationary flow.
    """
    if not traj.grid.closed:
        raise ClosedManifoldRequiredError(
            "the averaged-curvature probe is a closed-manifold statement"
        )
    i = traj.require_window(i)
    state = traj.state(i)
    ds_dt = _central_diff(traj, i, lambda st: st.scalar_curv)
    int_ds = integrate(state, ds_dt)
    lap_s = ops.laplace_beltrami(state, state.scalar_field(state.scalar_curv))
    int_lap = integrate(state, lap_s.values)
    int_ric = integrate(state, state.ricci_norm_sq)
    residual = abs(int_ds - int_lap - 2.0 * int_ric)
    out = {
        "t": float(traj.times[i]),
        "int_ds_dt": int_ds,
        "int_lap_s": int_lap,
        "int_ric_sq": int_ric,
        "residual": residual,
        "tolerance": tolerance,
        "nonincreasing_average": bool(int_ds <= (tolerance or 0.0)),
    }
    if tolerance is not None:
        out["verdict"] = bool(residual <= tolerance)
    return out


# -- exact sphere reduction ----------------------------------------------------


class SphereFlowResult:
    """Numerically integrated warped-radius trajectory of a round sphere."""

    def __init__(self, sphere: RoundSphere, scheme, dt, times, radii):
        self.sphere = sphere
        self.scheme = scheme
        self.dt = float(dt)
        self.times = np.asarray(times, dtype=float)
        self.radii = np.asarray(radii, dtype=float)

    @property
    def monitors(self) -> dict:
        n = self.sphere.dim
        s = n * (n - 1) / self.radii**2
        from .families import unit_sphere_area

        vol = unit_sphere_area(n) * self.radii**n
        return {
            "t": self.times,
            "s_min": s,
            "s_max": s,
            "vol": vol,
            "int_s": s * vol,
            "int_ric_sq": (s * s / n) * vol,
        }

    def r_sq_deviation(self) -> float:
        """Max |r(t)^2 - (r0^2 - 2(n-1) t)| over the run."""
        n = self.sphere.dim
        exact = self.sphere.radius**2 - 2.0 * (n - 1) * self.times
        return float(np.max(np.abs(self.radii**2 - exact)))

    def extinction_estimate(self) -> float:
        """Extrapolated vanishing time from the final radius."""
        n = self.sphere.dim
        return float(self.times[-1] + self.radii[-1] ** 2 / (2.0 * (n - 1)))

    def eineq1_series(self) -> np.ndarray:
        """Closed-form g^jk g^il d/dt R_ijkl along the run (sign diagnostic)."""
        n = self.sphere.dim
        return 2.0 * n * (n - 1) ** 2 / self.radii**4

    def scalar_residual_series(self) -> np.ndarray:
        """Closed-form residual of the scalar evolution at every step."""
        return np.array(
            [self.sphere.scalar_evolution_residual(t) for t in self.times]
        )


def run_sphere_flow(
    sphere: RoundSphere, dt: float, t_end: float, scheme: str = "rk4"
) -> SphereFlowResult:
    """Integrate dr/dt = -(n-1)/r; raises at extinction instead of passing it."""
    if dt <= 0 or t_end <= 0:
        raise ConfigError("dt and t_end must be positive")
    if t_end >= sphere.extinction_time:
        raise ExtinctionError(t_end, sphere.extinction_time)
    n_steps = max(1, round(t_end / dt))
    coeff = -(sphere.dim - 1)

    def f(r):
        if r <= 0.0:
            raise ExtinctionError(t_end, sphere.extinction_time)
        return coeff / r

    r = sphere.radius
    radii = [r]
    for _ in range(n_steps):
        if scheme == "euler":
            r = r + dt * f(r)
        elif scheme == "rk4":
            k1 = f(r)
            k2 = f(r + 0.5 * dt * k1)
            k3 = f(r + 0.5 * dt * k2)
            k4 = f(r + dt * k3)
            r = r + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            raise ConfigError(f"unknown scheme {scheme!r}")
        radii.append(r)
    times = np.arange(n_steps + 1) * dt
    return SphereFlowResult(sphere, scheme, dt, times, radii)
