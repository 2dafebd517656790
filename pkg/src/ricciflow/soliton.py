"""Soliton certification: residuals, identities, and hypothesis signs.

A soliton structure (g, xi, lam) is certified against

    Ric + (1/2) L_xi g + lam g = 0,

gradient structures (g, f, lam) additionally against
Ric + Hess f + lam g = 0 with xi = grad f derived, never supplied.
Classification follows sign(lam): steady 0, shrinking < 0, expanding > 0.

Beyond the defining equation, the certifier measures the identity suite
the defining equation implies (trace/potential identity, Bochner formula,
one-form Laplacian identity, the Lie-derivative trace identities, the
closed-manifold integral identities) and reports the signs of theorem
hypotheses (nonpositivity of the gradient pairing integral, trace signs,
curvature-diagnostic integrals).  Residual entries carry their tolerance
and verdict; hypothesis entries carry a value and a sign, never a verdict:
they are inputs to theorems, not claims.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .exceptions import (
    ClosedManifoldRequiredError,
    ConfigError,
    InapplicableCheckError,
)
from .grid import TensorField
from .metric import MetricState
from .quadrature import grad_pairing, integrate, volume
from .stencils import boundary_band, interior_trim

CONVENTION = "lambda<0 shrinking, lambda=0 steady, lambda>0 expanding"


@dataclass
class SolitonSpec:
    """Candidate soliton structure on a sampled metric."""

    state: MetricState
    lam: float
    potential: TensorField | None = None
    vector: TensorField | None = None
    name: str = ""
    roundoff: bool = False  # True when the sampled data is stencil-exact

    def __post_init__(self):
        if (self.potential is None) == (self.vector is None):
            raise ConfigError(
                "provide exactly one of potential (gradient kind) or vector"
            )
        if self.potential is not None:
            if self.potential.rank != 0:
                raise ConfigError("potential must be a scalar field")
            if self.potential.grid != self.state.grid:
                raise ConfigError("potential sampled on a different grid")
        else:
            if self.vector.slots != "u":
                raise ConfigError("vector field must have slots 'u'")
            if self.vector.grid != self.state.grid:
                raise ConfigError("vector field sampled on a different grid")
        self._xi = None

    @property
    def kind(self) -> str:
        return "gradient" if self.potential is not None else "vector"

    def xi(self) -> TensorField:
        """The generating field; for gradient kind, grad f (derived)."""
        if self._xi is None:
            if self.kind == "gradient":
                self._xi = ops.gradient(self.state, self.potential)
            else:
                self._xi = self.vector
        return self._xi

    def theta(self) -> TensorField:
        return self.state.lower(self.xi())


def from_family(instance, kind: str = "gradient") -> SolitonSpec:
    """Build a SolitonSpec from a family instance.

    kind: 'gradient' uses the family potential, 'vector' the family
    generating field, 'killing' the family Killing field (an isometry
    generator, valid for Einstein members).
    """
    if instance.lam is None:
        raise ConfigError(f"family {instance.name!r} carries no soliton data")
    if kind == "gradient":
        if instance.potential is None:
            raise ConfigError(f"family {instance.name!r} has no potential")
        return SolitonSpec(
            instance.state,
            instance.lam,
            potential=instance.potential,
            name=instance.name,
            roundoff=instance.stencil_exact,
        )
    if kind == "vector":
        if instance.soliton_vector is None:
            raise ConfigError(f"family {instance.name!r} has no vector field")
        return SolitonSpec(
            instance.state,
            instance.lam,
            vector=instance.soliton_vector,
            name=instance.name,
            roundoff=instance.stencil_exact,
        )
    if kind == "killing":
        if instance.killing is None:
            raise ConfigError(f"family {instance.name!r} has no Killing field")
        return SolitonSpec(
            instance.state,
            instance.lam,
            vector=instance.killing,
            name=f"{instance.name}+killing",
            roundoff=instance.stencil_exact,
        )
    raise ConfigError(f"unknown spec kind {kind!r}")


# -- certificate containers ---------------------------------------------------


@dataclass
class CertEntry:
    name: str
    max_norm: float
    l2_norm: float | None = None
    tolerance: float | None = None
    verdict: bool | None = None
    note: str = ""

    def to_dict(self):
        return {
            "name": self.name,
            "max_norm": self.max_norm,
            "l2_norm": self.l2_norm,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "note": self.note,
        }


@dataclass
class HypothesisEntry:
    name: str
    value: float
    sign: str
    note: str = ""

    def to_dict(self):
        return {
            "name": self.name,
            "value": self.value,
            "sign": self.sign,
            "note": self.note,
        }


@dataclass
class Certificate:
    name: str
    classification: str
    flags: dict
    residuals: list = field(default_factory=list)
    hypotheses: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    truncated: bool = False
    convention: str = CONVENTION

    @property
    def passed(self) -> bool:
        return all(e.verdict for e in self.residuals if e.verdict is not None)

    def entry(self, name: str) -> CertEntry:
        for e in self.residuals:
            if e.name == name:
                return e
        raise KeyError(name)

    def hypothesis(self, name: str) -> HypothesisEntry:
        for h in self.hypotheses:
            if h.name == name:
                return h
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "classification": self.classification,
            "flags": self.flags,
            "residuals": [e.to_dict() for e in self.residuals],
            "hypotheses": [h.to_dict() for h in self.hypotheses],
            "diagnostics": self.diagnostics,
            "truncated": self.truncated,
            "convention": self.convention,
            "passed": self.passed,
        }


def classify(lam: float) -> str:
    if lam == 0.0:
        return "steady"
    return "shrinking" if lam < 0.0 else "expanding"


def _sign(value: float, tol: float) -> str:
    if abs(value) <= tol:
        return "0"
    return "+" if value > 0 else "-"


# -- core residuals ------------------------------------------------------------


def soliton_residual_field(spec: SolitonSpec) -> TensorField:
    """Pointwise Ric + (1/2) L_xi g + lam g (zero on an exact soliton)."""
    state = spec.state
    lie_g = ops.lie_metric(state, spec.xi())
    vals = state.ricci + 0.5 * lie_g.values + spec.lam * state.g
    return TensorField(state.grid, "dd", vals, name="soliton residual")


def gradient_residual_field(spec: SolitonSpec) -> TensorField:
    """Pointwise Ric + Hess f + lam g for gradient specs."""
    if spec.kind != "gradient":
        raise InapplicableCheckError("gradient residual needs a potential")
    state = spec.state
    hess = ops.hessian(state, spec.potential)
    vals = state.ricci + hess.values + spec.lam * state.g
    return TensorField(state.grid, "dd", vals, name="gradient residual")


def trace_potential_residual(spec: SolitonSpec) -> TensorField:
    """Scalar Dbar f - s - n lam, the g-trace of the gradient equation."""
    if spec.kind != "gradient":
        raise InapplicableCheckError("trace/potential identity needs a potential")
    state = spec.state
    dbar_f = ops.connection_laplacian(state, spec.potential)
    n = state.grid.dim
    vals = dbar_f.values - state.scalar_curv - n * spec.lam
    return TensorField.scalar(state.grid, vals, name="trace potential residual")


# -- identity suite -------------------------------------------------------------


def bochner_residual_field(state: MetricState, xi: TensorField) -> TensorField:
    """(1/2) Lap |xi|^2 - |grad xi|^2 + Ric(xi, xi), zero for soliton fields."""
    norm_sq = TensorField.scalar(state.grid, ops.pointwise_norm_sq(state, xi))
    lap = ops.laplace_beltrami(state, norm_sq)
    grad_xi = ops.covariant_derivative(state, xi)
    grad_sq = ops.pointwise_norm_sq(state, grad_xi)
    ric_xx = np.einsum("...ij,...i,...j->...", state.ricci, xi.values, xi.values)
    vals = 0.5 * lap.values - grad_sq + ric_xx
    return TensorField.scalar(state.grid, vals, name="bochner residual")


def theta_laplacian_residual(state: MetricState, xi: TensorField) -> TensorField:
    """Dbar theta - Ric(xi, .), which vanishes for soliton fields."""
    theta = state.lower(xi)
    dbar = ops.connection_laplacian(state, theta)
    ric_xi = ops.ricci_contraction(state, xi)
    return TensorField(
        state.grid, "d", dbar.values - ric_xi.values, name="theta laplacian residual"
    )


def _dilate(mask: np.ndarray, grid, iterations: int) -> np.ndarray:
    """Grow a boolean mask by one node per iteration along every axis."""
    out = mask.copy()
    for _ in range(iterations):
        grown = out.copy()
        for a in range(grid.dim):
            up = np.roll(out, 1, axis=a)
            dn = np.roll(out, -1, axis=a)
            if not grid.periodic[a]:
                sl = [slice(None)] * grid.dim
                sl[a] = 0
                up[tuple(sl)] = False
                sl[a] = -1
                dn[tuple(sl)] = False
            grown |= up | dn
        out = grown
    return out


def kato_pointwise_check(
    state: MetricState,
    xi: TensorField,
    epsilon: float | None = None,
    tolerance: float = 0.0,
    mask: np.ndarray | None = None,
) -> dict:
    """Pointwise |xi| Lap|xi| >= -Ric(xi,xi) away from zeros of |xi|.

    Nodes with |xi| <= epsilon are excluded (|xi| is not differentiable at
    its zeros), together with every node whose Laplacian stencil touches
    the excluded set; epsilon defaults to 1e-8 * max|xi|.  Also evaluates
    the second Kato comparison -|xi| Lap|xi| <= <Dbar theta, theta> on the
    same nodes.  Returns worst signed violations (negative = satisfied).
    """
    norm = ops.pointwise_norm(state, xi)
    peak = float(np.max(norm))
    if peak == 0.0:
        return {
            "kept_fraction": 0.0,
            "epsilon": 0.0,
            "worst_eq13": 0.0,
            "eq13_ok": True,
            "worst_kato2": 0.0,
            "kato2_ok": True,
            "note": "xi vanishes identically; nothing to check",
        }
    eps = (1e-8 * peak) if epsilon is None else float(epsilon)
    excluded = norm <= eps
    reach = 2 * boundary_band(state.order)
    excluded = _dilate(excluded, state.grid, reach)
    keep = ~excluded
    if mask is not None:
        keep &= mask
    if not np.any(keep):
        return {
            "kept_fraction": 0.0,
            "epsilon": eps,
            "worst_eq13": 0.0,
            "eq13_ok": True,
            "worst_kato2": 0.0,
            "kato2_ok": True,
            "note": "no nodes outside the exclusion set",
        }
    lap_norm = ops.laplace_beltrami(state, TensorField.scalar(state.grid, norm))
    lhs = norm * lap_norm.values
    ric_xx = np.einsum("...ij,...i,...j->...", state.ricci, xi.values, xi.values)
    eq13_violation = -(lhs + ric_xx)  # > 0 means the inequality failed
    theta = state.lower(xi)
    dbar_theta = ops.connection_laplacian(state, theta)
    pairing = np.einsum(
        "...ab,...a,...b->...", state.g_inv, dbar_theta.values, theta.values
    )
    kato2_violation = -(pairing + lhs)
    worst13 = float(np.max(eq13_violation[keep]))
    worst2 = float(np.max(kato2_violation[keep]))
    return {
        "kept_fraction": float(np.mean(keep)),
        "epsilon": eps,
        "worst_eq13": worst13,
        "eq13_ok": bool(worst13 <= tolerance),
        "worst_kato2": worst2,
        "kato2_ok": bool(worst2 <= tolerance),
    }


def lie_ricci_trace_residual(state: MetricState, xi: TensorField) -> TensorField:
    """Scalar Lap s - tr_g(L_xi Ric), zero on solitons in the continuum."""
    ric = TensorField.sym2(state.grid, state.ricci, name="Ric")
    lie_ric = ops.lie_sym2(state, xi, ric)
    trace = np.einsum("...ij,...ij->...", state.g_inv, lie_ric.values)
    lap_s = ops.laplace_beltrami(state, state.scalar_field(state.scalar_curv))
    return TensorField.scalar(
        state.grid, lap_s.values - trace, name="lie ricci trace residual"
    )


def lie_ricci_trace_field(state: MetricState, xi: TensorField) -> np.ndarray:
    """tr_g(L_xi Ric), whose sign is a theorem hypothesis."""
    ric = TensorField.sym2(state.grid, state.ricci, name="Ric")
    lie_ric = ops.lie_sym2(state, xi, ric)
    return np.einsum("...ij,...ij->...", state.g_inv, lie_ric.values)


def lie_riemann_trace_residual(state: MetricState, xi: TensorField) -> TensorField:
    """Pointwise tr(L_xi Rm) - xi(s) - 4 <Ric, grad xi>.

    tr is the scalar-curvature-type double trace; the identity follows
    from commuting the Lie derivative with the two metric contractions.
    """
    lie_rm = ops.lie_riemann(state, xi)
    lhs = ops.scalar_trace_rm(state, lie_rm).values
    ds = state.pgrad(state.scalar_curv)
    xi_s = np.einsum("...a,...a->...", xi.values, ds)
    nabla = ops.covariant_derivative(state, xi).values  # [..., k, m]
    ric_pair = np.einsum(
        "...ka,...am,...km->...", state.g_inv, state.ricci, nabla
    )
    return TensorField.scalar(
        state.grid, lhs - xi_s - 4.0 * ric_pair, name="lie riemann trace residual"
    )


def lie_riemann_integral_identity(
    state: MetricState, xi: TensorField
) -> dict:
    """Two-route check of int tr(L_xi Rm) dvol = -int xi(s) dvol.

    The left route assembles the full Lie derivative of the curvature
    tensor and traces it; the right route is a direct quadrature of the
    derivative of the scalar curvature along xi.  The sign of the left
    integral is the hypothesis of the strongest rigidity statement.
    """
    if not state.grid.closed:
        raise ClosedManifoldRequiredError(
            "the Lie-derivative integral identity needs a closed grid"
        )
    lie_rm = ops.lie_riemann(state, xi)
    left = integrate(state, ops.scalar_trace_rm(state, lie_rm).values)
    ds = state.pgrad(state.scalar_curv)
    xi_s = np.einsum("...a,...a->...", xi.values, ds)
    right = -integrate(state, xi_s)
    scale = max(abs(left), abs(right), 1e-30)
    return {
        "int_trace_lie_rm": left,
        "neg_int_xi_s": right,
        "residual": abs(left - right),
        "relative_residual": abs(left - right) / scale,
    }


def grad_s_integral_test(spec: SolitonSpec, tolerance: float) -> dict:
    """Closed-manifold pairing test behind the Einstein-rigidity argument.

    Computes, by independent quadratures,

        I1 = int <grad f, grad s_c> dvol   with  s_c = Dbar f - n lam
        I2 = int (Dbar f)^2 dvol

    whose equality is an integration-by-parts consequence of the trace
    identity alone (s_c is the scalar curvature the soliton equation
    forces, so the equality holds whether or not the spec is a soliton;
    the pairing against the measured scalar curvature is reported for
    comparison but not asserted).  When I1 <= tolerance the Einstein
    branch is triggered: I2 <= tolerance forces Dbar f ~ 0 in L2.
    """
    if spec.kind != "gradient":
        raise InapplicableCheckError("gradient pairing test needs a potential")
    state = spec.state
    if not state.grid.closed:
        raise ClosedManifoldRequiredError(
            "the gradient pairing identity needs a closed grid"
        )
    f = spec.potential
    n = state.grid.dim
    dbar_f = ops.connection_laplacian(state, f)
    s_constrained = TensorField.scalar(
        state.grid, dbar_f.values - n * spec.lam, name="constrained s"
    )
    i1 = grad_pairing(state, f, s_constrained)
    i2 = integrate(state, dbar_f.values**2)
    actual = grad_pairing(
        state, f, state.scalar_field(state.scalar_curv)
    )
    scale = max(abs(i1), abs(i2), 1e-30)
    einstein_forced = i1 <= tolerance
    return {
        "int_xi_s_constrained": i1,
        "int_dbar_f_sq": i2,
        "int_xi_s_actual": actual,
        "equality_residual": abs(i1 - i2),
        "relative_residual": abs(i1 - i2) / scale,
        "l2_dbar_f": float(np.sqrt(max(i2, 0.0))),
        "einstein_forced": bool(einstein_forced),
        "tolerance": tolerance,
    }


def kinetic_energy(spec: SolitonSpec) -> dict:
    """E(xi) = (1/2) int |xi|^2 dvol; flagged when the chart is truncated."""
    state = spec.state
    dens = 0.5 * ops.pointwise_norm_sq(state, spec.xi())
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        value = integrate(state, dens)
    return {"value": value, "truncated": not state.grid.closed}


def isometry_test(state: MetricState, xi: TensorField, tolerance: float) -> dict:
    """Div xi = 0 together with box(theta) = 0 characterizes isometries."""
    div = ops.divergence(state, xi)
    theta = state.lower(xi)
    box = ops.yano_laplacian(state, theta)
    mask = None
    if not state.grid.closed:
        mask = state.grid.interior_mask(interior_trim(state.grid, state.order))
    div_max = ops.max_norm(state, div, mask=mask)
    box_max = ops.max_norm(state, box, mask=mask)
    return {
        "div_max": div_max,
        "yano_max": box_max,
        "tolerance": tolerance,
        "is_isometry": bool(div_max <= tolerance and box_max <= tolerance),
    }


# -- the certifier --------------------------------------------------------------


def default_tolerance(spec: SolitonSpec, constant: float = 1.0) -> float:
    """Roundoff-class bound for stencil-exact data, else 10 C h^2."""
    if spec.roundoff:
        return 1e-10
    h = spec.state.grid.max_spacing
    return 10.0 * constant * h * h


def certify(
    spec: SolitonSpec,
    tolerance: float | None = None,
    eq13_epsilon: float | None = None,
    tolerance_scale: float = 1.0,
) -> Certificate:
    """Full certification of a candidate soliton structure.

    Residual entries get verdicts against `tolerance` (scaled); hypothesis
    entries only report values and signs.  Identity checks that require a
    soliton are marked skipped when the defining residual fails; checks
    that require a closed manifold are marked skipped on truncated charts.
    """
    state = spec.state
    grid = state.grid
    tol = (tolerance if tolerance is not None else default_tolerance(spec))
    tol *= tolerance_scale
    truncated = not grid.closed
    mask = grid.interior_mask(interior_trim(grid, state.order)) if truncated else None
    n = grid.dim

    cert = Certificate(
        name=spec.name or "soliton spec",
        classification=classify(spec.lam),
        flags={},
        truncated=truncated,
    )
    add = cert.residuals.append

    xi = spec.xi()
    core = soliton_residual_field(spec)
    add(
        CertEntry(
            "defining_equation",
            ops.max_norm(state, core, mask=mask),
            ops.l2_norm(state, core, mask=mask),
            tol,
            None,
        )
    )
    cert.residuals[-1].verdict = cert.residuals[-1].max_norm <= tol
    is_soliton = cert.residuals[-1].verdict

    if spec.kind == "gradient":
        grad_res = gradient_residual_field(spec)
        add(
            CertEntry(
                "gradient_equation",
                ops.max_norm(state, grad_res, mask=mask),
                ops.l2_norm(state, grad_res, mask=mask),
                tol,
                None,
            )
        )
        cert.residuals[-1].verdict = cert.residuals[-1].max_norm <= tol
        agree = TensorField(
            grid, "dd", core.values - grad_res.values, name="form agreement"
        )
        agree_max = ops.max_norm(state, agree, mask=mask)
        add(
            CertEntry(
                "vector_vs_gradient_form",
                agree_max,
                ops.l2_norm(state, agree, mask=mask),
                1e-12,
                agree_max <= 1e-12,
                note="the two defining forms must agree to roundoff",
            )
        )
        tp = trace_potential_residual(spec)
        tp_max = ops.max_norm(state, tp, mask=mask)
        add(
            CertEntry(
                "trace_potential_identity",
                tp_max,
                ops.l2_norm(state, tp, mask=mask),
                n * tol,
                tp_max <= n * tol,
                note="g-trace of the gradient equation",
            )
        )

    # flags
    lie_g = ops.lie_metric(state, xi)
    lie_g_max = ops.max_norm(state, lie_g, mask=mask)
    xi_max = ops.max_norm(state, xi, mask=mask)
    ric_field = TensorField.sym2(grid, state.ricci, name="Ric")
    ric_max = ops.max_norm(state, ric_field, mask=mask)
    cert.flags = {
        "einstein": bool(lie_g_max <= tol),
        "trivial": bool(xi_max <= tol),
        "ricci_flat": bool(ric_max <= tol),
    }
    cert.diagnostics["lie_g_max"] = lie_g_max
    cert.diagnostics["xi_max"] = xi_max
    cert.diagnostics["ric_max"] = ric_max

    # identity suite (granted only for verified solitons)
    if is_soliton:
        boch = bochner_residual_field(state, xi)
        boch_max = ops.max_norm(state, boch, mask=mask)
        add(
            CertEntry(
                "bochner_identity",
                boch_max,
                ops.l2_norm(state, boch, mask=mask),
                10 * tol,
                boch_max <= 10 * tol,
            )
        )
        th = theta_laplacian_residual(state, xi)
        th_max = ops.max_norm(state, th, mask=mask)
        add(
            CertEntry(
                "theta_laplacian_identity",
                th_max,
                ops.l2_norm(state, th, mask=mask),
                10 * tol,
                th_max <= 10 * tol,
            )
        )
        kato = kato_pointwise_check(
            state, xi, epsilon=eq13_epsilon, tolerance=10 * tol, mask=mask
        )
        add(
            CertEntry(
                "norm_laplacian_lower_bound",
                max(kato["worst_eq13"], 0.0),
                None,
                10 * tol,
                kato["eq13_ok"],
                note=f"kept fraction {kato['kept_fraction']:.3f}",
            )
        )
        add(
            CertEntry(
                "second_kato_comparison",
                max(kato["worst_kato2"], 0.0),
                None,
                10 * tol,
                kato["kato2_ok"],
            )
        )
        lie_tr = lie_ricci_trace_residual(state, xi)
        lie_tr_max = ops.max_norm(state, lie_tr, mask=mask)
        add(
            CertEntry(
                "lie_ricci_trace_identity",
                lie_tr_max,
                ops.l2_norm(state, lie_tr, mask=mask),
                10 * tol,
                lie_tr_max <= 10 * tol,
            )
        )
        tr_field = lie_ricci_trace_field(state, xi)
        tr_vals = tr_field[mask] if mask is not None else tr_field
        cert.hypotheses.append(
            HypothesisEntry(
                "tr_lie_ricci_min", float(np.min(tr_vals)), _sign(np.min(tr_vals), tol)
            )
        )
        cert.hypotheses.append(
            HypothesisEntry(
                "tr_lie_ricci_max", float(np.max(tr_vals)), _sign(np.max(tr_vals), tol)
            )
        )
        # constant-s / vanishing-trace branch: |Ric|^2 + lam s = 0
        ds = ops.gradient(state, state.scalar_field(state.scalar_curv))
        ds_max = ops.max_norm(state, ds, mask=mask)
        cert.diagnostics["grad_s_max"] = ds_max
        if ds_max <= 10 * tol and np.max(np.abs(tr_vals)) <= 10 * tol:
            branch = np.abs(state.ricci_norm_sq + spec.lam * state.scalar_curv)
            if mask is not None:
                branch = branch[mask]
            b_max = float(np.max(branch))
            add(
                CertEntry(
                    "ricci_norm_energy_identity",
                    b_max,
                    None,
                    10 * tol,
                    b_max <= 10 * tol,
                    note="|Ric|^2 + lam s, checked since grad s and tr(L_xi Ric) vanish",
                )
            )
    else:
        add(
            CertEntry(
                "bochner_identity", 0.0, None, None, None,
                note="skipped: defining equation failed",
            )
        )

    iso = isometry_test(state, xi, tol)
    cert.diagnostics["isometry"] = iso

    # closed-manifold integral identities and hypothesis signs
    if not truncated:
        if spec.kind == "gradient":
            pair = grad_s_integral_test(spec, tol)
            add(
                CertEntry(
                    "gradient_pairing_equality",
                    pair["equality_residual"],
                    None,
                    max(tol, 1e-3 * abs(pair["int_dbar_f_sq"])),
                    pair["relative_residual"] <= 1e-3
                    or pair["equality_residual"] <= tol,
                    note="int <grad f, grad s_c> vs int (Dbar f)^2",
                )
            )
            cert.hypotheses.append(
                HypothesisEntry(
                    "int_xi_s_constrained",
                    pair["int_xi_s_constrained"],
                    _sign(pair["int_xi_s_constrained"], tol),
                    note="nonpositivity forces the Einstein branch",
                )
            )
            cert.hypotheses.append(
                HypothesisEntry(
                    "int_xi_s_actual",
                    pair["int_xi_s_actual"],
                    _sign(pair["int_xi_s_actual"], tol),
                )
            )
            cert.flags["einstein_forced"] = pair["einstein_forced"]
            cert.diagnostics["gradient_pairing"] = pair
        lie_int = lie_riemann_integral_identity(state, xi)
        add(
            CertEntry(
                "lie_riemann_integral_identity",
                lie_int["residual"],
                None,
                max(tol, 1e-3 * max(abs(lie_int["int_trace_lie_rm"]), 1.0)),
                lie_int["relative_residual"] <= 1e-3
                or lie_int["residual"] <= tol,
            )
        )
        cert.hypotheses.append(
            HypothesisEntry(
                "int_trace_lie_rm",
                lie_int["int_trace_lie_rm"],
                _sign(lie_int["int_trace_lie_rm"], tol),
            )
        )
    else:
        # noncompact diagnostics: truncated integrability report
        s = state.scalar_curv
        cell = state.vol_density * grid.quad_weights
        for q in (1, 2):
            cert.diagnostics[f"int_abs_s_pow_{q}"] = {
                "value": float(np.sum(np.abs(s) ** q * cell)),
                "truncated": True,
            }

    cert.diagnostics["energy"] = kinetic_energy(spec)
    cert.diagnostics["volume"] = {
        "value": _quiet_volume(state),
        "truncated": truncated,
    }
    cert.diagnostics["tolerance"] = tol
    return cert


def _quiet_volume(state: MetricState) -> float:
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return volume(state)
