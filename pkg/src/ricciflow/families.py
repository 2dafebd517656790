"""Reference metric families with closed-form curvature and soliton data.

Each constructor samples a metric onto a :class:`ChartGrid` and attaches
exact curvature arrays evaluated from the closed form, so finite-difference
results can be checked against an independent oracle.  Gradient-soliton
families also carry their potential, generating field, and constant, under
the convention

    Ric + (1/2) L_xi g + lam g = 0,      xi = grad f for gradient kinds,

with lam < 0 shrinking, lam = 0 steady, lam > 0 expanding.

Scalar test fields and conformal factors use a tiny exact expression
grammar (:class:`TrigPoly`, sums of cosines with integer wave vectors) so
that derivatives are evaluated analytically, never by differencing the
samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as _gamma_fn

from .exceptions import ConfigError, ExtinctionError
from .grid import ChartGrid, TensorField
from .metric import MetricState

TWO_PI = 2.0 * math.pi


# -- exact trigonometric polynomials ----------------------------------------


@dataclass(frozen=True)
class TrigPoly:
    """Sum of cosine modes a*cos(<k, 2*pi*x/L> + phase) on a periodic box.

    Closed under partial derivatives and the flat Laplacian, which is what
    makes it usable as an exact oracle: every derivative is again a
    TrigPoly evaluated analytically on the grid nodes.
    """

    lengths: tuple[float, ...]
    terms: tuple[tuple[float, tuple[int, ...], float], ...]

    @property
    def dim(self) -> int:
        return len(self.lengths)

    def _omega(self, waves) -> np.ndarray:
        return np.array(
            [TWO_PI * k / length for k, length in zip(waves, self.lengths)]
        )

    def __call__(self, coords) -> np.ndarray:
        out = np.zeros(np.broadcast(*coords).shape)
        for amp, waves, phase in self.terms:
            omega = self._omega(waves)
            arg = phase
            for axis in range(self.dim):
                arg = arg + omega[axis] * coords[axis]
            out += amp * np.cos(arg)
        return out

    def partial(self, axis: int) -> "TrigPoly":
        # d/dx cos(w x + p) = w cos(w x + p + pi/2)
        new_terms = []
        for amp, waves, phase in self.terms:
            w = TWO_PI * waves[axis] / self.lengths[axis]
            if w == 0.0 or amp == 0.0:
                continue
            new_terms.append((amp * w, waves, phase + 0.5 * math.pi))
        return TrigPoly(self.lengths, tuple(new_terms))

    def flat_laplacian(self) -> "TrigPoly":
        new_terms = []
        for amp, waves, phase in self.terms:
            w2 = float(np.sum(self._omega(waves) ** 2))
            if w2 == 0.0 or amp == 0.0:
                continue
            new_terms.append((-amp * w2, waves, phase))
        return TrigPoly(self.lengths, tuple(new_terms))

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        if other.lengths != self.lengths:
            raise ConfigError("cannot add trig polynomials on different boxes")
        return TrigPoly(self.lengths, self.terms + other.terms)

    def __rmul__(self, c: float) -> "TrigPoly":
        return TrigPoly(
            self.lengths, tuple((c * a, k, p) for a, k, p in self.terms)
        )

    @classmethod
    def constant(cls, lengths, value: float) -> "TrigPoly":
        zero = (0,) * len(lengths)
        return cls(tuple(lengths), ((float(value), zero, 0.0),))

    @classmethod
    def product_of_waves(cls, lengths, factors, amplitude=1.0) -> "TrigPoly":
        """amplitude * prod of sin/cos factors, e.g. 0.1*sin(x)*sin(y).

        `factors` is a list of (func, axis, wave) with func in {sin, cos}.
        The product expands exactly into cosine modes via the product-to-sum
        identity, keeping derivative evaluation analytic.
        """
        lengths = tuple(float(length) for length in lengths)
        dim = len(lengths)
        terms = [(float(amplitude), (0,) * dim, 0.0)]
        for func, axis, wave in factors:
            if func not in ("sin", "cos"):
                raise ConfigError(f"unknown factor {func!r}; use sin or cos")
            if not 0 <= axis < dim:
                raise ConfigError(f"factor axis {axis} out of range")
            shift = -0.5 * math.pi if func == "sin" else 0.0
            new_terms = []
            for amp, waves, phase in terms:
                up = list(waves)
                dn = list(waves)
                up[axis] += wave
                dn[axis] -= wave
                # cos(P)cos(Q) = (cos(P-Q) + cos(P+Q))/2
                new_terms.append((0.5 * amp, tuple(dn), phase - shift))
                new_terms.append((0.5 * amp, tuple(up), phase + shift))
            terms = new_terms
        return cls(lengths, tuple(terms))


def random_trig_poly(
    lengths, seed: int, n_terms: int = 6, max_wave: int = 2, amplitude: float = 0.1
) -> TrigPoly:
    """Seeded band-limited random field on a periodic box.

    Uses the counter-based Philox generator so the same seed yields the
    same field on any platform.
    """
    lengths = tuple(float(length) for length in lengths)
    dim = len(lengths)
    gen = np.random.Generator(np.random.Philox(key=int(seed)))
    terms = []
    guard = 0
    while len(terms) < n_terms:
        guard += 1
        if guard > 100 * n_terms:
            raise ConfigError("could not draw enough distinct wave vectors")
        waves = tuple(int(w) for w in gen.integers(-max_wave, max_wave + 1, dim))
        if all(w == 0 for w in waves):
            continue
        amp = amplitude * float(gen.standard_normal()) / math.sqrt(n_terms)
        phase = float(gen.uniform(0.0, TWO_PI))
        terms.append((amp, waves, phase))
    return TrigPoly(lengths, tuple(terms))


def trig_poly_from_config(cfg, lengths, seed: int | None = None) -> TrigPoly:
    """Build a TrigPoly from a scenario dictionary.

    Accepted forms:
      {"terms": [[amp, [k...], phase], ...]}
      {"product": [["sin", 0, 1], ["sin", 1, 1]], "amplitude": 0.1}
      {"random": {"n_terms": 6, "max_wave": 2, "amplitude": 0.1}}
    """
    if not isinstance(cfg, dict):
        raise ConfigError("expression config must be a mapping")
    if "terms" in cfg:
        terms = tuple(
            (float(a), tuple(int(k) for k in waves), float(p))
            for a, waves, p in cfg["terms"]
        )
        return TrigPoly(tuple(float(length) for length in lengths), terms)
    if "product" in cfg:
        factors = [(f, int(ax), int(w)) for f, ax, w in cfg["product"]]
        return TrigPoly.product_of_waves(
            lengths, factors, amplitude=cfg.get("amplitude", 1.0)
        )
    if "random" in cfg:
        if seed is None:
            raise ConfigError("random expression requires a scenario seed")
        opts = dict(cfg["random"])
        return random_trig_poly(
            lengths,
            seed=seed + int(opts.pop("seed_offset", 0)),
            **opts,
        )
    raise ConfigError("expression config needs 'terms', 'product', or 'random'")


# -- family containers -------------------------------------------------------


@dataclass
class ExactCurvature:
    """Closed-form curvature arrays sampled on the instance grid."""

    scalar: np.ndarray | None = None
    ricci: np.ndarray | None = None
    riemann: np.ndarray | None = None
    christoffel: np.ndarray | None = None


@dataclass
class FamilyInstance:
    """A sampled family member: metric state plus exact reference data."""

    name: str
    state: MetricState
    exact: ExactCurvature | None = None
    lam: float | None = None
    potential: TensorField | None = None
    soliton_vector: TensorField | None = None
    killing: TensorField | None = None
    # True when the sampled arrays make every FD kernel exact (flat or
    # polynomial data a 4th-order stencil differentiates without error),
    # so residuals are roundoff-class and 1e-10 style tolerances apply.
    stencil_exact: bool = False
    params: dict = field(default_factory=dict)


def _constant_curvature_riemann(k_sec, g):
    """R_ijkl = K (g_ik g_jl - g_il g_jk) for pointwise sectional curvature K."""
    gg1 = np.einsum("...ik,...jl->...ijkl", g, g)
    gg2 = np.einsum("...il,...jk->...ijkl", g, g)
    if np.ndim(k_sec):
        k_sec = k_sec[..., None, None, None, None]
    return k_sec * (gg1 - gg2)


# -- flat torus ---------------------------------------------------------------


def flat_torus(shape=(32, 32), lengths=None, order: int = 4) -> FamilyInstance:
    """Flat metric on a periodic box: the stationary point of the flow."""
    shape = tuple(int(n) for n in shape)
    dim = len(shape)
    if lengths is None:
        lengths = (TWO_PI,) * dim
    spacing = tuple(float(length) / n for length, n in zip(lengths, shape))
    grid = ChartGrid(shape, spacing, periodic=True)
    eye = np.broadcast_to(np.eye(dim), grid.shape + (dim, dim)).copy()
    state = MetricState(grid, eye, order=order)
    zero2 = np.zeros(grid.shape + (dim, dim))
    exact = ExactCurvature(
        scalar=np.zeros(grid.shape),
        ricci=zero2,
        riemann=np.zeros(grid.shape + (dim,) * 4),
        christoffel=np.zeros(grid.shape + (dim,) * 3),
    )
    killing = np.zeros(grid.shape + (dim,))
    killing[..., 0] = 1.0
    return FamilyInstance(
        name="flat_torus",
        state=state,
        exact=exact,
        lam=0.0,
        potential=TensorField.scalar(grid, np.zeros(grid.shape), name="f"),
        soliton_vector=TensorField.vector(grid, np.zeros(grid.shape + (dim,))),
        killing=TensorField.vector(grid, killing, name="translation"),
        stencil_exact=True,
        params={"lengths": tuple(lengths)},
    )


# -- conformal torus ----------------------------------------------------------


def conformal_torus(
    u: TrigPoly, shape=(64, 64), order: int = 4
) -> FamilyInstance:
    """g = exp(2u) * delta on a 2-torus, curvature exact via the conformal law.

    In two dimensions the Gauss curvature of exp(2u) delta is
    K = -exp(-2u) Lap0(u) with Lap0 the flat Laplacian, hence
    s = 2K and Ric = -(Lap0 u) delta.
    """
    if u.dim != 2 or len(shape) != 2:
        raise ConfigError("conformal torus closed forms are two-dimensional")
    shape = tuple(int(n) for n in shape)
    lengths = u.lengths
    spacing = tuple(float(length) / n for length, n in zip(lengths, shape))
    grid = ChartGrid(shape, spacing, periodic=True)
    xs = grid.coords
    u_val = u(xs)
    du = np.stack([u.partial(a)(xs) for a in range(2)], axis=-1)
    lap0_u = u.flat_laplacian()(xs)

    conf = np.exp(2.0 * u_val)
    g = conf[..., None, None] * np.eye(2)
    state = MetricState(grid, g, order=order)

    scal = -2.0 * np.exp(-2.0 * u_val) * lap0_u
    ricci = -lap0_u[..., None, None] * np.eye(2)
    riemann = _constant_curvature_riemann(0.5 * scal, g)
    # Gamma^k_ij = d_i u delta^k_j + d_j u delta^k_i - d_k u delta_ij
    eye = np.eye(2)
    gamma = (
        np.einsum("...i,kj->...kij", du, eye)
        + np.einsum("...j,ki->...kij", du, eye)
        - np.einsum("...k,ij->...kij", du, eye)
    )
    exact = ExactCurvature(
        scalar=scal, ricci=ricci, riemann=riemann, christoffel=gamma
    )
    # an axis the conformal factor does not vary along is an isometry
    # direction: attach its coordinate field as the Killing field
    killing = None
    for axis in range(2):
        if all(waves[axis] == 0 for _, waves, _ in u.terms):
            vals = np.zeros(grid.shape + (2,))
            vals[..., axis] = 1.0
            killing = TensorField.vector(grid, vals, name=f"translation {axis}")
            break
    return FamilyInstance(
        name="conformal_torus",
        state=state,
        exact=exact,
        killing=killing,
        params={"lengths": lengths, "u_terms": u.terms},
    )


# -- cigar --------------------------------------------------------------------


def cigar(
    half_width: float = 3.0, nodes: int = 301, order: int = 4
) -> FamilyInstance:
    """Steady gradient soliton g = (dx^2 + dy^2)/(1 + x^2 + y^2) on a box.

    Exact data: s = 4/(1+r^2), Ric = (s/2) g, potential f = -log(1+r^2)
    with grad f = -2 x (so Ric + Hess f = 0, lam = 0).  The chart is a
    truncated patch of a noncompact surface; integrals over it carry a
    truncation warning.
    """
    if half_width <= 0:
        raise ConfigError("half_width must be positive")
    nodes = int(nodes)
    spacing = 2.0 * half_width / (nodes - 1)
    grid = ChartGrid(
        (nodes, nodes), spacing, periodic=False, origin=-half_width
    )
    x, y = grid.coords
    r2 = x**2 + y**2
    w = 1.0 / (1.0 + r2)

    g = w[..., None, None] * np.eye(2)
    state = MetricState(grid, g, order=order)

    scal = 4.0 * w
    ricci = (2.0 * w**2)[..., None, None] * np.eye(2)
    riemann = _constant_curvature_riemann(2.0 * w, g)
    # conformal factor u = -log(1+r^2)/2, d_i u = -x_i * w
    du = -np.stack([x, y], axis=-1) * w[..., None]
    eye = np.eye(2)
    gamma = (
        np.einsum("...i,kj->...kij", du, eye)
        + np.einsum("...j,ki->...kij", du, eye)
        - np.einsum("...k,ij->...kij", du, eye)
    )
    exact = ExactCurvature(
        scalar=scal, ricci=ricci, riemann=riemann, christoffel=gamma
    )
    potential = TensorField.scalar(grid, -np.log1p(r2), name="f")
    xi = TensorField.vector(grid, -2.0 * np.stack([x, y], axis=-1), name="xi")
    return FamilyInstance(
        name="cigar",
        state=state,
        exact=exact,
        lam=0.0,
        potential=potential,
        soliton_vector=xi,
        params={"half_width": float(half_width)},
    )


# -- gaussian soliton ---------------------------------------------------------


def gaussian_shrinker(
    lam: float = -0.5,
    half_width: float = 2.0,
    nodes: int = 41,
    dim: int = 2,
    order: int = 4,
) -> FamilyInstance:
    """Flat metric with quadratic potential f = -lam |x|^2 / 2.

    Hess f = -lam delta and Ric = 0, so Ric + Hess f + lam g = 0 holds
    identically; for lam = -1/2 this is f = |x|^2/4.  Quadratic data is
    differentiated exactly by the stencils, so every residual is
    roundoff-class.
    """
    if lam >= 0:
        raise ConfigError("the shrinking convention requires lam < 0")
    if half_width <= 0:
        raise ConfigError("half_width must be positive")
    nodes = int(nodes)
    spacing = 2.0 * half_width / (nodes - 1)
    grid = ChartGrid(
        (nodes,) * dim, spacing, periodic=False, origin=-half_width
    )
    xs = np.stack(grid.coords, axis=-1)
    eye = np.broadcast_to(np.eye(dim), grid.shape + (dim, dim)).copy()
    state = MetricState(grid, eye, order=order)
    exact = ExactCurvature(
        scalar=np.zeros(grid.shape),
        ricci=np.zeros(grid.shape + (dim, dim)),
        riemann=np.zeros(grid.shape + (dim,) * 4),
        christoffel=np.zeros(grid.shape + (dim,) * 3),
    )
    f_val = -0.5 * lam * np.sum(xs**2, axis=-1)
    return FamilyInstance(
        name="gaussian_shrinker",
        state=state,
        exact=exact,
        lam=float(lam),
        potential=TensorField.scalar(grid, f_val, name="f"),
        soliton_vector=TensorField.vector(grid, -lam * xs, name="xi"),
        stencil_exact=True,
        params={"half_width": float(half_width), "lambda": float(lam)},
    )


# -- round sphere -------------------------------------------------------------


def unit_sphere_area(n: int) -> float:
    """Surface measure of the unit n-sphere."""
    return 2.0 * math.pi ** ((n + 1) / 2.0) / _gamma_fn((n + 1) / 2.0)


@dataclass(frozen=True)
class RoundSphere:
    """Closed-form round sphere of dimension n and initial radius r0.

    The sphere is never run through the grid engine as a closed manifold
    (there is no global singularity-free chart); its Ricci flow lives in
    the exact one-parameter reduction r(t)^2 = r0^2 - 2(n-1) t.
    """

    dim: int = 2
    radius: float = 1.0

    def __post_init__(self):
        if self.dim < 2:
            raise ConfigError("a round sphere needs dimension >= 2")
        if self.radius <= 0:
            raise ConfigError("radius must be positive")

    @property
    def extinction_time(self) -> float:
        return self.radius**2 / (2.0 * (self.dim - 1))

    def radius_at(self, t: float) -> float:
        r_sq = self.radius**2 - 2.0 * (self.dim - 1) * t
        if r_sq <= 0.0:
            raise ExtinctionError(t, self.extinction_time)
        return math.sqrt(r_sq)

    def scalar_at(self, t: float = 0.0) -> float:
        n = self.dim
        return n * (n - 1) / self.radius_at(t) ** 2

    def ricci_coeff_at(self, t: float = 0.0) -> float:
        """Ric = coeff * g with coeff = (n-1)/r^2."""
        return (self.dim - 1) / self.radius_at(t) ** 2

    def ricci_norm_sq_at(self, t: float = 0.0) -> float:
        s = self.scalar_at(t)
        return s * s / self.dim

    def volume_at(self, t: float = 0.0) -> float:
        return unit_sphere_area(self.dim) * self.radius_at(t) ** self.dim

    def min_scalar_bound(self, t: float) -> float:
        """Lower barrier 1/((n/s(0)) - 2t) that the flow must respect."""
        s0 = self.scalar_at(0.0)
        return 1.0 / (self.dim / s0 - 2.0 * t)

    def bound_blowup_time(self) -> float:
        """Latest time the barrier allows: n/(2 s_min(0))."""
        return self.dim / (2.0 * self.scalar_at(0.0))

    def scalar_evolution_residual(self, t: float) -> float:
        """|ds/dt - 2 s^2/n| from the closed form (Lap s = 0 pointwise)."""
        n = self.dim
        r = self.radius_at(t)
        lhs = 2.0 * n * (n - 1) ** 2 / r**4
        rhs = 2.0 * self.scalar_at(t) ** 2 / n
        return abs(lhs - rhs)

    def eineq1_at(self, t: float) -> float:
        """g^{jk} g^{il} d/dt R_ijkl in closed form: 2 n (n-1)^2 / r^4."""
        n = self.dim
        r = self.radius_at(t)
        drm_coeff = -2.0 * (n - 1) / r**2  # d/dt Rm = coeff * Rm
        return drm_coeff * (-self.scalar_at(t))


def sphere_flow_closed_form(r0: float, n: int, t: float) -> tuple[float, float]:
    """Exact (r(t), s(t)) for the shrinking round sphere."""
    sphere = RoundSphere(dim=n, radius=r0)
    r = sphere.radius_at(t)
    return r, n * (n - 1) / r**2


def sphere_band(
    radius: float = 1.0,
    n_theta: int = 48,
    n_phi: int = 96,
    theta_margin: float = 0.3,
    order: int = 4,
) -> FamilyInstance:
    """Polar-cap-free chart of the round 2-sphere for pointwise FD checks.

    Covers theta in [margin, pi - margin] (truncated axis) times a full
    phi circle; g = diag(r^2, r^2 sin^2 theta).  Used only for local
    identity verification, never as a closed manifold.
    """
    if not 0.0 < theta_margin < 0.5 * math.pi:
        raise ConfigError("theta_margin must lie in (0, pi/2)")
    n_theta, n_phi = int(n_theta), int(n_phi)
    h_theta = (math.pi - 2.0 * theta_margin) / (n_theta - 1)
    h_phi = TWO_PI / n_phi
    grid = ChartGrid(
        (n_theta, n_phi),
        (h_theta, h_phi),
        periodic=(False, True),
        origin=(theta_margin, 0.0),
    )
    theta, _ = grid.coords
    sin_t, cos_t = np.sin(theta), np.cos(theta)

    g = np.zeros(grid.shape + (2, 2))
    g[..., 0, 0] = radius**2
    g[..., 1, 1] = (radius * sin_t) ** 2
    state = MetricState(grid, g, order=order)

    scal = np.full(grid.shape, 2.0 / radius**2)
    ricci = g / radius**2
    riemann = _constant_curvature_riemann(1.0 / radius**2, g)
    gamma = np.zeros(grid.shape + (2, 2, 2))
    gamma[..., 0, 1, 1] = -sin_t * cos_t  # Gamma^theta_phi,phi
    gamma[..., 1, 0, 1] = cos_t / sin_t  # Gamma^phi_theta,phi
    gamma[..., 1, 1, 0] = cos_t / sin_t
    exact = ExactCurvature(
        scalar=scal, ricci=ricci, riemann=riemann, christoffel=gamma
    )
    killing = np.zeros(grid.shape + (2,))
    killing[..., 1] = 1.0  # the rotation field d/dphi
    lam = -(2 - 1) / radius**2
    return FamilyInstance(
        name="round_sphere_band",
        state=state,
        exact=exact,
        lam=lam,
        potential=TensorField.scalar(grid, np.zeros(grid.shape), name="f"),
        soliton_vector=TensorField.vector(
            grid, np.zeros(grid.shape + (2,)), name="xi"
        ),
        killing=TensorField.vector(grid, killing, name="rotation"),
        params={"radius": float(radius), "theta_margin": float(theta_margin)},
    )


# -- products -----------------------------------------------------------------


def product_with_circle(
    base: FamilyInstance, nodes: int = 16, length: float = TWO_PI
) -> FamilyInstance:
    """Riemannian product of a 2D family with a flat circle factor.

    Curvature lives entirely in the base factor: the product's Ricci
    tensor is block diagonal with a zero circle block and the scalar
    curvature is the base value, constant along the circle.
    """
    if base.state.grid.dim != 2:
        raise ConfigError("product base must be two-dimensional")
    if base.exact is None or base.exact.riemann is None:
        raise ConfigError("product base needs exact curvature data")
    nodes = int(nodes)
    bgrid = base.state.grid
    grid = ChartGrid(
        bgrid.shape + (nodes,),
        bgrid.spacing + (float(length) / nodes,),
        periodic=bgrid.periodic + (True,),
        origin=bgrid.origin + (0.0,),
    )

    def lift(arr, comp_rank):
        # broadcast along the new circle axis, then embed 2D components
        # into the 3x3 blocks
        tiled = np.repeat(arr[:, :, None, ...], nodes, axis=2)
        out_shape = grid.shape + (3,) * comp_rank
        out = np.zeros(out_shape)
        out[(...,) + tuple(slice(0, 2) for _ in range(comp_rank))] = tiled
        return out

    g = lift(base.state.g, 2)
    g[..., 2, 2] = 1.0
    state = MetricState(grid, g, order=base.state.order)
    exact = ExactCurvature(
        scalar=np.repeat(base.exact.scalar[:, :, None], nodes, axis=2),
        ricci=lift(base.exact.ricci, 2),
        riemann=lift(base.exact.riemann, 4),
        christoffel=lift(base.exact.christoffel, 3)
        if base.exact.christoffel is not None
        else None,
    )
    killing = np.zeros(grid.shape + (3,))
    killing[..., 2] = 1.0
    return FamilyInstance(
        name=f"product({base.name} x circle)",
        state=state,
        exact=exact,
        killing=TensorField.vector(grid, killing, name="circle translation"),
        params={"base": base.name, "circle_nodes": nodes},
    )
