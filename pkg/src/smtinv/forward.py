"""Forward spherical mean transform for spheres centred on the unit sphere.

Centres ``p`` satisfy |p| = 1 and radii ``t`` lie in (0, 1), so a sphere
of radius ``t`` only sees the shell 1 - t < |x| < 1 of the ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import Grid1D, SampledFn, gauss_legendre, integrate_panels
from .phantoms import ModePhantom, RadialPhantom
from .specfun import (
    gegenbauer,
    gegenbauer_at_one,
    mode_indices,
    real_sph_harm,
    surface_area,
)

DEFAULT_QUAD_ORDER = 64


def _check_dim(n: int):
    if n < 3 or n % 2 == 0:
        raise ValueError(f"dimension must be an odd integer >= 3, got {n}")


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(t >= 1):
        raise ValueError("sphere radius t must lie in (0, 1)")
    return t


def _sweep(func, t):
    """Apply a scalar evaluator over scalar or array ``t``."""
    arr = np.asarray(t, dtype=float)
    if arr.ndim == 0:
        return func(float(arr))
    return np.array([func(float(x)) for x in arr.ravel()]).reshape(arr.shape)


@dataclass(frozen=True)
class SmtData:
    """Sampled SMT data for one radial profile or one (q, s) channel."""

    n: int
    samples: SampledFn
    kind: str = "radial"
    q: int = 0
    s: int = 1
    noise_meta: dict | None = None

    def __post_init__(self):
        _check_dim(self.n)
        if self.kind not in ("radial", "mode"):
            raise ValueError(f"unknown data kind {self.kind!r}")
        if self.samples.grid.points[-1] >= 1:
            raise ValueError("data radii must lie in (0, 1)")

    @property
    def grid(self) -> Grid1D:
        return self.samples.grid


def q_kernel(t, u):
    """Q(t, u) = ((1+t)^2 - u^2)(u^2 - (1-t)^2)."""
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    out = ((1 + t) ** 2 - u**2) * (u**2 - (1 - t) ** 2)
    return out if out.ndim else float(out)


def g_moments(i: int, j: int, f: RadialPhantom, t, quad_order: int = DEFAULT_QUAD_ORDER):
    """G_{i,j}(t) = int_{1-t}^1 u f(u) Q(t,u)^i (u^2 + 1 - t^2)^j du."""
    if i < 0 or j < 0:
        raise ValueError("moment indices must be >= 0")
    _check_t(t)
    rule = gauss_legendre(quad_order)

    def one(tt):
        edges = f.panel_edges(1 - tt, 1.0)
        if edges.size == 0:
            return 0.0

        def integrand(u):
            return u * f(u) * q_kernel(tt, u) ** i * (u * u + 1 - tt * tt) ** j

        return integrate_panels(integrand, edges, rule)

    return _sweep(one, t)


def forward_radial_h(f: RadialPhantom, k: int, t, quad_order: int = DEFAULT_QUAD_ORDER):
    """h_k(t) = int_{1-t}^1 u f(u) Q(t,u)^k du, i.e. G_{k,0}."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return g_moments(k, 0, f, t, quad_order)


def _radial_scale(n: int, t, with_4k: bool):
    k = (n - 3) // 2
    scale = surface_area(n - 1) / surface_area(n - 2) * np.asarray(t, dtype=float) ** (n - 2)
    return scale * 4**k if with_4k else scale


def h_from_smt(g, n: int, t):
    """h_k = 4^k w_{n-1} t^(n-2) / w_{n-2} * Rf (radial normalisation)."""
    _check_dim(n)
    if np.any(np.asarray(t) == 0):
        raise ValueError("t must be nonzero")
    out = _radial_scale(n, t, True) * g
    return out if np.ndim(out) else float(out)


def smt_from_h(h, n: int, t):
    """Inverse of :func:`h_from_smt`."""
    _check_dim(n)
    if np.any(np.asarray(t) == 0):
        raise ValueError("t must be nonzero")
    out = h / _radial_scale(n, t, True)
    return out if np.ndim(out) else float(out)


def mode_h_from_smt(g, n: int, t):
    """h_{q,s} = w_{n-1} t^(n-2) / w_{n-2} * g_{q,s} (no 4^k)."""
    _check_dim(n)
    if np.any(np.asarray(t) == 0):
        raise ValueError("t must be nonzero")
    out = _radial_scale(n, t, False) * g
    return out if np.ndim(out) else float(out)


def funk_hecke_oracle(f: RadialPhantom, n: int, t, quad_order: int = DEFAULT_QUAD_ORDER):
    """Rf(p, t) for radial f from the Funk-Hecke reduced integral in s = -p.theta.

    (w_{n-2}/w_{n-1}) int_{t/2}^1 f(sqrt(1 + t^2 - 2 s t)) (1 - s^2)^((n-3)/2) ds
    """
    _check_dim(n)
    _check_t(t)
    k = (n - 3) // 2
    rule = gauss_legendre(quad_order)
    ratio = surface_area(n - 2) / surface_area(n - 1)

    def one(tt):
        def s_of(u):
            return (1 + tt * tt - u * u) / (2 * tt)

        # s is decreasing in u; u in [1-t, 1] <-> s in [t/2, 1]
        edges_u = f.panel_edges(1 - tt, 1.0)
        if edges_u.size == 0:
            return 0.0
        edges_s = np.clip(s_of(edges_u[::-1]), tt / 2, 1.0)

        def integrand(s):
            u = np.sqrt(np.clip(1 + tt * tt - 2 * s * tt, 0.0, None))
            return f(u) * (1 - s * s) ** k

        return ratio * integrate_panels(integrand, edges_s, rule)

    return _sweep(one, t)


# --------------------------------------------------------------------------
# S^2 grids and full-sphere data


@dataclass(frozen=True)
class SphereGrid:
    """Gauss-Legendre in cos(theta) times the trapezoid rule in phi.

    Integrates band-limited functions of degree <= 2 n_theta - 1 in
    cos(theta) and < n_phi in phi exactly.
    """

    n_theta: int
    n_phi: int
    theta: np.ndarray = field(init=False, repr=False)
    phi: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_theta < 1 or self.n_phi < 1:
            raise ValueError("degenerate sphere grid")
        rule = gauss_legendre(self.n_theta)
        theta1 = np.arccos(rule.nodes[::-1])
        phi1 = 2 * math.pi * np.arange(self.n_phi) / self.n_phi
        th, ph = np.meshgrid(theta1, phi1, indexing="ij")
        w = np.outer(rule.weights[::-1], np.full(self.n_phi, 2 * math.pi / self.n_phi))
        for name, val in (("theta", th.ravel()), ("phi", ph.ravel()), ("weights", w.ravel())):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @classmethod
    def for_degree(cls, q_max: int) -> "SphereGrid":
        """Smallest grid on which the Gram matrix of degree <= q_max is exact."""
        return cls(q_max + 1, 2 * q_max + 1)

    def resolves(self, q_max: int) -> bool:
        return self.n_theta >= q_max + 1 and self.n_phi >= 2 * q_max + 1

    @property
    def size(self) -> int:
        return self.weights.size

    def unit_vectors(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.stack([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)], axis=-1)


def _rotation_to(p) -> np.ndarray:
    """Rotation matrix taking the z axis to the unit vector ``p``."""
    p = np.asarray(p, dtype=float)
    p = p / np.linalg.norm(p)
    z = np.array([0.0, 0.0, 1.0])
    c = float(np.dot(z, p))
    if c > 1 - 1e-15:
        return np.eye(3)
    if c < -1 + 1e-15:
        return np.diag([1.0, -1.0, -1.0])
    v = np.cross(z, p)
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx / (1 + c)


def sphere_quadrature_smt(F, p, t: float, grid: SphereGrid) -> float:
    """Average of the scalar field ``F`` over the sphere of radius t centred at p (R^3).

    ``F`` takes an array of points of shape (..., 3). The grid's pole is
    rotated onto ``p`` so radial structure around the origin varies only
    along the Gauss-Legendre direction.
    """
    if t <= 0:
        raise ValueError("sphere radius must be positive")
    if grid.size < 2:
        raise ValueError("degenerate sphere grid")
    p = np.asarray(p, dtype=float)
    dirs = grid.unit_vectors() @ _rotation_to(p).T
    vals = np.asarray(F(p + t * dirs), dtype=float)
    return float(np.dot(grid.weights, vals) / (4 * math.pi))


def forward_mode(phantom: ModePhantom, n: int, t, quad_order: int = DEFAULT_QUAD_ORDER):
    """g_{q,s}(t): SMT coefficient of Y_{q,s} produced by f_{q,s}(r) Y_{q,s}."""
    _check_dim(n)
    _check_t(t)
    q = phantom.q
    f = phantom.profile
    k = (n - 3) // 2
    lam = (n - 2) / 2
    rule = gauss_legendre(quad_order)
    c1 = float(gegenbauer_at_one(q, n))
    ratio = surface_area(n - 2) / surface_area(n - 1)

    def one(tt):
        edges = f.panel_edges(1 - tt, 1.0)
        if edges.size == 0:
            return 0.0

        def integrand(u):
            x = (1 + u * u - tt * tt) / (2 * u)
            return u ** (n - 2) * f(u) * gegenbauer(q, lam, x) * (1 - x * x) ** k

        return ratio / (tt ** (n - 2) * c1) * integrate_panels(integrand, edges, rule)

    return _sweep(one, t)


@dataclass(frozen=True)
class FullSphereData:
    """SMT samples g(theta, t) for n = 3 on a product angular grid times a t grid.

    ``values`` has shape (sphere.size, len(tgrid)).
    """

    sphere: SphereGrid
    tgrid: Grid1D
    values: np.ndarray
    noise_meta: dict | None = None
    n: int = 3

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.sphere.size, len(self.tgrid)):
            raise ValueError(f"values shape {vals.shape} does not match the grids")
        if not np.all(np.isfinite(vals)):
            raise ValueError("non-finite full-sphere samples")
        if self.n != 3:
            raise ValueError("full-sphere data is supported for n = 3 only")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


def simulate_radial(f: RadialPhantom, n: int, grid: Grid1D,
                    quad_order: int = DEFAULT_QUAD_ORDER) -> SmtData:
    """Rf(p, t) on ``grid`` for radial f."""
    k = (n - 3) // 2
    h = forward_radial_h(f, k, grid.points, quad_order)
    g = smt_from_h(h, n, grid.points)
    return SmtData(n, SampledFn(grid, g, f"Rf[{f.label}]"), "radial")


def simulate_mode(phantom: ModePhantom, n: int, grid: Grid1D,
                  quad_order: int = DEFAULT_QUAD_ORDER) -> SmtData:
    g = forward_mode(phantom, n, grid.points, quad_order)
    return SmtData(n, SampledFn(grid, g, f"g[{phantom.q},{phantom.s}]"), "mode",
                   phantom.q, phantom.s)


def simulate_full_sphere(modes: list[ModePhantom], grid: Grid1D, sphere: SphereGrid,
                         quad_order: int = DEFAULT_QUAD_ORDER) -> FullSphereData:
    """g(theta, t) = sum over modes of g_{q,s}(t) Y_{q,s}(theta) on the product grid."""
    values = np.zeros((sphere.size, len(grid)))
    for mode in modes:
        g = forward_mode(mode, 3, grid.points, quad_order)
        y = real_sph_harm(mode.q, mode.s, sphere.theta, sphere.phi)
        values += np.outer(y, g)
    return FullSphereData(sphere, grid, values)


def decompose(data: FullSphereData, q_max: int) -> list[SmtData]:
    """Project g(theta, t) onto Y_{q,s} for every q <= q_max."""
    if q_max < 0:
        raise ValueError("q_max must be >= 0")
    if not data.sphere.resolves(q_max):
        raise ValueError(
            f"angular grid {data.sphere.n_theta}x{data.sphere.n_phi} cannot resolve degree {q_max}"
        )
    sph = data.sphere
    out = []
    for q, s in mode_indices(q_max):
        y = real_sph_harm(q, s, sph.theta, sph.phi)
        coef = (sph.weights * y) @ data.values
        out.append(SmtData(3, SampledFn(data.tgrid, coef, f"g[{q},{s}]"), "mode", q, s,
                           data.noise_meta))
    return out


def add_noise(s: SampledFn, amplitude: float, seed: int = 0) -> tuple[SampledFn, dict]:
    """Add i.i.d. uniform(-amplitude, amplitude) noise from a seeded generator.

    Returns the perturbed samples and the noise record.
    """
    if amplitude < 0:
        raise ValueError("noise amplitude must be >= 0")
    meta = {"distribution": "uniform", "amplitude": float(amplitude), "seed": int(seed)}
    if amplitude == 0:
        return s, meta
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-amplitude, amplitude, size=len(s.grid))
    return s.with_values(s.values + noise), meta


def add_noise_data(data: SmtData, amplitude: float, seed: int = 0) -> SmtData:
    samples, meta = add_noise(data.samples, amplitude, seed)
    return SmtData(data.n, samples, data.kind, data.q, data.s, meta)


def add_noise_full_sphere(data: FullSphereData, amplitude: float, seed: int = 0) -> FullSphereData:
    """Uniform noise on every (angle, t) sample of full-sphere data."""
    if amplitude < 0:
        raise ValueError("noise amplitude must be >= 0")
    meta = {"distribution": "uniform", "amplitude": float(amplitude), "seed": int(seed)}
    if amplitude == 0:
        return FullSphereData(data.sphere, data.tgrid, data.values, meta, data.n)
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-amplitude, amplitude, size=data.values.shape)
    return FullSphereData(data.sphere, data.tgrid, data.values + noise, meta, data.n)
