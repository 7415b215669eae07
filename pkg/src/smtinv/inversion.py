"""Reconstruction of radial profiles and harmonic channels from SMT data.

The data h(t) is turned into L(t) = d/dt D^r h with D = t^{-1} d/dt, and
the linear ODE sum_m a_m(t) f^(m)(1 - t) = L(t) is integrated in
y(t) = f(1 - t) from the support gap t = eps' upward with zero initial
state. The solver itself only looks backwards in t; with the trailing-window
differentiator (:data:`CAUSAL_POLYFIT`) the reconstruction at r = 1 - t
depends on data at radii <= t alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .forward import FullSphereData, SmtData, SphereGrid, decompose, h_from_smt, mode_h_from_smt
from .numerics import (
    DiffMethod,
    Grid1D,
    LocalPolyfit,
    SampledFn,
    cumulative_integrate,
    differentiate,
    lookahead,
)
from .specfun import (
    d_weights,
    mode_prefactor,
    ode_coeff_eval,
    ode_coeffs,
    radial_prefactor,
    real_sph_harm,
)

# relative to max|h|; h_k ~ f t^(2k+1) near the gap, so looser values leave
# a visible f(1 - eps') behind for k >= 2
GAP_REL_THRESHOLD = 1e-14
ANALYTIC_DIMS = (3, 5, 7)

# a decomposed channel at or below this fraction of max|g| is round-off, not signal
EMPTY_CHANNEL_REL = 1e-12

DEFAULT_DIFF = LocalPolyfit()
# window ends at the evaluation point: f(r) then depends on data t <= 1 - r only
CAUSAL_POLYFIT = LocalPolyfit(align="trailing")


class InversionError(ValueError):
    """The data or window cannot support the requested reconstruction."""


@dataclass(frozen=True)
class InversionOptions:
    diff: DiffMethod = DEFAULT_DIFF
    eps_prime: float | None = None
    gap_rel_threshold: float = GAP_REL_THRESHOLD
    method: str = "ode"


@dataclass
class ReconstructionResult:
    profile: SampledFn
    eps_prime: float
    method: str
    metrics: dict = field(default_factory=dict)
    q: int = 0
    s: int = 1
    rhs: SampledFn | None = None


# --------------------------------------------------------------------------
# the D operator on samples


def _derivatives(h: SampledFn, orders, method: DiffMethod) -> dict[int, np.ndarray]:
    return {j: differentiate(h, j, method).values for j in orders}


def apply_D_power(h: SampledFn, r: int, diff: DiffMethod | None = None) -> SampledFn:
    """D^r h = sum_j w_{r,j} h^(j) / t^(2r-j) on the grid of ``h``."""
    if r < 0:
        raise ValueError("D power must be >= 0")
    if r == 0:
        return h
    diff = DEFAULT_DIFF if diff is None else diff
    t = h.points
    ders = _derivatives(h, range(1, r + 1), diff)
    out = np.zeros_like(t)
    for j, w in enumerate(d_weights(r), start=1):
        out += float(w) * ders[j] / t ** (2 * r - j)
    return h.with_values(out, f"D^{r}({h.label})")


def assemble_rhs(h: SampledFn, r: int, diff: DiffMethod | None = None,
                 t_start: float | None = None) -> SampledFn:
    """L(t) = d/dt D^r h, zeroed below ``t_start``.

    Uses the product rule on the weighted-derivative expansion of D^r so
    every term is a plain derivative of the data.
    """
    if r < 0:
        raise ValueError("D power must be >= 0")
    diff = DEFAULT_DIFF if diff is None else diff
    t = h.points
    try:
        ders = _derivatives(h, range(1, r + 2), diff)
    except ValueError as exc:
        raise InversionError(str(exc)) from exc
    if r == 0:
        out = ders[1].copy()
    else:
        out = np.zeros_like(t)
        for j, w in enumerate(d_weights(r), start=1):
            p = 2 * r - j
            out += float(w) * (ders[j + 1] / t**p - p * ders[j] / t ** (p + 1))
    if t_start is not None:
        out[t < t_start] = 0.0
    return h.with_values(out, f"dD^{r}({h.label})")


def detect_support_gap(h: SampledFn, threshold: float) -> float:
    """Largest grid point eps' with |h| <= threshold on the whole prefix (0, eps']."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    above = np.abs(h.values) > threshold
    if not above.any():
        return float(h.points[-1])
    first = int(np.argmax(above))
    return float(h.points[max(first - 1, 0)])


# --------------------------------------------------------------------------
# ODE assembly and integration


@dataclass(frozen=True)
class OdeProblem:
    """Order-K linear IVP sum_m c_m(t) y^(m)(t) = L(t), y = f(1 - t), zero state at t_start.

    ``prefactor`` multiplies the exact coefficient table; ``c_m`` absorbs the
    sign (-1)^m from differentiating f(1 - t).
    """

    K: int
    prefactor: object
    rhs: SampledFn
    t_start: float
    t_end: float

    def __post_init__(self):
        if not 0 < self.t_start < self.t_end < 1:
            raise InversionError(
                f"empty reconstruction window: t_start={self.t_start}, t_end={self.t_end}"
            )

    def coefficient(self, m: int, t):
        table = ode_coeffs(self.K)
        return (-1) ** m * ode_coeff_eval(table, m, t, self.prefactor)

    def leading(self, t):
        return self.coefficient(self.K, t)


def solve_ode(problem: OdeProblem) -> SampledFn:
    """Classical RK4 on the data grid between ``t_start`` and ``t_end``.

    L at half steps comes from a trailing cubic interpolant so that the
    solution at a grid point only uses L up to that point. Returns y on
    the grid points inside the window.
    """
    K = problem.K
    grid_t = problem.rhs.points
    keep = (grid_t >= problem.t_start - 1e-15) & (grid_t <= problem.t_end + 1e-15)
    t = grid_t[keep]
    L = problem.rhs.values[keep]
    if t.size < 2:
        raise InversionError("reconstruction window holds fewer than two grid points")
    lead = problem.leading(t)
    if np.any(lead == 0) or np.any(np.sign(lead) != np.sign(lead[0])):
        raise InversionError("leading ODE coefficient vanishes in the window")

    if K == 0:
        return SampledFn(Grid1D(t), L / problem.coefficient(0, t), "y")

    mids = 0.5 * (t[:-1] + t[1:])
    idx = np.arange(t.size - 1)
    L_mid = _trailing_cubic(grid_t, problem.rhs.values, mids, np.flatnonzero(keep)[idx])
    coef_nodes = np.array([problem.coefficient(m, t) for m in range(K + 1)])
    coef_mids = np.array([problem.coefficient(m, mids) for m in range(K + 1)])

    def rhs(c, load, state):
        top = (load - np.dot(c[:K], state)) / c[K]
        return np.append(state[1:], top)

    y = np.zeros(t.size)
    state = np.zeros(K)
    for i in range(t.size - 1):
        dt = t[i + 1] - t[i]
        cn, cm, cn1 = coef_nodes[:, i], coef_mids[:, i], coef_nodes[:, i + 1]
        k1 = rhs(cn, L[i], state)
        k2 = rhs(cm, L_mid[i], state + 0.5 * dt * k1)
        k3 = rhs(cm, L_mid[i], state + 0.5 * dt * k2)
        k4 = rhs(cn1, L[i + 1], state + dt * k3)
        state = state + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        y[i + 1] = state[0]
    return SampledFn(Grid1D(t), y, "y")


def _trailing_cubic(x, y, xq, left):
    """Cubic through the nodes left-2..left+1 (left+1 is the right end of the interval)."""
    n = x.size
    start = np.clip(left - 2, 0, n - 4)
    out = np.zeros(xq.size)
    for j in range(4):
        basis = np.ones(xq.size)
        for m in range(4):
            if m != j:
                basis *= (xq - x[start + m]) / (x[start + j] - x[start + m])
        out += basis * y[start + j]
    return out


# --------------------------------------------------------------------------
# inversion drivers


def _window(data: SmtData, h: SampledFn, eps: float | None, options: InversionOptions,
            max_order: int = 1):
    """Integration window [eps', 1 - eps] on the data grid.

    An auto-detected eps' is moved back by the differentiator's look-ahead
    (for derivatives up to ``max_order``): estimates just before the gap
    already see the first nonzero data, and cutting them off would drop
    part of the right-hand side when f jumps at the edge of its support.
    """
    t = data.grid.points
    if options.eps_prime is None:
        thr = options.gap_rel_threshold * float(np.max(np.abs(h.values)) or 1.0)
        gap = detect_support_gap(h, thr)
        back = max(lookahead(options.diff, d) for d in range(1, max_order + 1))
        i = int(np.searchsorted(t, gap - 1e-15))
        eps_prime = float(t[max(i - back, 0)])
    else:
        eps_prime = float(options.eps_prime)
        snapped = t[t >= eps_prime - 1e-12]
        if snapped.size == 0:
            raise InversionError(f"eps'={eps_prime} lies beyond the data grid")
        eps_prime = float(snapped[0])
    t_end = float(t[-1]) if eps is None else 1.0 - eps
    if t_end > t[-1] + 1e-12:
        raise InversionError(f"data ends at t={t[-1]:.6g}, cannot reach r={eps}")
    if eps_prime >= t_end:
        raise InversionError(f"empty window: eps'={eps_prime:.6g} >= 1 - eps = {t_end:.6g}")
    return eps_prime, t_end


def _to_profile(y: SampledFn, data_grid: Grid1D, eps_prime: float, label: str) -> SampledFn:
    """Map y(t) = f(1 - t) to f on ascending radii, zero for t < eps'."""
    t_all = data_grid.points
    pre = t_all[t_all < y.points[0] - 1e-15]
    t = np.concatenate([pre, y.points])
    vals = np.concatenate([np.zeros(pre.size), y.values])
    r = 1.0 - t[::-1]
    return SampledFn(Grid1D(r), vals[::-1], label)


def _solve(data: SmtData, h: SampledFn, r_pow: int, K: int, prefactor, eps, options):
    eps_prime, t_end = _window(data, h, eps, options, r_pow + 1)
    L = assemble_rhs(h, r_pow, options.diff, eps_prime)
    problem = OdeProblem(K, prefactor, L, eps_prime, t_end)
    y = solve_ode(problem)
    return y, L, eps_prime


def _check_data(data: SmtData, kind: str):
    if data.kind != kind:
        raise InversionError(f"expected {kind} data, got {data.kind}")


def invert_radial(data: SmtData, eps: float | None = None,
                  options: InversionOptions | None = None) -> ReconstructionResult:
    """Recover a radial f on (eps, 1) from its SMT in odd dimension n."""
    options = options or InversionOptions()
    _check_data(data, "radial")
    if options.method != "ode":
        return invert_analytic(data, eps, options)
    k = (data.n - 3) // 2
    h = data.samples.with_values(h_from_smt(data.samples.values, data.n, data.grid.points), "h")
    y, L, eps_prime = _solve(data, h, 2 * k, k, radial_prefactor(k), eps, options)
    profile = _to_profile(y, data.grid, eps_prime, "f")
    return ReconstructionResult(profile, eps_prime, "ode", rhs=L)


def invert_mode(data: SmtData, eps: float | None = None,
                options: InversionOptions | None = None) -> ReconstructionResult:
    """Recover f_{q,s} on (eps, 1) from the SMT channel g_{q,s}."""
    options = options or InversionOptions()
    _check_data(data, "mode")
    n, q = data.n, data.q
    k = (n - 3) // 2
    h = data.samples.with_values(mode_h_from_smt(data.samples.values, n, data.grid.points), "h")
    y, L, eps_prime = _solve(data, h, q + 2 * k, q + k, mode_prefactor(q, k), eps, options)
    ftilde = _to_profile(y, data.grid, eps_prime, "f~")
    r = ftilde.points
    profile = ftilde.with_values(r**q * ftilde.values, f"f[{q},{data.s}]")
    return ReconstructionResult(profile, eps_prime, "ode", q=q, s=data.s, rhs=L)


def invert_analytic(data: SmtData, eps: float | None = None,
                    options: InversionOptions | None = None) -> ReconstructionResult:
    """Dispatch to the closed-form inverter for n = 3, 5 or 7."""
    if data.n == 3:
        return analytic_invert_k0(data, eps, options)
    if data.n == 5:
        return analytic_invert_k1(data, eps, options)
    if data.n == 7:
        return analytic_invert_k2(data, eps, options)
    raise InversionError("analytic back-end available only for n ∈ {3,5,7}")


def _analytic_setup(data: SmtData, n: int, eps, options):
    options = options or InversionOptions()
    _check_data(data, "radial")
    if data.n != n:
        raise InversionError(f"this closed form needs n={n} data, got n={data.n}")
    k = (n - 3) // 2
    h = data.samples.with_values(h_from_smt(data.samples.values, n, data.grid.points), "h")
    eps_prime, t_end = _window(data, h, eps, options, 2 * k + 1)
    L = assemble_rhs(h, 2 * k, options.diff, eps_prime)
    t_all = data.grid.points
    keep = (t_all >= eps_prime - 1e-15) & (t_all <= t_end + 1e-15)
    return L, eps_prime, keep


def analytic_invert_k0(data: SmtData, eps: float | None = None,
                       options: InversionOptions | None = None) -> ReconstructionResult:
    """n = 3: f(r) = h'(1 - r) / r."""
    L, eps_prime, keep = _analytic_setup(data, 3, eps, options)
    t = L.points[keep]
    y = SampledFn(Grid1D(t), L.values[keep] / (1 - t))
    return ReconstructionResult(_to_profile(y, data.grid, eps_prime, "f"), eps_prime,
                                "analytic-k0", rhs=L)


def analytic_invert_k1(data: SmtData, eps: float | None = None,
                       options: InversionOptions | None = None) -> ReconstructionResult:
    """n = 5 via the integrating factor e^t (1-t)^3 / t."""
    L, eps_prime, keep = _analytic_setup(data, 5, eps, options)
    t = L.points[keep]
    integrand = SampledFn(Grid1D(t), (1 - t) * np.exp(t) * L.values[keep])
    acc = cumulative_integrate(integrand).values
    y = SampledFn(Grid1D(t), t * np.exp(-t) / (8 * (1 - t) ** 3) * acc)
    return ReconstructionResult(_to_profile(y, data.grid, eps_prime, "f"), eps_prime,
                                "analytic-k1", rhs=L)


def k2_homogeneous(t):
    """The two complementary solutions of the n = 7 equation in y(t) = f(1 - t)."""
    t = np.asarray(t, dtype=float)
    a = math.sqrt(3) / 2 * t
    damp = np.exp(-1.5 * t) / (1 - t) ** 5
    p = t - 2 * t * t
    f1 = damp * (p * np.cos(a) + math.sqrt(3) * t * np.sin(a))
    f2 = damp * (math.sqrt(3) * t * np.cos(a) - p * np.sin(a))
    return f1, f2


def k2_wronskian(t):
    """W(f1, f2) = 2 sqrt(3) t^3 e^{-3t} / (1-t)^9 (Abel's formula)."""
    t = np.asarray(t, dtype=float)
    return 2 * math.sqrt(3) * t**3 * np.exp(-3 * t) / (1 - t) ** 9


def analytic_invert_k2(data: SmtData, eps: float | None = None,
                       options: InversionOptions | None = None) -> ReconstructionResult:
    """n = 7 by variation of parameters."""
    L, eps_prime, keep = _analytic_setup(data, 7, eps, options)
    t = L.points[keep]
    f1, f2 = k2_homogeneous(t)
    forcing = t**2 / (128 * (1 - t) ** 3) * L.values[keep] / k2_wronskian(t)
    grid = Grid1D(t)
    i2 = cumulative_integrate(SampledFn(grid, f2 * forcing)).values
    i1 = cumulative_integrate(SampledFn(grid, f1 * forcing)).values
    y = SampledFn(grid, -f1 * i2 + f2 * i1)
    return ReconstructionResult(_to_profile(y, data.grid, eps_prime, "f"), eps_prime,
                                "analytic-k2", rhs=L)


# --------------------------------------------------------------------------
# general functions on the ball (n = 3)


def invert_full_sphere(data: FullSphereData, q_max: int, eps: float | None = None,
                       options: InversionOptions | None = None) -> list[ReconstructionResult]:
    """Decompose, then invert every (q, s) channel independently.

    Channels whose coefficients stay below ``EMPTY_CHANNEL_REL * max|g|``
    are reported as zero profiles instead of amplifying round-off.
    """
    options = options or InversionOptions()
    floor = EMPTY_CHANNEL_REL * float(np.max(np.abs(data.values)))
    results = []
    for channel in decompose(data, q_max):
        if np.max(np.abs(channel.samples.values)) <= floor:
            zero = _zero_result(channel, eps)
            results.append(zero)
            continue
        results.append(invert_mode(channel, eps, options))
    return results


def _zero_result(channel: SmtData, eps) -> ReconstructionResult:
    t = channel.grid.points
    if eps is not None:
        t = t[t <= 1 - eps + 1e-15]
    r = 1.0 - t[::-1]
    prof = SampledFn(Grid1D(r), np.zeros(r.size), f"f[{channel.q},{channel.s}]")
    return ReconstructionResult(prof, float(t[-1]), "ode", q=channel.q, s=channel.s)


def recombine(modes: list[ReconstructionResult], sphere: SphereGrid) -> tuple[np.ndarray, np.ndarray]:
    """f(r theta) = sum f_{q,s}(r) Y_{q,s}(theta) on sphere nodes x radii.

    Returns (radii, values) with values of shape (sphere.size, len(radii)).
    """
    if not modes:
        raise ValueError("no modes to recombine")
    r = modes[0].profile.points
    for m in modes[1:]:
        if m.profile.points.shape != r.shape or not np.allclose(m.profile.points, r, rtol=0, atol=1e-14):
            raise ValueError("modes live on different radial grids")
    field_ = np.zeros((sphere.size, r.size))
    for m in modes:
        y = real_sph_harm(m.q, m.s, sphere.theta, sphere.phi)
        field_ += np.outer(y, m.profile.values)
    return r, field_


# --------------------------------------------------------------------------
# scoring


def error_metrics(rec: SampledFn, truth, interval) -> dict:
    """Relative L2 and max-abs error of ``rec`` against ``truth`` on [a, b].

    Norms use trapezoid weights on the grid points of ``rec`` inside the
    interval. When the truth vanishes there, absolute norms are reported
    and ``rel_l2`` is None.
    """
    a, b = map(float, interval)
    r = rec.points
    sel = (r >= a - 1e-12) & (r <= b + 1e-12)
    if sel.sum() < 2:
        raise ValueError(f"fewer than two reconstruction points in [{a}, {b}]")
    x = r[sel]
    err = rec.values[sel] - np.asarray(truth(x), dtype=float)
    ref = np.asarray(truth(x), dtype=float)
    w = np.zeros(x.size)
    dx = np.diff(x)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    err_l2 = math.sqrt(float(np.dot(w, err**2)))
    ref_l2 = math.sqrt(float(np.dot(w, ref**2)))
    out = {
        "interval": [a, b],
        "abs_l2": err_l2,
        "max_abs": float(np.max(np.abs(err))),
        "truth_l2": ref_l2,
        "rel_l2": err_l2 / ref_l2 if ref_l2 > 0 else None,
        "points": int(x.size),
    }
    return out


def with_metrics(result: ReconstructionResult, truth, intervals) -> ReconstructionResult:
    metrics = [error_metrics(result.profile, truth, iv) for iv in intervals]
    return replace(result, metrics={"intervals": metrics})
