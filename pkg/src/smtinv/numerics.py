"""Grids, sampled functions, quadrature, interpolation and differentiation.

Everything here works on one-dimensional data living in the unit interval:
radii ``r`` of a profile or radii ``t`` of the integration spheres.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Literal, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

UNIFORM_RTOL = 1e-12


@dataclass(frozen=True)
class Grid1D:
    """Strictly increasing sample locations in (0, 1]."""

    points: np.ndarray
    uniform: bool = field(init=False)
    spacing: float | None = field(init=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).ravel()
        if pts.size < 2:
            raise ValueError("a grid needs at least two points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("grid points must be finite")
        diffs = np.diff(pts)
        if np.any(diffs <= 0):
            raise ValueError("grid points must be strictly increasing")
        if pts[0] <= 0 or pts[-1] > 1:
            raise ValueError("grid points must lie in (0, 1]")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        step = (pts[-1] - pts[0]) / (pts.size - 1)
        # rounding of the endpoints alone can exceed 1e-12 relative on fine grids
        tol = max(UNIFORM_RTOL * step, 8 * np.spacing(abs(pts[-1])))
        uniform = bool(np.all(np.abs(diffs - step) <= tol))
        object.__setattr__(self, "uniform", uniform)
        object.__setattr__(self, "spacing", float(step) if uniform else None)

    @classmethod
    def linspace(cls, start: float, stop: float, num: int) -> "Grid1D":
        return cls(np.linspace(start, stop, num))

    def __len__(self) -> int:
        return self.points.size

    @property
    def hull(self) -> tuple[float, float]:
        return float(self.points[0]), float(self.points[-1])


@dataclass(frozen=True)
class SampledFn:
    """Real samples of a function on a :class:`Grid1D`."""

    grid: Grid1D
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).ravel()
        if vals.size != len(self.grid):
            raise ValueError(
                f"{vals.size} values for a grid of {len(self.grid)} points"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"non-finite samples in {self.label or 'function'}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, grid: Grid1D, func: Callable, label: str = "") -> "SampledFn":
        return cls(grid, np.asarray(func(grid.points), dtype=float), label)

    @property
    def points(self) -> np.ndarray:
        return self.grid.points

    def with_values(self, values, label: str | None = None) -> "SampledFn":
        return SampledFn(self.grid, values, self.label if label is None else label)


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    order: int


@lru_cache(maxsize=64)
def gauss_legendre(order: int) -> QuadratureRule:
    """Gauss-Legendre rule with ``order`` nodes on [-1, 1]."""
    if int(order) != order or order < 1:
        raise ValueError(f"quadrature order must be a positive integer, got {order}")
    nodes, weights = np.polynomial.legendre.leggauss(int(order))
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes, weights, int(order))


def integrate(f: Callable, a: float, b: float, rule: QuadratureRule) -> float:
    """Affinely mapped quadrature estimate of the integral of ``f`` over [a, b].

    ``f`` is called once with the array of mapped nodes.
    """
    if not a < b:
        raise ValueError(f"empty or reversed interval [{a}, {b}]")
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * rule.nodes
    return float(half * np.dot(rule.weights, f(x)))


def integrate_panels(f: Callable, edges, rule: QuadratureRule) -> float:
    """Composite rule over consecutive panels ``edges[i]..edges[i+1]``.

    Zero-length panels are skipped, so callers can pass clipped breakpoints.
    """
    edges = np.asarray(edges, dtype=float)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            total += integrate(f, a, b, rule)
    return total


# --------------------------------------------------------------------------
# differentiation


@dataclass(frozen=True)
class CentralStencil:
    """Finite-difference stencil on ``width`` equispaced points."""

    width: int = 9

    def __post_init__(self):
        if self.width < 2:
            raise ValueError("stencil width must be >= 2")

    def window(self, d: int) -> int:
        return self.width

    def __str__(self):
        return f"central:width={self.width}"


@dataclass(frozen=True)
class LocalPolyfit:
    """Least-squares polynomial fit over a sliding window (Savitzky-Golay).

    ``degree`` and ``window`` default to ``d + 4`` and ``2 d + 9`` for the
    d-th derivative. ``align='trailing'`` places every window at or before
    the evaluation point, which makes the estimate causal in the grid
    direction.
    """

    degree: int | None = None
    window: int | None = None
    align: Literal["centered", "trailing"] = "centered"
    extra_window: int = 0

    def __post_init__(self):
        if self.align not in ("centered", "trailing"):
            raise ValueError(f"align must be 'centered' or 'trailing', got {self.align!r}")
        if self.degree is not None and self.degree < 1:
            raise ValueError("fit degree must be >= 1")
        if self.window is not None and self.degree is not None and self.window <= self.degree:
            raise ValueError("window must hold more points than the fit degree")
        if self.extra_window < 0:
            raise ValueError("extra_window must be >= 0")

    def fit_degree(self, d: int) -> int:
        return self.degree if self.degree is not None else d + 4

    def window_size(self, d: int) -> int:
        w = self.window if self.window is not None else 2 * d + 9
        return w + self.extra_window

    def __str__(self):
        """Spec string accepted by :func:`parse_diff_method`; unset fields are omitted."""
        parts = []
        if self.degree is not None:
            parts.append(f"degree={self.degree}")
        if self.window is not None:
            parts.append(f"window={self.window}")
        if self.extra_window:
            parts.append(f"extra_window={self.extra_window}")
        if self.align != "centered":
            parts.append(f"align={self.align}")
        return "polyfit" + (":" + ",".join(parts) if parts else "")


DiffMethod = Union[CentralStencil, LocalPolyfit]


def parse_diff_method(spec: str) -> DiffMethod:
    """Parse ``'polyfit'``, ``'polyfit:degree=9,window=21'``, ``'central:width=9'``."""
    name, _, params = spec.partition(":")
    name = name.strip().lower()
    if name in ("polyfit", "local-polyfit", "savgol"):
        cls, allowed = LocalPolyfit, ("degree", "window", "align", "extra_window")
    elif name in ("central", "central-stencil", "stencil"):
        cls, allowed = CentralStencil, ("width",)
    else:
        raise ValueError(f"unknown differentiation method {spec!r}")
    kwargs = {}
    for item in filter(None, params.split(",")):
        key, _, val = item.partition("=")
        key = key.strip().replace("-", "_")
        if key not in allowed:
            raise ValueError(f"{name}: unknown parameter {key!r} (allowed: {', '.join(allowed)})")
        try:
            kwargs[key] = val.strip() if key == "align" else int(val)
        except ValueError:
            raise ValueError(f"{name}: parameter {key} needs an integer, got {val!r}") from None
    return cls(**kwargs)


def fornberg_weights(x0: float, xs, d: int) -> np.ndarray:
    """Finite-difference weights for the d-th derivative at ``x0`` from nodes ``xs``.

    B. Fornberg, Math. Comp. 51 (1988) 699-706.
    """
    xs = np.asarray(xs, dtype=float)
    n = xs.size
    c = np.zeros((n, d + 1))
    c1, c4 = 1.0, xs[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, d)
        c2, c5, c4 = 1.0, c4, xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, d]


def _polyfit_weights(x0: float, xs, d: int, degree: int) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    scale = 0.5 * (xs[-1] - xs[0])
    u = (xs - x0) / scale
    vander = np.vander(u, degree + 1, increasing=True)
    return math.factorial(d) * np.linalg.pinv(vander)[d] / scale**d


def _window_starts(n: int, w: int, align: str) -> np.ndarray:
    idx = np.arange(n)
    if align == "trailing":
        start = idx - (w - 1)
    else:
        start = idx - (w - 1) // 2
    return np.clip(start, 0, n - w)


def lookahead(method: DiffMethod, d: int) -> int:
    """Grid points beyond the evaluation point that an interior estimate of order d reads."""
    if isinstance(method, CentralStencil):
        w = method.window(d)
        return w - 1 - (w - 1) // 2
    if method.align == "trailing":
        return 0
    w = method.window_size(d)
    return w - 1 - (w - 1) // 2


def differentiate(s: SampledFn, d: int, method: DiffMethod | None = None) -> SampledFn:
    """Estimate the d-th derivative of ``s`` on its own grid.

    Windows keep a fixed size everywhere; near the ends they slide inwards so
    the boundary estimates are one-sided with the same number of points.
    """
    method = LocalPolyfit() if method is None else method
    if d < 1:
        raise ValueError("derivative order must be >= 1")
    n = len(s.grid)
    w = method.window(d) if isinstance(method, CentralStencil) else method.window_size(d)
    if isinstance(method, CentralStencil):
        if not s.grid.uniform:
            raise ValueError("central stencils need a uniform grid")
        if w < d + 1:
            raise ValueError(f"a {w}-point stencil cannot resolve derivative order {d}")
        align = "centered"
        weights_fn = lambda x0, xs: fornberg_weights(x0, xs, d)  # noqa: E731
    else:
        degree = method.fit_degree(d)
        if degree < d:
            raise ValueError(f"fit degree {degree} cannot resolve derivative order {d}")
        if w <= degree:
            raise ValueError(f"window of {w} points too small for degree {degree}")
        align = method.align
        weights_fn = lambda x0, xs: _polyfit_weights(x0, xs, d, degree)  # noqa: E731
    if n < w:
        raise ValueError(
            f"derivative order {d} needs {w} grid points, grid has {n}"
        )

    x = s.grid.points
    starts = _window_starts(n, w, align)
    pos = np.arange(n) - starts
    windows = sliding_window_view(s.values, w)[starts]
    if s.grid.uniform:
        h = s.grid.spacing
        local = np.arange(w, dtype=float)
        table = np.array([weights_fn(float(p), local) for p in range(w)]) / h**d
        weights = table[pos]
    else:
        weights = np.array(
            [weights_fn(x[i], x[starts[i]:starts[i] + w]) for i in range(n)]
        )
    out = np.einsum("ij,ij->i", weights, windows)
    return s.with_values(out, f"d{d}({s.label})" if s.label else "")


def interpolate(s: SampledFn, t):
    """Local cubic (four-point Lagrange) interpolation of ``s`` at ``t``."""
    x = s.grid.points
    y = s.values
    tq = np.asarray(t, dtype=float)
    lo, hi = x[0], x[-1]
    if np.any(tq < lo) or np.any(tq > hi):
        raise ValueError(f"interpolation point outside the grid hull [{lo}, {hi}]")
    n = x.size
    if n < 4:
        out = np.interp(tq, x, y)
        return float(out) if np.ndim(out) == 0 else out
    i = np.clip(np.searchsorted(x, tq, side="right") - 1, 0, n - 2)
    start = np.clip(i - 1, 0, n - 4)
    nodes = start[..., None] + np.arange(4)
    xn = x[nodes]
    yn = y[nodes]
    out = np.zeros(np.shape(tq))
    for j in range(4):
        basis = np.ones(np.shape(tq))
        for m in range(4):
            if m != j:
                basis = basis * (tq - xn[..., m]) / (xn[..., j] - xn[..., m])
        out = out + basis * yn[..., j]
    return float(out) if np.ndim(out) == 0 else out


def cumulative_integrate(s: SampledFn, start_index: int = 0) -> SampledFn:
    """Running integral of ``s`` from ``grid.points[start_index]``.

    Each grid interval is integrated exactly against the local cubic
    interpolant, so the running sum is fourth-order accurate. Values before
    ``start_index`` are zero.
    """
    x = s.grid.points
    y = s.values
    n = x.size
    if n < 4:
        raise ValueError("cumulative integration needs at least four points")
    pieces = np.zeros(n - 1)
    for i in range(n - 1):
        lo = min(max(i - 1, 0), n - 4)
        xs = x[lo:lo + 4]
        w = _interval_weights(xs, x[i], x[i + 1])
        pieces[i] = np.dot(w, y[lo:lo + 4])
    out = np.zeros(n)
    out[start_index + 1:] = np.cumsum(pieces[start_index:])
    return s.with_values(out, f"int({s.label})" if s.label else "")


def _interval_weights(xs, a, b) -> np.ndarray:
    w = np.empty(4)
    for j in range(4):
        others = np.delete(xs, j)
        basis = np.polynomial.Polynomial.fromroots(others) / np.prod(xs[j] - others)
        anti = basis.integ()
        w[j] = anti(b) - anti(a)
    return w
