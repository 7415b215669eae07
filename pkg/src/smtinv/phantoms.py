"""Synthetic ground-truth profiles used to generate data and score reconstructions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .specfun import harmonic_count

# Gaussian tails are cut where they drop below 1e-16 of the peak
GAUSS_CUT = math.sqrt(2 * math.log(1e16))
R_MAX = 0.999


@dataclass(frozen=True)
class RadialPhantom:
    """Radial profile r -> f(r), zero outside ``support``.

    ``breakpoints`` mark interior points where the profile is not smooth;
    quadrature splits its panels there. ``deriv(r, m)`` optionally returns
    the m-th analytic derivative inside the support.
    """

    func: Callable
    support: tuple[float, float]
    label: str = ""
    breakpoints: tuple[float, ...] = ()
    deriv: Callable | None = field(default=None, compare=False)
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        r0, r1 = self.support
        if not 0 <= r0 < r1 < 1:
            raise ValueError(f"support {self.support} must satisfy 0 <= r0 < r1 < 1")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        r0, r1 = self.support
        inside = (r >= r0) & (r <= r1)
        out = np.where(inside, self.func(np.where(inside, r, 0.5 * (r0 + r1))), 0.0)
        return out if out.ndim else float(out)

    def derivative(self, r, m: int):
        if m == 0:
            return self(r)
        if self.deriv is None:
            raise NotImplementedError(f"no analytic derivatives for {self.label}")
        r = np.asarray(r, dtype=float)
        r0, r1 = self.support
        inside = (r >= r0) & (r <= r1)
        out = np.where(inside, self.deriv(np.where(inside, r, 0.5 * (r0 + r1)), m), 0.0)
        return out if out.ndim else float(out)

    def panel_edges(self, a: float, b: float) -> np.ndarray:
        """Smooth pieces of [a, b] intersected with the support, as edges."""
        r0, r1 = self.support
        lo, hi = max(a, r0), min(b, r1)
        if lo >= hi:
            return np.empty(0)
        inner = [x for x in self.breakpoints if lo < x < hi]
        return np.array([lo, *inner, hi])


@dataclass(frozen=True)
class ModePhantom:
    """One spherical-harmonic channel f_{q,s}(r) Y_{q,s} of a function on the ball."""

    q: int
    s: int
    profile: RadialPhantom

    def __post_init__(self):
        if self.q < 0 or not 1 <= self.s <= harmonic_count(self.q, 3):
            raise ValueError(f"invalid mode ({self.q}, {self.s})")


def _hermite_prob(m: int, x):
    """Probabilists' Hermite polynomial He_m(x)."""
    prev, cur = np.ones_like(x), x
    if m == 0:
        return prev
    for j in range(1, m):
        prev, cur = cur, x * cur - j * prev
    return cur


def gaussian(center: float = 0.5, width: float = 0.05, amplitude: float = 0.5) -> RadialPhantom:
    """amplitude * exp(-(r - center)^2 / (2 width^2)), tails cut at ~8.6 widths."""
    lo = max(center - GAUSS_CUT * width, 0.0)
    hi = min(center + GAUSS_CUT * width, R_MAX)

    def func(r):
        return amplitude * np.exp(-((r - center) ** 2) / (2 * width**2))

    def deriv(r, m):
        x = (r - center) / width
        return (-1) ** m * _hermite_prob(m, x) / width**m * func(r)

    breaks = tuple(x for x in (center - 4 * width, center, center + 4 * width) if lo < x < hi)
    return RadialPhantom(
        func, (lo, hi), f"gaussian(center={center},width={width},amplitude={amplitude})",
        breaks, deriv, {"center": center, "width": width, "amplitude": amplitude},
    )


def bump(a: float = 0.3, b: float = 0.6) -> RadialPhantom:
    """r^2 (1 - r)^2 on (a, b), zero elsewhere (jumps at both ends)."""

    def func(r):
        return r**2 * (1 - r) ** 2

    def deriv(r, m):
        # r^2 - 2 r^3 + r^4
        coeffs = np.polynomial.Polynomial([0, 0, 1, -2, 1]).deriv(m)
        return coeffs(r)

    return RadialPhantom(func, (a, b), f"bump(a={a},b={b})", (), deriv, {"a": a, "b": b})


def triangle(a: float = 0.25, peak: float = 0.5, b: float = 0.75) -> RadialPhantom:
    """Hat function rising from a to peak and falling to b, height (peak-a)*4 by default."""
    up = 1.0 / (peak - a)
    down = 1.0 / (b - peak)
    height = 4 * (peak - a)

    def func(r):
        return height * np.where(r < peak, up * (r - a), down * (b - r))

    return RadialPhantom(
        func, (a, b), f"triangle(a={a},peak={peak},b={b})", (peak,), None,
        {"a": a, "peak": peak, "b": b},
    )


def oscillatory(freq: float = 50.0, rmax: float = R_MAX) -> RadialPhantom:
    """cos(freq r) on [0, rmax]."""

    def func(r):
        return np.cos(freq * r)

    def deriv(r, m):
        return freq**m * np.cos(freq * r + m * math.pi / 2)

    nodes = int(freq * rmax / math.pi)
    breaks = tuple(np.linspace(0, rmax, nodes + 2)[1:-1])
    return RadialPhantom(func, (0.0, rmax), f"oscillatory(freq={freq})", breaks, deriv,
                         {"freq": freq, "rmax": rmax})


def two_mode(freq: float = 50.0, center: float = 0.7, width: float = 0.05,
             amplitude: float = 0.5) -> list[ModePhantom]:
    """cos(50 r) Y_{0,1} + Gaussian(0.7) Y_{1,2}."""
    return [
        ModePhantom(0, 1, oscillatory(freq)),
        ModePhantom(1, 2, gaussian(center, width, amplitude)),
    ]


def constant(value: float = 1.0, rmax: float = R_MAX) -> RadialPhantom:
    """Constant on [0, rmax]; handy for analytic checks."""
    return RadialPhantom(lambda r: np.full_like(r, value), (0.0, rmax), f"constant({value})",
                         (), lambda r, m: np.zeros_like(r), {"value": value, "rmax": rmax})


REGISTRY: dict[str, tuple[Callable, str]] = {
    "gaussian": (gaussian, "amplitude*exp(-(r-center)^2/(2 width^2)); defaults center=0.5 width=0.05 amplitude=0.5"),
    "bump": (bump, "r^2(1-r)^2 on (a,b); defaults a=0.3 b=0.6"),
    "triangle": (triangle, "4r-1 on (1/4,1/2), 3-4r on [1/2,3/4); defaults a=0.25 peak=0.5 b=0.75"),
    "oscillatory": (oscillatory, "cos(freq r); default freq=50"),
    "two-mode": (two_mode, "cos(50r) Y_{0,1} + Gaussian(0.7) Y_{1,2} (modes, n=3)"),
    "constant": (constant, "constant value on [0, 0.999]"),
}


def make_phantom(name: str, **params):
    try:
        factory, _ = REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown phantom {name!r}; choose from {sorted(REGISTRY)}") from None
    return factory(**params)
