"""Simulate -> (noise) -> invert -> score, driven by a :class:`RunConfig`."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import RunConfig
from .forward import (
    FullSphereData,
    SmtData,
    SphereGrid,
    add_noise_data,
    add_noise_full_sphere,
    decompose,
    simulate_full_sphere,
    simulate_mode,
    simulate_radial,
)
from .inversion import (
    InversionOptions,
    ReconstructionResult,
    error_metrics,
    invert_full_sphere,
    invert_radial,
)
from .numerics import Grid1D, LocalPolyfit, parse_diff_method
from .phantoms import RadialPhantom, make_phantom

# near-origin error, as a fraction of the truth's norm over the whole
# reconstruction, above which the report flags degraded accuracy
DEGRADED_FRACTION = 1e-2


def build_phantom(cfg: RunConfig):
    """RadialPhantom for radial runs, list of ModePhantom for mode runs."""
    return make_phantom(cfg.phantom, **cfg.phantom_params)


def tgrid(cfg: RunConfig) -> Grid1D:
    return Grid1D.linspace(cfg.tmin, cfg.tmax, cfg.nodes)


def sphere_grid(cfg: RunConfig, phantom=None) -> SphereGrid:
    if cfg.sphere is not None:
        return SphereGrid(*cfg.sphere)
    degree = cfg.q_max
    if phantom is not None:
        degree = max([degree] + [m.q for m in phantom])
    return SphereGrid.for_degree(degree)


def inversion_options(cfg: RunConfig) -> InversionOptions:
    return InversionOptions(
        diff=parse_diff_method(cfg.diff),
        eps_prime=None if cfg.eps_prime == "auto" else float(cfg.eps_prime),
        gap_rel_threshold=cfg.gap_threshold,
        method=cfg.method,
    )


def simulate(cfg: RunConfig, phantom=None) -> SmtData | FullSphereData:
    """Synthetic data for the configured phantom, noise included."""
    phantom = build_phantom(cfg) if phantom is None else phantom
    grid = tgrid(cfg)
    if cfg.mode == "radial":
        data = simulate_radial(phantom, cfg.dim, grid, cfg.quad_order)
        return add_noise_data(data, cfg.noise, cfg.seed)
    data = simulate_full_sphere(phantom, grid, sphere_grid(cfg, phantom), cfg.quad_order)
    return add_noise_full_sphere(data, cfg.noise, cfg.seed)


def invert(cfg: RunConfig, data) -> list[ReconstructionResult]:
    """Invert radial data (one result) or full-sphere data (one result per mode)."""
    options = inversion_options(cfg)
    if isinstance(data, FullSphereData):
        return invert_full_sphere(data, cfg.q_max, cfg.eps, options)
    if data.n != cfg.dim:
        raise ValueError(f"data dimension {data.n} differs from configured dim {cfg.dim}")
    return [invert_radial(data, cfg.eps, options)]


# --------------------------------------------------------------------------
# scoring


def _zero_profile(r):
    return np.zeros_like(np.asarray(r, dtype=float))


def truth_for(result: ReconstructionResult, phantom):
    """Analytic truth matching a reconstruction (zero for absent modes)."""
    if isinstance(phantom, RadialPhantom):
        return phantom
    for mode in phantom:
        if (mode.q, mode.s) == (result.q, result.s):
            return mode.profile
    return _zero_profile


def near_origin_summary(result: ReconstructionResult, truth, r_split: float) -> dict:
    """Error on [r_min, r_split] relative to the truth's norm over the whole reconstruction."""
    r = result.profile.points
    lo, hi = float(r[0]), float(r[-1])
    out = {"interval": [lo, r_split], "error_fraction": None, "degraded": False}
    if r_split <= lo or np.count_nonzero((r >= lo) & (r <= r_split)) < 2:
        out["note"] = "reconstruction does not reach below the near-origin radius"
        return out
    near = error_metrics(result.profile, truth, (lo, r_split))
    whole = error_metrics(result.profile, truth, (lo, hi))
    scale = whole["truth_l2"]
    if scale == 0:
        scale = 1.0
        out["note"] = "truth vanishes; absolute error reported"
    frac = near["abs_l2"] / scale
    out.update(error_fraction=frac, max_abs=near["max_abs"],
               degraded=bool(frac > DEGRADED_FRACTION or not math.isfinite(frac)))
    return out


def score(result: ReconstructionResult, truth, cfg: RunConfig) -> dict:
    entry = {
        "eps_prime": result.eps_prime,
        "method": result.method,
        "metrics": [error_metrics(result.profile, truth, iv) for iv in cfg.intervals],
        "near_origin": near_origin_summary(result, truth, cfg.near_origin),
    }
    if cfg.mode == "modes":
        entry = {"q": result.q, "s": result.s, **entry}
    return entry


def decomposition_check(cfg: RunConfig, data: FullSphereData, phantom) -> dict:
    """Decomposed channels against the per-mode forward operator."""
    by_mode = {(m.q, m.s): m for m in phantom}
    worst = 0.0
    rows = []
    for channel in decompose(data, cfg.q_max):
        key = (channel.q, channel.s)
        if key in by_mode:
            ref = simulate_mode(by_mode[key], 3, channel.grid, cfg.quad_order).samples.values
        else:
            ref = np.zeros(len(channel.grid))
        err = float(np.max(np.abs(channel.samples.values - ref)))
        worst = max(worst, err)
        rows.append({"q": channel.q, "s": channel.s, "max_abs_error": err})
    return {"max_abs_error": worst, "channels": rows}


@dataclass
class RoundTrip:
    report: dict
    data: object
    results: list
    phantom: object
    timing: dict = field(default_factory=dict)


def roundtrip(cfg: RunConfig) -> RoundTrip:
    """Simulate, invert and score; returns the report and the intermediate objects."""
    t0 = time.perf_counter()
    phantom = build_phantom(cfg)
    data = simulate(cfg, phantom)
    t1 = time.perf_counter()
    results = invert(cfg, data)
    t2 = time.perf_counter()
    report = base_report(cfg)
    report["data"] = data_summary(data)
    if cfg.mode == "radial":
        entry = score(results[0], phantom, cfg)
        report.update(entry)
    else:
        report["modes"] = [score(r, truth_for(r, phantom), cfg) for r in results]
        if cfg.noise == 0:
            report["decomposition"] = decomposition_check(cfg, data, phantom)
        report["near_origin"] = {
            "degraded": any(m["near_origin"]["degraded"] for m in report["modes"])
        }
    t3 = time.perf_counter()
    timing = {"simulate_s": t1 - t0, "invert_s": t2 - t1, "score_s": t3 - t2, "total_s": t3 - t0}
    report["timing"] = timing
    return RoundTrip(report, data, results, phantom, timing)


def describe_diff(spec: str) -> dict:
    """Differentiator with its defaults spelled out (d = derivative order)."""
    method = parse_diff_method(spec)
    if isinstance(method, LocalPolyfit):
        return {
            "method": "polyfit",
            "degree": method.degree if method.degree is not None else "d+4",
            "window": method.window if method.window is not None else "2d+9",
            "extra_window": method.extra_window,
            "align": method.align,
        }
    return {"method": "central", "width": method.width}


def base_report(cfg: RunConfig) -> dict:
    return {
        "tool": {"name": "smtinv", "version": __version__},
        "config": cfg.to_dict(),
        "resolved": {"diff": describe_diff(cfg.diff), "k": cfg.k},
    }


def data_summary(data) -> dict:
    if isinstance(data, FullSphereData):
        return {"kind": "full-sphere", "n": 3, "nodes": len(data.tgrid),
                "sphere": [data.sphere.n_theta, data.sphere.n_phi], "noise": data.noise_meta}
    return {"kind": data.kind, "n": data.n, "nodes": len(data.grid), "q": data.q, "s": data.s,
            "noise": data.noise_meta}

