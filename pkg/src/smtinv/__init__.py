"""Spherical mean transform in odd dimensions: simulation and ODE-based inversion.

Data are spherical means over spheres centred on the unit sphere with
radii t in (0, 1). Radial functions, and each spherical-harmonic channel
of a general function, are recovered by integrating a linear ODE in the
radius starting from the gap where the spheres miss the support.
"""

__version__ = "0.1.0"

from .forward import (  # noqa: E402
    FullSphereData,
    SmtData,
    SphereGrid,
    add_noise,
    decompose,
    forward_mode,
    forward_radial_h,
    funk_hecke_oracle,
    simulate_full_sphere,
    simulate_mode,
    simulate_radial,
)
from .inversion import (  # noqa: E402
    InversionError,
    InversionOptions,
    ReconstructionResult,
    error_metrics,
    invert_analytic,
    invert_full_sphere,
    invert_mode,
    invert_radial,
    recombine,
)
from .numerics import Grid1D, LocalPolyfit, CentralStencil, SampledFn  # noqa: E402
from .phantoms import make_phantom  # noqa: E402

__all__ = [
    "__version__",
    "CentralStencil",
    "FullSphereData",
    "Grid1D",
    "InversionError",
    "InversionOptions",
    "LocalPolyfit",
    "ReconstructionResult",
    "SampledFn",
    "SmtData",
    "SphereGrid",
    "add_noise",
    "decompose",
    "error_metrics",
    "forward_mode",
    "forward_radial_h",
    "funk_hecke_oracle",
    "invert_analytic",
    "invert_full_sphere",
    "invert_mode",
    "invert_radial",
    "make_phantom",
    "recombine",
    "simulate_full_sphere",
    "simulate_mode",
    "simulate_radial",
]
