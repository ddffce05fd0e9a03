"""Whipple bicycle under the steer law delta = c1 * theta at constant rear wheel rate."""

from ._core import (
    BicycleParams,
    FrameParams,
    Trajectory,
    WheelParams,
    WhippleError,
    __version__,
    basin_radius,
    bifurcation,
    coefficient_partials,
    critical_speed,
    critical_speed_limit,
    find_equilibria,
    free_eigenvalues,
    load_params,
    parse_params,
    reconstruct_path,
    reduced_coeffs,
    simulate,
    trivial_coeffs,
    verify,
)

__all__ = [
    "BicycleParams",
    "FrameParams",
    "Trajectory",
    "WheelParams",
    "WhippleError",
    "__version__",
    "basin_radius",
    "bifurcation",
    "coefficient_partials",
    "critical_speed",
    "critical_speed_limit",
    "find_equilibria",
    "free_eigenvalues",
    "load_params",
    "parse_params",
    "reconstruct_path",
    "reduced_coeffs",
    "simulate",
    "trivial_coeffs",
    "verify",
]
