"""Python bindings for the BorderNet C++ core."""

from ._core import (
    association_fan,
    bootstrap_exhaustive,
    bootstrap_improvement,
    fan_phases,
    filter_bank,
    geodesic,
    model_spec_json,
    occlude,
    occlusion_mask,
    orientation_map,
    parameter_count,
    train_and_evaluate,
)

__all__ = [
    "association_fan",
    "bootstrap_exhaustive",
    "bootstrap_improvement",
    "fan_phases",
    "filter_bank",
    "geodesic",
    "model_spec_json",
    "occlude",
    "occlusion_mask",
    "orientation_map",
    "parameter_count",
    "train_and_evaluate",
]
