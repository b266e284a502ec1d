"""Python access to the fcvg inbetweening core."""

from ._fcvg import (
    DomainError,
    NoiseSchedule,
    NumericalError,
    ParseError,
    StructuralError,
    UnsupportedError,
    compute_metrics,
    cross_normalize,
    eval_easing,
    flip_time,
    fuse,
    fusion_weights,
    rasterize_conditions,
    sample,
    synth_clip,
)

__all__ = [
    "DomainError",
    "NoiseSchedule",
    "NumericalError",
    "ParseError",
    "StructuralError",
    "UnsupportedError",
    "compute_metrics",
    "cross_normalize",
    "eval_easing",
    "flip_time",
    "fuse",
    "fusion_weights",
    "rasterize_conditions",
    "sample",
    "synth_clip",
]
