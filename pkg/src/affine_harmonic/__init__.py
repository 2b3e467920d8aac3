"""Positive harmonic functions on affine groups over valued fields, checked by Monte Carlo."""
from .fields import LogAbs, Place, ValuedScalar, parse_scalar
from .groups import AffineElement, MeasuredGroup, builtin_group, bs12, lamplighter, zline
from .walk import WalkConfig, sample_batch, sample_stopped_walk, run_ensemble
from .harmonic import estimate_f, harmonicity_residual, orbit_independence

__all__ = [
    "LogAbs", "Place", "ValuedScalar", "parse_scalar",
    "AffineElement", "MeasuredGroup", "builtin_group", "bs12", "lamplighter", "zline",
    "WalkConfig", "sample_batch", "sample_stopped_walk", "run_ensemble",
    "estimate_f", "harmonicity_residual", "orbit_independence",
]
__version__ = "0.1.0"
