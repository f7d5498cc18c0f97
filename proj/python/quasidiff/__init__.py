"""Reproducing kernels and resolvents of quasidiffusions."""

from ._core import (
    InconclusiveError,
    Kernel,
    Pair,
    Solution,
    ValidationError,
    bd_resolvent,
    calibrate,
    classify,
    laplace_chain,
    snapping_out_kernel,
)

__all__ = [
    "InconclusiveError",
    "Kernel",
    "Pair",
    "Solution",
    "ValidationError",
    "bd_resolvent",
    "calibrate",
    "classify",
    "laplace_chain",
    "snapping_out_kernel",
]
