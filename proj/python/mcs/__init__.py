"""Multivariate conformal selection."""

from ._mcs import (
    DimensionMismatch,
    Region,
    benchmark,
    bh_select,
    conformal_p_values,
    select,
    simulate,
    soft_rank,
    task_region,
)

__all__ = [
    "DimensionMismatch",
    "Region",
    "benchmark",
    "bh_select",
    "conformal_p_values",
    "select",
    "simulate",
    "soft_rank",
    "task_region",
]
