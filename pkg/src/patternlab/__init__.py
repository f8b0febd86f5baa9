"""Exact counting of linear patterns in finite abelian groups, with density-increment tools."""

__version__ = "0.1.0"

from .groups import GroupDescriptor, GroupFunction, fourier_transform, convolution, cross_correlation  # noqa: E402
from .linear_systems import LinearSystem, OrientedGraph, pattern_count, pattern_density  # noqa: E402

__all__ = [
    "GroupDescriptor",
    "GroupFunction",
    "LinearSystem",
    "OrientedGraph",
    "convolution",
    "cross_correlation",
    "fourier_transform",
    "pattern_count",
    "pattern_density",
]
