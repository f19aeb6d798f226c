"""Pseudospectral variational toolbox for a three-component derivative NLS system."""

from .grid import Grid, State, default_extent, norm_h1, norm_l2
from .params import PhysParams, WaveParams

__all__ = [
    "Grid",
    "State",
    "PhysParams",
    "WaveParams",
    "default_extent",
    "norm_h1",
    "norm_l2",
]

__version__ = "0.1.0"
