"""Spectral experiments for magnetic Schrodinger operators on deformed strips."""

from .geometry import CurveSpec, StripSpec
from .fields import FieldSpec, Profile1D, square_well, trapezoid_well
from .spectra1d import threshold
from .assembly2d import Grid2D, GaugeField, assemble_H
from .eigensolve import lowest_eigenpairs, count_below

__version__ = "0.1.0"

__all__ = [
    "CurveSpec",
    "StripSpec",
    "FieldSpec",
    "Profile1D",
    "square_well",
    "trapezoid_well",
    "threshold",
    "Grid2D",
    "GaugeField",
    "assemble_H",
    "lowest_eigenpairs",
    "count_below",
]
