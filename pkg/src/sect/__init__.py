"""Smooth Euler characteristic transform (SECT) of 2D/3D shapes and GP regression on SECT covariates."""

from .complex import (
    ComplexError,
    SimplicialComplex,
    Z2Matrix,
    betti_numbers,
    boundary_matrix,
    build_complex,
    euler_characteristic,
)
from .filtration import ECCurve, direction_set, ec_curve, extremal_heights, height, sublevel_complex
from .persistence import Barcode, FilteredComplex, compute_barcode, lower_star_filtration
from .transform import SECCurve, SECTProfile, aggregate_slices, center_curve, sect, sect_distance, smooth_curve

__all__ = [
    "Barcode",
    "ComplexError",
    "ECCurve",
    "FilteredComplex",
    "SECCurve",
    "SECTProfile",
    "SimplicialComplex",
    "Z2Matrix",
    "aggregate_slices",
    "betti_numbers",
    "boundary_matrix",
    "build_complex",
    "center_curve",
    "compute_barcode",
    "direction_set",
    "ec_curve",
    "euler_characteristic",
    "extremal_heights",
    "height",
    "lower_star_filtration",
    "sect",
    "sect_distance",
    "smooth_curve",
    "sublevel_complex",
]
