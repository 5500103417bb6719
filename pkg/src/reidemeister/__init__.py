"""Exact twisted conjugacy computations in triangular matrix groups."""

__version__ = "0.1.0"

from .rings import find_flip_unit, find_irreducible, parse_element, parse_ring  # noqa: E402
from .matgroups import GroupTag, normal_form, parse_matrix, truncated_borel  # noqa: E402
from .autos import parse_aut  # noqa: E402
from .twisted import (  # noqa: E402
    ClassReport,
    additive_class_data,
    brute_force_reidemeister,
    certify_infinite_family,
    decide,
    laurent_b2_decide,
    reidemeister_fg_abelian,
)

__all__ = [
    "ClassReport",
    "GroupTag",
    "additive_class_data",
    "brute_force_reidemeister",
    "certify_infinite_family",
    "decide",
    "find_flip_unit",
    "find_irreducible",
    "laurent_b2_decide",
    "normal_form",
    "parse_aut",
    "parse_element",
    "parse_matrix",
    "parse_ring",
    "reidemeister_fg_abelian",
    "truncated_borel",
]
