"""Exact computations for rank-one cutting-and-stacking transformations."""

from .analysis import (
    MeasureSeries,
    TypeVerdict,
    Vector,
    certify_v_alpha_lower,
    joint_profile,
    multiplicative_profile,
    normalize_vector,
    verify_zero_window,
    witness_pair_search,
)
from .core import (
    ColumnStats,
    ConstructionSpec,
    DescendantSet,
    Level,
    LevelSet,
    MeasureBound,
    ResourceError,
    SpecIncompleteError,
    Stage,
    column_stats,
    descendants,
    intersection_measure,
    materialize,
    push_to_column,
    resolve_depth,
)
from .vectors import OrderWitness, decide_le_m, decide_le_p

__version__ = "0.1.0"

__all__ = [
    "ColumnStats",
    "ConstructionSpec",
    "DescendantSet",
    "Level",
    "LevelSet",
    "MeasureBound",
    "MeasureSeries",
    "OrderWitness",
    "ResourceError",
    "SpecIncompleteError",
    "Stage",
    "TypeVerdict",
    "Vector",
    "certify_v_alpha_lower",
    "column_stats",
    "decide_le_m",
    "decide_le_p",
    "descendants",
    "intersection_measure",
    "joint_profile",
    "materialize",
    "multiplicative_profile",
    "normalize_vector",
    "push_to_column",
    "resolve_depth",
    "verify_zero_window",
    "witness_pair_search",
]
