"""Exact finite-n computation and limit geometry for shuffled binary randomizers."""
from .distributions import (
    BinaryExperiment,
    DiscreteDistribution,
    Estimate,
    KeySpaceError,
    PrivacyCurve,
    ResourceLimitError,
    convolve,
    privacy_curve,
    privacy_delta,
    tv_distance,
)
from .geometry import AlphabetSpec, DominantStructure, GroupingError, QuotientGeometry, build_geometry
from .transcripts import (
    Composition,
    RandomizerScenario,
    neighboring_experiment,
    realize,
    transcript_law,
)

__all__ = [
    "AlphabetSpec",
    "BinaryExperiment",
    "Composition",
    "DiscreteDistribution",
    "DominantStructure",
    "Estimate",
    "GroupingError",
    "KeySpaceError",
    "PrivacyCurve",
    "QuotientGeometry",
    "RandomizerScenario",
    "ResourceLimitError",
    "build_geometry",
    "convolve",
    "neighboring_experiment",
    "privacy_curve",
    "privacy_delta",
    "realize",
    "transcript_law",
    "tv_distance",
]
