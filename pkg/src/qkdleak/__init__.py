"""Certified key-rate bounds for decoy-state BB84 with leaky sources."""

from .channel import ChannelParams, error_gain, gain, true_yield_oracle
from .engine import (
    CharacterizedTha,
    ExtraPm,
    GeneralEpsilon,
    GridSpec,
    KeyRatePoint,
    SolverSettings,
    SourceScenario,
    binary_entropy,
    key_rate,
    optimize_intensities,
    sweep,
)
from .gramsdp import CertifiedBound, GramProblem, UncertifiedError, overlap_lower_bound
from .source import UNIFORM, PhaseDistribution, discrete, discrete_pmf, poisson_pmf

__all__ = [
    "CertifiedBound",
    "ChannelParams",
    "CharacterizedTha",
    "ExtraPm",
    "GeneralEpsilon",
    "GramProblem",
    "GridSpec",
    "KeyRatePoint",
    "PhaseDistribution",
    "SolverSettings",
    "SourceScenario",
    "UNIFORM",
    "UncertifiedError",
    "binary_entropy",
    "discrete",
    "discrete_pmf",
    "error_gain",
    "gain",
    "key_rate",
    "optimize_intensities",
    "overlap_lower_bound",
    "poisson_pmf",
    "sweep",
    "true_yield_oracle",
]
