"""Modeling, feasibility analysis, and exact simulation of relativistic
state-delivery tasks: unknown quantum states summoned to spacetime points
selected by distributed classical inputs."""

__version__ = "0.1.0"

from .geometry import Point, boost, causally_precedes
from .tasks import SummoningTask, classify_variant, validate
from .feasibility import classically_possible, determinize
from .protocol import SynthesisRefused, run, run_exhaustive, synthesize

__all__ = [
    "Point",
    "boost",
    "causally_precedes",
    "SummoningTask",
    "classify_variant",
    "validate",
    "classically_possible",
    "determinize",
    "SynthesisRefused",
    "synthesize",
    "run",
    "run_exhaustive",
    "__version__",
]
