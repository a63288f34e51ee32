"""Monte Carlo estimation of active subspaces from gradient samples."""

from .bootstrap import BootstrapSummary, bootstrap, suggest_dimension
from .bounds import BoundsInput, evaluate_bounds, heuristic_sample_count
from .elliptic import EllipticModel, build_kl
from .estimator import (
    ActiveSubspaceEstimate,
    eigendecompose,
    estimate,
    estimate_C,
    estimate_via_svd,
    partition,
    subspace_distance,
)
from .models import (
    GradientSource,
    InputDensity,
    QuadraticModel,
    SupportError,
    build_quadratic_case,
    load_model,
)
from .sampling import GradientSampleSet, load_samples, sample_gradients

__version__ = "0.1.0"

__all__ = [
    "ActiveSubspaceEstimate",
    "BootstrapSummary",
    "BoundsInput",
    "EllipticModel",
    "GradientSampleSet",
    "GradientSource",
    "InputDensity",
    "QuadraticModel",
    "SupportError",
    "bootstrap",
    "build_kl",
    "build_quadratic_case",
    "eigendecompose",
    "estimate",
    "estimate_C",
    "estimate_via_svd",
    "evaluate_bounds",
    "heuristic_sample_count",
    "load_model",
    "load_samples",
    "partition",
    "sample_gradients",
    "subspace_distance",
    "suggest_dimension",
]
