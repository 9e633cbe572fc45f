"""Clustering-assisted deconvolution of families of blurred, noisy signals."""

from .clustering import ClusteringAssignment, KMeansConfig, kmeans_columns, miss_rate, project_columns
from .estimators import ClusteredDeconvolution, SeparateDeconvolution
from .exceptions import DegenerateSpectrumError, DimensionError, DomainError, ParameterError
from .forward_model import KernelSpec, OperatorSpectrum, ProblemInstance, build_instance, simulate
from .pipelines import (
    PipelineConfig,
    PipelineOutput,
    ThresholdRule,
    clustering_after,
    clustering_before,
    no_clustering,
    relative_error,
)
from .selection import PenaltyConfig, SelectionResult, solve_joint
from .transforms import Basis, analyze, synthesize

__version__ = "0.1.0"

__all__ = [
    "Basis",
    "ClusteredDeconvolution",
    "ClusteringAssignment",
    "DegenerateSpectrumError",
    "DimensionError",
    "DomainError",
    "KMeansConfig",
    "KernelSpec",
    "OperatorSpectrum",
    "ParameterError",
    "PenaltyConfig",
    "PipelineConfig",
    "PipelineOutput",
    "ProblemInstance",
    "SelectionResult",
    "SeparateDeconvolution",
    "ThresholdRule",
    "analyze",
    "build_instance",
    "clustering_after",
    "clustering_before",
    "kmeans_columns",
    "miss_rate",
    "no_clustering",
    "project_columns",
    "relative_error",
    "simulate",
    "solve_joint",
    "synthesize",
]
