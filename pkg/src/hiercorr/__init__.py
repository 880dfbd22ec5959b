"""Hierarchical filtering of correlation matrices, nested factor models and
Kullback-Leibler diagnostics for filter quality."""

from .bootstrap import BootstrapConfig, link_bootstrap_values, node_bootstrap_values, reduce_dendrogram
from .evaluation import (
    EvaluationReport,
    PlanePoint,
    bootstrap_bias,
    evaluate_filters,
    frobenius_optimal_alpha,
    shrinkage_sweep,
    student_reference,
)
from .filters import make_filter, rmt_filter, shrink
from .hclust import Dendrogram, Node, alca, cluster, filtered_from_dendrogram, genealogy, slca
from .hnfm import HnfmSpec, hnfm_from_dendrogram, model_correlation, simulate_gaussian, simulate_student
from .kl import (
    StudentParams,
    kl_gaussian,
    kl_student_full,
    kl_student_small_mu,
    student_mle_correlation,
    wishart_expectations,
)
from .linalg import CorrelationMatrix, DataMatrix, FilteredCorrelationMatrix, pearson_correlation
from .networks import CorrelationGraph, Edge, almst, mst, pmfg

__version__ = "0.1.0"
