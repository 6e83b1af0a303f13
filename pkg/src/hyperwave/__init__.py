"""Hypergraph diffusion wavelets and niche-embedding pipeline."""

__version__ = "0.1.0"

from .hypercore import (
    UNREACHABLE,
    BipartiteExpansion,
    CSRMatrix,
    Hypergraph,
    bipartite_expansion,
    build_hypergraph,
    dual,
    hypergraph_distance,
)
from .diffusion import DiffusionOperator, lazy_walk_reference
from .wavelets import (
    OperationCount,
    ScaleSequence,
    WaveletCoefficients,
    dyadic_scales,
    transform_count,
    wavelet_transform,
)
from .niche import (
    Categorical,
    ColumnDescriptor,
    HyperedgeFeatureMatrix,
    NicheConfig,
    SpatialDataset,
    build_spatial_graph,
    hyperedge_features,
    khop_lift,
    lognormalize,
    niche_representations,
    select_gene_pairs,
)
from .evaluation import (
    ClusterResult,
    EvalConfig,
    ProbeMetrics,
    ProbeReport,
    adjusted_rand_index,
    linear_probe,
    spectral_cluster,
    vendi_score,
)

__all__ = [
    "UNREACHABLE",
    "BipartiteExpansion",
    "CSRMatrix",
    "Categorical",
    "ClusterResult",
    "ColumnDescriptor",
    "DiffusionOperator",
    "EvalConfig",
    "Hypergraph",
    "HyperedgeFeatureMatrix",
    "NicheConfig",
    "OperationCount",
    "ProbeMetrics",
    "ProbeReport",
    "ScaleSequence",
    "SpatialDataset",
    "WaveletCoefficients",
    "adjusted_rand_index",
    "bipartite_expansion",
    "build_hypergraph",
    "build_spatial_graph",
    "dual",
    "dyadic_scales",
    "hyperedge_features",
    "hypergraph_distance",
    "khop_lift",
    "lazy_walk_reference",
    "linear_probe",
    "lognormalize",
    "niche_representations",
    "select_gene_pairs",
    "spectral_cluster",
    "transform_count",
    "vendi_score",
    "wavelet_transform",
]
