"""k-means clustering of attributed graphs, with Elkan's acceleration.

Graphs live in a quotient of Euclidean space under vertex permutations.
The graph distance is the minimum Euclidean distance over alignments, means
come from incremental arithmetic averaging, and the triangle inequality of
that metric lets Elkan's bounds skip most distance evaluations.
"""
from .clustering import (
    DROP,
    ELKAN,
    REPAIR_FARTHEST,
    STD,
    ClusterConfig,
    ClusteringResult,
    best_of_runs,
    kmeans_elkan,
    kmeans_std,
    membership_matrix,
    run_kmeans,
)
from .errors import (
    ConfigError,
    DimensionError,
    EmptyDatasetError,
    GraphKMeansError,
    ParseError,
    ScaleError,
    SchemaError,
)
from .evaluation import (
    EvalReport,
    classification_accuracy,
    cluster_error,
    evaluate,
    pairwise_distances,
    set_distance,
    silhouette_index,
)
from .graphio import Dataset, convert_gxl, load_dataset, load_manifest, save_manifest, write_dataset
from .graphs import AttributedGraph, AttributeSpace, Representation, build_graph, embed, euclidean_distance, permute
from .matching import EXACT, GA, Alignment, DistanceOracle, GaParams, distance_exact, distance_ga
from .mean import brute_force_mean, iam_mean, set_mean, ssd

__version__ = "0.1.0"

__all__ = [
    "DROP", "ELKAN", "EXACT", "GA", "REPAIR_FARTHEST", "STD",
    "Alignment", "AttributeSpace", "AttributedGraph", "ClusterConfig", "ClusteringResult", "Dataset",
    "DistanceOracle", "EvalReport", "GaParams", "Representation",
    "ConfigError", "DimensionError", "EmptyDatasetError", "GraphKMeansError", "ParseError", "ScaleError",
    "SchemaError",
    "best_of_runs", "brute_force_mean", "build_graph", "classification_accuracy", "cluster_error", "convert_gxl",
    "distance_exact", "distance_ga", "embed", "euclidean_distance", "evaluate", "iam_mean", "kmeans_elkan",
    "kmeans_std", "load_dataset", "load_manifest", "membership_matrix", "pairwise_distances", "permute",
    "run_kmeans", "save_manifest", "set_distance", "set_mean", "silhouette_index", "ssd", "write_dataset",
]
