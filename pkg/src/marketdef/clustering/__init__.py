"""Substitutability clustering: k-means(++), complete linkage, k selection."""

from marketdef.clustering.hierarchy import Dendrogram, Merge, candidate_k, hclust_complete
from marketdef.clustering.kmeans import (
    ClusterAssignment,
    euclid_sq,
    kmeans_restarts,
    kmeanspp_indices,
    kmeanspp_seed,
    lloyd,
    nearest_sq_distance,
    seeding_cumulative,
    seeding_probabilities,
    uniform_row_seed,
)
from marketdef.clustering.kselect import (
    GAP_RULES,
    KSelectionReport,
    centroid_ss,
    elbow_wk,
    gap_statistic,
    pairwise_wk,
    reference_sample,
    select_k_elbow,
    select_k_gap,
)

__all__ = [
    "GAP_RULES",
    "ClusterAssignment",
    "Dendrogram",
    "KSelectionReport",
    "Merge",
    "candidate_k",
    "centroid_ss",
    "elbow_wk",
    "euclid_sq",
    "gap_statistic",
    "hclust_complete",
    "kmeans_restarts",
    "kmeanspp_indices",
    "kmeanspp_seed",
    "lloyd",
    "nearest_sq_distance",
    "pairwise_wk",
    "reference_sample",
    "seeding_cumulative",
    "seeding_probabilities",
    "select_k_elbow",
    "select_k_gap",
    "uniform_row_seed",
]
