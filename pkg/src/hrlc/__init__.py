"""Hierarchical representative latent clustering for consistent sequence
segmentation: batch allocation, two-level PCA + k-means, coarse-to-fine
refinement, evaluation, and rendering."""

__version__ = "0.1.0"

from .kmeans import Clustering, kmeans_assign, kmeans_fit
from .metrics import MetricsReport, binary_metrics, evaluate_sequence, match_clusters
from .pca import PcaModel, pca_fit, pca_reconstruct, pca_transform
from .pipeline import (
    BatchPartition,
    PipelineConfig,
    PrototypeSet,
    allocate_batches,
    extract_prototypes,
    inter_batch_cluster,
    intra_batch_cluster,
    relabel_global,
    run_pipeline,
)
from .refine import RefineConfig, majority_smooth, refine_sequence, upsample_labels
from .render import Palette, make_palette, render_labels
from .synth import SynthSpec, adjusted_rand_index, generate
from .tensor_io import (
    FeatureSequence,
    LabelMapSequence,
    load_sequence,
    read_feature_tensor,
    read_mask,
    write_feature_tensor,
    write_label_maps,
)

__all__ = [
    "BatchPartition",
    "Clustering",
    "FeatureSequence",
    "LabelMapSequence",
    "MetricsReport",
    "Palette",
    "PcaModel",
    "PipelineConfig",
    "PrototypeSet",
    "RefineConfig",
    "SynthSpec",
    "adjusted_rand_index",
    "allocate_batches",
    "binary_metrics",
    "evaluate_sequence",
    "extract_prototypes",
    "generate",
    "inter_batch_cluster",
    "intra_batch_cluster",
    "kmeans_assign",
    "kmeans_fit",
    "load_sequence",
    "majority_smooth",
    "make_palette",
    "match_clusters",
    "pca_fit",
    "pca_reconstruct",
    "pca_transform",
    "read_feature_tensor",
    "read_mask",
    "refine_sequence",
    "relabel_global",
    "render_labels",
    "run_pipeline",
    "upsample_labels",
    "write_feature_tensor",
    "write_label_maps",
]
