"""Dense pseudo-labels from point annotations on skeleton sequences."""

from .annotation import PointStrategy, simulate_points
from .data import (
    UNLABELED,
    PointAnnotations,
    Topology,
    derive_bone,
    derive_motion,
    flatten,
    fuse_inputs,
    unflatten,
)
from .metrics import (
    MetricReport,
    Segment,
    edit_score,
    evaluate,
    evaluate_dataset,
    extract_segments,
    f1_at_tiou,
    frame_accuracy,
)
from .pseudo_label import (
    GeneratorConfig,
    Prototypes,
    compute_prototypes,
    energy_boundary,
    generate_energy_labels,
    generate_kmedoids_labels,
    generate_prototype_labels,
    integrate,
)
from .segmenter import PrototypeClassifier, fit, predict, smooth

__version__ = "0.1.0"

__all__ = [
    "UNLABELED",
    "GeneratorConfig",
    "MetricReport",
    "PointAnnotations",
    "PointStrategy",
    "PrototypeClassifier",
    "Prototypes",
    "Segment",
    "Topology",
    "compute_prototypes",
    "derive_bone",
    "derive_motion",
    "edit_score",
    "energy_boundary",
    "evaluate",
    "evaluate_dataset",
    "extract_segments",
    "f1_at_tiou",
    "fit",
    "flatten",
    "frame_accuracy",
    "fuse_inputs",
    "generate_energy_labels",
    "generate_kmedoids_labels",
    "generate_prototype_labels",
    "integrate",
    "predict",
    "simulate_points",
    "smooth",
    "unflatten",
]
