"""Decision trees trained on teacher-distilled soft labels.

The training-label algebra lives in :mod:`softtree.labels`, data loading
and splitting in :mod:`softtree.dataset`, the shared tree kernel in
:mod:`softtree.tree`, the forest teacher and soft-label tables in
:mod:`softtree.teacher`, held-out distillation in :mod:`softtree.distill`,
the experiment harness in :mod:`softtree.evaluate`, and synthetic
benchmarks in :mod:`softtree.synth`.
"""

__version__ = "0.1.0"

from .dataset import (
    Dataset,
    FoldPartition,
    load_csv,
    partition_folds,
    save_csv,
    train_test_split,
)
from .distill import DistillConfig, direct_distill, jackknife_distill
from .errors import ConfigError, DataError
from .evaluate import (
    ExperimentConfig,
    ExperimentReport,
    accuracy,
    alpha_curves,
    run_experiment,
)
from .labels import (
    average_labels,
    mix,
    one_hot_matrix,
    pseudo_label,
    soften_logits,
    to_one_hot,
)
from .teacher import (
    RandomForest,
    SoftLabelTable,
    TeacherSpec,
    fit_random_forest,
    load_external_soft_labels,
)
from .tree import (
    TreeConfig,
    TreeNode,
    best_split,
    composition_count,
    count_nodes,
    count_rules,
    fit,
    fit_hard,
    impurity,
    impurity_decrease,
    is_pure,
    load_tree,
    node_proportions,
    predict,
    predict_logits,
    predict_logits_matrix,
    predict_matrix,
    rules_text,
    save_tree,
    tree_depth,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Dataset",
    "DistillConfig",
    "ExperimentConfig",
    "ExperimentReport",
    "FoldPartition",
    "RandomForest",
    "SoftLabelTable",
    "TeacherSpec",
    "TreeConfig",
    "TreeNode",
    "accuracy",
    "alpha_curves",
    "average_labels",
    "best_split",
    "composition_count",
    "count_nodes",
    "count_rules",
    "direct_distill",
    "fit",
    "fit_hard",
    "fit_random_forest",
    "impurity",
    "impurity_decrease",
    "is_pure",
    "jackknife_distill",
    "load_csv",
    "load_external_soft_labels",
    "load_tree",
    "mix",
    "node_proportions",
    "one_hot_matrix",
    "partition_folds",
    "predict",
    "predict_logits",
    "predict_logits_matrix",
    "predict_matrix",
    "pseudo_label",
    "rules_text",
    "run_experiment",
    "save_csv",
    "save_tree",
    "soften_logits",
    "to_one_hot",
    "train_test_split",
    "tree_depth",
]
