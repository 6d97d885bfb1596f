"""Multi-dataset text moderation harness.

Unifies heterogeneous toxicity and brand-safety datasets into one binary
classification task, trains pluggable transformer classifiers under four
weighted-sampling regimes, and produces cross-dataset F1 matrices,
per-class breakdowns, and 2D embedding projections.
"""

from .errors import ConfigError, DataError, ModharnessError, TrainingError
from .records import (
    AHS,
    GARM,
    JUB,
    KTC,
    NEGATIVE,
    POSITIVE,
    PRIVATE,
    PRIVATE_SUBSET,
    SOLID,
    SURGE,
    TEST,
    TRAIN,
    VALIDATION,
    RawLabel,
    TextRecord,
    read_corpus,
    write_corpus,
)
from .ingest import (
    DatasetDescriptor,
    IngestStats,
    SplitSpec,
    assign_predefined_splits,
    builtin_descriptors,
    concat_corpora,
    load_dataset,
    split_train_test,
    split_train_val,
)
from .labels import (
    BinarizationRule,
    binarize,
    binarize_all,
    class_counts,
    default_rules,
    extract_private_subset,
)
from .sampling import (
    BY_BOTH,
    BY_DATASET,
    BY_LABEL,
    COMBINED,
    STRATEGIES,
    WeightTable,
    compute_weights,
    empirical_distribution,
    sample_epoch,
    write_weight_table,
)
from .backbones import HFTransformerBackbone, TextClassifier, TinyBackbone, create_backbone, register_backbone
from .harness import (
    Prediction,
    TrainConfig,
    TrainedModel,
    TrainedModelBundle,
    fine_tune,
    load_bundle,
    predict,
    run_restarts,
    save_bundle,
)
from .evaluation import (
    ConfusionCounts,
    EvalReport,
    F1Result,
    aggregate_restarts,
    cross_matrix,
    f1_score,
    per_class_breakdown,
)
from .projection import (
    EmbeddingPoint,
    PcaModel,
    extract_embeddings,
    fit_pca_2d,
    project,
    sample_per_dataset,
)
from .config import RunConfig, load_config

__version__ = "0.1.0"
