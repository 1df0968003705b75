"""faukit: action-unit based emotion recognition toolkit.

Building blocks: a FACS rule layer mapping AU activations to emotions, a
synthetic AU feature generator (Gaussian heatmap stacks or probability
vectors), a scikit-learn style bottleneck classifier trained with exact
float64 backprop, evaluation metrics, and experiment runners, all behind
one `faukit` command line.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DataError,
    DimensionError,
    DomainError,
    FaukitError,
    FormatError,
    NumericError,
    UsageError,
)
from .facs import (
    AU_CATALOG,
    AUVocabulary,
    EmotionLabel,
    EmotionRuleSet,
    MatchResult,
    builtin_vocabulary,
    coverage,
    default_rules,
    load_rules,
    load_vocabulary,
    match_emotion,
    save_rules,
    threshold_activations,
)
from .featureio import read_features, write_features
from .synth import (
    DEFAULT_AU_CENTERS,
    Dataset,
    GenConfig,
    generate_dataset,
    load_dataset,
    render_heatmap,
    save_dataset,
    split_dataset,
    split_indices,
)
from .network import (
    LayerSpec,
    backward,
    batch_loss,
    cross_entropy,
    forward,
    init_params,
    load_checkpoint,
    log_softmax,
    save_checkpoint,
    softmax,
    softmax_xent_grad,
)
from .estimator import (
    BottleneckClassifier,
    flatten_stack,
    flatten_stacks,
    head_estimator,
    heatmap_head,
    layer_specs_for_head,
    load_model,
    probvec_head,
)
from .metrics import (
    AUCounts,
    AUMetricTable,
    ConsistencyRates,
    EvaluationReport,
    au_accuracy,
    au_binary_counts,
    au_consistency,
    au_f1,
    au_metric_table,
    confusion_matrix,
    emotion_accuracy,
)
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    ExplainabilityRecord,
    consistency_from_dataset,
    evaluate_au_readout,
    evaluate_emotions,
    explain_records,
    feature_activation_sets,
    run_e1,
    run_e2,
    run_e3,
    run_experiment,
)

__all__ = [name for name in dir() if not name.startswith("_")]
