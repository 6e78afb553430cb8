"""claimlens: train interpretable claim classifiers, attribute predictions
to words with Shapley values, and render human-readable explanation cards.

The package is organized around a file-composable pipeline:

    corpus      load/validate/split labeled claim datasets (JSONL / CSV)
    textprep    deterministic normalization + TF-IDF featurization
    augment     back-translation augmentation through pluggable clients
    teacher     ingest externally produced teacher probabilities
    models      from-scratch logistic / distilled / tree / forest students
    explain     Shapley attributions (linear, brute-force, tree, sampling)
    cards       explanation-card rendering (T / TSE / TSESE tiers)
    evaluation  metrics, stratified cross-validation, report tables
    cli         command-line entry point wiring the stages together
"""

__version__ = "0.1.0"

from .corpus import (
    ClaimRecord,
    CorpusError,
    Dataset,
    FAKE_LABEL,
    SplitPlan,
    TRUE_LABEL,
    load_dataset,
    normalize_label,
    save_dataset,
    stratified_kfold,
)
from .textprep import (
    FeatureVector,
    TextPrepConfig,
    TextPrepError,
    Vectorizer,
    featurize_texts,
    fit_vectorizer,
    stack_features,
    stem,
    tokenize,
    transform,
)
from .augment import (
    AugmentationReport,
    FixtureTranslationClient,
    HttpTranslationClient,
    IdentityTranslationClient,
    TranslationClient,
    TranslationError,
    augment_dataset,
    back_translate,
    load_paraphrase_fixture,
)
from .teacher import (
    TeacherError,
    TeacherTargets,
    ingest_teacher_targets,
    write_teacher_targets,
)
from .models import (
    ForestConfig,
    ForestModel,
    LogisticModel,
    Model,
    ModelError,
    TrainConfig,
    TreeConfig,
    TreeModel,
    clamp_probability,
    distill_loss,
    embedding_matrix,
    load_embedding_features,
    load_model,
    logistic_loss_and_grad,
    logit,
    predict_proba,
    predict_proba_batch,
    save_model,
    sigmoid,
    train_distilled,
    train_forest,
    train_logistic,
    train_tree,
)
from .explain import (
    Attribution,
    Background,
    CoalitionValue,
    ExplainError,
    active_features,
    attribution_from_dict,
    attribution_to_dict,
    build_background,
    coalition_value,
    exact_shapley,
    explain,
    linear_shap,
    model_logodds,
    sampling_shapley,
    tree_shap,
    used_features,
)
from .cards import (
    CardError,
    ExplanationCard,
    WordContribution,
    build_card,
    card_from_dict,
    card_to_dict,
    render_card,
    render_html,
    render_terminal,
    save_card,
)
from .evaluation import (
    EvalError,
    MetricsReport,
    PipelineSpec,
    classification_metrics,
    cross_validate,
    fit_pipeline,
    metrics_report_from_dict,
    render_report,
    roc_auc,
)
from .synthetic import (
    bayes_posterior,
    generate_synthetic_corpus,
    load_bundled_corpus,
    synthetic_teacher_probabilities,
)
