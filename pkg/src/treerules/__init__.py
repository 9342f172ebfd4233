"""treerules: train small tree ensembles, transpile them into exact if-then
rules, and validate that the rules reproduce the model bit for bit."""

from .data import (
    Dataset,
    DataLoadError,
    EmptyDataError,
    FeatureClassSummary,
    FeatureSchema,
    LoadOptions,
    SchemaError,
    load_csv,
    load_matrix_csv,
    read_schema_config,
    save_csv,
    split,
    summarize,
)
from .explain import (
    Decision,
    DecisionPath,
    decision_path,
    group_decision_path,
    load_feature_dictionary,
    path_to_json,
    render_path_text,
)
from .forest import (
    ForestClassifier,
    derive_tree_seeds,
    fit_forest,
    forest_feature_importances,
    predict_proba_forest,
)
from .interchange import (
    FORMAT_VERSION,
    ModelFormatError,
    export_model_json,
    import_model_json,
    model_from_document,
    model_to_document,
)
from .rulepredict import (
    EquivalenceReport,
    ProbabilityStats,
    RulePredictor,
    predict_proba_from_rules,
    roc_auc,
    verify_equivalence,
)
from .rules import (
    Predicate,
    Rule,
    RuleConsistencyError,
    RuleFileError,
    RuleSet,
    extract_rules,
    read_rules_csv,
    rules_text,
    tree_rules,
    write_rules_csv,
)
from .tree import (
    CartClassifier,
    Tree,
    best_split,
    gini,
    grow_tree,
    predict_proba_tree,
    tree_feature_importances,
)

__version__ = "0.1.0"

__all__ = [
    "CartClassifier",
    "DataLoadError",
    "Dataset",
    "Decision",
    "DecisionPath",
    "EmptyDataError",
    "EquivalenceReport",
    "FeatureClassSummary",
    "FeatureSchema",
    "ForestClassifier",
    "FORMAT_VERSION",
    "LoadOptions",
    "ModelFormatError",
    "Predicate",
    "ProbabilityStats",
    "Rule",
    "RuleConsistencyError",
    "RuleFileError",
    "RulePredictor",
    "RuleSet",
    "SchemaError",
    "Tree",
    "best_split",
    "decision_path",
    "derive_tree_seeds",
    "export_model_json",
    "extract_rules",
    "fit_forest",
    "forest_feature_importances",
    "gini",
    "group_decision_path",
    "grow_tree",
    "import_model_json",
    "load_csv",
    "load_feature_dictionary",
    "load_matrix_csv",
    "model_from_document",
    "model_to_document",
    "path_to_json",
    "predict_proba_forest",
    "predict_proba_from_rules",
    "predict_proba_tree",
    "read_rules_csv",
    "read_schema_config",
    "render_path_text",
    "roc_auc",
    "rules_text",
    "save_csv",
    "split",
    "summarize",
    "tree_feature_importances",
    "tree_rules",
    "verify_equivalence",
    "write_rules_csv",
]
