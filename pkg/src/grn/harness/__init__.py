from .config import (
    DATA_ROOT_VAR,
    DEFAULT_LABEL_FRACTIONS,
    ExperimentConfig,
    PhantomSpec,
    SplitSpec,
    build_train_config,
    load_experiment_config,
    parse_experiment_config,
    resolve_dataset_path,
    resolved_experiment_dict,
)
from .experiments import (
    ABLATION_ROWS,
    consolidate_reports,
    run_ablation,
    run_sweep,
)
from .runs import (
    RunRecord,
    evaluate_bundle,
    evaluate_checkpoint_cell,
    prepare_dataset,
    run_cell,
)

__all__ = [
    "ABLATION_ROWS",
    "DATA_ROOT_VAR",
    "DEFAULT_LABEL_FRACTIONS",
    "ExperimentConfig",
    "PhantomSpec",
    "RunRecord",
    "SplitSpec",
    "build_train_config",
    "consolidate_reports",
    "evaluate_bundle",
    "evaluate_checkpoint_cell",
    "load_experiment_config",
    "parse_experiment_config",
    "prepare_dataset",
    "resolve_dataset_path",
    "resolved_experiment_dict",
    "run_ablation",
    "run_cell",
    "run_sweep",
]
