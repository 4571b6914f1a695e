"""Kernel SVR toolkit: tube-loss baseline plus margin-distribution training.

Two trainers share one kernel/model/evaluation stack:

- :func:`train_svr` - canonical insensitive-tube SVR by dual coordinate
  descent over box constraints;
- :func:`train_mmd` - margin-distribution SVR, whose dual couples five
  multiplier vectors per sample through shared upper bounds and is solved by
  coordinate descent with geometric backtracking.

Evaluation is median-based R2 under repeated k-fold cross-validation, with
grid search and paired t-tests for benchmark comparisons.  The ``mmdsvr``
command line (see :mod:`mmdsvr.cli`) wraps data generation, training,
prediction, cross-validation, and benchmarking.
"""

from .dataset import (
    CsvFormatError,
    Dataset,
    NormalizationParams,
    SyntheticSpec,
    SYNTHETIC_FUNCTIONS,
    apply_normalizer,
    export_fold_assignments,
    fit_normalizer,
    gen_synthetic,
    kfold_split,
    load_csv,
)
from .evaluation import (
    CVResult,
    GridSpec,
    TTestResult,
    UndefinedR2Error,
    cross_validate,
    cv_values_to_csv,
    grid_search,
    grid_table_to_csv,
    paired_t_test,
    r2,
)
from .kernels import (
    GramMatrix,
    KernelSpec,
    avg_pairwise_distance,
    cross_kernel,
    eval_kernel,
    gram,
)
from .mmd import (
    DegenerateModelError,
    DualState,
    MMDParams,
    dual_objective,
    margin_stats,
    partials,
    train_mmd,
    update_box_var,
    update_coupled_var,
    update_psi,
)
from .model import (
    Model,
    ModelFormatError,
    ModelVersionError,
    NotAModelFileError,
    TruncatedModelError,
    load_model,
    predict,
    save_model,
)
from .svr import SVRParams, svr_dual_objective, train_svr

__version__ = "0.1.0"

__all__ = [
    "CsvFormatError",
    "CVResult",
    "Dataset",
    "DegenerateModelError",
    "DualState",
    "GramMatrix",
    "GridSpec",
    "KernelSpec",
    "MMDParams",
    "Model",
    "ModelFormatError",
    "ModelVersionError",
    "NormalizationParams",
    "NotAModelFileError",
    "SVRParams",
    "SYNTHETIC_FUNCTIONS",
    "SyntheticSpec",
    "TTestResult",
    "TruncatedModelError",
    "UndefinedR2Error",
    "apply_normalizer",
    "avg_pairwise_distance",
    "cross_kernel",
    "cross_validate",
    "cv_values_to_csv",
    "dual_objective",
    "eval_kernel",
    "export_fold_assignments",
    "fit_normalizer",
    "gen_synthetic",
    "gram",
    "grid_search",
    "grid_table_to_csv",
    "kfold_split",
    "load_csv",
    "load_model",
    "margin_stats",
    "paired_t_test",
    "partials",
    "predict",
    "r2",
    "save_model",
    "svr_dual_objective",
    "train_mmd",
    "train_svr",
    "update_box_var",
    "update_coupled_var",
    "update_psi",
]
