"""Median-based R2, repeated k-fold CV, grid search, and paired t-testing.

R2 here is robust: 1 - (med|y - f| / med|y - med y|)^2, with the lower
median (element floor((n-1)/2) of the sorted sequence) for even counts, so
reported values stay attainable by actual residuals and deterministic.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from itertools import product
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .dataset import Dataset, kfold_split
from .kernels import KernelSpec
from .mmd import MMDParams, train_mmd
from .model import predict
from .svr import SVRParams, train_svr

__all__ = [
    "UndefinedR2Error",
    "CVResult",
    "GridSpec",
    "TTestResult",
    "r2",
    "cross_validate",
    "grid_search",
    "paired_t_test",
    "grid_table_to_csv",
    "cv_values_to_csv",
]


class UndefinedR2Error(ValueError):
    """R2 is undefined because the target MAD is zero."""


def _lower_median(v: np.ndarray) -> float:
    v = np.sort(np.asarray(v, dtype=np.float64))
    return float(v[(v.shape[0] - 1) // 2])


def r2(predictions: np.ndarray, targets: np.ndarray) -> float:
    """Robust coefficient of determination (at most 1, possibly negative).

    Raises :class:`UndefinedR2Error` when med|y - med y| is zero
    (near-constant targets).
    """
    f = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if f.shape != y.shape or f.ndim != 1 or f.shape[0] == 0:
        raise ValueError("predictions and targets must be equal-length nonempty vectors")
    mad = _lower_median(np.abs(y - _lower_median(y)))
    if mad == 0.0:
        raise UndefinedR2Error("target MAD is zero; R2 undefined")
    return 1.0 - (_lower_median(np.abs(y - f)) / mad) ** 2


@dataclass(frozen=True)
class CVResult:
    """R2 scores from repeated k-fold CV of one parameter setting.

    ``values`` holds folds*repeats entries in (repeat, fold) order with NaN
    marking folds whose R2 was undefined; those are excluded from the
    aggregates but counted in ``n_undefined``.
    """

    values: np.ndarray
    folds: int
    repeats: int
    params: SVRParams | MMDParams

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.folds * self.repeats,):
            raise ValueError("values must hold folds*repeats entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_undefined(self) -> int:
        return int(np.isnan(self.values).sum())

    @property
    def defined(self) -> np.ndarray:
        return self.values[~np.isnan(self.values)]

    @property
    def mean(self) -> float:
        d = self.defined
        return float(d.mean()) if d.size else math.nan

    @property
    def std(self) -> float:
        """Sample standard deviation (ddof=1) over the defined fold scores."""
        d = self.defined
        return float(d.std(ddof=1)) if d.size > 1 else 0.0

    @property
    def repeat_means(self) -> np.ndarray:
        """Mean score per repeat (the alternative aggregation)."""
        grid = self.values.reshape(self.repeats, self.folds)
        with np.errstate(invalid="ignore"):
            return np.nanmean(grid, axis=1)


def _fold_seed(seed: int, repeat: int) -> int:
    return int(np.random.SeedSequence((seed, repeat)).generate_state(1)[0])


_TRAINERS: dict[str, Callable] = {"svr": train_svr, "mmd": train_mmd}


def cross_validate(d: Dataset, algo: str, params, folds: int = 5,
                   repeats: int = 10, seed: int = 0) -> CVResult:
    """Repeated k-fold cross-validation, fully deterministic under ``seed``.

    Fold splits for repeat r are seeded from (seed, r).  Normalization is fit
    inside the trainer on the train portion only; the held-out portion is
    normalized through the trained model, so no test information leaks.
    """
    trainer = _TRAINERS[algo]
    values = np.empty(folds * repeats)
    k = 0
    for r in range(repeats):
        for train_idx, test_idx in kfold_split(d, folds, _fold_seed(seed, r)):
            model = trainer(d.subset(train_idx), params)
            preds = predict(model, d.instances[test_idx])
            try:
                values[k] = r2(preds, d.targets[test_idx])
            except UndefinedR2Error:
                values[k] = math.nan
            k += 1
    return CVResult(values, folds, repeats, params)


_POW2_WIDTHS = tuple(float(2.0**k) for k in range(-4, 6))


@dataclass(frozen=True)
class GridSpec:
    """Candidate lists for grid search; defaults follow the standard grids.

    ``width_scales`` are multipliers of the average pairwise distance of the
    normalized training instances (ignored for linear kernels).
    """

    eps: tuple[float, ...] = (0.01, 0.05, 0.1, 0.2)
    c: tuple[float, ...] = tuple(float(2.0**k) for k in range(10))
    c1: tuple[float, ...] = (5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    c2: tuple[float, ...] = (5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    mu: tuple[float, ...] = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    width_scales: tuple[float, ...] = _POW2_WIDTHS

    def __post_init__(self) -> None:
        for name in ("eps", "c", "c1", "c2", "mu", "width_scales"):
            vals = tuple(float(x) for x in getattr(self, name))
            if not vals:
                raise ValueError(f"empty candidate list for {name}")
            object.__setattr__(self, name, vals)
        if any(not 0.5 <= m <= 1.0 for m in self.mu):
            raise ValueError("mu candidates must lie in [0.5,1]")

    def points(self, algo: str, base) -> list:
        """Parameter objects in enumeration order: eps, C/C1, C2, mu, width."""
        rbf = base.kernel.kind == "rbf"
        widths: Sequence[float | None] = self.width_scales if rbf else (None,)

        def kernel_for(w):
            if w is None:
                return base.kernel
            return KernelSpec("rbf", None, base.kernel.bias_augment, width_scale=w)

        if algo == "svr":
            return [
                replace(base, eps=e, c=c, kernel=kernel_for(w))
                for e, c, w in product(self.eps, self.c, widths)
            ]
        if algo == "mmd":
            return [
                replace(base, eps=e, c1=c1, c2=c2, mu=m, kernel=kernel_for(w))
                for e, c1, c2, m, w in product(self.eps, self.c1, self.c2, self.mu, widths)
            ]
        raise ValueError(f"unknown algorithm {algo!r}")


def grid_search(d: Dataset, algo: str, grid: GridSpec, base,
                folds: int = 5, repeats: int = 1, seed: int = 0,
                on_result: Callable[[CVResult], None] | None = None):
    """Evaluate every grid point under shared folds; return (best params,
    its CVResult).

    ``base`` supplies the kernel kind/bias and solver controls; grid values
    override the searched fields.  Ties keep the earliest point in
    enumeration order.  ``on_result`` (when given) sees every CVResult as it
    is produced, e.g. for streaming a grid table to CSV.
    """
    best: CVResult | None = None
    for params in grid.points(algo, base):
        res = cross_validate(d, algo, params, folds=folds, repeats=repeats, seed=seed)
        if on_result is not None:
            on_result(res)
        score = -math.inf if math.isnan(res.mean) else res.mean
        best_score = -math.inf if best is None or math.isnan(best.mean) else best.mean
        if best is None or score > best_score:
            best = res
    assert best is not None
    return best.params, best


# two-sided Student-t critical values, frozen; rows are df, columns the
# confidence level of the test
_T_CRIT: dict[float, dict[int, float]] = {
    0.90: {
        1: 6.313752, 2: 2.919986, 3: 2.353363, 4: 2.131847, 5: 2.015048,
        6: 1.943180, 7: 1.894579, 8: 1.859548, 9: 1.833113, 10: 1.812461,
        11: 1.795885, 12: 1.782288, 13: 1.770933, 14: 1.761310, 15: 1.753050,
        16: 1.745884, 17: 1.739607, 18: 1.734064, 19: 1.729133, 20: 1.724718,
        21: 1.720743, 22: 1.717144, 23: 1.713872, 24: 1.710882, 25: 1.708141,
        26: 1.705618, 27: 1.703288, 28: 1.701131, 29: 1.699127, 30: 1.697261,
        31: 1.695519, 32: 1.693889, 33: 1.692360, 34: 1.690924, 35: 1.689572,
        36: 1.688298, 37: 1.687094, 38: 1.685954, 39: 1.684875, 40: 1.683851,
        41: 1.682878, 42: 1.681952, 43: 1.681071, 44: 1.680230, 45: 1.679427,
        46: 1.678660, 47: 1.677927, 48: 1.677224, 49: 1.676551, 50: 1.675905,
        51: 1.675285, 52: 1.674689, 53: 1.674116, 54: 1.673565, 55: 1.673034,
        56: 1.672522, 57: 1.672029, 58: 1.671553, 59: 1.671093, 60: 1.670649,
        70: 1.666914, 80: 1.664125, 90: 1.661961, 100: 1.660234, 120: 1.657651,
    },
    0.95: {
        1: 12.706205, 2: 4.302653, 3: 3.182446, 4: 2.776445, 5: 2.570582,
        6: 2.446912, 7: 2.364624, 8: 2.306004, 9: 2.262157, 10: 2.228139,
        11: 2.200985, 12: 2.178813, 13: 2.160369, 14: 2.144787, 15: 2.131450,
        16: 2.119905, 17: 2.109816, 18: 2.100922, 19: 2.093024, 20: 2.085963,
        21: 2.079614, 22: 2.073873, 23: 2.068658, 24: 2.063899, 25: 2.059539,
        26: 2.055529, 27: 2.051831, 28: 2.048407, 29: 2.045230, 30: 2.042272,
        31: 2.039513, 32: 2.036933, 33: 2.034515, 34: 2.032245, 35: 2.030108,
        36: 2.028094, 37: 2.026192, 38: 2.024394, 39: 2.022691, 40: 2.021075,
        41: 2.019541, 42: 2.018082, 43: 2.016692, 44: 2.015368, 45: 2.014103,
        46: 2.012896, 47: 2.011741, 48: 2.010635, 49: 2.009575, 50: 2.008559,
        51: 2.007584, 52: 2.006647, 53: 2.005746, 54: 2.004879, 55: 2.004045,
        56: 2.003241, 57: 2.002465, 58: 2.001717, 59: 2.000995, 60: 2.000298,
        70: 1.994437, 80: 1.990063, 90: 1.986675, 100: 1.983972, 120: 1.979930,
    },
    0.99: {
        1: 63.656741, 2: 9.924843, 3: 5.840909, 4: 4.604095, 5: 4.032143,
        6: 3.707428, 7: 3.499483, 8: 3.355387, 9: 3.249836, 10: 3.169273,
        11: 3.105807, 12: 3.054540, 13: 3.012276, 14: 2.976843, 15: 2.946713,
        16: 2.920782, 17: 2.898231, 18: 2.878440, 19: 2.860935, 20: 2.845340,
        21: 2.831360, 22: 2.818756, 23: 2.807336, 24: 2.796940, 25: 2.787436,
        26: 2.778715, 27: 2.770683, 28: 2.763262, 29: 2.756386, 30: 2.749996,
        31: 2.744042, 32: 2.738481, 33: 2.733277, 34: 2.728394, 35: 2.723806,
        36: 2.719485, 37: 2.715409, 38: 2.711558, 39: 2.707913, 40: 2.704459,
        41: 2.701181, 42: 2.698066, 43: 2.695102, 44: 2.692278, 45: 2.689585,
        46: 2.687013, 47: 2.684556, 48: 2.682204, 49: 2.679952, 50: 2.677793,
        51: 2.675722, 52: 2.673734, 53: 2.671823, 54: 2.669985, 55: 2.668216,
        56: 2.666512, 57: 2.664870, 58: 2.663287, 59: 2.661759, 60: 2.660283,
        70: 2.647905, 80: 2.638691, 90: 2.631565, 100: 2.625891, 120: 2.617421,
    },
}


def _critical_value(level: float, df: int) -> float:
    table = _T_CRIT.get(level)
    if table is None:
        raise ValueError(f"unsupported significance level {level}; have {sorted(_T_CRIT)}")
    if df < 1:
        raise ValueError("need at least two paired samples")
    if df in table:
        return table[df]
    available = [k for k in table if k <= df]
    # nearest lower tabulated df: its larger critical value is conservative
    return table[max(available)]


class TTestResult(NamedTuple):
    significant: bool
    direction: str  # "a", "b", or "tie"
    t_stat: float


def paired_t_test(a: np.ndarray, b: np.ndarray, level: float = 0.95) -> TTestResult:
    """Two-sided paired t-test on matched score vectors.

    Zero-variance differences are significant by convention when their mean
    is nonzero (infinite t) and not significant when the samples are
    identical.  ``direction`` names the sample with the higher mean.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.shape[0] < 2:
        raise ValueError("need two equal-length paired vectors with >= 2 entries")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("paired t-test inputs must be finite")
    diff = a - b
    mean = float(diff.mean())
    direction = "a" if mean > 0 else ("b" if mean < 0 else "tie")
    sd = float(diff.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(False, "tie", 0.0)
        return TTestResult(True, direction, math.copysign(math.inf, mean))
    t = mean / (sd / math.sqrt(diff.shape[0]))
    crit = _critical_value(level, diff.shape[0] - 1)
    return TTestResult(abs(t) > crit, direction, t)


# ---------------------------------------------------------------------------
# CSV export


def _param_columns(params) -> dict[str, object]:
    w = params.kernel.width_scale
    width = "" if w is None else repr(float(w))
    if isinstance(params, SVRParams):
        return {"eps": params.eps, "c": params.c, "width_scale": width}
    return {
        "eps": params.eps, "c1": params.c1, "c2": params.c2,
        "mu": params.mu, "width_scale": width,
    }


def _full(v) -> str:
    return format(v, ".17g") if isinstance(v, float) else str(v)


def grid_table_to_csv(results: Iterable[CVResult], path: str | Path) -> None:
    """One row per grid point: params..., mean, std, n_undefined."""
    results = list(results)
    if not results:
        raise ValueError("no grid results to export")
    header = list(_param_columns(results[0].params)) + ["mean", "std", "n_undefined"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for res in results:
            cols = _param_columns(res.params)
            w.writerow([_full(v) for v in cols.values()]
                       + [_full(res.mean), _full(res.std), str(res.n_undefined)])


def cv_values_to_csv(res: CVResult, path: str | Path) -> None:
    """Per-fold scores of one CV run: rows of (repeat, fold, r2)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["repeat", "fold", "r2"])
        for idx, val in enumerate(res.values):
            r, f = divmod(idx, res.folds)
            w.writerow([r, f, "undefined" if math.isnan(val) else _full(float(val))])
