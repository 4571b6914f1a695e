"""Data ingestion, per-attribute normalization, fold splitting, and synthetic data.

Attributes are normalized to [-1, 1] (fit on training data only); targets are
left in original units so evaluation metrics are computed on the raw scale.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "CsvFormatError",
    "Dataset",
    "NormalizationParams",
    "SyntheticSpec",
    "SYNTHETIC_FUNCTIONS",
    "load_csv",
    "fit_normalizer",
    "apply_normalizer",
    "kfold_split",
    "gen_synthetic",
    "export_fold_assignments",
]


class CsvFormatError(ValueError):
    """A CSV file could not be parsed into a numeric dataset."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Instance matrix of shape (n, d) plus a target vector of length n.

    Immutable after construction (arrays are marked read-only), so a Dataset
    is safe to share across concurrent readers.
    """

    instances: np.ndarray
    targets: np.ndarray

    def __post_init__(self) -> None:
        X = np.asarray(self.instances, dtype=np.float64)
        y = np.asarray(self.targets, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("instances must be a 2-D matrix")
        if y.ndim != 1:
            raise ValueError("targets must be a 1-D vector")
        if X.shape[0] < 1:
            raise ValueError("dataset needs at least one instance")
        if y.shape[0] != X.shape[0]:
            raise ValueError(
                f"targets length {y.shape[0]} != instance count {X.shape[0]}"
            )
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise ValueError("dataset contains non-finite values")
        object.__setattr__(self, "instances", _frozen(X))
        object.__setattr__(self, "targets", _frozen(y))

    @property
    def n(self) -> int:
        return self.instances.shape[0]

    @property
    def d(self) -> int:
        return self.instances.shape[1]

    def subset(self, indices: np.ndarray) -> "Dataset":
        """New Dataset holding the rows selected by ``indices``."""
        return Dataset(self.instances[indices], self.targets[indices])


@dataclass(frozen=True)
class NormalizationParams:
    """Per-attribute minima and maxima recorded from a training set."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self) -> None:
        lo = np.asarray(self.mins, dtype=np.float64)
        hi = np.asarray(self.maxs, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("mins/maxs must be 1-D vectors of equal length")
        if np.any(hi < lo):
            raise ValueError("max < min for some attribute")
        object.__setattr__(self, "mins", _frozen(lo))
        object.__setattr__(self, "maxs", _frozen(hi))

    @property
    def d(self) -> int:
        return self.mins.shape[0]

    @classmethod
    def identity(cls, d: int) -> "NormalizationParams":
        """Parameters under which apply_normalizer is the identity map."""
        return cls(np.full(d, -1.0), np.full(d, 1.0))


def _parse_float(s: str) -> float | None:
    try:
        return float(s)
    except ValueError:
        return None


def load_csv(path: str | Path, target_column: int = -1) -> Dataset:
    """Read a comma-separated numeric file into a Dataset.

    The column at ``target_column`` (negative indices allowed, default last)
    becomes the target vector; the remaining columns become the instances, in
    file order.  A single header row is skipped when no field of the first
    row parses as a number.  Parse errors report 0-based data-row and column
    indices (header excluded).
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise CsvFormatError(f"cannot read {path}: {e}") from e

    rows = [r for r in csv.reader(text.splitlines()) if r and any(f.strip() for f in r)]
    if rows and all(_parse_float(f) is None for f in rows[0]):
        rows = rows[1:]  # header row
    if not rows:
        raise CsvFormatError(f"empty dataset: {path}")

    width = len(rows[0])
    if width < 2:
        raise CsvFormatError(f"{path}: need at least two columns, got {width}")
    tcol = target_column if target_column >= 0 else width + target_column
    if not 0 <= tcol < width:
        raise CsvFormatError(
            f"target column {target_column} out of range for {width} columns"
        )

    data = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise CsvFormatError(
                f"{path}: inconsistent row width at row {i} "
                f"(expected {width} fields, got {len(row)})"
            )
        for j, fld in enumerate(row):
            v = _parse_float(fld)
            if v is None:
                raise CsvFormatError(
                    f"{path}: non-numeric field {fld!r} at row {i}, column {j}"
                )
            data[i, j] = v

    mask = np.ones(width, dtype=bool)
    mask[tcol] = False
    return Dataset(data[:, mask], data[:, tcol])


def fit_normalizer(d: Dataset) -> NormalizationParams:
    """Record per-attribute min/max of the instances. Targets are untouched."""
    return NormalizationParams(d.instances.min(axis=0), d.instances.max(axis=0))


def apply_normalizer(p: NormalizationParams, d: Dataset) -> Dataset:
    """Map each attribute affinely so the recorded [min, max] lands on [-1, 1].

    Constant attributes (max == min) map to 0.  Values outside the recorded
    range (test data) extrapolate linearly; nothing is clipped.
    """
    if d.d != p.d:
        raise ValueError(f"attribute count mismatch: dataset {d.d}, params {p.d}")
    span = p.maxs - p.mins
    safe = np.where(span > 0, span, 1.0)
    out = (d.instances - p.mins) * 2.0 / safe - 1.0
    out[:, span == 0] = 0.0
    return Dataset(out, d.targets)


def kfold_split(
    d: Dataset, k: int, seed: int
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Deterministic k-fold partition: list of (train_indices, test_indices).

    Indices 0..n-1 are shuffled by a generator seeded with ``seed`` and split
    into k folds whose sizes differ by at most one; each fold serves as the
    test set exactly once.  The same seed reproduces identical folds.
    """
    n = d.n
    if not 2 <= k <= n:
        raise ValueError(f"k must satisfy 2 <= k <= n ({k=}, {n=})")
    perm = np.random.default_rng(seed).permutation(n)
    parts = np.array_split(perm, k)
    folds = []
    for i, test in enumerate(parts):
        train = np.concatenate([p for j, p in enumerate(parts) if j != i])
        folds.append((np.sort(train), np.sort(test)))
    return folds


def export_fold_assignments(
    folds: Sequence[tuple[np.ndarray, np.ndarray]], path: str | Path
) -> None:
    """Write fold assignments as CSV rows of (index, fold)."""
    pairs = sorted(
        (int(i), fold_id) for fold_id, (_, test) in enumerate(folds) for i in test
    )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "fold"])
        w.writerows(pairs)


# ---------------------------------------------------------------------------
# synthetic benchmarks


@dataclass(frozen=True)
class _Generator:
    fn: Callable[[np.ndarray], np.ndarray]
    dim: int
    bounds: tuple[tuple[float, float], ...]


def _sinc(X: np.ndarray) -> np.ndarray:
    # np.sinc is the normalized sinc: sin(pi x)/(pi x), with sinc(0) = 1
    return np.sinc(X[:, 0])


def _cubic(X: np.ndarray) -> np.ndarray:
    x = X[:, 0]
    return x**3 - 3.0 * x


def _additive2(X: np.ndarray) -> np.ndarray:
    return np.sin(X[:, 0]) + np.cos(X[:, 1])


SYNTHETIC_FUNCTIONS: dict[str, _Generator] = {
    "sinc": _Generator(_sinc, 1, ((-4.0, 4.0),)),
    "cubic": _Generator(_cubic, 1, ((-2.0, 2.0),)),
    "additive2": _Generator(_additive2, 2, ((-3.0, 3.0), (-3.0, 3.0))),
}


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic regression benchmark draw."""

    function: str
    n: int = 200
    noise_sd: float = 0.1
    bounds: tuple[tuple[float, float], ...] | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.function not in SYNTHETIC_FUNCTIONS:
            known = ", ".join(sorted(SYNTHETIC_FUNCTIONS))
            raise ValueError(f"unknown function {self.function!r} (known: {known})")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.noise_sd < 0:
            raise ValueError("noise standard deviation must be >= 0")
        gen = SYNTHETIC_FUNCTIONS[self.function]
        bounds = self.bounds if self.bounds is not None else gen.bounds
        bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
        if len(bounds) != gen.dim:
            raise ValueError(f"{self.function} needs {gen.dim} bound pairs")
        if any(lo >= hi for lo, hi in bounds):
            raise ValueError("each lower bound must be below its upper bound")
        object.__setattr__(self, "bounds", bounds)


def _standard_normals(rng: np.random.Generator, n: int) -> np.ndarray:
    """n standard normals via Box-Muller over the uniform stream.

    Using an explicit transform (rather than Generator.normal) keeps the
    noise stream bit-reproducible for a given seed independently of numpy's
    internal normal-sampling algorithm.
    """
    m = (n + 1) // 2
    u1 = 1.0 - rng.random(m)  # in (0, 1]: keeps log() finite
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
    return z[:n]


def gen_synthetic(spec: SyntheticSpec) -> tuple[Dataset, np.ndarray]:
    """Draw a synthetic dataset: (noisy training set, clean target vector).

    Inputs are uniform over the domain bounds; training targets are the
    generator function values plus independent Gaussian noise of standard
    deviation ``noise_sd``.  Deterministic under ``seed``; with noise_sd=0
    the training targets equal the clean targets bit-exactly.
    """
    gen = SYNTHETIC_FUNCTIONS[spec.function]
    rng = np.random.default_rng(spec.seed)
    lo = np.array([b[0] for b in spec.bounds])
    hi = np.array([b[1] for b in spec.bounds])
    X = lo + (hi - lo) * rng.random((spec.n, gen.dim))
    clean = gen.fn(X)
    if spec.noise_sd == 0.0:
        noisy = clean.copy()
    else:
        noisy = clean + spec.noise_sd * _standard_normals(rng, spec.n)
    return Dataset(X, noisy), clean
