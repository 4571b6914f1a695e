"""Trained-predictor representation, prediction, and text serialization."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import NormalizationParams, apply_normalizer, Dataset
from .kernels import KernelSpec, cross_kernel

__all__ = [
    "Model",
    "ModelFormatError",
    "NotAModelFileError",
    "ModelVersionError",
    "TruncatedModelError",
    "predict",
    "save_model",
    "load_model",
]

_MAGIC = "MMDSVR-MODEL"
_VERSION = "v1"


class ModelFormatError(ValueError):
    """A model file is malformed."""


class NotAModelFileError(ModelFormatError):
    """The file does not carry the model magic header."""


class ModelVersionError(ModelFormatError):
    """The file carries an unsupported format version."""


class TruncatedModelError(ModelFormatError):
    """The file ends before all declared fields are present."""


@dataclass(frozen=True)
class Model:
    """Kernel expansion predictor: f(x) = sum_i c_i k(x_i, x) + b.

    Support instances are stored in normalized attribute space; ``predict``
    normalizes raw inputs with the stored parameters first.  The kernel spec
    records bias augmentation so prediction reproduces training geometry
    exactly; under augmentation the explicit bias is 0.
    """

    support_instances: np.ndarray
    coef: np.ndarray
    bias: float
    kernel: KernelSpec
    normalization: NormalizationParams
    converged: bool = True
    algorithm: str = "svr"

    def __post_init__(self) -> None:
        X = np.asarray(self.support_instances, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("support instances must be a 2-D (m, d) matrix")
        c = np.asarray(self.coef, dtype=np.float64).reshape(-1)
        if X.shape[0] != c.shape[0]:
            raise ValueError(
                f"coefficient count {c.shape[0]} != support count {X.shape[0]}"
            )
        if X.shape[1] != self.normalization.d:
            raise ValueError(
                f"support width {X.shape[1]} != normalization width {self.normalization.d}"
            )
        if X.size and not np.all(np.isfinite(X)):
            raise ValueError("support instances contain non-finite values")
        if c.size and not np.all(np.isfinite(c)):
            raise ValueError("coefficients contain non-finite values")
        if not np.isfinite(self.bias):
            raise ValueError("bias must be finite")
        if self.algorithm not in ("svr", "mmd"):
            raise ValueError(f"unknown algorithm tag {self.algorithm!r}")
        self.kernel._require_resolved()
        object.__setattr__(self, "support_instances", X)
        object.__setattr__(self, "coef", c)
        X.setflags(write=False)
        c.setflags(write=False)

    @property
    def d(self) -> int:
        return self.normalization.d


def predict(m: Model, x: np.ndarray) -> float | np.ndarray:
    """Evaluate the model at raw (pre-normalization) inputs.

    Accepts a single instance of shape (d,) or a batch of shape (N, d);
    returns a float or a vector accordingly.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != m.d:
        raise ValueError(f"dimension mismatch: expected {m.d} attributes, got {X.shape[1]}")
    Xn = apply_normalizer(m.normalization, Dataset(X, np.zeros(X.shape[0]))).instances
    if m.coef.size == 0:
        out = np.full(X.shape[0], m.bias)
    else:
        out = cross_kernel(m.kernel, Xn, m.support_instances) @ m.coef + m.bias
    return float(out[0]) if single else out


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _fmt_vec(v: np.ndarray) -> str:
    return ",".join(_fmt(x) for x in v)


def save_model(m: Model, path: str | Path) -> None:
    """Write the model in the line-oriented v1 text format.

    Field order: magic, algorithm tag, kernel (kind width bias_augment), d,
    normalization min vector, max vector, support count, then one
    "c,x_1,...,x_d" line per support instance.  Floats carry 17 significant
    digits so the round trip is bit-exact.  Linear kernels record width 0;
    convergence state is not part of the format.
    """
    lines = [
        f"{_MAGIC} {_VERSION}",
        m.algorithm,
        f"{m.kernel.kind} {_fmt(m.kernel.width if m.kernel.kind == 'rbf' else 0.0)} "
        f"{int(m.kernel.bias_augment)}",
        str(m.d),
        _fmt_vec(m.normalization.mins),
        _fmt_vec(m.normalization.maxs),
        str(m.coef.shape[0]),
    ]
    for c, row in zip(m.coef, m.support_instances):
        lines.append(_fmt(c) + "," + _fmt_vec(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


class _LineReader:
    def __init__(self, text: str, path: Path) -> None:
        self.lines = text.splitlines()
        self.pos = 0
        self.path = path

    def next(self, what: str) -> str:
        if self.pos >= len(self.lines):
            raise TruncatedModelError(f"truncated model file {self.path}: missing {what}")
        line = self.lines[self.pos]
        self.pos += 1
        return line


def _parse_floats(line: str, count: int, what: str, path: Path) -> np.ndarray:
    parts = line.split(",")
    if len(parts) != count:
        raise ModelFormatError(
            f"malformed model file {path}: {what} has {len(parts)} fields, expected {count}"
        )
    try:
        return np.array([float(p) for p in parts])
    except ValueError as e:
        raise ModelFormatError(f"malformed model file {path}: bad number in {what}") from e


def load_model(path: str | Path) -> Model:
    """Read a model written by :func:`save_model`.

    Predictions of the loaded model are bit-identical to the saved one.
    Raises :class:`NotAModelFileError`, :class:`ModelVersionError`,
    :class:`TruncatedModelError`, or :class:`ModelFormatError` for the
    corresponding defects.
    """
    path = Path(path)
    r = _LineReader(path.read_text(encoding="utf-8"), path)

    magic = r.next("magic header").strip()
    if not magic.startswith(_MAGIC):
        raise NotAModelFileError(f"not a model file: {path}")
    version = magic[len(_MAGIC) :].strip()
    if version != _VERSION:
        raise ModelVersionError(f"unsupported model file version {version!r} in {path}")

    algorithm = r.next("algorithm tag").strip()
    kparts = r.next("kernel spec").split()
    if len(kparts) != 3:
        raise ModelFormatError(f"malformed model file {path}: bad kernel line")
    kind, width_s, bias_s = kparts
    try:
        width = float(width_s)
        bias_augment = bool(int(bias_s))
        d = int(r.next("attribute count"))
    except ValueError as e:
        raise ModelFormatError(f"malformed model file {path}: {e}") from e
    mins = _parse_floats(r.next("normalization mins"), d, "normalization mins", path)
    maxs = _parse_floats(r.next("normalization maxs"), d, "normalization maxs", path)
    try:
        m_count = int(r.next("support count"))
    except ValueError as e:
        raise ModelFormatError(f"malformed model file {path}: bad support count") from e

    coef = np.empty(m_count)
    support = np.empty((m_count, d))
    for i in range(m_count):
        row = _parse_floats(r.next(f"support row {i}"), d + 1, f"support row {i}", path)
        coef[i] = row[0]
        support[i] = row[1:]

    kernel = KernelSpec(kind, width if kind == "rbf" else None, bias_augment)
    return Model(
        support_instances=support,
        coef=coef,
        bias=0.0,
        kernel=kernel,
        normalization=NormalizationParams(mins, maxs),
        converged=True,
        algorithm=algorithm,
    )
