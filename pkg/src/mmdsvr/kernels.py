"""Kernel evaluation, Gram matrices, and the average-distance width heuristic.

The RBF kernel is parameterized by a width w acting like a distance:
k(x, z) = exp(-||x - z||^2 / (2 w^2)).  Width grids are expressed as
multipliers of the average pairwise instance distance.

Bias handling: the coordinate-descent duals here carry no sum-to-zero
equality constraint that would pin a free bias, so the bias is absorbed by
kernel augmentation k' = k + 1 and trained models keep an explicit bias of 0.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

__all__ = [
    "KernelSpec",
    "GramMatrix",
    "eval_kernel",
    "cross_kernel",
    "gram",
    "avg_pairwise_distance",
]

DEFAULT_DENSE_CAP = 4096


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus width.

    ``width`` is the concrete RBF width; ``width_scale`` defers it as a
    multiplier of the average pairwise distance of the (normalized) training
    instances, resolved at training time via :meth:`resolve`.  Exactly one of
    the two must be set for an RBF kernel.  ``bias_augment`` adds 1 to every
    kernel value so the bias term lives inside the expansion.
    """

    kind: str
    width: float | None = None
    bias_augment: bool = True
    width_scale: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf":
            if (self.width is None) == (self.width_scale is None):
                raise ValueError("rbf kernel needs exactly one of width/width_scale")
            if self.width is not None and self.width <= 0:
                raise ValueError("rbf width must be positive")
            if self.width_scale is not None and self.width_scale <= 0:
                raise ValueError("rbf width_scale must be positive")

    @property
    def is_resolved(self) -> bool:
        return self.kind != "rbf" or self.width is not None

    def resolve(self, avg_distance: float) -> "KernelSpec":
        """Concrete spec with width = width_scale * avg_distance."""
        if self.is_resolved:
            return self
        return KernelSpec(self.kind, self.width_scale * avg_distance, self.bias_augment)

    def _require_resolved(self) -> None:
        if not self.is_resolved:
            raise ValueError("kernel width not resolved; call resolve() first")


def eval_kernel(spec: KernelSpec, x: np.ndarray, z: np.ndarray) -> float:
    """Kernel value between two instances."""
    spec._require_resolved()
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape or x.ndim != 1:
        raise ValueError(f"dimension mismatch: {x.shape} vs {z.shape}")
    if spec.kind == "linear":
        v = float(x @ z)
    else:
        diff = x - z
        v = float(np.exp(-(diff @ diff) / (2.0 * spec.width**2)))
    return v + 1.0 if spec.bias_augment else v


def _sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # ||a||^2 + ||b||^2 - 2 a.b, clipped at 0 to guard fp roundoff
    sq = (
        np.einsum("ij,ij->i", A, A)[:, None]
        + np.einsum("ij,ij->i", B, B)[None, :]
        - 2.0 * (A @ B.T)
    )
    return np.maximum(sq, 0.0)


def cross_kernel(spec: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Kernel values between two instance sets, shape (len(A), len(B))."""
    spec._require_resolved()
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if spec.kind == "linear":
        K = A @ B.T
    else:
        K = np.exp(-_sq_dists(A, B) / (2.0 * spec.width**2))
    return K + 1.0 if spec.bias_augment else K


class GramMatrix:
    """Pairwise kernel values over one instance set.

    Held dense for n up to ``cap`` (coordinate descent touches one row per
    update, so the full matrix pays off); above the cap rows are computed on
    demand through a small LRU cache.  Read-only interface; cache mutation is
    serialized internally, so concurrent readers are safe.
    """

    def __init__(
        self,
        spec: KernelSpec,
        X: np.ndarray,
        cap: int = DEFAULT_DENSE_CAP,
        cached_rows: int = 256,
    ) -> None:
        spec._require_resolved()
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[0] < 1:
            raise ValueError("need at least one instance")
        self.spec = spec
        self.n = X.shape[0]
        self._X = X
        self._K: np.ndarray | None = None
        self._cache: OrderedDict[int, np.ndarray] = OrderedDict()
        self._cached_rows = max(1, cached_rows)
        self._lock = threading.Lock()

        bias = 1.0 if spec.bias_augment else 0.0
        if spec.kind == "rbf":
            self.diag = np.full(self.n, 1.0 + bias)
        else:
            self.diag = np.einsum("ij,ij->i", X, X) + bias
        self.diag.setflags(write=False)

        if self.n <= cap:
            K = self._compute_block(X)
            # mirror the upper triangle so symmetry is exact
            K = np.triu(K) + np.triu(K, 1).T
            if spec.kind == "rbf":
                np.fill_diagonal(K, 1.0 + bias)
            K.setflags(write=False)
            self._K = K

    def _compute_block(self, A: np.ndarray) -> np.ndarray:
        return cross_kernel(self.spec, A, self._X)

    @property
    def is_dense(self) -> bool:
        return self._K is not None

    @property
    def dense(self) -> np.ndarray:
        if self._K is None:
            raise ValueError("Gram matrix held as row cache; no dense array")
        return self._K

    def row(self, i: int) -> np.ndarray:
        """Row i of the Gram matrix (read-only view or cached array)."""
        if self._K is not None:
            return self._K[i]
        with self._lock:
            row = self._cache.get(i)
            if row is not None:
                self._cache.move_to_end(i)
                return row
        row = self._compute_block(self._X[i : i + 1])[0]
        row[i] = self.diag[i]
        row.setflags(write=False)
        with self._lock:
            self._cache[i] = row
            self._cache.move_to_end(i)
            while len(self._cache) > self._cached_rows:
                self._cache.popitem(last=False)
        return row

    def matvec(self, c: np.ndarray) -> np.ndarray:
        """K @ c for either storage variant."""
        if self._K is not None:
            return self._K @ c
        return np.stack([self.row(i) @ c for i in range(self.n)])


def gram(spec: KernelSpec, X: np.ndarray, cap: int = DEFAULT_DENSE_CAP) -> GramMatrix:
    """Gram matrix of ``X`` under ``spec``; dense up to ``cap`` instances."""
    return GramMatrix(spec, X, cap=cap)


def avg_pairwise_distance(X: np.ndarray) -> float:
    """Mean Euclidean distance over all unordered instance pairs."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] < 2:
        raise ValueError("need at least two instances for pairwise distances")
    return float(pdist(X).mean())
