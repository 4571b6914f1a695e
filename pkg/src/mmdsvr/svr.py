"""Canonical tube-loss SVR trained by dual coordinate descent.

Solves the standard dual

    min over 0 <= alpha, alpha* <= C:
        1/2 c'Kc - c'y + eps * sum(alpha_i + alpha*_i),   c = alpha - alpha*

by cyclic coordinate descent with Newton steps clipped to the box: the
one-dimensional restriction along any coordinate is the parabola
1/2 K_ii t^2 + g t, so the clipped step is its exact constrained minimizer
and the objective never increases.  The bias is absorbed by kernel
augmentation (k + 1), so trained models carry bias 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fastpath
from .dataset import Dataset, apply_normalizer, fit_normalizer
from .kernels import GramMatrix, KernelSpec, avg_pairwise_distance, gram
from .model import Model

__all__ = ["SVRParams", "train_svr", "solve_dual", "svr_dual_objective"]


@dataclass(frozen=True)
class SVRParams:
    """Hyperparameters and solver controls for the baseline SVR."""

    eps: float
    c: float
    kernel: KernelSpec
    tol: float = 1e-6
    max_epochs: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        if self.c <= 0:
            raise ValueError("C must be > 0")
        if self.tol <= 0:
            raise ValueError("tolerance must be > 0")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")


def _matvec(K, c: np.ndarray) -> np.ndarray:
    return K.matvec(c) if isinstance(K, GramMatrix) else K @ c


def svr_dual_objective(alpha: np.ndarray, alpha_star: np.ndarray,
                       K, y: np.ndarray, eps: float) -> float:
    """Dual objective value at (alpha, alpha*)."""
    c = alpha - alpha_star
    return float(0.5 * c @ _matvec(K, c) - c @ y + eps * (alpha + alpha_star).sum())


def _epoch_py(K, y, alpha, alpha_star, u, perm, c, eps):
    # must mirror _fastpath.svr_epoch bit-for-bit
    n = y.shape[0]
    maxviol = 0.0
    for raw in perm:
        idx = int(raw)
        kind = idx // n
        i = idx - kind * n
        kii = float(K.row(i)[i]) if isinstance(K, GramMatrix) else float(K[i, i])
        denom = kii if kii > 1e-12 else 1e-12
        if kind == 0:
            old = alpha[i]
            g = u[i] - y[i] + eps
        else:
            old = alpha_star[i]
            g = -u[i] + y[i] + eps
        bt = 1e-9 * (1.0 + c)
        at_lo = old <= bt
        at_hi = old >= c - bt
        if at_lo and at_hi:
            viol = 0.0
        elif at_lo:
            viol = -g if -g > 0.0 else 0.0
        elif at_hi:
            viol = g if g > 0.0 else 0.0
        else:
            viol = g if g > 0.0 else -g
        if viol > maxviol:
            maxviol = viol
        cand = old - g / denom
        new = 0.0 if cand < 0.0 else (c if cand > c else cand)
        if new != old:
            dc = new - old if kind == 0 else old - new
            row = K.row(i) if isinstance(K, GramMatrix) else K[i]
            u += dc * row
            if kind == 0:
                alpha[i] = new
            else:
                alpha_star[i] = new
    return maxviol


def solve_dual(K, y: np.ndarray, p: SVRParams, *, fast: bool | None = None
               ) -> tuple[np.ndarray, np.ndarray, bool]:
    """Coordinate descent on the tube dual; returns (alpha, alpha*, converged)."""
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    alpha = np.zeros(n)
    alpha_star = np.zeros(n)
    u = np.zeros(n)

    dense = K.dense if isinstance(K, GramMatrix) and K.is_dense else (
        K if not isinstance(K, GramMatrix) else None
    )
    if fast is None:
        use_fast = _fastpath.HAVE_NUMBA and dense is not None
    else:
        use_fast = fast
        if use_fast and dense is None:
            raise ValueError("fast path needs a dense Gram matrix")

    prev_obj = 0.0
    converged = False
    for epoch in range(p.max_epochs):
        perm = np.random.default_rng((p.seed, epoch)).permutation(2 * n)
        if use_fast:
            maxviol = _fastpath.svr_epoch(dense, y, alpha, alpha_star, u, perm, p.c, p.eps)
        else:
            maxviol = _epoch_py(K, y, alpha, alpha_star, u, perm, p.c, p.eps)
        if __debug__:
            obj = svr_dual_objective(alpha, alpha_star, K, y, p.eps)
            assert obj <= prev_obj + 1e-10 * max(1.0, abs(prev_obj)), (
                f"dual objective increased: {prev_obj} -> {obj}"
            )
            prev_obj = obj
        if maxviol < p.tol:
            converged = True
            break
    return alpha, alpha_star, converged


def train_svr(d: Dataset, p: SVRParams, *, fast: bool | None = None) -> Model:
    """Train the baseline SVR; returns a Model flagged non-converged rather
    than raising when the tolerance is not reached within max_epochs.

    Requires bias augmentation on the kernel (the dual has no equality
    constraint to pin a free bias).  ``fast=None`` picks the jitted sweep
    when available and the Gram matrix is dense; both paths produce
    identical models.
    """
    if not p.kernel.bias_augment:
        raise ValueError("train_svr requires a bias-augmented kernel")
    nrm = fit_normalizer(d)
    Xn = apply_normalizer(nrm, d).instances
    spec = p.kernel if p.kernel.is_resolved else p.kernel.resolve(avg_pairwise_distance(Xn))
    K = gram(spec, Xn)

    alpha, alpha_star, converged = solve_dual(K, d.targets, p, fast=fast)

    coef = alpha - alpha_star
    mask = coef != 0.0
    return Model(
        support_instances=Xn[mask],
        coef=coef[mask],
        bias=0.0,
        kernel=spec,
        normalization=nrm,
        converged=converged,
        algorithm="svr",
    )
