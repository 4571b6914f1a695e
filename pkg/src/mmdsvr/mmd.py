"""Margin-distribution SVR: a coupled-constraint dual solved coordinate-wise.

Where the canonical SVR only keeps training points inside one insensitive
tube, the margin-distribution variant also pushes them toward two narrow
belts just inside the tube edges, shaping the mean and spread of the
residual margins over the whole training set.  Its dual program couples five
nonnegative multiplier vectors per training set:

    minimize  F = 1/2 c'Kc - c'y
                  + (1/C2) sum_i (alpha*_i + psi_i) (beta_i + psi_i)
                  + (1 - 2 mu) eps sum_i (alpha*_i + beta_i + 2 psi_i)
    with      c = alpha - alpha* + beta - beta*
    subject to  0 <= alpha_i <= C1,   0 <= beta*_i <= C1,
                alpha*_i >= 0, beta_i >= 0, psi_i >= 0,
                alpha*_i + psi_i <= C2,   beta_i + psi_i <= C2.

alpha/beta* guard the outer tube edges (plain boxes), alpha*/beta the inner
belt edges, and the shared auxiliary psi_i links the two belts of one sample
through the coupled upper bounds.  mu in [0.5, 1] places the belts: at
mu = 0.5 the drift term (1 - 2 mu) eps vanishes and the extra variables can
rest at zero, recovering baseline-SVR behaviour.

Updates are one-dimensional Newton steps.  Box variables clip the step to
[0, C1].  Coupled variables and psi walk a geometric backtracking ladder
t, t*v, t*v^2, ... and take the first (largest) rung landing inside the
moving bound; negative candidates clamp to zero, and when no rung fits the
variable keeps its current feasible value.  Every accepted move is a partial
step toward the minimizer of a convex parabola, so the objective never
increases.  The cross term makes F bilinear rather than jointly convex in
(alpha*, beta, psi); descent therefore reaches a stationary point, which
tests compare against an independent projected-gradient solver on tiny
problems.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _fastpath
from .dataset import Dataset, apply_normalizer, fit_normalizer
from .kernels import GramMatrix, KernelSpec, avg_pairwise_distance, gram
from .model import Model, predict

__all__ = [
    "MMDParams",
    "DualState",
    "DegenerateModelError",
    "dual_objective",
    "partials",
    "update_box_var",
    "update_coupled_var",
    "update_psi",
    "solve_dual",
    "train_mmd",
    "margin_stats",
]


class DegenerateModelError(ValueError):
    """Margins are undefined because the coefficient norm is zero."""


@dataclass(frozen=True)
class MMDParams:
    """Hyperparameters and solver controls for margin-distribution SVR.

    ``backtrack`` is the ladder ratio v in (0, 1]; ``max_backtracks`` caps
    the ladder exponent.
    """

    eps: float
    mu: float
    c1: float
    c2: float
    kernel: KernelSpec
    tol: float = 1e-6
    max_epochs: int = 1000
    backtrack: float = 0.5
    max_backtracks: int = 30
    seed: int = 0

    def __post_init__(self) -> None:
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        if not 0.5 <= self.mu <= 1.0:
            raise ValueError("mu must be in [0.5,1]")
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("C1 and C2 must be > 0")
        if self.tol <= 0:
            raise ValueError("tolerance must be > 0")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if not 0.0 < self.backtrack <= 1.0:
            raise ValueError("backtrack ratio must be in (0,1]")
        if self.max_backtracks < 1:
            raise ValueError("max_backtracks must be >= 1")

    @property
    def belt_drift(self) -> float:
        """Linear coefficient (1 - 2 mu) * eps shared by the belt terms."""
        return (1.0 - 2.0 * self.mu) * self.eps


@dataclass
class DualState:
    """The five dual vectors plus the cached kernel expansion u = K c.

    Mutable and single-owner during a training run; the cached ``objective``
    is refreshed once per epoch by the trainer.
    """

    alpha: np.ndarray
    alpha_star: np.ndarray
    beta: np.ndarray
    beta_star: np.ndarray
    psi: np.ndarray
    u: np.ndarray
    objective: float = 0.0

    @classmethod
    def zeros(cls, n: int) -> "DualState":
        return cls(*(np.zeros(n) for _ in range(6)))

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    def coefficients(self) -> np.ndarray:
        return self.alpha - self.alpha_star + self.beta - self.beta_star

    def copy(self) -> "DualState":
        return DualState(
            self.alpha.copy(), self.alpha_star.copy(), self.beta.copy(),
            self.beta_star.copy(), self.psi.copy(), self.u.copy(), self.objective,
        )


def state_feasible(s: DualState, c1: float, c2: float, slack: float = 1e-12) -> bool:
    """All box and coupled constraints hold within ``slack``."""
    return bool(
        (s.alpha >= -slack).all() and (s.alpha <= c1 + slack).all()
        and (s.beta_star >= -slack).all() and (s.beta_star <= c1 + slack).all()
        and (s.alpha_star >= -slack).all() and (s.beta >= -slack).all()
        and (s.psi >= -slack).all()
        and (s.alpha_star + s.psi <= c2 + slack).all()
        and (s.beta + s.psi <= c2 + slack).all()
    )


def _matvec(K, c: np.ndarray) -> np.ndarray:
    return K.matvec(c) if isinstance(K, GramMatrix) else K @ c


def _row(K, i: int) -> np.ndarray:
    return K.row(i) if isinstance(K, GramMatrix) else K[i]


def _objective_terms(s: DualState, c: np.ndarray, Kc: np.ndarray,
                     y: np.ndarray, p: MMDParams) -> float:
    quad = 0.5 * float(c @ Kc) - float(c @ y)
    cross = float(((s.alpha_star + s.psi) * (s.beta + s.psi)).sum()) / p.c2
    belt = p.belt_drift * float((s.alpha_star + s.beta + 2.0 * s.psi).sum())
    return quad + cross + belt


def dual_objective(s: DualState, K, y: np.ndarray, p: MMDParams) -> float:
    """Dual objective at ``s`` (recomputed from scratch, not from the cache)."""
    assert state_feasible(s, p.c1, p.c2), "infeasible dual state"
    c = s.coefficients()
    return _objective_terms(s, c, _matvec(K, c), y, p)


def partials(s: DualState, K, y: np.ndarray, p: MMDParams, i: int
             ) -> tuple[float, float, float, float, float]:
    """Partial derivatives of the dual objective at coordinate block i.

    Order: (d/d alpha_i, d/d alpha*_i, d/d beta_i, d/d beta*_i, d/d psi_i).
    Validated against central finite differences of :func:`dual_objective`.
    """
    if __debug__:
        fresh = float(_row(K, i) @ s.coefficients())
        assert abs(s.u[i] - fresh) <= 1e-8, "stale expansion cache"
    ui = s.u[i]
    yi = y[i]
    drift = p.belt_drift
    return (
        ui - yi,
        -ui + yi + (s.beta[i] + s.psi[i]) / p.c2 + drift,
        ui - yi + (s.alpha_star[i] + s.psi[i]) / p.c2 + drift,
        -ui + yi,
        (s.alpha_star[i] + s.beta[i] + 2.0 * s.psi[i]) / p.c2 + 2.0 * drift,
    )


# The update operations below must mirror _fastpath.mmd_epoch bit-for-bit.


def update_box_var(s: DualState, i: int, which: str, p: MMDParams, K,
                   y: np.ndarray) -> DualState:
    """Clipped Newton step on a plain box variable (alpha or beta*)."""
    kii = float(_row(K, i)[i])
    denom = kii if kii > 1e-12 else 1e-12
    if which == "alpha":
        old = s.alpha[i]
        g = s.u[i] - y[i]
    elif which == "beta_star":
        old = s.beta_star[i]
        g = -s.u[i] + y[i]
    else:
        raise ValueError(f"not a box variable: {which!r}")
    cand = old - g / denom
    new = 0.0 if cand < 0.0 else (p.c1 if cand > p.c1 else cand)
    if new != old:
        dc = new - old if which == "alpha" else old - new
        s.u += dc * _row(K, i)
        if which == "alpha":
            s.alpha[i] = new
        else:
            s.beta_star[i] = new
    return s


def _ladder(old: float, t_opt: float, hi: float, v: float, k_max: int) -> float:
    # largest geometric rung old - t_opt * v^k that is feasible; negative
    # candidates clamp to 0; no feasible rung leaves the value unchanged
    t_step = t_opt
    for _ in range(k_max + 1):
        cand = old - t_step
        if cand < 0.0:
            cand = 0.0
        if cand <= hi:
            return cand
        t_step = t_step * v
    return old


def update_coupled_var(s: DualState, i: int, which: str, p: MMDParams, K,
                       y: np.ndarray) -> DualState:
    """Backtracked Newton step on a coupled variable (alpha* or beta).

    The upper bound C2 - psi_i moves with the auxiliary variable, so the
    step walks the geometric ladder until a rung is feasible.
    """
    kii = float(_row(K, i)[i])
    denom = kii if kii > 1e-12 else 1e-12
    hi = p.c2 - s.psi[i]
    if which == "alpha_star":
        old = s.alpha_star[i]
        g = -s.u[i] + y[i] + (s.beta[i] + s.psi[i]) / p.c2 + p.belt_drift
    elif which == "beta":
        old = s.beta[i]
        g = s.u[i] - y[i] + (s.alpha_star[i] + s.psi[i]) / p.c2 + p.belt_drift
    else:
        raise ValueError(f"not a coupled variable: {which!r}")
    new = _ladder(old, g / denom, hi, p.backtrack, p.max_backtracks)
    if new != old:
        dc = old - new if which == "alpha_star" else new - old
        s.u += dc * _row(K, i)
        if which == "alpha_star":
            s.alpha_star[i] = new
        else:
            s.beta[i] = new
    return s


def update_psi(s: DualState, i: int, p: MMDParams, K, y: np.ndarray) -> DualState:
    """Backtracked Newton step on the auxiliary psi_i.

    The one-dimensional model is (1/C2) t^2 + g t (curvature 2/C2), so the
    Newton step is C2 g / 2; the bound C2 - max(alpha*_i, beta_i) keeps both
    coupled sums feasible.
    """
    m = s.alpha_star[i] if s.alpha_star[i] > s.beta[i] else s.beta[i]
    hi = p.c2 - m
    old = s.psi[i]
    g = (s.alpha_star[i] + s.beta[i] + 2.0 * s.psi[i]) / p.c2 + 2.0 * p.belt_drift
    s.psi[i] = _ladder(old, p.c2 * g / 2.0, hi, p.backtrack, p.max_backtracks)
    return s


def _violation(old: float, hi: float, g: float) -> float:
    # projected-gradient violation on [0, hi]: at a bound only the
    # inward-pointing gradient counts; in the interior the magnitude.
    # "At a bound" is scale-aware: the backtracking ladder approaches the
    # coupled upper bound geometrically without ever landing on it, so exact
    # equality would report a phantom violation forever.
    bt = 1e-9 * (1.0 + hi)
    at_lo = old <= bt
    at_hi = old >= hi - bt
    if at_lo and at_hi:
        return 0.0
    if at_lo:
        return -g if -g > 0.0 else 0.0
    if at_hi:
        return g if g > 0.0 else 0.0
    return g if g > 0.0 else -g


def _epoch_py(s: DualState, K, y: np.ndarray, p: MMDParams, perm: np.ndarray) -> float:
    # reference sweep built from the public update operations; must match
    # _fastpath.mmd_epoch exactly
    n = y.shape[0]
    maxviol = 0.0
    for raw in perm:
        idx = int(raw)
        kind = idx // n
        i = idx - kind * n
        g5 = partials(s, K, y, p, i)
        if kind == 0:
            viol = _violation(s.alpha[i], p.c1, g5[0])
            update_box_var(s, i, "alpha", p, K, y)
        elif kind == 1:
            viol = _violation(s.alpha_star[i], p.c2 - s.psi[i], g5[1])
            update_coupled_var(s, i, "alpha_star", p, K, y)
        elif kind == 2:
            viol = _violation(s.beta[i], p.c2 - s.psi[i], g5[2])
            update_coupled_var(s, i, "beta", p, K, y)
        elif kind == 3:
            viol = _violation(s.beta_star[i], p.c1, g5[3])
            update_box_var(s, i, "beta_star", p, K, y)
        else:
            hi = p.c2 - (s.alpha_star[i] if s.alpha_star[i] > s.beta[i] else s.beta[i])
            viol = _violation(s.psi[i], hi, g5[4])
            update_psi(s, i, p, K, y)
        if viol > maxviol:
            maxviol = viol
    return maxviol


def solve_dual(K, y: np.ndarray, p: MMDParams, *, fast: bool | None = None,
               trace: list[tuple[int, float, float]] | None = None
               ) -> tuple[DualState, bool]:
    """Run coordinate descent on the dual from the zero state.

    Returns the final state and whether the tolerance was reached.  When
    ``trace`` is a list, one (epoch, objective, max_violation) triple is
    appended per epoch.  ``fast=None`` picks the jitted sweep when available
    and the Gram matrix is dense; both paths produce identical states.
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    s = DualState.zeros(n)
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
        perm = np.random.default_rng((p.seed, epoch)).permutation(5 * n)
        if use_fast:
            maxviol = _fastpath.mmd_epoch(
                dense, y, s.alpha, s.alpha_star, s.beta, s.beta_star, s.psi,
                s.u, perm, p.c1, p.c2, p.belt_drift, p.backtrack, p.max_backtracks,
            )
        else:
            maxviol = _epoch_py(s, K, y, p, perm)
        c = s.coefficients()
        Kc = _matvec(K, c)
        assert float(np.abs(s.u - Kc).max()) <= 1e-8, "stale expansion cache"
        obj = _objective_terms(s, c, Kc, y, p)
        assert obj <= prev_obj + 1e-10 * max(1.0, abs(prev_obj)), (
            f"dual objective increased: {prev_obj} -> {obj}"
        )
        prev_obj = obj
        s.objective = obj
        if trace is not None:
            trace.append((epoch, obj, maxviol))
        if maxviol < p.tol:
            converged = True
            break
    return s, converged


def train_mmd(d: Dataset, p: MMDParams, *, trace_path: str | Path | None = None,
              fast: bool | None = None) -> Model:
    """Train margin-distribution SVR by coordinate descent from the zero state.

    Sweeps all 5n coordinates per epoch in a permutation seeded from
    (seed, epoch); stops when the largest projected-gradient violation in an
    epoch drops below the tolerance, else at max_epochs with the model
    flagged non-converged.  When ``trace_path`` is given, one CSV row
    (epoch, objective, max_violation) is written per epoch.
    """
    nrm = fit_normalizer(d)
    Xn = apply_normalizer(nrm, d).instances
    spec = p.kernel if p.kernel.is_resolved else p.kernel.resolve(avg_pairwise_distance(Xn))
    K = gram(spec, Xn)

    trace: list[tuple[int, float, float]] | None = [] if trace_path is not None else None
    s, converged = solve_dual(K, d.targets, p, fast=fast, trace=trace)

    if trace_path is not None:
        with open(trace_path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "objective", "max_violation"])
            for row in trace:
                w.writerow([row[0], format(row[1], ".17g"), format(row[2], ".17g")])

    coef = s.coefficients()
    mask = coef != 0.0
    return Model(
        support_instances=Xn[mask],
        coef=coef[mask],
        bias=0.0,
        kernel=spec,
        normalization=nrm,
        converged=converged,
        algorithm="mmd",
    )


def margin_stats(m: Model, d: Dataset) -> tuple[float, float]:
    """Mean and variance of the residual margins of ``m`` on ``d``.

    The margin of a sample is |f(x_i) - y_i| / ||w|| with the coefficient
    norm taken in kernel space, ||w||^2 = c'Kc over the support instances.
    The variance averages squared margin gaps over all n^2 ordered sample
    pairs with a single 1/n normalization.  Raises
    :class:`DegenerateModelError` when the coefficient norm is zero.
    """
    if m.coef.size == 0:
        raise DegenerateModelError("model has no support instances")
    Ks = gram(m.kernel, m.support_instances)
    w2 = float(m.coef @ Ks.matvec(m.coef))
    if w2 <= 0.0:
        raise DegenerateModelError("zero coefficient norm; margins undefined")
    resid = np.abs(np.asarray(predict(m, d.instances)) - d.targets)
    n = d.n
    tau_m = float(resid.mean()) / math.sqrt(w2)
    tau_v = (2.0 * float((resid**2).sum()) - 2.0 * float(resid.sum()) ** 2 / n) / w2
    return tau_m, tau_v
