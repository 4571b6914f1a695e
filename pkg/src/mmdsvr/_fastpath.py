"""Jitted epoch sweeps for the coordinate-descent trainers.

Each function mirrors the pure-Python per-coordinate update operations of its
solver module bit-for-bit (same expression shapes, same branch structure), so
the two paths produce identical states; tests assert this.  Only dense Gram
matrices take the jitted path.
"""

from __future__ import annotations

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap if not (len(args) == 1 and callable(args[0])) else args[0]


@njit(cache=True)
def svr_epoch(K, y, alpha, alpha_star, u, perm, c, eps):
    """One sweep over the 2n tube variables; returns the max violation seen."""
    n = y.shape[0]
    maxviol = 0.0
    for t in range(perm.shape[0]):
        idx = perm[t]
        kind = idx // n
        i = idx - kind * n
        kii = K[i, i]
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
            for j in range(n):
                u[j] += dc * K[i, j]
            if kind == 0:
                alpha[i] = new
            else:
                alpha_star[i] = new
    return maxviol


@njit(cache=True)
def mmd_epoch(K, y, alpha, alpha_star, beta, beta_star, psi, u, perm,
              c1, c2, lin, v, k_max):
    """One sweep over the 5n coupled-dual variables; returns max violation.

    ``lin`` is the belt drift (1 - 2 mu) * eps.  Variable kinds by block:
    0 alpha, 1 alpha*, 2 beta, 3 beta*, 4 psi.
    """
    n = y.shape[0]
    maxviol = 0.0
    for t in range(perm.shape[0]):
        idx = perm[t]
        kind = idx // n
        i = idx - kind * n
        kii = K[i, i]
        denom = kii if kii > 1e-12 else 1e-12

        if kind == 0 or kind == 3:
            # plain box variables in [0, C1]
            if kind == 0:
                old = alpha[i]
                g = u[i] - y[i]
            else:
                old = beta_star[i]
                g = -u[i] + y[i]
            bt = 1e-9 * (1.0 + c1)
            at_lo = old <= bt
            at_hi = old >= c1 - bt
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
            new = 0.0 if cand < 0.0 else (c1 if cand > c1 else cand)
            if new != old:
                dc = new - old if kind == 0 else old - new
                for j in range(n):
                    u[j] += dc * K[i, j]
                if kind == 0:
                    alpha[i] = new
                else:
                    beta_star[i] = new

        elif kind == 1 or kind == 2:
            # coupled variables: upper bound C2 - psi_i moves with psi
            hi = c2 - psi[i]
            if kind == 1:
                old = alpha_star[i]
                g = -u[i] + y[i] + (beta[i] + psi[i]) / c2 + lin
            else:
                old = beta[i]
                g = u[i] - y[i] + (alpha_star[i] + psi[i]) / c2 + lin
            bt = 1e-9 * (1.0 + hi)
            at_lo = old <= bt
            at_hi = old >= hi - bt
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
            t_step = g / denom
            new = old
            for k in range(k_max + 1):
                cand = old - t_step
                if cand < 0.0:
                    cand = 0.0
                if cand <= hi:
                    new = cand
                    break
                t_step = t_step * v
            if new != old:
                dc = old - new if kind == 1 else new - old
                for j in range(n):
                    u[j] += dc * K[i, j]
                if kind == 1:
                    alpha_star[i] = new
                else:
                    beta[i] = new

        else:
            # psi: curvature 2/C2, bound C2 - max(alpha*_i, beta_i)
            m = alpha_star[i] if alpha_star[i] > beta[i] else beta[i]
            hi = c2 - m
            old = psi[i]
            g = (alpha_star[i] + beta[i] + 2.0 * psi[i]) / c2 + 2.0 * lin
            bt = 1e-9 * (1.0 + hi)
            at_lo = old <= bt
            at_hi = old >= hi - bt
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
            t_step = c2 * g / 2.0
            new = old
            for k in range(k_max + 1):
                cand = old - t_step
                if cand < 0.0:
                    cand = 0.0
                if cand <= hi:
                    new = cand
                    break
                t_step = t_step * v
            psi[i] = new
    return maxviol
