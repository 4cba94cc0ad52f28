"""Box-constrained Levenberg-Marquardt least squares.

Small dense problems only (a handful of parameters, a few thousand
residuals). Parameters are rescaled by a per-parameter typical size so the
damping schedule behaves the same whether a parameter is a quality factor
or a frequency in GHz.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

REL_STEP = 1e-6
LAMBDA0 = 1e-3
LAMBDA_MAX = 1e16
FTOL = 1e-10
GTOL = 1e-12
SINGULAR_COND = 1e14


class LMStatus(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    SINGULAR = "singular"


@dataclass
class LMOutcome:
    x: np.ndarray
    residuals: np.ndarray
    jacobian: np.ndarray
    status: LMStatus
    iterations: int
    cost: float
    initial_cost: float
    covariance: np.ndarray | None


def forward_jacobian(fun, x, r0, lower, upper, scale, rel_step=REL_STEP):
    """Forward-difference Jacobian; steps flip sign at an upper bound."""
    jac = np.empty((r0.size, x.size))
    for j in range(x.size):
        h = rel_step * max(abs(x[j]), scale[j])
        if x[j] + h > upper[j]:
            h = -h
        xh = x.copy()
        xh[j] += h
        jac[:, j] = (fun(xh) - r0) / h
    return jac


def levenberg_marquardt(
    fun,
    x0,
    lower,
    upper,
    scale=None,
    max_iter=200,
    rel_step=REL_STEP,
    lambda0=LAMBDA0,
    ftol=FTOL,
    gtol=GTOL,
) -> LMOutcome:
    """Minimise ``0.5 * |fun(x)|^2`` subject to ``lower <= x <= upper``.

    Marquardt damping on the diagonal of ``J^T J`` with a x10 / /10
    schedule. Converges when an accepted step changes the cost by less than
    ``ftol`` relative (and the model predicted no more), or when the scaled,
    bound-projected gradient drops below ``gtol`` relative to the cost.
    """
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if scale is None:
        scale = np.where(np.abs(x) > 0, np.abs(x), 1.0)
    scale = np.asarray(scale, dtype=float)
    r = np.asarray(fun(x), dtype=float)
    cost = 0.5 * float(r @ r)
    initial_cost = cost
    lam = lambda0
    status = LMStatus.MAX_ITER
    it = 0
    jac = forward_jacobian(fun, x, r, lower, upper, scale, rel_step)

    while it < max_iter:
        it += 1
        if cost == 0.0:
            status = LMStatus.CONVERGED
            break
        ju = jac * scale
        a = ju.T @ ju
        grad = ju.T @ r
        free = ~(((x <= lower) & (grad > 0)) | ((x >= upper) & (grad < 0)))
        if np.max(np.abs(grad[free]), initial=0.0) <= gtol * 2 * cost:
            status = LMStatus.CONVERGED
            break
        diag = np.diag(a).copy()
        diag[diag <= 0] = max(diag.max(), 1.0) * 1e-12
        accepted = False
        while lam <= LAMBDA_MAX:
            try:
                du = np.linalg.solve(a + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            x_new = np.clip(x + du * scale, lower, upper)
            du = (x_new - x) / scale
            r_new = np.asarray(fun(x_new), dtype=float)
            cost_new = 0.5 * float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new < cost:
                predicted = -(grad @ du + 0.5 * du @ a @ du)
                change = (cost - cost_new) / cost
                x, r, cost = x_new, r_new, cost_new
                lam = max(lam / 10, 1e-12)
                accepted = True
                if change < ftol and predicted <= ftol * cost:
                    status = LMStatus.CONVERGED
                break
            lam *= 10
        if not accepted:
            # no downhill step at any damping: stationary to working precision
            status = LMStatus.CONVERGED
            break
        jac = forward_jacobian(fun, x, r, lower, upper, scale, rel_step)
        if status is LMStatus.CONVERGED:
            break

    ju = jac * scale
    a = ju.T @ ju
    covariance = None
    if not np.all(np.isfinite(a)) or np.any(np.diag(a) == 0) or np.linalg.cond(a) > SINGULAR_COND:
        status = LMStatus.SINGULAR
    elif status is LMStatus.CONVERGED:
        dof = max(r.size - x.size, 1)
        s2 = 2 * cost / dof
        cov_u = np.linalg.inv(a) * s2
        covariance = cov_u * np.outer(scale, scale)
    return LMOutcome(x, r, jac, status, it, cost, initial_cost, covariance)
