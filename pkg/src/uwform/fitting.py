"""Bounded nonlinear least squares: multi-start plus damped Gauss-Newton.

Small problems only (a handful of parameters, up to a few thousand
residuals). Starts are drawn uniformly inside the bounds from a caller
supplied generator so fits are reproducible; each start is refined with a
Levenberg-Marquardt loop that projects iterates back into the box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class FitResult:
    params: np.ndarray
    cost: float  # sum of squared residuals
    cost_history: list  # cost after each accepted step, initial cost first
    n_iterations: int
    converged: bool


def levenberg_marquardt(
    residual_fn,
    jacobian_fn,
    p0: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    max_iterations: int = 200,
    step_tol: float = 1e-8,
) -> FitResult:
    """Damped least squares from a single start, parameters clipped to bounds.

    Accepted steps never increase the cost; the loop stops when an accepted
    step's norm falls below ``step_tol`` or the iteration budget runs out.
    """
    p = np.clip(np.asarray(p0, dtype=np.float64), lower, upper)
    r = residual_fn(p)
    cost = float(r @ r)
    history = [cost]
    lam = 1e-3
    converged = False
    iteration = 0
    for iteration in range(1, max_iterations + 1):
        J = jacobian_fn(p)
        JtJ = J.T @ J
        g = J.T @ r
        diag = np.diag(JtJ).copy()
        diag[diag <= 0] = 1.0
        try:
            step = np.linalg.solve(JtJ + lam * np.diag(diag), -g)
        except np.linalg.LinAlgError:
            lam *= 10.0
            continue
        p_new = np.clip(p + step, lower, upper)
        actual_step = p_new - p
        r_new = residual_fn(p_new)
        cost_new = float(r_new @ r_new)
        if cost_new < cost:
            p, r, cost = p_new, r_new, cost_new
            history.append(cost)
            lam = max(lam / 3.0, 1e-12)
            if np.linalg.norm(actual_step) < step_tol:
                converged = True
                break
        else:
            lam *= 10.0
            if lam > 1e12:
                converged = True  # stuck at a (possibly boundary) minimum
                break
    return FitResult(p, cost, history, iteration, converged)


def multi_start_fit(
    residual_fn,
    jacobian_fn,
    lower,
    upper,
    rng: np.random.Generator,
    n_starts: int = 20,
    max_iterations: int = 200,
    step_tol: float = 1e-8,
) -> FitResult:
    """Best-of-N fit with uniform random starts inside the bounds."""
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    best = None
    for _ in range(n_starts):
        p0 = rng.uniform(lower, upper)
        result = levenberg_marquardt(
            residual_fn, jacobian_fn, p0, lower, upper, max_iterations, step_tol
        )
        if not np.isfinite(result.cost):
            continue
        if best is None or result.cost < best.cost:
            best = result
    return best
