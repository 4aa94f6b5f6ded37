"""Damped Newton solver for the smooth inner subproblems of proximal steps.

The proximal and tensor kernels each minimize a strictly convex model. This
module provides the shared solver: Newton directions with a ridge fallback
for singular systems, halving backtracking under an Armijo condition, and a
gradient-residual stopping rule measured in a caller-supplied norm.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import SubsolverError

Vector = np.ndarray

ARMIJO_FACTOR = 1e-4
MAX_NEWTON_ITERATIONS = 200


def damped_newton(
    value: Callable[[Vector], float],
    gradient: Callable[[Vector], Vector],
    hessian: Callable[[Vector], np.ndarray],
    x0: Vector,
    tol: float,
    norm: Callable[[Vector], float] | None = None,
    max_iter: int = MAX_NEWTON_ITERATIONS,
) -> Vector:
    """Minimize a smooth convex function until the gradient norm is small.

    ``norm`` measures the stopping residual (Euclidean when omitted). Raises
    :class:`SubsolverError`, with the final residual attached, when the
    iteration budget runs out or backtracking cannot make progress.
    """
    if norm is None:
        norm = lambda v: float(np.linalg.norm(v))  # noqa: E731
    x = np.array(x0, dtype=float, copy=True)
    fx = float(value(x))
    g = np.asarray(gradient(x), dtype=float)
    residual = norm(g)
    for _ in range(max_iter):
        if residual <= tol:
            return x
        step = _newton_direction(hessian(x), g, residual)
        slope = float(g @ step)
        t = 1.0
        while True:
            candidate = x - t * step
            f_candidate = float(value(candidate))
            if f_candidate <= fx - ARMIJO_FACTOR * t * slope:
                break
            t *= 0.5
            if t < 1e-20:
                raise SubsolverError(
                    "backtracking made no progress", residual=residual
                )
        x = candidate
        fx = f_candidate
        g = np.asarray(gradient(x), dtype=float)
        residual = norm(g)
    if residual <= tol:
        return x
    raise SubsolverError(
        f"no convergence within {max_iter} Newton iterations",
        residual=residual,
    )


def _newton_direction(H: np.ndarray, g: Vector, residual: float) -> Vector:
    """Solve ``H s = g``, ridging ``H`` until ``s`` is a descent direction."""
    H = np.asarray(H, dtype=float)
    try:
        step = np.linalg.solve(H, g)
        if np.all(np.isfinite(step)) and float(g @ step) > 0.0:
            return step
    except np.linalg.LinAlgError:
        pass
    dim = H.shape[0]
    scale = abs(float(np.trace(H))) / dim if dim else 1.0
    ridge = 1e-10 * (1.0 + scale)
    eye = np.eye(dim)
    for _ in range(60):
        try:
            step = np.linalg.solve(H + ridge * eye, g)
            if np.all(np.isfinite(step)) and float(g @ step) > 0.0:
                return step
        except np.linalg.LinAlgError:
            pass
        ridge *= 10.0
    raise SubsolverError("Newton system is unsolvable", residual=residual)
