"""Small numerical solvers shared by the norm, indicator and factorization code."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize
from scipy.special import softmax

FunGrad = Callable[[np.ndarray], tuple[float, np.ndarray]]


@dataclass
class SolveResult:
    x: np.ndarray
    value: float
    residual: float
    iterations: int
    converged: bool
    fw_gap: float = 0.0


def minimize_smooth(
    fg: FunGrad,
    x0: np.ndarray,
    tol: float = 1e-10,
    maxiter: int = 100_000,
) -> SolveResult:
    """L-BFGS on a smooth function; convergence judged by the sup-norm of the gradient."""
    x0 = np.asarray(x0, dtype=float)
    if x0.size == 0:
        v, _ = fg(x0)
        return SolveResult(x0, float(v), 0.0, 0, True)
    res = minimize(
        fg,
        x0,
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": maxiter, "gtol": tol * 1e-2, "ftol": 1e-16, "maxcor": 30},
    )
    x = res.x
    v, g = fg(x)
    nit = int(res.nit)
    resid = float(np.max(np.abs(g)))
    if resid > tol:
        # L-BFGS may stop on a flat line search; a restart from the
        # current point usually clears it.
        res = minimize(
            fg,
            x,
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": maxiter, "gtol": tol * 1e-3, "ftol": 0.0, "maxcor": 50},
        )
        v2, g2 = fg(res.x)
        nit += int(res.nit)
        if np.max(np.abs(g2)) <= resid:
            x, v, g = res.x, v2, g2
            resid = float(np.max(np.abs(g)))
    return SolveResult(x, float(v), resid, nit, resid <= tol)


def maximize_on_simplex(
    fg: FunGrad,
    starts: list[np.ndarray],
    tol: float = 1e-8,
    maxiter: int = 100_000,
) -> SolveResult:
    """Maximize a concave function of a probability vector.

    The simplex is parametrized by logits (``q = softmax(z)``), which turns
    the problem into an unconstrained one that behaves like mirror ascent.
    Convergence is judged by the weighted stationarity gap
    ``sum_i q_i |g_i - <q, g>|``. The plain Frank-Wolfe gap is useless for
    entropy-type objectives, whose gradients blow up where ``q`` is tiny.
    """

    def neg(z):
        q = softmax(z)
        v, g = fg(q)
        gz = q * (g - np.dot(q, g))
        return -v, -gz

    best: SolveResult | None = None
    for q0 in starts:
        q0 = np.clip(np.asarray(q0, dtype=float), 1e-300, None)
        z0 = np.log(q0 / q0.sum())
        z0 -= z0.max()
        res = minimize(
            neg,
            z0,
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": maxiter, "gtol": 1e-14, "ftol": 1e-16, "maxcor": 30},
        )
        q = softmax(res.x)
        v, g = fg(q)
        gap = float(np.dot(q, np.abs(g - np.dot(q, g))))
        fw = float(np.max(g) - np.dot(q, g))
        cand = SolveResult(q, float(v), gap, int(res.nit), gap <= tol, fw)
        if best is None or cand.value > best.value:
            best = cand
    assert best is not None
    return best


def central_gradient(fun: Callable[[np.ndarray], float], x: np.ndarray, rel: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        h = rel * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (fun(xp) - fun(xm)) / (2 * h)
    return g
