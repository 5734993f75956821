"""Complex interpolation of lattice couples.

For a couple of Köthe spaces the infimum defining ``||x||_{A_t}`` is taken
over the lattice families ``F(z) = sgn(x) u^(1-z) v^z`` with
``u^(1-t) v^t = |x|``. Writing ``u = |x| exp(-t s)`` and
``v = |x| exp((1-t) s)`` turns the problem into the unconstrained convex
minimization of

    J(s) = (1-t) log||u||_{A0} + t log||v||_{A1},

which is invariant under adding a constant to ``s``. The constant is then
chosen to make the endpoint norms equal, at which point both equal
``exp(J)`` and the family has norm ``||x||_{A_t}``. The differential is
``F'(t) = x * s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._optim import minimize_smooth
from .measure import MVec, PreconditionError, as_values, safe_log
from .spaces import KotheSpace, ScaledSpace

NEWTON_TOL = 1e-13
LBFGS_TOL = 1e-10


@dataclass(frozen=True)
class Couple:
    a0: KotheSpace
    a1: KotheSpace

    def __post_init__(self):
        if self.a0.space != self.a1.space:
            raise PreconditionError("couple members live on different measure spaces")

    @property
    def space(self):
        return self.a0.space

    def scaled(self, r0: float, r1: float) -> "Couple":
        return Couple(ScaledSpace(self.a0, r0), ScaledSpace(self.a1, r1))


@dataclass(frozen=True, eq=False)
class Factorization:
    """Optimal lattice factorization ``|x| = u^(1-t) v^t`` with ``s = log(v/u)``."""

    x: MVec
    t: float
    u: np.ndarray
    v: np.ndarray
    s: np.ndarray
    norm: float
    endpoint_norms: tuple[float, float]
    iterations: int
    converged: bool
    residual: float

    def family(self, z: complex) -> np.ndarray:
        """The extremal family ``sgn(x) u^(1-z) v^z`` evaluated at ``z``."""
        x = self.x.values
        out = np.zeros(x.size, dtype=complex)
        supp = np.abs(x) > 0
        sgn = x[supp] / np.abs(x[supp])
        out[supp] = sgn * np.exp((1 - z) * np.log(self.u[supp]) + z * np.log(self.v[supp]))
        return out

    def omega(self) -> np.ndarray:
        return self.x.values * self.s


def _check_t(t: float) -> float:
    t = float(t)
    if not 0 < t < 1:
        raise PreconditionError(f"t must lie strictly between 0 and 1, got {t}")
    return t


class _Objective:
    """``J(s)/(t(1-t))`` on the support of ``x``, with gradient and Hessian."""

    def __init__(self, a0: KotheSpace, a1: KotheSpace, t: float, b: np.ndarray, supp: np.ndarray):
        self.a0, self.a1, self.t = a0, a1, t
        self.b = b
        self.supp = supp
        self.nfev = 0

    def endpoints(self, s):
        t = self.t
        e0 = np.full(self.b.size, -np.inf)
        e1 = e0.copy()
        bs = self.b[self.supp]
        e0[self.supp] = bs - t * s
        e1[self.supp] = bs + (1 - t) * s
        return e0, e1

    def __call__(self, s):
        self.nfev += 1
        t = self.t
        e0, e1 = self.endpoints(s)
        l0, g0 = self.a0.log_norm_exp_grad(e0)
        l1, g1 = self.a1.log_norm_exp_grad(e1)
        val = ((1 - t) * l0 + t * l1) / (t * (1 - t))
        return val, (g1 - g0)[self.supp]

    def hessian(self, s):
        e0, e1 = self.endpoints(s)
        h0 = self.a0.hess_log_norm_exp(e0)
        h1 = self.a1.hess_log_norm_exp(e1)
        if h0 is None or h1 is None:
            return None
        idx = np.flatnonzero(self.supp)
        sub = np.ix_(idx, idx)
        return self.t * h0[sub] + (1 - self.t) * h1[sub]


def _newton(obj: _Objective, s: np.ndarray, maxiter: int = 200):
    k = s.size
    val, g = obj(s)
    for it in range(1, maxiter + 1):
        if np.max(np.abs(g)) <= NEWTON_TOL:
            return s, it - 1, True
        H = obj.hessian(s)
        if H is None:
            return s, it - 1, False
        # J is flat along constants; pin that direction
        H = H + np.ones((k, k)) / k
        try:
            d = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            return s, it - 1, False
        step = 1.0
        slope = float(np.dot(g, d))
        while step > 1e-12:
            cand = s + step * d
            cval, cg = obj(cand)
            if cval <= val + 1e-4 * step * slope or np.max(np.abs(cg)) < np.max(np.abs(g)) * 0.5:
                break
            step *= 0.5
        else:
            return s, it, np.max(np.abs(g)) <= 1e-10
        s, val, g = cand, cval, cg
    return s, maxiter, np.max(np.abs(g)) <= 1e-10


def _solve(a0: KotheSpace, a1: KotheSpace, t: float, b: np.ndarray, supp: np.ndarray):
    """Minimizing ``s`` (support entries only, constant not yet fixed)."""
    bs = b[supp]
    top1, top0 = a1.ball_top(), a0.ball_top()
    # If an endpoint's unit ball has a greatest element, the optimal factor
    # at that endpoint is a multiple of it: pushing that factor up pointwise
    # only shrinks the other factor.
    if top1 is not None:
        return (np.log(top1[supp]) - bs) / (1 - t), 0, True, 0.0
    if top0 is not None:
        return (bs - np.log(top0[supp])) / t, 0, True, 0.0
    obj = _Objective(a0, a1, t, b, supp)
    s0 = np.zeros(bs.size)
    s, nit, ok = _newton(obj, s0)
    if not ok:
        res = minimize_smooth(obj, s, tol=LBFGS_TOL)
        s, nit, ok = res.x, nit + res.iterations, res.converged
    _, g = obj(s)
    return s, nit, ok, float(np.max(np.abs(g))) if g.size else 0.0


def _log_endpoints(a0, a1, t, b, supp, s):
    e0 = np.full(b.size, -np.inf)
    e1 = e0.copy()
    e0[supp] = b[supp] - t * s
    e1[supp] = b[supp] + (1 - t) * s
    l0, g0 = a0.log_norm_exp_grad(e0)
    l1, g1 = a1.log_norm_exp_grad(e1)
    return l0, g0, l1, g1


def calderon_norm(c: Couple, t: float, x) -> tuple[float, Factorization]:
    """``||x||_{[A0, A1]_t}`` together with the optimal factorization."""
    t = _check_t(t)
    space = c.space
    xv = as_values(x, space)
    xm = x if isinstance(x, MVec) else MVec(space, xv)
    n = space.n
    supp = np.abs(xv) > 0
    if not supp.any():
        z = np.zeros(n)
        return 0.0, Factorization(xm, t, z, z.copy(), z.copy(), 0.0, (0.0, 0.0), 0, True, 0.0)
    loga = safe_log(xv)
    shift = loga[supp].max()
    b = loga - shift
    s_supp, nit, ok, resid = _solve(c.a0, c.a1, t, b, supp)
    l0, _, l1, _ = _log_endpoints(c.a0, c.a1, t, b, supp, s_supp)
    # equalize endpoint norms: s -> s + (l0 - l1)
    s_supp = s_supp + (l0 - l1)
    s = np.zeros(n)
    s[supp] = s_supp
    logn = (1 - t) * l0 + t * l1 + shift
    u = np.zeros(n)
    v = np.zeros(n)
    u[supp] = np.exp(loga[supp] - t * s_supp)
    v[supp] = np.exp(loga[supp] + (1 - t) * s_supp)
    ends = (c.a0.norm(u), c.a1.norm(v))
    val = math.exp(logn)
    return val, Factorization(xm, t, u, v, s, val, ends, nit, ok, resid)


def log_calderon_grad(a0: KotheSpace, a1: KotheSpace, t: float, a: np.ndarray) -> tuple[float, np.ndarray]:
    """``log||exp(a)||_{[A0,A1]_t}`` and its gradient (envelope theorem)."""
    t = _check_t(t)
    supp = np.isfinite(a)
    if not supp.any():
        return -math.inf, np.zeros(a.size)
    shift = a[supp].max()
    b = a - shift
    s, _, _, _ = _solve(a0, a1, t, b, supp)
    l0, g0, l1, g1 = _log_endpoints(a0, a1, t, b, supp, s)
    grad = g1 if (a1.ball_top() is None and a0.ball_top() is not None) else g0
    return (1 - t) * l0 + t * l1 + shift, grad


def canonical_omega(c: Couple, t: float, x) -> MVec:
    """The differential ``Omega(A0, A1, t) x = x * log(v/u)``."""
    _, fac = calderon_norm(c, t, x)
    return MVec(c.space, fac.omega())


def closed_form_lp_couple(a0, a1, t: float):
    """``[L^p0(w0), L^p1(w1)]_t`` as a weighted ``L^pt`` space (the classical formula)."""
    from .spaces import WeightedLp

    t = _check_t(t)
    inv = (1 - t) / a0.p + t / a1.p
    pt = math.inf if inv == 0 else 1.0 / inv
    m = a0.m ** (1 - t) * a1.m**t
    return WeightedLp.from_multiplier(a0.space, pt, m)


def scaling_shift(c: Couple, t: float, r0: float, r1: float, x) -> MVec:
    """``Omega_B x - Omega_A x`` where ``B_j`` is ``A_j`` renormed by ``r_j``.

    Multiplying the extremal family by ``(r0/r1)^(z-t)`` shows this equals
    ``log(r0/r1) x``.
    """
    if not (r0 > 0 and r1 > 0):
        raise PreconditionError("renorming factors must be positive")
    wa = canonical_omega(c, t, x)
    wb = canonical_omega(c.scaled(r0, r1), t, x)
    return wb - wa


def wolff_glue(phi1, phi4, theta1: float, theta2: float) -> tuple[float, float]:
    """Coefficients gluing two interpolation scales of indicators.

    Given ``phi2 = (1-th1) phi1 + th1 phi3`` and
    ``phi3 = (1-th2) phi2 + th2 phi4``, returns ``(a1, a2)`` with
    ``phi2 = (1-a1) phi1 + a1 phi4`` and ``phi3 = (1-a2) phi1 + a2 phi4``.
    Matching the ``phi4`` coefficients gives a 2x2 linear system.
    """
    if phi1.space != phi4.space:
        raise PreconditionError("indicators live on different measure spaces")
    for th in (theta1, theta2):
        if not 0 < th < 1:
            raise PreconditionError("gluing parameters must lie in (0, 1)")
    M = np.array([[1.0, -theta1], [-(1.0 - theta2), 1.0]])
    det = 1.0 - theta1 * (1.0 - theta2)
    if abs(det) < 1e-14:
        raise PreconditionError("degenerate gluing system")
    a1, a2 = np.linalg.solve(M, np.array([0.0, theta2]))
    return float(a1), float(a2)


def wolff_defects(phi1, phi4, theta1, theta2, alphas, samples: int = 100, seed: int = 0) -> tuple[float, float]:
    """Largest violations of the two premises when ``phi2, phi3`` are built from ``alphas``."""
    from .indicator import indicator_affine

    a1, a2 = alphas
    phi2 = indicator_affine(phi1, phi4, a1)
    phi3 = indicator_affine(phi1, phi4, a2)
    rng = np.random.default_rng(seed)
    d2 = d3 = 0.0
    for _ in range(samples):
        f = rng.exponential(size=phi1.space.n) * (rng.random(phi1.space.n) < 0.85)
        lhs2 = phi2(f)
        rhs2 = (1 - theta1) * phi1(f) + theta1 * phi3(f)
        lhs3 = phi3(f)
        rhs3 = (1 - theta2) * phi2(f) + theta2 * phi4(f)
        d2 = max(d2, abs(lhs2 - rhs2))
        d3 = max(d3, abs(lhs3 - rhs3))
    return d2, d3
