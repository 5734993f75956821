"""Indicator (entropy) functionals of Köthe spaces.

For a Köthe space ``A`` and ``f >= 0``,

    Phi_A(f) = sup { sum mu_i f_i log|x_i| : ||x||_A <= 1 }.

The supremum is attained at a positive ``x_f``. Indicators are positively
homogeneous, superadditive up to ``delta(Phi) (||f||_1 + ||g||_1)``, affine
along interpolation scales, and recover the norm through a Legendre-type
inversion over the probability simplex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Sequence

import numpy as np
from scipy.optimize import minimize

from ._optim import maximize_on_simplex, minimize_smooth
from .measure import (
    MeasureSpace,
    MVec,
    NonConvergenceError,
    PreconditionError,
    as_nonneg,
    as_values,
    xlogx,
)
from .spaces import IndicatorInduced, KotheSpace, ScaledSpace, WeightedLp, _p_json

LOG2 = math.log(2.0)


class IndicatorFn:
    """A functional on nonnegative vectors of a finite measure space."""

    space: MeasureSpace

    def value(self, f: np.ndarray) -> float:
        raise NotImplementedError

    def __call__(self, f) -> float:
        return self.value(as_nonneg(f, self.space))

    def many(self, F: np.ndarray) -> np.ndarray:
        return np.array([self.value(row) for row in np.atleast_2d(F)])

    def grad(self, f: np.ndarray) -> np.ndarray:
        """Gradient in ``f``; central differences unless a subclass knows better."""
        f = np.asarray(f, dtype=float)
        mass = float(np.dot(self.space.mu, f))
        base = max(mass / self.space.n, 1e-300)
        g = np.zeros_like(f)
        for i in range(f.size):
            h = 1e-6 * max(f[i], base)
            fp = f.copy()
            fp[i] += h
            if f[i] - h >= 0:
                fm = f.copy()
                fm[i] -= h
                g[i] = (self.value(fp) - self.value(fm)) / (2 * h)
            else:
                g[i] = (self.value(fp) - self.value(f)) / h
        return g

    def value_grad(self, f: np.ndarray) -> tuple[float, np.ndarray]:
        return self.value(f), self.grad(f)

    def maximizer(self, f: np.ndarray) -> np.ndarray:
        """``x_f`` for the space this functional is the indicator of.

        For a homogeneous convex indicator the gradient is a supporting
        functional, and ``exp(grad/mu)`` attains the supremum.
        """
        g = self.grad(np.asarray(f, dtype=float)) / self.space.mu
        return np.where(np.isfinite(g), np.exp(np.clip(g, -745, 700)), 0.0)

    @cached_property
    def delta(self) -> float:
        """Best known value of ``delta(Phi)`` (estimated when not known exactly)."""
        bound = self.delta_bound()
        if bound is not None:
            return bound
        return estimate_delta(self, budget=500)

    def delta_bound(self) -> float | None:
        return None

    def descriptor(self) -> dict:
        raise NotImplementedError


class ClosedFormLp(IndicatorFn):
    """Indicator of a weighted ``L^p`` space, from the Lagrange solution.

    ``Phi(f) = sum mu f [ (1/p) log(f / m) - log(weight multiplier) ]`` with
    ``m = sum mu f``; at ``p = inf`` only the weight term survives.
    """

    def __init__(self, space: MeasureSpace, p, w=None):
        self.lp = WeightedLp(space, p, w)
        self.space = space
        self.p = self.lp.p
        self._inv_p = 0.0 if math.isinf(self.p) else 1.0 / self.p
        self._logm = np.log(self.lp.m)

    @classmethod
    def of(cls, A: WeightedLp) -> "ClosedFormLp":
        return cls(A.space, A.p, A.w)

    def __repr__(self):
        return f"ClosedFormLp(p={self.p:g}, n={self.space.n})"

    def value(self, f):
        mu = self.space.mu
        mass = float(np.dot(mu, f))
        if mass == 0:
            return 0.0
        ent = np.dot(mu, xlogx(f / mass)) * mass
        return float(self._inv_p * ent - np.dot(mu * f, self._logm))

    def many(self, F):
        F = np.atleast_2d(np.asarray(F, dtype=float))
        mu = self.space.mu
        mass = F @ mu
        safe = np.where(mass > 0, mass, 1.0)
        ent = (xlogx(F / safe[:, None]) @ mu) * mass
        return self._inv_p * ent - (F * mu) @ self._logm

    def grad(self, f):
        mu = self.space.mu
        f = np.asarray(f, dtype=float)
        mass = float(np.dot(mu, f))
        ratio = np.maximum(f / mass, 1e-300)
        return mu * (self._inv_p * np.log(ratio) - self._logm)

    def maximizer(self, f):
        f = np.asarray(f, dtype=float)
        if math.isinf(self.p):
            return 1.0 / self.lp.m
        mass = float(np.dot(self.space.mu, f))
        return (f / mass) ** self._inv_p / self.lp.m

    def delta_bound(self):
        # Delta of this functional is Delta_{L1} / p, and delta(L1) = log 2
        return LOG2 * self._inv_p

    def descriptor(self):
        return {"kind": "lp", "p": _p_json(self.p), "w": self.lp.w.tolist()}


class NumericIndicator(IndicatorFn):
    """Indicator of an arbitrary space, by maximizing over its unit ball."""

    def __init__(self, A: KotheSpace):
        self.A = A
        self.space = A.space

    def __repr__(self):
        return f"NumericIndicator({self.A!r})"

    def value(self, f):
        f = np.asarray(f, dtype=float)
        supp = f > 0
        if not supp.any():
            return 0.0
        x, _ = numeric_maximizer(self.A, f)
        return float(np.dot(self.space.mu[supp] * f[supp], np.log(x[supp])))

    def grad(self, f):
        x, _ = numeric_maximizer(self.A, np.asarray(f, dtype=float))
        with np.errstate(divide="ignore"):
            return self.space.mu * np.log(x)

    def maximizer(self, f):
        return numeric_maximizer(self.A, np.asarray(f, dtype=float))[0]

    def descriptor(self):
        return {"kind": "numeric", "space": self.A.descriptor()}


class AffineIndicator(IndicatorFn):
    """A finite linear combination ``sum c_k Phi_k``."""

    def __init__(self, terms: Sequence[tuple[float, IndicatorFn]]):
        terms = [(float(c), phi) for c, phi in terms]
        if not terms:
            raise PreconditionError("an affine combination needs at least one term")
        space = terms[0][1].space
        if any(phi.space != space for _, phi in terms):
            raise PreconditionError("indicators live on different measure spaces")
        self.terms = terms
        self.space = space

    def __repr__(self):
        inner = " + ".join(f"{c:g}*{phi!r}" for c, phi in self.terms)
        return f"AffineIndicator({inner})"

    def value(self, f):
        return float(sum(c * phi.value(f) for c, phi in self.terms if c != 0))

    def many(self, F):
        F = np.atleast_2d(F)
        out = np.zeros(F.shape[0])
        for c, phi in self.terms:
            if c != 0:
                out += c * phi.many(F)
        return out

    def grad(self, f):
        return self.value_grad(f)[1]

    def value_grad(self, f):
        val = 0.0
        out = np.zeros(self.space.n)
        for c, phi in self.terms:
            if c != 0:
                v, g = phi.value_grad(f)
                val += c * v
                out += c * g
        return float(val), out

    def delta_bound(self):
        if any(c < 0 for c, _ in self.terms):
            return None
        bounds = [phi.delta_bound() for c, phi in self.terms if c != 0]
        if any(b is None for b in bounds):
            return None
        return float(sum(c * phi.delta_bound() for c, phi in self.terms if c != 0))

    def descriptor(self):
        return {"kind": "affine", "terms": [[c, phi.descriptor()] for c, phi in self.terms]}


def l1_indicator(space: MeasureSpace) -> ClosedFormLp:
    return ClosedFormLp(space, 1.0)


def indicator_of(A: KotheSpace) -> IndicatorFn:
    """Indicator of ``A``: closed form when available, numeric otherwise."""
    if isinstance(A, WeightedLp):
        return ClosedFormLp.of(A)
    if isinstance(A, IndicatorInduced):
        return A.phi
    return NumericIndicator(A)


def indicator_from_descriptor(desc: dict[str, Any], space: MeasureSpace) -> IndicatorFn:
    kind = desc.get("kind")
    if kind == "lp":
        return ClosedFormLp(space, desc["p"], desc.get("w"))
    if kind == "numeric":
        from .spaces import space_from_descriptor

        return NumericIndicator(space_from_descriptor(desc["space"], space))
    if kind == "affine":
        return AffineIndicator([(c, indicator_from_descriptor(d, space)) for c, d in desc["terms"]])
    raise PreconditionError(f"unknown indicator kind {kind!r}")


# --- maximizers -----------------------------------------------------------


def numeric_maximizer(A: KotheSpace, f: np.ndarray, tol: float = 1e-11) -> tuple[np.ndarray, bool]:
    """Maximize ``sum mu f log x`` over the unit ball of ``A`` numerically.

    Homogeneity makes the problem unconstrained in log coordinates:
    ``sup_a <mu f, a> - m log||exp(a)||`` with ``m = sum mu f``. The result
    is rescaled to unit norm. Zero entries of ``f`` get ``x = 0``.
    """
    f = np.asarray(f, dtype=float)
    mu = A.space.mu
    supp = f > 0
    if not supp.any():
        raise PreconditionError("maximizer is degenerate when f vanishes identically")
    top = A.ball_top()
    if top is not None:
        # the unit ball has a greatest element, which maximizes any f
        return np.asarray(top, dtype=float).copy(), True
    mass = float(np.dot(mu, f))
    c = (mu * f / mass)[supp]
    n = A.space.n

    def full(b):
        a = np.full(n, -np.inf)
        a[supp] = b
        return a

    def negobj(b):
        val, g = A.log_norm_exp_grad(full(b))
        return -(np.dot(c, b) - val), -(c - g[supp])

    res = minimize_smooth(negobj, np.log(c / mu[supp]), tol=tol)
    b = res.x
    b = b - A.log_norm_exp(full(b))
    x = np.zeros(n)
    x[supp] = np.exp(b)
    return x, res.converged


@dataclass(frozen=True, eq=False)
class Lozanovsky:
    """``f = a * a_star`` with ``||a||_A = 1`` and ``||a_star||_{A*} = ||f||_1``."""

    f: np.ndarray
    x_f: np.ndarray
    a: np.ndarray
    a_star: np.ndarray
    mass: float
    converged: bool


def lozanovsky_factorize(A: KotheSpace, f, method: str = "auto") -> Lozanovsky:
    """Lozanovsky factorization of ``f >= 0`` through ``A`` and its Köthe dual.

    ``method="numeric"`` skips every closed form.
    """
    f = as_nonneg(f, A.space)
    supp = f > 0
    if not supp.any():
        raise PreconditionError("cannot factorize the zero function")
    mu = A.space.mu
    mass = float(np.dot(mu, f))
    g = f / mass
    converged = True
    if method == "auto" and isinstance(A, WeightedLp):
        x = ClosedFormLp.of(A).maximizer(g)
    elif method == "auto" and isinstance(A, ScaledSpace) and isinstance(A.base, WeightedLp):
        x = ClosedFormLp.of(A.base).maximizer(g) / A.r
    elif method == "auto" and isinstance(A, IndicatorInduced):
        x = A.phi.maximizer(g)
        x = x / A.norm(x)
    elif method in ("auto", "numeric"):
        x, converged = numeric_maximizer(A, g)
    else:
        raise PreconditionError(f"unknown method {method!r}")
    a_star = np.zeros_like(f)
    a_star[supp] = f[supp] / x[supp]
    a = np.where(supp, x, 0.0)
    return Lozanovsky(f, x, a, a_star, mass, converged)


# --- operations -----------------------------------------------------------


def indicator_eval(phi: IndicatorFn, f) -> float:
    return phi(f)


def indicator_extend(phi: IndicatorFn, f) -> complex:
    """``sum mu f log x_{|f|}`` for complex ``f``."""
    fv = as_values(f, phi.space)
    af = np.abs(fv)
    supp = af > 0
    if not supp.any():
        return 0j
    mass = float(np.dot(phi.space.mu, af))
    x = phi.maximizer(af / mass)
    return complex(np.sum(phi.space.mu[supp] * fv[supp] * np.log(x[supp])))


def delta_phi(phi: IndicatorFn, f, g) -> float:
    """``Phi(f) + Phi(g) - Phi(f + g)``."""
    f = as_nonneg(f, phi.space)
    g = as_nonneg(g, phi.space)
    return phi.value(f) + phi.value(g) - phi.value(f + g)


def indicator_affine(phi0: IndicatorFn, phi1: IndicatorFn, t: float) -> AffineIndicator:
    """``(1-t) Phi0 + t Phi1``."""
    return AffineIndicator([(1.0 - t, phi0), (t, phi1)])


def _random_pairs(rng, n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Half generic random pairs, half pairs with disjoint supports."""
    F = rng.exponential(size=(k, n)) * (rng.random((k, n)) < 0.7)
    G = rng.exponential(size=(k, n)) * (rng.random((k, n)) < 0.7)
    half = k // 2
    side = rng.random((half, n)) < 0.5
    F[:half] = np.where(side, rng.exponential(size=(half, n)), 0.0)
    G[:half] = np.where(~side, rng.exponential(size=(half, n)), 0.0)
    # rescale the disjoint half to random relative masses near balance
    F[:half] *= np.exp(rng.normal(scale=0.5, size=(half, 1)))
    # guarantee nonzero members
    F[F.sum(axis=1) == 0, 0] = 1.0
    G[G.sum(axis=1) == 0, -1] = 1.0
    return F, G


def delta_ratio_many(phi: IndicatorFn, F: np.ndarray, G: np.ndarray) -> np.ndarray:
    mu = phi.space.mu
    d = phi.many(F) + phi.many(G) - phi.many(F + G)
    return d / (F @ mu + G @ mu)


def estimate_delta(phi: IndicatorFn, budget: int = 1000, seed: int = 0, refine: int = 3) -> float:
    """Lower bound for ``delta(Phi)`` by seeded search plus local refinement."""
    if budget < 1:
        raise PreconditionError("budget must be at least 1")
    rng = np.random.default_rng(seed)
    n = phi.space.n
    F, G = _random_pairs(rng, n, budget)
    if n == 1:
        F, G = rng.exponential(size=(budget, 1)), rng.exponential(size=(budget, 1))
    r = delta_ratio_many(phi, F, G)
    order = np.argsort(-r)
    best = float(r[order[0]])
    mu = phi.space.mu

    def neg_ratio(z):
        f = np.exp(np.clip(z[:n], -60, 60))
        g = np.exp(np.clip(z[n:], -60, 60))
        d = phi.value(f) + phi.value(g) - phi.value(f + g)
        return -d / (np.dot(mu, f) + np.dot(mu, g))

    for idx in order[: max(0, refine)]:
        f0 = np.maximum(F[idx], 1e-12)
        g0 = np.maximum(G[idx], 1e-12)
        z0 = np.log(np.concatenate([f0, g0]))
        res = minimize(neg_ratio, z0, method="L-BFGS-B", options={"maxiter": 200})
        best = max(best, -float(res.fun))
    return best


def legendre_sup(
    phi: IndicatorFn, a: np.ndarray, tol: float = 1e-10, start: np.ndarray | None = None
) -> tuple[float, np.ndarray]:
    """``sup_q <q, a> - Phi(q/mu)`` over probability vectors ``q``.

    Returns the value and the maximizing ``q`` (zero where ``a = -inf``).
    ``start`` is an optional warm start; the cold starts are used when it
    fails to converge.
    """
    a = np.asarray(a, dtype=float)
    mu = phi.space.mu
    n = mu.size
    supp = np.isfinite(a)
    if not supp.any():
        return -math.inf, np.zeros(n)
    idx = np.flatnonzero(supp)
    a_s = a[supp]
    mu_s = mu[supp]

    def fg(q):
        f = np.zeros(n)
        f[idx] = q / mu_s
        pv, pg = phi.value_grad(f)
        return float(np.dot(q, a_s)) - pv, a_s - pg[idx] / mu_s

    k = idx.size
    # vertices: exact for functionals that are linear in f
    vert_vals = np.empty(k)
    for j in range(k):
        f = np.zeros(n)
        f[idx[j]] = 1.0 / mu_s[j]
        vert_vals[j] = a_s[j] - phi.value(f)
    jbest = int(np.argmax(vert_vals))
    near = np.full(k, 1e-6 / max(k - 1, 1))
    near[jbest] = 1.0 - 1e-6 if k > 1 else 1.0
    res = None
    if start is not None:
        warm = np.asarray(start, dtype=float)[idx]
        if warm.sum() > 0:
            warm = 0.9 * warm / warm.sum() + 0.1 / k
            res = maximize_on_simplex(fg, [warm], tol=tol)
    # a small weighted gap can hide atoms stuck near zero mass, hence the
    # loose guard on the Frank-Wolfe gap
    if res is None or res.residual > 1e-8 or res.fw_gap > 1e-3:
        w = mu_s * np.exp(a_s - a_s.max())
        starts = [np.full(k, 1.0 / k), w / w.sum(), near]
        cold = maximize_on_simplex(fg, starts, tol=tol)
        if res is None or cold.value >= res.value:
            res = cold
    q = np.zeros(n)
    if vert_vals[jbest] >= res.value:
        q[idx[jbest]] = 1.0
        return float(vert_vals[jbest]), q
    q[idx] = res.x
    if res.residual > 1e-6:
        raise NonConvergenceError("Legendre inversion did not converge", bound=res.value)
    return res.value, q


def norm_from_indicator(phi: IndicatorFn, x, check: bool = False, samples: int = 200, seed: int = 0) -> float:
    """Reconstruct ``||x||`` from an indicator by Legendre inversion.

    With ``check=True`` the indicator axioms are verified by sampling first.
    """
    xv = as_values(x, phi.space)
    if check:
        rep = check_indicator_axioms(phi, samples=samples, seed=seed)
        if not rep["ok"]:
            raise PreconditionError(f"functional fails the indicator axioms: {rep}")
    ax = np.abs(xv)
    a = np.full(ax.size, -np.inf)
    a[ax > 0] = np.log(ax[ax > 0])
    val, _ = legendre_sup(phi, a)
    return 0.0 if val == -math.inf else math.exp(val)


def check_indicator_axioms(
    phi: IndicatorFn, samples: int = 200, seed: int = 0, tol: float = 1e-9, margin: float = 0.0
) -> dict:
    """Sample positive homogeneity, ``Delta >= 0`` and ``Delta <= Delta_{L1}``.

    ``margin`` demands ``Delta_Phi <= (1 - margin) Delta_{L1}``.
    """
    rng = np.random.default_rng(seed)
    n = phi.space.n
    F, G = _random_pairs(rng, n, samples)
    l1 = l1_indicator(phi.space)
    vf, vg, vfg = phi.many(F), phi.many(G), phi.many(F + G)
    d = vf + vg - vfg
    d1 = l1.many(F) + l1.many(G) - l1.many(F + G)
    alphas = np.array([0.1, 7.0])
    hom = 0.0
    for al in alphas:
        hv = phi.many(al * F[: min(samples, 50)])
        hom = max(hom, float(np.max(np.abs(hv - al * vf[: hv.size]) / (1 + np.abs(vf[: hv.size])))))
    scale = F @ phi.space.mu + G @ phi.space.mu
    neg = float(np.min(d / scale))
    excess = float(np.max((d - (1 - margin) * d1) / scale))
    ok = hom <= 1e-7 and neg >= -tol and excess <= tol
    return {
        "samples": samples,
        "homogeneity_defect": hom,
        "min_delta_ratio": neg,
        "max_excess_over_l1": excess,
        "ok": bool(ok),
    }
