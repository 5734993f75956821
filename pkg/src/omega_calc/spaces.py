"""Köthe function spaces on a finite measure space, as norm oracles.

Every space answers ``norm(x)``. The solvers elsewhere in the package work
in log coordinates, so a space also exposes ``log_norm_exp_grad(a)``, the
value and gradient of ``a -> log ||exp(a)||``. That function is convex for
any lattice norm, and its gradient is a probability vector (it sums to one
because of homogeneity). Entries of ``a`` equal to ``-inf`` stand for atoms
where the vector vanishes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.special import logsumexp

from ._optim import central_gradient, minimize_smooth
from .measure import MeasureSpace, MVec, NonConvergenceError, PreconditionError, as_values


def _parse_p(p) -> float:
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity", "∞"):
            return math.inf
        p = float(p)
    p = float(p)
    if not p >= 1:
        raise PreconditionError(f"exponent p must lie in [1, inf], got {p}")
    return p


def conjugate_exponent(p: float) -> float:
    p = _parse_p(p)
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _p_json(p: float):
    return "inf" if math.isinf(p) else p


class KotheSpace:
    """Base class: a lattice norm on vectors over ``space``."""

    space: MeasureSpace

    def norm(self, x) -> float:
        raise NotImplementedError

    def norm_many(self, X: np.ndarray) -> np.ndarray:
        """Norms of the rows of ``X``."""
        return np.array([self.norm(row) for row in np.atleast_2d(X)])

    def __call__(self, x) -> float:
        return self.norm(x)

    def log_norm_exp(self, a: np.ndarray) -> float:
        a = np.asarray(a, dtype=float)
        fin = np.isfinite(a)
        if not fin.any():
            return -math.inf
        shift = a[fin].max()
        return shift + math.log(self.norm(np.exp(a - shift)))

    def log_norm_exp_grad(self, a: np.ndarray) -> tuple[float, np.ndarray]:
        a = np.asarray(a, dtype=float)
        val = self.log_norm_exp(a)
        fin = np.isfinite(a)
        grad = np.zeros_like(a)

        def restricted(b):
            full = a.copy()
            full[fin] = b
            return self.log_norm_exp(full)

        grad[fin] = central_gradient(restricted, a[fin])
        return val, grad

    def hess_log_norm_exp(self, a: np.ndarray) -> np.ndarray | None:
        return None

    def ball_top(self) -> np.ndarray | None:
        """Greatest element of the positive unit ball, when there is one."""
        return None

    def dual(self) -> "KotheSpace | None":
        """The Köthe dual under the pairing ``sum mu_i x_i y_i``, if known in closed form."""
        return None

    def descriptor(self) -> dict:
        raise NotImplementedError

    def _check(self, x) -> np.ndarray:
        return as_values(x, self.space)


class WeightedLp(KotheSpace):
    """``(sum mu_i w_i |x_i|^p)^(1/p)``, or ``max_i w_i |x_i|`` when ``p = inf``.

    Internally the weight is stored as a pointwise multiplier ``m`` so that
    ``||x|| = ||m x||_{L^p(mu)}`` in both cases: ``m = w^(1/p)`` for finite
    ``p`` and ``m = w`` for ``p = inf``.
    """

    def __init__(self, space: MeasureSpace, p, w=None):
        self.space = space
        self.p = _parse_p(p)
        w = np.ones(space.n) if w is None else np.asarray(w, dtype=float).reshape(-1)
        if w.size != space.n:
            raise PreconditionError("weight length does not match the measure space")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise PreconditionError("weights must be finite and strictly positive")
        self.w = w
        self.m = w if math.isinf(self.p) else w ** (1.0 / self.p)
        self._logc = None if math.isinf(self.p) else np.log(space.mu) + np.log(w)

    @classmethod
    def from_multiplier(cls, space: MeasureSpace, p, m) -> "WeightedLp":
        p = _parse_p(p)
        m = np.asarray(m, dtype=float)
        return cls(space, p, m if math.isinf(p) else m**p)

    @property
    def is_sup(self) -> bool:
        return math.isinf(self.p)

    def __repr__(self):
        return f"WeightedLp(p={self.p:g}, n={self.space.n})"

    def norm(self, x) -> float:
        a = np.abs(self._check(x))
        if self.is_sup:
            return float(np.max(self.m * a))
        scale = a.max()
        if scale == 0:
            return 0.0
        return float(scale * np.sum(self.space.mu * self.w * (a / scale) ** self.p) ** (1 / self.p))

    def norm_many(self, X) -> np.ndarray:
        A = np.abs(np.atleast_2d(np.asarray(X)))
        if self.is_sup:
            return np.max(self.m * A, axis=1)
        scale = A.max(axis=1)
        safe = np.where(scale > 0, scale, 1.0)
        s = np.sum(self.space.mu * self.w * (A / safe[:, None]) ** self.p, axis=1)
        return np.where(scale > 0, safe * s ** (1 / self.p), 0.0)

    def log_norm_exp(self, a) -> float:
        return self.log_norm_exp_grad(a)[0]

    def log_norm_exp_grad(self, a):
        a = np.asarray(a, dtype=float)
        if self.is_sup:
            z = a + np.log(self.m)
            k = int(np.argmax(z))
            g = np.zeros_like(a)
            g[k] = 1.0
            return float(z[k]), g
        z = self.p * a + self._logc
        lse = logsumexp(z)
        g = np.exp(z - lse)
        return float(lse / self.p), g

    def hess_log_norm_exp(self, a):
        if self.is_sup:
            return None
        _, g = self.log_norm_exp_grad(a)
        return self.p * (np.diag(g) - np.outer(g, g))

    def ball_top(self):
        return 1.0 / self.m if self.is_sup else None

    def dual(self) -> "WeightedLp":
        return WeightedLp.from_multiplier(self.space, conjugate_exponent(self.p), 1.0 / self.m)

    def descriptor(self) -> dict:
        return {"kind": "lp", "p": _p_json(self.p), "w": self.w.tolist()}


class ScaledSpace(KotheSpace):
    """The same space renormed by a constant factor ``r``."""

    def __init__(self, base: KotheSpace, r: float):
        if not r > 0:
            raise PreconditionError("scale factor must be positive")
        self.base = base
        self.r = float(r)
        self.space = base.space

    def __repr__(self):
        return f"ScaledSpace({self.base!r}, r={self.r:g})"

    def norm(self, x) -> float:
        return self.r * self.base.norm(x)

    def norm_many(self, X):
        return self.r * self.base.norm_many(X)

    def log_norm_exp(self, a):
        return math.log(self.r) + self.base.log_norm_exp(a)

    def log_norm_exp_grad(self, a):
        v, g = self.base.log_norm_exp_grad(a)
        return math.log(self.r) + v, g

    def hess_log_norm_exp(self, a):
        return self.base.hess_log_norm_exp(a)

    def ball_top(self):
        top = self.base.ball_top()
        return None if top is None else top / self.r

    def dual(self):
        d = self.base.dual()
        return None if d is None else ScaledSpace(d, 1.0 / self.r)

    def descriptor(self):
        return {"kind": "scaled", "r": self.r, "base": self.base.descriptor()}


class CalderonProduct(KotheSpace):
    """The complex interpolation space ``[A0, A1]_t`` of a lattice couple."""

    def __init__(self, a0: KotheSpace, a1: KotheSpace, t: float):
        if a0.space != a1.space:
            raise PreconditionError("couple members live on different measure spaces")
        if not 0 < t < 1:
            raise PreconditionError("t must lie strictly between 0 and 1")
        self.a0, self.a1, self.t = a0, a1, float(t)
        self.space = a0.space

    def __repr__(self):
        return f"CalderonProduct({self.a0!r}, {self.a1!r}, t={self.t:g})"

    def norm(self, x) -> float:
        from .interpolate import Couple, calderon_norm

        val, _ = calderon_norm(Couple(self.a0, self.a1), self.t, x)
        return val

    def log_norm_exp(self, a):
        return self.log_norm_exp_grad(a)[0]

    def log_norm_exp_grad(self, a):
        from .interpolate import log_calderon_grad

        return log_calderon_grad(self.a0, self.a1, self.t, np.asarray(a, dtype=float))

    def ball_top(self):
        t0, t1 = self.a0.ball_top(), self.a1.ball_top()
        if t0 is None or t1 is None:
            return None
        return t0 ** (1 - self.t) * t1**self.t

    def dual(self):
        # duality theorem for lattice couples: [A0, A1]_t* = [A0*, A1*]_t
        d0, d1 = self.a0.dual(), self.a1.dual()
        if d0 is None or d1 is None:
            return None
        return CalderonProduct(d0, d1, self.t)

    def descriptor(self):
        return {"kind": "calderon", "t": self.t, "a0": self.a0.descriptor(), "a1": self.a1.descriptor()}


class IndicatorInduced(KotheSpace):
    """The space whose indicator is a given indicator-like functional ``phi``.

    ``log ||x|| = sup { sum mu f log|x| - phi(f) : f >= 0, sum mu f = 1 }``.
    """

    def __init__(self, phi):
        self.phi = phi
        self.space = phi.space
        self._cache: dict[bytes, tuple[float, np.ndarray]] = {}
        self._last_q: np.ndarray | None = None

    def __repr__(self):
        return f"IndicatorInduced({self.phi!r})"

    def norm(self, x) -> float:
        vals = self._check(x)
        a = np.full(vals.size, -np.inf)
        nz = np.abs(vals) > 0
        a[nz] = np.log(np.abs(vals[nz]))
        v = self.log_norm_exp(a)
        return 0.0 if v == -math.inf else math.exp(v)

    def log_norm_exp(self, a):
        return self.log_norm_exp_grad(a)[0]

    def log_norm_exp_grad(self, a):
        from .indicator import legendre_sup

        a = np.asarray(a, dtype=float)
        key = a.tobytes()
        hit = self._cache.get(key)
        if hit is None:
            val, q = legendre_sup(self.phi, a, start=self._last_q)
            self._last_q = q
            if len(self._cache) > 256:
                self._cache.clear()
            hit = (val, q)
            self._cache[key] = hit
        return hit[0], hit[1].copy()

    def dual(self):
        from .indicator import AffineIndicator, l1_indicator

        # Lozanovsky: phi_{A*} = phi_{L1} - phi_A
        return IndicatorInduced(AffineIndicator([(1.0, l1_indicator(self.space)), (-1.0, self.phi)]))

    def descriptor(self):
        return {"kind": "indicator", "phi": self.phi.descriptor()}


@dataclass(frozen=True, eq=False)
class Multiplier:
    """Pointwise multiplication by a bounded function ``b``."""

    b: MVec

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.b.values)))

    def __call__(self, x) -> MVec:
        return multiplier_apply(self, x)


def multiplier_apply(b: Multiplier | MVec, x) -> MVec:
    bv = b.b if isinstance(b, Multiplier) else b
    return MVec(bv.space, bv.values * as_values(x, bv.space))


def norm(A: KotheSpace, x) -> float:
    return A.norm(x)


def dual_norm(A: KotheSpace, y, method: str = "auto", restarts: int = 4, seed: int = 0) -> float:
    """``sup { |sum mu_i x_i y_i| : ||x||_A <= 1 }``.

    ``method="auto"`` uses the closed form for weighted ``L^p`` (and for
    rescalings of it); every other space goes through a numerical
    maximization in log coordinates. ``method="numeric"`` forces the latter.
    """
    yv = as_values(y, A.space)
    if method not in ("auto", "numeric"):
        raise PreconditionError(f"unknown method {method!r}")
    if method == "auto":
        if isinstance(A, WeightedLp):
            return A.dual().norm(yv)
        if isinstance(A, ScaledSpace) and isinstance(A.base, WeightedLp):
            return A.base.dual().norm(yv) / A.r
    return _numeric_dual_norm(A, yv, restarts=restarts, seed=seed)


def _numeric_dual_norm(A: KotheSpace, y: np.ndarray, restarts: int = 4, seed: int = 0, tol: float = 1e-8) -> float:
    mu = A.space.mu
    c = mu * np.abs(y)
    supp = c > 0
    if not supp.any():
        return 0.0
    top = A.ball_top()
    if top is not None:
        # every positive x in the unit ball sits below the top element
        return float(np.dot(c, top))
    logc = np.log(c[supp])
    n = A.space.n

    def full(b):
        a = np.full(n, -np.inf)
        a[supp] = b
        return a

    def negobj(b):
        z = logc + b
        lse = logsumexp(z)
        val, g = A.log_norm_exp_grad(full(b))
        return -(lse - val), -(np.exp(z - lse) - g[supp])

    rng = np.random.default_rng(seed)
    k = int(supp.sum())
    starts = [np.zeros(k), np.log(np.abs(y[supp]))]
    starts += [rng.normal(size=k) for _ in range(max(0, restarts - 2))]
    best = None
    for b0 in starts:
        res = minimize_smooth(negobj, b0, tol=tol)
        if best is None or res.value < best.value:
            best = res
    val = math.exp(-best.value)
    if not best.converged and best.residual > 1e-5:
        raise NonConvergenceError("dual norm maximizer did not converge", bound=val)
    return val


def space_from_descriptor(desc: dict[str, Any], space: MeasureSpace) -> KotheSpace:
    """Build a space from its JSON descriptor."""
    kind = desc.get("kind")
    if kind == "lp":
        w = desc.get("w")
        if isinstance(w, (int, float)):
            w = np.full(space.n, float(w))
        return WeightedLp(space, desc["p"], w)
    if kind == "scaled":
        return ScaledSpace(space_from_descriptor(desc["base"], space), desc["r"])
    if kind == "calderon":
        return CalderonProduct(
            space_from_descriptor(desc["a0"], space), space_from_descriptor(desc["a1"], space), desc["t"]
        )
    if kind == "indicator":
        from .indicator import indicator_from_descriptor

        return IndicatorInduced(indicator_from_descriptor(desc["phi"], space))
    raise PreconditionError(f"unknown space kind {kind!r}")
