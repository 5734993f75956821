"""Twisted sums ``A (+)_Omega A`` and commutator estimates for linear operators."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .centralizer import Centralizer, _random_vector, _sample_rng
from .interpolate import Couple, calderon_norm
from .measure import PreconditionError, as_values
from .spaces import KotheSpace, ScaledSpace, WeightedLp


@dataclass(frozen=True, eq=False)
class TwistedElement:
    """A pair ``(u, v)`` of vectors on one measure space."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex).reshape(-1)
        v = np.asarray(self.v, dtype=complex).reshape(-1)
        if u.shape != v.shape:
            raise PreconditionError("components of a twisted element must have the same length")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    def __add__(self, other: "TwistedElement") -> "TwistedElement":
        return TwistedElement(self.u + other.u, self.v + other.v)

    def __mul__(self, c: complex) -> "TwistedElement":
        return TwistedElement(c * self.u, c * self.v)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not (np.any(self.u) or np.any(self.v))


def twisted_quasinorm(A: KotheSpace, omega: Centralizer, e: TwistedElement) -> float:
    """``||u||_A + ||v - Omega u||_A``."""
    if e.u.size != A.space.n:
        raise PreconditionError("element does not match the space")
    return A.norm(e.u) + A.norm(e.v - omega.apply(e.u))


def quasi_triangle_constant(A: KotheSpace, omega: Centralizer, samples: int = 200, seed: int = 0) -> float:
    """Largest sampled ``||e1 + e2|| / (||e1|| + ||e2||)``."""
    n = A.space.n
    k = 0.0
    for i in range(samples):
        rng = _sample_rng(seed, i)
        e1 = TwistedElement(_random_vector(rng, n), _random_vector(rng, n))
        # the second summand often undoes the twist of the first
        u2 = _random_vector(rng, n)
        e2 = TwistedElement(u2, omega.apply(u2) + 0.1 * _random_vector(rng, n))
        num = twisted_quasinorm(A, omega, e1 + e2)
        den = twisted_quasinorm(A, omega, e1) + twisted_quasinorm(A, omega, e2)
        k = max(k, num / den)
    return k


# --- derived space ---------------------------------------------------------


def strip_disc_derivative(t: float) -> complex:
    """``psi'(t)`` for the conformal map ``psi`` of the strip onto the disc with ``psi(t) = 0``.

    ``psi(z) = (e^{i pi z} - e^{i pi t}) / (e^{i pi z} - e^{-i pi t})``.
    """
    return math.pi * cmath.exp(1j * math.pi * t) / (2.0 * math.sin(math.pi * t))


@dataclass
class DerivedBound:
    value: float
    s: np.ndarray
    evaluations: int


def _boundary_sup(A: KotheSpace, base: np.ndarray, w: np.ndarray, lo: float, hi: float, grid: int) -> float:
    """Upper bound for ``sup_{lo <= theta <= hi} ||base + e^{i theta} w||_A``.

    The function is ``||w||``-Lipschitz in ``theta``, so the grid maximum
    plus ``||w|| h / 2`` (``h`` the spacing) bounds the supremum.
    """
    th = np.linspace(lo, hi, grid)
    X = base[None, :] + np.exp(1j * th)[:, None] * w[None, :]
    h = (hi - lo) / (grid - 1)
    return float(np.max(A.norm_many(X))) + 0.5 * h * A.norm(w)


def derived_norm_upper(
    c: Couple, t: float, e: TwistedElement, grid: int = 257, maxiter: int = 100, radius: float = 20.0
) -> DerivedBound:
    """Upper bound for the derived-space norm of ``(u, v)`` at ``t``.

    Uses the bounded families ``F(z) = (u + psi(z) w / psi'(t)) e^{(z-t) s}``
    with ``w = v - u s``, which satisfy ``F(t) = u`` and ``F'(t) = v``. The
    strip boundary maps onto two arcs of the unit circle split at ``1`` and
    ``e^{2 pi i t}``; the norm of ``F`` is the larger of the two boundary
    suprema. The bound is minimized over ``s``, starting from the optimal
    factorization of ``u`` (or of ``v`` when ``u = 0``).
    """
    if not 0 < t < 1:
        raise PreconditionError("t must lie strictly between 0 and 1")
    u, v = e.u, e.v
    if u.size != c.space.n:
        raise PreconditionError("element does not match the couple")
    if e.is_zero():
        return DerivedBound(0.0, np.zeros(u.size), 0)
    k = 1.0 / strip_disc_derivative(t)
    lo0, hi0 = 2 * math.pi * t - 2 * math.pi, 0.0
    lo1, hi1 = 0.0, 2 * math.pi * t
    count = [0]

    def bound(s):
        count[0] += 1
        w = k * (v - u * s)
        e0 = np.exp(-t * s)
        e1 = np.exp((1 - t) * s)
        n0 = _boundary_sup(c.a0, u * e0, w * e0, lo0, hi0, grid)
        n1 = _boundary_sup(c.a1, u * e1, w * e1, lo1, hi1, grid)
        val = max(n0, n1)
        return val if math.isfinite(val) else math.inf

    ref = u if np.any(u) else v
    _, fac = calderon_norm(c, t, ref)
    s0 = fac.s.copy()
    best_s, best = s0, bound(s0)
    if not np.all(np.isfinite([best])):
        return DerivedBound(math.inf, s0, count[0])
    # a box around the start keeps the exponentials finite
    box = [(si - radius, si + radius) for si in s0]
    res = minimize(bound, s0, method="L-BFGS-B", bounds=box, options={"maxiter": maxiter})
    val = bound(res.x)
    if val < best:
        best_s, best = res.x, val
    return DerivedBound(float(best), best_s, count[0])


# --- operators -------------------------------------------------------------


class LinearOperator:
    """A dense matrix acting on vectors of a measure space."""

    def __init__(self, matrix):
        M = np.asarray(matrix)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise PreconditionError("operator must be a square matrix")
        self.matrix = M

    @classmethod
    def identity(cls, n: int) -> "LinearOperator":
        return cls(np.eye(n))

    @classmethod
    def multiplier(cls, b) -> "LinearOperator":
        return cls(np.diag(np.asarray(b)))

    def __call__(self, x) -> np.ndarray:
        return self.matrix @ as_values(x)

    apply = __call__


def random_substochastic(n: int, rng: np.random.Generator, terms: int = 4, drop: float = 0.2) -> LinearOperator:
    """A convex combination of random sub-permutation matrices.

    Row and column sums are at most one, so the operator is a contraction
    on ``l^1`` and ``l^inf`` with counting measure and hence on every
    rearrangement-invariant lattice between them.
    """
    weights = rng.dirichlet(np.ones(terms))
    M = np.zeros((n, n))
    for w in weights:
        P = np.eye(n)[rng.permutation(n)]
        P[rng.random(n) < drop] = 0.0
        M += w * P
    return LinearOperator(M)


def _conjugated(T: np.ndarray, A: WeightedLp) -> tuple[np.ndarray, np.ndarray]:
    """Matrix of ``T`` on plain ``L^p(mu)`` after absorbing the weight multiplier."""
    m = A.m
    return (m[:, None] * T) / m[None, :], A.space.mu


def operator_norm_bound(T: LinearOperator, A: KotheSpace) -> float:
    """An upper bound for ``||T||_{A -> A}``; exact at ``p`` in ``{1, 2, inf}``.

    Weighted ``L^p`` spaces are handled by conjugating with the weight and
    applying Riesz-Thorin between ``L^1(mu)`` and ``L^inf``.
    """
    # renorming by a constant does not change operator norms
    base = A.base if isinstance(A, ScaledSpace) else A
    if not isinstance(base, WeightedLp):
        raise PreconditionError("operator norm bounds need a weighted L^p space")
    M, mu = _conjugated(np.asarray(T.matrix), base)
    absM = np.abs(M)
    n_inf = float(np.max(absM.sum(axis=1)))
    n_one = float(np.max((mu[:, None] * absM).sum(axis=0) / mu))
    p = base.p
    if math.isinf(p):
        return n_inf
    if p == 1:
        return n_one
    if p == 2:
        sq = np.sqrt(mu)
        return float(np.linalg.norm(sq[:, None] * M / sq[None, :], 2))
    return n_one ** (1 / p) * n_inf ** (1 - 1 / p)


def operator_norm_estimate(T: LinearOperator, A: KotheSpace, samples: int = 200, seed: int = 0) -> float:
    """Sampled lower bound for ``||T||_{A -> A}``."""
    best = 0.0
    for i in range(samples):
        x = _random_vector(_sample_rng(seed, i), A.space.n)
        best = max(best, A.norm(T(x)) / A.norm(x))
    return best


def commutator_bound(
    T: LinearOperator, omega: Centralizer, A: KotheSpace | None = None, samples: int = 100, seed: int = 0
) -> float:
    """Sampled ``max ||Omega(T v) - T(Omega v)||_A / ||v||_A``."""
    A = A if A is not None else omega.domain
    best = 0.0
    for i in range(samples):
        v = _random_vector(_sample_rng(seed, i), A.space.n)
        d = omega.apply(T(v)) - T(omega.apply(v))
        best = max(best, A.norm(d) / A.norm(v))
    return best
