"""Centralizers on Köthe spaces, their lifts to ``L^1`` and the splitting construction.

A centralizer is a homogeneous map ``Omega: A -> L^0`` that sends the unit
ball to a set bounded in measure and has uniformly bounded commutators with
bounded multiplications. Differentials of interpolation scales are the basic
example; every centralizer arises this way up to a bounded perturbation,
which :func:`split_centralizer` reproduces in finite dimensions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .indicator import (
    AffineIndicator,
    IndicatorFn,
    check_indicator_axioms,
    indicator_of,
    lozanovsky_factorize,
)
from .interpolate import Couple, calderon_norm
from .measure import MVec, PreconditionError, as_nonneg, as_values, superlevel_measures
from .spaces import CalderonProduct, IndicatorInduced, KotheSpace


class Centralizer:
    """A homogeneous map on the domain space ``A``.

    ``envelope_gradient`` marks kinds for which the gradient of the induced
    functional is ``mu * lift(f) / f`` (see :class:`PhiOmegaIndicator`).
    """

    domain: KotheSpace
    envelope_gradient: bool = False

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x) -> MVec:
        vals = as_values(x, self.domain.space)
        return MVec(self.domain.space, self.apply(vals))

    def __add__(self, other: "Centralizer") -> "AffineCentralizer":
        return AffineCentralizer([(1.0, self), (1.0, other)])

    def __sub__(self, other: "Centralizer") -> "AffineCentralizer":
        return AffineCentralizer([(1.0, self), (-1.0, other)])

    def __mul__(self, c: float) -> "AffineCentralizer":
        return AffineCentralizer([(float(c), self)])

    __rmul__ = __mul__


class CanonicalOmega(Centralizer):
    """The differential ``Omega(A0, A1, t) x = x log(v/u)`` of a couple."""

    envelope_gradient = True

    def __init__(self, a0: KotheSpace, a1: KotheSpace, t: float):
        self.couple = Couple(a0, a1)
        self.t = float(t)
        self.domain = CalderonProduct(a0, a1, t)
        self._cache: dict[bytes, tuple[float, np.ndarray]] = {}

    def __repr__(self):
        return f"CanonicalOmega({self.couple.a0!r}, {self.couple.a1!r}, t={self.t:g})"

    def solve(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        """``(||x||_{A_t}, Omega x)``, cached per input."""
        x = np.asarray(x, dtype=complex)
        key = x.tobytes()
        hit = self._cache.get(key)
        if hit is None:
            nrm, fac = calderon_norm(self.couple, self.t, x)
            if len(self._cache) > 512:
                self._cache.clear()
            hit = (nrm, fac.omega())
            self._cache[key] = hit
        return hit[0], hit[1].copy()

    def apply(self, x):
        return self.solve(x)[1]


class LogModulus(Centralizer):
    """``x log(|x| / ||x||_A)``, zero where ``x`` vanishes."""

    envelope_gradient = True

    def __init__(self, A: KotheSpace):
        self.domain = A

    def __repr__(self):
        return f"LogModulus({self.domain!r})"

    def apply(self, x):
        x = np.asarray(x, dtype=complex)
        out = np.zeros_like(x)
        nz = np.abs(x) > 0
        if nz.any():
            nrm = self.domain.norm(x)
            out[nz] = x[nz] * np.log(np.abs(x[nz]) / nrm)
        return out


class LogSymbol(Centralizer):
    """Multiplication by a fixed (bounded) symbol ``g``; linear, so it commutes with multipliers."""

    envelope_gradient = True

    def __init__(self, A: KotheSpace, g):
        self.domain = A
        self.g = np.asarray(as_values(g, A.space))
        if not np.any(self.g.imag):
            self.g = self.g.real

    def __repr__(self):
        return f"LogSymbol(|g|_inf={np.max(np.abs(self.g)):g})"

    def apply(self, x):
        return self.g * np.asarray(x, dtype=complex)


class RankLog(Centralizer):
    """``x_i log mu{ j : |x_j| > |x_i| }``, zero at atoms where that mass is zero.

    Atoms sharing a modulus share the superlevel mass.
    """

    envelope_gradient = True

    def __init__(self, A: KotheSpace):
        self.domain = A

    def __repr__(self):
        return f"RankLog({self.domain!r})"

    def apply(self, x):
        x = np.asarray(x, dtype=complex)
        m = superlevel_measures(x, self.domain.space.mu)
        out = np.zeros_like(x)
        pos = (m > 0) & (np.abs(x) > 0)
        out[pos] = x[pos] * np.log(m[pos])
        return out


class ZeroCentralizer(Centralizer):
    envelope_gradient = True

    def __init__(self, A: KotheSpace):
        self.domain = A

    def __repr__(self):
        return "ZeroCentralizer()"

    def apply(self, x):
        return np.zeros(np.asarray(x).shape, dtype=complex)


class AffineCentralizer(Centralizer):
    """``sum c_k Omega_k`` (the norm is taken in the first term's domain)."""

    def __init__(self, terms: Sequence[tuple[float, Centralizer]]):
        flat: list[tuple[float, Centralizer]] = []
        for c, om in terms:
            if isinstance(om, AffineCentralizer):
                flat.extend((c * c2, o2) for c2, o2 in om.terms)
            else:
                flat.append((float(c), om))
        if not flat:
            raise PreconditionError("an affine combination needs at least one term")
        space = flat[0][1].domain.space
        if any(om.domain.space != space for _, om in flat):
            raise PreconditionError("centralizers live on different measure spaces")
        self.terms = flat
        self.domain = flat[0][1].domain
        self.envelope_gradient = all(om.envelope_gradient for _, om in flat)

    def __repr__(self):
        return "AffineCentralizer(" + " + ".join(f"{c:g}*{om!r}" for c, om in self.terms) + ")"

    def apply(self, x):
        x = np.asarray(x, dtype=complex)
        out = np.zeros_like(x)
        for c, om in self.terms:
            if c != 0:
                out += c * om.apply(x)
        return out


# --- axioms ---------------------------------------------------------------


def _sample_rng(seed: int, k: int) -> np.random.Generator:
    # one generator per sample so that prefixes of a run are reproducible
    return np.random.default_rng(np.random.SeedSequence([seed, k]))


def _random_vector(rng, n: int) -> np.ndarray:
    x = rng.normal(size=n) + 1j * rng.normal(size=n)
    x *= np.exp(rng.normal(scale=1.5, size=n))
    x[rng.random(n) < 0.15] = 0.0
    if not np.any(x):
        x[0] = 1.0
    return x


def _m_eps(values: np.ndarray, mu: np.ndarray, eps: float) -> float:
    """Smallest ``M`` with ``mu{|values| > M} <= eps``."""
    a = np.abs(values)
    for level in np.concatenate([[0.0], np.sort(a)]):
        if mu[a > level].sum() <= eps:
            return float(level)
    return float(a.max())


@dataclass
class AxiomReport:
    samples: int
    seed: int
    rho_hat: float
    c_hat: float
    m_eps: dict[float, float]
    homogeneity_defect: float

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "seed": self.seed,
            "rho_hat": self.rho_hat,
            "c_hat": self.c_hat,
            "m_eps": {str(k): v for k, v in self.m_eps.items()},
            "homogeneity_defect": self.homogeneity_defect,
        }


def check_axioms(
    omega: Centralizer,
    samples: int = 200,
    seed: int = 0,
    eps: Sequence[float] = (0.1, 0.05, 0.01),
) -> AxiomReport:
    """Sampled lower bounds for the centralizer constants.

    ``rho_hat`` bounds ``||[Omega, M_b] u|| / (||b||_inf ||u||)``, ``c_hat``
    bounds the quasi-additivity defect, and ``m_eps`` records how far the
    image of the unit ball spreads in measure.
    """
    if samples < 1:
        raise PreconditionError("samples must be at least 1")
    A = omega.domain
    n = A.space.n
    mu = A.space.mu
    rho = chat = hom = 0.0
    meps = {float(e): 0.0 for e in eps}
    for k in range(samples):
        rng = _sample_rng(seed, k)
        u = _random_vector(rng, n)
        b = rng.uniform(0.0, 1.0, n) * np.exp(2j * np.pi * rng.random(n))
        g = _random_vector(rng, n)
        nu = A.norm(u)
        om_u = omega.apply(u)
        comm = omega.apply(b * u) - b * om_u
        rho = max(rho, A.norm(comm) / (np.max(np.abs(b)) * nu))
        defect = omega.apply(u + g) - om_u - omega.apply(g)
        chat = max(chat, A.norm(defect) / (nu + A.norm(g)))
        unit = omega.apply(u / nu)
        for e in meps:
            meps[e] = max(meps[e], _m_eps(unit, mu, e))
        scale = A.norm(om_u) + nu
        for al in (0.1, 7.0, -2.0, 1j):
            d = omega.apply(al * u) - al * om_u
            hom = max(hom, A.norm(d) / (abs(al) * scale))
    return AxiomReport(samples, seed, float(rho), float(chat), meps, float(hom))


# --- lift and induced functional -----------------------------------------


def lift(omega: Centralizer, x) -> MVec:
    """``Omega^[1](x) = Omega(a) a*`` through the Lozanovsky factorization ``x = a a*``."""
    A = omega.domain
    xv = as_nonneg(x, A.space)
    mass = float(np.dot(A.space.mu, xv))
    if mass == 0:
        return MVec(A.space, np.zeros(A.space.n))
    loz = lozanovsky_factorize(A, xv / mass)
    return MVec(A.space, mass * omega.apply(loz.a) * loz.a_star)


def phi_omega(omega: Centralizer, f, with_residual: bool = False):
    """``Phi^Omega(f) = sum mu Omega^[1](f)``; real part, optionally with the imaginary residual."""
    lv = lift(omega, f).values
    total = complex(np.dot(omega.domain.space.mu, lv))
    if with_residual:
        return total.real, abs(total.imag)
    return total.real


class PhiOmegaIndicator(IndicatorFn):
    """The indicator-like functional ``Phi^Omega`` as an :class:`IndicatorFn`.

    For the built-in kinds the gradient is ``mu * Omega^[1](f) / f``: for the
    canonical differential this is the difference of the endpoint gradients,
    and the other kinds are either indicators themselves (``LogModulus``
    gives ``Phi_A``) or locally linear in ``f``.
    """

    def __init__(self, omega: Centralizer):
        self.omega = omega
        self.space = omega.domain.space

    def __repr__(self):
        return f"PhiOmega({self.omega!r})"

    def value(self, f):
        return phi_omega(self.omega, f)

    def grad(self, f):
        return self.value_grad(f)[1]

    def value_grad(self, f):
        if not self.omega.envelope_gradient:
            return self.value(f), super().grad(f)
        f = np.asarray(f, dtype=float)
        lv = lift(self.omega, f).values.real
        out = np.zeros_like(f)
        pos = f > 0
        out[pos] = self.space.mu[pos] * lv[pos] / f[pos]
        return float(np.dot(self.space.mu, lv)), out

    def descriptor(self):
        return {"kind": "phi_omega", "omega": repr(self.omega)}


# --- equivalence ----------------------------------------------------------


@dataclass
class Equivalence:
    c1: float
    c2_hat: float
    samples: int
    omega_scale: float = 0.0

    @property
    def relative_residual(self) -> float:
        denom = abs(self.c1) * self.omega_scale
        return self.c2_hat / denom if denom > 0 else math.inf


def fit_equivalence(
    omega: Centralizer,
    other: Centralizer,
    samples: int = 40,
    seed: int = 0,
    xs: Sequence[np.ndarray] | None = None,
    space: KotheSpace | None = None,
) -> Equivalence:
    """Best real ``c1`` for ``||Omega x - c1 Omega' x|| <= c2 ||x||``.

    On a finite space every ``c1`` gives some finite ``c2``, so ``c1`` is
    chosen to cancel the part of ``Omega'`` that is not a multiple of ``x``:
    it minimizes the worst sampled ratio of the residual with its component
    along ``x`` removed (a convex function of ``c1``). Adding ``lambda x`` to
    a centralizer, as a renorming does, leaves ``c1`` unchanged. When
    ``Omega' x`` is always parallel to ``x`` the plain residual is used.
    ``c2_hat`` is the worst plain ratio at ``c1``. Norms are taken in
    ``space`` (default the domain of ``omega``); ``omega_scale`` is the
    largest ``||Omega' x||/||x||`` seen, for reporting relative residuals.
    """
    A = space if space is not None else omega.domain
    if other.domain.space != A.space:
        raise PreconditionError("centralizers act on different measure spaces")
    if xs is None:
        xs = [_random_vector(_sample_rng(seed, k), A.space.n) for k in range(samples)]
    xs = [np.asarray(as_values(x, A.space), dtype=complex) for x in xs]
    mu = A.space.mu
    nx = np.array([A.norm(x) for x in xs])
    P = [omega.apply(x) for x in xs]
    Q = [other.apply(x) for x in xs]
    scale = max(A.norm(q) / n for q, n in zip(Q, nx))

    def off_x(y, x):
        return y - (np.sum(mu * y * np.conj(x)) / np.sum(mu * np.abs(x) ** 2)) * x

    Pp = [off_x(p, x) for p, x in zip(P, xs)]
    Qp = [off_x(q, x) for q, x in zip(Q, xs)]

    def worst_of(PP, QQ):
        return lambda c: max(A.norm(p - c * q) / n for p, q, n in zip(PP, QQ, nx))

    def fit(PP, QQ):
        worst = worst_of(PP, QQ)
        qq = sum(np.sum(mu * np.abs(q) ** 2) / n**2 for q, n in zip(QQ, nx))
        c_ls = sum(np.sum(mu * (np.conj(q) * p).real) / n**2 for p, q, n in zip(PP, QQ, nx)) / qq
        half = 2.0 * max(1.0, abs(c_ls))
        res = minimize_scalar(worst, bounds=(c_ls - half, c_ls + half), method="bounded", options={"xatol": 1e-12})
        c1 = float(res.x)
        return c1 if worst(c1) <= worst(c_ls) else float(c_ls)

    plain = worst_of(P, Q)
    qscale = max(A.norm(q) / n for q, n in zip(Qp, nx))
    if qscale > 1e-12 * max(scale, 1e-300):
        c1 = fit(Pp, Qp)
    elif scale > 0:
        c1 = fit(P, Q)
    else:
        c1 = 0.0
    return Equivalence(c1, float(plain(c1)), len(xs), float(scale))


# --- splitting ------------------------------------------------------------


@dataclass
class SplitResult:
    ok: bool
    c: float | None
    a0: KotheSpace | None
    a1: KotheSpace | None
    phi0: IndicatorFn | None
    phi1: IndicatorFn | None
    report: dict = field(default_factory=dict)


def split_centralizer(
    A: KotheSpace,
    omega: Centralizer,
    t: float,
    shrink: Sequence[float] | None = None,
    samples: int = 200,
    seed: int = 0,
    check_samples: int = 6,
    tol: float = 1e-9,
) -> SplitResult:
    """Recover a couple whose differential at ``t`` is equivalent to ``c Omega``.

    For each ``c`` of the schedule (``1, 1/2, 1/4, ...`` by default) the
    candidates ``Phi0 = Phi_A - t c Phi^Omega`` and
    ``Phi1 = Phi_A + (1-t) c Phi^Omega`` are tested for the indicator
    axioms. The first passing pair is materialized as indicator-induced
    spaces and checked against ``A`` on ``check_samples`` random vectors.
    """
    if not 0 < t < 1:
        raise PreconditionError("t must lie strictly between 0 and 1")
    if omega.domain.space != A.space:
        raise PreconditionError("centralizer and space live on different measure spaces")
    schedule = list(shrink) if shrink is not None else [0.5**k for k in range(10)]
    phi_a = indicator_of(A)
    phi_om = PhiOmegaIndicator(omega)
    attempts = []
    for c in schedule:
        phi0 = AffineIndicator([(1.0, phi_a), (-t * c, phi_om)])
        phi1 = AffineIndicator([(1.0, phi_a), ((1 - t) * c, phi_om)])
        r0 = check_indicator_axioms(phi0, samples=samples, seed=seed, tol=tol)
        r1 = check_indicator_axioms(phi1, samples=samples, seed=seed + 1, tol=tol)
        attempts.append({"c": c, "phi0": r0, "phi1": r1})
        if r0["ok"] and r1["ok"]:
            break
    else:
        worst = max(
            (max(-a[k]["min_delta_ratio"], a[k]["max_excess_over_l1"], a[k]["homogeneity_defect"]), a["c"], k)
            for a in attempts
            for k in ("phi0", "phi1")
        )
        return SplitResult(
            False,
            None,
            None,
            None,
            None,
            None,
            {"attempts": attempts, "largest_violation": {"value": worst[0], "c": worst[1], "which": worst[2]}},
        )

    a0, a1 = IndicatorInduced(phi0), IndicatorInduced(phi1)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    fs = rng.exponential(size=(20, A.space.n))
    closure = max(
        abs((1 - t) * phi0.value(f) + t * phi1.value(f) - phi_a.value(f)) / (1 + abs(phi_a.value(f))) for f in fs
    )
    new_omega = CanonicalOmega(a0, a1, t)
    xs = [_random_vector(_sample_rng(seed + 11, k), A.space.n) for k in range(check_samples)]
    norm_err = 0.0
    for x in xs:
        nt, _ = new_omega.solve(x)
        norm_err = max(norm_err, abs(nt - A.norm(x)) / A.norm(x))
    fit = fit_equivalence(new_omega, c * omega, xs=xs, space=A)
    report = {
        "c": c,
        "t": t,
        "attempts": attempts,
        "closure_defect": float(closure),
        "norm_match": float(norm_err),
        "c1": fit.c1,
        "c2_hat": fit.c2_hat,
        "omega_scale": fit.omega_scale,
        "relative_residual": fit.relative_residual,
        "check_samples": check_samples,
    }
    return SplitResult(True, c, a0, a1, phi0, phi1, report)
