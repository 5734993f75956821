"""Finite discrete measure spaces and the vectors that live on them."""

from __future__ import annotations

import json
from dataclasses import dataclass
from numbers import Number
from typing import Any

import numpy as np


class PreconditionError(ValueError):
    """Raised when an operation is called outside its domain."""


class NonConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance.

    ``bound`` carries the best value reached, which is a valid one-sided
    bound for the quantity being optimized.
    """

    def __init__(self, message: str, bound: float | None = None):
        super().__init__(message)
        self.bound = bound


@dataclass(frozen=True, eq=False)
class MeasureSpace:
    """``n`` atoms with strictly positive masses ``mu``."""

    mu: np.ndarray

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float).reshape(-1)
        if mu.size < 1:
            raise PreconditionError("a measure space needs at least one atom")
        if not np.all(np.isfinite(mu)) or np.any(mu <= 0):
            raise PreconditionError("atom masses must be finite and strictly positive")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)

    @classmethod
    def uniform(cls, n: int, mass: float = 1.0) -> "MeasureSpace":
        return cls(np.full(int(n), float(mass)))

    @property
    def n(self) -> int:
        return self.mu.size

    @property
    def total_mass(self) -> float:
        return float(self.mu.sum())

    def __eq__(self, other):
        if not isinstance(other, MeasureSpace):
            return NotImplemented
        return self is other or (self.n == other.n and np.array_equal(self.mu, other.mu))

    def __hash__(self):
        return hash(self.mu.tobytes())

    def __repr__(self):
        return f"MeasureSpace(n={self.n}, total_mass={self.total_mass:g})"

    def vec(self, values) -> "MVec":
        return MVec(self, values)

    def zeros(self) -> "MVec":
        return MVec(self, np.zeros(self.n))

    def ones(self) -> "MVec":
        return MVec(self, np.ones(self.n))

    def basis(self, i: int) -> "MVec":
        e = np.zeros(self.n)
        e[i] = 1.0
        return MVec(self, e)

    def to_json(self) -> str:
        return json.dumps({"mu": self.mu.tolist()})

    @classmethod
    def from_json(cls, text: str | dict) -> "MeasureSpace":
        data = json.loads(text) if isinstance(text, str) else text
        return cls(np.asarray(data["mu"], dtype=float))


@dataclass(frozen=True, eq=False)
class MVec:
    """A complex-valued function on the atoms of a :class:`MeasureSpace`."""

    space: MeasureSpace
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex).reshape(-1)
        if vals.size != self.space.n:
            raise PreconditionError(
                f"vector has {vals.size} entries but the space has {self.space.n} atoms"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values.copy()
        return self.values.astype(dtype)

    def __len__(self):
        return self.values.size

    def __repr__(self):
        return f"MVec({np.array2string(self.values, precision=6)})"

    @property
    def real(self) -> np.ndarray:
        return self.values.real.copy()

    @property
    def imag(self) -> np.ndarray:
        return self.values.imag.copy()

    def modulus(self) -> "MVec":
        return MVec(self.space, np.abs(self.values))

    def __abs__(self):
        return self.modulus()

    def _other(self, other):
        if isinstance(other, MVec):
            if other.space != self.space:
                raise PreconditionError("vectors live on different measure spaces")
            return other.values
        if isinstance(other, Number):
            return other
        arr = np.asarray(other)
        if arr.shape != self.values.shape:
            raise PreconditionError("dimension mismatch")
        return arr

    def __add__(self, other):
        return MVec(self.space, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return MVec(self.space, self.values - self._other(other))

    def __rsub__(self, other):
        return MVec(self.space, self._other(other) - self.values)

    def __mul__(self, other):
        return MVec(self.space, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return MVec(self.space, self.values / self._other(other))

    def __neg__(self):
        return MVec(self.space, -self.values)

    def __eq__(self, other):
        if not isinstance(other, MVec):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.values, other.values)

    __hash__ = None  # type: ignore[assignment]

    def support(self) -> np.ndarray:
        return np.abs(self.values) > 0

    def to_json(self) -> str:
        return json.dumps({"re": self.values.real.tolist(), "im": self.values.imag.tolist()})

    @classmethod
    def from_json(cls, space: MeasureSpace, text: str | dict) -> "MVec":
        data = json.loads(text) if isinstance(text, str) else text
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
        return cls(space, re + 1j * im)


def as_values(x: Any, space: MeasureSpace | None = None) -> np.ndarray:
    """Raw complex values of ``x``, checked against ``space`` when given."""
    if isinstance(x, MVec):
        if space is not None and x.space != space:
            raise PreconditionError("vector lives on a different measure space")
        return x.values
    arr = np.asarray(x, dtype=complex).reshape(-1)
    if space is not None and arr.size != space.n:
        raise PreconditionError(f"expected {space.n} entries, got {arr.size}")
    return arr


def as_nonneg(f: Any, space: MeasureSpace | None = None) -> np.ndarray:
    """Real nonnegative values of ``f``; rejects negative or complex input."""
    vals = as_values(f, space)
    if np.any(np.abs(vals.imag) > 0):
        raise PreconditionError("expected a real vector")
    re = vals.real.copy()
    if np.any(re < 0) or not np.all(np.isfinite(re)):
        raise PreconditionError("expected finite nonnegative entries")
    return re


def xlogx(f: np.ndarray) -> np.ndarray:
    """``f*log(f)`` with the convention ``0*log(0) = 0``."""
    f = np.asarray(f, dtype=float)
    out = np.zeros_like(f)
    pos = f > 0
    out[pos] = f[pos] * np.log(f[pos])
    return out


def safe_log(x: np.ndarray) -> np.ndarray:
    """``log|x|`` with ``-inf`` at zeros and no warnings."""
    a = np.abs(np.asarray(x))
    out = np.full(a.shape, -np.inf)
    pos = a > 0
    out[pos] = np.log(a[pos])
    return out


def lp_norm(x: Any, p: float, w=None, mu=None) -> float:
    """Weighted ``L^p`` norm on a finite measure space.

    ``(sum mu_i w_i |x_i|^p)^(1/p)`` for finite ``p``; for ``p = inf`` the
    weight multiplies the modulus, ``max_i w_i |x_i|``.
    """
    if isinstance(x, MVec):
        vals = x.values
        mu = x.space.mu if mu is None else np.asarray(mu, dtype=float)
    else:
        vals = np.asarray(x, dtype=complex).reshape(-1)
        mu = np.ones(vals.size) if mu is None else np.asarray(mu, dtype=float)
    n = vals.size
    w = np.ones(n) if w is None else np.asarray(w, dtype=float).reshape(-1)
    if w.size != n or mu.size != n:
        raise PreconditionError("dimension mismatch between vector, weights and measure")
    if np.any(w <= 0):
        raise PreconditionError("weights must be strictly positive")
    p = float(p)
    if p < 1:
        raise PreconditionError("p must lie in [1, inf]")
    a = np.abs(vals)
    if np.isinf(p):
        return float(np.max(w * a)) if n else 0.0
    scale = a.max()
    if scale == 0:
        return 0.0
    # factor out the largest modulus so that large p does not overflow
    return float(scale * np.sum(mu * w * (a / scale) ** p) ** (1.0 / p))


def measure_of_superlevel(x: Any, lam: float, mu=None) -> float:
    """Mass of ``{i : |x_i| > lam}``."""
    if lam < 0:
        raise PreconditionError("level must be nonnegative")
    if isinstance(x, MVec):
        vals, mu = x.values, x.space.mu
    else:
        vals = np.asarray(x, dtype=complex).reshape(-1)
        mu = np.ones(vals.size) if mu is None else np.asarray(mu, dtype=float)
    return float(mu[np.abs(vals) > lam].sum())


def superlevel_measures(x: Any, mu=None) -> np.ndarray:
    """For every atom ``i`` the mass of ``{j : |x_j| > |x_i|}``.

    Atoms sharing a modulus get the same value.
    """
    if isinstance(x, MVec):
        vals, mu = x.values, x.space.mu
    else:
        vals = np.asarray(x, dtype=complex).reshape(-1)
        mu = np.ones(vals.size) if mu is None else np.asarray(mu, dtype=float)
    a = np.abs(vals)
    order = np.argsort(a, kind="stable")
    sorted_a = a[order]
    # mass strictly above position k in sorted order
    tail = np.concatenate([np.cumsum(mu[order][::-1])[::-1], [0.0]])
    first_above = np.searchsorted(sorted_a, a, side="right")
    return tail[first_above]


class L0Metric:
    """Metric of convergence in measure, ``sum mu_i min(1, |x_i - y_i|)``."""

    def __init__(self, space: MeasureSpace):
        self.space = space

    def dist(self, x, y) -> float:
        d = np.abs(as_values(x, self.space) - as_values(y, self.space))
        return float(np.sum(self.space.mu * np.minimum(1.0, d)))

    __call__ = dist
