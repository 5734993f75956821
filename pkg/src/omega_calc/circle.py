"""The circle discretized on a midpoint grid: Szegő projection and log-type centralizers."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .measure import MeasureSpace, PreconditionError, superlevel_measures

CSV_COLUMNS = ("omega", "N", "trial", "ratio", "max_ratio")


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class CircleGrid:
    """Nodes ``tau_k = exp(2 pi i (k + 1/2) / N)`` with arc-length masses ``2 pi / N``.

    The half-step offset keeps every node away from ``tau = 1``.
    """

    N: int

    def __post_init__(self):
        if not _is_power_of_two(int(self.N)):
            raise PreconditionError(f"grid size must be a power of two, got {self.N}")

    @property
    def theta(self) -> np.ndarray:
        return 2 * np.pi * (np.arange(self.N) + 0.5) / self.N

    @property
    def nodes(self) -> np.ndarray:
        return np.exp(1j * self.theta)

    @property
    def weight(self) -> float:
        return 2 * np.pi / self.N

    @property
    def space(self) -> MeasureSpace:
        return MeasureSpace.uniform(self.N, self.weight)

    def norm(self, f) -> float:
        """``L^2`` norm with arc-length measure."""
        return float(np.sqrt(self.weight * np.sum(np.abs(f) ** 2)))

    def inner(self, f, g) -> complex:
        return complex(self.weight * np.vdot(g, f))


class SzegoProjection:
    """Projection onto nonnegative frequencies.

    Bins ``1 .. N/2 - 1`` and ``0`` are kept, bins above ``N/2`` hold the
    negative frequencies and are removed, and the Nyquist bin is halved.
    """

    def __init__(self, grid: CircleGrid):
        self.grid = grid
        N = grid.N
        mask = np.zeros(N)
        mask[: N // 2] = 1.0
        mask[N // 2] = 0.5
        self.mask = mask

    def __call__(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=complex)
        if f.shape != (self.grid.N,):
            raise PreconditionError(f"expected {self.grid.N} samples, got shape {f.shape}")
        return np.fft.ifft(np.fft.fft(f) * self.mask)

    apply = __call__


def project_hardy(P: SzegoProjection | CircleGrid, f) -> np.ndarray:
    if isinstance(P, CircleGrid):
        P = SzegoProjection(P)
    return P(f)


def omega1(f, grid: CircleGrid) -> np.ndarray:
    """``f(tau) log(1 - tau)`` (principal branch)."""
    return np.asarray(f, dtype=complex) * np.log(1 - grid.nodes)


def omega2(f, grid: CircleGrid) -> np.ndarray:
    """``f log(|f| / ||f||_2)``, zero where ``f`` vanishes."""
    f = np.asarray(f, dtype=complex)
    out = np.zeros_like(f)
    nz = np.abs(f) > 0
    if nz.any():
        out[nz] = f[nz] * np.log(np.abs(f[nz]) / grid.norm(f))
    return out


def omega3(f, grid: CircleGrid) -> np.ndarray:
    """``f log mu{|f| > |f(tau)|}``; zero where that superlevel set is empty."""
    f = np.asarray(f, dtype=complex)
    m = superlevel_measures(f, np.full(grid.N, grid.weight))
    out = np.zeros_like(f)
    pos = m > 0
    out[pos] = f[pos] * np.log(m[pos])
    return out


OMEGAS: dict[int, Callable[[np.ndarray, CircleGrid], np.ndarray]] = {1: omega1, 2: omega2, 3: omega3}


def random_trig_poly(grid: CircleGrid, rng: np.random.Generator, degree: int | None = None) -> np.ndarray:
    """Random trigonometric polynomial of degree ``<= N/4`` with unit ``L^2`` norm on the grid."""
    N = grid.N
    d = N // 4 if degree is None else int(degree)
    if not 0 <= d < N // 2:
        raise PreconditionError("degree must be below N/2")
    ks = np.arange(-d, d + 1)
    coef = rng.normal(size=ks.size) + 1j * rng.normal(size=ks.size)
    # the half-step offset of the nodes becomes a phase on each bin
    bins = np.zeros(N, dtype=complex)
    bins[ks % N] = coef * np.exp(1j * np.pi * ks / N)
    f = np.fft.ifft(bins) * N
    return f / grid.norm(f)


def commutator_ratio(omega: Callable, f: np.ndarray, grid: CircleGrid, P: SzegoProjection | None = None) -> float:
    """``||Omega(P f) - P(Omega f)||_2 / ||f||_2``."""
    P = P if P is not None else SzegoProjection(grid)
    d = omega(P(f), grid) - P(omega(f, grid))
    return grid.norm(d) / grid.norm(f)


def adversarial_raw_ratio(grid: CircleGrid) -> float:
    """``||Omega_1 f|| / ||f||`` for ``f`` concentrated on the node nearest ``tau = 1``."""
    # the largest |log(1 - tau)| sits at the nodes adjacent to 1
    k = int(np.argmax(np.abs(np.log(1 - grid.nodes))))
    f = np.zeros(grid.N, dtype=complex)
    f[k] = 1.0
    return grid.norm(omega1(f, grid)) / grid.norm(f)


def commutator_experiment(
    which: int | Callable,
    Ns: Sequence[int],
    trials: int,
    seed: int = 0,
) -> list[dict]:
    """Rows ``{omega, N, trial, ratio, max_ratio}`` of a commutator sweep.

    ``max_ratio`` is the largest ratio over all trials at that ``N``. Each
    ``(N, trial)`` has its own seed stream, so rows do not depend on the
    order in which they are computed.
    """
    if callable(which):
        omega, label = which, getattr(which, "__name__", "custom")
    else:
        if which not in OMEGAS:
            raise PreconditionError(f"unknown omega {which!r}; choose 1, 2 or 3")
        omega, label = OMEGAS[which], str(which)
    if trials < 1:
        raise PreconditionError("trials must be at least 1")
    rows: list[dict] = []
    for N in Ns:
        grid = CircleGrid(int(N))
        P = SzegoProjection(grid)
        block = []
        for trial in range(trials):
            rng = np.random.default_rng(np.random.SeedSequence([seed, int(N), trial]))
            f = random_trig_poly(grid, rng)
            block.append({"omega": label, "N": int(N), "trial": trial, "ratio": commutator_ratio(omega, f, grid, P)})
        top = max(r["ratio"] for r in block)
        for r in block:
            r["max_ratio"] = top
        rows.extend(block)
    return rows


def max_ratio_by_n(rows: Iterable[dict]) -> dict[int, float]:
    out: dict[int, float] = {}
    for r in rows:
        out[r["N"]] = max(out.get(r["N"], 0.0), r["ratio"])
    return out


def rows_to_csv(rows: Iterable[dict]) -> str:
    """CSV text with round-trip float formatting, for byte-stable output."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([r["omega"], r["N"], r["trial"], repr(float(r["ratio"])), repr(float(r["max_ratio"]))])
    return buf.getvalue()
