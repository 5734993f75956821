"""``omega-calc``: reproducible experiments from the command line.

Every invocation is turned into an :class:`ExperimentConfig`, executed by
:func:`run`, and reported as JSON (``--json`` or an ``--out`` path ending in
``.json``) or CSV for sweep tables. Exit codes: 0 success, 2 precondition
violation, 3 optimizer nonconvergence, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
import scipy

from . import __version__
from .centralizer import (
    CanonicalOmega,
    Centralizer,
    LogModulus,
    LogSymbol,
    RankLog,
    ZeroCentralizer,
    check_axioms,
    fit_equivalence,
    lift,
    split_centralizer,
)
from .circle import commutator_experiment, max_ratio_by_n, rows_to_csv
from .indicator import (
    ClosedFormLp,
    NumericIndicator,
    estimate_delta,
    indicator_affine,
    lozanovsky_factorize,
    norm_from_indicator,
)
from .interpolate import Couple, calderon_norm, closed_form_lp_couple, wolff_defects, wolff_glue
from .measure import MeasureSpace, NonConvergenceError, PreconditionError
from .spaces import CalderonProduct, WeightedLp, dual_norm
from .twisted import (
    TwistedElement,
    commutator_bound,
    derived_norm_upper,
    random_substochastic,
    twisted_quasinorm,
)

EXIT_OK, EXIT_PRECONDITION, EXIT_NONCONVERGENCE, EXIT_USAGE = 0, 2, 3, 64

ACTIONS = {
    "indicator": ("eval", "delta", "factorize", "invert", "linearity"),
    "interpolate": None,
    "omega": None,
    "centralizer": ("check", "lift", "split", "equiv"),
    "twisted": ("norm", "upper", "commutator"),
    "circle": ("commutator",),
    "wolff": None,
}


@dataclass
class ExperimentConfig:
    command: str
    action: str | None = None
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    tol: float = 1e-6
    out: str | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls(**json.loads(text))


@dataclass
class Report:
    config: ExperimentConfig
    results: dict[str, Any]
    table: list[dict] | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "results": self.results,
            "table": self.table,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), sort_keys=True, indent=2)

    def csv_body(self) -> str:
        if self.table is None:
            return ""
        if self.config.command == "circle":
            return rows_to_csv(self.table)
        cols = list(self.table[0]) if self.table else []
        lines = [",".join(cols)]
        for row in self.table:
            lines.append(",".join(_fmt(row[c]) for c in cols))
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# --- parameter helpers -----------------------------------------------------


def _vector(text) -> np.ndarray:
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return np.asarray(text, dtype=complex)
    vals = [complex(tok.strip().replace("i", "j")) for tok in str(text).split(",") if tok.strip()]
    return np.asarray(vals)


def _real(v: np.ndarray) -> np.ndarray:
    if np.any(v.imag):
        raise PreconditionError("expected a real vector")
    return v.real


def _ints(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(tok) for tok in str(text).split(",") if tok.strip()]


def _measure(p: dict, n: int | None) -> MeasureSpace:
    mu = _vector(p.get("mu"))
    if mu is not None:
        return MeasureSpace(_real(mu))
    if n is None:
        raise PreconditionError("cannot infer the number of atoms; pass --n or a vector")
    return MeasureSpace.uniform(n)


def _lp_space(name: str, S: MeasureSpace, w=None) -> WeightedLp:
    """``l1``, ``l2``, ``linf`` or ``lp:<p>``."""
    name = str(name).lower()
    if name.startswith("lp:"):
        p = name[3:]
    elif name.startswith("l"):
        p = name[1:]
    else:
        raise PreconditionError(f"unknown space {name!r}")
    return WeightedLp(S, p, None if w is None else _real(_vector(w)))


def _n_from(p: dict, *keys) -> int | None:
    if p.get("n") is not None:
        return int(p["n"])
    for k in keys:
        v = _vector(p.get(k))
        if v is not None:
            return v.size
    return None


def _centralizer(p: dict, A: WeightedLp, S: MeasureSpace, rng) -> Centralizer:
    kind = p.get("omega", "logmod")
    if kind == "logmod":
        return LogModulus(A)
    if kind == "ranklog":
        return RankLog(A)
    if kind == "zero":
        return ZeroCentralizer(A)
    if kind == "logsym":
        g = _vector(p.get("g"))
        g = rng.uniform(-1, 1, S.n) * float(p.get("g_scale", 0.5)) if g is None else _real(g)
        return LogSymbol(A, g)
    if kind == "canonical":
        return CanonicalOmega(WeightedLp(S, p.get("p0", 1)), WeightedLp(S, p.get("p1", "inf")), float(p.get("t", 0.5)))
    raise PreconditionError(f"unknown centralizer {kind!r}")


# --- commands --------------------------------------------------------------


def _cmd_indicator(cfg: ExperimentConfig) -> tuple[dict, list | None]:
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    if cfg.action == "linearity":
        n = int(p.get("n", 8))
        S = _measure(p, n)
        t = float(p.get("t", 0.5))
        w0 = w1 = None
        if p.get("random_weights"):
            w0, w1 = rng.uniform(0.5, 2.0, n), rng.uniform(0.5, 2.0, n)
        A0, A1 = WeightedLp(S, p.get("p0", 1), w0), WeightedLp(S, p.get("p1", "inf"), w1)
        affine = indicator_affine(ClosedFormLp.of(A0), ClosedFormLp.of(A1), t)
        closed = ClosedFormLp.of(closed_form_lp_couple(A0, A1, t))
        numeric = NumericIndicator(CalderonProduct(A0, A1, t))
        samples = int(p.get("samples", 20))
        d_closed = d_numeric = 0.0
        for _ in range(samples):
            f = rng.exponential(size=n)
            ref = affine(f)
            d_closed = max(d_closed, abs(ref - closed(f)) / (1 + abs(ref)))
            d_numeric = max(d_numeric, abs(ref - numeric(f)) / (1 + abs(ref)))
        return {
            "t": t,
            "samples": samples,
            "tolerance": cfg.tol,
            "max_defect_closed_form": d_closed,
            "max_defect_numeric": d_numeric,
            "max_defect": max(d_closed, d_numeric),
            "passed": max(d_closed, d_numeric) <= cfg.tol,
        }, None
    n = _n_from(p, "f", "x")
    S = _measure(p, n)
    A = _lp_space(p.get("space", "l2"), S, p.get("w"))
    phi = ClosedFormLp.of(A)
    if cfg.action == "eval":
        f = _real(_vector(p["f"]))
        numeric = NumericIndicator(A)(f)
        return {"value": phi(f), "numeric": numeric}, None
    if cfg.action == "delta":
        budget = int(p.get("budget", 1000))
        est = estimate_delta(phi, budget=budget, seed=cfg.seed)
        return {"delta_estimate": est, "log2": math.log(2), "budget": budget, "exact": phi.delta_bound()}, None
    if cfg.action == "factorize":
        f = _real(_vector(p["f"]))
        loz = lozanovsky_factorize(A, f)
        return {
            "a": loz.a,
            "a_star": loz.a_star,
            "norm_a": A.norm(loz.a),
            "dual_norm_a_star": dual_norm(A, loz.a_star),
            "mass": loz.mass,
            "residual": float(np.max(np.abs(f - loz.a * loz.a_star))),
        }, None
    if cfg.action == "invert":
        x = _vector(p["x"])
        rec = norm_from_indicator(phi, x)
        direct = A.norm(x)
        return {"reconstructed": rec, "direct": direct, "relative_error": abs(rec - direct) / direct}, None
    raise PreconditionError(f"unknown indicator action {cfg.action!r}")


def _couple_from(p: dict, S: MeasureSpace) -> tuple[Couple, float]:
    a0 = WeightedLp(S, p.get("p0", 1), None if p.get("w0") is None else _real(_vector(p["w0"])))
    a1 = WeightedLp(S, p.get("p1", "inf"), None if p.get("w1") is None else _real(_vector(p["w1"])))
    return Couple(a0, a1), float(p.get("t", 0.5))


def _cmd_interpolate(cfg: ExperimentConfig) -> tuple[dict, None]:
    p = cfg.params
    x = _vector(p["x"])
    S = _measure(p, x.size)
    c, t = _couple_from(p, S)
    nrm, fac = calderon_norm(c, t, x)
    closed = closed_form_lp_couple(c.a0, c.a1, t).norm(x)
    return {
        "norm": nrm,
        "closed_form": closed,
        "relative_error": abs(nrm - closed) / closed if closed else 0.0,
        "endpoint_norms": list(fac.endpoint_norms),
        "converged": fac.converged,
        "omega": fac.omega(),
    }, None


def _cmd_omega(cfg: ExperimentConfig) -> tuple[dict, None]:
    p = cfg.params
    x = _vector(p["x"])
    S = _measure(p, x.size)
    c, t = _couple_from(p, S)
    _, fac = calderon_norm(c, t, x)
    return {"omega": fac.omega(), "s": fac.s, "t": t}, None


def _cmd_centralizer(cfg: ExperimentConfig) -> tuple[dict, None]:
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    n = _n_from(p, "x") or 8
    S = _measure(p, n)
    if p.get("omega") == "canonical":
        # the differential lives on the interpolated space
        c, t = _couple_from(p, S)
        A = closed_form_lp_couple(c.a0, c.a1, t)
    else:
        A = _lp_space(p.get("space", "l2"), S, p.get("w"))
    omega = _centralizer(p, A, S, rng)
    samples = int(p.get("samples", 100))
    if cfg.action == "check":
        return check_axioms(omega, samples=samples, seed=cfg.seed).to_dict(), None
    if cfg.action == "lift":
        x = _real(_vector(p["x"]))
        return {"lift": lift(omega, x).values}, None
    if cfg.action == "equiv":
        other = _centralizer({**p, "omega": p.get("other", "logmod")}, A, S, rng)
        fit = fit_equivalence(omega, other, samples=samples, seed=cfg.seed, space=A)
        return {"c1": fit.c1, "c2_hat": fit.c2_hat, "samples": fit.samples, "relative_residual": fit.relative_residual}, None
    if cfg.action == "split":
        res = split_centralizer(
            A, omega, float(p.get("t", 0.5)), samples=samples, seed=cfg.seed, check_samples=int(p.get("check", 4))
        )
        rep = {k: v for k, v in res.report.items() if k != "attempts"}
        rep["ok"] = res.ok
        rep["attempted_c"] = [a["c"] for a in res.report.get("attempts", [])]
        if not res.ok:
            raise PreconditionError(f"no scale in the schedule yields valid indicators: {rep}")
        return rep, None
    raise PreconditionError(f"unknown centralizer action {cfg.action!r}")


def _cmd_twisted(cfg: ExperimentConfig) -> tuple[dict, list | None]:
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    if cfg.action == "commutator":
        t = float(p.get("t", 0.5))
        samples = int(p.get("samples", 50))
        table = []
        for n in _ints(p.get("n", "8,32,128")):
            S = MeasureSpace.uniform(n)
            omega = CanonicalOmega(WeightedLp(S, p.get("p0", 1)), WeightedLp(S, p.get("p1", "inf")), t)
            A = closed_form_lp_couple(omega.couple.a0, omega.couple.a1, t)
            T = random_substochastic(n, np.random.default_rng(np.random.SeedSequence([cfg.seed, n])))
            est = commutator_bound(T, omega, A, samples=samples, seed=cfg.seed)
            table.append({"n": n, "estimate": est, "seed": cfg.seed})
        return {"samples": samples, "t": t}, table
    u = _vector(p.get("u"))
    v = _vector(p.get("v"))
    n = u.size if u is not None else v.size
    S = _measure(p, n)
    u = np.zeros(n) if u is None else u
    v = np.zeros(n) if v is None else v
    e = TwistedElement(u, v)
    if cfg.action == "norm":
        A = _lp_space(p.get("space", "l2"), S, p.get("w"))
        omega = _centralizer(p, A, S, rng)
        return {"quasinorm": twisted_quasinorm(A, omega, e)}, None
    if cfg.action == "upper":
        c, t = _couple_from(p, S)
        bound = derived_norm_upper(c, t, e)
        omega = CanonicalOmega(c.a0, c.a1, t)
        q = twisted_quasinorm(closed_form_lp_couple(c.a0, c.a1, t), omega, e)
        return {"upper_bound": bound.value, "quasinorm": q, "ratio": bound.value / q if q else 0.0}, None
    raise PreconditionError(f"unknown twisted action {cfg.action!r}")


def _cmd_circle(cfg: ExperimentConfig) -> tuple[dict, list]:
    p = cfg.params
    which = int(p.get("omega", 1))
    Ns = _ints(p.get("n", "256,512,1024"))
    trials = int(p.get("trials", 20))
    rows = commutator_experiment(which, Ns, trials, seed=cfg.seed)
    m = max_ratio_by_n(rows)
    growth = m[max(Ns)] / m[min(Ns)]
    return {"omega": which, "trials": trials, "max_ratio": m, "growth": growth}, rows


def _cmd_wolff(cfg: ExperimentConfig) -> tuple[dict, None]:
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    n = int(p.get("n", 6))
    S = _measure(p, n)
    phi1 = ClosedFormLp(S, float(p.get("p1", 1 + 4 * rng.random())), rng.uniform(0.5, 2, n))
    phi4 = ClosedFormLp(S, float(p.get("p4", 1 + 4 * rng.random())), rng.uniform(0.5, 2, n))
    th1 = float(p.get("theta1", rng.uniform(0.1, 0.9)))
    th2 = float(p.get("theta2", rng.uniform(0.1, 0.9)))
    a1, a2 = wolff_glue(phi1, phi4, th1, th2)
    samples = int(p.get("samples", 50))
    d2, d3 = wolff_defects(phi1, phi4, th1, th2, (a1, a2), samples=samples, seed=cfg.seed)
    return {"theta1": th1, "theta2": th2, "alpha1": a1, "alpha2": a2, "defects": [d2, d3], "samples": samples}, None


COMMANDS = {
    "indicator": _cmd_indicator,
    "interpolate": _cmd_interpolate,
    "omega": _cmd_omega,
    "centralizer": _cmd_centralizer,
    "twisted": _cmd_twisted,
    "circle": _cmd_circle,
    "wolff": _cmd_wolff,
}


def run(config: ExperimentConfig) -> Report:
    """Execute a configuration. Raises the library's precondition and convergence errors."""
    if config.command not in COMMANDS:
        raise PreconditionError(f"unknown command {config.command!r}")
    actions = ACTIONS[config.command]
    if actions is not None and config.action not in actions:
        raise PreconditionError(f"{config.command} needs one of {', '.join(actions)}")
    start = time.perf_counter()
    results, table = COMMANDS[config.command](config)
    meta = {
        "seed": config.seed,
        "tolerance": config.tol,
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "wall_time": time.perf_counter() - start,
    }
    return Report(config, results, table, meta)


# --- argument parsing ------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _globals(parser: argparse.ArgumentParser, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=d if suppress else 0)
    parser.add_argument("--out", default=d)
    parser.add_argument("--tol", type=float, default=d if suppress else 1e-6)
    parser.add_argument("--json", action="store_true", default=d if suppress else False)


# options per command; values are kept as strings and parsed by the command
_OPTIONS = {
    "indicator": ["space", "w", "mu", "f", "x", "n", "budget", "p0", "p1", "t", "samples"],
    "interpolate": ["x", "mu", "p0", "p1", "w0", "w1", "t"],
    "omega": ["x", "mu", "p0", "p1", "w0", "w1", "t"],
    "centralizer": ["space", "w", "mu", "omega", "other", "x", "n", "t", "p0", "p1", "g", "g-scale", "samples", "check"],
    "twisted": ["space", "w", "mu", "omega", "u", "v", "n", "t", "p0", "p1", "w0", "w1", "g", "samples"],
    "circle": ["omega", "n", "trials"],
    "wolff": ["n", "mu", "p1", "p4", "theta1", "theta2", "samples"],
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="omega-calc", description=__doc__.splitlines()[0])
    _globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for cmd, actions in ACTIONS.items():
        cp = sub.add_parser(cmd)
        target = cp
        if actions is not None:
            asub = cp.add_subparsers(dest="action", parser_class=_Parser)
            leaves = [asub.add_parser(a) for a in actions]
        else:
            leaves = [target]
        for leaf in leaves:
            _globals(leaf, suppress=True)
            for opt in _OPTIONS[cmd]:
                leaf.add_argument(f"--{opt}", dest=opt.replace("-", "_"), default=None)
            if cmd == "indicator":
                leaf.add_argument("--random-weights", dest="random_weights", action="store_true", default=None)
    return parser


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    skip = {"command", "action", "seed", "out", "tol", "json"}
    params = {k: v for k, v in vars(ns).items() if k not in skip and v is not None}
    return ExperimentConfig(ns.command, getattr(ns, "action", None), params, ns.seed, ns.tol, ns.out)


def _summary(report: Report) -> str:
    lines = []
    for k, v in report.results.items():
        lines.append(f"{k}: {json.dumps(_jsonable(v))}")
    return "\n".join(lines) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None or (ACTIONS[ns.command] is not None and getattr(ns, "action", None) is None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    cfg = config_from_args(ns)
    try:
        report = run(cfg)
    except PreconditionError as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except NonConvergenceError as exc:
        print(f"optimizer did not converge: {exc} (best bound {exc.bound})", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            if cfg.out.endswith(".csv") and report.table is not None:
                fh.write(report.csv_body())
            else:
                fh.write(report.to_json() + "\n")
    if ns.json:
        sys.stdout.write(report.to_json() + "\n")
    elif report.table is not None and not cfg.out:
        sys.stdout.write(report.csv_body())
    else:
        sys.stdout.write(_summary(report))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
