"""Numeric back-end: admissible sampling, residual statistics, RK4 checks."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .expr import Chart, EvalError, Expr, compile_expr

__all__ = [
    "SamplerConfig",
    "FlowReport",
    "default_sampler",
    "sample_points",
    "residual_stats",
    "flow_conservation",
]


@dataclass(frozen=True)
class SamplerConfig:
    """Deterministic sampling recipe: identical config => identical points."""

    box: tuple  # ((lo, hi), ...) per coordinate
    count: int = 64
    seed: int = 42
    tolerance: float = 1e-9
    margin: float = 1e-3  # rejection margin around excluded loci

    def __post_init__(self):
        object.__setattr__(
            self, "box", tuple((float(lo), float(hi)) for lo, hi in self.box)
        )
        if self.count < 1:
            raise ValueError("sample count must be at least 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")

    def with_seed(self, seed: int) -> "SamplerConfig":
        return SamplerConfig(self.box, self.count, seed, self.tolerance, self.margin)

    def to_json(self) -> dict:
        return {
            "box": [list(iv) for iv in self.box],
            "count": self.count,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "margin": self.margin,
        }


def default_sampler(chart: Chart, count: int = 64, seed: int = 42,
                    tolerance: float = 1e-9, box=None) -> SamplerConfig:
    if box is None:
        box = tuple((-2.0, 2.0) for _ in chart.coords)
    return SamplerConfig(tuple(box), count, seed, tolerance)


def sample_points(chart: Chart, cfg: SamplerConfig) -> list:
    """Uniform draws in the box, rejecting near the excluded loci."""
    if len(cfg.box) != chart.m:
        raise ValueError(
            f"box dimension {len(cfg.box)} does not match chart dimension {chart.m}"
        )
    rng = random.Random(cfg.seed)
    loci = [compile_expr(locus, chart) for locus in chart.excluded]
    points = []
    attempts = 0
    limit = max(1000, 200 * cfg.count)
    while len(points) < cfg.count:
        if attempts >= limit:
            raise EvalError("degenerate sampling domain")
        attempts += 1
        pt = tuple(rng.uniform(lo, hi) for lo, hi in cfg.box)
        admissible = True
        for locus in loci:
            try:
                if abs(locus(pt)) < cfg.margin:
                    admissible = False
                    break
            except EvalError:
                admissible = False
                break
        if admissible:
            points.append(pt)
    return points


def _coefficients(obj) -> list:
    """Expressions to evaluate: an Expr, a graded tensor, or a list."""
    if isinstance(obj, Expr):
        return [obj]
    if hasattr(obj, "entries"):
        return [coeff for _, coeff in sorted(obj.entries.items())]
    return list(obj)


def residual_stats(obj, points: Sequence, chart: Chart,
                   bindings: Mapping[str, float] | None = None) -> dict:
    """Max/mean absolute value over points and coefficients.

    Evaluation failures skip the point; more than half skipped is an error.
    """
    fns = [compile_expr(e, chart, bindings) for e in _coefficients(obj)]
    values = []
    skipped = 0
    for pt in points:
        try:
            local = [abs(fn(pt)) for fn in fns]
        except EvalError:
            skipped += 1
            continue
        if any(not math.isfinite(v) for v in local):
            skipped += 1
            continue
        values.extend(local)
    if skipped * 2 > len(points):
        raise EvalError("more than half of the sample points failed to evaluate")
    if not fns:
        return {"max": 0.0, "mean": 0.0, "evaluated": len(points) - skipped, "skipped": skipped}
    if not values:
        raise EvalError("no admissible sample points")
    return {
        "max": max(values),
        "mean": math.fsum(values) / len(values),
        "evaluated": len(points) - skipped,
        "skipped": skipped,
    }


@dataclass(frozen=True)
class FlowReport:
    """Conservation report for one RK4 trajectory."""

    start: tuple
    dt: float
    horizon: float
    steps: int
    invariant_drift: tuple  # per-invariant max |drift| (relative when base > 1e-6)
    field_deviation_max: float | None  # max ||X - pi#dh|| along the trajectory
    truncated: bool

    def to_json(self) -> dict:
        return {
            "start": list(self.start),
            "dt": self.dt,
            "horizon": self.horizon,
            "steps": self.steps,
            "invariant_drift": list(self.invariant_drift),
            "field_deviation_max": self.field_deviation_max,
            "truncated": self.truncated,
        }


def flow_conservation(
    X,
    invariants: Sequence[Expr],
    start: Sequence[float],
    horizon: float,
    dt: float,
    pi_h=None,
    box=None,
    bindings: Mapping[str, float] | None = None,
) -> FlowReport:
    """Integrate X with fixed-step RK4 and track invariant drift.

    ``pi_h`` is an optional (bivector, hamiltonian) pair; when given, the
    report includes the max pointwise norm of X - pi#dh along the trajectory.
    """
    from .exterior import sharp, d as exterior_d

    chart = X.chart
    if dt <= 0:
        raise ValueError("dt must be positive")
    m = chart.m
    field = [
        compile_expr(X.entries.get((i,), Expr.number(0)), chart, bindings)
        for i in range(m)
    ]
    inv_fns = [compile_expr(e, chart, bindings) for e in invariants]
    loci = [compile_expr(locus, chart, bindings) for locus in chart.excluded]
    margin = 1e-9

    dev_fns = None
    if pi_h is not None:
        pi, h = pi_h
        ham = sharp(pi, exterior_d(h if hasattr(h, "entries") else _as_zero_form(chart, h)))
        dev_fns = [
            compile_expr(
                X.entries.get((i,), Expr.number(0)) - ham.entries.get((i,), Expr.number(0)),
                chart,
                bindings,
            )
            for i in range(m)
        ]

    def rhs(pt):
        return [f(pt) for f in field]

    point = [float(v) for v in start]
    base = [fn(point) for fn in inv_fns]
    drift = [0.0] * len(inv_fns)
    deviation = 0.0
    truncated = False
    steps = int(round(horizon / dt))

    def record(pt):
        nonlocal deviation
        for k, fn in enumerate(inv_fns):
            value = fn(pt)
            scale = abs(base[k]) if abs(base[k]) > 1e-6 else 1.0
            drift[k] = max(drift[k], abs(value - base[k]) / scale)
        if dev_fns is not None:
            deviation = max(deviation, math.sqrt(math.fsum(f(pt) ** 2 for f in dev_fns)))

    def admissible(pt):
        if box is not None:
            for v, (lo, hi) in zip(pt, box):
                if v < lo or v > hi:
                    return False
        for locus in loci:
            try:
                if abs(locus(pt)) < margin:
                    return False
            except EvalError:
                return False
        return True

    record(point)
    done = 0
    for _ in range(steps):
        try:
            k1 = rhs(point)
            k2 = rhs([p + 0.5 * dt * v for p, v in zip(point, k1)])
            k3 = rhs([p + 0.5 * dt * v for p, v in zip(point, k2)])
            k4 = rhs([p + dt * v for p, v in zip(point, k3)])
        except EvalError:
            truncated = True
            break
        point = [
            p + dt * (a + 2 * b + 2 * c + e) / 6.0
            for p, a, b, c, e in zip(point, k1, k2, k3, k4)
        ]
        if not admissible(point):
            truncated = True
            break
        record(point)
        done += 1

    return FlowReport(
        start=tuple(float(v) for v in start),
        dt=float(dt),
        horizon=float(horizon),
        steps=done,
        invariant_drift=tuple(drift),
        field_deviation_max=None if dev_fns is None else deviation,
        truncated=truncated,
    )


def _as_zero_form(chart, h):
    from .exterior import Tensor

    return Tensor.form(chart, 0, {(): h})
