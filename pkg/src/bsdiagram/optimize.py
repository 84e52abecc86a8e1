"""Derivative-free search over convex bodies given by truncated support functions."""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExhausted, DiagramError, PinFailed
from .fem import ShapeMetrics, evaluate_shape
from .geometry import ConvexPolygon, SupportFunction, polygon_from_support
from .shapederiv import Classification, classify_gamma
from .special import UNIT_DISK_RADIUS, lambda1_ball

SEARCH_ORDER = 8
SEARCH_SAMPLES = 128
SHRINK = 0.7
PATIENCE = 10
MIN_CURVATURE = 1e-3
TRACE_COLUMNS = ["iteration", "score", "x", "y", "accepted"]


def f_gamma(metrics: ShapeMetrics, gamma: float) -> float:
    """y - gamma x in unit-area coordinates."""
    return metrics.y - gamma * metrics.x


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    score: float
    x: float
    y: float
    accepted: bool


@dataclass
class SearchState:
    current: SupportFunction
    score: float
    metrics: ShapeMetrics | None
    target_x: float | None = None
    penalty_weight: float = 0.0
    seed: int = 0
    budget: int = 0
    used: int = 0
    step: float = 0.05
    trace: list = field(default_factory=list)


@dataclass(frozen=True)
class SearchResult:
    best: SupportFunction
    metrics: ShapeMetrics
    score: float
    trace: tuple
    seed: int
    evaluations: int

    def polygon(self, n_samples: int = SEARCH_SAMPLES) -> ConvexPolygon:
        return polygon_from_support(self.best, n_samples)

    def error_budget(self, gamma: float = 0.0) -> float:
        """Absolute solver error of the final score y - gamma x."""
        m = self.metrics
        return m.y * m.torsion_err + abs(gamma) * m.x * m.lambda1_err


def trace_to_csv(trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for r in trace:
        w.writerow([r.iteration, repr(r.score), repr(r.x), repr(r.y), int(r.accepted)])
    return buf.getvalue()


def disk_support(order: int = SEARCH_ORDER) -> SupportFunction:
    return SupportFunction.constant(UNIT_DISK_RADIUS, order)


def normalize_support(h: SupportFunction) -> SupportFunction:
    """Rescale to unit enclosed area."""
    return h.scaled(1.0 / math.sqrt(h.area()))


def admissible(h: SupportFunction) -> bool:
    return h.min_curvature_radius(SEARCH_SAMPLES * 4) > MIN_CURVATURE * h.radius_offset


def _evaluate(h: SupportFunction, levels: int) -> ShapeMetrics:
    return evaluate_shape(polygon_from_support(h, SEARCH_SAMPLES), levels=levels)


def _propose(h: SupportFunction, rng: np.random.Generator, step: float) -> SupportFunction:
    """Random move of one Fourier coefficient (modes m >= 2) followed by area renormalization."""
    a = np.array(h.cos_coeffs)
    b = np.array(h.sin_coeffs)
    k = int(rng.integers(0, 2 * (len(a) - 1)))
    delta = step * UNIT_DISK_RADIUS * rng.standard_normal()
    if k < len(a) - 1:
        a[k + 1] += delta
    else:
        b[k - len(a) + 2] += delta
    cand = SupportFunction(h.radius_offset, a, b)
    # a large step can leave the convex cone; admissible() rejects such candidates later
    return normalize_support(cand) if cand.area() > 0 else cand


def _hill_climb(state: SearchState, objective, rng, levels: int, n_evals: int):
    """Sequential hill climbing; the trace score is the running best, so it never increases."""
    rejections = 0
    stop = min(state.budget, state.used + n_evals)
    # inadmissible proposals cost no evaluation but are capped all the same
    for _ in range(5 * n_evals):
        if state.used >= stop:
            break
        cand = _propose(state.current, rng, state.step)
        accepted = False
        m = None
        if admissible(cand):
            state.used += 1
            try:
                m = _evaluate(cand, levels)
            except DiagramError:
                m = None
            if m is not None:
                score = objective(m)
                if score < state.score:
                    state.current, state.score, state.metrics = cand, score, m
                    accepted = True
        if accepted:
            rejections = 0
        else:
            rejections += 1
            if rejections >= PATIENCE:
                state.step *= SHRINK
                rejections = 0
        cur = state.metrics
        state.trace.append(TraceRow(len(state.trace), state.score, cur.x if cur else math.nan,
                                    cur.y if cur else math.nan, accepted))


def _witness_start(gamma: float, order: int) -> SupportFunction | None:
    c = classify_gamma(gamma)
    if c.kind is not Classification.INDEFINITE:
        return None
    p = c.negative_witness[0]
    a = np.zeros(order)
    b = np.zeros(order)
    n = min(order, p.order)
    eps = 0.25 * p.max_epsilon
    a[:n] = eps * p.a[:n]
    b[:n] = eps * p.b[:n]
    return normalize_support(SupportFunction(UNIT_DISK_RADIUS, a, b))


def _restart(args):
    gamma, budget, seed_seq, index, start, levels, step = args
    rng = np.random.default_rng(seed_seq)
    h = disk_support() if start is None else start
    if index > 0:
        # later restarts begin from a random admissible neighbour
        for _ in range(100):
            cand = _propose(h, rng, 0.1)
            if admissible(cand):
                h = cand
                break
    state = SearchState(h, math.inf, None, seed=index, budget=budget, step=step)
    try:
        m = _evaluate(h, levels)
        state.used += 1
        state.score, state.metrics = f_gamma(m, gamma), m
    except DiagramError:
        state.used += 1
    _hill_climb(state, lambda mm: f_gamma(mm, gamma), rng, levels, budget - state.used)
    return state


def minimize_f_gamma(gamma: float, budget: int = 200, restarts: int = 2, seed: int = 0,
                     search_levels: int = 2, final_levels: int = 3, workers: int = 1,
                     initial: SupportFunction | None = None, step: float = 0.05) -> SearchResult:
    """Hill-climb F_gamma = y - gamma x over unit-area bodies with M = 8 support modes.

    The budget counts FEM evaluations and is split evenly over the restarts.
    In the indefinite range of gamma the first restart starts along the
    m = 2 direction on which the disk's second variation is negative.
    """
    if budget < 100:
        raise ValueError("budget must be at least 100")
    if restarts < 1:
        raise ValueError("restarts must be positive")
    start = initial if initial is not None else _witness_start(gamma, SEARCH_ORDER)
    seqs = np.random.SeedSequence(seed).spawn(restarts)
    per = budget // restarts
    jobs = [(gamma, per, seqs[i], i, start, search_levels, step) for i in range(restarts)]
    if workers > 1 and restarts > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as ex:
            states = list(ex.map(_restart, jobs))
    else:
        states = [_restart(j) for j in jobs]
    finished = [s for s in states if s.metrics is not None]
    used = sum(s.used for s in states)
    if not finished:
        raise BudgetExhausted(f"no candidate could be evaluated in {used} evaluations")
    best = min(finished, key=lambda s: (s.score, s.seed))
    final = _evaluate(best.current, final_levels)
    return SearchResult(best.current, final, f_gamma(final, gamma), tuple(best.trace), best.seed, used + 1)


class Sense(enum.Enum):
    MIN = "min"
    MAX = "max"


PIN_TOL = 0.005


def _initial_for_x(x_target: float, levels: int) -> tuple[SupportFunction, int]:
    """Bisect on the m = 2 amplitude so the start lies near x_target."""
    lo, hi = 0.0, UNIT_DISK_RADIUS / 3.0 * (1.0 - 2 * MIN_CURVATURE)
    used = 0

    def body(t):
        a = np.zeros(SEARCH_ORDER)
        a[1] = t
        return normalize_support(SupportFunction(UNIT_DISK_RADIUS, a, np.zeros(SEARCH_ORDER)))

    h_hi = body(hi)
    used += 1
    if _evaluate(h_hi, levels).x <= x_target:
        return h_hi, used
    for _ in range(12):
        mid = 0.5 * (lo + hi)
        used += 1
        if _evaluate(body(mid), levels).x < x_target:
            lo = mid
        else:
            hi = mid
    return body(0.5 * (lo + hi)), used


def probe_envelope(x_target: float, sense: Sense | str = Sense.MIN, budget: int = 150, seed: int = 0,
                   search_levels: int = 2, final_levels: int = 3, weight: float = 1.0,
                   rounds: int = 3) -> SearchResult:
    """Extremize y at x close to x_target with a quadratic penalty on x - x_target.

    The penalty weight grows tenfold per round; the final shape must satisfy
    |x - x_target| <= 0.5% x_target, otherwise PinFailed carries the result.
    """
    sense = Sense(sense)
    if x_target <= lambda1_ball():
        raise ValueError("x_target must exceed the disk value pi j^2")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    h, used = _initial_for_x(x_target, search_levels)
    sign = 1.0 if sense is Sense.MIN else -1.0
    state = SearchState(h, math.inf, None, target_x=x_target, seed=seed, budget=budget, used=used)
    for r in range(rounds):
        w = weight * 10.0**r
        state.penalty_weight = w

        def objective(m, w=w):
            return sign * m.y + w * (m.x - x_target) ** 2

        m = state.metrics if state.metrics is not None else _evaluate(state.current, search_levels)
        state.metrics, state.score = m, objective(m)
        _hill_climb(state, objective, rng, search_levels, (budget - used) // rounds)
    final = _evaluate(state.current, final_levels)
    result = SearchResult(state.current, final, final.y, tuple(state.trace), seed, state.used + 1)
    if abs(final.x - x_target) > PIN_TOL * x_target:
        raise PinFailed(f"x = {final.x:.4f} misses the target {x_target:.4f} by more than 0.5%", result)
    return result
