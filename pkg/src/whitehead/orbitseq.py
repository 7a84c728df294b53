"""Sequences of Whitehead homeomorphisms with a summable dilatation budget."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .barycentric import DEParams, act_halfplane, beltrami_at, halfplane_to_disk
from .charmap import Composed, compose, conjugate_by, random_vertices, whitehead_maps
from .modgroup import Subgroup, level_subgroup
from .moebius import (
    IDENTITY, INF, ONE, ZERO, BoundaryPoint, MoebiusMap, OrientationError, apply, diag,
    in_psl2z, three_point_map,
)
from .qsmetric import GRID_DEPTH, moebius_deviation, standard_quads, teich_proxy_distance, farey_vertices

CHECK_CUSPS = (INF, ZERO, ONE)
MAX_STAGE_POWER = 1024


class ScheduleError(ValueError):
    """A schedule or budget list violates the ordering invariants."""


class StageFailure(RuntimeError):
    def __init__(self, stage: int, cause: Exception):
        super().__init__(f"stage {stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class ScheduleEntry:
    A: MoebiusMap
    level: int
    measured_norm: float
    budget: float
    index: int = 0
    witness: Optional[BoundaryPoint] = None

    @property
    def lam(self) -> Fraction:
        return Fraction(self.A.a, self.A.d)

    def to_dict(self) -> dict:
        return {"lambda": _q(self.lam), "level": self.level, "index": self.index,
                "measured_norm": round(self.measured_norm, 9), "budget": _q(Fraction(self.budget)),
                "witness": None if self.witness is None else str(self.witness)}


@dataclass
class Schedule:
    entries: List[ScheduleEntry]
    budgets: List[float]
    shortfall: Optional[str] = None
    rejected: List[dict] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return self.shortfall is None


def _q(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def stage_budgets(n: int) -> List[float]:
    return [2.0 ** -(i + 1) for i in range(1, n + 1)]


def check_budgets(budgets: Sequence[float]) -> None:
    if any(b <= 0 for b in budgets):
        raise ScheduleError("budgets must be positive")
    for i in range(1, len(budgets)):
        if budgets[i] >= budgets[i - 1]:
            raise ScheduleError(f"budget {budgets[i]} at stage {i + 1} does not decrease")
    if sum(budgets) >= 1:
        raise ScheduleError("budgets are not summable below 1")


def validate(entries: Sequence[ScheduleEntry]) -> None:
    check_budgets([e.budget for e in entries])
    for i, e in enumerate(entries, 1):
        if e.measured_norm >= e.budget:
            raise ScheduleError(f"stage {i} norm {e.measured_norm:.4g} exceeds budget {e.budget}")
        if i > 1 and e.level <= entries[i - 2].level:
            raise ScheduleError(f"levels must increase (stage {i})")
        if e.witness is None:
            raise ScheduleError(f"stage {i} has no non-Moebius witness")


# --- norm sampling ----------------------------------------------------------

def standard_points(A: MoebiusMap, G: Subgroup, radius: float = 0.99) -> List[complex]:
    """Half-plane sample points: i, the flip point 1+i, its A-image, two G-translates of it."""
    flip = 1 + 1j
    pts = [1j, flip, act_halfplane(A, flip)]
    gens = sorted(G.schreier_generators(), key=lambda g: (max(map(abs, g.entries())), g.entries()))
    for g in gens:
        if len(pts) == 5:
            break
        tau = act_halfplane(g, flip)
        if abs(halfplane_to_disk(tau)) <= radius and all(abs(tau - p) > 1e-9 for p in pts):
            pts.append(tau)
    return pts


def sampled_norm(f, points: Sequence[complex], p: DEParams = DEParams(),
                 stop_above: Optional[float] = None) -> Tuple[float, bool]:
    """Max ``|mu(E(f))|`` over half-plane points; stops early once ``stop_above`` is reached."""
    best, ok = 0.0, True
    for tau in points:
        s = beltrami_at(f, halfplane_to_disk(tau), p)
        if not s.converged:
            ok = False
            continue
        best = max(best, s.abs_mu)
        if stop_above is not None and best >= stop_above:
            break
    return best, ok


def beltrami_difference(f, g, points: Sequence[complex], p: DEParams = DEParams()) -> Tuple[float, bool]:
    best, ok = 0.0, True
    for tau in points:
        z = halfplane_to_disk(tau)
        a, b = beltrami_at(f, z, p), beltrami_at(g, z, p)
        if not (a.converged and b.converged):
            ok = False
            continue
        best = max(best, abs(a.mu - b.mu))
    return best, ok


# --- schedule ---------------------------------------------------------------

def build_schedule(max_stages: int, candidate_lambdas: Sequence, candidate_levels: Sequence[int],
                   p: DEParams = DEParams(), budgets: Optional[Sequence[float]] = None,
                   samples: Optional[Sequence] = None,
                   log: Optional[Callable[[str], None]] = None) -> Schedule:
    """Greedy stage selection: the first ``(lambda, N)`` meeting each stage budget.

    Candidates are tried lambda-major in the given order; levels must strictly
    increase from stage to stage.  A candidate whose composite has no
    non-Moebius witness on ``samples`` is rejected.
    """
    budgets = list(budgets) if budgets is not None else stage_budgets(max_stages)
    if len(budgets) < max_stages:
        raise ScheduleError("fewer budgets than stages")
    budgets = budgets[:max_stages]
    check_budgets(budgets)
    if max_stages and (not candidate_lambdas or not candidate_levels):
        raise ScheduleError("no candidates")
    samples = list(samples) if samples is not None else farey_vertices(6)
    entries: List[ScheduleEntry] = []
    rejected: List[dict] = []
    measured: Dict[Tuple[Fraction, int], Tuple[float, Optional[BoundaryPoint], int]] = {}
    last_level = 0
    for i, budget in enumerate(budgets, 1):
        chosen = None
        for lam in candidate_lambdas:
            lam = Fraction(lam)
            for N in candidate_levels:
                if N <= last_level:
                    continue
                key = (lam, N)
                if key not in measured:
                    A = diag(lam.numerator, lam.denominator)
                    G = level_subgroup(A, N)
                    maps = whitehead_maps(A, G)
                    _, wit = moebius_deviation(maps.h, samples)
                    norm = math.inf
                    if wit is not None:
                        norm, ok = sampled_norm(maps.h, standard_points(A, G), p, stop_above=budget)
                        if not ok:
                            norm = math.inf
                    measured[key] = (norm, wit, G.index)
                norm, wit, index = measured[key]
                if log:
                    log(f"stage {i}: lambda={_q(lam)} N={N} norm={norm:.4g} budget={budget}")
                if wit is None or norm >= budget:
                    rejected.append({"stage": i, "lambda": _q(lam), "level": N,
                                     "norm": None if math.isinf(norm) else round(norm, 9),
                                     "reason": "moebius" if wit is None else "budget"})
                    continue
                chosen = ScheduleEntry(diag(lam.numerator, lam.denominator), N, norm, budget, index, wit)
                break
            if chosen is not None:
                break
        if chosen is None:
            return Schedule(entries, budgets, f"no candidate meets budget {budget} at stage {i}", rejected)
        entries.append(chosen)
        last_level = chosen.level
    return Schedule(entries, budgets, None, rejected)


# --- composition --------------------------------------------------------------

@dataclass
class CuspVerdict:
    cusp: BoundaryPoint
    power: Optional[int]
    image: Optional[MoebiusMap]

    @property
    def ok(self) -> bool:
        return self.image is not None

    def to_dict(self) -> dict:
        return {"cusp": str(self.cusp), "power": self.power,
                "image": None if self.image is None else list(self.image.entries())}


@dataclass
class CompositionState:
    entries: List[ScheduleEntry]
    composed: object
    cauchy_trace: List[float]
    partials: List[object] = field(default_factory=list)
    verdicts: List[List[CuspVerdict]] = field(default_factory=list)

    @property
    def conjugation_ok(self) -> bool:
        return all(v.ok for vs in self.verdicts for v in vs)

    def trace_non_increasing(self, start: int = 1) -> bool:
        t = self.cauchy_trace[start - 1:]
        return all(b <= a for a, b in zip(t, t[1:]))


class _Identity:
    fit_points = (ZERO, INF, ONE)

    def __call__(self, v):
        return v

    def eval_vertex(self, v):
        return v

    def eval_angle(self, theta: float, delta: float = 0.0) -> float:
        return theta


IDENTITY_MAP = _Identity()


def _parabolic(y: BoundaryPoint) -> MoebiusMap:
    from .charmap import primitive_parabolic

    return primitive_parabolic(y)


def _fit_integral(h, x: MoebiusMap) -> Optional[MoebiusMap]:
    vs = h.fit_points
    try:
        d = three_point_map(*(h(v) for v in vs), *(h(apply(x, v)) for v in vs))
    except (OrientationError, ValueError):
        return None
    return d if in_psl2z(d) else None


_SLOPE_DEPTH = 2 ** 30


def _slope_step(h, x: MoebiusMap, y: BoundaryPoint) -> int:
    """Smallest ``d`` such that only multiples ``x^(k d)`` can be conjugated integrally.

    In cusp coordinates ``x`` translates by ``w`` and ``h`` is asymptotically
    ``u -> s u``; the conjugate of ``x^m`` translates by ``m w s``, which must
    be an integer.
    """
    from .charmap import _cusp_frame

    sig = _cusp_frame(y)
    w = abs((sig.inverse() @ x @ sig).b)
    sig2_inv = _cusp_frame(h(y)).inverse()

    def phi(u: int) -> Fraction:
        return apply(sig2_inv, h(apply(sig, BoundaryPoint(u)))).to_fraction()

    D = _SLOPE_DEPTH
    slope = (phi(2 * D) - phi(D)) / D
    return (Fraction(float(slope)).limit_denominator(10 ** 6) * w).denominator


def cusp_conjugation(stages: Sequence, y: BoundaryPoint, max_power: int = MAX_STAGE_POWER,
                     k: int = 20, seed: int = 0) -> CuspVerdict:
    """A power ``P^j`` of the parabolic at ``y`` that the composite conjugates into PSL(2,Z).

    Each stage takes the smallest power of the current parabolic that it
    sends to an integral map, searching multiples of the step forced by the
    stage's asymptotic slope at the cusp; the full composite is then checked
    exactly on ``k`` seeded vertices.
    """
    P = _parabolic(y)
    x, total, cusp = P, 1, y
    for h in stages:
        step = _slope_step(h, x, cusp)
        for j in range(1, max_power + 1):
            m = j * step
            d = _fit_integral(h, x ** m)
            if d is not None and conjugate_by(h, x ** m, k=k, seed=seed) == d:
                x, total, cusp = d, total * m, h(cusp)
                break
        else:
            return CuspVerdict(y, None, None)
    H = compose(*reversed(stages)) if len(stages) > 1 else stages[0]
    d = conjugate_by(H, P ** total, k=k, seed=seed)
    if d is None or not in_psl2z(d):
        return CuspVerdict(y, total, None)
    return CuspVerdict(y, total, d)


def compose_and_trace(entries: Sequence[ScheduleEntry], seed: int = 0, depth: int = GRID_DEPTH,
                      stride: int = 1, cusps: Sequence[BoundaryPoint] = CHECK_CUSPS,
                      log: Optional[Callable[[str], None]] = None) -> CompositionState:
    """Partial compositions ``h_i o ... o h_1`` with their Cauchy trace and cusp verdicts."""
    validate(entries)
    quads = standard_quads(depth, seed=seed, stride=stride)
    stages, partials, trace, verdicts = [], [IDENTITY_MAP], [], []
    prev = IDENTITY_MAP
    for i, e in enumerate(entries, 1):
        try:
            G = level_subgroup(e.A, e.level)
            stages.append(whitehead_maps(e.A, G).h)
            cur = compose(*reversed(stages)) if len(stages) > 1 else stages[0]
            trace.append(teich_proxy_distance(prev, cur, quads))
            verdicts.append([cusp_conjugation(stages, y) for y in cusps])
        except (ScheduleError, StageFailure):
            raise
        except Exception as exc:  # surfaced with the stage index
            raise StageFailure(i, exc) from exc
        if log:
            log(f"stage {i}: trace={trace[-1]:.6f} conj={[v.power for v in verdicts[-1]]}")
        partials.append(cur)
        prev = cur
    return CompositionState(list(entries), prev, trace, partials, verdicts)


def report(schedule: Schedule, state: Optional[CompositionState]) -> dict:
    out = {
        "budgets": [_q(Fraction(b)) for b in schedule.budgets],
        "complete": schedule.complete,
        "shortfall": schedule.shortfall,
        "schedule": [e.to_dict() for e in schedule.entries],
        "rejected": schedule.rejected,
    }
    if state is not None:
        out["cauchy_trace"] = [round(t, 9) for t in state.cauchy_trace]
        out["trace_non_increasing"] = state.trace_non_increasing()
        out["conjugation"] = [[v.to_dict() for v in vs] for vs in state.verdicts]
        out["conjugation_ok"] = state.conjugation_ok
        out["norm_sum"] = round(sum(e.measured_norm for e in schedule.entries), 9)
    return out


def report_json(schedule: Schedule, state: Optional[CompositionState]) -> str:
    return json.dumps(report(schedule, state), sort_keys=True, indent=2) + "\n"
