"""Distortion measures for circle maps evaluated on vertices.

All decisions (equality, maxima of exact ratios) use rationals; logarithms
are reported as floats.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

from .moebius import INF, ONE, ZERO, BoundaryPoint, bp, cross_ratio

Evaluator = Callable[[BoundaryPoint], BoundaryPoint]
Quad = Tuple[BoundaryPoint, BoundaryPoint, BoundaryPoint, BoundaryPoint]

GRID_DEPTH = 8
GRID_RADIUS = 4
GRID_STEPS = tuple(Fraction(1, 2 ** k) for k in range(7))
RANDOM_QUADS = 200


class DegenerateImage(ArithmeticError):
    """An evaluator sent distinct points to a repeated point."""


@dataclass
class QSReport:
    m_estimate: Fraction
    cr_distortion: float
    seed: int
    grid: dict = field(default_factory=dict)

    def to_json(self) -> str:
        d = {"m_estimate": _fmt_q(self.m_estimate), "cr_distortion": round(self.cr_distortion, 12),
             "seed": self.seed, "grid": self.grid}
        return json.dumps(d, sort_keys=True)


def _fmt_q(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def farey_vertices(depth: int = GRID_DEPTH, radius: Optional[int] = GRID_RADIUS) -> List[BoundaryPoint]:
    """Vertices of the depth-``depth`` Farey window, sorted, optionally within [-radius, radius]."""
    from .tessellation import FareyImage, enumerate_vertices

    pts = enumerate_vertices(FareyImage(), depth)
    if radius is not None:
        pts = [p for p in pts if not p.is_inf and abs(p.to_fraction()) <= radius]
    return sorted(pts, key=lambda p: p.sort_key())


def standard_grid(depth: int = GRID_DEPTH, steps: Sequence[Fraction] = GRID_STEPS,
                  stride: int = 1) -> List[Tuple[Fraction, Fraction]]:
    """Pairs ``(x, t)`` over grid vertices in [-4, 4] and dyadic scales."""
    xs = farey_vertices(depth)[::stride]
    return [(x.to_fraction(), t) for x in xs for t in steps]


def standard_quads(depth: int = GRID_DEPTH, n_random: int = RANDOM_QUADS, seed: int = 0,
                   stride: int = 1) -> List[Quad]:
    """Consecutive 4-tuples of grid vertices plus seeded random increasing 4-tuples."""
    pts = farey_vertices(depth, radius=None)[::stride]
    quads = [tuple(pts[i:i + 4]) for i in range(len(pts) - 3)]
    rng = random.Random(seed)
    for _ in range(n_random):
        quads.append(tuple(sorted(rng.sample(pts, 4), key=lambda p: p.sort_key())))
    return quads  # type: ignore[return-value]


def _val(h: Evaluator, x) -> Fraction:
    v = h(bp(x))
    if v.is_inf:
        raise DegenerateImage(f"{x} was sent to infinity")
    return v.to_fraction()


def symmetric_ratio(h: Evaluator, x: Fraction, t: Fraction) -> Fraction:
    hx = _val(h, x)
    left, right = hx - _val(h, x - t), _val(h, x + t) - hx
    if left <= 0 or right <= 0:
        raise DegenerateImage(f"order not preserved near {x}")
    r = right / left
    return max(r, 1 / r)


def qs_constant_estimate(h: Evaluator, grid: Iterable[Tuple[Fraction, Fraction]]) -> Fraction:
    """Max over the grid of the symmetric ratio (or its inverse); exact."""
    best = Fraction(1)
    for x, t in grid:
        best = max(best, symmetric_ratio(h, Fraction(x), Fraction(t)))
    return best


def _log_cr(q: Sequence[BoundaryPoint]) -> float:
    c = cross_ratio(*q)
    return math.log(abs(c.numerator)) - math.log(c.denominator)


def _image(h: Evaluator, q: Quad) -> Quad:
    img = tuple(h(p) for p in q)
    if len(set(img)) < 4:
        raise DegenerateImage(f"{q} collapsed to {img}")
    return img  # type: ignore[return-value]


def crossratio_distortion(h: Evaluator, quads: Iterable[Quad]) -> float:
    """Max ``|log cr(hQ) - log cr(Q)|``; exactly 0.0 when all cross-ratios agree."""
    return teich_proxy_distance(lambda v: v, h, quads)


def teich_proxy_distance(h1: Evaluator, h2: Evaluator, quads: Iterable[Quad]) -> float:
    best = 0.0
    for q in quads:
        q1, q2 = _image(h1, q), _image(h2, q)
        c1, c2 = cross_ratio(*q1), cross_ratio(*q2)
        if c1 != c2:
            best = max(best, abs(_log_cr(q1) - _log_cr(q2)))
    return best


def moebius_deviation(h: Evaluator, samples: Iterable) -> Tuple[float, Optional[BoundaryPoint]]:
    """Compare ``h`` with ``z -> h(1) z`` (the Moebius map through 0, 1, oo).

    Returns the max log-ratio over finite nonzero samples and the first sample
    where the two differ exactly.
    """
    scale = _val(h, ONE)
    witness = None
    dev = 0.0
    for x in samples:
        x = bp(x)
        if x in (ZERO, INF):
            continue
        fx = x.to_fraction()
        hx = _val(h, x)
        if hx != scale * fx:
            if witness is None:
                witness = x
            dev = max(dev, abs(math.log(hx / (scale * fx))))
    return dev, witness


def qs_report(h: Evaluator, seed: int = 0, depth: int = GRID_DEPTH, stride: int = 1) -> QSReport:
    grid = standard_grid(depth, stride=stride)
    quads = standard_quads(depth, seed=seed, stride=stride)
    return QSReport(qs_constant_estimate(h, grid), crossratio_distortion(h, quads), seed,
                    {"depth": depth, "radius": GRID_RADIUS, "steps": len(GRID_STEPS),
                     "stride": stride, "quads": len(quads)})
