"""Characteristic maps between tessellations.

A :class:`CharMap` sends the base triangle of the source (the triangle to the
left of its distinguished oriented edge) to the base triangle of the target
and is extended triangle by triangle.  Vertices are evaluated exactly by
walking the dual tree; other boundary points get nested vertex intervals.
"""
from __future__ import annotations

import cmath
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from .modgroup import Subgroup
from .moebius import (
    INF, ONE, ZERO, BoundaryPoint, Edge, MoebiusMap, OrientationError, OrientedEdge,
    angle_to_real, apply, arc_width, between, boundary_angle, bp, diag, three_point_map,
    to_disk,
)
from .tessellation import L1, FareyImage, Moved, Tessellation


class WalkBoundExceeded(ValueError):
    """The walk did not reach the requested vertex: it is not a vertex."""


class RefinementBoundExceeded(RuntimeError):
    pass


def _cf_sum(x: BoundaryPoint) -> int:
    p, q = x.num, x.den
    total = 0
    while q:
        a, r = divmod(p, q)
        total += abs(a)
        p, q = q, r
    return total


def walk_bound(v: BoundaryPoint, base: Optional[FareyImage] = None) -> int:
    """Crossing budget for reaching ``v``.

    The bit-length term alone undercounts parabolic runs; the sum of partial
    quotients of the pulled-back point covers them.
    """
    u = base.pull(v) if base is not None else v
    bits = abs(v.num).bit_length() + v.den.bit_length()
    return 64 + 4 * bits + 2 * _cf_sum(u)


_JUMP_AFTER = 12


class CharMap:
    """Characteristic map ``source -> target`` matching distinguished edges."""

    def __init__(self, source: Tessellation, target: Tessellation):
        self.source = source
        self.target = target
        s, t = source.base_triangle(), target.base_triangle()
        self._base = (s.a, s.b, s.c)
        self._base_img = (t.a, t.b, t.c)
        self._vals: Dict[BoundaryPoint, BoundaryPoint] = dict(zip(self._base, self._base_img))
        # oriented source side -> (third vertex, its image); shared by all walks
        self._steps: Dict[Tuple[BoundaryPoint, BoundaryPoint], Tuple[BoundaryPoint, BoundaryPoint]] = {}
        self._syms: Dict[Tuple[str, BoundaryPoint], Optional[MoebiusMap]] = {}
        self._periods: Dict[Tuple[str, BoundaryPoint, str], Optional[Tuple[MoebiusMap, int]]] = {}

    @property
    def fit_points(self) -> Tuple[BoundaryPoint, BoundaryPoint, BoundaryPoint]:
        return self._base

    def _start(self, v: BoundaryPoint):
        a, b, c = self._base
        a2, b2, c2 = self._base_img
        # base triangle has c in the arc a->b, so its sides are a->c, c->b, b->a
        if between(a, v, c):
            return a, c, a2, c2
        if between(c, v, b):
            return c, b, c2, b2
        return b, a, b2, a2

    def _step(self, x, y, x2, y2):
        key = (x, y)
        hit = self._steps.get(key)
        if hit is None:
            hit = (self.source.third_vertex(x, y), self.target.third_vertex(x2, y2))
            self._steps[key] = hit
        return hit

    def __call__(self, v) -> BoundaryPoint:
        return self.eval_vertex(v)

    def eval_vertex(self, v) -> BoundaryPoint:
        v = bp(v)
        hit = self._vals.get(v)
        if hit is not None:
            return hit
        bound = walk_bound(v, self.source.farey_base)
        r = self._walk(v, bound, None)
        if r is None:
            raise WalkBoundExceeded(f"{v} not reached within {bound} crossings")
        return r[2]

    def _walk(self, v, limit: int, delta: Optional[float]):
        x, y, x2, y2 = self._start(v)
        run_side, run = None, 0
        for _ in range(limit):
            if delta is not None and arc_width(x2, y2) < delta:
                return x, y, x2, y2
            z, z2 = self._step(x, y, x2, y2)
            if z == v:
                self._vals[v] = z2
                return v, v, z2, z2
            if between(x, v, z):
                y, y2 = z, z2
                side = "x"
            else:
                x, x2 = z, z2
                side = "y"
            run = run + 1 if side == run_side else 1
            run_side = side
            if run >= _JUMP_AFTER:
                j = self._jump(v, x, y, x2, y2, side)
                run = 0
                if j is not None:
                    x, y, x2, y2 = j
                    if x == v:
                        self._vals[v] = x2
                        return v, v, x2, x2
        return None

    # Long runs of crossings rotate around one cusp.  Fans are periodic under
    # the parabolic symmetry at the cusp, so whole periods can be skipped.
    def _symmetry(self, which: str, p: BoundaryPoint) -> Optional[MoebiusMap]:
        key = (which, p)
        if key not in self._syms:
            self._syms[key] = fan_symmetry(self.source if which == "s" else self.target, p)
        return self._syms[key]

    def _period(self, which, p, q, side):
        # the fan count between q and P(q) does not depend on q
        key = (which, p, side)
        if key not in self._periods:
            self._periods[key] = self._count_period(which, p, q, side)
        return self._periods[key]

    def _count_period(self, which, p, q, side):
        P = self._symmetry(which, p)
        if P is None:
            return None
        t = self.source if which == "s" else self.target
        if side == "y":
            if not between(q, apply(P, q), p):
                P = P.inverse()
            nxt = lambda r: t.third_vertex(r, p)
        else:
            if not between(p, apply(P, q), q):
                P = P.inverse()
            nxt = lambda r: t.third_vertex(p, r)
        goal, r = apply(P, q), q
        for k in range(1, 100_000):
            r = nxt(r)
            if r == goal:
                return P, k
        return None

    def _jump(self, v, x, y, x2, y2, side):
        if side == "y":
            p, q, p2, q2 = y, x, y2, x2
        else:
            p, q, p2, q2 = x, y, x2, y2
        ps, pt = self._period("s", p, q, side), self._period("t", p2, q2, side)
        if ps is None or pt is None:
            return None
        L = math.lcm(ps[1], pt[1])
        Ms, Mt = ps[0] ** (L // ps[1]), pt[0] ** (L // pt[1])

        def ok(n):
            c = apply(Ms ** n, q)
            return c == v or (between(c, v, p) if side == "y" else between(p, v, c))

        if not ok(1):
            return None
        hi = 2
        while ok(hi):
            hi *= 2
        lo = hi // 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(mid):
                lo = mid
            else:
                hi = mid
        c, c2 = apply(Ms ** lo, q), apply(Mt ** lo, q2)
        if c == v:
            return v, v, c2, c2
        return (c, p, c2, p2) if side == "y" else (p, c, p2, c2)

    def _refine(self, x, delta: float, max_steps: int):
        if delta <= 0:
            raise ValueError("delta must be positive")
        if isinstance(x, float):
            v = INF if math.isinf(x) else bp(Fraction(x))
        else:
            v = bp(x)
        hit = self._vals.get(v)
        if hit is not None:
            return v, v, hit, hit
        r = self._walk(v, max_steps, delta)
        if r is None:
            raise RefinementBoundExceeded(f"width {delta} not reached near {x}")
        return r

    def eval_interval(self, x, delta: float, max_steps: int = 200_000
                      ) -> Tuple[BoundaryPoint, BoundaryPoint]:
        """Target vertex arc ``(lo, hi)`` of angular width < delta containing h(x).

        ``x`` may be a float; it is compared exactly as a real number.  For a
        vertex input reached during refinement the interval is degenerate.
        """
        _, _, lo, hi = self._refine(x, delta, max_steps)
        return lo, hi

    def eval_angle(self, theta: float, delta: float, max_steps: int = 200_000) -> float:
        """Boundary map in disk angles.

        Inside the final vertex interval the map is replaced by the Moebius
        map through its two ends and the next third vertex.
        """
        x0, y0, lo, hi = self._refine(angle_to_real(theta), delta, max_steps)
        if lo == hi:
            return boundary_angle(lo)
        z, z2 = self._step(x0, y0, lo, hi)
        w = _circle_interp(cmath.exp(1j * theta), (to_disk(x0), to_disk(z), to_disk(y0)),
                           (to_disk(lo), to_disk(z2), to_disk(hi)))
        if w is None:
            return boundary_angle(lo) + arc_width(lo, hi) / 2
        t = math.atan2(w.imag, w.real)
        return t + 2 * math.pi if t <= 0 else t

    def inverse(self) -> "CharMap":
        return CharMap(self.target, self.source)

    def __repr__(self):
        return f"CharMap({self.source!r} -> {self.target!r})"


def characteristic_map(t1: Tessellation, t2: Tessellation) -> CharMap:
    return CharMap(t1, t2)


def eval_vertex(h, v) -> BoundaryPoint:
    return h.eval_vertex(v)


def eval_interval(h: CharMap, x, delta: float):
    return h.eval_interval(x, delta)


class Composed:
    """``outer o inner`` for vertex evaluators."""

    def __init__(self, outer, inner):
        self.outer = outer
        self.inner = inner

    @property
    def fit_points(self):
        return self.inner.fit_points

    def __call__(self, v) -> BoundaryPoint:
        return self.eval_vertex(v)

    def eval_vertex(self, v) -> BoundaryPoint:
        return self.outer.eval_vertex(self.inner.eval_vertex(v))

    def eval_angle(self, theta: float, delta: float) -> float:
        return self.outer.eval_angle(self.inner.eval_angle(theta, delta), delta)

    def __repr__(self):
        return f"Composed({self.outer!r}, {self.inner!r})"


class MoebiusEval:
    """A Moebius map viewed as a boundary evaluator."""

    fit_points = (ZERO, INF, ONE)

    def __init__(self, m: MoebiusMap):
        self.m = m

    def __call__(self, v) -> BoundaryPoint:
        return apply(self.m, v)

    def eval_vertex(self, v) -> BoundaryPoint:
        return apply(self.m, v)

    def eval_angle(self, theta: float, delta: float = 0.0) -> float:
        return boundary_angle(_apply_real(self.m, angle_to_real(theta)))


def _circle_interp(u: complex, src, dst) -> Optional[complex]:
    """Image of ``u`` under the Moebius map taking the triple ``src`` to ``dst``."""
    a, c, b = src
    a2, c2, b2 = dst
    try:
        k = (u - a) * (c - b) / ((u - b) * (c - a)) * (c2 - a2) / (c2 - b2)
        return (a2 - k * b2) / (1 - k)
    except ZeroDivisionError:
        return None


def _apply_real(m: MoebiusMap, x: float) -> float:
    a, b, c, d = m.entries()
    if math.isinf(x):
        return math.inf if c == 0 else a / c
    den = c * x + d
    return math.inf if den == 0 else (a * x + b) / den


def compose(*maps):
    """Right-to-left composition: ``compose(f, g)(v) == f(g(v))``."""
    out = maps[-1]
    for m in reversed(maps[:-1]):
        out = Composed(m, out)
    return out


def random_vertices(k: int, seed: int = 0, height: int = 60) -> List[BoundaryPoint]:
    """Deterministic sample of rational vertices."""
    rng = random.Random(seed)
    out = []
    while len(out) < k:
        q = rng.randint(1, height)
        p = rng.randint(-3 * height, 3 * height)
        if math.gcd(p, q) == 1:
            out.append(BoundaryPoint(p, q))
    return out


def conjugate_by(h, gamma: MoebiusMap, k: int = 20, seed: int = 0) -> Optional[MoebiusMap]:
    """The Moebius ``delta`` with ``h o gamma == delta o h``, if one exists.

    Fitted on the base triangle and confirmed exactly on ``k`` seeded vertices.
    """
    vs = h.fit_points
    try:
        delta = three_point_map(*(h(v) for v in vs), *(h(apply(gamma, v)) for v in vs))
    except (OrientationError, ValueError):
        return None
    for v in random_vertices(k, seed):
        if h(apply(gamma, v)) != apply(delta, h(v)):
            return None
    return delta


@dataclass
class IntegralConjugation:
    """Generators of the part of ``G`` on which ``g o f^-1`` stays integral.

    ``pairs`` holds ``(delta, eps)`` with ``delta = f gamma f^-1`` on the
    source side and ``eps = g gamma g^-1`` on the target side, for
    ``gamma`` running over Schreier generators of that finite-index part.
    """

    pairs: List[Tuple[MoebiusMap, MoebiusMap]]
    index: int
    word_gens: List[MoebiusMap]


def integral_conjugation(f: CharMap, g: CharMap, G: Subgroup, A: MoebiusMap
                         ) -> IntegralConjugation:
    from .modgroup import commensurator_subgroup

    gens = G.schreier_generators()
    fs, gs = [], []
    for s in gens:
        df, dg = conjugate_by(f, s), conjugate_by(g, s)
        if df is None or dg is None:
            raise ValueError(f"{s!r} is not conjugated to a Moebius map")
        fs.append(df)
        gs.append(dg)
    Ainv = A.inverse()
    C = commensurator_subgroup(Ainv)
    psis = [Ainv @ e @ A for e in gs]
    from .moebius import IDENTITY, in_psl2z
    if not all(in_psl2z(p) for p in psis):
        raise ValueError("target conjugates do not preserve the A-image")
    reps = {0: (IDENTITY, IDENTITY, IDENTITY)}
    order = [0]
    pairs, words, seen = [], [], set()
    i = 0
    while i < len(order):
        c = order[i]
        i += 1
        w, d, e = reps[c]
        for s, df, dg, p in zip(gens, fs, gs, psis):
            c2 = C.coset_of(p, start=c)
            nw, nd, ne = w @ s, d @ df, e @ dg
            if c2 not in reps:
                reps[c2] = (nw, nd, ne)
                order.append(c2)
                continue
            rw, rd, re_ = reps[c2]
            sw = nw @ rw.inverse()
            if sw.is_identity() or sw in seen or sw.inverse() in seen:
                continue
            seen.add(sw)
            words.append(sw)
            pairs.append((nd @ rd.inverse(), ne @ re_.inverse()))
    return IntegralConjugation(pairs, len(order), words)


# --- piecewise Moebius maps -----------------------------------------------

def _arc_sample(a: BoundaryPoint, b: BoundaryPoint) -> BoundaryPoint:
    """Some point of the open arc a -> b."""
    if a.is_inf:
        return bp(b.to_fraction() - 1)
    if b.is_inf:
        return bp(a.to_fraction() + 1)
    fa, fb = a.to_fraction(), b.to_fraction()
    return bp((fa + fb) / 2) if fa < fb else bp(fa + 1)


def _cyclic_sorted(points) -> List[BoundaryPoint]:
    return sorted(set(points), key=lambda p: p.sort_key())


PointLikeT = Union[BoundaryPoint, int, Fraction, str]


class PiecewiseMoebius:
    """Circle map given by Moebius pieces on consecutive closed arcs.

    ``pieces[i] = (start, end, m)`` with ``end`` of one piece equal to the
    ``start`` of the next, cyclically.
    """

    fit_points = (ZERO, INF, ONE)

    def __init__(self, pieces: Sequence[Tuple[PointLikeT, PointLikeT, MoebiusMap]]):
        self.pieces = [(bp(a), bp(b), m) for a, b, m in pieces]
        n = len(self.pieces)
        for i in range(n):
            if self.pieces[i][1] != self.pieces[(i + 1) % n][0]:
                raise ValueError("pieces do not tile the circle")

    @property
    def breakpoints(self) -> List[BoundaryPoint]:
        return [p[0] for p in self.pieces]

    def piece_at(self, x) -> MoebiusMap:
        x = bp(x)
        if len(self.pieces) == 1:
            return self.pieces[0][2]
        for a, b, m in self.pieces:
            if x == a or between(a, x, b):
                return m
        raise AssertionError("pieces do not cover the circle")

    def __call__(self, x) -> BoundaryPoint:
        return self.eval_vertex(x)

    def eval_vertex(self, x) -> BoundaryPoint:
        x = bp(x)
        return apply(self.piece_at(x), x)

    def eval_angle(self, theta: float, delta: float = 0.0) -> float:
        x = angle_to_real(theta)
        v = INF if math.isinf(x) else bp(Fraction(x))
        return boundary_angle(_apply_real(self.piece_at(v), x))

    def is_continuous(self) -> bool:
        n = len(self.pieces)
        return all(
            apply(self.pieces[i][2], self.pieces[i][1])
            == apply(self.pieces[(i + 1) % n][2], self.pieces[(i + 1) % n][0])
            for i in range(n))

    def inverse(self) -> "PiecewiseMoebius":
        return PiecewiseMoebius([(apply(m, a), apply(m, b), m.inverse()) for a, b, m in self.pieces])

    def compose(self, inner: "PiecewiseMoebius") -> "PiecewiseMoebius":
        """``self o inner``."""
        inv = inner.inverse()
        cuts = _cyclic_sorted(inner.breakpoints + [inv(b) for b in self.breakpoints])
        pieces = []
        for i, a in enumerate(cuts):
            b = cuts[(i + 1) % len(cuts)]
            x = _arc_sample(a, b)
            m = self.piece_at(inner(x)) @ inner.piece_at(x)
            if pieces and pieces[-1][2] == m:
                pieces[-1] = (pieces[-1][0], b, m)
            else:
                pieces.append((a, b, m))
        if len(pieces) > 1 and pieces[0][2] == pieces[-1][2]:
            first = pieces.pop(0)
            pieces[-1] = (pieces[-1][0], first[1], first[2])
        return PiecewiseMoebius(pieces)

    def __repr__(self):
        body = ", ".join(f"[{a}, {b}]: {m.rows()}" for a, b, m in self.pieces)
        return f"PiecewiseMoebius({body})"


def single_flip_tessellation(A: MoebiusMap = None) -> Moved:
    """``A(F)`` with the single edge ``A(l1)`` flipped."""
    from .moebius import IDENTITY

    base = FareyImage(A if A is not None else IDENTITY)
    return Moved(base, None, Edge(base.push(L1.tail), base.push(L1.head)))


def piecewise_single_flip(A: MoebiusMap = None) -> PiecewiseMoebius:
    """Characteristic map from ``A(F)`` flipped at ``A(l1)`` back onto ``A(F)``.

    With ``A`` the identity the inverse map is the identity on the negative
    axis and changes pieces at 0, 1/2, 1 and oo; in general all pieces are
    conjugated by ``A``.
    """
    from .moebius import IDENTITY

    A = A if A is not None else IDENTITY
    inv = PiecewiseMoebius([
        (INF, ZERO, IDENTITY),
        (ZERO, Fraction(1, 2), MoebiusMap(1, 0, -1, 1)),
        (Fraction(1, 2), ONE, MoebiusMap(3, -1, 1, 0)),
        (ONE, INF, MoebiusMap(1, 1, 0, 1)),
    ])
    f = inv.inverse()
    Ainv = A.inverse()
    return PiecewiseMoebius([(apply(A, a), apply(A, b), A @ m @ Ainv) for a, b, m in f.pieces])


def single_flip_composition(A: MoebiusMap) -> PiecewiseMoebius:
    """``g_{A(l1)} o f_{l1}^-1``: identity off the flips, never Moebius for A != id."""
    return piecewise_single_flip(A).compose(piecewise_single_flip().inverse())


@dataclass
class WhiteheadMaps:
    """The maps attached to a translation ``A`` and a group ``G``.

    ``f_id`` and ``g_A`` send the moved tessellations back onto ``F`` and
    ``A(F)``; ``h = g_A o f_id^-1``.
    """

    A: MoebiusMap
    G: Optional[Subgroup]
    f_id: CharMap
    g_A: CharMap
    h: Composed


def whitehead_maps(A: MoebiusMap, G: Optional[Subgroup]) -> WhiteheadMaps:
    F = FareyImage()
    FA = FareyImage(A)
    f = CharMap(Moved(F, G, Edge(L1.tail, L1.head)), F)
    g = CharMap(Moved(FA, G, Edge(FA.push(L1.tail), FA.push(L1.head))), FA)
    return WhiteheadMaps(A, G, f, g, compose(g, f.inverse()))


# --- cusps ------------------------------------------------------------------

@dataclass(frozen=True)
class CuspData:
    """Combinatorics of a tessellation at a cusp ``y``.

    ``gen`` is the primitive parabolic of the symmetry group fixing ``y``,
    oriented to rotate edges at ``y`` in the walk direction; ``k`` counts edges
    at ``y`` from ``ref`` (inclusive) to ``gen(ref)`` (exclusive).  ``p`` is the
    number of base edges in the same span, so ``k = p + a`` with ``a`` the net
    change made by a move.
    """

    y: BoundaryPoint
    ref: BoundaryPoint
    gen: MoebiusMap
    k: int
    p: int

    @property
    def a(self) -> int:
        return self.k - self.p


def _cusp_frame(y: BoundaryPoint) -> MoebiusMap:
    from .modgroup import _ext_gcd

    if y.is_inf:
        from .moebius import IDENTITY
        return IDENTITY
    g, s, t = _ext_gcd(y.num, y.den)
    # [[num, -t], [den, s]] has det num*s + den*t = 1 and sends oo -> y
    return MoebiusMap._unchecked(y.num, -t, y.den, s)


def primitive_parabolic(y, A: MoebiusMap = None) -> MoebiusMap:
    """Generator of the stabilizer of ``y`` in ``A PSL(2,Z) A^-1`` (translation +1 at oo)."""
    from .moebius import IDENTITY, T

    A = A if A is not None else IDENTITY
    u = apply(A.inverse(), bp(y))
    sig = _cusp_frame(u)
    return A @ sig @ T @ sig.inverse() @ A.inverse()


def fan_symmetry(t: Tessellation, y: BoundaryPoint) -> Optional[MoebiusMap]:
    """A parabolic symmetry of ``t`` fixing the vertex ``y``, if one is known."""
    if isinstance(t, FareyImage):
        return primitive_parabolic(y, t.A)
    if isinstance(t, Moved) and t.G is not None:
        from .moebius import T
        sig = _cusp_frame(bp(y))
        w = t.G.t_cycle_length(t.G.coset_of(sig))
        return sig @ (T ** w) @ sig.inverse()
    return None


def _rotate(t: Tessellation, y: BoundaryPoint, v: BoundaryPoint) -> BoundaryPoint:
    return t.third_vertex(v, y)


def _count_edges(t: Tessellation, y, v0, v1, limit: int = 100_000) -> int:
    v, n = v0, 0
    while v != v1:
        v = _rotate(t, y, v)
        n += 1
        if n > limit:
            raise RuntimeError("cusp rotation did not close")
    return n


def _reference_vertex(t: Tessellation, y: BoundaryPoint) -> BoundaryPoint:
    base = t.farey_base
    sig = base.A @ _cusp_frame(base.pull(y))
    for n in (0, 1):
        v = apply(sig, n)
        if t.is_edge(Edge(y, v)):
            return v
    raise RuntimeError("two consecutive edges at a cusp were both removed")


def cusp_data(t: Tessellation, y, G: Optional[Subgroup] = None) -> CuspData:
    """Cusp combinatorics of ``t`` at ``y`` for the symmetry group ``G``.

    Without ``G`` the group is the full symmetry group of a Farey image, or the
    moving group of a moved tessellation.
    """
    y = bp(y)
    base = t.farey_base
    if G is None and isinstance(t, Moved):
        G = t.G
        if G is None:
            raise ValueError("a single flip has no parabolic symmetries")
    ref = _reference_vertex(t, y)
    if G is None:
        gen = primitive_parabolic(y, base.A)
    else:
        sig = _cusp_frame(y)
        from .moebius import T
        w = G.t_cycle_length(G.coset_of(sig))
        gen = sig @ (T ** w) @ sig.inverse()
    if not between(ref, apply(gen, ref), y):
        gen = gen.inverse()
    target = apply(gen, ref)
    return CuspData(y, ref, gen, _count_edges(t, y, ref, target), _count_edges(base, y, ref, target))


def _normalizer(y: BoundaryPoint, ref: BoundaryPoint) -> MoebiusMap:
    P = primitive_parabolic(y)
    if not between(ref, apply(P, ref), y):
        P = P.inverse()
    return three_point_map(y, ref, apply(P, ref), INF, ZERO, ONE)


def cusp_slope_empirical(h: CharMap, y, depth: int = 12) -> float:
    """Difference-quotient slope of ``h`` at cusp ``y`` after normalization.

    Both sides are normalized by the integral primitive parabolic at the cusp
    (cusp -> oo, reference edge -> (0, oo), one parabolic step -> (1, oo)).
    """
    y = bp(y)
    ref = _reference_vertex(h.source, y)
    M = _normalizer(y, ref)
    yy, ref2 = h(y), h(ref)
    N = _normalizer(yy, ref2)
    P = primitive_parabolic(y)
    if not between(ref, apply(P, ref), y):
        P = P.inverse()
    v = apply(P ** depth, ref)
    assert apply(M, v) == bp(depth)
    return float(apply(N, h(v)).to_fraction()) / depth


def _density(t: Tessellation, y: BoundaryPoint, normalizer: MoebiusMap) -> Fraction:
    cd = cusp_data(t, y)
    length = apply(normalizer, apply(cd.gen, cd.ref)).to_fraction() - apply(normalizer, cd.ref).to_fraction()
    return Fraction(cd.k) / length


def cusp_slope_predicted(h: CharMap, y) -> Fraction:
    """Combinatorial slope: ratio of edge densities at the cusp and its image."""
    y = bp(y)
    ref = _reference_vertex(h.source, y)
    M = _normalizer(y, ref)
    N = _normalizer(h(y), h(ref))
    return _density(h.source, y, M) / _density(h.target, h(y), N)
