"""Lazily evaluated invariant tessellations.

Nothing is materialized: a tessellation answers ``is_edge`` and
``third_vertex`` queries by local computation.  Two variants exist, the image
``A(F)`` of the Farey tessellation and a Whitehead-moved image in which one
orbit ``G{e}`` of edges has been replaced by the opposite diagonals of their
quadrilaterals.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from .modgroup import Subgroup, _edge_frame, conjugate_subgroup, edge_in_orbit
from .moebius import (
    IDENTITY, INF, ONE, S, ZERO, BoundaryPoint, Edge, MoebiusMap, OrientedEdge, PointLike,
    apply, between, bp, cyclic_order, in_psl2z,
)

L0 = OrientedEdge(ZERO, INF)
L1 = OrientedEdge(INF, ONE)


class NotAnEdge(ValueError):
    pass


class InvalidMove(ValueError):
    pass


def farey_is_edge(e: Edge) -> bool:
    return abs(e.x.num * e.y.den - e.x.den * e.y.num) == 1


@dataclass(frozen=True)
class Triangle:
    """Ideal triangle with vertices in counterclockwise order."""

    a: BoundaryPoint
    b: BoundaryPoint
    c: BoundaryPoint

    @property
    def vertices(self) -> Tuple[BoundaryPoint, BoundaryPoint, BoundaryPoint]:
        return self.a, self.b, self.c

    def edges(self) -> Tuple[Edge, Edge, Edge]:
        return Edge(self.a, self.b), Edge(self.b, self.c), Edge(self.c, self.a)

    def key(self) -> frozenset:
        return frozenset(self.vertices)


class Tessellation:
    distinguished: OrientedEdge

    def is_edge(self, e: Edge) -> bool:
        raise NotImplementedError

    def third_vertex(self, a: BoundaryPoint, b: BoundaryPoint) -> BoundaryPoint:
        """Vertex ``v`` in the open arc from a to b with ``(a, v, b)`` a triangle."""
        raise NotImplementedError

    def base_triangle(self) -> Triangle:
        a, b = self.distinguished.tail, self.distinguished.head
        return Triangle(a, self.third_vertex(a, b), b)

    @property
    def farey_base(self) -> "FareyImage":
        raise NotImplementedError


class FareyImage(Tessellation):
    """``A(F)`` with distinguished oriented edge ``A(l0)``."""

    def __init__(self, A: MoebiusMap = IDENTITY):
        self.A = A
        self.Ainv = A.inverse()
        self._trivial = A.is_identity()
        self.distinguished = OrientedEdge(apply(A, ZERO), apply(A, INF))

    @property
    def farey_base(self) -> "FareyImage":
        return self

    def pull(self, x: BoundaryPoint) -> BoundaryPoint:
        return x if self._trivial else apply(self.Ainv, x)

    def push(self, x: BoundaryPoint) -> BoundaryPoint:
        return x if self._trivial else apply(self.A, x)

    def is_edge(self, e: Edge) -> bool:
        return farey_is_edge(Edge(self.pull(e.x), self.pull(e.y)))

    def third_vertex(self, a, b) -> BoundaryPoint:
        if not isinstance(a, BoundaryPoint) or not isinstance(b, BoundaryPoint):
            a, b = bp(a), bp(b)
        pa, pb = self.pull(a), self.pull(b)
        det = pa.num * pb.den - pa.den * pb.num
        if abs(det) != 1:
            raise NotAnEdge(f"({a}, {b}) is not an edge")
        v1 = BoundaryPoint(pa.num + pb.num, pa.den + pb.den)
        if not between(pa, v1, pb):
            v1 = BoundaryPoint(pa.num - pb.num, pa.den - pb.den)
        return self.push(v1)

    def is_symmetry(self, m: MoebiusMap) -> bool:
        return in_psl2z(self.Ainv @ m @ self.A)

    def __repr__(self):
        return f"FareyImage(A={self.A.rows()})"


def quadrilateral(t: Tessellation, e: Edge) -> Tuple[BoundaryPoint, BoundaryPoint]:
    """The two third vertices of ``e``: (arc x->y side, arc y->x side)."""
    return t.third_vertex(e.x, e.y), t.third_vertex(e.y, e.x)


class Moved(Tessellation):
    """Whitehead move of a Farey image along the orbit ``G{flipped}``.

    ``G=None`` flips the single edge ``flipped`` (trivial group).
    """

    def __init__(self, base: FareyImage, G: Optional[Subgroup], flipped: Edge,
                 check_symmetry: bool = True):
        if not isinstance(base, FareyImage):
            raise TypeError("moves are supported on Farey images only")
        if not base.is_edge(flipped):
            raise NotAnEdge(f"{flipped!r} is not an edge of the base")
        self.base = base
        self.G = G
        self.flipped = flipped
        self.distinguished = base.distinguished
        self._old: Dict[Edge, Optional[MoebiusMap]] = {}
        self._tv: Dict[Tuple[BoundaryPoint, BoundaryPoint], BoundaryPoint] = {}
        self._targets = None
        if G is not None:
            # gamma(e0) = g for some gamma in G iff G s_g = G s_e0 (or G s_e0 S),
            # read in Farey coordinates through the pulled group A^-1 G A
            self._pulled = G if base.A.is_identity() else conjugate_subgroup(base.Ainv, G)
            f0 = _edge_frame(OrientedEdge(base.pull(flipped.x), base.pull(flipped.y)))
            self._targets = {self._pulled.coset_of(f0), self._pulled.coset_of(f0 @ S)}
        v1, v2 = quadrilateral(base, flipped)
        self.quad = (flipped.x, v1, flipped.y, v2)
        self.flipped_new = Edge(v1, v2)
        if check_symmetry and G is not None:
            for g in G.schreier_generators():
                if not base.is_symmetry(g):
                    raise InvalidMove(f"{g!r} does not preserve the base tessellation")
        if self.in_old_orbit(self.distinguished.unoriented()) is not None:
            raise InvalidMove("distinguished edge lies in the flipped orbit")
        u, w = flipped.x, flipped.y
        for side in (Edge(u, v1), Edge(v1, w), Edge(w, v2), Edge(v2, u)):
            if self.in_old_orbit(side) is not None:
                raise InvalidMove(f"orbit edges {flipped} and {side} share a triangle")

    @property
    def farey_base(self) -> FareyImage:
        return self.base

    def in_old_orbit(self, g: Edge) -> Optional[MoebiusMap]:
        """Witness ``gamma`` in G with ``gamma(flipped) == g`` for a base edge g."""
        try:
            return self._old[g]
        except KeyError:
            pass
        w = None
        if self.G is None:
            w = IDENTITY if g == self.flipped else None
        else:
            px, py = self.base.pull(g.x), self.base.pull(g.y)
            if (farey_is_edge(Edge(px, py))
                    and self._pulled.coset_of(_edge_frame(OrientedEdge(px, py))) in self._targets):
                w = edge_in_orbit(self.G, self.flipped, g,
                                  conj=None if self.base.A.is_identity() else self.base.A)
        self._old[g] = w
        return w

    def in_new_orbit(self, g: Edge) -> Optional[MoebiusMap]:
        """Witness ``gamma`` in G with ``gamma(flipped_new) == g``."""
        px, py = self.base.pull(g.x), self.base.pull(g.y)
        if abs(px.num * py.den - px.den * py.num) != 2:
            return None
        # g is the diagonal of the quadrilateral around the Farey edge
        # ((x+y)/2, (x-y)/2); primitive vectors with det 2 agree mod 2
        m1 = BoundaryPoint((px.num + py.num) // 2, (px.den + py.den) // 2)
        m2 = BoundaryPoint((px.num - py.num) // 2, (px.den - py.den) // 2)
        mid = Edge(self.base.push(m1), self.base.push(m2))
        return self.in_old_orbit(mid)

    def is_edge(self, e: Edge) -> bool:
        if self.base.is_edge(e):
            return self.in_old_orbit(e) is None
        return self.in_new_orbit(e) is not None

    def third_vertex(self, a, b) -> BoundaryPoint:
        a, b = bp(a), bp(b)
        key = (a, b)
        v = self._tv.get(key)
        if v is not None:
            return v
        e = Edge(a, b)
        if self.base.is_edge(e):
            if self.in_old_orbit(e) is not None:
                raise NotAnEdge(f"{e!r} was flipped away")
            x = self.base.third_vertex(a, b)
            if self.in_old_orbit(Edge(a, x)) is not None:
                v = self.base.third_vertex(a, x)
            elif self.in_old_orbit(Edge(x, b)) is not None:
                v = self.base.third_vertex(x, b)
            else:
                v = x
        else:
            gamma = self.in_new_orbit(e)
            if gamma is None:
                raise NotAnEdge(f"{e!r} is not an edge")
            u, w = apply(gamma, self.flipped.x), apply(gamma, self.flipped.y)
            v = u if between(a, u, b) else w
        self._tv[key] = v
        return v

    def __repr__(self):
        return f"Moved(base={self.base!r}, G={self.G!r}, flipped={self.flipped!r})"


def is_edge(t: Tessellation, e: Edge) -> bool:
    return t.is_edge(e)


def third_vertex(t: Tessellation, e: Edge, side: str = "+") -> BoundaryPoint:
    """Third vertex on the ``"+"`` (arc x->y) or ``"-"`` (arc y->x) side of ``e``."""
    if side == "+":
        return t.third_vertex(e.x, e.y)
    if side == "-":
        return t.third_vertex(e.y, e.x)
    raise ValueError("side must be '+' or '-'")


def whitehead_move(t: FareyImage, G: Subgroup, e: Edge) -> Moved:
    return Moved(t, G, e)


def enumerate_triangles(t: Tessellation, depth: int) -> List[Triangle]:
    """Breadth-first triangle closure of the given depth from the base triangle."""
    root = t.base_triangle()
    out = [root]
    frontier = [(root, None)]
    for _ in range(depth):
        nxt = []
        for tri, came_from in frontier:
            a, b, c = tri.vertices
            for p, q in ((a, b), (b, c), (c, a)):
                if came_from is not None and Edge(p, q) == came_from:
                    continue
                w = t.third_vertex(p, q)
                child = Triangle(p, w, q)
                out.append(child)
                nxt.append((child, Edge(p, q)))
        frontier = nxt
    return out


def enumerate_edges(t: Tessellation, depth: int) -> List[Edge]:
    seen = {}
    for tri in enumerate_triangles(t, depth):
        for e in tri.edges():
            seen.setdefault(e, None)
    return list(seen)


def enumerate_vertices(t: Tessellation, depth: int) -> List[BoundaryPoint]:
    seen = {}
    for tri in enumerate_triangles(t, depth):
        for v in tri.vertices:
            seen.setdefault(v, None)
    return list(seen)


def format_edges(edges: Iterable[Edge]) -> str:
    return "".join(f"{e.x} {e.y}\n" for e in edges)


def parse_edges(text: str) -> List[Edge]:
    out = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        x, y = line.split()
        out.append(Edge(bp(x), bp(y)))
    return out
