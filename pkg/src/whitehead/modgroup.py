"""PSL(2,Z) words and finite-index subgroups as coset tables.

Subgroups are stored as the right action of the generators ``S`` and ``T`` on
the right cosets ``H g``; coset 0 is ``H`` itself, so ``m`` lies in ``H`` iff
the word of ``m`` carries coset 0 back to 0.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from math import gcd
from typing import Callable, Dict, Hashable, Iterator, List, Optional, Sequence, Tuple

from .moebius import (
    IDENTITY, S, T, T_INV, BoundaryPoint, MoebiusMap, OrientedEdge, Edge, apply, bp, in_psl2z,
)

DEFAULT_BOUND = 100_000


class IndexBoundExceeded(RuntimeError):
    pass


class NotInPSL2Z(ValueError):
    pass


# --- words ----------------------------------------------------------------

Word = Tuple[Tuple[str, int], ...]
"""Run-length word: ``(("T", 3), ("S", 1), ("T", -2))`` is ``T^3 S T^-2``."""


def _det1(m: MoebiusMap) -> Tuple[int, int, int, int]:
    if not in_psl2z(m):
        raise NotInPSL2Z(f"{m!r} is not in PSL(2,Z)")
    return m.entries()


def _runs(m: MoebiusMap) -> Iterator[Tuple[str, int]]:
    a, b, c, d = _det1(m)
    # m = T^q S m'  with  m' = S^-1 T^-q m
    while c != 0:
        # nearest-integer quotient halves |c| each round
        q = (2 * a + c) // (2 * c)
        if q:
            yield ("T", q)
        a, b = a - q * c, b - q * d
        a, b, c, d = c, d, -a, -b
        yield ("S", 1)
    # now m = +-[[1, b'], [0, 1]]
    if a * b:
        yield ("T", a * b)


def word_decompose(m: MoebiusMap) -> Word:
    """Freely reduced word in ``S, T, T^-1`` whose product is ``m``."""
    out: List[Tuple[str, int]] = []
    for letter, k in _runs(m):
        if out and out[-1][0] == letter == "T":
            k += out.pop()[1]
            if k == 0:
                continue
        out.append((letter, k))
    return tuple(out)


def word_letters(w: Word) -> List[str]:
    letters = []
    for g, k in w:
        if g == "S":
            letters.append("S")
        else:
            letters.extend(["T" if k > 0 else "t"] * abs(k))
    return letters


def word_str(w: Word) -> str:
    return "".join(word_letters(w)) or "1"


def word_to_matrix(w) -> MoebiusMap:
    m = IDENTITY
    for g, k in w:
        if g == "S":
            m = m @ S
        else:
            m = m @ MoebiusMap(1, k, 0, 1)
    return m


def abelianization(m: MoebiusMap) -> int:
    """Image in Z/6 under ``S -> 3, T -> 1``."""
    total = 0
    for g, k in _runs(m):
        total += 3 if g == "S" else k
    return total % 6


def g0_contains(m: MoebiusMap) -> bool:
    """Membership in the commutator subgroup, the Modular torus group."""
    return abelianization(m) == 0


# --- coset tables ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Subgroup:
    act_s: Tuple[int, ...]
    act_t: Tuple[int, ...]
    name: str = ""
    _cycles: Tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.act_s)
        if len(self.act_t) != n or n == 0:
            raise ValueError("inconsistent coset table")
        cyc_of = [0] * n
        pos = [0] * n
        cycles = []
        seen = [False] * n
        for i in range(n):
            if seen[i]:
                continue
            c = []
            j = i
            while not seen[j]:
                seen[j] = True
                cyc_of[j] = len(cycles)
                pos[j] = len(c)
                c.append(j)
                j = self.act_t[j]
            cycles.append(tuple(c))
        object.__setattr__(self, "_cycles", (tuple(cycles), tuple(cyc_of), tuple(pos)))

    @property
    def index(self) -> int:
        return len(self.act_s)

    def t_power(self, i: int, k: int) -> int:
        cycles, cyc_of, pos = self._cycles
        c = cycles[cyc_of[i]]
        return c[(pos[i] + k) % len(c)]

    def t_cycle_length(self, i: int) -> int:
        cycles, cyc_of, _ = self._cycles
        return len(cycles[cyc_of[i]])

    def coset_of(self, m: MoebiusMap, start: int = 0) -> int:
        i = start
        for g, k in _runs(m):
            i = self.act_s[i] if g == "S" else self.t_power(i, k)
        return i

    def contains(self, m: MoebiusMap) -> bool:
        return self.coset_of(m) == 0

    __contains__ = contains

    def coset_reps(self) -> List[MoebiusMap]:
        reps: List[Optional[MoebiusMap]] = [None] * self.index
        reps[0] = IDENTITY
        queue = deque([0])
        while queue:
            i = queue.popleft()
            for x, img in ((S, self.act_s[i]), (T, self.act_t[i]), (T_INV, self.t_power(i, -1))):
                if reps[img] is None:
                    reps[img] = reps[i] @ x
                    queue.append(img)
        return reps  # type: ignore[return-value]

    def schreier_generators(self) -> List[MoebiusMap]:
        reps = self.coset_reps()
        gens: List[MoebiusMap] = []
        seen = set()
        for i in range(self.index):
            for x, j in ((S, self.act_s[i]), (T, self.act_t[i])):
                g = reps[i] @ x @ reps[j].inverse()
                if g.is_identity() or g in seen or g.inverse() in seen:
                    continue
                seen.add(g)
                gens.append(g)
        return gens

    def canonical(self) -> "Subgroup":
        order = {0: 0}
        queue = deque([0])
        while queue:
            i = queue.popleft()
            for j in (self.act_s[i], self.act_t[i], self.t_power(i, -1)):
                if j not in order:
                    order[j] = len(order)
                    queue.append(j)
        n = self.index
        s = [0] * n
        t = [0] * n
        for old, new in order.items():
            s[new] = order[self.act_s[old]]
            t[new] = order[self.act_t[old]]
        return Subgroup(tuple(s), tuple(t), self.name)

    def __eq__(self, other):
        if not isinstance(other, Subgroup):
            return NotImplemented
        a, b = self.canonical(), other.canonical()
        return a.act_s == b.act_s and a.act_t == b.act_t

    def __hash__(self):
        c = self.canonical()
        return hash((c.act_s, c.act_t))

    def check(self) -> None:
        """Assert the defining relations and transitivity."""
        n = self.index
        for i in range(n):
            assert self.act_s[self.act_s[i]] == i, "S^2 != 1"
            j = i
            for _ in range(3):
                j = self.act_t[self.act_s[j]]
            assert j == i, "(ST)^3 != 1"
        assert sorted(self.act_t) == list(range(n))
        reps = self.coset_reps()
        assert all(r is not None for r in reps), "action is not transitive"

    def to_json(self) -> str:
        return json.dumps({"index": self.index, "actS": list(self.act_s),
                           "actT": list(self.act_t)}, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str, name: str = "") -> "Subgroup":
        doc = json.loads(text)
        g = cls(tuple(doc["actS"]), tuple(doc["actT"]), name)
        if g.index != doc["index"]:
            raise ValueError("index field does not match the table size")
        return g

    def __repr__(self):
        label = f"{self.name}, " if self.name else ""
        return f"Subgroup({label}index={self.index})"


def _bfs_table(same_coset_key: Callable[[MoebiusMap], Hashable], bound: int, name: str) -> Subgroup:
    reps = [IDENTITY]
    keys: Dict[Hashable, int] = {same_coset_key(IDENTITY): 0}
    act_s: List[int] = []
    act_t: List[int] = []
    i = 0
    while i < len(reps):
        images = []
        for x in (S, T, T_INV):
            g = reps[i] @ x
            k = same_coset_key(g)
            j = keys.get(k)
            if j is None:
                if len(reps) >= bound:
                    raise IndexBoundExceeded(f"index exceeds bound {bound}")
                j = len(reps)
                keys[k] = j
                reps.append(g)
            images.append(j)
        act_s.append(images[0])
        act_t.append(images[1])
        i += 1
    return Subgroup(tuple(act_s), tuple(act_t), name)


def subgroup_from_key(key: Callable[[MoebiusMap], Hashable], bound: int = DEFAULT_BOUND,
                      name: str = "") -> Subgroup:
    """Coset table from a complete invariant of right cosets.

    ``key(g) == key(h)`` must hold exactly when ``H g == H h``.
    """
    return _bfs_table(key, bound, name)


def subgroup_from_oracle(oracle: Callable[[MoebiusMap], bool], bound: int = DEFAULT_BOUND,
                         name: str = "") -> Subgroup:
    """Coset table from a membership predicate (quadratic in the index)."""
    reps: List[MoebiusMap] = [IDENTITY]
    act_s: List[int] = []
    act_t: List[int] = []

    def locate(g: MoebiusMap) -> int:
        for j, h in enumerate(reps):
            if oracle(g @ h.inverse()):
                return j
        if len(reps) >= bound:
            raise IndexBoundExceeded(f"index exceeds bound {bound}")
        reps.append(g)
        return len(reps) - 1

    i = 0
    while i < len(reps):
        images = [locate(reps[i] @ x) for x in (S, T, T_INV)]
        act_s.append(images[0])
        act_t.append(images[1])
        i += 1
    return Subgroup(tuple(act_s), tuple(act_t), name)


def full_group() -> Subgroup:
    return Subgroup((0,), (0,), "PSL2(Z)")


def commutator_subgroup() -> Subgroup:
    """G0: the index-6 commutator subgroup (free of rank 2)."""
    return subgroup_from_key(abelianization, name="G0")


def _gamma_key(n: int):
    def key(m: MoebiusMap):
        t = tuple(v % n for v in m.entries())
        u = tuple(-v % n for v in m.entries())
        return min(t, u)
    return key


def congruence_subgroup(n: int, bound: int = DEFAULT_BOUND) -> Subgroup:
    """Principal congruence subgroup Gamma(n), projectivized."""
    if n < 1:
        raise ValueError("level must be positive")
    if n == 1:
        return full_group()
    return subgroup_from_key(_gamma_key(n), bound, name=f"Gamma({n})")


def _ext_gcd(a: int, b: int) -> Tuple[int, int, int]:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q = a // b
        a, b = b, a - q * b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def hermite_form(a: int, b: int, c: int, d: int) -> Tuple[Tuple[int, int, int], MoebiusMap]:
    """Split an integer matrix of positive determinant as ``gamma * H``.

    ``H = [[alpha, beta], [0, delta]]`` with ``alpha, delta > 0`` and
    ``0 <= beta < delta`` is the canonical representative of the coset
    ``PSL(2,Z) X``; ``gamma`` is in PSL(2,Z).
    """
    det = a * d - b * c
    g, u, v = _ext_gcd(a, c)
    # U = [[u, v], [-c/g, a/g]] has det 1 and U X = [[g, *], [0, det/g]]
    beta = u * b + v * d
    delta = det // g
    beta_r = beta % delta
    alpha = g
    # gamma = X H^-1, integral by construction
    ga = a * delta
    gb = -a * beta_r + b * alpha
    gc = c * delta
    gd = -c * beta_r + d * alpha
    gam = MoebiusMap(ga, gb, gc, gd)  # scaled by det(H)
    return (alpha, beta_r, delta), gam


def _scaled(A: MoebiusMap, m: MoebiusMap) -> Tuple[int, int, int, int]:
    p = A @ m
    return p.entries()


def commensurator_subgroup(A: MoebiusMap, bound: int = DEFAULT_BOUND) -> Subgroup:
    """PSL(2,Z) intersected with ``A PSL(2,Z) A^-1``."""
    Ainv = A.inverse()

    def key(m):
        return hermite_form(*_scaled(Ainv, m))[0]

    return subgroup_from_key(key, bound, name=f"PSL2Z^{A.a}/{A.d}")


def conjugate_g0(A: MoebiusMap, bound: int = DEFAULT_BOUND) -> Subgroup:
    """PSL(2,Z) intersected with ``A G0 A^-1``."""
    Ainv = A.inverse()

    def key(m):
        h, gam = hermite_form(*_scaled(Ainv, m))
        return h, abelianization(gam)

    return subgroup_from_key(key, bound, name=f"A G0 A^-1 ({A.a}/{A.d})")


def conjugate_subgroup(X: MoebiusMap, K: Subgroup, bound: int = DEFAULT_BOUND) -> Subgroup:
    """PSL(2,Z) intersected with ``X K X^-1`` for a coset table ``K``.

    ``X^-1 m = gamma H`` (Hermite split) makes ``(H, K gamma)`` a complete
    invariant of the right coset of ``m``.
    """
    Xinv = X.inverse()

    def key(m):
        h, gam = hermite_form(*_scaled(Xinv, m))
        return h, K.coset_of(gam)

    return subgroup_from_key(key, bound, name=f"{X.a}/{X.d} {K.name}")


def oracle_conjugate_g0(A: MoebiusMap) -> Callable[[MoebiusMap], bool]:
    """Membership predicate of ``A G0 A^-1`` (used to cross-check tables)."""
    Ainv = A.inverse()

    def oracle(m: MoebiusMap) -> bool:
        c = Ainv @ m @ A
        return in_psl2z(c) and g0_contains(c)

    return oracle


def intersect(H: Subgroup, K: Subgroup, name: str = "") -> Subgroup:
    """Coset table of ``H n K`` as the orbit of ``(0, 0)`` in the product action."""
    index: Dict[Tuple[int, int], int] = {(0, 0): 0}
    states = [(0, 0)]
    act_s: List[int] = []
    act_t: List[int] = []
    i = 0
    while i < len(states):
        h, k = states[i]
        imgs = []
        for nxt in ((H.act_s[h], K.act_s[k]), (H.act_t[h], K.act_t[k]),
                    (H.t_power(h, -1), K.t_power(k, -1))):
            j = index.get(nxt)
            if j is None:
                j = index[nxt] = len(states)
                states.append(nxt)
            imgs.append(j)
        act_s.append(imgs[0])
        act_t.append(imgs[1])
        i += 1
    return Subgroup(tuple(act_s), tuple(act_t), name or f"{H.name} n {K.name}")


def g_a(A: MoebiusMap, bound: int = DEFAULT_BOUND) -> Subgroup:
    """``G_A = G0 n A G0 A^-1`` for a rational translation ``A`` along 0 -> oo."""
    return intersect(conjugate_g0(A, bound), commutator_subgroup(), name=f"G_A({A.a}/{A.d})")


def level_subgroup(A: MoebiusMap, level: int, bound: int = DEFAULT_BOUND) -> Subgroup:
    """The chain member ``G_A n Gamma(level)``."""
    G = g_a(A, bound)
    if level <= 1:
        return G
    return intersect(G, congruence_subgroup(level, bound), name=f"G_A({A.a}/{A.d}) n Gamma({level})")


# --- oriented edges -------------------------------------------------------

def _edge_frame(e: OrientedEdge) -> MoebiusMap:
    # maps 0 -> e.tail and oo -> e.head with determinant +1
    u, v = e.tail, e.head
    a, b, c, d = v.num, u.num, v.den, u.den
    det = a * d - b * c
    if abs(det) != 1:
        raise ValueError(f"{e} is not a Farey edge")
    if det < 0:
        a, c = -a, -c
    return MoebiusMap._unchecked(a, b, c, d)


def map_oriented_edge(e1: OrientedEdge, e2: OrientedEdge) -> MoebiusMap:
    """The unique element of PSL(2,Z) carrying oriented Farey edge e1 to e2."""
    return _edge_frame(e2) @ _edge_frame(e1).inverse()


def edge_in_orbit(G: Subgroup, e0: Edge, e: Edge,
                  conj: Optional[MoebiusMap] = None) -> Optional[MoebiusMap]:
    """A witness ``gamma`` in ``G`` with ``gamma(e0) == e``, or None.

    With ``conj = A`` the edges are edges of ``A(F)``; the candidates are
    built in Farey coordinates and conjugated back by ``A``.
    """
    if conj is not None:
        Ainv = conj.inverse()
        e0 = Edge(apply(Ainv, e0.x), apply(Ainv, e0.y))
        e = Edge(apply(Ainv, e.x), apply(Ainv, e.y))
    src = OrientedEdge(e0.x, e0.y)
    for tgt in (OrientedEdge(e.x, e.y), OrientedEdge(e.y, e.x)):
        delta = map_oriented_edge(src, tgt)
        gamma = delta if conj is None else conj @ delta @ conj.inverse()
        if in_psl2z(gamma) and G.contains(gamma):
            return gamma
    return None
