"""Exact boundary points, Moebius maps and cross-ratios.

All computation lives on the extended real line, the boundary of the upper
half-plane.  The disk picture is recovered only for numerics and rendering
through the Cayley transform (see :func:`cayley` and :func:`to_disk`).
"""
from __future__ import annotations

import cmath
import math
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence, Tuple, Union


class OrientationError(ValueError):
    """Raised when a requested boundary map would reverse orientation."""


class BoundaryPoint:
    """A point of Q u {oo}, stored as a reduced pair ``num/den`` with ``den >= 0``.

    Infinity is ``1/0``.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: int, den: int = 1):
        if den < 0:
            num, den = -num, -den
        if den == 0:
            if num == 0:
                raise ValueError("0/0 is not a boundary point")
            num = 1
        else:
            g = gcd(num, den)
            if g != 1:
                num //= g
                den //= g
        self.num = num
        self.den = den
        self._hash = hash((num, den))

    @classmethod
    def coerce(cls, x) -> "BoundaryPoint":
        if isinstance(x, BoundaryPoint):
            return x
        if isinstance(x, int):
            return cls(x, 1)
        if isinstance(x, Fraction):
            return cls(x.numerator, x.denominator)
        if isinstance(x, str):
            s = x.strip()
            if s in ("oo", "inf", "∞", "1/0"):
                return INF
            f = Fraction(s)
            return cls(f.numerator, f.denominator)
        raise TypeError(f"cannot make a boundary point from {x!r}")

    @property
    def is_inf(self) -> bool:
        return self.den == 0

    def homogeneous(self) -> Tuple[int, int]:
        return self.num, self.den

    def to_fraction(self) -> Fraction:
        if self.den == 0:
            raise ValueError("infinity has no finite value")
        return Fraction(self.num, self.den)

    def __float__(self) -> float:
        if self.den == 0:
            return math.inf
        return self.num / self.den

    def sort_key(self):
        """Key for the linear order of R with infinity placed last."""
        if self.den == 0:
            return (1, Fraction(0))
        return (0, Fraction(self.num, self.den))

    def __eq__(self, other):
        if not isinstance(other, BoundaryPoint):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"BoundaryPoint({self})"

    def __str__(self):
        if self.den == 0:
            return "oo"
        if self.den == 1:
            return str(self.num)
        return f"{self.num}/{self.den}"


INF = BoundaryPoint(1, 0)
ZERO = BoundaryPoint(0, 1)
ONE = BoundaryPoint(1, 1)

PointLike = Union[BoundaryPoint, int, Fraction, str]


def bp(x: PointLike) -> BoundaryPoint:
    return BoundaryPoint.coerce(x)


class OrientedEdge:
    """Oriented geodesic from ``tail`` to ``head``."""

    __slots__ = ("tail", "head")

    def __init__(self, tail: PointLike, head: PointLike):
        self.tail, self.head = bp(tail), bp(head)
        if self.tail == self.head:
            raise ValueError("oriented edge needs distinct endpoints")

    def reversed(self) -> "OrientedEdge":
        return OrientedEdge(self.head, self.tail)

    def unoriented(self) -> "Edge":
        return Edge(self.tail, self.head)

    def __eq__(self, other):
        if not isinstance(other, OrientedEdge):
            return NotImplemented
        return self.tail == other.tail and self.head == other.head

    def __hash__(self):
        return hash((self.tail, self.head, "o"))

    def __repr__(self):
        return f"OrientedEdge({self.tail} -> {self.head})"


class Edge:
    """Unoriented geodesic; endpoints stored in the linear order (oo last)."""

    __slots__ = ("x", "y")

    def __init__(self, x: PointLike, y: PointLike):
        x, y = bp(x), bp(y)
        if x == y:
            raise ValueError("edge needs distinct endpoints")
        if _lt(y, x):
            x, y = y, x
        self.x, self.y = x, y

    @property
    def endpoints(self) -> Tuple[BoundaryPoint, BoundaryPoint]:
        return self.x, self.y

    def __contains__(self, p) -> bool:
        return p == self.x or p == self.y

    def __eq__(self, other):
        if not isinstance(other, Edge):
            return NotImplemented
        return self.x == other.x and self.y == other.y

    def __hash__(self):
        return hash((self.x, self.y))

    def __str__(self):
        return f"{self.x} {self.y}"

    def __repr__(self):
        return f"Edge({self.x}, {self.y})"


def _det(x: BoundaryPoint, y: BoundaryPoint) -> int:
    # q_x q_y (x - y) for finite points
    return x.num * y.den - x.den * y.num


def _lt(x: BoundaryPoint, y: BoundaryPoint) -> bool:
    # strict linear order, infinity last
    if x.den == 0:
        return False
    if y.den == 0:
        return True
    return x.num * y.den < y.num * x.den


def cyclic_order(x: BoundaryPoint, y: BoundaryPoint, z: BoundaryPoint) -> bool:
    """True iff ``x, y, z`` are pairwise distinct and in increasing cyclic order."""
    a, b, c = _lt(x, y), _lt(y, z), _lt(z, x)
    # exactly two of the three comparisons hold for a positively ordered triple
    if x == y or y == z or z == x:
        return False
    return (a and b) or (b and c) or (c and a)


def between(a: BoundaryPoint, x: BoundaryPoint, b: BoundaryPoint) -> bool:
    """True iff ``x`` lies in the open arc running counterclockwise from a to b."""
    return cyclic_order(a, x, b)


def _prim(a: int, b: int, c: int, d: int) -> Tuple[int, int, int, int]:
    g = gcd(gcd(a, b), gcd(c, d))
    if g == 0:
        raise ValueError("zero matrix")
    if g != 1:
        a, b, c, d = a // g, b // g, c // g, d // g
    for v in (a, b, c, d):
        if v != 0:
            if v < 0:
                a, b, c, d = -a, -b, -c, -d
            break
    return a, b, c, d


class MoebiusMap:
    """Projective class of an integer 2x2 matrix with positive determinant.

    The stored representative is primitive with its first nonzero entry
    positive, so projective equality is plain tuple equality.
    """

    __slots__ = ("a", "b", "c", "d", "_hash")

    def __init__(self, a, b, c, d):
        if any(isinstance(v, Fraction) for v in (a, b, c, d)):
            den = 1
            for v in (a, b, c, d):
                den = den * Fraction(v).denominator // gcd(den, Fraction(v).denominator)
            a, b, c, d = (int(Fraction(v) * den) for v in (a, b, c, d))
        a, b, c, d = int(a), int(b), int(c), int(d)
        if a * d - b * c <= 0:
            raise OrientationError(f"determinant must be positive: {[[a, b], [c, d]]}")
        self.a, self.b, self.c, self.d = _prim(a, b, c, d)
        self._hash = hash((self.a, self.b, self.c, self.d))

    @classmethod
    def _unchecked(cls, a: int, b: int, c: int, d: int) -> "MoebiusMap":
        # integer entries with positive determinant already guaranteed
        self = object.__new__(cls)
        self.a, self.b, self.c, self.d = _prim(a, b, c, d)
        self._hash = hash((self.a, self.b, self.c, self.d))
        return self

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "MoebiusMap":
        (a, b), (c, d) = rows
        return cls(a, b, c, d)

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    def entries(self) -> Tuple[int, int, int, int]:
        return self.a, self.b, self.c, self.d

    def rows(self):
        return [[self.a, self.b], [self.c, self.d]]

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        a, b, c, d = self.entries()
        e, f, g, h = other.entries()
        return MoebiusMap._unchecked(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def inverse(self) -> "MoebiusMap":
        return MoebiusMap._unchecked(self.d, -self.b, -self.c, self.a)

    def __call__(self, x: PointLike) -> BoundaryPoint:
        return apply(self, x)

    def __pow__(self, n: int) -> "MoebiusMap":
        base = self if n >= 0 else self.inverse()
        result = IDENTITY
        n = abs(n)
        while n:
            if n & 1:
                result = result @ base
            base = base @ base
            n >>= 1
        return result

    def is_identity(self) -> bool:
        return self.b == 0 and self.c == 0 and self.a == self.d

    def __eq__(self, other):
        if not isinstance(other, MoebiusMap):
            return NotImplemented
        return self.entries() == other.entries()

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"MoebiusMap([[{self.a}, {self.b}], [{self.c}, {self.d}]])"

    def to_json(self):
        return [[self.a, self.b], [self.c, self.d]]


IDENTITY = MoebiusMap(1, 0, 0, 1)
S = MoebiusMap(0, -1, 1, 0)
T = MoebiusMap(1, 1, 0, 1)
T_INV = MoebiusMap(1, -1, 0, 1)


def diag(p, q) -> MoebiusMap:
    """The hyperbolic translation z -> (p/q) z along the edge 0 -> oo."""
    return MoebiusMap(p, 0, 0, q)


def apply(m: MoebiusMap, x: PointLike) -> BoundaryPoint:
    x = bp(x)
    p, q = x.num, x.den
    return BoundaryPoint(m.a * p + m.b * q, m.c * p + m.d * q)


def apply_complex(m: MoebiusMap, z: complex) -> complex:
    """Action on the closed upper half-plane (floating point)."""
    if z == math.inf:
        return m.a / m.c if m.c else math.inf
    den = m.c * z + m.d
    if den == 0:
        return math.inf
    return (m.a * z + m.b) / den


def in_psl2z(m: MoebiusMap) -> bool:
    return m.det == 1


def cross_ratio(a: PointLike, b: PointLike, c: PointLike, d: PointLike) -> Fraction:
    """``((a-c)(b-d)) / ((a-d)(b-c))``, extended to infinity by limits."""
    a, b, c, d = bp(a), bp(b), bp(c), bp(d)
    pts = (a, b, c, d)
    if len(set(pts)) != 4:
        raise ValueError(f"degenerate quadruple {tuple(map(str, pts))}")
    return Fraction(_det(a, c) * _det(b, d), _det(a, d) * _det(b, c))


def _frame(x1: BoundaryPoint, x2: BoundaryPoint, x3: BoundaryPoint) -> Tuple[int, int, int, int]:
    # matrix sending oo -> x1, 1 -> x2, 0 -> x3 (possibly negative determinant)
    a23 = _det(x2, x3)
    a12 = _det(x1, x2)
    return (a23 * x1.num, a12 * x3.num, a23 * x1.den, a12 * x3.den)


def three_point_map(x1, x2, x3, y1, y2, y3) -> MoebiusMap:
    """The Moebius map sending ``x_i`` to ``y_i``.

    Raises :class:`OrientationError` if the triples have opposite cyclic
    orientation and ``ValueError`` if a triple has a repeated point.
    """
    xs = tuple(map(bp, (x1, x2, x3)))
    ys = tuple(map(bp, (y1, y2, y3)))
    if len(set(xs)) != 3 or len(set(ys)) != 3:
        raise ValueError("three_point_map needs three distinct points on each side")
    if cyclic_order(*xs) != cyclic_order(*ys):
        raise OrientationError("triples have opposite orientation")
    pa, pb, pc, pd = _frame(*xs)
    qa, qb, qc, qd = _frame(*ys)
    # Q * adj(P)
    ia, ib, ic, id_ = pd, -pb, -pc, pa
    a = qa * ia + qb * ic
    b = qa * ib + qb * id_
    c = qc * ia + qd * ic
    d = qc * ib + qd * id_
    # det = det(Q) det(P) > 0 because both frames have the same orientation
    return MoebiusMap(a, b, c, d)


# --- disk correspondence -------------------------------------------------

def cayley(w: complex) -> complex:
    """Upper half-plane point to unit disk point, ``i -> 0``."""
    if w == math.inf:
        return 1.0 + 0j
    return (w - 1j) / (w + 1j)


def cayley_inv(z: complex) -> complex:
    if z == 1:
        return math.inf
    return 1j * (1 + z) / (1 - z)


def boundary_angle(x: Union[BoundaryPoint, float, Fraction]) -> float:
    """Angle in ``(0, 2pi]`` of the disk image of a boundary point (oo -> 2pi)."""
    if isinstance(x, BoundaryPoint):
        if x.is_inf:
            return 2 * math.pi
        x = x.num / x.den
    x = float(x)
    if math.isinf(x):
        return 2 * math.pi
    return math.pi + 2 * math.atan(x)


def angle_to_real(theta: float) -> float:
    """Inverse of :func:`boundary_angle`; angle 0 maps to infinity."""
    t = math.fmod(theta, 2 * math.pi)
    if t < 0:
        t += 2 * math.pi
    if t == 0.0:
        return math.inf
    return -1.0 / math.tan(t / 2)


def to_disk(x: Union[BoundaryPoint, float]) -> complex:
    return cmath.exp(1j * boundary_angle(x))


def arc_width(a: BoundaryPoint, b: BoundaryPoint) -> float:
    """Angular length of the counterclockwise arc from a to b on the disk."""
    w = boundary_angle(b) - boundary_angle(a)
    if w < 0:
        w += 2 * math.pi
    return w


def iter_points(xs: Iterable[PointLike]):
    for x in xs:
        yield bp(x)
