"""Numerical Douady-Earle extension of circle homeomorphisms.

Boundary maps are anything with ``eval_angle(theta, delta)`` (the evaluators of
:mod:`whitehead.charmap`), a :class:`DiskMoebius`, or a plain vectorized
callable on unit complex numbers.  The barycenter equation is always solved at
the origin after moving the viewpoint, so a single uniform quadrature serves
every interior point.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence

import numpy as np

from .moebius import MoebiusMap, cayley, cayley_inv

TWO_PI = 2 * math.pi
PROFILE_RADIUS = 0.999
_EDGE = 1 - 1e-12


@dataclass(frozen=True)
class DEParams:
    quad_nodes: int = 512
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    fd_step: float = 1e-4
    boundary_delta: float = 1e-6

    def __post_init__(self):
        for name in ("quad_nodes", "newton_tol", "newton_max_iter", "fd_step", "boundary_delta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.fd_step <= 10 * self.newton_tol:
            raise ValueError("fd_step must dominate newton_tol")


@dataclass(frozen=True)
class DEResult:
    w: Optional[complex]
    converged: bool
    iterations: int
    residual: float


@dataclass(frozen=True)
class BeltramiSample:
    z: complex
    mu: Optional[complex]
    converged: bool

    @property
    def abs_mu(self) -> float:
        return math.nan if self.mu is None else abs(self.mu)


class DiskMoebius:
    """``z -> rot * (z - a) / (1 - conj(a) z)``, with rot a unit complex number."""

    def __init__(self, a: complex = 0j, rot: complex = 1 + 0j):
        if abs(a) >= 1:
            raise ValueError("a must lie in the open disk")
        self.a = complex(a)
        self.rot = complex(rot) / abs(rot)

    def __call__(self, z):
        return self.rot * (z - self.a) / (1 - np.conj(self.a) * z)

    def inverse(self) -> "DiskMoebius":
        # w = r (z-a)/(1-a'z)  =>  z = conj(r) (w + a r)/(1 + conj(a r) w)
        r = self.rot
        return DiskMoebius(-self.a * r, r.conjugate())

    def eval_angle(self, theta: float, delta: float = 0.0) -> float:
        return _angle(self(complex(math.cos(theta), math.sin(theta))))

    @classmethod
    def random(cls, rng: np.random.Generator, radius: float = 0.6) -> "DiskMoebius":
        r = radius * math.sqrt(rng.random())
        a = r * np.exp(1j * rng.uniform(0, TWO_PI))
        return cls(a, np.exp(1j * rng.uniform(0, TWO_PI)))


def _angle(z: complex) -> float:
    t = math.atan2(z.imag, z.real)
    return t + TWO_PI if t < 0 else t


def disk_map(f, delta: float) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized unit-circle map for a boundary evaluator."""
    if isinstance(f, DiskMoebius) or (callable(f) and not hasattr(f, "eval_angle")):
        return lambda zs: np.asarray(f(zs), dtype=complex)

    def g(zs):
        th = np.mod(np.angle(zs), TWO_PI)
        return np.exp(1j * np.array([f.eval_angle(float(t), delta) for t in th]))

    return g


class Composite:
    """``outer o f o inner`` for disk Moebius maps around a boundary evaluator."""

    def __init__(self, outer: Optional[DiskMoebius], f, inner: Optional[DiskMoebius], delta: float):
        self.outer, self.inner = outer, inner
        self._f = disk_map(f, delta)

    def __call__(self, zs):
        zs = np.asarray(zs, dtype=complex)
        if self.inner is not None:
            zs = self.inner(zs)
        w = self._f(zs)
        return w if self.outer is None else self.outer(w)


def _nodes(n: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(n) / n)


def _solve(u: np.ndarray, p: DEParams) -> DEResult:
    w = complex(u.mean())
    res = math.inf
    for it in range(1, p.newton_max_iter + 1):
        den = 1 - np.conj(w) * u
        F = complex(np.mean((u - w) / den))
        a = complex(np.mean(-1 / den))
        b = complex(np.mean((u - w) * u / den ** 2))
        det = abs(a) ** 2 - abs(b) ** 2
        if det == 0 or not math.isfinite(det):
            break
        step = (b * F.conjugate() - a.conjugate() * F) / det
        while abs(w + step) >= _EDGE:
            step /= 2
        w += step
        res = abs(F)
        if abs(step) < p.newton_tol:
            return DEResult(w, True, it, res)
    return DEResult(None, False, p.newton_max_iter, res)


def de_solve(f, z: complex, p: DEParams = DEParams(), _fd=None) -> DEResult:
    """Barycenter solve for boundary map ``f`` at viewpoint ``z``."""
    z = complex(z)
    if abs(z) >= 1:
        raise ValueError("z must lie in the open disk")
    fd = _fd if _fd is not None else disk_map(f, p.boundary_delta)
    w0 = _nodes(p.quad_nodes)
    zeta = (w0 + z) / (1 + np.conj(z) * w0)
    return _solve(fd(zeta), p)


def de_extend(f, z: complex, p: DEParams = DEParams()) -> Optional[complex]:
    """Value of the extension at ``z``; ``None`` when Newton did not converge."""
    return de_solve(f, z, p).w


def beltrami_at(f, z: complex, p: DEParams = DEParams()) -> BeltramiSample:
    z = complex(z)
    eps = p.fd_step
    if abs(z) + eps >= 1:
        raise ValueError("stencil leaves the disk")
    fd = disk_map(f, p.boundary_delta)
    vals = [de_solve(f, z + d, p, fd) for d in (0, eps, -eps, 1j * eps, -1j * eps)]
    if not all(r.converged for r in vals):
        return BeltramiSample(z, None, False)
    _, xp, xm, yp, ym = (r.w for r in vals)
    dx, dy = xp - xm, yp - ym
    dz = (dx - 1j * dy) / (4 * eps)
    dzb = (dx + 1j * dy) / (4 * eps)
    return BeltramiSample(z, dzb / dz, True)


# --- support profiles -------------------------------------------------------

def hyperbolic_distance(z: complex, w: complex) -> float:
    r = abs(z - w) / abs(1 - np.conj(w) * z)
    return math.inf if r >= 1 else 2 * math.atanh(r)


def halfplane_to_disk(tau: complex) -> complex:
    return cayley(tau)


def disk_to_halfplane(z: complex) -> complex:
    return cayley_inv(z)


def act_halfplane(m: MoebiusMap, tau: complex) -> complex:
    a, b, c, d = (float(x) for x in m.entries())
    return (a * tau + b) / (c * tau + d)


def reference_orbit(G, tau0: complex = 1j, depth: int = 12) -> List[complex]:
    """Disk images of ``G{tau0}`` for ``tau0`` on the edge ``0 -> oo``.

    Every element of PSL(2,Z) is the frame of a unique oriented Farey edge,
    so the orbit is read off the edges of the depth-``depth`` window whose
    frames lie in G.
    """
    from .modgroup import _edge_frame
    from .moebius import S, OrientedEdge
    from .tessellation import FareyImage, enumerate_edges

    out = []
    for e in enumerate_edges(FareyImage(), depth):
        fr = _edge_frame(OrientedEdge(e.x, e.y))
        for m in (fr, fr @ S):
            if G.contains(m):
                out.append(halfplane_to_disk(act_halfplane(m, tau0)))
    return out


def standard_profile_points(depth: int = 3, cusps: Sequence = ("oo", "0", "1", "-1", "1/2", "2"),
                            heights: Sequence[float] = (2, 4, 8, 16, 32, 64, 128),
                            offsets: Sequence[float] = (0.0, 0.5),
                            near: Sequence[complex] = (1j, 0.4 + 1j, -0.4 + 1j, 1.5j, 0.7j)
                            ) -> List[complex]:
    """Triangle centers of a Farey window, ladders climbing into cusps, and a
    few half-plane points ``near`` (by default around i)."""
    from .charmap import _cusp_frame
    from .moebius import bp, three_point_map
    from .tessellation import FareyImage, enumerate_triangles

    center = complex(0.5, math.sqrt(3) / 2)
    pts = []
    for tri in enumerate_triangles(FareyImage(), depth):
        m = three_point_map(bp(0), bp(1), bp("oo"), tri.a, tri.b, tri.c)
        pts.append(halfplane_to_disk(act_halfplane(m, center)))
    for y in cusps:
        sig = _cusp_frame(bp(y))
        for Y in heights:
            for u in offsets:
                pts.append(halfplane_to_disk(act_halfplane(sig, complex(u, Y))))
    pts.extend(halfplane_to_disk(complex(t)) for t in near)
    return [z for z in pts if abs(z) <= PROFILE_RADIUS]


@dataclass(frozen=True)
class ProfileRow:
    z: complex
    abs_mu: float
    in_V: bool
    orbit_distance: float
    converged: bool


def support_profile(f, points: Iterable[complex], N: int, orbit: Sequence[complex],
                    p: DEParams = DEParams()) -> List[ProfileRow]:
    """|mu| at each point, membership in ``{|mu| >= 1/N}`` and distance to ``orbit``.

    Points with ``|z| > 0.999`` are skipped.
    """
    rows = []
    for z in points:
        z = complex(z)
        if abs(z) > PROFILE_RADIUS:
            continue
        s = beltrami_at(f, z, p)
        dist = min((hyperbolic_distance(z, o) for o in orbit), default=math.inf)
        am = s.abs_mu
        rows.append(ProfileRow(z, am, bool(s.converged and am >= 1 / N), dist, s.converged))
    return rows


def profile_csv(rows: Iterable[ProfileRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["z_re", "z_im", "abs_mu", "in_V", "orbit_distance", "converged"])
    for r in rows:
        w.writerow([f"{round(r.z.real, 12) + 0.0:.12f}", f"{round(r.z.imag, 12) + 0.0:.12f}",
                    "nan" if math.isnan(r.abs_mu) else f"{r.abs_mu:.12f}",
                    int(r.in_V), f"{r.orbit_distance:.9f}", int(r.converged)])
    return buf.getvalue()


def rank_separation(rows: Sequence[ProfileRow]) -> float:
    """Probability that a random V point is closer to the orbit than a random non-V point."""
    inside = [r.orbit_distance for r in rows if r.converged and r.in_V]
    outside = [r.orbit_distance for r in rows if r.converged and not r.in_V]
    if not inside or not outside:
        return math.nan
    wins = sum((a < b) + 0.5 * (a == b) for a in inside for b in outside)
    return wins / (len(inside) * len(outside))
