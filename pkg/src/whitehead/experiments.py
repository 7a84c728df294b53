"""Command-line experiments: sweep tables, support profiles, renders and orbit reports.

Exit codes: 0 success, 2 configuration error, 3 numeric non-convergence or an
incomplete schedule, 4 invariant violation.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence

from . import barycentric as bc
from . import orbitseq
from .charmap import whitehead_maps
from .modgroup import Subgroup, level_subgroup
from .moebius import Edge, MoebiusMap, diag, to_disk
from .qsmetric import GRID_DEPTH, farey_vertices, moebius_deviation, qs_report
from .tessellation import L1, FareyImage, Moved, Tessellation, enumerate_triangles

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INVARIANT = 0, 2, 3, 4
CACHE_ENV = "WHITEHEAD_CACHE_DIR"
DEFAULT_LAMBDAS = ("4", "2", "3/2", "9/8")
DEFAULT_STAGE_LAMBDAS = ("2", "3/2", "9/8", "17/16")
DEFAULT_STAGE_LEVELS = (2, 3, 4)


class ConfigError(ValueError):
    pass


def parse_lambda(text) -> Fraction:
    try:
        lam = Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad rational {text!r}") from exc
    if lam <= 1:
        raise ConfigError(f"lambda must exceed 1, got {text}")
    return lam


def _q(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _lambda_matrix(lam: Fraction) -> MoebiusMap:
    return diag(lam.numerator, lam.denominator)


# --- coset table cache ------------------------------------------------------

def cache_dir() -> Optional[Path]:
    d = os.environ.get(CACHE_ENV)
    return Path(d) if d else None


def _cache_file(d: Path, lam: Fraction, N: int) -> Path:
    return d / f"GA_{lam.numerator}-{lam.denominator}_N{N}.json"


def cached_level_subgroup(lam: Fraction, N: int, directory: Optional[Path] = None) -> Subgroup:
    d = directory if directory is not None else cache_dir()
    name = f"G_A({_q(lam)}) n Gamma({N})"
    if d is not None:
        f = _cache_file(d, lam, N)
        if f.exists():
            return Subgroup.from_json(f.read_text(), name)
    G = level_subgroup(_lambda_matrix(lam), N)
    if d is not None:
        d.mkdir(parents=True, exist_ok=True)
        _cache_file(d, lam, N).write_text(G.to_json())
    return G


# --- sweep --------------------------------------------------------------------

SWEEP_COLUMNS = ["lambda", "level", "index", "qs_constant", "qs_constant_float", "cr_distortion",
                 "non_moebius", "witness", "beltrami_diff", "beltrami_converged", "conj_powers",
                 "conj_ok", "error"]


@dataclass
class SweepConfig:
    lambdas: List[Fraction] = field(default_factory=lambda: [Fraction(x) for x in DEFAULT_LAMBDAS])
    levels: List[int] = field(default_factory=lambda: [2])
    seed: int = 0
    depth: int = GRID_DEPTH
    stride: int = 1
    beltrami: bool = True
    params: bc.DEParams = field(default_factory=bc.DEParams)
    out: Optional[str] = None
    jobs: int = 1

    def check(self) -> None:
        if not self.lambdas:
            raise ConfigError("no lambdas")
        for lam in self.lambdas:
            if lam <= 1:
                raise ConfigError("lambdas must exceed 1")
        if not self.levels or any(N < 2 for N in self.levels):
            raise ConfigError("levels must be integers >= 2")
        if self.stride < 1 or self.depth < 1:
            raise ConfigError("depth and stride must be positive")


def sweep_row(lam: Fraction, N: int, cfg: SweepConfig) -> dict:
    row = {"lambda": _q(lam), "level": N}
    try:
        G = cached_level_subgroup(lam, N)
        A = _lambda_matrix(lam)
        maps = whitehead_maps(A, G)
        rep = qs_report(maps.h, seed=cfg.seed, depth=cfg.depth, stride=cfg.stride)
        _, wit = moebius_deviation(maps.h, farey_vertices(6))
        row.update(index=G.index, qs_constant=_q(rep.m_estimate),
                   qs_constant_float=f"{float(rep.m_estimate):.9f}",
                   cr_distortion=f"{rep.cr_distortion:.9f}",
                   non_moebius=int(wit is not None), witness="" if wit is None else str(wit))
        verdicts = [orbitseq.cusp_conjugation([maps.h], y) for y in orbitseq.CHECK_CUSPS]
        row["conj_powers"] = ";".join(str(v.power) for v in verdicts)
        row["conj_ok"] = int(all(v.ok for v in verdicts))
        if cfg.beltrami:
            diff, ok = orbitseq.beltrami_difference(maps.g_A, maps.f_id, orbitseq.standard_points(A, G),
                                                     cfg.params)
            row["beltrami_diff"] = f"{diff:.9f}"
            row["beltrami_converged"] = int(ok)
        row["error"] = ""
    except Exception as exc:  # the row records the failure
        row["error"] = f"{type(exc).__name__}: {exc}"
    return {c: row.get(c, "") for c in SWEEP_COLUMNS}


def _row_job(args):
    lam, N, cfg = args
    return sweep_row(lam, N, cfg)


def run_sweep(cfg: SweepConfig) -> List[dict]:
    """One row per (lambda, N), ordered by decreasing lambda then increasing N."""
    cfg.check()
    jobs = [(lam, N, cfg) for lam in sorted(cfg.lambdas, reverse=True) for N in sorted(cfg.levels)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            return list(ex.map(_row_job, jobs))
    return [_row_job(j) for j in jobs]


def sweep_csv(rows: Sequence[dict], cfg: SweepConfig) -> str:
    buf = io.StringIO()
    buf.write(f"# seed={cfg.seed} grid_depth={cfg.depth} stride={cfg.stride} "
              f"quad_nodes={cfg.params.quad_nodes} fd_step={cfg.params.fd_step} "
              f"boundary_delta={cfg.params.boundary_delta}\r\n")
    buf.write("# qs_constant: exact symmetric-ratio maximum (p/q); cr_distortion: max |dlog cross-ratio| "
              "(nats); beltrami_diff: sup |mu| difference over the standard points (dimensionless)\r\n")
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\r\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def sweep_exit_code(rows: Sequence[dict]) -> int:
    if any(r["error"] for r in rows):
        return EXIT_INVARIANT
    if any(r["beltrami_converged"] == 0 for r in rows):
        return EXIT_NUMERIC
    if any(r["conj_ok"] == 0 or r["non_moebius"] == 0 for r in rows):
        return EXIT_INVARIANT
    return EXIT_OK


# --- rendering ----------------------------------------------------------------

def _f(v: float) -> str:
    return f"{round(v, 6) + 0.0:.6f}"


def _geodesic_path(x, y) -> str:
    u, v = to_disk(x), to_disk(y)
    # screen y points down
    start, end = f"M {_f(u.real)} {_f(-u.imag)}", f"{_f(v.real)} {_f(-v.imag)}"
    cross = u.real * v.imag - u.imag * v.real
    if abs(cross) < 1e-12:
        return f"{start} L {end}"
    # the circle through u, v orthogonal to the unit circle: centre (u+v)/(1+<u,v>)
    dot = u.real * v.real + u.imag * v.imag
    c = (u + v) / (1 + dot)
    r = abs(u - c)
    # counterclockwise around c in the math frame is clockwise on screen
    turn = (u - c).real * (v - c).imag - (u - c).imag * (v - c).real
    sweep = 0 if turn > 0 else 1
    return f"{start} A {_f(r)} {_f(r)} 0 0 {sweep} {end}"


def _edge_class(t: Tessellation, e: Edge) -> str:
    d = t.distinguished
    if e == Edge(d.tail, d.head):
        return "distinguished"
    if isinstance(t, Moved) and not t.base.is_edge(e):
        return "flipped"
    return "edge"


def render_svg(t: Tessellation, depth: int, out) -> int:
    """Write a Poincare-disk SVG of the depth-``depth`` window; returns the arc count."""
    if not 0 <= depth <= 12:
        raise ConfigError("depth must lie in 0..12")
    seen = {}
    for tri in enumerate_triangles(t, depth):
        for e in tri.edges():
            seen.setdefault(e, None)
    lines = ['<?xml version="1.0" encoding="UTF-8"?>',
             '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="-1.05 -1.05 2.1 2.1" '
             'width="800" height="800">',
             '<style>.edge{stroke:#333;stroke-width:0.003;fill:none}'
             '.distinguished{stroke:#c00;stroke-width:0.008;fill:none}'
             '.flipped{stroke:#06c;stroke-width:0.005;fill:none;stroke-dasharray:0.02 0.01}'
             '.boundary{stroke:#000;stroke-width:0.004;fill:none}</style>',
             '<circle class="boundary" cx="0" cy="0" r="1"/>']
    for e in seen:
        lines.append(f'<path class="{_edge_class(t, e)}" d="{_geodesic_path(e.x, e.y)}"/>')
    lines.append("</svg>")
    text = "\n".join(lines) + "\n"
    if hasattr(out, "write"):
        out.write(text)
    else:
        Path(out).write_text(text)
    return len(seen)


def build_tessellation(kind: str, lam: Optional[Fraction], level: Optional[int]) -> Tessellation:
    """``farey``: A(F); ``moved``: the orbit move by G_A(N); ``single``: one flipped edge."""
    A = _lambda_matrix(lam) if lam is not None else diag(1, 1)
    base = FareyImage(A)
    if kind == "farey":
        return base
    if kind not in ("moved", "single"):
        raise ConfigError(f"unknown tessellation {kind!r}")
    G = None
    if kind == "moved":
        G = cached_level_subgroup(lam or Fraction(2), level or 2)
    return Moved(base, G, Edge(base.push(L1.tail), base.push(L1.head)))


# --- profile ------------------------------------------------------------------

def run_profile(lam: Fraction, level: int, threshold: int, p: bc.DEParams, tri_depth: int = 3,
                orbit_depth: int = 12, tau0: complex = 1j) -> List[bc.ProfileRow]:
    G = cached_level_subgroup(lam, level)
    maps = whitehead_maps(_lambda_matrix(lam), G)
    orbit = bc.reference_orbit(G, tau0, orbit_depth)
    return bc.support_profile(maps.f_id, bc.standard_profile_points(tri_depth), threshold, orbit, p)


# --- CLI ------------------------------------------------------------------------

def _params_from(args, base: bc.DEParams) -> bc.DEParams:
    over = {}
    for name in ("quad_nodes", "newton_tol", "newton_max_iter", "fd_step", "boundary_delta"):
        v = getattr(args, name, None)
        if v is not None:
            over[name] = v
    try:
        return replace(base, **over)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _add_de_flags(p):
    p.add_argument("--quad-nodes", dest="quad_nodes", type=int)
    p.add_argument("--newton-tol", dest="newton_tol", type=float)
    p.add_argument("--newton-max-iter", dest="newton_max_iter", type=int)
    p.add_argument("--fd-step", dest="fd_step", type=float)
    p.add_argument("--boundary-delta", dest="boundary_delta", type=float)


def _csv_list(text: str) -> List[str]:
    return [s for s in (x.strip() for x in text.split(",")) if s]


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_sweep(args) -> int:
    conf = _load_config(args.config)
    lambdas = _csv_list(args.lambdas) if args.lambdas else conf.get("lambdas", list(DEFAULT_LAMBDAS))
    levels = _csv_list(args.levels) if args.levels else conf.get("levels", [2])
    try:
        levels = [int(N) for N in levels]
    except ValueError as exc:
        raise ConfigError(f"bad level list {levels}") from exc
    base = replace(bc.DEParams(), **conf.get("params", {})) if conf.get("params") else bc.DEParams()
    cfg = SweepConfig(lambdas=[parse_lambda(x) for x in lambdas], levels=levels,
                      seed=args.seed if args.seed is not None else conf.get("seed", 0),
                      depth=args.depth or conf.get("depth", GRID_DEPTH),
                      stride=args.stride or conf.get("stride", 1),
                      beltrami=not args.no_beltrami and conf.get("beltrami", True),
                      params=_params_from(args, base), out=args.out or conf.get("out"),
                      jobs=args.jobs or conf.get("jobs", 1))
    rows = run_sweep(cfg)
    _emit(sweep_csv(rows, cfg), cfg.out)
    return sweep_exit_code(rows)


def cmd_render(args) -> int:
    lam = parse_lambda(args.lam) if args.lam else None
    t = build_tessellation(args.tessellation, lam, args.level)
    if args.out:
        n = render_svg(t, args.depth, args.out)
    else:
        n = render_svg(t, args.depth, sys.stdout)
    print(f"arcs={n}", file=sys.stderr)
    return EXIT_OK


def cmd_profile(args) -> int:
    lam = parse_lambda(args.lam)
    if args.threshold < 1:
        raise ConfigError("threshold N must be positive")
    rows = run_profile(lam, args.level, args.threshold, _params_from(args, bc.DEParams()),
                       args.tri_depth, args.orbit_depth, complex(0, args.z0_height))
    _emit(bc.profile_csv(rows), args.out)
    print(f"rank_separation={bc.rank_separation(rows):.6f}", file=sys.stderr)
    return EXIT_OK if all(r.converged for r in rows) else EXIT_NUMERIC


def cmd_orbit(args) -> int:
    lambdas = _csv_list(args.lambdas) if args.lambdas else list(DEFAULT_STAGE_LAMBDAS)
    for x in lambdas:
        parse_lambda(x)
    try:
        levels = [int(N) for N in _csv_list(args.levels)] if args.levels else list(DEFAULT_STAGE_LEVELS)
        budgets = [float(Fraction(b)) for b in _csv_list(args.budgets)] if args.budgets else None
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(str(exc)) from exc
    if args.stages < 0:
        raise ConfigError("stages must be non-negative")
    log = (lambda m: print(m, file=sys.stderr)) if args.verbose else None
    try:
        sched = orbitseq.build_schedule(args.stages, lambdas, levels, _params_from(args, bc.DEParams()),
                                        budgets=budgets, log=log)
        state = orbitseq.compose_and_trace(sched.entries, seed=args.seed, stride=args.stride, log=log)
    except orbitseq.ScheduleError as exc:
        _emit(json.dumps({"error": str(exc)}, sort_keys=True, indent=2) + "\n", args.out)
        return EXIT_INVARIANT
    _emit(orbitseq.report_json(sched, state), args.out)
    if not sched.complete:
        return EXIT_NUMERIC
    if not state.conjugation_ok or not state.trace_non_increasing():
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_tables_cache(args) -> int:
    d = Path(args.dir) if args.dir else cache_dir()
    if d is None:
        raise ConfigError(f"set {CACHE_ENV} or pass --dir")
    if args.action == "list":
        for f in sorted(d.glob("GA_*.json")) if d.exists() else []:
            doc = json.loads(f.read_text())
            print(f"{f.name}\tindex={doc['index']}")
    elif args.action == "clear":
        for f in sorted(d.glob("GA_*.json")) if d.exists() else []:
            f.unlink()
    else:
        if not args.lam or not args.level:
            raise ConfigError("build needs --lambda and --level")
        G = cached_level_subgroup(parse_lambda(args.lam), args.level, d)
        print(f"index={G.index}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="whitehead", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="qs / Beltrami table over lambda and level")
    s.add_argument("--config")
    s.add_argument("--lambdas")
    s.add_argument("--levels")
    s.add_argument("--seed", type=int)
    s.add_argument("--depth", type=int)
    s.add_argument("--stride", type=int)
    s.add_argument("--jobs", type=int)
    s.add_argument("--no-beltrami", action="store_true")
    s.add_argument("--out")
    _add_de_flags(s)
    s.set_defaults(func=cmd_sweep)

    r = sub.add_parser("render", help="SVG of a tessellation window")
    r.add_argument("--tessellation", choices=("farey", "moved", "single"), default="farey")
    r.add_argument("--lambda", dest="lam")
    r.add_argument("--level", type=int)
    r.add_argument("--depth", type=int, default=3)
    r.add_argument("--out")
    r.set_defaults(func=cmd_render)

    p = sub.add_parser("profile", help="support scan of |mu| against the reference orbit")
    p.add_argument("--lambda", dest="lam", default="2")
    p.add_argument("--level", type=int, default=2)
    p.add_argument("--threshold", type=int, default=10)
    p.add_argument("--tri-depth", type=int, default=3)
    p.add_argument("--orbit-depth", type=int, default=12)
    p.add_argument("--z0-height", type=float, default=1.0)
    p.add_argument("--out")
    _add_de_flags(p)
    p.set_defaults(func=cmd_profile)

    o = sub.add_parser("orbit", help="budgeted composition schedule and trace")
    o.add_argument("--stages", type=int, default=3)
    o.add_argument("--lambdas")
    o.add_argument("--levels")
    o.add_argument("--budgets")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--stride", type=int, default=1)
    o.add_argument("--verbose", action="store_true")
    o.add_argument("--out")
    _add_de_flags(o)
    o.set_defaults(func=cmd_orbit)

    t = sub.add_parser("tables", help="coset table utilities")
    tsub = t.add_subparsers(dest="tables_command", required=True)
    c = tsub.add_parser("cache", help="manage the coset table cache")
    c.add_argument("action", choices=("list", "clear", "build"))
    c.add_argument("--dir")
    c.add_argument("--lambda", dest="lam")
    c.add_argument("--level", type=int)
    c.set_defaults(func=cmd_tables_cache)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except orbitseq.ScheduleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
