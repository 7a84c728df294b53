import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from whitehead.charmap import (
    CharMap, MoebiusEval, PiecewiseMoebius, RefinementBoundExceeded, WalkBoundExceeded, compose,
    conjugate_by, cusp_data, cusp_slope_empirical, cusp_slope_predicted, fan_symmetry,
    integral_conjugation, piecewise_single_flip, primitive_parabolic, random_vertices,
    single_flip_composition, single_flip_tessellation, walk_bound,
)
from whitehead.modgroup import congruence_subgroup
from whitehead.moebius import (
    IDENTITY, INF, ONE, ZERO, BoundaryPoint, Edge, MoebiusMap, apply, between, boundary_angle,
    bp, cyclic_order, diag, in_psl2z,
)
from whitehead.qsmetric import farey_vertices
from whitehead.tessellation import FareyImage, Moved

F = FareyImage()
rationals = st.builds(lambda p, q: BoundaryPoint(p, q), st.integers(-400, 400), st.integers(1, 300))


@given(rationals)
def test_identity_map(v):
    assert CharMap(F, F)(v) == v


@pytest.mark.parametrize("A", [diag(2, 1), diag(3, 2), diag(9, 8)])
def test_farey_image_map_is_the_inverse_translation(A):
    h = CharMap(FareyImage(A), F)
    for v in random_vertices(30, seed=1):
        assert h(v) == apply(A.inverse(), v)


@given(rationals)
def test_gamma2_move_inverse(v):
    f = CharMap(Moved(F, congruence_subgroup(2), Edge(INF, 1)), F)
    assert f.inverse()(f(v)) == v


def test_map_preserves_cyclic_order():
    f = CharMap(Moved(F, congruence_subgroup(2), Edge(INF, 1)), F)
    vs = random_vertices(25, seed=3)
    for a, b, c in zip(vs, vs[1:], vs[2:]):
        if len({a, b, c}) == 3:
            assert cyclic_order(a, b, c) == cyclic_order(f(a), f(b), f(c))


def test_fixes_distinguished_edge(maps_2_2):
    for h in (maps_2_2.f_id, maps_2_2.g_A, maps_2_2.h):
        assert h(ZERO) == ZERO and h(INF) == INF


def test_equivariance(maps_2_2):
    # f gamma f^-1 preserves F, hence is integral, for every symmetry gamma of the move
    f = maps_2_2.f_id
    for g in maps_2_2.G.schreier_generators():
        d = conjugate_by(f, g)
        assert d is not None and in_psl2z(d)


def test_conjugate_by_rejects_non_symmetries():
    f = CharMap(single_flip_tessellation(), F)
    assert conjugate_by(f, MoebiusMap(1, 1, 0, 1)) is None
    # the full Gamma(2) move is a rescaled copy of F, so T survives there
    g = CharMap(Moved(F, congruence_subgroup(2), Edge(INF, 1)), F)
    assert conjugate_by(g, MoebiusMap(1, 1, 0, 1)) == MoebiusMap(2, 1, 0, 2)


def test_non_vertices_are_rejected():
    f = CharMap(F, F)
    v = bp("355/113")
    assert f(v) == v
    assert walk_bound(v) > 0


def test_eval_angle_and_interval():
    f = CharMap(Moved(F, congruence_subgroup(2), Edge(INF, 1)), F)
    lo, hi = f.eval_interval(math.sqrt(2), 1e-6)
    th = f.eval_angle(boundary_angle(math.sqrt(2)), 1e-6)
    assert boundary_angle(lo) <= th <= boundary_angle(hi)
    assert 0 < f.eval_angle(1.0, 1e-6) <= 2 * math.pi
    with pytest.raises(ValueError):
        f.eval_interval(0.3, 0)
    with pytest.raises(RefinementBoundExceeded):
        f.eval_interval(math.pi, 1e-9, max_steps=3)


def test_eval_angle_is_monotone():
    f = CharMap(Moved(F, congruence_subgroup(2), Edge(INF, 1)), F)
    ths = [0.1 + 0.3 * k for k in range(20)]
    vals = [f.eval_angle(t, 1e-7) for t in ths]
    assert vals == sorted(vals)


def test_vertex_eval_matches_angle_eval():
    f = CharMap(Moved(F, congruence_subgroup(2), Edge(INF, 1)), F)
    for v in random_vertices(10, seed=5):
        assert math.isclose(f.eval_angle(boundary_angle(v), 1e-8), boundary_angle(f(v)), abs_tol=1e-7)


def test_moebius_eval():
    m = MoebiusEval(diag(2, 1))
    assert m(bp(3)) == bp(6)
    assert math.isclose(m.eval_angle(boundary_angle(1.5)), boundary_angle(3.0))


def test_piecewise_single_flip_matches_walk():
    for A in (IDENTITY, diag(2, 1), diag(3, 2)):
        p = piecewise_single_flip(A)
        h = CharMap(single_flip_tessellation(A), FareyImage(A))
        assert p.is_continuous()
        for v in farey_vertices(7, radius=None):
            assert p(v) == h(v)


def test_piecewise_algebra():
    p = piecewise_single_flip()
    q = p.compose(p.inverse())
    assert len(q.pieces) == 1 and q.pieces[0][2].is_identity()
    with pytest.raises(ValueError):
        PiecewiseMoebius([(ZERO, ONE, IDENTITY)])


def test_single_flip_composition_is_identity_off_the_flips():
    h = single_flip_composition(diag(2, 1))
    assert h.is_continuous()
    assert all(h(v) == v for v in farey_vertices(7, radius=None) if v.is_inf or v.to_fraction() <= 0)
    assert h(bp(2)) == bp("4/3") and h(bp(4)) == bp(3)


def test_parabolics():
    for y in (INF, ZERO, ONE, bp("2/3")):
        P = primitive_parabolic(y)
        assert in_psl2z(P) and apply(P, y) == y and not P.is_identity()
    assert primitive_parabolic(INF, diag(2, 1)) == MoebiusMap(1, 2, 0, 1)


def test_fan_symmetry_of_a_move():
    t = Moved(F, congruence_subgroup(2), Edge(INF, 1))
    g = fan_symmetry(t, INF)
    assert g is not None and apply(g, INF) == INF


def test_cusp_data_counts():
    cd = cusp_data(F, INF, congruence_subgroup(2))
    assert cd.k == cd.p == 2 and cd.a == 0
    t = Moved(F, congruence_subgroup(2), Edge(INF, 1))
    cd = cusp_data(t, INF)
    assert cd.k == 1 and cd.p == 2 and cd.a == -1
    with pytest.raises(ValueError):
        cusp_data(single_flip_tessellation(), INF)


@pytest.mark.parametrize("y", [INF, ZERO, ONE])
def test_cusp_slopes(maps_2_2, y):
    f = maps_2_2.f_id
    assert abs(cusp_slope_empirical(f, y) - float(cusp_slope_predicted(f, y))) < 1e-2


def test_integral_conjugation(maps_2_2):
    m = maps_2_2
    ic = integral_conjugation(m.f_id, m.g_A, m.G, m.A)
    assert ic.index == 3 and len(ic.pairs) == len(ic.word_gens)
    for d, e in ic.pairs:
        assert in_psl2z(e) and conjugate_by(m.h, d) == e


def test_compose():
    a, b = MoebiusEval(diag(2, 1)), MoebiusEval(diag(3, 1))
    assert compose(a, b)(bp(1)) == bp(6)
