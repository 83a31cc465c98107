from fractions import Fraction

import pytest

from fixtures import (
    l_origami,
    pillowcase,
    rect_torus,
    square_torus,
    two_square_cylinder_torus,
)
from quadsurf.errors import NoHyperellipticInvolution, NotInvolution
from quadsurf.exactnum import qe, vec
from quadsurf.involutions import (
    are_isomorphic,
    delaunay,
    delaunay_cells,
    erase_regular_vertices,
    find_pm_automorphisms,
    fixed_points,
    hyperelliptic_involution,
    incircle,
    involutions_of,
)
from quadsurf.surfcore import Surface
from quadsurf.surgery import insert_points


def test_incircle_signs():
    a, b, c = vec(0, 0), vec(1, 0), vec(0, 1)
    assert incircle(a, b, c, vec(Fraction(1, 4), Fraction(1, 4))) > 0
    assert incircle(a, b, c, vec(2, 2)) < 0
    assert incircle(a, b, c, vec(1, 1)) == 0  # concyclic


def test_delaunay_cells_square_torus():
    cells = delaunay_cells(square_torus())
    # the square is one co-circular cell
    assert cells.n_polygons == 1
    assert len(cells.polygons[0]) == 4
    assert cells.stratum() == square_torus().stratum()


def test_delaunay_torus_tie_break():
    t, prov = delaunay(square_torus())
    assert t.n_polygons == 2
    assert all(len(p) == 3 for p in t.polygons)
    assert t.stratum() == square_torus().stratum()


def test_delaunay_idempotent():
    for s in (square_torus(), l_origami(), two_square_cylinder_torus()):
        t1, _ = delaunay(s)
        t2, _ = delaunay(t1)
        assert t1.polygons == t2.polygons
        assert t1.gluing == t2.gluing


def test_delaunay_no_flippable_edge_left():
    # every internal edge of the Delaunay output satisfies incircle <= 0
    from quadsurf.surgery import Work
    from quadsurf.involutions import _develop_quad

    t, _ = delaunay(l_origami())
    w = Work.from_surface(t)
    for e in list(w.glue):
        e2 = w.glue[e][0]
        if e > e2 or w.cell_of[e] == w.cell_of[e2]:
            continue
        O, Q, P1, P2, _s, _ = _develop_quad(w, e)
        assert incircle(O, P1, P2, Q) <= 0


def test_torus_minus_id_automorphisms_exist():
    autos = find_pm_automorphisms(square_torus(), -1)
    assert autos
    for a in autos:
        assert a.verify() == []
    invs = involutions_of(square_torus(), -1)
    assert invs
    locus = fixed_points(invs[0])
    assert locus.count == 4  # order-2 points of the lattice


def test_plus_id_automorphisms_contain_identity():
    autos = find_pm_automorphisms(square_torus(), 1)
    assert any(a.is_identity() for a in autos)


def test_composition_closure():
    invs = involutions_of(square_torus(), -1)
    plus = find_pm_automorphisms(square_torus(), 1)
    keys = {tuple(sorted(a.edge_map.items())) for a in plus}
    for a in invs:
        for b in invs:
            comp = a.compose(b)
            assert tuple(sorted(comp.edge_map.items())) in keys


def test_l_origami_hyperelliptic():
    s = l_origami()
    h = hyperelliptic_involution(s)
    assert h.derivative == -1
    assert h.verify() == []
    locus = fixed_points(h)
    assert locus.count == 6  # 2g+2 for genus 2
    # the cone point is among the fixed vertices
    cs = h.surface
    cone_classes = [
        cls for cls in cs.vertex_classes if cs.class_angle_multiple(cls) == 6
    ]
    assert len(cone_classes) == 1
    assert cone_classes[0] in locus.vertices


def test_fixed_points_requires_involution():
    ident = [a for a in find_pm_automorphisms(square_torus(), 1) if a.is_identity()]
    with pytest.raises(NotInvolution):
        fixed_points(ident[0])


def test_erase_regular_vertices_roundtrip():
    s, _ = insert_points(
        square_torus(), 0, [vec(Fraction(1, 3), Fraction(1, 5))]
    )
    # unmark the point so it becomes erasable
    bare = Surface(s.field_d, s.polygons, s.gluing, frozenset(), s.allow_poles)
    out = erase_regular_vertices(bare)
    assert out.validate() == []
    assert out.stratum() == square_torus().stratum()
    ok, _m = are_isomorphic(out, square_torus())
    assert ok


def test_are_isomorphic_reindexed_torus():
    t = square_torus()
    # same torus, polygon edge list rotated
    sq = [vec(0, 1), vec(-1, 0), vec(0, -1), vec(1, 0)]
    g = {
        (0, 3): ((0, 1), 1),
        (0, 1): ((0, 3), 1),
        (0, 0): ((0, 2), 1),
        (0, 2): ((0, 0), 1),
    }
    t2 = Surface(1, [sq], g)
    ok, m = are_isomorphic(t, t2)
    assert ok and m


def test_are_isomorphic_distinguishes_strata():
    ok, _ = are_isomorphic(square_torus(), l_origami())
    assert not ok


def test_are_isomorphic_distinguishes_scaled_tori():
    ok, _ = are_isomorphic(square_torus(), rect_torus(qe(2), qe(1)))
    assert not ok


def test_marked_points_matter_for_isomorphism():
    s1, _ = insert_points(square_torus(), 0, [vec(Fraction(1, 2), Fraction(1, 2))])
    ok, _ = are_isomorphic(s1, square_torus())
    assert not ok
    s2, _ = insert_points(square_torus(), 0, [vec(Fraction(1, 4), Fraction(1, 4))])
    # both are a torus with one marked point: translation moves it
    ok2, _ = are_isomorphic(s1, s2)
    assert ok2


def test_pillowcase_automorphisms_valid():
    for a in find_pm_automorphisms(pillowcase(), -1):
        assert a.verify() == []
