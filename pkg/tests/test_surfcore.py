import random
from fractions import Fraction

import pytest

from fixtures import (
    broken_self_glued,
    disconnected_pair,
    l_origami,
    pillowcase,
    rect_torus,
    square_torus,
    two_square_cylinder_torus,
)
from quadsurf.errors import SegmentThroughConePoint
from quadsurf.exactnum import qe, vec
from quadsurf.surgery import insert_points
from quadsurf.surfcore import (
    Surface,
    in_sector_half_open,
    insert_point,
    sector_halfturn_count,
    slit,
    triangulate,
)


def test_sector_counts_square_corners():
    # four quarter-turn sectors chained around the torus vertex: total 2
    dirs = [vec(1, 0), vec(0, 1), vec(-1, 0), vec(0, -1)]
    total = sum(
        sector_halfturn_count(dirs[i], dirs[(i + 1) % 4]) for i in range(4)
    )
    assert total == 2


def test_sector_membership_half_open():
    u, w = vec(1, 0), vec(0, 1)
    assert in_sector_half_open(u, w, vec(1, 0))  # start ray included
    assert not in_sector_half_open(u, w, vec(0, 1))  # end ray excluded
    assert in_sector_half_open(u, w, vec(1, 1))
    assert not in_sector_half_open(u, w, vec(-1, 1))
    # straight angle
    assert in_sector_half_open(vec(1, 0), vec(-1, 0), vec(0, 1))
    assert not in_sector_half_open(vec(1, 0), vec(-1, 0), vec(0, -1))
    # reflex sector
    assert in_sector_half_open(vec(0, 1), vec(1, 0), vec(-1, -1))
    assert not in_sector_half_open(vec(0, 1), vec(1, 0), vec(1, 1))


def test_torus_valid_and_flat():
    t = square_torus()
    assert t.validate() == []
    pts, st = t.cone_points()
    assert pts == ()
    assert st.genus == 1 and st.orders == () and st.is_square
    assert t.area == qe(1)


def test_self_glued_edge_rejected():
    diags = broken_self_glued().validate()
    assert any("glued to itself" in d for d in diags)


def test_disconnected_rejected():
    diags = disconnected_pair().validate()
    assert any("not connected" in d for d in diags)


def test_nonsimple_polygon_rejected():
    # bowtie: edges cross
    poly = [vec(1, 1), vec(0, -1), vec(-1, 1), vec(0, -1)]
    s = Surface(1, [poly], {})
    assert any("intersect" in d or "oriented" in d for d in s.validate())


def test_pillowcase_structure():
    p = pillowcase()
    assert p.validate() == []
    pts, st = p.cone_points()
    assert st.genus == 0
    assert sorted(pt.order for pt in pts) == [-1, -1, -1, -1]
    assert not st.is_square


def test_l_origami_stratum():
    s = l_origami()
    assert s.validate() == []
    pts, st = s.cone_points()
    assert st.genus == 2
    assert st.orders == (4,)  # quadratic order of the square of the form
    assert st.is_square
    assert st.abelian_orders == (2,)
    assert str(st) == "Omega_2(2)"
    assert s.area == qe(3)


def test_holonomy_witness_on_pillowcase():
    ok, witness = pillowcase().holonomy_is_square()
    assert not ok
    assert witness is not None and len(witness) >= 1


def test_holonomy_shuffle_invariance():
    s = l_origami()
    base = s.holonomy_is_square()[0]
    rng = random.Random(7)
    items = list(s.gluing.items())
    for _ in range(5):
        rng.shuffle(items)
        s2 = Surface(s.field_d, s.polygons, dict(items), s.marked, s.allow_poles)
        assert s2.holonomy_is_square()[0] == base


def test_triangulate_torus():
    t, prov = triangulate(square_torus())
    assert t.validate() == []
    assert t.n_polygons == 2
    assert set(prov.values()) == {0}
    pts, st = t.cone_points()
    assert st == square_torus().stratum()


def test_triangulate_l_polygon_ear_count():
    s = l_origami()
    t, prov = triangulate(s)
    # 8-gon clips into n-2 = 6 triangles
    assert t.n_polygons == 6
    assert t.stratum() == s.stratum()


def test_triangulate_preserves_cone_points():
    for s in (square_torus(), pillowcase(), l_origami()):
        t, _ = triangulate(s)
        a = sorted((p.order, p.marked) for p in s.cone_points()[0])
        b = sorted((p.order, p.marked) for p in t.cone_points()[0])
        assert a == b


def test_insert_point_interior():
    s, corner = insert_point(square_torus(), (0, vec(Fraction(1, 2), Fraction(1, 2))))
    assert s.validate() == []
    assert s.stratum().genus == 1
    pts, _ = s.cone_points()
    marked = [p for p in pts if p.marked]
    assert len(marked) == 1 and marked[0].angle_multiple == 2


def test_insert_point_on_edge():
    s, corner = insert_point(square_torus(), (0, vec(Fraction(1, 3), 0)))
    assert s.validate() == []
    pts, st = s.cone_points()
    assert st.genus == 1
    assert len([p for p in pts if p.marked]) == 1


def test_insert_four_qm22_points():
    pts = [
        vec(Fraction(1, 4), 0),
        vec(Fraction(3, 4), 0),
        vec(Fraction(1, 4), Fraction(1, 2)),
        vec(Fraction(3, 4), Fraction(1, 2)),
    ]
    s, refs = insert_points(square_torus(), 0, pts)
    assert len(refs) == 4
    assert s.validate() == []
    cone, st = s.cone_points()
    assert st.genus == 1
    assert len([p for p in cone if p.marked]) == 4


def test_insert_existing_vertex_flags_it():
    s = square_torus()
    s2, corner = insert_point(s, (0, vec(0, 0)))
    assert s2.n_polygons == s.n_polygons
    assert s2.is_marked_class(s2.vertex_class_of(corner))


def test_slit_single_segment_on_torus():
    s, refs = insert_points(
        square_torus(),
        0,
        [vec(Fraction(1, 4), Fraction(1, 4)), vec(Fraction(1, 4), Fraction(1, 2))],
    )
    start = refs[0]
    res = slit(s, [(start, [vec(0, Fraction(1, 4))])])
    assert res.surface.has_boundary
    (side_a, side_b) = res.sides[0]
    assert len(side_a) >= 1 and len(side_a) == len(side_b)
    diags = res.surface.validate()
    assert any("unglued" in d for d in diags)


def test_slit_through_cone_point_rejected():
    s = l_origami()
    # mark a start point at (1/2, 1/2), then aim a segment through the zero at (1,1)
    s, c1 = insert_point(s, (0, vec(Fraction(1, 2), Fraction(1, 2))))
    with pytest.raises(SegmentThroughConePoint):
        slit(s, [(c1, [vec(1, 1)])])


def test_gauss_bonnet_on_fixtures():
    for s in (square_torus(), pillowcase(), l_origami(), two_square_cylinder_torus()):
        total = sum(
            s.class_angle_multiple(cls) - 2 for cls in s.vertex_classes
        )
        assert total == 4 * s.genus - 4


def test_develop_torus_lattice():
    placements, jumps = rect_torus(qe(2), qe(1)).develop()
    assert placements[0][0] == 1
    vs = [j for (_e, j) in jumps]
    assert len(vs) == 2
    assert sorted(v.sort_key() for v in vs) == sorted(
        v.sort_key() for v in (vec(2, 0), vec(0, 1))
    ) or all(j for j in vs)
