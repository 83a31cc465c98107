from fractions import Fraction

import pytest

from fixtures import l_origami, rect_torus, square_torus
from quadsurf.builders import LShapeSpec, SlitSpec, build_lshape, build_qm22
from quadsurf.errors import NotATorus
from quadsurf.exactnum import QuadExt, qe, vec
from quadsurf.flatdyn import (
    NotPeriodic,
    arithmeticity_certificate,
    cylinder_decomposition,
    rational_marked_points,
    saddle_connections,
    _march_ray,
    _owning_corner_static,
)
from quadsurf.exactnum import V_ZERO
from quadsurf.surfcore import Surface
from quadsurf.surgery import insert_points


@pytest.fixture(scope="module")
def swiss_cross():
    return build_lshape(LShapeSpec(2, 0)).surface


def marked_torus():
    s, _ = insert_points(
        square_torus(), 0, [vec(Fraction(1, 2), Fraction(1, 2))]
    )
    return s


def test_torus_saddle_connections_bound_one():
    scs = saddle_connections(marked_torus(), 1)
    # two geometric segments; +- set is the four unit vectors
    assert len(scs.connections) == 2
    keys = scs.pm_holonomy_set()
    expected = {
        vec(1, 0).sort_key(),
        vec(-1, 0).sort_key(),
        vec(0, 1).sort_key(),
        vec(0, -1).sort_key(),
    }
    assert keys == expected


def test_saddle_connections_reverse_trace_oracle():
    # oracle: re-tracing each connection from its far end must land back at
    # the start vertex with the same squared length
    scs = saddle_connections(marked_torus(), 2)
    tri = scs.surface
    blocked = lambda cls: tri.class_angle_multiple(cls) != 2 or tri.is_marked_class(cls)
    for sc in scs.connections:
        (c2, d2) = sc.end_ray
        hits = _march_ray(tri, c2, d2, V_ZERO, 1, sc.length2, blocked)
        assert hits, "reverse trace found nothing"
        last = hits[-1]
        assert last.position.norm2() == sc.length2
        assert tri.vertex_class_of(last.corner) == tri.vertex_class_of(
            sc.start_ray[0]
        )


def test_swiss_cross_shortest_horizontal(swiss_cross):
    # frozen from the cross dimensions: lengths 1 and sqrt(2)-1, i.e.
    # squared lengths 1 and 3-2*sqrt(2)
    scs = saddle_connections(swiss_cross, 2)
    horiz = {
        sc.length2
        for sc in scs.connections
        if sc.holonomy.y.sign() == 0
    }
    assert qe(1) in horiz
    assert qe(3, -2, 2) in horiz
    shortest = min(horiz)
    assert shortest == qe(3, -2, 2)


def test_swiss_cross_sc_set_symmetric(swiss_cross):
    scs = saddle_connections(swiss_cross, 2)
    keys = scs.pm_holonomy_set()
    assert all((vec(0, 0) - _unkey(k)).sort_key() in keys for k in keys)


def _unkey(key):
    xa, xb, xd, ya, yb, yd = key
    return vec(QuadExt.make(xa, xb, xd), QuadExt.make(ya, yb, yd))


def test_torus_cylinder():
    cd = cylinder_decomposition(square_torus(), vec(1, 0))
    assert len(cd.cylinders) == 1
    c = cd.cylinders[0]
    assert c.circumference == qe(1) and c.height == qe(1)
    assert cd.total_area_check()


def test_l_origami_cylinders_conserve_area():
    for d in (vec(1, 0), vec(0, 1), vec(1, 1)):
        cd = cylinder_decomposition(l_origami(), d)
        assert not isinstance(cd, NotPeriodic)
        assert cd.total_area_check()


def test_swiss_cross_cylinders(swiss_cross):
    cd_h = cylinder_decomposition(swiss_cross, vec(1, 0))
    cd_v = cylinder_decomposition(swiss_cross, vec(0, 1))
    assert len(cd_h.cylinders) == 2 and len(cd_v.cylinders) == 2
    for cd in (cd_h, cd_v):
        assert cd.total_area_check()
        m1, m2 = (c.modulus for c in cd.cylinders)
        assert (m1 / m2).is_rational


def test_not_periodic_budget(swiss_cross):
    # an eventually-irrational direction on a Veech surface is aperiodic:
    # with a small budget the decomposition reports undecided, not an error
    out = cylinder_decomposition(swiss_cross, vec(1, 1), budget=qe(3))
    if isinstance(out, NotPeriodic):
        assert out.budget2 == qe(9)
    else:
        assert out.total_area_check()


def test_rational_marked_points_examples():
    pts = [
        vec(Fraction(1, 4), 0),
        vec(Fraction(3, 4), 0),
        vec(Fraction(1, 4), Fraction(1, 2)),
        vec(Fraction(3, 4), Fraction(1, 2)),
    ]
    s, _ = insert_points(square_torus(), 0, pts)
    assert rational_marked_points(s)
    # empty set is vacuously rational
    assert rational_marked_points(square_torus())


def test_irrational_marked_point():
    root2 = QuadExt.make(0, Fraction(1, 2), 2)
    s = Surface(
        2,
        [[vec(1, 0), vec(0, 1), vec(-1, 0), vec(0, -1)]],
        {
            (0, 0): ((0, 2), 1),
            (0, 2): ((0, 0), 1),
            (0, 1): ((0, 3), 1),
            (0, 3): ((0, 1), 1),
        },
    )
    s, _ = insert_points(s, 0, [vec(root2, qe(0))])
    assert not rational_marked_points(s)


def test_rational_marked_points_needs_torus(swiss_cross):
    with pytest.raises(NotATorus):
        rational_marked_points(swiss_cross)


def test_arithmeticity_qm22_and_cross(swiss_cross):
    spec = SlitSpec(
        vec(Fraction(1, 4), 0),
        vec(Fraction(1, 4), Fraction(1, 2)),
        vec(0, Fraction(1, 2)),
    )
    x22, _ = build_qm22(spec)
    cert = arithmeticity_certificate(x22)
    assert cert.arithmetic and cert.span.rank == 2
    assert cert.used_double_cover
    cert2 = arithmeticity_certificate(swiss_cross)
    assert not cert2.arithmetic and cert2.span.rank >= 3
    assert any(v.x.b or v.y.b for v in cert2.witness_vectors())


def test_arithmeticity_gl2_natural(swiss_cross):
    # instance-level GL2(Q)-naturality: shear all coordinates rationally
    def shear(s: Surface) -> Surface:
        polys = [[vec(v.x + v.y, v.y) for v in p] for p in s.polygons]
        return Surface(s.field_d, polys, s.gluing, s.marked, s.allow_poles)

    for s in (square_torus(), swiss_cross):
        a = arithmeticity_certificate(s).arithmetic
        b = arithmeticity_certificate(shear(s)).arithmetic
        assert a == b


def test_span_of_horizontal_periods_is_degenerate(swiss_cross):
    # the horizontal saddle periods of the cross span a rank-2 collinear
    # module: the irrational-ratio certificate, not a planar lattice
    from quadsurf.exactnum import solve_rational_span

    scs = saddle_connections(swiss_cross, 4)
    horiz = [
        sc.holonomy for sc in scs.connections if sc.holonomy.y.sign() == 0
    ]
    assert horiz
    res = solve_rational_span(horiz)
    assert res.rank == 2 and res.collinear
    assert not res.lattice_like
