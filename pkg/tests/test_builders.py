from fractions import Fraction

import pytest

from quadsurf.builders import (
    LShapeSpec,
    SlitSpec,
    StratumPattern,
    admissible_weierstrass_pairs,
    build_cuts_double_cover,
    build_lshape,
    build_qm22,
    cut_and_fold_qm1111,
    enumerate_square_tiled,
    first_square_tiled,
    fold_torus_with_marks,
)
from quadsurf.covers import main_construction
from quadsurf.errors import (
    BadParameters,
    BoundTooLarge,
    PathThroughWeierstrass,
    WrongStratum,
)
from quadsurf.exactnum import qe, vec
from quadsurf.flatdyn import rational_marked_points
from quadsurf.involutions import are_isomorphic


@pytest.fixture(scope="module")
def cross20():
    return build_lshape(LShapeSpec(2, 0))


@pytest.fixture(scope="module")
def z_omega3(cross20):
    return build_cuts_double_cover(cross20.surface, 1, 2)


@pytest.fixture(scope="module")
def hshape(z_omega3):
    return cut_and_fold_qm1111(z_omega3.surface)


def _std_spec():
    return SlitSpec(
        vec(Fraction(1, 4), 0),
        vec(Fraction(1, 4), Fraction(1, 2)),
        vec(0, Fraction(1, 2)),
    )


def test_build_qm22_standard():
    s, prov = build_qm22(_std_spec())
    pts, st = s.cone_points()
    assert st.genus == 2 and st.orders == (2, 2) and not st.is_square
    assert prov.data["matching"] == "involution-fold"


def test_build_qm22_colinear_variant():
    # all four points on the vertical line x = 1/2
    spec = SlitSpec(
        vec(Fraction(1, 2), Fraction(1, 8)),
        vec(Fraction(1, 2), Fraction(3, 8)),
        vec(0, Fraction(1, 4)),
    )
    s, _prov = build_qm22(spec)
    st = s.stratum()
    assert st.genus == 2 and st.orders == (2, 2) and not st.is_square


def test_build_qm22_wrapping_slits():
    spec = SlitSpec(
        vec(Fraction(1, 3), Fraction(2, 3)),
        vec(Fraction(1, 3), Fraction(1, 6)),
        vec(0, Fraction(1, 2)),
    )
    s, _ = build_qm22(spec)
    assert s.stratum().orders == (2, 2)


def test_build_qm22_bad_spec():
    with pytest.raises(BadParameters):
        SlitSpec(vec(0, 0), vec(0, Fraction(1, 2)), vec(0, Fraction(1, 3))).validate()


def test_qm22_pipeline_invariants():
    s, _ = build_qm22(_std_spec())
    pipe = main_construction(s)
    assert pipe.genera == (2, 3, 1)
    assert len(pipe.Bg) == 4
    assert rational_marked_points(pipe.Z)


def test_lshape_20(cross20):
    res = cross20
    assert res.lam == qe(0, 1, 2)
    st = res.surface.stratum()
    assert st.genus == 2 and st.is_square and st.abelian_orders == (2,)
    assert len(res.weierstrass) == 6
    assert not res.degenerate and not res.arithmetic
    # W6 is the cone point: the last label sits at the 6pi vertex
    kinds = {wp.label: wp.kind for wp in res.weierstrass}
    assert kinds[6] == "vertex"


def test_lshape_degenerate_2_minus1():
    res = build_lshape(LShapeSpec(2, -1))
    assert res.lam == qe(1)
    assert res.degenerate and res.arithmetic


def test_lshape_rejects_odd_b_with_e1():
    with pytest.raises(BadParameters):
        build_lshape(LShapeSpec(3, 1))
    with pytest.raises(BadParameters):
        build_lshape(LShapeSpec(0, 0))
    with pytest.raises(BadParameters):
        build_lshape(LShapeSpec(4, 2))


def test_lshape_41_square_cross():
    res = build_lshape(LShapeSpec(4, 1))
    st = res.surface.stratum()
    assert st.genus == 2 and st.abelian_orders == (2,)
    assert not res.arithmetic


def test_cuts_double_cover(z_omega3):
    st = z_omega3.surface.stratum()
    assert st.genus == 3 and st.is_square and st.abelian_orders == (2, 2)


def test_cuts_double_cover_rejects_cone_endpoint(cross20):
    with pytest.raises(PathThroughWeierstrass):
        build_cuts_double_cover(cross20.surface, 1, 6)
    with pytest.raises(PathThroughWeierstrass):
        build_cuts_double_cover(cross20.surface, 2, 2)


def test_cuts_double_cover_rejects_wrong_stratum():
    from fixtures import square_torus

    with pytest.raises(WrongStratum):
        build_cuts_double_cover(square_torus(), 1, 2)


def test_ten_admissible_pairs():
    assert len(admissible_weierstrass_pairs()) == 10
    assert admissible_weierstrass_pairs()[0] == (1, 2)


def test_second_weierstrass_pair_builds(cross20):
    res = build_cuts_double_cover(cross20.surface, 3, 4)
    st = res.surface.stratum()
    assert st.genus == 3 and st.abelian_orders == (2, 2)


def test_cut_and_fold(hshape):
    st = hshape.stratum()
    assert st.genus == 2 and st.orders == (1, 1, 1, 1) and not st.is_square


def test_cut_and_fold_has_hyperelliptic(hshape):
    from quadsurf.involutions import fixed_points, involutions_of

    assert any(
        fixed_points(a).count == 6 for a in involutions_of(hshape, -1)
    )


def test_cut_and_fold_round_trip(z_omega3, hshape):
    pipe = main_construction(hshape)
    assert pipe.genera == (2, 5, 3)
    ok, _m = are_isomorphic(pipe.Z, z_omega3.surface)
    assert ok


def test_cut_and_fold_rejects_wrong_input(cross20):
    with pytest.raises(WrongStratum):
        cut_and_fold_qm1111(cross20.surface)


def test_fold_torus_matches_build(qm22=None):
    # reconstruct-from-scratch: fold a marked torus and compare to build_qm22
    from quadsurf.surgery import insert_points
    from fixtures import square_torus

    pts = [
        vec(Fraction(1, 4), 0),
        vec(Fraction(3, 4), 0),
        vec(Fraction(1, 4), Fraction(1, 2)),
        vec(Fraction(3, 4), Fraction(1, 2)),
    ]
    s, _ = insert_points(square_torus(), 0, pts)
    x = fold_torus_with_marks(s)
    y, _ = build_qm22(_std_spec())
    ok, _m = are_isomorphic(x, y)
    assert ok


def test_enumerate_one_cell_torus():
    out = enumerate_square_tiled(StratumPattern(1, (), True), 1)
    assert len(out) == 1
    assert out[0].stratum().genus == 1


def test_enumerate_qm211_nonempty():
    fix = first_square_tiled(StratumPattern.parse("2:2,1,1:nonsquare"), 5)
    st = fix.stratum()
    assert st.genus == 2 and st.orders == (2, 1, 1) and not st.is_square


def test_enumerate_bound_guard(monkeypatch):
    monkeypatch.setenv("QUADSURF_MAX_CELLS", "3")
    with pytest.raises(BoundTooLarge):
        enumerate_square_tiled(StratumPattern(1, None, None), 4)


def test_pattern_parse():
    p = StratumPattern.parse("2:1,1,1,1:nonsquare")
    assert p.genus == 2 and p.orders == (1, 1, 1, 1) and p.square is False
    q = StratumPattern.parse("*:*:any")
    assert q.genus is None and q.orders is None and q.square is None
