from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadsurf.errors import IncompatibleFields, ParseError
from quadsurf.exactnum import (
    QuadExt,
    Vec2,
    format_scalar,
    parse_scalar,
    qe,
    solve_rational_span,
    squarefree_split,
    vec,
)


def test_squarefree_split():
    assert squarefree_split(8) == (2, 2)
    assert squarefree_split(1) == (1, 1)
    assert squarefree_split(12) == (2, 3)
    assert squarefree_split(7) == (1, 7)


def test_defining_relation():
    r2 = qe(0, 1, 2)
    assert r2 * r2 == qe(2)


def test_positive_embedding_sign():
    # 1 + sqrt(2) > 0
    assert (qe(1, 1, 2) - qe(0)).sign() == 1
    # 1 - sqrt(2) < 0 even though both parts of the comparison are nonzero
    assert qe(1, -1, 2).sign() == -1
    assert qe(3, -2, 2).sign() == 1  # 3 > 2*sqrt(2) = 2.828...
    assert qe(-3, 2, 2).sign() == -1
    assert qe(0).sign() == 0


def test_lambda_formula_from_caption():
    # with e=0, b=2: (e + sqrt(e^2+4b)) / 2 == sqrt(2)
    e, b = 0, 2
    lam = (qe(e) + QuadExt.sqrt_int(e * e + 4 * b)) / 2
    assert lam == qe(0, 1, 2)


def test_normalization_folds_square_parts():
    assert qe(0, 1, 8) == qe(0, 2, 2)
    assert qe(1, 0, 7) == qe(1)
    assert qe(1, 2, 1) == qe(3)


def test_division_and_inverse():
    x = qe(1, 1, 5)
    assert x * x.inv() == qe(1)
    with pytest.raises(ZeroDivisionError):
        qe(0).inv()


def test_incompatible_fields_rejected():
    with pytest.raises(IncompatibleFields):
        qe(0, 1, 2) + qe(0, 1, 3)
    # rational values mix with anything
    assert qe(1) + qe(0, 1, 3) == qe(1, 1, 3)


def test_comparisons():
    assert qe(0, 1, 2) > qe(1)
    assert qe(0, 1, 2) < qe(3, 0, 2)
    assert abs(qe(-1, 0, 1)) == qe(1)


rationals = st.fractions(
    min_value=Fraction(-50), max_value=Fraction(50), max_denominator=12
)


@settings(max_examples=150, deadline=None)
@given(rationals, rationals, rationals, rationals, rationals, rationals)
def test_field_axioms_random(a1, b1, a2, b2, a3, b3):
    d = 5
    x, y, z = qe(a1, b1, d), qe(a2, b2, d), qe(a3, b3, d)
    assert (x + y) + z == x + (y + z)
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    if x:
        assert x * x.inv() == qe(1)
    assert x.sign() * y.sign() == (x * y).sign()


@settings(max_examples=100, deadline=None)
@given(rationals, rationals)
def test_scalar_text_roundtrip(a, b):
    for x in (qe(a), qe(a, b, 3)):
        assert parse_scalar(format_scalar(x)) == x


def test_scalar_parse_examples():
    assert parse_scalar("1/2+3/4*sqrt(2)") == qe(Fraction(1, 2), Fraction(3, 4), 2)
    assert parse_scalar("-2") == qe(-2)
    assert parse_scalar("sqrt(5)") == qe(0, 1, 5)
    assert parse_scalar("1-sqrt(2)") == qe(1, -1, 2)
    with pytest.raises(ParseError):
        parse_scalar("1 + sqrt(2)")
    with pytest.raises(ParseError):
        parse_scalar("sqrt(2)+1")


def _rank_oracle(vectors):
    """Independent brute-force rank over Q via minors-free elimination on copies."""
    rows = [[v.x.a, v.x.b, v.y.a, v.y.b] for v in vectors]
    rank = 0
    cols = 4
    pivot_col = 0
    while pivot_col < cols and rank < len(rows):
        pr = next((r for r in range(rank, len(rows)) if rows[r][pivot_col]), None)
        if pr is None:
            pivot_col += 1
            continue
        rows[rank], rows[pr] = rows[pr], rows[rank]
        lead = rows[rank][pivot_col]
        rows[rank] = [c / lead for c in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][pivot_col]:
                f = rows[r][pivot_col]
                rows[r] = [c - f * p for c, p in zip(rows[r], rows[rank])]
        rank += 1
        pivot_col += 1
    return rank


def test_span_rational_lattice():
    vs = [vec(1, 0), vec(0, 1), vec(Fraction(1, 2), Fraction(1, 3))]
    res = solve_rational_span(vs)
    assert res.rank == 2
    assert res.basis == (0, 1)
    assert res.coords[2] == (Fraction(1, 2), Fraction(1, 3))
    assert not res.collinear
    assert res.lattice_like


def test_span_irrational_ratio_certificate():
    vs = [vec(1, 0), Vec2(qe(0, 1, 2), qe(0))]
    res = solve_rational_span(vs)
    assert res.rank == 2
    assert res.collinear
    assert not res.lattice_like


def test_span_rank_gt_2_witness():
    vs = [vec(1, 0), vec(0, 1), Vec2(qe(0, 1, 2), qe(0))]
    res = solve_rational_span(vs)
    assert res.rank == 3
    assert res.witness == (0, 1, 2)
    assert res.coords is None


def test_span_zero_vectors_allowed():
    res = solve_rational_span([vec(0, 0), vec(0, 0)])
    assert res.rank == 0
    assert res.coords == ((), ())


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.tuples(rationals, rationals, rationals, rationals),
        min_size=1,
        max_size=6,
    )
)
def test_span_rank_matches_oracle_and_idempotent(raw):
    vs = [Vec2(qe(a, b, 7), qe(c, e, 7)) for a, b, c, e in raw]
    res = solve_rational_span(vs)
    assert res.rank == _rank_oracle(vs)
    if res.rank <= 2 and res.rank > 0:
        # reconstruct each vector from its rational coordinates
        bas = [vs[i] for i in res.basis]
        for v, cs in zip(vs, res.coords):
            acc = Vec2(qe(0), qe(0))
            for c, bv in zip(cs, bas):
                acc = acc + bv.scale(qe(c))
            assert acc == v
        # idempotence: re-running on reconstructed combinations gives same rank
        again = solve_rational_span(bas)
        assert again.rank == res.rank
