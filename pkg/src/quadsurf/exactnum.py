"""Exact arithmetic over Q and real quadratic fields Q(sqrt(d)).

Every scalar in the package is a :class:`QuadExt` value ``a + b*sqrt(d)``
with rational ``a``, ``b`` and squarefree ``d >= 1``.  ``d == 1`` encodes a
pure rational (then ``b == 0``).  All comparisons use the real embedding
sending sqrt(d) to the positive root and are exact: no floating point is
involved anywhere.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import IncompatibleFields, ParseError

Rat = Fraction


def squarefree_split(n: int) -> tuple[int, int]:
    """Return (f, d) with n = f*f*d and d squarefree.  Requires n >= 1."""
    if n < 1:
        raise ValueError("need a positive integer")
    f, d, p = 1, n, 2
    while p * p <= d:
        while d % (p * p) == 0:
            d //= p * p
            f *= p
        p += 1
    return f, d


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected int or Fraction, got {type(x).__name__}")


@dataclass(frozen=True, slots=True)
class QuadExt:
    """Immutable element a + b*sqrt(d) of Q(sqrt(d))."""

    a: Fraction
    b: Fraction
    d: int

    # -- construction -------------------------------------------------

    @staticmethod
    def make(a, b=0, d: int = 1) -> "QuadExt":
        a = _as_fraction(a)
        b = _as_fraction(b)
        if d < 1:
            raise ValueError("field marker d must be >= 1")
        f, d = squarefree_split(d)
        if f != 1:
            b = b * f
        if d == 1:  # sqrt(1) folds into the rational part
            a, b = a + b, Fraction(0)
        if b == 0:
            d = 1
        return QuadExt(a, b, d)

    @staticmethod
    def rational(x) -> "QuadExt":
        return QuadExt.make(_as_fraction(x))

    @staticmethod
    def sqrt_int(n: int) -> "QuadExt":
        """Exact square root of a non-negative integer, if it stays quadratic."""
        if n == 0:
            return QE_ZERO
        f, d = squarefree_split(n)
        return QuadExt.make(0, f, d)

    # -- helpers ------------------------------------------------------

    def _join(self, other: "QuadExt") -> int:
        """Common field marker, or raise if both irrational with different d."""
        if self.d == other.d:
            return self.d
        if self.d == 1:
            return other.d
        if other.d == 1:
            return self.d
        raise IncompatibleFields(f"cannot mix sqrt({self.d}) with sqrt({other.d})")

    def _coerce(self, other) -> "QuadExt":
        if isinstance(other, QuadExt):
            return other
        if isinstance(other, (int, Fraction)):
            return QuadExt.rational(other)
        return NotImplemented  # type: ignore[return-value]

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def rational_value(self) -> Fraction:
        if self.b != 0:
            raise ValueError(f"{self} is irrational")
        return self.a

    # -- ring/field operations ----------------------------------------

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        d = self._join(o)
        return QuadExt.make(self.a + o.a, self.b + o.b, d)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        d = self._join(o)
        return QuadExt.make(self.a - o.a, self.b - o.b, d)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return QuadExt(-self.a, -self.b, self.d)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        d = self._join(o)
        return QuadExt.make(
            self.a * o.a + self.b * o.b * d,
            self.a * o.b + self.b * o.a,
            d,
        )

    __rmul__ = __mul__

    def inv(self) -> "QuadExt":
        norm = self.a * self.a - self.b * self.b * self.d
        if norm == 0:
            raise ZeroDivisionError("inverse of zero")
        return QuadExt.make(self.a / norm, -self.b / norm, self.d)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * o.inv()

    def __rtruediv__(self, other):
        return self.inv() * other

    # -- order --------------------------------------------------------

    def sign(self) -> int:
        """Exact sign under the positive real embedding of sqrt(d)."""
        if self.b == 0:
            return -1 if self.a < 0 else (1 if self.a > 0 else 0)
        if self.a == 0:
            return -1 if self.b < 0 else 1
        sa = 1 if self.a > 0 else -1
        sb = 1 if self.b > 0 else -1
        if sa == sb:
            return sa
        # opposite signs: compare a^2 with b^2 d (equality impossible, sqrt(d) irrational)
        lhs, rhs = self.a * self.a, self.b * self.b * self.d
        return sa if lhs > rhs else sb

    def __bool__(self):
        return not (self.a == 0 and self.b == 0)

    def cmp(self, other) -> int:
        o = self._coerce(other)
        return (self - o).sign()

    def __lt__(self, other):
        return self.cmp(other) < 0

    def __le__(self, other):
        return self.cmp(other) <= 0

    def __gt__(self, other):
        return self.cmp(other) > 0

    def __ge__(self, other):
        return self.cmp(other) >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    # -- text ---------------------------------------------------------

    def __str__(self):
        return format_scalar(self)

    def __repr__(self):
        return f"QuadExt({format_scalar(self)})"

    def __float__(self):
        return float(self.a) + float(self.b) * self.d ** 0.5


QE_ZERO = QuadExt(Fraction(0), Fraction(0), 1)
QE_ONE = QuadExt(Fraction(1), Fraction(0), 1)


def qe(a, b=0, d: int = 1) -> QuadExt:
    """Shorthand constructor."""
    return QuadExt.make(a, b, d)


# ---------------------------------------------------------------------------
# scalar text syntax: `p/q` or `p/q+r/s*sqrt(d)`, whitespace-free


_UFRAC = r"\d+(?:/\d+)?"
_SFRAC = rf"-?{_UFRAC}"
_SCALAR_RE = re.compile(
    rf"^(?:({_SFRAC})|(?:({_SFRAC})([+-]))?(-)?(?:({_UFRAC})\*)?sqrt\((\d+)\))$"
)


def parse_scalar(text: str) -> QuadExt:
    """Parse the textual scalar syntax, e.g. ``1/2+3/4*sqrt(2)``."""
    m = _SCALAR_RE.match(text)
    if not m:
        raise ParseError(f"bad scalar {text!r}")
    plain, a_txt, sep_txt, neg_txt, b_txt, d_txt = m.groups()
    if plain is not None:
        return QuadExt.rational(Fraction(plain))
    if sep_txt and neg_txt:
        raise ParseError(f"bad scalar {text!r}")
    a = Fraction(a_txt) if a_txt else Fraction(0)
    b = Fraction(b_txt) if b_txt else Fraction(1)
    if sep_txt == "-" or neg_txt:
        b = -b
    d = int(d_txt)
    if d < 1:
        raise ParseError(f"bad field marker in {text!r}")
    return QuadExt.make(a, b, d)


def _format_frac(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def format_scalar(x: QuadExt) -> str:
    if x.b == 0:
        return _format_frac(x.a)
    sep = "-" if x.b < 0 else "+"
    babs = abs(x.b)
    root = f"sqrt({x.d})" if babs == 1 else f"{_format_frac(babs)}*sqrt({x.d})"
    if x.a == 0:
        return root if x.b > 0 else f"-{root}"
    return f"{_format_frac(x.a)}{sep}{root}"


# ---------------------------------------------------------------------------
# planar vectors


@dataclass(frozen=True, slots=True)
class Vec2:
    """Exact planar vector; both components share a field."""

    x: QuadExt
    y: QuadExt

    @staticmethod
    def make(x, y) -> "Vec2":
        vx = x if isinstance(x, QuadExt) else QuadExt.rational(x)
        vy = y if isinstance(y, QuadExt) else QuadExt.rational(y)
        vx._join(vy)
        return Vec2(vx, vy)

    def __add__(self, o: "Vec2") -> "Vec2":
        return Vec2(self.x + o.x, self.y + o.y)

    def __sub__(self, o: "Vec2") -> "Vec2":
        return Vec2(self.x - o.x, self.y - o.y)

    def __neg__(self) -> "Vec2":
        return Vec2(-self.x, -self.y)

    def scale(self, t) -> "Vec2":
        return Vec2(self.x * t, self.y * t)

    def cross(self, o: "Vec2") -> QuadExt:
        return self.x * o.y - self.y * o.x

    def dot(self, o: "Vec2") -> QuadExt:
        return self.x * o.x + self.y * o.y

    def norm2(self) -> QuadExt:
        return self.dot(self)

    def is_zero(self) -> bool:
        return not (self.x or self.y)

    def __bool__(self):
        return not self.is_zero()

    def sort_key(self):
        return (self.x.a, self.x.b, self.x.d, self.y.a, self.y.b, self.y.d)

    def __str__(self):
        return f"({self.x},{self.y})"

    def __repr__(self):
        return f"Vec2({self.x},{self.y})"


V_ZERO = Vec2(QE_ZERO, QE_ZERO)


def vec(x, y) -> Vec2:
    return Vec2.make(x, y)


def parallel_ratio(v: Vec2, w: Vec2) -> QuadExt | None:
    """If w = t*v for a scalar t (v nonzero), return t, else None."""
    if v.cross(w).sign() != 0:
        return None
    if v.x:
        return w.x / v.x
    if v.y:
        return w.y / v.y
    return None


# ---------------------------------------------------------------------------
# rational span analysis (backend of the arithmeticity certificate)


@dataclass(frozen=True)
class SpanResult:
    """Q-linear structure of a family of Vec2, viewed inside Q^4.

    ``rank``            Q-dimension of the span of the coordinate vectors
                        (a-part and b-part of x and y per input vector).
    ``basis``           indices of the first Q-independent input vectors.
    ``coords``          for rank <= 2: per input vector, its rational
                        coordinates in the basis vectors (tuples of length
                        ``rank``); None when rank > 2.
    ``witness``         for rank > 2: indices of three Q-independent inputs.
    ``collinear``       True when rank == 2 but the two basis vectors are
                        R-linearly dependent (irrational ratio on one line),
                        so the family cannot generate a planar lattice.
    """

    rank: int
    basis: tuple[int, ...]
    coords: tuple[tuple[Fraction, ...], ...] | None
    witness: tuple[int, int, int] | None
    collinear: bool

    @property
    def lattice_like(self) -> bool:
        """True iff the span is a rank-<=2 module with an R-independent basis."""
        return self.rank <= 2 and not self.collinear and self.rank > 0


def _coord4(v: Vec2) -> list[Fraction]:
    return [v.x.a, v.x.b, v.y.a, v.y.b]


def solve_rational_span(vectors) -> SpanResult:
    """Rank over Q of vectors in Q^4 plus explicit coordinates or a witness.

    Zero vectors are permitted; rank 0 is possible.
    """
    vectors = list(vectors)
    if not vectors:
        raise ValueError("need at least one vector")
    rows: list[list[Fraction]] = []  # reduced pivot rows
    pivots: list[int] = []  # pivot column per row
    basis: list[int] = []  # input index per pivot row

    for idx, v in enumerate(vectors):
        cur = _coord4(v)
        for row, pc in zip(rows, pivots):
            f = cur[pc]
            if f:
                cur = [c - f * rc for c, rc in zip(cur, row)]
        nz = next((j for j, c in enumerate(cur) if c), None)
        if nz is None:
            continue
        lead = cur[nz]
        rows.append([c / lead for c in cur])
        pivots.append(nz)
        basis.append(idx)

    rank = len(basis)
    coords: list[tuple[Fraction, ...]] | None = None
    witness = None
    collinear = False
    if rank <= 2:
        coords_list = []
        bvecs = [_coord4(vectors[i]) for i in basis]
        for v in vectors:
            coords_list.append(_express(_coord4(v), bvecs))
        coords = [tuple(c) for c in coords_list]
        if rank == 2:
            v0, v1 = vectors[basis[0]], vectors[basis[1]]
            collinear = v0.cross(v1).sign() == 0
    else:
        witness = (basis[0], basis[1], basis[2])
    return SpanResult(
        rank=rank,
        basis=tuple(basis),
        coords=tuple(coords) if coords is not None else None,
        witness=witness,
        collinear=collinear,
    )


def _express(target: list[Fraction], bvecs: list[list[Fraction]]) -> list[Fraction]:
    """Solve target = sum c_i * bvecs[i] exactly (solution exists by construction)."""
    n = len(bvecs)
    if n == 0:
        return []
    # Gaussian elimination on the n x 4 system's transpose
    aug = [[bv[j] for bv in bvecs] + [target[j]] for j in range(4)]
    sol = [Fraction(0)] * n
    used_rows: list[int] = []
    col_of_row: dict[int, int] = {}
    r = 0
    for c in range(n):
        pr = next((i for i in range(len(aug)) if i not in used_rows and aug[i][c]), None)
        if pr is None:
            continue
        used_rows.append(pr)
        col_of_row[pr] = c
        lead = aug[pr][c]
        aug[pr] = [x / lead for x in aug[pr]]
        for i in range(len(aug)):
            if i != pr and aug[i][c]:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[pr])]
        r += 1
    for pr, c in col_of_row.items():
        sol[c] = aug[pr][n]
    return sol
