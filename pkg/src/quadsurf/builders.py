"""Explicit constructions: the slit-torus family in Q(2,2), L-shaped /
Swiss-cross surfaces, cut double covers, the cut-and-fold to Q(1,1,1,1),
and a small square-tiled enumerator for fixtures.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction

from .covers import _materialize_involution, select_hyperelliptic
from .errors import (
    BadParameters,
    BoundTooLarge,
    InvariantPinFailure,
    NotHyperellipticInvariant,
    PathThroughWeierstrass,
    QuadSurfError,
    SelfIntersectingChain,
    SlitsIntersect,
    WrongStratum,
    ZeroesNotWeierstrass,
)
from .exactnum import QE_ZERO, QuadExt, V_ZERO, Vec2, qe, vec
from .involutions import (
    PmAutomorphism,
    delaunay_cells,
    fixed_points,
    hyperelliptic_involution,
    involutions_of,
    are_isomorphic,
)
from .surfcore import Stratum, Surface
from .surgery import (
    Work,
    double_cross_glued,
    fold_by_involution,
    insert_marked_vertex,
    materialize_segment,
    transport_edge_automorphism,
    triangulate_cell,
)

MAX_CELLS_ENV = "QUADSURF_MAX_CELLS"


def _unit_torus() -> Surface:
    sq = [vec(1, 0), vec(0, 1), vec(-1, 0), vec(0, -1)]
    gluing = {
        (0, 0): ((0, 2), 1),
        (0, 2): ((0, 0), 1),
        (0, 1): ((0, 3), 1),
        (0, 3): ((0, 1), 1),
    }
    return Surface(1, [sq], gluing)


def _mod1(x: Fraction) -> Fraction:
    return x - Fraction(int(x) if x >= 0 else int(x) - (0 if x == int(x) else 1))


def _norm_pt(p: Vec2) -> Vec2:
    assert p.x.is_rational and p.y.is_rational, "torus points must be rational"
    return vec(_mod1(p.x.rational_value()), _mod1(p.y.rational_value()))


# ---------------------------------------------------------------------------
# Q(2,2): two symmetric parallel slits on the standard torus


@dataclass(frozen=True)
class SlitSpec:
    """Two symmetric parallel slits on the unit torus.

    The first slit joins `zero` to `pole` with holonomy `vector`; the second
    is the central-symmetry image (zeroes and poles are symmetric about 0).
    All coordinates are rational.
    """

    zero: Vec2
    pole: Vec2
    vector: Vec2

    def points(self):
        z1 = _norm_pt(self.zero)
        p1 = _norm_pt(self.pole)
        z2 = _norm_pt(-z1)
        p2 = _norm_pt(-p1)
        return z1, z2, p1, p2

    def validate(self):
        if not self.vector:
            raise BadParameters("slit vector must be nonzero")
        for c in (self.vector.x, self.vector.y):
            if not c.is_rational:
                raise BadParameters("slit data must be rational")
        z1, z2, p1, p2 = self.points()
        if _norm_pt(z1 + self.vector) != p1:
            raise BadParameters("pole must be zero + vector modulo the lattice")
        if len({q.sort_key() for q in (z1, z2, p1, p2)}) != 4:
            raise BadParameters("the four slit endpoints must be distinct")


@dataclass
class BuildProvenance:
    builder: str
    data: dict = field(default_factory=dict)

    def report(self) -> dict:
        out = {"builder": self.builder}
        out.update(self.data)
        return out


def build_qm22(spec: SlitSpec) -> tuple[Surface, BuildProvenance]:
    """Slit the unit torus along two symmetric parallel cuts and re-glue.

    The side matching is pinned by invariants: among the candidate -Id
    re-gluings, exactly one yields genus 2, orders {2,2}, non-square
    holonomy, and a hyperelliptic involution.
    """
    spec.validate()
    z1, z2, p1, p2 = spec.points()
    torus = _unit_torus()
    w = Work.from_surface(torus)
    refs: list[int] = []
    w.corner_refs.append(refs)
    for pt in (z1, z2, p1, p2):
        refs.append(insert_marked_vertex(w, 0, pt))
    try:
        path1, end1 = materialize_segment(w, refs[0], spec.vector)
        forbid = set(path1) | {w.glue[e][0] for e in path1}
        path2, end2 = materialize_segment(w, refs[1], -spec.vector, forbid)
    except SelfIntersectingChain as exc:
        raise SlitsIntersect(str(exc)) from exc
    # slits must join zero_i to pole_i
    for endc, pref in ((end1, refs[2]), (end2, refs[3])):
        assert any(
            c == pref for c in w.vertex_class(endc)
        ), "slit did not end at its pole"
    iota = {(0, i): (0, (i + 2) % 4) for i in range(4)}
    phi = transport_edge_automorphism(w, torus, iota, -1)
    cut = list(path1) + list(path2)

    candidates = []
    # (a) fold through the involution: partner(e) := phi(old partner(e))
    wa = w.copy()
    fold_by_involution(wa, [e for e in cut], phi)
    candidates.append(("involution-fold", wa))
    # (b) glue each cut edge directly to its involution image
    wb = w.copy()
    try:
        _glue_to_image(wb, cut, phi)
        candidates.append(("direct-image", wb))
    except (AssertionError, QuadSurfError):
        pass

    chosen = None
    outcome = {}
    for name, cand in candidates:
        surf = cand.to_surface().without_marks_on_cone_points()
        diags = surf.validate()
        if diags:
            outcome[name] = f"invalid: {diags[0]}"
            continue
        pts, st = surf.cone_points()
        pins = (
            st.genus == 2
            and st.orders == (2, 2)
            and not st.is_square
            and _has_hyperelliptic(surf)
        )
        outcome[name] = str(st) + ("/hyperelliptic" if pins else "")
        if pins:
            if chosen is not None:
                raise InvariantPinFailure("several gluing patterns satisfy the pins")
            chosen = (name, surf)
    if chosen is None:
        raise InvariantPinFailure(f"no gluing pattern satisfies the pins: {outcome}")
    prov = BuildProvenance(
        "qm22",
        {
            "zero1": str(z1),
            "pole1": str(p1),
            "slit_vector": str(spec.vector),
            "matching": chosen[0],
            "candidates": ";".join(f"{k}={v}" for k, v in sorted(outcome.items())),
        },
    )
    return chosen[1], prov


def _glue_to_image(w: Work, path_edges, phi):
    all_edges = set(path_edges) | {w.glue[e][0] for e in path_edges}
    w.unglue(all_edges)
    for e in all_edges:
        target = phi[e]
        assert target != e and target in all_edges
        v1, v2 = w.vec[e], w.vec[target]
        sg = 1 if v2 == -v1 else (-1 if v2 == v1 else None)
        assert sg is not None
        w.glue[e] = (target, sg)
    for e in all_edges:
        e2, sg = w.glue[e]
        assert w.glue[e2] == (e, sg)


def _has_hyperelliptic(s: Surface) -> bool:
    g = s.genus
    return any(
        fixed_points(a).count == 2 * g + 2 for a in involutions_of(s, -1)
    )


# ---------------------------------------------------------------------------
# L-shaped tables: the Swiss cross family


@dataclass(frozen=True)
class LShapeSpec:
    b: int
    e: int

    def validate(self):
        if self.e not in (-1, 0, 1):
            raise BadParameters("e must be -1, 0 or 1")
        if not self.e + 1 < self.b:
            raise BadParameters("need e + 1 < b")
        if self.e == 1 and self.b % 2 != 0:
            raise BadParameters("if e = 1 then b must be even")

    def lam(self) -> QuadExt:
        self.validate()
        return (qe(self.e) + QuadExt.sqrt_int(self.e * self.e + 4 * self.b)) / 2


@dataclass(frozen=True)
class WeierstrassPoint:
    label: int  # 1..6; 6 is the cone point
    kind: str  # vertex | edge_midpoint | cell_center
    position: Vec2  # a developed representative (for reporting)


@dataclass
class LShapeResult:
    surface: Surface
    lam: QuadExt
    weierstrass: tuple[WeierstrassPoint, ...]
    provenance: BuildProvenance
    degenerate: bool = False
    arithmetic: bool = False


def build_lshape(spec: LShapeSpec) -> LShapeResult:
    """Swiss cross of the L-shaped table: four reflected copies with opposite
    parallel sides glued by translations, centred at the origin.

    Cross half-dimensions: half-width lam/2, half-thickness 1/2, half-height
    (lam + 1 - e)/2, with lam = (e + sqrt(e^2+4b))/2; the horizontal and
    vertical cylinder moduli are then commensurable in both directions.
    """
    lam = spec.lam()
    half = qe(Fraction(1, 2))
    wham = lam * half  # half width
    s_ = half  # half thickness
    h_ = (lam + qe(1 - spec.e)) * half  # half height
    corners = [
        Vec2(wham, -s_),
        Vec2(wham, s_),
        Vec2(s_, s_),
        Vec2(s_, h_),
        Vec2(-s_, h_),
        Vec2(-s_, s_),
        Vec2(-wham, s_),
        Vec2(-wham, -s_),
        Vec2(-s_, -s_),
        Vec2(-s_, -h_),
        Vec2(s_, -h_),
        Vec2(s_, -s_),
    ]
    pairing = [(0, 6), (1, 11), (2, 4), (3, 9), (5, 7), (8, 10)]
    edges = []
    keep = []
    for i in range(12):
        v = corners[(i + 1) % 12] - corners[i]
        edges.append(v)
        if v:
            keep.append(i)
    newindex = {old: k for k, old in enumerate(keep)}
    poly = [edges[i] for i in keep]
    gluing = {}
    for a, b in pairing:
        if a in newindex and b in newindex:
            gluing[(0, newindex[a])] = ((0, newindex[b]), 1)
            gluing[(0, newindex[b])] = ((0, newindex[a]), 1)
        else:
            assert a not in newindex and b not in newindex, (
                "degenerate cross dropped only one side of a pair"
            )
    surf = Surface(lam.d, [poly], gluing)
    surf.require_valid()
    pts, st = surf.cone_points()
    degenerate = lam == qe(1)  # the L-table collapses to a rectangle
    if not degenerate and not (st.genus == 2 and st.orders == (4,) and st.is_square):
        raise BadParameters(f"cross is not in Omega_2(2): {st}")
    from .flatdyn import arithmeticity_certificate

    arithmetic = arithmeticity_certificate(surf).arithmetic
    if degenerate:
        table: tuple[WeierstrassPoint, ...] = ()
        out = surf
    else:
        h = hyperelliptic_involution(surf)
        table = weierstrass_table(h)
        out = h.surface
    prov = BuildProvenance(
        "lshape",
        {
            "b": str(spec.b),
            "e": str(spec.e),
            "lambda": str(lam),
            "stratum": str(st),
            "degenerate": str(degenerate).lower(),
            "arithmetic": str(arithmetic).lower(),
        },
    )
    return LShapeResult(out, lam, table, prov, degenerate, arithmetic)


def weierstrass_table(h: PmAutomorphism) -> tuple[WeierstrassPoint, ...]:
    """Deterministic labels for the 2g+2 fixed points; the highest label is
    the cone point on genus-2 one-zero surfaces."""
    s = h.surface
    locus = fixed_points(h)
    entries = []
    for cls in locus.vertices:
        c = sorted(cls)[0]
        k = s.class_angle_multiple(cls)
        entries.append(("vertex", k, s.corner_pos(c), cls))
    for pair in locus.edge_pairs:
        e = sorted(pair)[0]
        mid = s.corner_pos(e) + s.vec(e).scale(qe(Fraction(1, 2)))
        entries.append(("edge_midpoint", 2, mid, pair))
    for p in locus.cell_centers:
        lst = s.polygons[p]
        c0 = (p, 0)
        img = h.edge_map[c0]
        ctr = (s.corner_pos(c0) + s.corner_pos(img)).scale(qe(Fraction(1, 2)))
        entries.append(("cell_center", 2, ctr, p))
    # cone points get the last labels; within groups sort by position key
    entries.sort(key=lambda t: (t[1], {"vertex": 0, "edge_midpoint": 1, "cell_center": 2}[t[0]], t[2].sort_key()))
    return tuple(
        WeierstrassPoint(i + 1, kind, pos)
        for i, (kind, _k, pos, _ref) in enumerate(entries)
    )


# ---------------------------------------------------------------------------
# cut double cover: Omega_2(2) -> Omega_3(2,2)


@dataclass
class CutsCoverResult:
    surface: Surface  # Z in Omega_3(2,2)
    base: Surface  # the refined, marked copy of the input
    sheet_map: dict  # edge ref -> edge ref between the two copies
    provenance: BuildProvenance


def admissible_weierstrass_pairs() -> tuple[tuple[int, int], ...]:
    """The ten ways to pick two of the five non-zero Weierstrass points."""
    out = []
    for i in range(1, 6):
        for j in range(i + 1, 6):
            out.append((i, j))
    return tuple(out)


def _marked_weierstrass_complex(s: Surface):
    """Materialize the hyperelliptic fixed locus as marked vertices.

    Returns (triangulated surface, involution on it, label -> corner ref).
    The cone fixed points keep their labels but are not marked.
    """
    h = hyperelliptic_involution(s)
    w, phi, fixed_corners = _materialize_involution(h.surface, h)
    # assign labels on the refined complex: cone classes last
    entries = []
    for c in sorted(fixed_corners):
        k = w.class_angle_multiple(c)
        orig, rpos = w.root_pos(c)
        entries.append((k, (orig,) + rpos.sort_key(), c))
    entries.sort()
    labels = {}
    for idx, (k, _key, c) in enumerate(entries):
        labels[idx + 1] = (c, k)
        if k == 2:
            w.marked.add(c)
    for pid in list(w.polys):
        triangulate_cell(w, pid)
    out = w.to_surface()
    ref = w.edge_ref_map()
    phi_ref = transport_edge_automorphism(w, h.surface, h.edge_map, -1)
    hq = PmAutomorphism(out, -1, {ref[e]: ref[i] for e, i in phi_ref.items()})
    assert hq.verify() == []
    label_refs = {lab: (ref[c], k) for lab, (c, k) in labels.items()}
    return out, hq, label_refs


def _shortest_connection(s: Surface, cls_a, cls_b, max_doublings: int = 8):
    """Shortest saddle connection joining two vertex classes (ties by key)."""
    from .flatdyn import saddle_connections

    bound = qe(1)
    for _ in range(max_doublings):
        scs = saddle_connections(s, bound, retriangulate=False)
        best = None
        for sc in scs.connections:
            c1 = s.vertex_class_of(sc.start_ray[0])
            c2 = s.vertex_class_of(sc.end_ray[0])
            if {c1, c2} == {cls_a, cls_b}:
                if best is None or sc.sort_key() < best.sort_key():
                    best = sc
        if best is not None:
            return best
        bound = bound * 2
    raise PathThroughWeierstrass("no admissible connecting segment found")


def build_cuts_double_cover(
    s: Surface, wi: int, wj: int
) -> CutsCoverResult:
    """Two copies of a one-zero genus-2 surface cut along a symmetric loop
    through two non-zero Weierstrass points and cross-glued: the unramified
    double cover determined by a quadratic differential with double zeroes at
    those points.  Output lies in Omega_3(2,2) with zeroes at Weierstrass
    points of the cover.
    """
    st = s.stratum()
    if not (st.genus == 2 and st.orders == (4,) and st.is_square):
        raise WrongStratum(f"need a one-zero genus-2 translation surface, got {st}")
    if wi == wj:
        raise PathThroughWeierstrass("need two distinct Weierstrass points")
    base, h, labels = _marked_weierstrass_complex(s)
    cone_labels = [lab for lab, (_c, k) in labels.items() if k != 2]
    assert len(cone_labels) == 1
    if wi in cone_labels or wj in cone_labels:
        raise PathThroughWeierstrass(
            "the zero of the abelian differential cannot carry a cut endpoint"
        )
    if not (wi in labels and wj in labels):
        raise BadParameters(f"Weierstrass labels must be in 1..{len(labels)}")
    cls_a = base.vertex_class_of(labels[wi][0])
    cls_b = base.vertex_class_of(labels[wj][0])
    sigma = _shortest_connection(base, cls_a, cls_b)
    w = Work.from_surface(base)
    ids = w._ids_from_surface
    start1 = ids[sigma.start_ray[0]]
    start2 = ids[h.edge_map[sigma.start_ray[0]]]
    refs = [start2]
    w.corner_refs.append(refs)
    path1, _e1 = materialize_segment(w, start1, sigma.start_ray[1])
    forbid = set(path1) | {w.glue[e][0] for e in path1}
    path2, _e2 = materialize_segment(w, refs[0], -sigma.start_ray[1], forbid)
    doubled, m1, m2 = double_cross_glued(w, list(path1) + list(path2))
    doubled.marked = set()
    Z = doubled.to_surface()
    Z.require_valid()
    ptsZ, stZ = Z.cone_points()
    if not (stZ.genus == 3 and stZ.orders == (4, 4) and stZ.is_square):
        raise WrongStratum(f"cut cover left the expected stratum: {stZ}")
    hz = hyperelliptic_involution(Z)
    locus = fixed_points(hz)
    assert locus.count == 8, "cover must have eight Weierstrass points"
    cone_classes = [
        cls for cls in hz.surface.vertex_classes
        if hz.surface.class_angle_multiple(cls) == 6
    ]
    for cls in cone_classes:
        assert cls in locus.vertices, "zeroes of omega must be Weierstrass points"
    ref = doubled.edge_ref_map()
    sheet = {}
    back1 = {v: k for k, v in m1.items()}
    for e_old, e1 in m1.items():
        sheet[ref[e1]] = ref[m2[e_old]]
        sheet[ref[m2[e_old]]] = ref[e1]
    prov = BuildProvenance(
        "cutscover",
        {
            "w_pair": f"{wi},{wj}",
            "sigma": str(sigma.holonomy),
            "stratum": str(stZ),
            "weierstrass_count": "8",
        },
    )
    return CutsCoverResult(Z, base, sheet, prov)


# ---------------------------------------------------------------------------
# cut and fold: Omega_3(2,2) hyperelliptic -> Q(1,1,1,1)


def cut_and_fold_qm1111(Z: Surface, provenance: bool = False):
    """Cut along sigma u i(sigma) joining the two zeroes and glue each opening
    shut via the hyperelliptic involution; lands in Q(1,1,1,1).
    """
    st = Z.stratum()
    if not (st.genus == 3 and st.orders == (4, 4) and st.is_square):
        raise WrongStratum(f"need a hyperelliptic surface in Omega_3(2,2), got {st}")
    base, h, labels = _marked_weierstrass_complex(Z)
    cone_labels = [lab for lab, (_c, k) in labels.items() if k != 2]
    if len(cone_labels) != 2:
        raise ZeroesNotWeierstrass(
            "both zeroes must be fixed by the hyperelliptic involution"
        )
    cls_a = base.vertex_class_of(labels[cone_labels[0]][0])
    cls_b = base.vertex_class_of(labels[cone_labels[1]][0])
    sigma = _shortest_connection(base, cls_a, cls_b)
    w = Work.from_surface(base)
    ids = w._ids_from_surface
    start1 = ids[sigma.start_ray[0]]
    start2 = ids[h.edge_map[sigma.start_ray[0]]]
    refs = [start2]
    w.corner_refs.append(refs)
    path1, _e1 = materialize_segment(w, start1, sigma.start_ray[1])
    forbid = set(path1) | {w.glue[e][0] for e in path1}
    path2, _e2 = materialize_segment(w, refs[0], -sigma.start_ray[1], forbid)
    phi = transport_edge_automorphism(w, base, h.edge_map, -1)
    fold_by_involution(w, list(path1) + list(path2), phi)
    w.marked = set()
    X = w.to_surface()
    X.require_valid()
    ptsX, stX = X.cone_points()
    if not (stX.genus == 2 and stX.orders == (1, 1, 1, 1) and not stX.is_square):
        raise WrongStratum(f"cut-and-fold left the expected stratum: {stX}")
    if provenance:
        prov = BuildProvenance(
            "cutfold", {"sigma": str(sigma.holonomy), "stratum": str(stX)}
        )
        return X, prov
    return X


# ---------------------------------------------------------------------------
# torus reconstruction (genus-1 branch of the inverse construction)


def fold_torus_with_marks(Z: Surface) -> Surface:
    """Slit a marked torus along two symmetric cuts and fold by the elliptic
    involution; the four marked points become the four slit endpoints.
    """
    if Z.genus != 1:
        raise NotHyperellipticInvariant("need a genus-1 input")
    marked = [cls for cls in Z.vertex_classes if Z.is_marked_class(cls)]
    if len(marked) != 4:
        raise NotHyperellipticInvariant("need exactly four marked points")
    iota = select_hyperelliptic(Z)
    base = iota.surface
    marked = [cls for cls in base.vertex_classes if base.is_marked_class(cls)]
    orbits = []
    seen = set()
    for cls in marked:
        if cls in seen:
            continue
        img = iota.apply_class(cls)
        if img == cls:
            raise NotHyperellipticInvariant("a marked point is fixed by the involution")
        orbits.append((cls, img))
        seen.add(cls)
        seen.add(img)
    assert len(orbits) == 2
    (z_cls, z2_cls), (p_cls, p2_cls) = orbits
    # triangulate canonically so the involution transports to the cut complex
    w0 = Work.from_surface(base)
    for pid in list(w0.polys):
        triangulate_cell(w0, pid)
    tri = w0.to_surface()
    ref0 = w0.edge_ref_map()
    phi0 = transport_edge_automorphism(w0, base, iota.edge_map, -1)
    h_tri = PmAutomorphism(tri, -1, {ref0[e]: ref0[i] for e, i in phi0.items()})
    assert h_tri.verify() == []
    z_tri = tri.vertex_class_of(ref0[next(iter(_eids_of(w0, z_cls)))])
    p_tri = tri.vertex_class_of(ref0[next(iter(_eids_of(w0, p_cls)))])
    from .flatdyn import saddle_connections

    bound = qe(1)
    last_exc = None
    for _ in range(8):
        scs = saddle_connections(tri, bound, retriangulate=False)
        for sc in sorted(scs.connections, key=lambda x: x.sort_key()):
            c1 = tri.vertex_class_of(sc.start_ray[0])
            c2 = tri.vertex_class_of(sc.end_ray[0])
            if {c1, c2} not in ({z_tri, p_tri},):
                continue
            # orient the cut from the zero class
            ray = sc.start_ray if c1 == z_tri else sc.end_ray
            try:
                return _fold_torus_along(tri, h_tri, ray)
            except (SelfIntersectingChain, AssertionError, QuadSurfError) as exc:
                last_exc = exc
                continue
        bound = bound * 2
    raise NotHyperellipticInvariant(f"no admissible slit pair found: {last_exc}")


def _eids_of(w: Work, cls):
    ids = w._ids_from_surface
    return [ids[c] for c in cls]


def _fold_torus_along(tri: Surface, h_tri: PmAutomorphism, ray) -> Surface:
    w = Work.from_surface(tri)
    ids = w._ids_from_surface
    start1 = ids[ray[0]]
    start2 = ids[h_tri.edge_map[ray[0]]]
    refs = [start2]
    w.corner_refs.append(refs)
    path1, _ = materialize_segment(w, start1, ray[1])
    forbid = set(path1) | {w.glue[e][0] for e in path1}
    path2, _ = materialize_segment(w, refs[0], -ray[1], forbid)
    phi = transport_edge_automorphism(w, tri, h_tri.edge_map, -1)
    fold_by_involution(w, list(path1) + list(path2), phi)
    w.marked = set()
    X = w.to_surface()
    X.require_valid()
    _pts, st = X.cone_points()
    assert st.genus == 2 and st.orders == (2, 2) and not st.is_square, str(st)
    return X


# ---------------------------------------------------------------------------
# square-tiled enumeration


_DIR_VECS = (vec(1, 0), vec(0, 1), vec(-1, 0), vec(0, -1))


def _partner_options(d: int):
    return (((d + 2) % 4, 1), (d, -1))


def enumerate_matchings(n: int):
    """All connected sign-glued matchings of n unit squares, up to square
    relabeling (first-visit order canonical).  Yields dicts on edge codes
    4*p + d with d in (R, U, L, D).
    """
    match: dict[int, int] = {}

    def unmatched(limit):
        for p in range(limit):
            for d in range(4):
                if 4 * p + d not in match:
                    return 4 * p + d
        return None

    def rec(active: int):
        e = unmatched(active)
        if e is None:
            if active == n:
                yield dict(match)
            return
        p, d = divmod(e, 4)
        hi = min(active + 1, n)
        for q in range(hi):
            for d2, _sg in _partner_options(d):
                f = 4 * q + d2
                if f == e or f in match:
                    continue
                match[e] = f
                match[f] = e
                yield from rec(max(active, q + 1))
                del match[e]
                del match[f]

    yield from rec(1)


def _match_invariants(match: dict[int, int], n: int):
    """(genus, orders, is_square) without building a Surface."""
    # vertex classes: next corner around vertex = partner of the incoming edge
    parent = list(range(4 * n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p in range(n):
        for c in range(4):
            e_in = 4 * p + (c - 1) % 4
            f = match[e_in]
            a, b = find(4 * p + c), find(f)
            if a != b:
                parent[a] = b
    sizes: dict[int, int] = {}
    for x in range(4 * n):
        sizes[find(x)] = sizes.get(find(x), 0) + 1
    orders = []
    for sz in sizes.values():
        assert sz % 2 == 0, "odd corner class in a valid matching"
        k = sz // 2
        if k != 2:
            orders.append(k - 2)
    V = len(sizes)
    genus = (2 - V + n) // 2
    assert (2 - V + n) % 2 == 0
    # holonomy: two-colour the squares across the signs
    colour = {0: 1}
    stack = [0]
    is_square = True
    sign_of = {}
    for e, f in match.items():
        p, d = divmod(e, 4)
        q, d2 = divmod(f, 4)
        sg = 1 if d2 == (d + 2) % 4 else -1
        sign_of[(p, q, e)] = sg
    while stack:
        p = stack.pop()
        for d in range(4):
            f = match[4 * p + d]
            q, d2 = divmod(f, 4)
            sg = 1 if d2 == (d + 2) % 4 else -1
            if q not in colour:
                colour[q] = colour[p] * sg
                stack.append(q)
            elif colour[q] != colour[p] * sg:
                is_square = False
    return genus, tuple(sorted(orders, reverse=True)), is_square


def surface_from_matching(match: dict[int, int], n: int) -> Surface:
    sq = list(_DIR_VECS)
    polys = [list(sq) for _ in range(n)]
    gluing = {}
    for e, f in match.items():
        p, d = divmod(e, 4)
        q, d2 = divmod(f, 4)
        sg = 1 if d2 == (d + 2) % 4 else -1
        gluing[(p, d)] = ((q, d2), sg)
    return Surface(1, polys, gluing)


@dataclass(frozen=True)
class StratumPattern:
    genus: int | None
    orders: tuple[int, ...] | None
    square: bool | None  # None = either

    def matches(self, genus, orders, is_square) -> bool:
        if self.genus is not None and genus != self.genus:
            return False
        if self.orders is not None and tuple(sorted(orders, reverse=True)) != tuple(
            sorted(self.orders, reverse=True)
        ):
            return False
        if self.square is not None and is_square != self.square:
            return False
        return True

    @staticmethod
    def parse(text: str) -> "StratumPattern":
        parts = text.split(":")
        if len(parts) != 3:
            raise BadParameters("pattern is genus:orders:square|nonsquare|any")
        genus = None if parts[0] in ("", "*") else int(parts[0])
        orders = (
            None
            if parts[1] in ("", "*")
            else tuple(int(x) for x in parts[1].split(",") if x)
        )
        sq = {"square": True, "nonsquare": False, "any": None, "*": None, "": None}[
            parts[2]
        ]
        return StratumPattern(genus, orders, sq)


def max_cells_bound() -> int:
    return int(os.environ.get(MAX_CELLS_ENV, "8"))


def _canonical_code(match: dict[int, int], n: int):
    """Canonical encoding of a matching up to square relabeling.

    Two matchings encode the same translation surface iff they agree up to
    relabeling (the unit-square tiling anchored at the cone points is
    intrinsic), so equal codes characterize isomorphism here.
    """
    best = None
    for root in range(n):
        order = [root]
        index = {root: 0}
        k = 0
        while k < len(order):
            p = order[k]
            k += 1
            for d in range(4):
                q = match[4 * p + d] // 4
                if q not in index:
                    index[q] = len(order)
                    order.append(q)
        code = tuple(
            (index[match[4 * p + d] // 4], match[4 * p + d] % 4)
            for p in order
            for d in range(4)
        )
        if best is None or code < best:
            best = code
    return best


def enumerate_square_tiled(
    pattern: StratumPattern, max_cells: int
) -> list[Surface]:
    """Square-tiled surfaces matching the pattern, up to isomorphism."""
    if max_cells > max_cells_bound():
        raise BoundTooLarge(
            f"max_cells {max_cells} exceeds the configured bound {max_cells_bound()}"
        )
    found: list[Surface] = []
    codes: set = set()
    for n in range(1, max_cells + 1):
        for match in enumerate_matchings(n):
            genus, orders, is_sq = _match_invariants(match, n)
            if not pattern.matches(genus, orders, is_sq):
                continue
            code = (n, _canonical_code(match, n))
            if code in codes:
                continue
            codes.add(code)
            surf = surface_from_matching(match, n)
            if surf.validate():
                continue
            found.append(surf)
    return found


def first_square_tiled(pattern: StratumPattern, max_cells: int) -> Surface:
    """The first (in canonical enumeration order) surface in the pattern."""
    if max_cells > max_cells_bound():
        raise BoundTooLarge(
            f"max_cells {max_cells} exceeds the configured bound {max_cells_bound()}"
        )
    for n in range(1, max_cells + 1):
        for match in enumerate_matchings(n):
            genus, orders, is_sq = _match_invariants(match, n)
            if pattern.matches(genus, orders, is_sq):
                surf = surface_from_matching(match, n)
                if not surf.validate():
                    return surf
    raise QuadSurfError(f"no surface matches {pattern} up to {max_cells} cells")
