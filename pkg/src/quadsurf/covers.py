"""Degree-2 covering machinery: orientation double cover, involution lifts,
quotients, and the main construction pipeline (X,q) -> (Y,alpha) -> (Z,omega).

All covers are represented cell-to-cell.  The sheet involution generates the
deck group; lifting a base involution is formulaic on the two-sheet model, so
no search is ever needed upstairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    AlreadySquare,
    DoesNotCommuteWithDeck,
    NoHyperellipticInvolution,
    NotHyperellipticInvariant,
    NotInvolution,
    QuadSurfError,
)
from .exactnum import QE_ZERO, QuadExt, V_ZERO, Vec2
from .involutions import (
    PmAutomorphism,
    delaunay_cells,
    find_pm_automorphisms,
    fixed_points,
    involutions_of,
)
from .surfcore import Edge, Surface
from .surgery import Work


@dataclass
class CoverData:
    """A degree-2 covering between surfaces with its sheet involution."""

    total: Surface
    base: Surface
    cell_projection: dict[int, int]
    sheet_involution: PmAutomorphism
    branch_locus: tuple[frozenset, ...]  # base vertex classes
    edge_projection: dict[Edge, Edge] = field(default_factory=dict)

    def project_class(self, cls: frozenset) -> frozenset:
        e = next(iter(cls))
        return self.base.vertex_class_of(self.edge_projection[e])

    def fiber_classes(self, base_cls: frozenset) -> list[frozenset]:
        out = []
        for cls in self.total.vertex_classes:
            if self.project_class(cls) == base_cls:
                out.append(cls)
        return out

    def verify(self) -> list[str]:
        out = []
        t, b = self.total, self.base
        inv = self.sheet_involution
        for e, img in self.edge_projection.items():
            sheet = QuadExt.rational(1)
            if t.vec(e) == b.vec(img).scale(QuadExt.rational(-1)):
                sheet = QuadExt.rational(-1)
            elif t.vec(e) != b.vec(img):
                out.append(f"edge {e}: projection not a local isometry")
                continue
            # deck consistency: projection folds the sheet involution away
            if self.edge_projection[inv.edge_map[e]] != img:
                out.append(f"edge {e}: projection not deck-invariant")
        for cls in b.vertex_classes:
            n = len(self.fiber_classes(cls))
            if cls in self.branch_locus:
                if n != 1:
                    out.append("branch class without a single preimage")
            elif n != 2:
                out.append("regular class without two preimages")
        return out

    def check_order_bookkeeping(self) -> None:
        """Cone orders must transform by the double-cover order formulas:
        two equal orders off the branch locus, 2*ord+2 over a branch point."""
        b, t = self.base, self.total
        for cls in b.vertex_classes:
            k = b.class_angle_multiple(cls)
            fibers = self.fiber_classes(cls)
            if cls in self.branch_locus:
                assert len(fibers) == 1, "branch fiber not a single point"
                kt = t.class_angle_multiple(fibers[0])
                assert kt == 2 * k, (
                    f"branch order mismatch: base angle {k}pi, total {kt}pi"
                )
            else:
                assert len(fibers) == 2, "regular fiber not two points"
                for f in fibers:
                    assert t.class_angle_multiple(f) == k, "unbranched order changed"


# ---------------------------------------------------------------------------
# orientation double cover


def orientation_double_cover(s: Surface) -> CoverData:
    """The double cover on which the quadratic differential becomes a square.

    Two copies of every polygon, the second with negated vectors; sign +1
    gluings stay on their sheet, sign -1 gluings cross sheets and become
    translations.  Branched over the odd cone angles (odd-order zeroes and
    simple poles).
    """
    s.require_valid()
    flag, _w = s.holonomy_is_square()
    if flag:
        raise AlreadySquare("holonomy already trivial: the cover is disconnected")
    n = s.n_polygons
    minus = QuadExt.rational(-1)
    polys = [list(p) for p in s.polygons] + [
        [v.scale(minus) for v in p] for p in s.polygons
    ]
    gluing = {}
    for e, (e2, sg) in s.gluing.items():
        (p, i), (q, j) = e, e2
        if sg == 1:
            gluing[(p, i)] = ((q, j), 1)
            gluing[(n + p, i)] = ((n + q, j), 1)
        else:
            gluing[(p, i)] = ((n + q, j), 1)
            gluing[(n + p, i)] = ((q, j), 1)
    marked = set()
    for (p, i) in s.marked:
        marked.add((p, i))
        marked.add((n + p, i))
    total = Surface(s.field_d, polys, gluing, marked, allow_poles=False)
    total.require_valid()
    assert total.holonomy_is_square()[0], "cover failed to trivialize holonomy"
    inv_map = {}
    for p in range(n):
        for i in range(len(s.polygons[p])):
            inv_map[(p, i)] = (n + p, i)
            inv_map[(n + p, i)] = (p, i)
    sheet = PmAutomorphism(total, -1, inv_map)
    assert sheet.verify() == []
    proj = {}
    eproj = {}
    for p in range(n):
        proj[p] = p
        proj[n + p] = p
        for i in range(len(s.polygons[p])):
            eproj[(p, i)] = (p, i)
            eproj[(n + p, i)] = (p, i)
    branch = tuple(
        cls
        for cls in s.vertex_classes
        if s.class_angle_multiple(cls) % 2 == 1
    )
    cov = CoverData(total, s, proj, sheet, branch, eproj)
    problems = cov.verify()
    assert not problems, problems
    cov.check_order_bookkeeping()
    return cov


def lift_involution(
    cov: CoverData, h: PmAutomorphism
) -> tuple[PmAutomorphism, PmAutomorphism]:
    """Lift a base -Id involution through the orientation double cover.

    Returns (i_g, alt): i_g is the derivative +Id lift (it fixes the abelian
    form upstairs); alt = i_f o i_g has derivative -Id and is the
    hyperelliptic involution of the total surface.
    """
    if h.surface.polygons != cov.base.polygons:
        raise DoesNotCommuteWithDeck("involution does not live on the base")
    if h.derivative != -1 or not h.is_involution():
        raise NotInvolution("need a -Id involution downstairs")
    n = cov.base.n_polygons
    ig_map = {}
    alt_map = {}
    for (p, i), (q, j) in h.edge_map.items():
        ig_map[(p, i)] = (n + q, j)
        ig_map[(n + p, i)] = (q, j)
        alt_map[(p, i)] = (q, j)
        alt_map[(n + p, i)] = (n + q, j)
    ig = PmAutomorphism(cov.total, 1, ig_map)
    alt = PmAutomorphism(cov.total, -1, alt_map)
    for a in (ig, alt):
        problems = a.verify()
        assert not problems, problems
        assert a.is_involution()
    return ig, alt


# ---------------------------------------------------------------------------
# quotient by an involution


def _materialize_involution(s: Surface, a: PmAutomorphism):
    """Refine so the involution has no fixed cells or self-reversed edges.

    Returns (work, phi on eids, fixed vertex corner eids).
    """
    w = Work.from_surface(s)
    ids = w._ids_from_surface
    phi = {ids[e]: ids[img] for e, img in a.edge_map.items()}
    D = QuadExt.rational(a.derivative)

    fixed_corners: list[int] = []
    w.corner_refs.append(fixed_corners)  # keep refs valid across splits
    for cls in s.vertex_classes:
        if a.apply_class(cls) == cls:
            fixed_corners.append(ids[next(iter(cls))])

    # split self-reversed edges at their midpoints
    half = QuadExt.rational(1) / 2
    done = set()
    for e_ref, img in list(a.edge_map.items()):
        e = ids[e_ref]
        if e in done:
            continue
        pair = w.glue[e]
        if phi[e] != pair[0]:
            continue
        ebar = pair[0]
        done.add(e)
        done.add(ebar)
        ea, eb = w.split_edge(e, half)
        # partner side got split too: recover its halves
        fa = w.glue[eb][0]
        fb = w.glue[ea][0]
        for x in (e, ebar):
            phi.pop(x)
        phi[ea], phi[eb] = fa, fb
        phi[fa], phi[fb] = ea, eb
        fixed_corners.append(eb)  # midpoint vertex

    # fan -Id-fixed cells from their symmetry centres
    if a.derivative == -1:
        for pid in list(w.polys):
            lst = list(w.polys[pid])
            if w.cell_of.get(phi[lst[0]]) != pid:
                continue
            pos = w.cell_corner_positions(pid)
            c0 = lst[0]
            center = (pos[c0] + pos[phi[c0]]).scale(half)
            img_of = {e: phi[e] for e in lst}
            spokes = w.fan_from_interior(pid, center)
            spoke_at = dict(zip(lst, spokes))
            in_at = {}
            for k, e in enumerate(lst):
                tri = w.polys[w.cell_of[e]]
                in_at[e] = tri[2]  # [spoke_out, e, spoke_in]: in-spoke ends at centre
            for e in lst:
                phi[spoke_at[e]] = spoke_at[img_of[e]]
                phi[in_at[e]] = in_at[img_of[e]]
            fixed_corners.append(spokes[0])

    # verify the extended map
    for e, img in phi.items():
        assert w.vec[img] == w.vec[e].scale(D), "materialized map broke vectors"
        p2, sg = w.glue[e]
        q2, sg2 = w.glue[img]
        assert q2 == phi[p2] and sg2 == sg, "materialized map broke gluing"
        assert phi[img] == e, "materialized map not involutive"
    for e in w.glue:
        assert phi[e] != w.glue[e][0], "self-reversed edge survived"
    for pid, lst in w.polys.items():
        assert w.cell_of[phi[lst[0]]] != pid, "fixed cell survived materialization"
    return w, phi, fixed_corners


def quotient_by_involution(
    s: Surface, a: PmAutomorphism, companions: tuple[PmAutomorphism, ...] = ()
) -> tuple[CoverData, list[PmAutomorphism]]:
    """Quotient a surface by a ±Id involution; the input becomes the total
    surface of the returned degree-2 cover (refined at the fixed locus).

    Fixed points become cone points of halved angle; regular branch images
    are marked so downstream rationality tests can find them.  Companion
    automorphisms of `s` commuting with `a` are transported to the refined
    total surface and returned alongside.
    """
    if not a.is_involution() or a.is_identity():
        raise NotInvolution("quotient needs a nontrivial involution")
    w, phi, fixed_corners = _materialize_involution(s, a)
    D = a.derivative

    # even upstairs angles at fixed vertices (or the quotient is not flat)
    for c in fixed_corners:
        k = w.class_angle_multiple(c)
        assert k % 2 == 0, f"fixed vertex with odd angle {k}pi cannot fold"

    cell_img = {pid: w.cell_of[phi[lst[0]]] for pid, lst in w.polys.items()}
    reps = sorted(pid for pid in w.polys if pid <= cell_img[pid])
    rep_index = {pid: k for k, pid in enumerate(reps)}

    down_ref: dict[int, tuple[int, int]] = {}
    polys = []
    for pid in reps:
        lst = w.polys[pid]
        polys.append([w.vec[e] for e in lst])
        for i, e in enumerate(lst):
            down_ref[e] = (rep_index[pid], i)

    def down(e: int) -> tuple[int, int]:
        if e in down_ref:
            return down_ref[e]
        return down_ref[phi[e]]

    gluing = {}
    for pid in reps:
        for e in w.polys[pid]:
            e2, sg = w.glue[e]
            if w.cell_of[e2] in rep_index:
                tgt, tsg = e2, sg
            else:
                tgt = phi[e2]
                v1, v2 = w.vec[e], w.vec[tgt]
                tsg = 1 if v2 == -v1 else -1
                assert v2 == -v1 or v2 == v1
                assert tsg == (sg if D == 1 else -sg)
            gluing[down_ref[e]] = (down_ref[tgt], tsg)
    marked = {down(e) for e in w.marked}
    allow_poles = s.allow_poles or D == -1
    base = Surface(w.d, polys, gluing, marked, allow_poles)
    base.require_valid()

    # branch locus: classes of the fixed vertices; mark the regular ones
    branch = []
    extra_marks = set()
    for c in sorted(set(fixed_corners)):
        ref = down(c)
        cls = base.vertex_class_of(ref)
        if cls not in branch:
            branch.append(cls)
            if base.class_angle_multiple(cls) == 2:
                extra_marks.add(ref)
    if extra_marks:
        base = base.with_marked(extra_marks)
        branch = [base.vertex_class_of(next(iter(cls))) for cls in branch]

    total = w.to_surface()
    ref_map = w.edge_ref_map()
    order = sorted(w.polys)
    pidx = {pid: k for k, pid in enumerate(order)}
    proj = {pidx[pid]: rep_index[pid if pid in rep_index else cell_img[pid]]
            for pid in order}
    eproj = {ref_map[e]: down(e) for e in w.vec}
    sheet = PmAutomorphism(
        total, D, {ref_map[e]: ref_map[img] for e, img in phi.items()}
    )
    assert sheet.verify() == []
    cov = CoverData(total, base, proj, sheet, tuple(branch), eproj)
    problems = cov.verify()
    assert not problems, problems
    cov.check_order_bookkeeping()
    moved = []
    for comp in companions:
        from .surgery import transport_edge_automorphism

        em = transport_edge_automorphism(w, s, comp.edge_map, comp.derivative)
        moved.append(
            PmAutomorphism(
                total,
                comp.derivative,
                {ref_map[e]: ref_map[img] for e, img in em.items()},
            )
        )
        assert moved[-1].verify() == []
    return cov, moved


# ---------------------------------------------------------------------------
# involution selection


def select_hyperelliptic(s: Surface) -> PmAutomorphism:
    """The involution the construction quotients by.

    Genus >= 2: the unique -Id involution with 2g+2 fixed points.  Genus 1:
    the -Id involution whose fixed points avoid every cone and marked point
    (the elliptic involution compatible with the distinguished points).
    """
    cells = delaunay_cells(s)
    g = cells.genus
    cands = []
    for a in involutions_of(cells, -1):
        locus = fixed_points(a)
        if g >= 2:
            if locus.count == 2 * g + 2:
                cands.append(a)
        elif g == 1:
            special = [
                cls
                for cls in locus.vertices
                if cells.class_angle_multiple(cls) != 2
                or cells.is_marked_class(cls)
            ]
            if not special:
                cands.append(a)
        else:
            raise NoHyperellipticInvolution("genus 0 has no hyperelliptic quotient")
    if len(cands) != 1:
        raise NoHyperellipticInvolution(
            f"expected a unique admissible involution, found {len(cands)}"
        )
    return cands[0]


# ---------------------------------------------------------------------------
# the main construction pipeline


@dataclass
class Pipeline:
    X: Surface
    Y: Surface
    Z: Surface
    f: CoverData
    g: CoverData
    hX: PmAutomorphism
    ig: PmAutomorphism
    Bg: tuple[frozenset, ...]
    checks: dict[str, bool]

    @property
    def genera(self) -> tuple[int, int, int]:
        return (self.X.genus, self.Y.genus, self.Z.genus)


def main_construction(X: Surface) -> Pipeline:
    """(X, q) -> orientation double cover (Y, alpha) -> quotient (Z, omega).

    The hyperelliptic involution of X lifts to the +Id involution i_g of Y;
    Z = Y / i_g carries the descended abelian differential.  All the
    structural facts of the construction are asserted along the way.
    """
    Xc = delaunay_cells(X)
    if Xc.holonomy_is_square()[0]:
        raise AlreadySquare("main construction needs a non-square input")
    h = select_hyperelliptic(Xc)
    Xc = h.surface
    cov_f = orientation_double_cover(Xc)
    Y = cov_f.total
    ig, i_hY = lift_involution(cov_f, h)
    cov_g, (i_f_moved,) = quotient_by_involution(
        Y, ig, companions=(cov_f.sheet_involution,)
    )
    Z = cov_g.base
    checks: dict[str, bool] = {}

    # genus additivity
    checks["genus_additivity"] = Y.genus == Xc.genus + Z.genus
    assert checks["genus_additivity"], "genus(Y) != genus(X) + genus(Z)"

    # fixed points of i_g = f-preimages of Weierstrass zeroes of order != 0 mod 4
    hfix = fixed_points(h)
    expected = set()
    for cls in hfix.vertices:
        k = Xc.class_angle_multiple(cls)
        if (k - 2) % 4 != 0:
            for fib in cov_f.fiber_classes(cls):
                expected.add(fib)
    ig_fixed = {
        cls for cls in Y.vertex_classes if ig.apply_class(cls) == cls
    }
    checks["ig_fixed_points"] = ig_fixed == expected
    assert checks["ig_fixed_points"], "Lemma on i_g fixed points failed"

    # i_f descends to the hyperelliptic involution of Z
    ihz = push_involution_through(cov_g, i_f_moved)
    fz = fixed_points(ihz)
    checks["z_hyperelliptic"] = fz.count == 2 * Z.genus + 2
    assert checks["z_hyperelliptic"], "descended involution not hyperelliptic on Z"

    # deck consistency
    checks["deck_f"] = all(
        cov_f.edge_projection[cov_f.sheet_involution.edge_map[e]]
        == cov_f.edge_projection[e]
        for e in cov_f.edge_projection
    )
    checks["deck_g"] = all(
        cov_g.edge_projection[cov_g.sheet_involution.edge_map[e]]
        == cov_g.edge_projection[e]
        for e in cov_g.edge_projection
    )
    assert checks["deck_f"] and checks["deck_g"]

    # Y is hyperelliptic with involution i_f o i_g
    fy = fixed_points(i_hY)
    checks["y_hyperelliptic"] = fy.count == 2 * Y.genus + 2
    assert checks["y_hyperelliptic"], "i_f o i_g not hyperelliptic on Y"

    Bg = tuple(cov_g.branch_locus)
    checks["bg_count_matches_fixed"] = len(Bg) == len(ig_fixed)
    return Pipeline(Xc, Y, Z, cov_f, cov_g, h, ig, Bg, checks)


def push_involution_through(cov: CoverData, a: PmAutomorphism) -> PmAutomorphism:
    """Descend an automorphism of the total surface to the base.

    Requires a to commute with the deck involution (asserted edge-wise).
    The descended derivative stays ±Id because deck sheets differ by ±Id.
    """
    inv = cov.sheet_involution
    amap = a.edge_map
    imap = inv.edge_map
    for e in amap:
        if amap[imap[e]] != imap[amap[e]]:
            raise DoesNotCommuteWithDeck("automorphism does not normalize the deck")
    down: dict[Edge, Edge] = {}
    for e, img in amap.items():
        de, dimg = cov.edge_projection[e], cov.edge_projection[img]
        if de in down:
            assert down[de] == dimg, "descent not well defined"
        down[de] = dimg
    # derivative: compare vectors downstairs
    some = next(iter(down))
    v, iv = cov.base.vec(some), cov.base.vec(down[some])
    if iv == v:
        d = 1
    else:
        assert iv == v.scale(QuadExt.rational(-1))
        d = -1
    out = PmAutomorphism(cov.base, d, down)
    problems = out.verify()
    assert not problems, problems
    assert out.is_involution()
    return out


# ---------------------------------------------------------------------------
# the sphere path (the alternative route through X / hyperelliptic)


def sphere_path(X: Surface) -> Surface:
    """Quotient X by its hyperelliptic involution, then take the orientation
    double cover of the resulting sphere; isomorphic to the pipeline's Z."""
    Xc = delaunay_cells(X)
    h = select_hyperelliptic(Xc)
    cov_h, _ = quotient_by_involution(h.surface, h)
    sphere = cov_h.base
    assert sphere.genus == 0, "hyperelliptic quotient is not a sphere"
    cov_up = orientation_double_cover(sphere)
    return cov_up.total


# ---------------------------------------------------------------------------
# reconstruction (inverse direction of the main construction)


def reconstruct(Z: Surface) -> Surface:
    """Rebuild (X, q) from a translation surface (Z, omega) with the branch
    data of the main construction.

    Genus-1 input: Z carries four marked points (the rational set B_g); the
    double cover is realized by two symmetric parallel slits and X is the
    fold.  Genus >= 2 input: the zeroes of omega are Weierstrass points and X
    is the cut-and-fold along a connecting saddle connection.
    """
    Z.require_valid()
    if not Z.holonomy_is_square()[0]:
        raise NotHyperellipticInvariant("reconstruction input must carry omega")
    g = Z.genus
    if g == 1:
        from .builders import fold_torus_with_marks

        return fold_torus_with_marks(Z)
    from .builders import cut_and_fold_qm1111

    return cut_and_fold_qm1111(Z)
