"""Canonical Delaunay structure, flat ±Id automorphisms, and isomorphism.

The flip algorithm with the exact in-circle predicate produces a canonical
cell decomposition (maximal co-circular unions of Delaunay triangles).  Any
derivative-±Id self-map of the flat structure permutes those cells, so the
automorphism and isomorphism searches run on the cell complex by seeded
propagation.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NotInvolution, QuadSurfError
from .exactnum import QE_ZERO, QuadExt, V_ZERO, Vec2
from .surfcore import Edge, Surface, orient
from .surgery import Work, triangulate_cell


# ---------------------------------------------------------------------------
# exact in-circle predicate and flips


def incircle(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> int:
    """Sign of the in-circle determinant: +1 iff d is strictly inside the
    circumcircle of the ccw triangle (a, b, c)."""
    rows = []
    for p in (a, b, c):
        dx, dy = p.x - d.x, p.y - d.y
        rows.append((dx, dy, dx * dx + dy * dy))
    det = (
        rows[0][0] * (rows[1][1] * rows[2][2] - rows[1][2] * rows[2][1])
        - rows[0][1] * (rows[1][0] * rows[2][2] - rows[1][2] * rows[2][0])
        + rows[0][2] * (rows[1][0] * rows[2][1] - rows[1][1] * rows[2][0])
    )
    return det.sign()


def _develop_quad(w: Work, e: int):
    """Develop the two triangles adjacent to edge e into e's chart.

    Returns (O, Q, P1, P2, sigma): quad corners O->Q->P1->P2 ccw where e runs
    O->P1, the opposite vertex of e's own triangle is P2, the neighbor's is Q;
    sigma is the chart sign of the neighbor's development.
    """
    e2, s = w.glue[e]
    t1, t2 = w.cell_of[e], w.cell_of[e2]
    l1, l2 = w.polys[t1], w.polys[t2]
    assert len(l1) == 3 and len(l2) == 3
    i1 = l1.index(e)
    a, b = l1[(i1 + 1) % 3], l1[(i1 + 2) % 3]
    i2 = l2.index(e2)
    c, d = l2[(i2 + 1) % 3], l2[(i2 + 2) % 3]
    sigma = QuadExt.rational(1 if s == 1 else -1)
    O = V_ZERO
    P1 = w.vec[e]
    P2 = P1 + w.vec[a]
    Q = O + w.vec[c].scale(sigma)
    return O, Q, P1, P2, sigma, (a, b, c, d)


def _flip(w: Work, e: int) -> None:
    """Flip edge e (both adjacent cells must be triangles, quad strictly convex)."""
    e2, _s = w.glue[e]
    t1, t2 = w.cell_of[e], w.cell_of[e2]
    if t1 == t2:
        raise QuadSurfError("cannot flip an edge adjacent to one triangle twice")
    O, Q, P1, P2, sigma, (a, b, c, d) = _develop_quad(w, e)
    # strict convexity of O,Q,P1,P2
    quad = [O, Q, P1, P2]
    for k in range(4):
        assert orient(quad[k], quad[(k + 1) % 4], quad[(k + 2) % 4]) > 0, (
            "flip quad not strictly convex"
        )
    g, g2 = w._new_eid(), w._new_eid()
    w.vec[g] = Q - P2  # P2 -> Q
    w.vec[g2] = P2 - Q  # Q -> P2
    w.glue[g] = (g2, 1)
    w.glue[g2] = (g, 1)
    # re-chart c and d into e's chart
    for x in (c, d):
        w.vec[x] = w.vec[x].scale(sigma)
    # new triangles: (Q,P1,P2) = [d, a, g]; (O,Q,P2) = [c, g2, b]
    pa, pb = w._new_pid(), w._new_pid()
    w.polys[pa] = [d, a, g]
    w.polys[pb] = [c, g2, b]
    w.root[pa] = (-1, V_ZERO)
    w.root[pb] = (-1, V_ZERO)
    for x in (d, a, g):
        w.cell_of[x] = pa
    for x in (c, g2, b):
        w.cell_of[x] = pb
    for t in (t1, t2):
        del w.polys[t]
        del w.root[t]
    # the flipped pair's start corners survive on other edges: move marks
    if e in w.marked:
        w.marked.discard(e)
        w.marked.add(c)  # c starts at O
    if e2 in w.marked:
        w.marked.discard(e2)
        w.marked.add(a)  # a starts at P1
    for x in (e, e2):
        del w.vec[x]
        w.glue.pop(x, None)
        w.cell_of.pop(x, None)
    # recompute signs for pairs touched by the re-charting
    if sigma.sign() == -1:
        for x in (c, d):
            pair = w.glue.get(x)
            if pair is None:
                continue
            y, _ = pair
            vx, vy = w.vec[x], w.vec[y]
            if vy == -vx:
                w.glue[x], w.glue[y] = (y, 1), (x, 1)
            elif vy == vx:
                w.glue[x], w.glue[y] = (y, -1), (x, -1)
            else:
                raise AssertionError("re-charted pair lost isometry")


def _delaunay_bad(w: Work, e: int) -> bool:
    O, Q, P1, P2, _sigma, _ = _develop_quad(w, e)
    return incircle(O, P1, P2, Q) > 0


def _flip_to_delaunay(w: Work) -> None:
    rounds = 0
    limit = 80 * (len(w.vec) + 4) ** 2
    active = True
    while active:
        active = False
        for e in sorted(w.glue):
            if e not in w.glue:
                continue
            e2 = w.glue[e][0]
            if e > e2:
                continue
            if w.cell_of[e] == w.cell_of[e2]:
                if _delaunay_bad(w, e):
                    raise QuadSurfError(
                        "non-Delaunay edge doubly adjacent to one triangle"
                    )
                continue
            if _delaunay_bad(w, e):
                _flip(w, e)
                active = True
            rounds += 1
            if rounds > limit:
                raise AssertionError("flip algorithm did not terminate")


# ---------------------------------------------------------------------------
# co-circular grouping into canonical cells


def circumcenter(a: Vec2, b: Vec2, c: Vec2) -> Vec2:
    two = QuadExt.rational(2)
    ab, ac = b - a, c - a
    rb = b.dot(b) - a.dot(a)
    rc = c.dot(c) - a.dot(a)
    det = (ab.x * ac.y - ab.y * ac.x) * two * two
    assert det.sign() != 0
    x = (rb * two * ac.y - rc * two * ab.y) / det
    y = (rc * two * ab.x - rb * two * ac.x) / det
    return Vec2(x, y)


def delaunay_cells(s: Surface) -> Surface:
    """Canonical Delaunay cell decomposition (maximal co-circular cells).

    The output is isometry-natural: every derivative-±Id isometry of the flat
    surface permutes its polygons.  Vertices and marks are preserved.
    """
    s.require_valid()
    w = Work.from_surface(s)
    for pid in list(w.polys):
        triangulate_cell(w, pid)
    _flip_to_delaunay(w)
    # group triangles across co-circular internal edges
    parent: dict[int, int] = {p: p for p in w.polys}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    cocirc: set[int] = set()
    for e in list(w.glue):
        e2 = w.glue[e][0]
        if e > e2:
            continue
        if w.cell_of[e] != w.cell_of[e2]:
            O, Q, P1, P2, _sig, _ = _develop_quad(w, e)
            if incircle(O, P1, P2, Q) == 0:
                cocirc.add(e)
                cocirc.add(e2)
                ra, rb = find(w.cell_of[e]), find(w.cell_of[e2])
                if ra != rb:
                    parent[ra] = rb
    comps: dict[int, list[int]] = {}
    for p in w.polys:
        comps.setdefault(find(p), []).append(p)

    # develop each component and read off its boundary polygon
    out_polys: list[list[Vec2]] = []
    out_edge_of: dict[int, tuple[int, int]] = {}  # boundary eid -> (cell, idx)
    out_marked: set[tuple[int, int]] = set()
    chart: dict[int, tuple[QuadExt, Vec2]] = {}  # triangle -> (sigma, offset)
    for comp_root, tris in sorted(comps.items()):
        seed = min(tris)
        chart[seed] = (QuadExt.rational(1), V_ZERO)
        stack = [seed]
        seen = {seed}
        while stack:
            t = stack.pop()
            sig, off = chart[t]
            pos = w.cell_corner_positions(t)
            for e in w.polys[t]:
                if e not in cocirc:
                    continue
                e2, sg = w.glue[e]
                t2 = w.cell_of[e2]
                sig2 = sig * QuadExt.rational(sg)
                # end corner of e should land where start of e develops + vec
                start_dev = pos[e].scale(sig) + off
                end_dev = start_dev + w.vec[e].scale(sig)
                pos2 = w.cell_corner_positions(t2)
                # start(e2) is identified with end(e)
                off2 = end_dev - pos2[e2].scale(sig2)
                if t2 in seen:
                    if chart[t2] != (sig2, off2):
                        raise QuadSurfError(
                            "co-circular component wraps around the surface"
                        )
                    continue
                chart[t2] = (sig2, off2)
                seen.add(t2)
                stack.append(t2)
        if seen != set(tris):
            raise AssertionError("component traversal incomplete")
        # boundary walk
        boundary = [
            e for t in tris for e in w.polys[t] if e not in cocirc
        ]
        assert boundary, "closed co-circular component (surface wraps)"
        start = min(boundary)
        cyc = [start]
        cur = start
        while True:
            f = w.next_in_cell(cur)
            while f in cocirc:
                f = w.next_in_cell(w.glue[f][0])
            if f == start:
                break
            cyc.append(f)
            cur = f
            if len(cyc) > len(boundary):
                raise QuadSurfError("component boundary is not a single cycle")
        if len(cyc) != len(boundary):
            raise QuadSurfError("co-circular component has several boundary cycles")
        cell_idx = len(out_polys)
        vecs = []
        for k, e in enumerate(cyc):
            sig, off = chart[w.cell_of[e]]
            vecs.append(w.vec[e].scale(sig))
            out_edge_of[e] = (cell_idx, k)
            if any(
                x in w.marked
                for x in _corner_orbit_in_component(w, e, cocirc)
            ):
                out_marked.add((cell_idx, k))
        out_polys.append(vecs)
        # sanity: all boundary corners co-circular around one centre
        pts, acc = [], V_ZERO
        for v in vecs:
            pts.append(acc)
            acc = acc + v
        if len(pts) > 3:
            ctr = circumcenter(pts[0], pts[1], pts[2])
            r2 = (pts[0] - ctr).norm2()
            for p in pts[3:]:
                assert (p - ctr).norm2() == r2, "cell corners not co-circular"

    out_glue = {}
    for e, (cell, k) in out_edge_of.items():
        e2, _sg = w.glue[e]
        cell2, k2 = out_edge_of[e2]
        v1 = out_polys[cell][k]
        v2 = out_polys[cell2][k2]
        sg_new = 1 if v2 == -v1 else (-1 if v2 == v1 else None)
        assert sg_new is not None
        out_glue[(cell, k)] = ((cell2, k2), sg_new)
    out = Surface(s.field_d, out_polys, out_glue, out_marked, s.allow_poles)
    out.require_valid()
    return out


def _corner_orbit_in_component(w: Work, e: int, cocirc: set[int]) -> list[int]:
    """Corners identified with e's start corner through co-circular edges only."""
    out = [e]
    cur = e
    while True:
        prev = w.prev_in_cell(cur)
        if prev not in cocirc:
            break
        cur = w.glue[prev][0]
        if cur == e or len(out) > len(w.vec):
            break
        out.append(cur)
    return out


def _canonical_fan_corner(pos: list[Vec2]) -> int:
    """Index of the canonical fan corner of a convex inscribed polygon."""
    ctr = circumcenter(pos[0], pos[1], pos[2])
    rel = [p - ctr for p in pos]
    keyed = sorted(range(len(rel)), key=lambda i: rel[i].sort_key())
    neg = sorted(range(len(rel)), key=lambda i: (-rel[i]).sort_key())
    v1 = rel[keyed[0]].sort_key()
    v2 = (-rel[neg[0]]).sort_key()
    return keyed[0] if v1 <= v2 else neg[0]


def delaunay(s: Surface) -> tuple[Surface, dict[int, int]]:
    """Canonical Delaunay triangulation.

    Each co-circular cell is fanned from its canonical corner (lexicographic
    least in the circumcentre-origin chart, resolved across the ±Id chart
    ambiguity), so the output is deterministic and idempotent.  Returns
    (surface, provenance): triangle index -> canonical cell index.
    """
    cells = delaunay_cells(s)
    w = Work.from_surface(cells)
    for pid in sorted(w.polys):
        lst = w.polys[pid]
        if len(lst) <= 3:
            continue
        pos_map = w.cell_corner_positions(pid)
        pos = [pos_map[e] for e in lst]
        c = lst[_canonical_fan_corner(pos)]
        while len(w.polys[w.cell_of[c]]) > 3:
            clist = w.polys[w.cell_of[c]]
            i = clist.index(c)
            c2 = clist[(i + 2) % len(clist)]
            _ga, gb = w.split_cell_chord(c, c2)
            c = gb
    out = w.to_surface()
    order = sorted(w.polys)
    prov = {k: w.root[pid][0] for k, pid in enumerate(order)}
    out.require_valid()
    return out, prov


# ---------------------------------------------------------------------------
# ±Id automorphisms and isomorphisms on the canonical cell complex


class PmAutomorphism:
    """Cell-level self-map of a surface with global derivative ±Id."""

    def __init__(self, surface: Surface, derivative: int, edge_map: dict):
        self.surface = surface
        self.derivative = int(derivative)
        self.edge_map: dict[Edge, Edge] = dict(edge_map)

    def apply_edge(self, e: Edge) -> Edge:
        return self.edge_map[e]

    apply_corner = apply_edge  # corners are edge starts

    def apply_class(self, cls: frozenset) -> frozenset:
        return frozenset(self.edge_map[c] for c in cls)

    def cell_map(self) -> dict[int, int]:
        return {e[0]: img[0] for e, img in self.edge_map.items()}

    def is_involution(self) -> bool:
        return all(
            self.edge_map[img] == e for e, img in self.edge_map.items()
        )

    def is_identity(self) -> bool:
        return all(img == e for e, img in self.edge_map.items())

    def compose(self, other: "PmAutomorphism") -> "PmAutomorphism":
        assert self.surface is other.surface or self.surface.polygons == other.surface.polygons
        m = {e: self.edge_map[other.edge_map[e]] for e in other.edge_map}
        return PmAutomorphism(self.surface, self.derivative * other.derivative, m)

    def verify(self) -> list[str]:
        s = self.surface
        out = []
        D = QuadExt.rational(self.derivative)
        for e, img in self.edge_map.items():
            if s.vec(img) != s.vec(e).scale(D):
                out.append(f"edge {e}: vector not scaled by derivative")
            pe = s.gluing.get(e)
            pim = s.gluing.get(img)
            if pe and (not pim or pim[0] != self.edge_map[pe[0]] or pim[1] != pe[1]):
                out.append(f"edge {e}: gluing not preserved")
        if sorted(self.edge_map.values()) != sorted(self.edge_map.keys()):
            out.append("not a bijection")
        for cls in s.vertex_classes:
            if s.is_marked_class(cls) != s.is_marked_class(
                s.vertex_class_of(self.edge_map[next(iter(cls))])
            ):
                out.append("marked points not preserved")
        return out

    def __eq__(self, other):
        return (
            isinstance(other, PmAutomorphism)
            and self.derivative == other.derivative
            and self.edge_map == other.edge_map
        )

    def __hash__(self):
        return hash((self.derivative, tuple(sorted(self.edge_map.items()))))

    def __repr__(self):
        return f"<PmAutomorphism D={self.derivative:+d} on {self.surface!r}>"


def _propagate(s1: Surface, s2: Surface, seed: tuple[Edge, Edge], derivative: int):
    """Grow an edge correspondence from a seed; None on contradiction."""
    D = QuadExt.rational(derivative)
    m: dict[Edge, Edge] = {}
    stack = [seed]
    while stack:
        e, f = stack.pop()
        if e in m:
            if m[e] != f:
                return None
            continue
        if s2.vec(f) != s1.vec(e).scale(D):
            return None
        m[e] = f
        stack.append((s1.next_edge(e), s2.next_edge(f)))
        pe, pf = s1.gluing.get(e), s2.gluing.get(f)
        if (pe is None) != (pf is None):
            return None
        if pe is not None:
            if pe[1] != pf[1]:
                return None
            stack.append((pe[0], pf[0]))
    total = sum(len(p) for p in s1.polygons)
    if len(m) != total or len(set(m.values())) != total:
        return None
    # marked classes must correspond
    for cls in s1.vertex_classes:
        img = s2.vertex_class_of(m[next(iter(cls))])
        if s1.is_marked_class(cls) != s2.is_marked_class(img):
            return None
    return m


def _all_matchings(s1: Surface, s2: Surface, derivative: int):
    if sum(len(p) for p in s1.polygons) != sum(len(p) for p in s2.polygons):
        return []
    e0 = (0, 0)
    out = []
    seen = set()
    for f in s2.edges():
        m = _propagate(s1, s2, (e0, f), derivative)
        if m is not None:
            key = tuple(sorted(m.items()))
            if key not in seen:
                seen.add(key)
                out.append(m)
    return out


def find_pm_automorphisms(s: Surface, derivative: int) -> list[PmAutomorphism]:
    """All flat self-maps with the given derivative part, as cell maps of the
    canonical Delaunay cell complex (accessible as ``result.surface``)."""
    cells = delaunay_cells(s)
    return [
        PmAutomorphism(cells, derivative, m)
        for m in _all_matchings(cells, cells, derivative)
    ]


def involutions_of(s: Surface, derivative: int) -> list[PmAutomorphism]:
    return [
        a
        for a in find_pm_automorphisms(s, derivative)
        if a.is_involution() and not a.is_identity()
    ]


# ---------------------------------------------------------------------------
# fixed loci


@dataclass(frozen=True)
class FixedLocus:
    vertices: tuple[frozenset, ...]
    edge_pairs: tuple[frozenset, ...]  # each {e, partner(e)} with phi(e) = partner(e)
    cell_centers: tuple[int, ...]

    @property
    def count(self) -> int:
        return len(self.vertices) + len(self.edge_pairs) + len(self.cell_centers)


def fixed_points(a: PmAutomorphism) -> FixedLocus:
    """Fixed points of an involution: vertices, edge midpoints, cell centres."""
    if not a.is_involution() or a.is_identity():
        raise NotInvolution("fixed_points needs a nontrivial involution")
    s = a.surface
    verts = tuple(
        cls for cls in s.vertex_classes if a.apply_class(cls) == cls
    )
    pairs = set()
    for e in s.edges():
        if a.edge_map[e] == s.gluing[e][0]:
            pairs.add(frozenset((e, s.gluing[e][0])))
    cells = ()
    if a.derivative == -1:
        cmap = a.cell_map()
        cells = tuple(sorted(p for p in range(s.n_polygons) if cmap[p] == p))
    return FixedLocus(verts, tuple(sorted(pairs, key=sorted)), cells)


def hyperelliptic_involution(s: Surface) -> PmAutomorphism:
    """The unique -Id involution with 2g+2 fixed points."""
    from .errors import NoHyperellipticInvolution

    cand = []
    for a in involutions_of(s, -1):
        if fixed_points(a).count == 2 * a.surface.genus + 2:
            cand.append(a)
    if len(cand) != 1:
        raise NoHyperellipticInvolution(
            f"expected one hyperelliptic involution, found {len(cand)}"
        )
    return cand[0]


# ---------------------------------------------------------------------------
# isomorphism (with canonicalization by erasing plain regular vertices)


def erase_regular_vertices(s: Surface) -> Surface:
    """Remove unmarked angle-2pi vertices from the cell structure.

    Removals run on the canonical Delaunay triangulation (re-derived after
    each removal, which keeps vertex stars tame).
    """
    cur = s
    while True:
        tri, _prov = delaunay(cur)
        w = Work.from_surface(tri)
        removed = False
        seen: set[int] = set()
        for c0 in sorted(w.vec):
            if c0 in seen or c0 not in w.vec:
                continue
            link = w.vertex_class(c0)
            seen.update(link)
            if len(link) == len(w.vec):
                continue  # the only vertex class must stay
            angle = w.class_angle_multiple(c0)
            if angle != 2 or any(x in w.marked for x in link):
                continue
            if _remove_regular_vertex(w, c0):
                removed = True
                break
        cur = w.to_surface()
        cur.require_valid()
        if not removed:
            return cur


def _ear_clip_indices(pts: list[Vec2]) -> list[tuple[int, int, int]]:
    """Triangulate a simple ccw polygon given by its corners; index triples."""
    idx = list(range(len(pts)))
    out = []
    while len(idx) > 3:
        n = len(idx)
        ear = None
        for k in range(n):
            ip, ic, inx = idx[(k - 1) % n], idx[k], idx[(k + 1) % n]
            A, B, C = pts[ip], pts[ic], pts[inx]
            if orient(A, B, C) <= 0:
                continue
            blocked = False
            for other in idx:
                if other in (ip, ic, inx):
                    continue
                P = pts[other]
                if (
                    orient(A, B, P) >= 0
                    and orient(B, C, P) >= 0
                    and orient(C, A, P) >= 0
                ):
                    blocked = True
                    break
            if not blocked:
                ear = k
                break
        assert ear is not None, "no ear in simple polygon"
        out.append((idx[(ear - 1) % n], idx[ear], idx[(ear + 1) % n]))
        del idx[ear]
    out.append((idx[0], idx[1], idx[2]))
    return out


def _remove_regular_vertex(w: Work, c0: int) -> bool:
    """Delete an unmarked 2pi vertex, flipping its star tamer if needed.

    Returns False when the star is too degenerate to remove.
    """
    guard = 0
    while True:
        if _remove_star_once(w, c0):
            return True
        # the link polygon is immersed: try one degree-reducing flip whose new
        # diagonal avoids this vertex class, then retry
        link = w.vertex_class(c0)
        flipped = False
        for c in link:
            pair = w.glue.get(c)
            if pair is None:
                continue
            e2 = pair[0]
            if w.cell_of[c] == w.cell_of[e2]:
                continue
            t2 = w.polys[w.cell_of[e2]]
            i2 = t2.index(e2)
            far1 = t2[(i2 + 2) % 3]  # corner Q
            t1 = w.polys[w.cell_of[c]]
            i1 = t1.index(c)
            far2 = t1[(i1 + 2) % 3]  # corner P2
            if far1 in link or far2 in link:
                continue
            O, Q, P1, P2, _sig, _ = _develop_quad(w, c)
            quad = [O, Q, P1, P2]
            if all(
                orient(quad[k], quad[(k + 1) % 4], quad[(k + 2) % 4]) > 0
                for k in range(4)
            ):
                _flip(w, c)
                for cc in link:
                    if cc in w.vec:
                        c0 = cc
                        break
                flipped = True
                break
        if not flipped:
            return False
        guard += 1
        if guard > len(w.vec) + 8:
            raise AssertionError("vertex removal did not converge")


def _remove_star_once(w: Work, c0: int) -> bool:
    """One-shot star re-triangulation of an unmarked 2pi vertex.

    Works whenever the developed link polygon is simple; returns False when
    the star is too degenerate to remove (the vertex then stays).
    """
    from .surfcore import polygon_simple_diagnostics

    link = w.vertex_class(c0)
    outer = []
    sig = QuadExt.rational(1)
    L: list[Vec2] = []
    cur_pos = None
    for c in link:
        t = w.cell_of[c]
        lst = w.polys[t]
        i = lst.index(c)
        out_edge = lst[(i + 1) % 3]
        if out_edge in link or w.next_in_cell(out_edge) in link:
            return False  # loop edge at the vertex: star is not a plain disk
        pos = w.cell_corner_positions(t)
        start_dev = (pos[out_edge] - pos[c]).scale(sig)
        if cur_pos is None:
            cur_pos = start_dev
        elif start_dev != cur_pos:
            return False  # chaining broke: immersed star too twisted
        outer.append((out_edge, w.vec[out_edge].scale(sig)))
        L.append(cur_pos)
        cur_pos = cur_pos + outer[-1][1]
        nxt = w.next_corner_around_vertex(c)
        assert nxt is not None
        sig = sig * QuadExt.rational(nxt[1])
    if sig != QuadExt.rational(1) or cur_pos != L[0]:
        return False
    if polygon_simple_diagnostics(L):
        return False  # link polygon immersed, not embedded
    # replace the star by an ear-clipping of the link polygon
    tris = _ear_clip_indices(L)
    old_cells = {w.cell_of[c] for c in link}
    spokes = set()
    for k, c in enumerate(link):
        spokes.add(c)
        in_spoke = w.prev_in_cell(c)
        spokes.add(in_spoke)
        if in_spoke in w.marked:
            # its start corner is the link vertex where outer[k+1] departs
            w.marked.discard(in_spoke)
            w.marked.add(outer[(k + 1) % len(link)][0])
    n = len(L)
    diag: dict[tuple[int, int], int] = {}
    recharted = []

    def edge_between(i, j):
        if j == (i + 1) % n:
            e, v = outer[i]
            if w.vec[e] != v:
                recharted.append(e)
            w.vec[e] = v
            return e
        if (i, j) in diag:
            return diag[(i, j)]
        e = w._new_eid()
        w.vec[e] = L[j] - L[i]
        diag[(i, j)] = e
        if (j, i) in diag:
            w.glue[e] = (diag[(j, i)], 1)
            w.glue[diag[(j, i)]] = (e, 1)
        return e

    new_cells = []
    for (i, j, k) in tris:
        pid = w._new_pid()
        cell = [edge_between(i, j), edge_between(j, k), edge_between(k, i)]
        w.polys[pid] = cell
        w.root[pid] = (-1, V_ZERO)
        new_cells.append(pid)
    for t in old_cells:
        del w.polys[t]
        del w.root[t]
    for x in spokes:
        w.glue.pop(x, None)
        w.vec.pop(x, None)
        w.cell_of.pop(x, None)
        w.marked.discard(x)
    for pid in new_cells:
        for e in w.polys[pid]:
            w.cell_of[e] = pid
    for x in recharted:
        pair = w.glue.get(x)
        if pair is None:
            continue
        y = pair[0]
        vy, vx = w.vec[y], w.vec[x]
        if vy == -vx:
            w.glue[x], w.glue[y] = (y, 1), (x, 1)
        elif vy == vx:
            w.glue[x], w.glue[y] = (y, -1), (x, -1)
        else:
            raise AssertionError("re-charted star edge lost isometry")
    return True


def are_isomorphic(
    s1: Surface, s2: Surface, allow_flip: bool = False
) -> tuple[bool, dict | None]:
    """Translation-isomorphism of flat surfaces (optionally allowing -Id).

    Plain regular vertices are erased before comparison: they are artifacts
    of the cell structure, not of the flat geometry.
    """
    s1.require_valid()
    s2.require_valid()
    try:
        st1, st2 = s1.stratum(), s2.stratum()
    except Exception:
        st1 = st2 = None
    if st1 is not None and st1 != st2:
        return False, None
    c1 = delaunay_cells(erase_regular_vertices(s1))
    c2 = delaunay_cells(erase_regular_vertices(s2))
    for d in (1, -1) if allow_flip else (1,):
        ms = _all_matchings(c1, c2, d)
        if ms:
            return True, ms[0]
    return False, None
