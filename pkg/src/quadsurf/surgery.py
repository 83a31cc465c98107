"""Internal surgery engine: refinement, exact tracing, cutting and re-gluing.

Everything here operates on :class:`Work`, a mutable polygon complex whose
directed edges carry stable integer ids, so references survive refinement.
Public module operations (triangulate, insert_point, slit) and the builders
are thin wrappers over this machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    OutsidePolygon,
    QuadSurfError,
    SegmentEndsOffVertex,
    SegmentThroughConePoint,
    SelfIntersectingChain,
)
from .exactnum import QE_ZERO, QuadExt, V_ZERO, Vec2, parallel_ratio
from .surfcore import Surface, in_sector_half_open, sector_halfturn_count


class AmbiguousDirection(QuadSurfError):
    """A chain continues through a cone point where the outgoing sector is ambiguous."""


class Work:
    """Mutable polygon complex with stable directed-edge ids."""

    def __init__(self):
        self.d = 1
        self.allow_poles = False
        self.polys: dict[int, list[int]] = {}
        self.vec: dict[int, Vec2] = {}
        self.glue: dict[int, tuple[int, int]] = {}
        self.marked: set[int] = set()  # start corners of these edges are marked
        self.root: dict[int, tuple[int, Vec2]] = {}  # pid -> (orig pid, offset)
        self.cell_of: dict[int, int] = {}
        self.paths: list[list[int]] = []  # registered edge paths, auto-remapped
        self.corner_refs: list[list[int]] = []  # registered corners (edge starts)
        self._next_eid = 0
        self._next_pid = 0

    # -- construction ------------------------------------------------------

    @staticmethod
    def from_surface(s: Surface) -> "Work":
        w = Work()
        w.d = s.field_d
        w.allow_poles = s.allow_poles
        ids: dict[tuple[int, int], int] = {}
        for p, poly in enumerate(s.polygons):
            pid = w._new_pid()
            lst = []
            for i, v in enumerate(poly):
                e = w._new_eid()
                ids[(p, i)] = e
                w.vec[e] = v
                w.cell_of[e] = pid
                lst.append(e)
            w.polys[pid] = lst
            w.root[pid] = (p, V_ZERO)
        for e, (e2, sg) in s.gluing.items():
            w.glue[ids[e]] = (ids[e2], sg)
        for c in s.marked:
            w.marked.add(ids[c])
        w._ids_from_surface = ids
        return w

    def to_surface(self) -> Surface:
        order = sorted(self.polys)
        pidx = {pid: k for k, pid in enumerate(order)}
        eref: dict[int, tuple[int, int]] = {}
        polys = []
        for pid in order:
            lst = self.polys[pid]
            polys.append([self.vec[e] for e in lst])
            for i, e in enumerate(lst):
                eref[e] = (pidx[pid], i)
        gluing = {eref[e]: (eref[e2], sg) for e, (e2, sg) in self.glue.items()}
        marked = {eref[e] for e in self.marked}
        return Surface(self.d, polys, gluing, marked, self.allow_poles)

    def edge_ref_map(self) -> dict[int, tuple[int, int]]:
        order = sorted(self.polys)
        pidx = {pid: k for k, pid in enumerate(order)}
        out = {}
        for pid in order:
            for i, e in enumerate(self.polys[pid]):
                out[e] = (pidx[pid], i)
        return out

    def copy(self) -> "Work":
        out = Work()
        out.d = self.d
        out.allow_poles = self.allow_poles
        out.polys = {p: list(lst) for p, lst in self.polys.items()}
        out.vec = dict(self.vec)
        out.glue = dict(self.glue)
        out.marked = set(self.marked)
        out.root = dict(self.root)
        out.cell_of = dict(self.cell_of)
        out.paths = [list(p) for p in self.paths]
        out.corner_refs = [list(r) for r in self.corner_refs]
        out._next_eid = self._next_eid
        out._next_pid = self._next_pid
        if hasattr(self, "_ids_from_surface"):
            out._ids_from_surface = dict(self._ids_from_surface)
        return out

    def _new_eid(self) -> int:
        self._next_eid += 1
        return self._next_eid - 1

    def _new_pid(self) -> int:
        self._next_pid += 1
        return self._next_pid - 1

    # -- local structure -----------------------------------------------------

    def idx_in_cell(self, e: int) -> int:
        return self.polys[self.cell_of[e]].index(e)

    def next_in_cell(self, e: int) -> int:
        lst = self.polys[self.cell_of[e]]
        return lst[(lst.index(e) + 1) % len(lst)]

    def prev_in_cell(self, e: int) -> int:
        lst = self.polys[self.cell_of[e]]
        return lst[(lst.index(e) - 1) % len(lst)]

    def corner_pos(self, c: int) -> Vec2:
        """Position of the start corner of edge c in its cell's local frame."""
        lst = self.polys[self.cell_of[c]]
        acc = V_ZERO
        for e in lst:
            if e == c:
                return acc
            acc = acc + self.vec[e]
        raise KeyError(c)

    def cell_corner_positions(self, pid: int) -> dict[int, Vec2]:
        acc, out = V_ZERO, {}
        for e in self.polys[pid]:
            out[e] = acc
            acc = acc + self.vec[e]
        return out

    def root_pos(self, c: int) -> tuple[int, Vec2]:
        pid = self.cell_of[c]
        orig, off = self.root[pid]
        return orig, off + self.corner_pos(c)

    def sector(self, c: int) -> tuple[Vec2, Vec2]:
        return self.vec[c], -self.vec[self.prev_in_cell(c)]

    def next_corner_around_vertex(self, c: int):
        """Across the incoming edge, with the chart sign; None at boundary."""
        pair = self.glue.get(self.prev_in_cell(c))
        if pair is None:
            return None
        return pair[0], pair[1]

    def vertex_class(self, c: int) -> list[int]:
        """The cyclic link of c's vertex (requires no boundary at this vertex)."""
        out, cur = [c], c
        while True:
            nxt = self.next_corner_around_vertex(cur)
            if nxt is None:
                raise QuadSurfError("vertex link crosses boundary")
            cur = nxt[0]
            if cur == c:
                return out
            out.append(cur)
            if len(out) > len(self.vec) + 1:
                raise AssertionError("runaway vertex link")

    def class_angle_multiple(self, c: int) -> int:
        return sum(
            sector_halfturn_count(*self.sector(x)) for x in self.vertex_class(c)
        )

    def is_marked_vertex(self, c: int) -> bool:
        return any(x in self.marked for x in self.vertex_class(c))

    # -- path registry ---------------------------------------------------------

    def register_path(self, path: list[int]) -> list[int]:
        self.paths.append(path)
        return path

    def _remap_paths(self, old: int, new: list[int]):
        for path in self.paths:
            while old in path:
                i = path.index(old)
                path[i : i + 1] = new

    # -- surgeries ---------------------------------------------------------------

    def split_edge(self, e: int, t: QuadExt) -> tuple[int, int]:
        """Split edge e (and its partner) at parameter t in (0,1).

        Returns the two sub-edges of e; the new vertex is the start corner of
        the second.  Registered paths, marks, and gluing are remapped.
        """
        assert QE_ZERO < t < QuadExt.rational(1)
        pair = self.glue.pop(e, None)
        v = self.vec[e]
        ea, eb = self._new_eid(), self._new_eid()
        self._replace_edge(e, [ea, eb], [v.scale(t), v.scale(QuadExt.rational(1) - t)])
        if pair is not None:
            e2, sg = pair
            del self.glue[e2]
            v2 = self.vec[e2]
            fa, fb = self._new_eid(), self._new_eid()
            one = QuadExt.rational(1)
            self._replace_edge(e2, [fa, fb], [v2.scale(one - t), v2.scale(t)])
            self.glue[ea], self.glue[fb] = (fb, sg), (ea, sg)
            self.glue[eb], self.glue[fa] = (fa, sg), (eb, sg)
        return ea, eb

    def _replace_edge(self, e: int, new: list[int], vecs: list[Vec2]):
        pid = self.cell_of[e]
        lst = self.polys[pid]
        i = lst.index(e)
        lst[i : i + 1] = new
        for ne, nv in zip(new, vecs):
            self.vec[ne] = nv
            self.cell_of[ne] = pid
        if e in self.marked:
            self.marked.discard(e)
            self.marked.add(new[0])
        del self.vec[e]
        del self.cell_of[e]
        self._remap_paths(e, new)
        for refs in self.corner_refs:
            for i, c in enumerate(refs):
                if c == e:
                    refs[i] = new[0]

    def split_cell_chord(self, c1: int, c2: int) -> tuple[int, int]:
        """Split a cell along the straight chord from corner c1 to corner c2.

        Both corners are start corners of edges in the same cell.  Returns the
        new chord edge pair (in the c1-side cell, in the c2-side cell).
        """
        pid = self.cell_of[c1]
        assert self.cell_of[c2] == pid and c1 != c2
        lst = self.polys[pid]
        pos = self.cell_corner_positions(pid)
        i1, i2 = lst.index(c1), lst.index(c2)
        w = pos[c2] - pos[c1]
        ga, gb = self._new_eid(), self._new_eid()
        if i1 < i2:
            a_edges = lst[i1:i2] + [ga]
            b_edges = lst[i2:] + lst[:i1] + [gb]
        else:
            a_edges = lst[i1:] + lst[:i2] + [ga]
            b_edges = lst[i2:i1] + [gb]
        self.vec[ga], self.vec[gb] = -w, w
        self.glue[ga], self.glue[gb] = (gb, 1), (ga, 1)
        orig, off = self.root[pid]
        pa, pb = self._new_pid(), self._new_pid()
        self.polys[pa], self.polys[pb] = a_edges, b_edges
        self.root[pa] = (orig, off + pos[c1])
        self.root[pb] = (orig, off + pos[c2])
        for e in a_edges:
            self.cell_of[e] = pa
        for e in b_edges:
            self.cell_of[e] = pb
        del self.polys[pid]
        del self.root[pid]
        return ga, gb

    def fan_from_interior(self, pid: int, pt: Vec2) -> list[int]:
        """Fan a star-shaped cell from an interior point; returns spoke corners.

        The new vertex is the start corner of every returned spoke edge.
        """
        lst = self.polys[pid]
        pos = self.cell_corner_positions(pid)
        orig, off = self.root[pid]
        n = len(lst)
        spokes_out = [self._new_eid() for _ in range(n)]
        spokes_in = [self._new_eid() for _ in range(n)]
        for k, e in enumerate(lst):
            tri_pid = self._new_pid()
            kn = (k + 1) % n
            so, si = spokes_out[k], spokes_in[kn]
            self.vec[so] = pos[e] - pt
            self.vec[si] = pt - pos[lst[kn]]
            tri = [so, e, si]
            self.polys[tri_pid] = tri
            self.root[tri_pid] = (orig, off + pt)
            for x in tri:
                self.cell_of[x] = tri_pid
        for k in range(n):
            self.glue[spokes_in[k]] = (spokes_out[k], 1)
            self.glue[spokes_out[k]] = (spokes_in[k], 1)
        del self.polys[pid]
        del self.root[pid]
        return spokes_out

    def unglue(self, edges) -> None:
        for e in list(edges):
            pair = self.glue.pop(e, None)
            if pair is not None:
                self.glue.pop(pair[0], None)

    def set_glue(self, e1: int, e2: int, sg: int) -> None:
        v1, v2 = self.vec[e1], self.vec[e2]
        if sg == 1:
            assert v2 == -v1, "sign +1 needs opposite vectors"
        else:
            assert v2 == v1, "sign -1 needs equal vectors"
        self.glue[e1], self.glue[e2] = (e2, sg), (e1, sg)


# ---------------------------------------------------------------------------
# exact ray tracing / cut materialization


def corner_owning_ray(w: Work, c: int, direction: Vec2):
    """Walk c's vertex link for the sector owning `direction` (half-open).

    Returns (corner, transported direction).  Raises AmbiguousDirection when
    the vertex is a cone point (several sectors own parallel rays).
    """
    link = w.vertex_class(c)
    angle = sum(sector_halfturn_count(*w.sector(x)) for x in link)
    if angle != 2:
        raise AmbiguousDirection("outgoing sector at a cone point is ambiguous")
    d = direction
    for x in link:
        u, wdir = w.sector(x)
        if in_sector_half_open(u, wdir, d):
            return x, d
        nxt = w.next_corner_around_vertex(x)
        assert nxt is not None
        d = d.scale(QuadExt.rational(nxt[1]))
        # direction transported into the next corner's chart
    raise AssertionError("no sector owns the ray")


def _first_boundary_hit(w: Work, pid: int, p0: Vec2, r: Vec2):
    """First hit of the open ray p0 + (0,1]*r with the cell boundary.

    Returns ('corner', corner_eid, t) or ('edge', eid, t, u) or ('inside',).
    """
    best = None  # (t, kind, payload)
    pos = w.cell_corner_positions(pid)
    lst = w.polys[pid]
    one = QuadExt.rational(1)
    for e in lst:
        a = pos[e]
        ev = w.vec[e]
        b = a + ev
        m = a - p0
        den = r.cross(ev)
        if den.sign() == 0:
            if m.cross(r).sign() != 0:
                continue  # parallel, off-line
            for c_eid, cpos in ((e, a), (w.next_in_cell(e), b)):
                tr = parallel_ratio(r, cpos - p0)
                if tr is not None and QE_ZERO < tr <= one:
                    if best is None or tr < best[0]:
                        best = (tr, "corner", c_eid)
            continue
        t = m.cross(ev) / den
        u = m.cross(r) / den
        if not (QE_ZERO < t <= one):
            continue
        if u.sign() < 0 or (u - one).sign() > 0:
            continue
        if u.sign() == 0:
            cand = (t, "corner", e)
        elif (u - one).sign() == 0:
            cand = (t, "corner", w.next_in_cell(e))
        else:
            cand = (t, "edge", e, u)
        if best is None or cand[0] < best[0]:
            best = cand
        elif cand[0] == best[0] and best[1] == "edge" and cand[1] == "corner":
            best = cand
    if best is None:
        return ("inside",)
    if best[1] == "corner":
        return ("corner", best[2], best[0])
    return ("edge", best[2], best[0], best[3])


def _vertex_blocks(w: Work, c: int) -> bool:
    """May a traced segment pass straight through this vertex?"""
    link = w.vertex_class(c)
    angle = sum(sector_halfturn_count(*w.sector(x)) for x in link)
    if angle != 2:
        return True
    return any(x in w.marked for x in link)


def materialize_segment(
    w: Work, start_corner: int, hol: Vec2, forbid: set[int] | None = None
) -> tuple[list[int], int]:
    """Refine the complex so the straight segment from `start_corner` with
    holonomy `hol` (in the start chart) becomes a directed edge path.

    Returns (path edge ids, final corner eid).  The segment interior may pass
    through plain regular vertices but not cone points or marked points.
    """
    path = w.register_path([])
    cur, rem = start_corner, hol
    u0, w0 = w.sector(cur)
    if not in_sector_half_open(u0, w0, rem):
        # resolve within the vertex class (unambiguous at regular/marked points)
        cur, rem = corner_owning_ray(w, cur, rem)
    guard = 0
    while rem:
        guard += 1
        if guard > 20000:
            raise AssertionError("tracing did not converge")
        u, wdir = w.sector(cur)
        assert in_sector_half_open(u, wdir, rem), "corner does not own the ray"
        t_along = parallel_ratio(u, rem)
        if t_along is not None and t_along.sign() > 0:
            # runs along the outgoing edge
            one = QuadExt.rational(1)
            if t_along < one:
                ea, _eb = w.split_edge(cur, t_along)
                cur = ea
                continue
            partner = w.glue.get(cur, (None,))[0]
            if cur in path or (forbid and (cur in forbid or partner in forbid)):
                raise SelfIntersectingChain("chain revisits an edge")
            path.append(cur)
            nxt_corner = w.next_in_cell(cur)
            rem = rem - u
            if not rem:
                return path, nxt_corner
            if _vertex_blocks(w, nxt_corner):
                raise SegmentThroughConePoint(
                    "segment interior meets a cone or marked point"
                )
            cur, rem = corner_owning_ray(w, nxt_corner, rem)
            continue
        # strictly inside the corner sector: trace across the cell
        pid = w.cell_of[cur]
        p0 = w.corner_pos(cur)
        hit = _first_boundary_hit(w, pid, p0, rem)
        if hit[0] == "inside":
            raise SegmentEndsOffVertex("segment ends inside a cell")
        if hit[0] == "corner":
            _, c2, t = hit
            if c2 == cur:
                raise SelfIntersectingChain("segment doubles back onto its start")
            _ga, gb = w.split_cell_chord(cur, c2)
            cur = gb  # chord edge departing from the same corner along the ray
            continue
        _, e2, t, ue = hit
        if (t - QuadExt.rational(1)).sign() == 0:
            raise SegmentEndsOffVertex("segment endpoint is not a vertex")
        partner = w.glue.get(e2, (None,))[0]
        if e2 in path or (forbid and (e2 in forbid or partner in forbid)):
            raise SelfIntersectingChain("chain crosses itself")
        w.split_edge(e2, ue)
    raise AssertionError("zero-length segment")


def materialize_chain(
    w: Work, start_corner: int, hols: list[Vec2]
) -> tuple[list[list[int]], int]:
    """Materialize consecutive segments; continuation corners are resolved at
    the arrival vertex (which must be regular or marked, not a cone point)."""
    assert hols
    segs: list[list[int]] = []
    cur = start_corner
    rem_hols = list(hols)
    endc = start_corner
    for k, h in enumerate(rem_hols):
        forbid = {e for seg in segs for e in seg}
        forbid |= {w.glue[e][0] for e in forbid if e in w.glue}
        path, endc = materialize_segment(w, cur, h, forbid)
        segs.append(path)
        if k + 1 < len(rem_hols):
            cur, nh = corner_owning_ray(w, endc, rem_hols[k + 1])
            rem_hols[k + 1] = nh
    return segs, endc


# ---------------------------------------------------------------------------
# public operations


def _canonical_corner_order(w: Work, pid: int) -> list[int]:
    """Corner indices ordered by a key invariant under z -> ±z + c.

    Keeps surgery choices equivariant under flat ±Id isometries, so that
    mirrored cells are refined mirror-consistently (transport relies on it).
    """
    lst = w.polys[pid]
    pos = w.cell_corner_positions(pid)
    n = len(lst)
    cx = cy = QE_ZERO
    for e in lst:
        cx = cx + pos[e].x
        cy = cy + pos[e].y
    ctr = Vec2(cx / n, cy / n)
    def key(i):
        q = pos[lst[i]] - ctr
        return min(q.sort_key(), (-q).sort_key())
    return sorted(range(n), key=key)


def triangulate_cell(w: Work, pid: int) -> None:
    """Ear-clip one cell in place (exact predicates, canonical ear order)."""
    from .surfcore import orient

    while len(w.polys[pid]) > 3:
        lst = w.polys[pid]
        pos = w.cell_corner_positions(pid)
        n = len(lst)
        ear = None
        for i in _canonical_corner_order(w, pid):
            cp, cc, cn = lst[(i - 1) % n], lst[i], lst[(i + 1) % n]
            A, B, C = pos[cp], pos[cc], pos[cn]
            if orient(A, B, C) <= 0:
                continue
            blocked = False
            for other in lst:
                if other in (cp, cc, cn):
                    continue
                P = pos[other]
                if (
                    orient(A, B, P) >= 0
                    and orient(B, C, P) >= 0
                    and orient(C, A, P) >= 0
                ):
                    blocked = True
                    break
            if not blocked:
                ear = (cp, cn)
                break
        assert ear is not None, "no ear found in simple polygon"
        _ga, gb = w.split_cell_chord(ear[0], ear[1])
        pid = w.cell_of[gb]  # remainder cell continues clipping


def triangulate(s: Surface):
    """Ear-clipping triangulation; returns (Surface, provenance).

    Provenance maps each new polygon index to the original polygon index.
    """
    w = Work.from_surface(s)
    for pid in list(w.polys):
        triangulate_cell(w, pid)
    out = w.to_surface()
    order = sorted(w.polys)
    provenance = {k: w.root[pid][0] for k, pid in enumerate(order)}
    return out, provenance


def _locate_point(w: Work, pid: int, pt: Vec2):
    """Classify pt against one cell: ('corner', eid) | ('edge', eid, u) | ('inside',) | ('outside',)."""
    from .surfcore import orient

    pos = w.cell_corner_positions(pid)
    lst = w.polys[pid]
    for e in lst:
        if pos[e] == pt:
            return ("corner", e)
    for e in lst:
        a, ev = pos[e], w.vec[e]
        if ev.cross(pt - a).sign() == 0:
            u = parallel_ratio(ev, pt - a)
            if u is not None and QE_ZERO < u < QuadExt.rational(1):
                return ("edge", e, u)
    # winding test via crossing counts would need care; use triangulation instead
    return None


def insert_marked_vertex(w: Work, orig_poly: int, pt: Vec2, mark: bool = True) -> int:
    """Insert (or flag) a vertex at `pt`, given in the frame of original
    polygon `orig_poly` of the surface this Work was created from.

    Returns a corner eid at the new vertex.  Triangulates cells as needed.
    """
    from .surfcore import orient

    def scan():
        for q in list(w.polys):
            if w.root[q][0] != orig_poly:
                continue
            local = pt - w.root[q][1]
            loc = _locate_point(w, q, local)
            if loc is not None:
                yield q, loc, local

    for _q, loc, _local in scan():
        if loc[0] == "corner":
            if mark:
                w.marked.add(loc[1])
            return loc[1]
        if loc[0] == "edge":
            _ea, eb = w.split_edge(loc[1], loc[2])
            if mark:
                w.marked.add(eb)
            return eb
    # not on the 1-skeleton: triangulate this root's cells and look inside
    for q in [q for q in list(w.polys) if w.root[q][0] == orig_poly]:
        triangulate_cell(w, q)
    for q in [q for q in list(w.polys) if w.root[q][0] == orig_poly]:
        local = pt - w.root[q][1]
        loc = _locate_point(w, q, local)
        if loc is not None:
            if loc[0] == "corner":
                if mark:
                    w.marked.add(loc[1])
                return loc[1]
            _ea, eb = w.split_edge(loc[1], loc[2])
            if mark:
                w.marked.add(eb)
            return eb
        pos = w.cell_corner_positions(q)
        lst = w.polys[q]
        A, B, C = (pos[e] for e in lst)
        if (
            orient(A, B, local) > 0
            and orient(B, C, local) > 0
            and orient(C, A, local) > 0
        ):
            spokes = w.fan_from_interior(q, local)
            if mark:
                w.marked.add(spokes[0])
            return spokes[0]
    raise OutsidePolygon(f"point {pt} is not inside polygon {orig_poly}")


def insert_points(s: Surface, polygon: int, pts) -> tuple[Surface, list[tuple[int, int]]]:
    """Insert several marked vertices, all given in one original-polygon frame."""
    if not (0 <= polygon < s.n_polygons):
        raise OutsidePolygon(f"no polygon {polygon}")
    w = Work.from_surface(s)
    eids: list[int] = []
    w.corner_refs.append(eids)
    for pt in pts:
        eids.append(insert_marked_vertex(w, polygon, pt))
    out = w.to_surface()
    ref = w.edge_ref_map()
    return out, [ref[e] for e in eids]


def insert_point(s: Surface, where) -> tuple[Surface, tuple[int, int]]:
    """Insert a marked regular vertex at exact coordinates in a polygon.

    `where` is (polygon index, point Vec2) in the polygon's local frame
    (corner 0 at the origin).  Returns (surface, corner reference).
    """
    p, pt = where
    out, refs = insert_points(s, p, [pt])
    return out, refs[0]


@dataclass
class SlitResult:
    surface: Surface
    sides: list[tuple[list[tuple[int, int]], list[tuple[int, int]]]]


def slit(s: Surface, chains) -> SlitResult:
    """Cut the surface open along straight chains and return the labeled sides.

    `chains` is a list of (start, holonomies): `start` the (polygon, corner)
    where the first segment departs, `holonomies` its segment vectors (each in
    the chart where its segment departs).  The result is a surface with
    boundary; each chain contributes the pair of directed edge sequences that
    flank it, ready for re-gluing.
    """
    w = Work.from_surface(s)
    chain_paths = []
    for start, hols in chains:
        start_eid = w._ids_from_surface[tuple(start)]
        segs, _end = materialize_chain(w, start_eid, list(hols))
        chain_paths.append(w.register_path([e for seg in segs for e in seg]))
    flat: set[int] = set()
    for p in chain_paths:
        for e in p:
            if e in flat or w.glue[e][0] in flat:
                raise SelfIntersectingChain("chains overlap")
            flat.add(e)
    sides_eids = [(list(p), [w.glue[e][0] for e in p]) for p in chain_paths]
    for p in chain_paths:
        w.unglue(p)
    out = w.to_surface()
    ref = w.edge_ref_map()
    return SlitResult(
        out,
        [([ref[e] for e in a], [ref[e] for e in b]) for a, b in sides_eids],
    )


# ---------------------------------------------------------------------------
# cut-and-reglue helpers used by covers/builders


def fold_by_involution(w: Work, path_edges: list[int], phi: dict[int, int]) -> None:
    """Re-glue cut edges by the involution: new partner of e is phi(old partner).

    `phi` is a directed-edge automorphism of the complex mapping the path
    system to itself; produces sign -1 seams on translation input.
    """
    all_edges = set(path_edges) | {w.glue[e][0] for e in path_edges}
    old = {e: w.glue[e][0] for e in all_edges}
    w.unglue(all_edges)
    for e in all_edges:
        target = phi[old[e]]
        v1, v2 = w.vec[e], w.vec[target]
        sg_new = 1 if v2 == -v1 else (-1 if v2 == v1 else None)
        assert sg_new is not None, "fold image is not an isometric partner"
        assert target != e, "fold would glue an edge to itself"
        w.glue[e] = (target, sg_new)
    for e in all_edges:
        e2, sg = w.glue[e]
        assert w.glue[e2] == (e, sg), "fold gluing not involutive"


def double_cross_glued(w: Work, path_edges: list[int]) -> tuple[Work, dict, dict]:
    """Two copies of the complex, cross-glued along the path system.

    Crossing a path edge switches copies (monodromy of the cut double cover);
    everything else is glued within each copy.  Returns (new work, map1, map2)
    sending old edge ids into each copy.
    """
    out = Work()
    out.d = w.d
    out.allow_poles = w.allow_poles
    m1: dict[int, int] = {}
    m2: dict[int, int] = {}
    pm1: dict[int, int] = {}
    pm2: dict[int, int] = {}
    for copy, (em, pm) in enumerate(((m1, pm1), (m2, pm2))):
        for pid, lst in w.polys.items():
            np = out._new_pid()
            pm[pid] = np
            new_lst = []
            for e in lst:
                ne = out._new_eid()
                em[e] = ne
                out.vec[ne] = w.vec[e]
                out.cell_of[ne] = np
                new_lst.append(ne)
            out.polys[np] = new_lst
            orig, off = w.root[pid]
            out.root[np] = (orig, off)
        for e in w.marked:
            out.marked.add(em[e])
    cut = set(path_edges) | {w.glue[e][0] for e in path_edges}
    for e, (e2, sg) in w.glue.items():
        if e in cut:
            out.glue[m1[e]] = (m2[e2], sg)
            out.glue[m2[e]] = (m1[e2], sg)
        else:
            out.glue[m1[e]] = (m1[e2], sg)
            out.glue[m2[e]] = (m2[e2], sg)
    return out, m1, m2


def transport_edge_automorphism(
    w: Work, base: Surface, base_edge_map: dict, derivative: int
) -> dict[int, int]:
    """Transport a ±Id automorphism of `base` to the refined complex `w`.

    `w` must have been produced from `base` by surgeries that keep the
    root-frame provenance, and the refinement must be invariant under the
    automorphism (true for symmetric path systems and fixed-locus splits).
    Returns a directed-edge map on w.
    """
    D = QuadExt.rational(derivative)
    # affine translation part per base polygon: phi(z) = D z + t_p in base frames
    t_of: dict[int, Vec2] = {}
    img_poly: dict[int, int] = {}
    for (p, i), (q, j) in base_edge_map.items():
        if p in t_of:
            continue
        x = base.corner_pos((p, i))
        y = base.corner_pos((q, j))
        t_of[p] = y - x.scale(D)
        img_poly[p] = q
    # index w cells by (base pid, frozenset of root corner positions)
    index: dict[tuple[int, frozenset], int] = {}
    corner_at: dict[tuple[int, Vec2], int] = {}
    for pid, lst in w.polys.items():
        orig, off = w.root[pid]
        keys = []
        for e in lst:
            rp = off + w.corner_pos(e)
            keys.append(rp)
            corner_at[(pid, rp)] = e
        index[(orig, frozenset(k.sort_key() for k in keys))] = pid
    out: dict[int, int] = {}
    for pid, lst in w.polys.items():
        orig, off = w.root[pid]
        q = img_poly[orig]
        t = t_of[orig]
        img_corners = {}
        keys = []
        for e in lst:
            rp = off + w.corner_pos(e)
            ip = rp.scale(D) + t
            img_corners[e] = ip
            keys.append(ip.sort_key())
        target_pid = index.get((q, frozenset(keys)))
        if target_pid is None:
            raise QuadSurfError(
                "refinement is not invariant under the automorphism"
            )
        for e in lst:
            out[e] = corner_at[(target_pid, img_corners[e])]
    # verify: edge vectors transform by D and gluing is preserved
    for e, ie in out.items():
        assert w.vec[ie] == w.vec[e].scale(D)
    for e, (e2, sg) in w.glue.items():
        pair = w.glue.get(out[e])
        assert pair is not None and pair[0] == out[e2] and pair[1] == sg
    return out
