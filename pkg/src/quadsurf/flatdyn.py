"""Flat dynamics evidence: saddle connections, cylinder decompositions,
rational marked points, and the arithmeticity certificate.

Saddle connections are enumerated by an exact wedge-subdivision search over
developed triangle chains, complete up to the length bound.  Straight rays
pass through plain regular vertices, so the reported set depends only on the
flat structure and its distinguished (cone or marked) points.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NotATorus, QuadSurfError
from .exactnum import (
    QE_ZERO,
    QuadExt,
    V_ZERO,
    Vec2,
    parallel_ratio,
    solve_rational_span,
)
from .involutions import delaunay
from .surfcore import Edge, Surface, in_sector_half_open
from .surgery import Work, materialize_segment

ONE = QuadExt.rational(1)


# ---------------------------------------------------------------------------
# developed-chart helpers on a triangulated surface


def _dev_corners(s: Surface, t: int, chart) -> dict[Edge, Vec2]:
    sig, off = chart
    return {
        (t, i): off + s.corner_positions[t][i].scale(sig)
        for i in range(len(s.polygons[t]))
    }


def _chart_across(s: Surface, chart, e: Edge, dev_end_of_e: Vec2):
    """Chart of the triangle across edge e, given e's developed end point."""
    sig, _off = chart
    e2, sg = s.gluing[e]
    sig2 = sig * sg
    off2 = dev_end_of_e - s.corner_pos(e2).scale(QuadExt.rational(sig2))
    return e2[0], (sig2, off2)


def _owning_corner_static(s: Surface, start: Edge, d: Vec2):
    """Corner of start's vertex class owning direction d (half-open convention),
    plus the direction transported into that corner's chart."""
    cur, dd = start, d
    for _ in range(sum(len(p) for p in s.polygons) + 1):
        u, w = s.corner_sector(cur)
        if in_sector_half_open(u, w, dd):
            return cur, dd
        pair = s.gluing.get(s.prev_edge(cur))
        assert pair is not None, "vertex link crosses boundary"
        cur = pair[0]
        dd = dd.scale(QuadExt.rational(pair[1]))
    raise AssertionError("no owning corner for the ray")


def _seg_dist2_exceeds(P: Vec2, Q: Vec2, bound2: QuadExt) -> bool:
    """Exact: is the squared distance from the origin to segment PQ > bound2?"""
    PQ = Q - P
    t_num = -P.dot(PQ)
    den = PQ.norm2()
    if t_num.sign() <= 0:
        return P.norm2() > bound2
    if (t_num - den).sign() >= 0:
        return Q.norm2() > bound2
    cr = P.cross(Q)
    return cr * cr > bound2 * den


class _RayHit:
    __slots__ = ("corner", "position", "chart_sig")

    def __init__(self, corner, position, chart_sig):
        self.corner = corner
        self.position = position
        self.chart_sig = chart_sig


def _march_ray(s: Surface, corner: Edge, d_local: Vec2, base: Vec2, sig0: int,
               bound2, blocked):
    """Follow a straight ray from a vertex; return its vertex hits.

    `corner` owns `d_local` in its own chart; the chart embeds into the
    developed plane with sign `sig0` and sends the vertex to `base`.  The ray
    therefore has global direction sig0*d_local and all reported positions
    are in the developed plane (positions scale along the ray, so pruning at
    the bound is exact).  Stops at the first blocked vertex.
    """
    hits: list[_RayHit] = []
    sig = sig0
    off = base - s.corner_pos(corner).scale(QuadExt.rational(sig))
    cur = corner
    D = d_local.scale(QuadExt.rational(sig0))  # global direction
    guard = 0
    while True:
        guard += 1
        if guard > 200000:
            raise AssertionError("ray march did not converge")
        dloc = D.scale(QuadExt.rational(sig))
        u, w = s.corner_sector(cur)
        assert in_sector_half_open(u, w, dloc), "corner lost ray ownership"
        t_along = parallel_ratio(u, dloc)
        if t_along is not None and t_along.sign() > 0:
            far = s.next_edge(cur)
            pos = _dev_corners(s, cur[0], (sig, off))[far]
            if pos.norm2() > bound2:
                return hits
            hits.append(_RayHit(far, pos, sig))
            if blocked(s.vertex_class_of(far)):
                return hits
            nc, nd = _owning_corner_static(s, far, dloc)
            sig = sig if nd == dloc else -sig
            off = pos - s.corner_pos(nc).scale(QuadExt.rational(sig))
            cur = nc
            continue
        # interior of the corner sector: cross triangles until a vertex hit
        g = _dev_corners(s, cur[0], (sig, off))[cur]
        t = cur[0]
        while True:
            guard += 1
            if guard > 200000:
                raise AssertionError("ray march did not converge")
            dev = _dev_corners(s, t, (sig, off))
            hit = _exit_of_ray(s, t, dev, g, D)
            if hit[0] == "corner":
                _, cref, pos = hit
                if pos.norm2() > bound2:
                    return hits
                hits.append(_RayHit(cref, pos, sig))
                if blocked(s.vertex_class_of(cref)):
                    return hits
                dloc = D.scale(QuadExt.rational(sig))
                nc, nd = _owning_corner_static(s, cref, dloc)
                sig = sig if nd == dloc else -sig
                off = pos - s.corner_pos(nc).scale(QuadExt.rational(sig))
                cur = nc
                break
            _, e, exit_pt = hit
            if exit_pt.norm2() > bound2:
                return hits
            end_dev = dev[s.next_edge(e)]
            t, (sig, off) = _chart_across(s, (sig, off), e, end_dev)
            g = exit_pt


def _exit_of_ray(s: Surface, t: int, dev: dict, g: Vec2, D: Vec2):
    """Exit of ray g + (0,inf)*D from triangle t (developed corner map `dev`).

    Returns ('corner', corner_ref, position) or ('edge', edge_ref, point).
    """
    best = None
    n = len(s.polygons[t])
    for i in range(n):
        e = (t, i)
        A = dev[e]
        B = dev[s.next_edge(e)]
        ev = B - A
        m = A - g
        den = D.cross(ev)
        if den.sign() == 0:
            if m.cross(D).sign() != 0:
                continue
            for cref, cpos in ((e, A), (s.next_edge(e), B)):
                tr = parallel_ratio(D, cpos - g)
                if tr is not None and tr.sign() > 0:
                    cand = (tr, "corner", cref, cpos)
                    if best is None or cand[0] < best[0]:
                        best = cand
            continue
        tpar = m.cross(ev) / den
        upar = m.cross(D) / den
        if tpar.sign() <= 0:
            continue
        if upar.sign() < 0 or (upar - ONE).sign() > 0:
            continue
        if upar.sign() == 0:
            cand = (tpar, "corner", e, A)
        elif (upar - ONE).sign() == 0:
            cand = (tpar, "corner", s.next_edge(e), B)
        else:
            cand = (tpar, "edge", e, g + D.scale(tpar))
        if best is None or cand[0] < best[0]:
            best = cand
        elif cand[0] == best[0] and best[1] == "edge" and cand[1] == "corner":
            best = cand
    assert best is not None, "ray escaped a closed triangle"
    return best[1:]


# ---------------------------------------------------------------------------
# saddle connections


@dataclass(frozen=True)
class SaddleConnection:
    """Straight segment joining cone/marked points with none in its interior.

    The rays refer to corners of the canonically triangulated search surface;
    each geometric segment is reported once, with `holonomy` developed from
    the lexicographically smaller of its two departure rays.
    """

    holonomy: Vec2
    start_ray: tuple[Edge, Vec2]
    end_ray: tuple[Edge, Vec2]
    length2: QuadExt

    def pm_holonomies(self):
        return (self.holonomy, -self.holonomy)

    def sort_key(self):
        return (
            self.length2.a,
            self.length2.b,
        ) + self.holonomy.sort_key() + self.start_ray[0]


@dataclass
class SaddleConnectionSet:
    surface: Surface
    connections: tuple[SaddleConnection, ...]

    def holonomies(self):
        return [sc.holonomy for sc in self.connections]

    def pm_holonomy_set(self):
        out = set()
        for sc in self.connections:
            out.add(sc.holonomy.sort_key())
            out.add((-sc.holonomy).sort_key())
        return out


def distinguished_classes(s: Surface):
    return [
        cls
        for cls in s.vertex_classes
        if s.class_angle_multiple(cls) != 2 or s.is_marked_class(cls)
    ]


def saddle_connections(
    s: Surface, bound, retriangulate: bool = True
) -> SaddleConnectionSet:
    """All saddle connections with |holonomy|^2 <= bound^2 (exact, complete).

    With `retriangulate=False` the input must already be triangulated and the
    reported rays refer to the input surface itself (used by the builders to
    cut along a chosen connection).
    """
    bound = bound if isinstance(bound, QuadExt) else QuadExt.rational(bound)
    assert bound.sign() > 0
    bound2 = bound * bound
    if retriangulate:
        tri, _prov = delaunay(s)
    else:
        assert all(len(p) == 3 for p in s.polygons), "need a triangulation"
        tri = s
    special = distinguished_classes(tri)
    blocked_set = set()
    for cls in special:
        blocked_set.add(cls)

    def blocked(cls):
        return cls in blocked_set

    raw: dict[frozenset, SaddleConnection] = {}

    def record(start_corner: Edge, pos: Vec2, hit: _RayHit):
        if not blocked(tri.vertex_class_of(hit.corner)):
            return
        end_dir = (-pos).scale(QuadExt.rational(hit.chart_sig))
        end_c, end_d = _owning_corner_static(tri, hit.corner, end_dir)
        key = frozenset(
            (
                (start_corner, pos.sort_key()),
                (end_c, end_d.sort_key()),
            )
        )
        if key in raw:
            return
        a = (start_corner, pos)
        b = (end_c, end_d)
        first, second = (a, b) if (a[0], a[1].sort_key()) <= (b[0], b[1].sort_key()) else (b, a)
        raw[key] = SaddleConnection(first[1], first, second, pos.norm2())

    for cls in special:
        for c in sorted(cls):
            u, w = tri.corner_sector(c)
            # the ray along the outgoing edge u (owned by this corner)
            for h in _march_ray(tri, c, u, V_ZERO, 1, bound2, blocked):
                record(c, h.position, h)
            # the open wedge (u, w)
            dev = _dev_corners(tri, c[0], (1, -tri.corner_pos(c)))
            opp = tri.next_edge(c)
            end_dev = dev[tri.next_edge(opp)]
            t2, chart2 = _chart_across(tri, (1, -tri.corner_pos(c)), opp, end_dev)
            _wedge(tri, bound2, blocked, record, c, t2, chart2,
                   tri.gluing[opp][0], u, w, 0)
    conns = tuple(sorted(raw.values(), key=lambda sc: sc.sort_key()))
    return SaddleConnectionSet(tri, conns)


def _wedge(tri, bound2, blocked, record, start_corner, t, chart, e2, R, L, depth):
    """Search the open direction cone (R, L) beyond crossed edge e2."""
    if depth > 4000:
        raise AssertionError("wedge recursion too deep")
    dev = _dev_corners(tri, t, chart)
    far_corner = tri.next_edge(tri.next_edge(e2))
    D = dev[far_corner]
    X = dev[tri.next_edge(e2)]  # dev start of crossed segment (end of e2)
    Y = dev[e2]
    # the crossed segment is X -> Y seen ccw from R to L
    if _seg_dist2_exceeds(X, Y, bound2):
        return
    cRD = R.cross(D).sign()
    cDL = D.cross(L).sign()
    sig = chart[0]
    if cRD > 0 and cDL > 0:
        if D.norm2() <= bound2:
            hit = _RayHit(far_corner, D, sig)
            record(start_corner, D, hit)
            if not blocked(tri.vertex_class_of(far_corner)):
                # continue straight through the regular vertex
                dloc = D.scale(QuadExt.rational(sig))
                nc, nd = _owning_corner_static(tri, far_corner, dloc)
                nsig = sig if nd == dloc else -sig
                for h in _march_ray(tri, nc, nd, D, nsig, bound2, blocked):
                    record(start_corner, h.position, h)
        # split into the two sub-wedges
        for (nR, nL, edge) in (
            (R, D, tri.next_edge(e2)),  # X -> D side
            (D, L, tri.prev_edge(e2)),  # D -> Y side
        ):
            _descend(tri, bound2, blocked, record, start_corner, t, chart,
                     edge, nR, nL, depth)
    elif cRD <= 0:
        _descend(tri, bound2, blocked, record, start_corner, t, chart,
                 tri.prev_edge(e2), R, L, depth)
    else:
        _descend(tri, bound2, blocked, record, start_corner, t, chart,
                 tri.next_edge(e2), R, L, depth)


def _descend(tri, bound2, blocked, record, start_corner, t, chart, edge, R, L, depth):
    dev = _dev_corners(tri, t, chart)
    end_dev = dev[tri.next_edge(edge)]
    t2, chart2 = _chart_across(tri, chart, edge, end_dev)
    _wedge(tri, bound2, blocked, record, start_corner, t2, chart2,
           tri.gluing[edge][0], R, L, depth + 1)


# ---------------------------------------------------------------------------
# cylinder decompositions


@dataclass(frozen=True)
class Cylinder:
    direction: Vec2
    circumference: QuadExt  # in |direction| units
    height: QuadExt  # in |direction| units
    boundary: tuple[tuple[Edge, ...], ...]  # the two boundary circles
    polygons: tuple[int, ...]

    @property
    def modulus(self) -> QuadExt:
        return self.height / self.circumference


@dataclass(frozen=True)
class NotPeriodic:
    """Separatrix exceeded the budget: undecided, not a proof of aperiodicity."""

    start: Edge
    reached_length2: QuadExt
    budget2: QuadExt


@dataclass
class CylinderDecomposition:
    surface: Surface  # the refined surface the boundary refs live on
    direction: Vec2
    cylinders: tuple[Cylinder, ...]

    def total_area_check(self) -> bool:
        d2 = self.direction.norm2()
        total = QE_ZERO
        for c in self.cylinders:
            total = total + c.circumference * c.height * d2
        return total == self.surface.area


def cylinder_decomposition(s: Surface, direction: Vec2, budget=None):
    """Decompose into maximal cylinders in a direction, or report NotPeriodic.

    Circumference and height are reported in |direction| units, so that
    sum(c*h)*|direction|^2 equals the surface area exactly.
    """
    assert direction, "need a nonzero direction"
    tri, _prov = delaunay(s)
    special = distinguished_classes(tri)
    if budget is None:
        budget2 = tri.area * QuadExt.rational(4096) / direction.norm2()
    else:
        b = budget if isinstance(budget, QuadExt) else QuadExt.rational(budget)
        budget2 = b * b
    if not special:
        return _torus_cylinder(tri, direction, budget2)

    blocked = lambda cls: cls in set(special)
    # find the separatrix rays in the ±direction and their closing connections
    seps: dict[frozenset, tuple[Edge, Vec2]] = {}
    for cls in special:
        for c in sorted(cls):
            u, w = tri.corner_sector(c)
            for d in (direction, -direction):
                if not in_sector_half_open(u, w, d):
                    continue
                hits = _march_ray(tri, c, d, V_ZERO, 1, budget2, blocked)
                if not hits or not blocked(tri.vertex_class_of(hits[-1].corner)):
                    reached = hits[-1].position.norm2() if hits else QE_ZERO
                    return NotPeriodic(c, reached, budget2)
                last = hits[-1]
                pos = last.position
                end_dir = (-pos).scale(QuadExt.rational(last.chart_sig))
                end_c, end_d = _owning_corner_static(tri, last.corner, end_dir)
                key = frozenset(
                    ((c, pos.sort_key()), (end_c, end_d.sort_key()))
                )
                if key not in seps:
                    seps[key] = (c, pos)
    # materialize all direction saddle connections as edge paths
    w = Work.from_surface(tri)
    ids = w._ids_from_surface
    boundary_paths = []
    for (c, hol) in seps.values():
        path, _endc = materialize_segment(w, ids[c], hol)
        boundary_paths.append(path)
    refined = w.to_surface()
    ref = w.edge_ref_map()
    bset = set()
    for p in boundary_paths:
        for e in p:
            bset.add(ref[e])
            bset.add(ref[w.glue[e][0]])
    return _assemble_cylinders(refined, direction, bset)


def _torus_cylinder(tri: Surface, direction: Vec2, budget2):
    placements, jumps = tri.develop()
    lattice = [j for (_e, j) in jumps if j]
    # shortest lattice vector parallel to direction: brute force small combos
    best = None
    rng = range(-24, 25)
    v1 = lattice[0]
    v2 = next((v for v in lattice[1:] if v1.cross(v).sign() != 0), None)
    assert v2 is not None, "degenerate torus lattice"
    for a in rng:
        for b in rng:
            if a == 0 and b == 0:
                continue
            v = v1.scale(QuadExt.rational(a)) + v2.scale(QuadExt.rational(b))
            if v.cross(direction).sign() == 0 and v.dot(direction).sign() > 0:
                if best is None or v.norm2() < best.norm2():
                    best = v
    if best is None:
        return NotPeriodic((0, 0), QE_ZERO, budget2)
    t = parallel_ratio(direction, best)
    c = abs(t)
    h = tri.area / (c * direction.norm2())
    cyl = Cylinder(direction, c, h, ((), ()), tuple(range(tri.n_polygons)))
    return CylinderDecomposition(tri, direction, (cyl,))


def _assemble_cylinders(s: Surface, direction: Vec2, bset: set[Edge]):
    # polygons connected across non-boundary gluings form the cylinders
    parent = {p: p for p in range(s.n_polygons)}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e, (e2, _sg) in s.gluing.items():
        if e in bset:
            continue
        ra, rb = find(e[0]), find(e2[0])
        if ra != rb:
            parent[ra] = rb
    comps: dict[int, list[int]] = {}
    for p in range(s.n_polygons):
        comps.setdefault(find(p), []).append(p)

    cylinders = []
    for root, polys in sorted(comps.items()):
        pset = set(polys)
        sides = [e for e in bset if e[0] in pset]
        # boundary circles
        circles = []
        seen = set()
        for e0 in sorted(sides):
            if e0 in seen:
                continue
            circle = [e0]
            seen.add(e0)
            cur = e0
            while True:
                f = s.next_edge(cur)
                guard = 0
                while f not in bset:
                    f = s.next_edge(s.gluing[f][0])
                    guard += 1
                    assert guard < 10000
                if f == e0:
                    break
                circle.append(f)
                seen.add(f)
                cur = f
            circles.append(tuple(circle))
        assert len(circles) == 2, f"cylinder with {len(circles)} boundary circles"
        lengths = []
        for circle in circles:
            total = QE_ZERO
            for e in circle:
                t = parallel_ratio(direction, s.vec(e))
                assert t is not None, "boundary edge not parallel to direction"
                total = total + abs(t)
            lengths.append(total)
        assert lengths[0] == lengths[1], "cylinder boundary lengths differ"
        area = QE_ZERO
        for p in polys:
            pos = s.corner_positions[p]
            n = len(pos)
            acc = QE_ZERO
            for i in range(n):
                acc = acc + pos[i].cross(pos[(i + 1) % n])
            area = area + acc / 2
        c = lengths[0]
        h = area / (c * direction.norm2())
        cylinders.append(
            Cylinder(direction, c, h, tuple(circles), tuple(sorted(polys)))
        )
    out = CylinderDecomposition(s, direction, tuple(cylinders))
    assert out.total_area_check(), "cylinder areas do not sum to the surface area"
    return out


# ---------------------------------------------------------------------------
# rational marked points and arithmeticity


def rational_marked_points(torus: Surface, classes=None) -> bool:
    """Are the marked points a rational subset of the torus?

    Each marked point is developed against a lattice basis read off from the
    torus periods; the base point of the developing map is the vertex at the
    origin of polygon 0 (a vertex of the complex, so for rationally built
    tori this agrees with the paper's translation-free notion).
    """
    torus.require_valid()
    if torus.genus != 1:
        raise NotATorus(f"genus {torus.genus} input")
    if not torus.holonomy_is_square()[0]:
        raise NotATorus("torus must carry a translation structure")
    placements, jumps = torus.develop()
    lattice = [j for (_e, j) in jumps if j]
    v1 = next((v for v in lattice if v), None)
    v2 = next((v for v in lattice if v1 and v1.cross(v).sign() != 0), None)
    assert v1 is not None and v2 is not None, "torus lattice not planar"
    if classes is None:
        classes = [
            cls for cls in torus.vertex_classes if torus.is_marked_class(cls)
        ]
    det = v1.cross(v2)
    for cls in classes:
        c = sorted(cls)[0]
        eps, t = placements[c[0]]
        p = torus.corner_pos(c).scale(QuadExt.rational(eps)) + t
        c1 = p.cross(v2) / det
        c2 = v1.cross(p) / det
        if not (c1.is_rational and c2.is_rational):
            return False
    return True


@dataclass
class ArithmeticityCertificate:
    arithmetic: bool
    span: object  # SpanResult over the period vectors
    periods: tuple[Vec2, ...]
    used_double_cover: bool

    def witness_vectors(self):
        if self.arithmetic:
            return tuple(self.periods[i] for i in self.span.basis)
        if self.span.witness is not None:
            return tuple(self.periods[i] for i in self.span.witness)
        return tuple(self.periods[i] for i in self.span.basis)


def arithmeticity_certificate(s: Surface) -> ArithmeticityCertificate:
    """Period Q-span test: arithmetic iff all edge periods of the (cover)
    complex are rational combinations of two R-independent periods.

    For non-square holonomy the test runs on the orientation double cover,
    where the periods of the abelian differential live.
    """
    s.require_valid()
    used_cover = False
    if not s.holonomy_is_square()[0]:
        from .covers import orientation_double_cover
        from .involutions import delaunay_cells

        s = orientation_double_cover(delaunay_cells(s)).total
        used_cover = True
    periods = []
    for e, (e2, _sg) in sorted(s.gluing.items()):
        if e < e2:
            periods.append(s.vec(e))
    res = solve_rational_span(periods)
    assert res.rank >= 2, "closed surface periods span the plane"
    arithmetic = res.rank == 2 and not res.collinear
    return ArithmeticityCertificate(arithmetic, res, tuple(periods), used_cover)
