"""Half-translation surface data model: polygons with signed edge gluings.

A surface is a finite set of simple, positively oriented polygons together
with a fixed-point-free involution on directed edges.  A pair glued with
sign +1 is identified by a translation (``vec(e') = -vec(e)``); a pair glued
with sign -1 is identified by a map ``z -> -z + c`` (``vec(e') = vec(e)``).
Vertices (corners) carry the cone-point structure; distinguished regular
points are flagged as marked.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .errors import PoleNotAllowed, SurfaceHasBoundary
from .exactnum import QE_ZERO, QuadExt, V_ZERO, Vec2, vec

Edge = tuple[int, int]  # (polygon index, edge index); corner i starts edge i

_H_PLUS = vec(1, 0)
_H_MINUS = vec(-1, 0)


# ---------------------------------------------------------------------------
# exact direction predicates


def in_sector_half_open(u: Vec2, w: Vec2, h: Vec2) -> bool:
    """Is direction h inside the ccw sector [u, w) of angle in (0, 2pi)?

    The sector contains its starting ray u but not its ending ray w.
    """
    cu = u.cross(h).sign()
    cw = h.cross(w).sign()
    if cu == 0 and u.dot(h).sign() > 0:
        return True
    if cw == 0 and w.dot(h).sign() > 0:
        return False
    s = u.cross(w).sign()
    if cu == 0:  # h is -u strictly; inside iff sector angle > pi
        return s < 0
    if cw == 0:  # h is -w strictly
        return s < 0
    if s > 0:  # angle in (0, pi)
        return cu > 0 and cw > 0
    if s < 0:  # angle in (pi, 2pi)
        return cu > 0 or cw > 0
    # angle exactly pi (w parallel to -u)
    return cu > 0


def sector_halfturn_count(u: Vec2, w: Vec2) -> int:
    """Number of horizontal rays ±(1,0) inside the half-open ccw sector [u, w).

    Summed over the corners of a vertex link this counts the cone angle in
    units of pi without any transcendental function.
    """
    return int(in_sector_half_open(u, w, _H_PLUS)) + int(
        in_sector_half_open(u, w, _H_MINUS)
    )


def orient(a: Vec2, b: Vec2, c: Vec2) -> int:
    return (b - a).cross(c - a).sign()


def _on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool:
    # p assumed collinear with a-b; is it within the closed segment?
    return (p - a).dot(p - b).sign() <= 0


def segments_touch(a1: Vec2, a2: Vec2, b1: Vec2, b2: Vec2) -> bool:
    """Do closed segments [a1,a2] and [b1,b2] share any point?  Exact."""
    o1, o2 = orient(a1, a2, b1), orient(a1, a2, b2)
    o3, o4 = orient(b1, b2, a1), orient(b1, b2, a2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and _on_segment(a1, a2, b1):
        return True
    if o2 == 0 and _on_segment(a1, a2, b2):
        return True
    if o3 == 0 and _on_segment(b1, b2, a1):
        return True
    if o4 == 0 and _on_segment(b1, b2, a2):
        return True
    return False


def polygon_simple_diagnostics(corners: list[Vec2]) -> list[str]:
    """Diagnostics for a closed corner list: simplicity and orientation."""
    n = len(corners)
    out = []
    if n < 3:
        return [f"polygon has {n} < 3 edges"]
    # zero-length edges
    for i in range(n):
        if corners[i] == corners[(i + 1) % n]:
            out.append(f"edge {i} has zero length")
    if out:
        return out
    # adjacent spikes (angle 0 / 2pi)
    for i in range(n):
        u = corners[(i + 1) % n] - corners[i]
        v = corners[(i + 2) % n] - corners[(i + 1) % n]
        if u.cross(v).sign() == 0 and u.dot(v).sign() < 0:
            out.append(f"edges {i},{(i + 1) % n} fold back (zero angle)")
    # non-adjacent crossings
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if segments_touch(
                corners[i],
                corners[(i + 1) % n],
                corners[j],
                corners[(j + 1) % n],
            ):
                out.append(f"edges {i},{j} intersect")
    # orientation
    area2 = QE_ZERO
    for i in range(n):
        area2 = area2 + corners[i].cross(corners[(i + 1) % n])
    if area2.sign() <= 0:
        out.append("polygon not positively oriented")
    return out


# ---------------------------------------------------------------------------
# surface value


@dataclass(frozen=True)
class ConePoint:
    vertex_class: frozenset[Edge]
    angle_multiple: int  # cone angle = angle_multiple * pi
    marked: bool

    @property
    def order(self) -> int:
        """Quadratic differential order; -1 is a simple pole."""
        return self.angle_multiple - 2


@dataclass(frozen=True)
class Stratum:
    genus: int
    orders: tuple[int, ...]  # nonzero quadratic orders, sorted descending
    is_square: bool

    @property
    def abelian_orders(self) -> tuple[int, ...]:
        """Orders of the abelian square root (only when is_square)."""
        if not self.is_square:
            raise ValueError("not a square of an abelian differential")
        assert all(o % 2 == 0 for o in self.orders)
        return tuple(o // 2 for o in self.orders)

    def __str__(self):
        if self.is_square:
            body = ",".join(str(o) for o in self.abelian_orders) or "-"
            return f"Omega_{self.genus}({body})"
        body = ",".join(str(o) for o in self.orders) or "-"
        return f"Q_{self.genus}({body})"


class Surface:
    """Immutable half-translation surface (possibly with boundary mid-pipeline)."""

    def __init__(self, field_d, polygons, gluing, marked=(), allow_poles=False):
        self.field_d = int(field_d)
        self.polygons: tuple[tuple[Vec2, ...], ...] = tuple(
            tuple(p) for p in polygons
        )
        g: dict[Edge, tuple[Edge, int]] = {}
        for e, (e2, s) in dict(gluing).items():
            g[(int(e[0]), int(e[1]))] = ((int(e2[0]), int(e2[1])), int(s))
        self.gluing = g
        self.marked: frozenset[Edge] = frozenset(
            (int(c[0]), int(c[1])) for c in marked
        )
        self.allow_poles = bool(allow_poles)

    # -- basic structure ------------------------------------------------

    @property
    def n_polygons(self) -> int:
        return len(self.polygons)

    def edges(self):
        for p, poly in enumerate(self.polygons):
            for i in range(len(poly)):
                yield (p, i)

    def vec(self, e: Edge) -> Vec2:
        return self.polygons[e[0]][e[1]]

    def partner(self, e: Edge):
        return self.gluing.get(e)

    @cached_property
    def has_boundary(self) -> bool:
        return any(e not in self.gluing for e in self.edges())

    @cached_property
    def corner_positions(self) -> tuple[tuple[Vec2, ...], ...]:
        out = []
        for poly in self.polygons:
            pos, acc = [], V_ZERO
            for v in poly:
                pos.append(acc)
                acc = acc + v
            out.append(tuple(pos))
        return tuple(out)

    def corner_pos(self, c: Edge) -> Vec2:
        return self.corner_positions[c[0]][c[1]]

    def n_edges_of(self, p: int) -> int:
        return len(self.polygons[p])

    def prev_edge(self, e: Edge) -> Edge:
        return (e[0], (e[1] - 1) % len(self.polygons[e[0]]))

    def next_edge(self, e: Edge) -> Edge:
        return (e[0], (e[1] + 1) % len(self.polygons[e[0]]))

    def corner_sector(self, c: Edge) -> tuple[Vec2, Vec2]:
        """Outgoing and incoming-reversed directions bounding the corner sector."""
        return self.vec(c), -self.vec(self.prev_edge(c))

    def next_corner_around_vertex(self, c: Edge):
        """Next corner ccw in the link of c's vertex (None across boundary)."""
        incoming = self.prev_edge(c)
        pair = self.gluing.get(incoming)
        return pair[0] if pair else None

    def prev_corner_around_vertex(self, c: Edge):
        pair = self.gluing.get(c)
        if pair is None:
            return None
        e2 = pair[0]
        return self.next_edge(e2)

    # -- vertex classes ---------------------------------------------------

    @cached_property
    def vertex_classes(self) -> tuple[frozenset[Edge], ...]:
        """Corner classes: orbits of the end(e) ~ start(partner(e)) relation."""
        parent: dict[Edge, Edge] = {c: c for c in self.edges()}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(x, y):
            rx, ry = find(x), find(y)
            if rx != ry:
                parent[rx] = ry

        for e in self.edges():
            pair = self.gluing.get(e)
            if pair is None:
                continue
            e2, _ = pair
            union(self.next_edge(e), e2)  # end of e ~ start of e'
        groups: dict[Edge, set[Edge]] = {}
        for c in self.edges():
            groups.setdefault(find(c), set()).add(c)
        return tuple(sorted((frozenset(g) for g in groups.values()), key=sorted))

    def vertex_class_of(self, c: Edge) -> frozenset[Edge]:
        for cls in self.vertex_classes:
            if c in cls:
                return cls
        raise KeyError(c)

    def class_angle_multiple(self, cls) -> int:
        total = 0
        for c in cls:
            u, w = self.corner_sector(c)
            total += sector_halfturn_count(u, w)
        return total

    def is_marked_class(self, cls) -> bool:
        return any(c in self.marked for c in cls)

    # -- global invariants --------------------------------------------------

    @cached_property
    def euler_characteristic(self) -> int:
        if self.has_boundary:
            raise SurfaceHasBoundary("Euler characteristic needs a closed surface")
        V = len(self.vertex_classes)
        E = sum(len(p) for p in self.polygons) // 2
        F = self.n_polygons
        return V - E + F

    @cached_property
    def genus(self) -> int:
        chi = self.euler_characteristic
        assert chi % 2 == 0, "odd Euler characteristic on a closed surface"
        return (2 - chi) // 2

    def cone_points(self) -> tuple[tuple[ConePoint, ...], Stratum]:
        """All non-regular or marked vertex classes plus the stratum."""
        if self.has_boundary:
            raise SurfaceHasBoundary("cone points need a closed surface")
        pts = []
        for cls in self.vertex_classes:
            k = self.class_angle_multiple(cls)
            marked = self.is_marked_class(cls)
            if k == 1 and not self.allow_poles:
                raise PoleNotAllowed("angle pi vertex with poles disabled")
            if k != 2 or marked:
                pts.append(ConePoint(cls, k, marked))
        orders = tuple(
            sorted((p.order for p in pts if p.order != 0), reverse=True)
        )
        stratum = Stratum(self.genus, orders, self.holonomy_is_square()[0])
        # quadratic Gauss-Bonnet over every class
        total = sum(
            self.class_angle_multiple(cls) - 2 for cls in self.vertex_classes
        )
        assert total == 4 * stratum.genus - 4, "Gauss-Bonnet mismatch"
        return tuple(pts), stratum

    def stratum(self) -> Stratum:
        return self.cone_points()[1]

    def holonomy_is_square(self):
        """Is the holonomy sign homomorphism trivial (q a global square)?

        Returns (flag, witness): witness is None when trivial, else a cycle
        of polygon indices whose gluing-sign product is -1.
        """
        if self.has_boundary:
            raise SurfaceHasBoundary("holonomy test needs a closed surface")
        sign: dict[int, int] = {}
        parent_poly: dict[int, tuple[int, int] | None] = {}
        for root in range(self.n_polygons):
            if root in sign:
                continue
            sign[root] = 1
            parent_poly[root] = None
            stack = [root]
            while stack:
                p = stack.pop()
                for i in range(len(self.polygons[p])):
                    pair = self.gluing.get((p, i))
                    if pair is None:
                        continue
                    (q, _), s = pair
                    if q not in sign:
                        sign[q] = sign[p] * s
                        parent_poly[q] = (p, s)
                        stack.append(q)
        for e, (e2, s) in self.gluing.items():
            p, q = e[0], e2[0]
            if sign[p] * sign[q] != s:
                # witness: tree path q .. p plus the offending edge
                def path_to_root(x):
                    out = [x]
                    while parent_poly[x] is not None:
                        x = parent_poly[x][0]
                        out.append(x)
                    return out
                pp, pq = path_to_root(p), path_to_root(q)
                common = set(pp) & set(pq)
                cyc = []
                for x in pp:
                    cyc.append(x)
                    if x in common:
                        break
                tail = []
                for x in pq:
                    if x in common:
                        break
                    tail.append(x)
                cyc.extend(reversed(tail))
                return False, tuple(cyc)
        return True, None

    @cached_property
    def area(self) -> QuadExt:
        total = QE_ZERO
        for pos in self.corner_positions:
            n = len(pos)
            for i in range(n):
                total = total + pos[i].cross(pos[(i + 1) % n])
        return total / 2

    def develop(self):
        """Develop polygons into the plane along a spanning tree.

        Returns (placements, jumps): ``placements[p] = (eps, t)`` embeds
        polygon p as ``z -> eps*z + t``; ``jumps`` lists, per non-tree
        gluing, the translation mismatch (holonomy of the dual loop) — for
        trivial-holonomy surfaces these span the period lattice.
        """
        placements: dict[int, tuple[int, Vec2]] = {}
        jumps: list[tuple[Edge, Vec2]] = []
        for root in range(self.n_polygons):
            if root in placements:
                continue
            placements[root] = (1, V_ZERO)
            stack = [root]
            while stack:
                p = stack.pop()
                eps_p, t_p = placements[p]
                for i in range(len(self.polygons[p])):
                    pair = self.gluing.get((p, i))
                    if pair is None:
                        continue
                    (q, j), s = pair
                    a_glob = self.corner_pos((p, i)).scale(QuadExt.rational(eps_p)) + t_p
                    end_q = self.next_edge((q, j))
                    if q not in placements:
                        eps_q = eps_p * s
                        d_loc = self.corner_pos(end_q).scale(QuadExt.rational(eps_q))
                        placements[q] = (eps_q, a_glob - d_loc)
                        stack.append(q)
        for e, (e2, s) in self.gluing.items():
            if e > e2:
                continue
            p, q = e[0], e2[0]
            eps_p, t_p = placements[p]
            eps_q, t_q = placements[q]
            a_glob = self.corner_pos(e).scale(QuadExt.rational(eps_p)) + t_p
            d_glob = (
                self.corner_pos(self.next_edge(e2)).scale(QuadExt.rational(eps_q))
                + t_q
            )
            jump = a_glob - d_glob
            if jump or eps_p * eps_q * s != 1:
                jumps.append((e, jump))
        return placements, jumps

    # -- validation ---------------------------------------------------------

    def validate(self) -> list[str]:
        """Full diagnostics; empty list means the surface is valid and closed."""
        out: list[str] = []
        for p, poly in enumerate(self.polygons):
            n = len(poly)
            if n < 3:
                out.append(f"poly {p}: fewer than 3 edges")
                continue
            acc = V_ZERO
            for v in poly:
                acc = acc + v
            if acc:
                out.append(f"poly {p}: edges do not close up")
                continue
            for diag in polygon_simple_diagnostics(list(self.corner_positions[p])):
                out.append(f"poly {p}: {diag}")
        if out:
            return out

        all_edges = set(self.edges())
        for e, (e2, s) in self.gluing.items():
            if e not in all_edges or e2 not in all_edges:
                out.append(f"gluing references missing edge {e} or {e2}")
                continue
            if e == e2:
                out.append(f"edge {e} glued to itself")
                continue
            back = self.gluing.get(e2)
            if back != (e, s):
                out.append(f"gluing not involutive at {e}")
                continue
            if s == 1 and self.vec(e2) != -self.vec(e):
                out.append(f"+1 gluing {e}~{e2} has non-opposite vectors")
            if s == -1 and self.vec(e2) != self.vec(e):
                out.append(f"-1 gluing {e}~{e2} has unequal vectors")
            if s not in (1, -1):
                out.append(f"gluing {e}~{e2} has sign {s}")
        missing = [e for e in all_edges if e not in self.gluing]
        if missing:
            out.append(f"{len(missing)} unglued edges (surface has boundary)")
        if out:
            return out

        # connectivity of the polygon adjacency graph
        seen = {0} if self.n_polygons else set()
        stack = [0] if self.n_polygons else []
        while stack:
            p = stack.pop()
            for i in range(len(self.polygons[p])):
                q = self.gluing[(p, i)][0][0]
                if q not in seen:
                    seen.add(q)
                    stack.append(q)
        if len(seen) != self.n_polygons:
            out.append("surface not connected")

        for cls in self.vertex_classes:
            k = self.class_angle_multiple(cls)
            if k < 1:
                out.append(f"vertex class {sorted(cls)[0]} has nonpositive angle")
            if k == 1 and not self.allow_poles:
                out.append(
                    f"vertex class {sorted(cls)[0]} has angle pi but poles are off"
                )
        for c in self.marked:
            if c not in all_edges:
                out.append(f"marked corner {c} does not exist")
        return out

    def require_valid(self):
        diags = self.validate()
        if diags:
            from .errors import ValidationError

            raise ValidationError(diags)
        return self

    # -- convenience ----------------------------------------------------------

    def with_marked(self, corners) -> "Surface":
        return Surface(
            self.field_d,
            self.polygons,
            self.gluing,
            self.marked | {tuple(c) for c in corners},
            self.allow_poles,
        )

    def without_marks_on_cone_points(self) -> "Surface":
        keep = set()
        for cls in self.vertex_classes:
            if self.class_angle_multiple(cls) == 2 and self.is_marked_class(cls):
                keep |= {c for c in cls if c in self.marked}
        return Surface(
            self.field_d, self.polygons, self.gluing, keep, self.allow_poles
        )

    def __repr__(self):
        b = " with boundary" if self.has_boundary else ""
        return f"<Surface d={self.field_d} polys={self.n_polygons}{b}>"


# ---------------------------------------------------------------------------
# delegating operations (implementations live in surgery.py)


def validate(s: Surface) -> list[str]:
    return s.validate()


def cone_points(s: Surface):
    return s.cone_points()


def holonomy_is_square(s: Surface):
    return s.holonomy_is_square()


def triangulate(s: Surface):
    from . import surgery

    return surgery.triangulate(s)


def insert_point(s: Surface, where):
    from . import surgery

    return surgery.insert_point(s, where)


def slit(s: Surface, chains):
    from . import surgery

    return surgery.slit(s, chains)
