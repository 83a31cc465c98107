"""Command-line front end: surface file I/O, builders, pipelines, reports.

The surface format is line-oriented UTF-8 with '#' comments:

    field sqrt <d>
    poles <on|off>
    poly <id>: (<x>,<y>) (<x>,<y>) ...     # corner positions, ccw
    glue <p>.<e> <p>.<e> <+|->
    mark <p> (<x>,<y>)                      # an existing corner position

Scalars use the exact syntax `p/q` or `p/q+r/s*sqrt(d)`.  Reports are flat
`key = value` lines sorted by key; exit status 0 = success, 1 = a check
failed, 2 = usage or parse errors.
"""

from __future__ import annotations

import argparse
import re
import sys
from fractions import Fraction

from . import builders, covers, flatdyn, involutions
from .errors import ParseError, QuadSurfError, ValidationError
from .exactnum import QuadExt, Vec2, format_scalar, parse_scalar, qe, vec
from .surfcore import Surface

_PAIR = re.compile(r"\(([^(),]+),([^(),]+)\)")


def _parse_pairs(text: str, line_no: int) -> list[Vec2]:
    out = []
    rest = text.strip()
    while rest:
        m = _PAIR.match(rest)
        if not m:
            raise ParseError(f"expected (x,y), got {rest!r}", line_no)
        out.append(Vec2(parse_scalar(m.group(1)), parse_scalar(m.group(2))))
        rest = rest[m.end():].strip()
    return out


def parse_surface(text: str) -> Surface:
    """Parse the line-oriented surface format."""
    field_d = 1
    allow_poles = False
    polys: dict[int, list[Vec2]] = {}
    glue: dict[tuple[int, int], tuple[tuple[int, int], int]] = {}
    marks: list[tuple[int, Vec2]] = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        try:
            if kind == "field":
                if len(parts) != 3 or parts[1] != "sqrt":
                    raise ParseError("field line is `field sqrt <d>`", no)
                field_d = int(parts[2])
            elif kind == "poles":
                allow_poles = {"on": True, "off": False}[parts[1]]
            elif kind == "poly":
                m = re.match(r"poly\s+(\d+)\s*:(.*)$", line)
                if not m:
                    raise ParseError("poly line is `poly <id>: (x,y) ...`", no)
                pid = int(m.group(1))
                corners = _parse_pairs(m.group(2), no)
                if len(corners) < 3:
                    raise ParseError("polygon needs at least 3 corners", no)
                edges = [
                    corners[(i + 1) % len(corners)] - corners[i]
                    for i in range(len(corners))
                ]
                if pid in polys:
                    raise ParseError(f"duplicate poly {pid}", no)
                polys[pid] = edges
            elif kind == "glue":
                m = re.match(r"glue\s+(\d+)\.(\d+)\s+(\d+)\.(\d+)\s+([+-])$", line)
                if not m:
                    raise ParseError("glue line is `glue p.e p.e +|-`", no)
                a = (int(m.group(1)), int(m.group(2)))
                b = (int(m.group(3)), int(m.group(4)))
                sg = 1 if m.group(5) == "+" else -1
                glue[a] = (b, sg)
                glue[b] = (a, sg)
            elif kind == "mark":
                m = re.match(r"mark\s+(\d+)\s+(.*)$", line)
                if not m:
                    raise ParseError("mark line is `mark <p> (x,y)`", no)
                pts = _parse_pairs(m.group(2), no)
                if len(pts) != 1:
                    raise ParseError("mark takes a single point", no)
                marks.append((int(m.group(1)), pts[0]))
            else:
                raise ParseError(f"unknown directive {kind!r}", no)
        except (KeyError, IndexError, ValueError) as exc:
            raise ParseError(str(exc), no) from exc
    if sorted(polys) != list(range(len(polys))):
        raise ParseError("polygon ids must be 0..n-1")
    poly_list = [polys[i] for i in sorted(polys)]
    marked = set()
    tmp = Surface(field_d, poly_list, glue, (), allow_poles)
    for p, pt in marks:
        if not (0 <= p < len(poly_list)):
            raise ParseError(f"mark on missing polygon {p}")
        hit = None
        for i, pos in enumerate(tmp.corner_positions[p]):
            if pos == pt:
                hit = (p, i)
        if hit is None:
            raise ValidationError([f"mark {pt} is not a corner of polygon {p}"])
        marked.add(hit)
    return Surface(field_d, poly_list, glue, marked, allow_poles)


def emit_surface(s: Surface) -> str:
    """Canonical text form: corner 0 at the origin, gluings sorted."""
    lines = [f"field sqrt {s.field_d}", f"poles {'on' if s.allow_poles else 'off'}"]
    for p, _poly in enumerate(s.polygons):
        corners = " ".join(
            f"({format_scalar(pos.x)},{format_scalar(pos.y)})"
            for pos in s.corner_positions[p]
        )
        lines.append(f"poly {p}: {corners}")
    for e in sorted(s.gluing):
        e2, sg = s.gluing[e]
        if e > e2:
            continue
        lines.append(
            f"glue {e[0]}.{e[1]} {e2[0]}.{e2[1]} {'+' if sg == 1 else '-'}"
        )
    for c in sorted(s.marked):
        pos = s.corner_pos(c)
        lines.append(
            f"mark {c[0]} ({format_scalar(pos.x)},{format_scalar(pos.y)})"
        )
    return "\n".join(lines) + "\n"


def load_surface(path: str) -> Surface:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_surface(fh.read())


def save_surface(path: str, s: Surface) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit_surface(s))


# ---------------------------------------------------------------------------
# reports


class Report:
    def __init__(self):
        self.items: dict[str, str] = {}
        self.failed = False

    def put(self, key, value):
        self.items[str(key)] = str(value)

    def check(self, key, ok):
        self.put(f"check.{key}", "pass" if ok else "FAIL")
        if not ok:
            self.failed = True

    def emit(self, out=sys.stdout):
        for k in sorted(self.items):
            out.write(f"{k} = {self.items[k]}\n")


def _stratum_report(rep: Report, s: Surface, prefix=""):
    pts, st = s.cone_points()
    rep.put(prefix + "genus", st.genus)
    rep.put(prefix + "orders", ",".join(str(o) for o in st.orders) or "-")
    rep.put(prefix + "square_holonomy", str(st.is_square).lower())
    rep.put(prefix + "stratum", st)
    rep.put(prefix + "area", format_scalar(s.area))
    rep.put(
        prefix + "marked_points",
        sum(1 for cls in s.vertex_classes if s.is_marked_class(cls)),
    )


# ---------------------------------------------------------------------------
# subcommands


def _cmd_verify(args, rep: Report):
    s = load_surface(args.surface)
    diags = s.validate()
    rep.put("diagnostics", len(diags))
    for i, d in enumerate(diags):
        rep.put(f"diagnostic.{i}", d)
    rep.check("valid", not diags)
    if not diags:
        _stratum_report(rep, s)
    return 0


def _cmd_stratum(args, rep: Report):
    s = load_surface(args.surface)
    s.require_valid()
    _stratum_report(rep, s)
    return 0


def _cmd_pipeline(args, rep: Report):
    s = load_surface(args.surface)
    pipe = covers.main_construction(s)
    gx, gy, gz = pipe.genera
    rep.put("genus.X", gx)
    rep.put("genus.Y", gy)
    rep.put("genus.Z", gz)
    rep.put("Bg", len(pipe.Bg))
    _stratum_report(rep, pipe.X, "X.")
    _stratum_report(rep, pipe.Y, "Y.")
    _stratum_report(rep, pipe.Z, "Z.")
    for name, ok in pipe.checks.items():
        rep.check(name, ok)
    if args.out_y:
        save_surface(args.out_y, pipe.Y)
    if args.out_z:
        save_surface(args.out_z, pipe.Z)
    return 0


def _cmd_sphere(args, rep: Report):
    s = load_surface(args.surface)
    z = covers.sphere_path(s)
    _stratum_report(rep, z, "Zprime.")
    pipe = covers.main_construction(s)
    ok, _m = involutions.are_isomorphic(z, pipe.Z)
    rep.check("sphere_path_isomorphic", ok)
    if args.out:
        save_surface(args.out, z)
    return 0


def _cmd_reconstruct(args, rep: Report):
    s = load_surface(args.surface)
    x = covers.reconstruct(s)
    _stratum_report(rep, x, "X.")
    if args.out:
        save_surface(args.out, x)
    return 0


def _cmd_iso(args, rep: Report):
    s1 = load_surface(args.a)
    s2 = load_surface(args.b)
    ok, _m = involutions.are_isomorphic(s1, s2, allow_flip=args.allow_flip)
    rep.put("isomorphic", str(ok).lower())
    return 0


def _cmd_involutions(args, rep: Report):
    s = load_surface(args.surface)
    for d, name in ((1, "plus"), (-1, "minus")):
        autos = involutions.find_pm_automorphisms(s, d)
        invs = [a for a in autos if a.is_involution() and not a.is_identity()]
        rep.put(f"automorphisms.{name}", len(autos))
        rep.put(f"involutions.{name}", len(invs))
    return 0


def _cmd_weierstrass(args, rep: Report):
    s = load_surface(args.surface)
    h = involutions.hyperelliptic_involution(s)
    locus = involutions.fixed_points(h)
    rep.put("fixed_points", locus.count)
    rep.put("expected", 2 * h.surface.genus + 2)
    rep.check("count_2g_plus_2", locus.count == 2 * h.surface.genus + 2)
    table = builders.weierstrass_table(h)
    for wp in table:
        rep.put(
            f"W{wp.label}",
            f"{wp.kind} ({format_scalar(wp.position.x)},{format_scalar(wp.position.y)})",
        )
    return 0


def _cmd_sc(args, rep: Report):
    s = load_surface(args.surface)
    bound = parse_scalar(args.bound)
    scs = flatdyn.saddle_connections(s, bound)
    rep.put("count", len(scs.connections))
    for i, sc in enumerate(scs.connections):
        rep.put(
            f"sc.{i:04d}",
            f"holonomy=({format_scalar(sc.holonomy.x)},{format_scalar(sc.holonomy.y)})"
            f" length2={format_scalar(sc.length2)}",
        )
    return 0


def _cmd_cyl(args, rep: Report):
    s = load_surface(args.surface)
    xs, ys = args.dir.split(",")
    direction = Vec2(parse_scalar(xs), parse_scalar(ys))
    budget = parse_scalar(args.budget) if args.budget else None
    out = flatdyn.cylinder_decomposition(s, direction, budget)
    if isinstance(out, flatdyn.NotPeriodic):
        rep.put("periodic", "undecided")
        rep.put("budget2", format_scalar(out.budget2))
        rep.put("reached_length2", format_scalar(out.reached_length2))
        rep.check("complete_decomposition", False)
        return 0
    rep.put("periodic", "true")
    rep.put("cylinders", len(out.cylinders))
    for i, c in enumerate(out.cylinders):
        rep.put(
            f"cylinder.{i}",
            f"circumference={format_scalar(c.circumference)}"
            f" height={format_scalar(c.height)}"
            f" modulus={format_scalar(c.modulus)}",
        )
    rep.check("area_conserved", out.total_area_check())
    return 0


def _cmd_arith(args, rep: Report):
    s = load_surface(args.surface)
    cert = flatdyn.arithmeticity_certificate(s)
    rep.put("arithmetic", str(cert.arithmetic).lower())
    rep.put("period_rank", cert.span.rank)
    rep.put("used_double_cover", str(cert.used_double_cover).lower())
    for i, v in enumerate(cert.witness_vectors()):
        rep.put(
            f"witness.{i}",
            f"({format_scalar(v.x)},{format_scalar(v.y)})",
        )
    if cert.arithmetic and cert.span.coords is not None:
        for i, cs in enumerate(cert.span.coords[: args.max_rows]):
            rep.put(
                f"coords.{i:04d}",
                ",".join(str(c) for c in cs),
            )
    return 0


def _cmd_ratpts(args, rep: Report):
    s = load_surface(args.surface)
    rep.put("rational", str(flatdyn.rational_marked_points(s)).lower())
    return 0


def _cmd_enum(args, rep: Report):
    pattern = builders.StratumPattern.parse(args.stratum)
    out = builders.enumerate_square_tiled(pattern, args.max)
    rep.put("count", len(out))
    for i, s in enumerate(out):
        rep.put(f"surface.{i:03d}.polygons", s.n_polygons)
        rep.put(f"surface.{i:03d}.stratum", s.stratum())
    if args.out_prefix:
        for i, s in enumerate(out):
            save_surface(f"{args.out_prefix}{i:03d}.surf", s)
    return 0


def _cmd_build(args, rep: Report):
    if args.kind == "qm22":
        zx, zy = args.zeros.split(",")
        px, py = args.poles.split(",")
        vx, vy = args.slit.split(",")
        spec = builders.SlitSpec(
            Vec2(parse_scalar(zx), parse_scalar(zy)),
            Vec2(parse_scalar(px), parse_scalar(py)),
            Vec2(parse_scalar(vx), parse_scalar(vy)),
        )
        surf, prov = builders.build_qm22(spec)
    elif args.kind == "lshape":
        res = builders.build_lshape(builders.LShapeSpec(args.b, args.e))
        surf, prov = res.surface, res.provenance
        for wp in res.weierstrass:
            rep.put(f"W{wp.label}", wp.kind)
    elif args.kind == "cutscover":
        base = builders.build_lshape(builders.LShapeSpec(args.b, args.e)).surface
        wi, wj = (int(x) for x in args.w.split(","))
        res = builders.build_cuts_double_cover(base, wi, wj)
        surf, prov = res.surface, res.provenance
    elif args.kind == "cutfold":
        base = builders.build_lshape(builders.LShapeSpec(args.b, args.e)).surface
        wi, wj = (int(x) for x in args.w.split(","))
        z = builders.build_cuts_double_cover(base, wi, wj).surface
        surf, prov = builders.cut_and_fold_qm1111(z, provenance=True)
    else:
        raise QuadSurfError(f"unknown builder {args.kind}")
    for k, v in prov.report().items():
        rep.put(f"provenance.{k}", v)
    _stratum_report(rep, surf)
    if args.out:
        save_surface(args.out, surf)
    return 0


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="quadsurf",
        description="Half-translation surfaces over real quadratic fields",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="run one of the explicit constructions")
    b.add_argument("kind", choices=["qm22", "lshape", "cutscover", "cutfold"])
    b.add_argument("--zeros", default="1/4,0", help="first zero point x,y")
    b.add_argument("--poles", default="1/4,1/2", help="first pole point x,y")
    b.add_argument("--slit", default="0,1/2", help="slit vector x,y")
    b.add_argument("--b", type=int, default=2)
    b.add_argument("--e", type=int, default=0)
    b.add_argument("--w", default="1,2", help="Weierstrass pair i,j")
    b.add_argument("-o", "--out", help="write the surface here")
    b.set_defaults(fn=_cmd_build)

    for name, fn in (("verify", _cmd_verify), ("stratum", _cmd_stratum)):
        p = sub.add_parser(name)
        p.add_argument("surface")
        p.set_defaults(fn=fn)

    p = sub.add_parser("pipeline", help="run the main construction")
    p.add_argument("surface")
    p.add_argument("--out-y")
    p.add_argument("--out-z")
    p.set_defaults(fn=_cmd_pipeline)

    p = sub.add_parser("sphere", help="sphere-path cross-check")
    p.add_argument("surface")
    p.add_argument("-o", "--out")
    p.set_defaults(fn=_cmd_sphere)

    p = sub.add_parser("reconstruct")
    p.add_argument("surface")
    p.add_argument("-o", "--out")
    p.set_defaults(fn=_cmd_reconstruct)

    p = sub.add_parser("iso")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--allow-flip", action="store_true")
    p.set_defaults(fn=_cmd_iso)

    p = sub.add_parser("involutions")
    p.add_argument("surface")
    p.set_defaults(fn=_cmd_involutions)

    p = sub.add_parser("weierstrass")
    p.add_argument("surface")
    p.set_defaults(fn=_cmd_weierstrass)

    p = sub.add_parser("sc", help="saddle connections up to a length bound")
    p.add_argument("surface")
    p.add_argument("--bound", default="2")
    p.set_defaults(fn=_cmd_sc)

    p = sub.add_parser("cyl", help="cylinder decomposition in a direction")
    p.add_argument("surface")
    p.add_argument("--dir", default="1,0")
    p.add_argument("--budget", default=None)
    p.set_defaults(fn=_cmd_cyl)

    p = sub.add_parser("arith", help="arithmeticity certificate")
    p.add_argument("surface")
    p.add_argument("--max-rows", type=int, default=12)
    p.set_defaults(fn=_cmd_arith)

    p = sub.add_parser("ratpts", help="rational marked points test")
    p.add_argument("surface")
    p.set_defaults(fn=_cmd_ratpts)

    p = sub.add_parser("enum", help="enumerate square-tiled surfaces")
    p.add_argument("--stratum", required=True, help="genus:orders:square|nonsquare|any")
    p.add_argument("--max", type=int, default=4)
    p.add_argument("--out-prefix")
    p.set_defaults(fn=_cmd_enum)

    return ap


def run_command(argv) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    rep = Report()
    try:
        status = args.fn(args, rep)
    except (ParseError, FileNotFoundError, ValidationError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except QuadSurfError as exc:
        rep.put("error", str(exc))
        rep.emit()
        return 1
    rep.emit()
    if rep.failed:
        return 1
    return status


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
