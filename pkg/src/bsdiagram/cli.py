"""Command-line interface.

Exit codes: 0 ok, 2 usage or input error, 3 solver failure, 4 verification
failure, 5 invariant breach.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

from . import __version__
from .diagram import (DEFAULT_COUNTS, FAMILIES, DiagramPoint, FamilySpec, build_loop, certified_region_audit,
                      certify_interior, css_path, estimate_envelopes, family_shapes, homothety_curve,
                      loop_bounding_grid, minkowski_diagram_path, points_from_csv, points_to_csv,
                      region_R_contains, region_R_violations, render_svg, sample_family, vertex_x, vertex_y,
                      write_points_csv)
from .errors import DiagramError, EmptyInput, InvalidPolygon, OutOfRange, PinFailed
from .fem import evaluate_many, evaluate_shape
from .geometry import (ConvexPolygon, ellipse_polygon, isosceles_triangle, read_polygon, rectangle,
                       regular_polygon, unit_disk_polygon)
from .optimize import minimize_f_gamma, probe_envelope, trace_to_csv
from .shapederiv import FourierPerturbation, fd_reports_to_csv, slope_constants, verify_second_derivative_fd
from .special import (first_zero_j0, kohler_jobin_constant, lambda1_ball, perforated_disk_slope,
                      rectangle_reference, rm_value, torsion_ball)

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_VERIFY, EXIT_INVARIANT = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


# Shape arguments -------------------------------------------------------------------

class _ShapeAction(argparse.Action):
    """Collect shape options in command-line order."""

    def __call__(self, parser, namespace, values, option_string=None):
        shapes = list(getattr(namespace, "shapes", None) or [])
        shapes.append((self.dest, values))
        namespace.shapes = shapes


def _add_shape_args(p: argparse.ArgumentParser):
    g = p.add_argument_group("shape (may be repeated where two shapes are needed)")
    g.add_argument("--square", dest="square", nargs=0, action=_ShapeAction, help="unit square")
    g.add_argument("--rect", dest="rect", type=float, action=_ShapeAction, metavar="ASPECT",
                   help="rectangle with side ratio ASPECT")
    g.add_argument("--ellipse", dest="ellipse", type=float, action=_ShapeAction, metavar="ASPECT",
                   help="ellipse with axis ratio ASPECT (inscribed 256-gon)")
    g.add_argument("--regular-ngon", dest="regular", type=int, action=_ShapeAction, metavar="N",
                   help="regular N-gon")
    g.add_argument("--isosceles", dest="isosceles", type=float, action=_ShapeAction, metavar="DEG",
                   help="isosceles triangle with apex angle DEG")
    g.add_argument("--disk", dest="disk", nargs=0, action=_ShapeAction, help="256-gon disk")
    g.add_argument("--file", dest="file", action=_ShapeAction, metavar="PATH",
                   help="polygon file, one 'x y' vertex per line")


def _make_shape(kind, value) -> tuple[ConvexPolygon, str]:
    if kind == "square":
        return rectangle(1.0, 1.0), "square"
    if kind == "rect":
        if value < 1:
            raise UsageError("--rect aspect must be >= 1")
        return rectangle(math.sqrt(value), 1.0 / math.sqrt(value)), f"rect {value:g}"
    if kind == "ellipse":
        if value < 1:
            raise UsageError("--ellipse aspect must be >= 1")
        return ellipse_polygon(math.sqrt(value), 1.0 / math.sqrt(value)), f"ellipse {value:g}"
    if kind == "regular":
        if value < 3:
            raise UsageError("--regular-ngon needs N >= 3")
        return regular_polygon(value), f"regular {value}"
    if kind == "isosceles":
        if not 0 < value < 180:
            raise UsageError("--isosceles apex angle must lie in (0, 180)")
        return isosceles_triangle(math.radians(value)), f"isosceles {value:g}"
    if kind == "disk":
        return unit_disk_polygon(256), "disk"
    if kind == "file":
        try:
            return read_polygon(value), str(value)
        except OSError as exc:
            raise UsageError(f"cannot read {value}: {exc}") from None
    raise UsageError(f"unknown shape {kind}")


def _shapes(args, n: int) -> list[tuple[ConvexPolygon, str]]:
    given = getattr(args, "shapes", None) or []
    if len(given) < n:
        raise UsageError(f"this command needs {n} shape option(s), got {len(given)}")
    return [_make_shape(k, v) for k, v in given[:n]]


# Output helpers ----------------------------------------------------------------------

def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from None
    return out


def _write(path: Path, text: str):
    path.write_text(text)
    print(f"wrote {path}")


# Commands --------------------------------------------------------------------------

def cmd_point(args) -> int:
    (poly, label), = _shapes(args, 1)
    m = evaluate_shape(poly, levels=args.levels)
    print(f"shape      {label}")
    print(f"area       {m.area:.10g}")
    print(f"lambda1    {m.lambda1:.10g}  (rel err {m.lambda1_err:.1e})")
    print(f"torsion    {m.torsion:.10g}  (rel err {m.torsion_err:.1e})")
    print(f"x          {m.x:.10g}")
    print(f"y          {m.y:.10g}")
    kind, value = args.shapes[0]
    if kind in ("square", "rect"):
        a = 1.0 if kind == "square" else math.sqrt(value)
        lam, t = rectangle_reference(a, 1.0 / a)
        print(f"analytic   x = {lam:.10g}  y = {1.0 / t:.10g}")
    if kind in ("disk", "regular"):
        print(f"vertex     x = {vertex_x():.10g}  y = {vertex_y():.10g}")
    pt = DiagramPoint.from_metrics(m, family=kind, params=() if value in (None, []) else (value,))
    row = points_to_csv([pt])
    if args.out:
        _write(_out_dir(args) / "point.csv", row)
    else:
        sys.stdout.write(row)
    return EXIT_OK


def _parse_families(text) -> list[str]:
    fams = [f.strip() for f in text.split(",") if f.strip()]
    if not fams:
        raise UsageError("empty family list")
    for f in fams:
        if f not in FAMILIES:
            raise UsageError(f"unknown family {f!r}; choose from {', '.join(FAMILIES)}")
    return fams


def cmd_diagram(args) -> int:
    fams = _parse_families(args.families)
    points = []
    for f in fams:
        count = args.count or DEFAULT_COUNTS[f]
        pts = sample_family(FamilySpec(f, seed=args.seed), count, levels=args.levels, workers=args.workers)
        print(f"{f:16s} {len(pts)} points")
        points.extend(pts)
    out = _out_dir(args)
    write_points_csv(points, out / "diagram.csv")
    print(f"wrote {out / 'diagram.csv'}")
    _write(out / "diagram.svg", render_svg(points))
    bad = [p for p in points if not region_R_contains(p.x, p.y)]
    for p in bad:
        print(f"outside R: {p.family} {p.params} x={p.x:.6g} y={p.y:.6g} {region_R_violations(p.x, p.y)}")
    print(f"region audit: {len(points) - len(bad)}/{len(points)} points inside R")
    return EXIT_INVARIANT if bad else EXIT_OK


def cmd_slopes(args) -> int:
    j = first_zero_j0()
    gp, gm = slope_constants()
    print(f"j01                    {j:.12f}")
    print(f"gamma+ = 16/j^2        {gp:.6f}")
    print(f"gamma- bound = r_2     {gm:.6f}")
    print(f"c_B = 8/(pi j^4)       {kohler_jobin_constant():.6f}")
    print(f"perforated-disk slope  {perforated_disk_slope():.6f}")
    print(f"vertex                 ({lambda1_ball():.6f}, {1 / torsion_ball():.6f})")
    print("m      r_m")
    for m in range(2, 21):
        print(f"{m:<3d} {rm_value(m):.6f}")
    if args.skip_fd:
        return EXIT_OK
    reports = [verify_second_derivative_fd(FourierPerturbation.single(m), levels=args.levels, workers=args.workers)
               for m in (2, 3)]
    for r in reports:
        print(r.to_text())
    if args.out:
        _write(_out_dir(args) / "slopes_fd.csv", fd_reports_to_csv(reports))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY


def _verify_shapes(args):
    if getattr(args, "shapes", None):
        return [p for p, _ in _shapes(args, len(args.shapes))]
    if args.n_random < 1:
        raise UsageError("--n-random must be >= 1")
    spec = FamilySpec("random_polygon", seed=args.seed)
    return [p for p, _ in family_shapes(spec, args.n_random)]


def cmd_verify(args) -> int:
    if args.reverse_polya is not None and not args.reverse_polya > 0:
        raise UsageError("--reverse-polya must be positive")
    shapes = _verify_shapes(args)
    metrics = evaluate_many(shapes, levels=args.levels, workers=args.workers)
    lam_b, t_b = lambda1_ball(), torsion_ball()
    kj = math.sqrt(t_b) * lam_b
    exact = tol_fail = 0
    worst_polya = worst_kj = math.inf
    for i, m in enumerate(metrics):
        # finest-mesh values in unit-area normalization; these obey the bounds exactly
        lam_raw = m.x_raw * args.tamper_lambda
        t_raw = 1.0 / m.y_raw
        lam = m.x * args.tamper_lambda
        y = m.y
        problems = []
        if not lam_raw >= lam_b:
            problems.append(f"faber-krahn raw {lam_raw:.8g} < {lam_b:.8g}")
        if not t_raw <= t_b:
            problems.append(f"saint-venant raw T {t_raw:.8g} > {t_b:.8g}")
        exact += bool(problems)
        polya = y / lam - 1.0
        kjr = math.sqrt(1.0 / y) * lam / kj - 1.0
        worst_polya = min(worst_polya, polya)
        worst_kj = min(worst_kj, kjr)
        if polya < -0.01:
            problems.append(f"polya y/x - 1 = {polya:.3g}")
        if kjr < -0.01:
            problems.append(f"kohler-jobin margin {kjr:.3g}")
        tol_fail += any(p.startswith(("polya", "kohler")) for p in problems)
        for p in problems:
            print(f"shape {i}: {p}")
    n = len(metrics)
    print(f"shapes checked                {n}")
    print(f"exact conforming violations   {exact}")
    print(f"polya margin (min y/x - 1)    {worst_polya:.4g}")
    print(f"kohler-jobin margin (min)     {worst_kj:.4g}")
    print(f"tolerance (1%) violations     {tol_fail}")
    if args.reverse_polya is not None:
        # reported only: the constant comes from outside and is not asserted
        above = sum(m.y > m.x / args.reverse_polya for m in metrics)
        print(f"reverse polya y <= x/{args.reverse_polya:g}: {n - above}/{n} below")
    return EXIT_INVARIANT if exact or tol_fail else EXIT_OK


def _path_csv(path) -> str:
    return points_to_csv(path.points)


def cmd_path(args) -> int:
    out = _out_dir(args) if args.out else None
    certified = ()
    if args.kind == "homothety":
        (poly, _), = _shapes(args, 1)
        m = evaluate_shape(poly, levels=args.levels)
        path = homothety_curve(m, (m.x, args.x_max or 3.0 * m.x), args.steps)
    elif args.kind == "css":
        (poly, _), = _shapes(args, 1)
        path = css_path(poly, args.steps, levels=args.levels, workers=args.workers)
    elif args.kind == "minkowski":
        (p0, _), (p1, _) = _shapes(args, 2)
        path = minkowski_diagram_path(p0, p1, args.steps, levels=args.levels, workers=args.workers)
    else:
        (p0, _), (p1, _) = _shapes(args, 2)
        path = build_loop(p0, p1, args.steps, levels=args.levels, workers=args.workers)
        if args.grid:
            certified = certify_interior(path, loop_bounding_grid(path), args.grid)
    for p in path.points:
        print(f"{p.x:.8f} {p.y:.8f}")
    status = EXIT_OK
    if path.violations:
        print(f"{path.kind.value} path violations at indices {list(path.violations)}")
        status = EXIT_INVARIANT
    if args.kind == "loop":
        viol = path.notes.get("css_violations", ((), ()))
        if any(viol) or path.notes.get("minkowski_violations"):
            print(f"loop leg violations: {path.notes}")
            status = EXIT_INVARIANT
        if args.grid:
            outside = certified_region_audit(path, certified)
            print(f"certified interior points: {len(certified)} ({len(outside)} outside R)")
            if outside:
                status = EXIT_INVARIANT
    if out is not None:
        _write(out / f"path_{args.kind}.csv", _path_csv(path))
        _write(out / f"path_{args.kind}.svg", render_svg(paths=[path], certified=certified))
        if certified:
            _write(out / "certified.csv",
                   "x,y,winding\n" + "".join(f"{c.x!r},{c.y!r},{c.winding}\n" for c in certified))
    return status


def cmd_envelope(args) -> int:
    out = _out_dir(args) if args.out else None
    if args.gamma is not None:
        r = minimize_f_gamma(args.gamma, budget=args.budget, restarts=args.restarts, seed=args.seed,
                             final_levels=args.levels, workers=args.workers)
        print(f"gamma {args.gamma:g}: best F = {r.score:.6f} at x = {r.metrics.x:.6f}, y = {r.metrics.y:.6f}")
        print(f"disk F = {vertex_y() - args.gamma * vertex_x():.6f}; error budget {r.error_budget(args.gamma):.2e}")
        if out is not None:
            _write(out / "trace.csv", trace_to_csv(r.trace))
            _write(out / "best.txt", r.polygon().to_text())
        return EXIT_OK
    if args.probe is not None:
        try:
            r = probe_envelope(args.probe, args.sense, budget=args.budget, seed=args.seed, final_levels=args.levels)
        except PinFailed as exc:
            print(f"pin failed: {exc}")
            return EXIT_VERIFY
        print(f"{args.sense} y at x = {r.metrics.x:.6f}: {r.metrics.y:.6f}")
        if out is not None:
            _write(out / "trace.csv", trace_to_csv(r.trace))
            _write(out / "best.txt", r.polygon().to_text())
        return EXIT_OK
    if args.csv:
        try:
            points = points_from_csv(Path(args.csv).read_text())
        except (OSError, KeyError, ValueError) as exc:
            raise UsageError(f"cannot read points from {args.csv}: {exc}") from None
    else:
        points = []
        for f in _parse_families(args.families):
            points += sample_family(FamilySpec(f, seed=args.seed), args.count or DEFAULT_COUNTS[f],
                                    levels=args.levels, workers=args.workers)
    env = estimate_envelopes(points, args.bins)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x_center", "lower", "upper", "count"])
    for row in zip(env.centers, env.lower, env.upper, env.counts):
        w.writerow([repr(float(row[0])), repr(float(row[1])), repr(float(row[2])), int(row[3])])
    sys.stdout.write(buf.getvalue())
    d = env.diagnostics()
    print(f"diagnostics: lower<8pi {d['lower_below_saint_venant']}, lower decreases {d['lower_decreases']}, "
          f"upper decreases {d['upper_decreases']}, upper above c_B x^2 {d['upper_above_kohler_jobin']}")
    if out is not None:
        _write(out / "envelope.csv", buf.getvalue())
    return EXIT_OK


# Parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--levels", type=int, default=3, help="nested FEM refinements (default 3)")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--workers", type=int, default=1, help="parallel worker processes")

    parser = argparse.ArgumentParser(prog="bsdiagram", description="Blaschke-Santalo diagram of (lambda_1, 1/T) "
                                     "for planar convex sets.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("point", parents=[common], help="evaluate one shape")
    _add_shape_args(p)
    p.set_defaults(func=cmd_point)

    p = sub.add_parser("diagram", parents=[common], help="sample shape families, write CSV and SVG")
    p.add_argument("--families", default=",".join(FAMILIES), help="comma-separated family names")
    p.add_argument("--count", type=int, default=None, help="shapes per family (default per family)")
    p.set_defaults(func=cmd_diagram, out_default="diagram-out")

    p = sub.add_parser("slopes", parents=[common], help="slope constants and finite-difference checks")
    p.add_argument("--skip-fd", action="store_true", help="print constants only")
    p.set_defaults(func=cmd_slopes)

    p = sub.add_parser("verify", parents=[common], help="audit the classical inequalities on random polygons")
    p.add_argument("--n-random", type=int, default=100)
    p.add_argument("--reverse-polya", type=float, default=None, metavar="C2",
                   help="report shapes with y > x / C2 (diagnostic only)")
    p.add_argument("--tamper-lambda", type=float, default=1.0, help=argparse.SUPPRESS)
    _add_shape_args(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("path", parents=[common], help="homothety, css, minkowski or loop paths")
    p.add_argument("kind", choices=["homothety", "css", "minkowski", "loop"])
    p.add_argument("--steps", type=int, default=40)
    p.add_argument("--grid", type=int, default=0, help="loop only: certify an N x N grid")
    p.add_argument("--x-max", type=float, default=None, help="homothety only: largest x")
    _add_shape_args(p)
    p.set_defaults(func=cmd_path)

    p = sub.add_parser("envelope", parents=[common], help="empirical envelopes and optimizer probes")
    p.add_argument("--csv", default=None, help="diagram CSV to bin (default: sample families)")
    p.add_argument("--families", default=",".join(FAMILIES))
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--bins", type=int, default=12)
    p.add_argument("--probe", type=float, default=None, metavar="X", help="optimize y at fixed x")
    p.add_argument("--sense", choices=["min", "max"], default="min")
    p.add_argument("--gamma", type=float, default=None, help="minimize y - gamma x")
    p.add_argument("--budget", type=int, default=150)
    p.add_argument("--restarts", type=int, default=1)
    p.set_defaults(func=cmd_envelope)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.out is None and getattr(args, "out_default", None):
        args.out = args.out_default
    try:
        if args.levels < 2 or args.workers < 1:
            raise UsageError("--levels must be >= 2 and --workers >= 1")
        return args.func(args)
    except (UsageError, InvalidPolygon, OutOfRange, EmptyInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DiagramError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
