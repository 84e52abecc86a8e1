"""Diagram points, the bounding region, continuous paths and winding certification.

Coordinates are x = lambda_1 |Omega| and y = |Omega|^2 / T, both invariant
under dilations.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import EmptyInput, OutOfRange, PointOnPath, WindingResidualError
from .fem import ShapeMetrics, evaluate_many
from .geometry import (ConvexPolygon, centered_unit, css_to_ball_path, ellipse_polygon, inradius,
                       isosceles_triangle, minkowski_path, rectangle, regular_polygon)
from .special import kohler_jobin_constant, lambda1_ball, torsion_ball

CSV_COLUMNS = ["family", "param1", "param2", "seed", "area", "lambda1", "torsion",
               "x", "y", "lambda1_err", "torsion_err"]
REGION_TOL = 1e-9
MIN_RANDOM_INRADIUS = 0.05
WINDING_RESIDUAL = 0.1
ON_PATH_TOL = 1e-9


def vertex_x() -> float:
    return lambda1_ball()


def vertex_y() -> float:
    return 1.0 / torsion_ball()


@dataclass(frozen=True)
class DiagramPoint:
    x: float
    y: float
    family: str = ""
    params: tuple = ()
    area: float = 1.0
    source: str = ""
    seed: int | None = None
    lambda1: float = math.nan
    torsion: float = math.nan
    lambda1_err: float = 0.0
    torsion_err: float = 0.0
    # finest-mesh (non-extrapolated) coordinates, which obey the conforming bounds exactly
    x_raw: float = math.nan
    y_raw: float = math.nan

    @classmethod
    def from_metrics(cls, m: ShapeMetrics, family: str = "", params: tuple = (), source: str = "",
                     seed: int | None = None) -> "DiagramPoint":
        params = tuple(v for v in params if v != "")
        return cls(x=m.x, y=m.y, family=family, params=params, area=m.area, source=source,
                   seed=seed, lambda1=m.lambda1, torsion=m.torsion, lambda1_err=m.lambda1_err,
                   torsion_err=m.torsion_err, x_raw=m.x_raw, y_raw=m.y_raw)

    @property
    def xy(self) -> tuple[float, float]:
        return self.x, self.y

    def tolerance(self, floor: float = REGION_TOL) -> float:
        """Relative tolerance for region audits: the solver's own error estimate."""
        errs = [e for e in (self.lambda1_err, self.torsion_err) if math.isfinite(e)]
        return max([floor] + [2.0 * e for e in errs])


class PathKind(enum.Enum):
    HOMOTHETY = "Homothety"
    CSS = "CSS"
    MINKOWSKI = "Minkowski"
    LOOP = "Loop"


@dataclass(frozen=True)
class PlanarPath:
    points: tuple
    kind: PathKind
    closed: bool = False
    # indices i where point i rises above point i-1 beyond the solver error (CSS only)
    violations: tuple = ()
    notes: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    def xy(self) -> np.ndarray:
        return np.array([[p.x, p.y] for p in self.points], dtype=float).reshape(-1, 2)

    def reversed(self) -> "PlanarPath":
        return replace(self, points=tuple(reversed(self.points)), violations=())


# Region R ----------------------------------------------------------------------

def kohler_jobin_curve(x):
    """y = c_B x^2, the image of disks of area at most one."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < vertex_x() * (1.0 - 1e-12)):
        raise OutOfRange("x below the vertex abscissa")
    y = kohler_jobin_constant() * xa**2
    return float(y) if np.ndim(y) == 0 else y


def region_R_violations(x: float, y: float, tol: float = REGION_TOL) -> list[str]:
    """Names of the violated clauses of R, each tested with relative tolerance tol."""
    out = []
    if y < vertex_y() * (1.0 - tol):
        out.append("saint-venant")
    if x < vertex_x() * (1.0 - tol):
        out.append("faber-krahn")
    if y < x * (1.0 - tol):
        out.append("polya")
    if y > kohler_jobin_constant() * x * x * (1.0 + tol):
        out.append("kohler-jobin")
    return out


def region_R_contains(x: float, y: float, tol: float = REGION_TOL) -> bool:
    """y >= 8 pi, x >= pi j^2, y >= x and y <= c_B x^2."""
    return not region_R_violations(x, y, tol)


def homothety_curve(m: ShapeMetrics, x_range, n: int) -> PlanarPath:
    """Images of t*Omega, t <= 1: the parabola y = (Y/X^2) x^2 for x >= X."""
    lo, hi = float(x_range[0]), float(x_range[1])
    if lo < m.x * (1.0 - 1e-12) or hi < lo:
        raise OutOfRange(f"x range must lie in [{m.x:g}, inf)")
    if n < 2:
        raise ValueError("need at least two samples")
    coef = m.y / m.x**2
    xs = np.linspace(lo, hi, n)
    pts = tuple(DiagramPoint(float(x), float(coef * x * x), family="homothety", params=(float(m.x / x),),
                             area=float(m.x / x)) for x in xs)
    return PlanarPath(pts, PathKind.HOMOTHETY)


def volume_lower_bound(x: float, y: float) -> float:
    """Smallest area compatible with lambda_1 = x and 1/T = y in the weak diagram."""
    if x < vertex_x() * (1.0 - 1e-12) or y < vertex_y() * (1.0 - 1e-12):
        raise OutOfRange("point lies below or left of the vertex")
    return max(vertex_x() / x, math.sqrt(vertex_y() / y))


# Families ------------------------------------------------------------------------

FAMILIES = ("ellipse", "rectangle", "isosceles", "regular", "random_triangle", "random_quad",
            "random_polygon")
DEFAULT_COUNTS = {"ellipse": 29, "rectangle": 29, "isosceles": 17, "regular": 14,
                  "random_triangle": 20, "random_quad": 20, "random_polygon": 20}


@dataclass(frozen=True)
class FamilySpec:
    name: str
    seed: int = 0
    # random families: number of uniform points whose hull is taken
    points: int = 0
    # random families: reject hulls with fewer vertices than points
    exact: bool = True
    ellipse_samples: int = 256

    def __post_init__(self):
        if self.name not in FAMILIES:
            raise ValueError(f"unknown family {self.name!r}; choose from {', '.join(FAMILIES)}")


def _aspects(count):
    # count = 29 gives 1, 1.25, ..., 8
    return np.linspace(1.0, 8.0, count) if count > 1 else np.array([1.0])


def _random_hull(rng, k, exact):
    for _ in range(10000):
        pts = rng.uniform(-0.5, 0.5, size=(k, 2))
        try:
            p = ConvexPolygon.hull(pts)
        except Exception:
            continue
        if exact and p.n < k:
            continue
        if inradius(centered_unit(p)) < MIN_RANDOM_INRADIUS:
            continue
        return p
    raise RuntimeError(f"could not draw a random {k}-point hull")


def family_shapes(spec: FamilySpec, count: int) -> list[tuple[ConvexPolygon, tuple]]:
    """(polygon, params) pairs for a family, deterministic for a given family, seed and count."""
    if count < 1:
        raise ValueError("count must be positive")
    out = []
    if spec.name == "ellipse":
        for r in _aspects(count):
            out.append((ellipse_polygon(math.sqrt(r), 1.0 / math.sqrt(r), spec.ellipse_samples), (float(r), "")))
    elif spec.name == "rectangle":
        for r in _aspects(count):
            out.append((rectangle(math.sqrt(r), 1.0 / math.sqrt(r)), (float(r), "")))
    elif spec.name == "isosceles":
        for deg in np.linspace(10.0, 170.0, count + 2)[1:-1]:
            out.append((isosceles_triangle(math.radians(deg)), (float(deg), "")))
    elif spec.name == "regular":
        for n in range(3, 3 + count):
            out.append((regular_polygon(n), (n, "")))
    else:
        k = spec.points or {"random_triangle": 3, "random_quad": 4, "random_polygon": 8}[spec.name]
        exact = spec.exact if spec.name == "random_polygon" else True
        if spec.name == "random_polygon" and not spec.points:
            exact = False
        rng = np.random.default_rng(spec.seed)
        for i in range(count):
            out.append((_random_hull(rng, k, exact), (k, i)))
    return [(centered_unit(p), params) for p, params in out]


def sample_family(spec: FamilySpec, count: int, levels: int = 3, workers: int = 1) -> list[DiagramPoint]:
    """Evaluate `count` unit-area members of a family.

    Shapes are generated serially and evaluated in input order, so the
    result does not depend on the number of workers.
    """
    shapes = family_shapes(spec, count)
    metrics = evaluate_many([p for p, _ in shapes], levels=levels, workers=workers)
    seed = spec.seed if spec.name.startswith("random") else None
    return [DiagramPoint.from_metrics(m, family=spec.name, params=params, source=f"{spec.name}-{i}", seed=seed)
            for i, (m, (_, params)) in enumerate(zip(metrics, shapes))]


# Envelopes -----------------------------------------------------------------------

@dataclass(frozen=True)
class Envelopes:
    centers: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    counts: np.ndarray
    # largest x actually present in each bin
    x_max: np.ndarray

    def lower_at(self, x):
        return np.interp(x, self.centers, self.lower)

    def upper_at(self, x):
        return np.interp(x, self.centers, self.upper)

    def diagnostics(self) -> dict:
        """Soft checks: lower >= 8 pi, lower nondecreasing, upper under the Kohler-Jobin curve."""
        lower_drops = int(np.sum(np.diff(self.lower) < -1e-6 * self.lower[1:])) if len(self.lower) > 1 else 0
        upper_drops = int(np.sum(np.diff(self.upper) < -1e-6 * self.upper[1:])) if len(self.upper) > 1 else 0
        return {
            "lower_below_saint_venant": int(np.sum(self.lower < vertex_y() * (1 - 1e-9))),
            "lower_decreases": lower_drops,
            "upper_decreases": upper_drops,
            "upper_above_kohler_jobin": int(np.sum(self.upper > kohler_jobin_constant() * self.x_max**2 * (1 + 1e-9))),
            "gap": (self.upper - self.lower).tolist(),
        }


def estimate_envelopes(points, n_bins: int) -> Envelopes:
    """Per-bin minimum and maximum of y over equal-width x bins; empty bins are skipped."""
    pts = list(points)
    if not pts:
        raise EmptyInput("no points")
    if n_bins < 1:
        raise ValueError("n_bins must be positive")
    xy = np.array([[p.x, p.y] for p in pts], dtype=float)
    lo, hi = xy[:, 0].min(), xy[:, 0].max()
    if hi == lo:
        return Envelopes(np.array([lo]), np.array([xy[:, 1].min()]), np.array([xy[:, 1].max()]),
                         np.array([len(xy)]), np.array([hi]))
    edges = np.linspace(lo, hi, n_bins + 1)
    idx = np.clip(np.searchsorted(edges, xy[:, 0], side="right") - 1, 0, n_bins - 1)
    centers, lower, upper, counts, x_max = [], [], [], [], []
    for b in range(n_bins):
        sel = idx == b
        if not sel.any():
            continue
        centers.append(0.5 * (edges[b] + edges[b + 1]))
        lower.append(xy[sel, 1].min())
        upper.append(xy[sel, 1].max())
        counts.append(int(sel.sum()))
        x_max.append(xy[sel, 0].max())
    return Envelopes(*(np.array(a) for a in (centers, lower, upper, counts, x_max)))


# Paths ---------------------------------------------------------------------------

def _points(polygons, family, levels, workers):
    metrics = evaluate_many(polygons, levels=levels, workers=workers)
    return tuple(DiagramPoint.from_metrics(m, family=family, params=(i,), source=f"{family}-{i}")
                 for i, m in enumerate(metrics))


def _monotone_violations(points, floor=1e-7) -> tuple:
    bad = []
    for i in range(1, len(points)):
        a, b = points[i - 1], points[i]
        tol_x = 2.0 * (a.lambda1_err + b.lambda1_err) + floor
        tol_y = 2.0 * (a.torsion_err + b.torsion_err) + floor
        if b.x > a.x * (1.0 + tol_x) or b.y > a.y * (1.0 + tol_y):
            bad.append(i)
    return tuple(bad)


def css_path(p: ConvexPolygon, n_steps: int, levels: int = 3, workers: int = 1) -> PlanarPath:
    """Diagram image of the symmetrization path from p toward the disk."""
    polys = css_to_ball_path(centered_unit(p), n_steps)
    pts = _points(polys, "css", levels, workers)
    return PlanarPath(pts, PathKind.CSS, violations=_monotone_violations(pts))


def hersh_protter_floor(p0: ConvexPolygon, p1: ConvexPolygon) -> float:
    """pi^2 / (4 rho^2), rho the larger inradius of the two unit-area endpoints."""
    rho = max(inradius(centered_unit(p0)), inradius(centered_unit(p1)))
    return math.pi**2 / (4.0 * rho * rho)


def minkowski_diagram_path(p0: ConvexPolygon, p1: ConvexPolygon, n: int, levels: int = 3,
                           workers: int = 1) -> PlanarPath:
    """n + 1 points along the area-normalized Minkowski combination from p0 to p1."""
    if n < 1:
        raise ValueError("n must be positive")
    q0, q1 = centered_unit(p0), centered_unit(p1)
    polys = [minkowski_path(q0, q1, i / n) for i in range(n + 1)]
    pts = _points(polys, "minkowski", levels, workers)
    floor = hersh_protter_floor(q0, q1)
    low = tuple(i for i, q in enumerate(pts) if q.x < floor * (1.0 - q.tolerance()))
    return PlanarPath(pts, PathKind.MINKOWSKI, violations=low, notes={"hersh_protter_floor": floor})


def build_loop(p1: ConvexPolygon, p2: ConvexPolygon, n: int, levels: int = 3, workers: int = 1,
               css_steps: int | None = None) -> PlanarPath:
    """Vertex -> p1 (reversed symmetrization), p1 -> p2 (Minkowski), p2 -> vertex.

    The symmetrization paths only approach the disk, so the exact vertex is
    inserted at both ends; the closing segment is then degenerate.
    """
    steps = css_steps or n
    c1 = css_path(p1, steps, levels, workers)
    mk = minkowski_diagram_path(p1, p2, n, levels, workers)
    c2 = css_path(p2, steps, levels, workers)
    v = DiagramPoint(vertex_x(), vertex_y(), family="vertex", source="vertex")
    pts = (v,) + tuple(reversed(c1.points)) + mk.points + c2.points + (v,)
    return PlanarPath(pts, PathKind.LOOP, closed=True,
                      notes={"css_violations": (c1.violations, c2.violations),
                             "minkowski_violations": mk.violations})


def _as_xy(path) -> np.ndarray:
    xy = path.xy() if isinstance(path, PlanarPath) else np.asarray(path, dtype=float).reshape(-1, 2)
    if len(xy) < 2:
        raise EmptyInput("a closed path needs at least two points")
    return xy


def _segment_distance(xy: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Distance from each query point (rows of q) to the closed polyline xy."""
    a = xy
    b = np.roll(xy, -1, axis=0)
    d = b - a
    dd = np.einsum("ij,ij->i", d, d)
    dd = np.where(dd == 0, 1.0, dd)
    rel = q[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("qij,ij->qi", rel, d) / dd, 0.0, 1.0)
    gap = rel - t[..., None] * d[None]
    return np.sqrt((gap**2).sum(-1)).min(axis=1)


def _winding_many(xy: np.ndarray, q: np.ndarray) -> np.ndarray:
    rel = xy[None, :, :] - q[:, None, :]
    nxt = np.roll(rel, -1, axis=1)
    cross = rel[..., 0] * nxt[..., 1] - rel[..., 1] * nxt[..., 0]
    dot = (rel * nxt).sum(-1)
    return np.arctan2(cross, dot).sum(axis=1) / (2.0 * math.pi)


def winding_number(path, q) -> int:
    """Winding number of the closed polyline around q by summed angle increments."""
    xy = _as_xy(path)
    q = np.asarray(q, dtype=float).reshape(1, 2)
    if _segment_distance(xy, q)[0] <= ON_PATH_TOL:
        raise PointOnPath(f"point {q[0].tolist()} lies on the path")
    w = float(_winding_many(xy, q)[0])
    k = round(w)
    if abs(w - k) >= WINDING_RESIDUAL:
        raise WindingResidualError(f"winding sum {w:.4f} is not near an integer")
    return int(k)


@dataclass(frozen=True)
class CertifiedPoint:
    x: float
    y: float
    winding: int


def certify_interior(loop, grid, resolution=50) -> list[CertifiedPoint]:
    """Grid points with nonzero winding number with respect to the loop.

    grid = (x_min, x_max, y_min, y_max); resolution is an int or (nx, ny).
    Points within 1e-9 of the loop are skipped.
    """
    xy = _as_xy(loop)
    nx, ny = (resolution, resolution) if np.isscalar(resolution) else resolution
    gx = np.linspace(grid[0], grid[1], int(nx))
    gy = np.linspace(grid[2], grid[3], int(ny))
    q = np.array([[x, y] for y in gy for x in gx])
    out = []
    for start in range(0, len(q), 512):
        chunk = q[start:start + 512]
        dist = _segment_distance(xy, chunk)
        w = _winding_many(xy, chunk)
        k = np.round(w)
        for (x, y), d, wi, ki in zip(chunk, dist, w, k):
            if d <= ON_PATH_TOL or ki == 0:
                continue
            if abs(wi - ki) >= WINDING_RESIDUAL:
                raise WindingResidualError(f"winding sum {wi:.4f} at ({x:g}, {y:g})")
            out.append(CertifiedPoint(float(x), float(y), int(ki)))
    return out


def loop_bounding_grid(loop: PlanarPath, margin: float = 0.0) -> tuple[float, float, float, float]:
    xy = loop.xy()
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    pad = margin * (hi - lo)
    return lo[0] - pad[0], hi[0] + pad[0], lo[1] - pad[1], hi[1] + pad[1]


def certified_region_audit(loop: PlanarPath, certified) -> list[CertifiedPoint]:
    """Certified points outside R beyond the loop's own solver tolerance."""
    tol = max([REGION_TOL] + [p.tolerance() for p in loop.points])
    return [c for c in certified if not region_R_contains(c.x, c.y, tol)]


# Output --------------------------------------------------------------------------

def _fmt(v):
    if v is None or v == "":
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def points_to_csv(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for p in points:
        params = tuple(p.params) + ("", "")
        w.writerow([p.family, _fmt(params[0]), _fmt(params[1]), _fmt(p.seed), _fmt(p.area), _fmt(p.lambda1),
                    _fmt(p.torsion), _fmt(p.x), _fmt(p.y), _fmt(p.lambda1_err), _fmt(p.torsion_err)])
    return buf.getvalue()


def _parse(v):
    if v == "":
        return ""
    for kind in (int, float):
        try:
            return kind(v)
        except ValueError:
            pass
    return v


def points_from_csv(text: str) -> list[DiagramPoint]:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for r in rows:
        params = tuple(v for v in (_parse(r["param1"]), _parse(r["param2"])) if v != "")
        seed = _parse(r["seed"])
        out.append(DiagramPoint(x=float(r["x"]), y=float(r["y"]), family=r["family"], params=params,
                                area=float(r["area"]), seed=None if seed == "" else seed,
                                lambda1=float(r["lambda1"]), torsion=float(r["torsion"]),
                                lambda1_err=float(r["lambda1_err"]), torsion_err=float(r["torsion_err"])))
    return out


CSV_METADATA = {
    "columns": CSV_COLUMNS,
    "coordinates": "x = lambda1 * area, y = area**2 / torsion (scale invariant)",
    "ellipse_bias": "ellipses are inscribed 256-gons: lambda1 is biased up and torsion down "
                    "relative to the smooth ellipse",
}


def write_points_csv(points, path) -> None:
    """CSV in the fixed column order plus a JSON sidecar describing it."""
    path = Path(path)
    path.write_text(points_to_csv(points))
    path.with_name(path.name + ".meta.json").write_text(json.dumps(CSV_METADATA, indent=2) + "\n")


# SVG -----------------------------------------------------------------------------

DEFAULT_AXES = ((15.0, 60.0), (20.0, 120.0))
_STYLE = {
    "ellipse": ("circle", "#1f77b4"),
    "rectangle": ("square", "#d62728"),
    "isosceles": ("triangle", "#2ca02c"),
    "regular": ("star", "#000000"),
    "random_triangle": ("cross", "#9467bd"),
    "random_quad": ("cross", "#8c564b"),
    "random_polygon": ("cross", "#e377c2"),
}


def _marker(kind, px, py, color):
    if kind == "circle":
        return f'<circle cx="{px:.2f}" cy="{py:.2f}" r="2" fill="none" stroke="{color}"/>'
    if kind == "square":
        return f'<rect x="{px - 2:.2f}" y="{py - 2:.2f}" width="4" height="4" fill="none" stroke="{color}"/>'
    if kind == "triangle":
        return (f'<polygon points="{px:.2f},{py - 2.5:.2f} {px - 2.5:.2f},{py + 2:.2f} {px + 2.5:.2f},{py + 2:.2f}" '
                f'fill="none" stroke="{color}"/>')
    if kind == "star":
        return f'<text x="{px:.2f}" y="{py + 3:.2f}" font-size="9" text-anchor="middle" fill="{color}">*</text>'
    return (f'<path d="M{px - 2:.2f},{py - 2:.2f}L{px + 2:.2f},{py + 2:.2f}M{px - 2:.2f},{py + 2:.2f}'
            f'L{px + 2:.2f},{py - 2:.2f}" stroke="{color}"/>')


def render_svg(points=(), paths=(), axes=DEFAULT_AXES, size=(640, 480), certified=()) -> str:
    """Static SVG of region R, family points and optional paths."""
    (x0, x1), (y0, y1) = axes
    w, h = size
    m = 40

    def px(x):
        return m + (x - x0) / (x1 - x0) * (w - 2 * m)

    def py(y):
        return h - m - (y - y0) / (y1 - y0) * (h - 2 * m)

    def poly(xs, ys, style):
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xs, ys))
        return f'<polyline points="{pts}" fill="none" {style}/>'

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
           f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
           f'<defs><clipPath id="plot"><rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}"/></clipPath></defs>',
           f'<rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}" fill="none" stroke="#888"/>']
    for t in np.linspace(x0, x1, 10):
        out.append(f'<text x="{px(t):.2f}" y="{h - m + 14}" font-size="9" text-anchor="middle">{t:.0f}</text>')
    for t in np.linspace(y0, y1, 11):
        out.append(f'<text x="{m - 4}" y="{py(t) + 3:.2f}" font-size="9" text-anchor="end">{t:.0f}</text>')
    out.append(f'<text x="{w / 2}" y="{h - 6}" font-size="11" text-anchor="middle">lambda1 |Omega|</text>')
    out.append(f'<text x="12" y="{h / 2}" font-size="11" text-anchor="middle" '
               f'transform="rotate(-90 12 {h / 2})">|Omega|^2 / T</text>')
    out.append('<g clip-path="url(#plot)">')
    vx, vy = vertex_x(), vertex_y()
    xs = np.linspace(vx, x1, 200)
    out.append(poly(xs, kohler_jobin_curve(xs), 'stroke="black" stroke-width="1.2"'))
    xs = np.linspace(max(vx, vy), x1, 2)
    out.append(poly(xs, xs, 'stroke="black" stroke-width="1.2"'))
    out.append(poly([vx, vx], [vy, y1], 'stroke="#555" stroke-dasharray="4 3"'))
    out.append(poly([vx, x1], [vy, vy], 'stroke="#555" stroke-dasharray="4 3"'))
    out.append(poly([vx, vy], [vy, vy], 'stroke="black" stroke-width="1.2"'))
    for c in certified:
        out.append(f'<circle cx="{px(c.x):.2f}" cy="{py(c.y):.2f}" r="1" fill="#bbb"/>')
    for path in paths:
        xy = path.xy()
        if path.closed and len(xy):
            xy = np.vstack([xy, xy[:1]])
        out.append(poly(xy[:, 0], xy[:, 1], 'stroke="#ff7f0e" stroke-width="1"'))
    for p in points:
        kind, color = _STYLE.get(p.family, ("cross", "#7f7f7f"))
        out.append(_marker(kind, px(p.x), py(p.y), color))
    out.append("</g>")
    ly = m + 12
    for fam, (kind, color) in _STYLE.items():
        if any(p.family == fam for p in points):
            out.append(_marker(kind, w - m - 110, ly - 3, color))
            out.append(f'<text x="{w - m - 100}" y="{ly}" font-size="9">{fam}</text>')
            ly += 12
    out.append("</svg>")
    return "\n".join(out) + "\n"
