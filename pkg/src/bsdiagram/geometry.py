"""Convex polygon kernel: measurements, Minkowski sums, Steiner symmetrization
and polygons built from support functions.

Polygons are immutable vertex arrays in counterclockwise order. All
operations return new polygons.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from .errors import DegenerateShadow, InvalidPolygon, NotConvexSupport

COLLINEAR_TOL = 1e-12
DUPLICATE_TOL = 1e-12

# lower bound K_2 in K_2 * inradius * diameter <= area
INRADIUS_DIAMETER_CONSTANT = 2.0 / 3.0


def _cross(o, a, b):
    return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - (a[..., 1] - o[..., 1]) * (b[..., 0] - o[..., 0])


def _cleanup(vertices: np.ndarray) -> np.ndarray:
    """Drop repeated vertices and interior points of collinear runs."""
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2:
        raise InvalidPolygon("vertices must be an (n, 2) array")
    if not np.all(np.isfinite(v)):
        raise InvalidPolygon("vertices must be finite")
    scale = float(np.ptp(v, axis=0).max()) if len(v) else 0.0
    if scale == 0.0:
        raise InvalidPolygon("polygon has zero extent")
    changed = True
    while changed and len(v) >= 3:
        changed = False
        nxt = np.roll(v, -1, axis=0)
        keep = np.linalg.norm(nxt - v, axis=1) > DUPLICATE_TOL * scale
        if not keep.all():
            v = v[keep]
            changed = True
            continue
        prev = np.roll(v, 1, axis=0)
        nxt = np.roll(v, -1, axis=0)
        cr = _cross(prev, v, nxt)
        keep = np.abs(cr) > COLLINEAR_TOL * scale * scale
        if not keep.all():
            # remove one vertex at a time so a fully collinear set is detected
            v = np.delete(v, int(np.argmin(np.abs(cr))), axis=0)
            changed = True
    return v


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    """Convex polygon with counterclockwise vertices."""

    vertices: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = _cleanup(self.vertices)
        if len(v) < 3:
            raise InvalidPolygon("need at least 3 non-collinear vertices")
        prev = np.roll(v, 1, axis=0)
        nxt = np.roll(v, -1, axis=0)
        if np.any(_cross(prev, v, nxt) <= 0):
            raise InvalidPolygon("vertices are not in strictly convex counterclockwise order")
        if _shoelace(v) <= 0:
            raise InvalidPolygon("non-positive area")
        # a strictly left-turning closed chain may still wind twice
        edges = nxt - v
        turn = np.arctan2(_cross(np.zeros_like(edges), edges, np.roll(edges, -1, axis=0)),
                          np.einsum("ij,ij->i", edges, np.roll(edges, -1, axis=0)))
        if abs(turn.sum() - 2 * math.pi) > 1e-6:
            raise InvalidPolygon("vertex chain winds more than once")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @classmethod
    def hull(cls, points) -> "ConvexPolygon":
        """Convex hull of an arbitrary point cloud."""
        return cls(convex_hull(points))

    @property
    def n(self) -> int:
        return len(self.vertices)

    def __len__(self):
        return len(self.vertices)

    def centroid(self) -> np.ndarray:
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        cr = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
        a = cr.sum() / 2.0
        return np.array([((v[:, 0] + w[:, 0]) * cr).sum(), ((v[:, 1] + w[:, 1]) * cr).sum()]) / (6.0 * a)

    def translated(self, offset) -> "ConvexPolygon":
        return ConvexPolygon(self.vertices + np.asarray(offset, dtype=float))

    def scaled(self, factor: float) -> "ConvexPolygon":
        return ConvexPolygon(self.vertices * float(factor))

    def rotated(self, angle: float) -> "ConvexPolygon":
        c, s = math.cos(angle), math.sin(angle)
        return ConvexPolygon(self.vertices @ np.array([[c, s], [-s, c]]))

    def centered(self) -> "ConvexPolygon":
        return self.translated(-self.centroid())

    def support(self, theta) -> np.ndarray:
        """Support function h(theta) = max over vertices of v . (cos theta, sin theta)."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        return (dirs @ self.vertices.T).max(axis=1)

    def to_text(self) -> str:
        return "".join(f"{x:.17g} {y:.17g}\n" for x, y in self.vertices)


def _shoelace(v: np.ndarray) -> float:
    w = np.roll(v, -1, axis=0)
    return 0.5 * float(np.sum(v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]))


def convex_hull(points) -> np.ndarray:
    """Counterclockwise hull vertices (Andrew's monotone chain), collinear points dropped."""
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) < 3:
        return pts

    def chain(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and _cross(np.asarray(out[-2]), np.asarray(out[-1]), p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = chain(pts)
    upper = chain(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


# Measurements ---------------------------------------------------------------

def polygon_area(p: ConvexPolygon) -> float:
    return _shoelace(p.vertices)


def normalize_to_unit_area(p: ConvexPolygon) -> ConvexPolygon:
    """Homothety about the origin to unit area."""
    return p.scaled(1.0 / math.sqrt(polygon_area(p)))


def centered_unit(p: ConvexPolygon) -> ConvexPolygon:
    """Translate the centroid to the origin and rescale to unit area."""
    return normalize_to_unit_area(p.centered())


def perimeter(p: ConvexPolygon) -> float:
    return float(np.linalg.norm(np.roll(p.vertices, -1, axis=0) - p.vertices, axis=1).sum())


def _edge_halfplanes(p: ConvexPolygon):
    v = p.vertices
    e = np.roll(v, -1, axis=0) - v
    normals = np.stack([e[:, 1], -e[:, 0]], axis=1)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    offsets = np.einsum("ij,ij->i", normals, v)
    return normals, offsets


def incircle(p: ConvexPolygon) -> tuple[np.ndarray, float]:
    """Center and radius of the largest inscribed disk (Chebyshev center LP)."""
    normals, offsets = _edge_halfplanes(p)
    a_ub = np.hstack([normals, np.ones((len(normals), 1))])
    res = linprog(c=[0.0, 0.0, -1.0], A_ub=a_ub, b_ub=offsets,
                  bounds=[(None, None), (None, None), (0, None)], method="highs")
    if not res.success:
        raise InvalidPolygon(f"inradius LP failed: {res.message}")
    return np.asarray(res.x[:2]), float(res.x[2])


def inradius(p: ConvexPolygon) -> float:
    return incircle(p)[1]


def diameter(p: ConvexPolygon) -> float:
    v = p.vertices
    d = v[:, None, :] - v[None, :, :]
    return float(np.sqrt((d * d).sum(-1)).max())


def hausdorff_to_disk(p: ConvexPolygon, center=None, n_dirs: int = 4096) -> float:
    """Hausdorff distance to the disk of equal area centred at the centroid.

    For convex bodies this is the sup-norm distance of support functions.
    """
    c = p.centroid() if center is None else np.asarray(center, dtype=float)
    r = math.sqrt(polygon_area(p) / math.pi)
    q = p.vertices - c
    theta = np.concatenate([np.linspace(0, 2 * math.pi, n_dirs, endpoint=False),
                            np.arctan2(q[:, 1], q[:, 0])])
    dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    h = (dirs @ q.T).max(axis=1)
    return float(np.abs(h - r).max())


# Minkowski sums -------------------------------------------------------------

def _start_index(v: np.ndarray) -> int:
    # lowest y, then lowest x: the first edge direction is in [0, pi)
    return int(np.lexsort((v[:, 0], v[:, 1]))[0])


def minkowski_sum(p: ConvexPolygon, q) -> ConvexPolygon:
    """P + Q by merging edge sequences by polar angle, O(n + m).

    ``q`` may also be a single point, in which case P is translated.
    """
    if not isinstance(q, ConvexPolygon):
        pt = np.asarray(q, dtype=float).reshape(-1)
        if pt.shape != (2,):
            raise InvalidPolygon("second summand must be a polygon or a 2D point")
        return p.translated(pt)
    a = np.roll(p.vertices, -_start_index(p.vertices), axis=0)
    b = np.roll(q.vertices, -_start_index(q.vertices), axis=0)
    ea = np.roll(a, -1, axis=0) - a
    eb = np.roll(b, -1, axis=0) - b
    # angles measured from the positive x-axis in [0, 2pi); starting vertices
    # have the smallest y, so both sequences are sorted ascending
    ang_a = np.mod(np.arctan2(ea[:, 1], ea[:, 0]), 2 * math.pi)
    ang_b = np.mod(np.arctan2(eb[:, 1], eb[:, 0]), 2 * math.pi)
    out = [a[0] + b[0]]
    i = j = 0
    n, m = len(ea), len(eb)
    while i < n or j < m:
        if j >= m or (i < n and ang_a[i] <= ang_b[j]):
            step = ea[i]
            i += 1
        else:
            step = eb[j]
            j += 1
        out.append(out[-1] + step)
    return ConvexPolygon(np.array(out[:-1]))


def minkowski_path(p0: ConvexPolygon, p1: ConvexPolygon, t: float, rotation: float = 0.0) -> ConvexPolygon:
    """Normalized Minkowski interpolation t*P1 + (1-t)*P0 rescaled to unit area.

    Both summands are first centred at their centroids; ``rotation`` applies
    an extra rigid rotation to P0 before summation.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    q0 = p0.centered()
    if rotation:
        q0 = q0.rotated(rotation)
    q1 = p1.centered()
    if t == 0.0:
        return normalize_to_unit_area(q0)
    if t == 1.0:
        return normalize_to_unit_area(q1)
    return normalize_to_unit_area(minkowski_sum(q1.scaled(t), q0.scaled(1.0 - t)))


# Continuous Steiner symmetrization ------------------------------------------

def _chords(v: np.ndarray, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper ordinates of the vertical chords of a convex polygon at xs."""
    i_min = int(np.argmin(v[:, 0]))
    i_max = int(np.argmax(v[:, 0]))
    n = len(v)
    # counterclockwise from leftmost to rightmost runs along the lower chain
    lower_idx = [(i_min + k) % n for k in range((i_max - i_min) % n + 1)]
    upper_idx = [(i_max + k) % n for k in range((i_min - i_max) % n + 1)][::-1]
    lo_pts = v[lower_idx]
    up_pts = v[upper_idx]
    lo = _chain_eval(lo_pts, xs, take=min)
    hi = _chain_eval(up_pts, xs, take=max)
    return lo, hi


def _chain_eval(pts: np.ndarray, xs: np.ndarray, take) -> np.ndarray:
    """Evaluate an x-monotone chain; vertical segments resolved by ``take``."""
    x, y = pts[:, 0], pts[:, 1]
    out = np.interp(xs, x, y)
    # vertical edges at the chain ends: np.interp picks one endpoint only
    for end in (0, -1):
        same = np.isclose(x, x[end], rtol=0, atol=1e-14 * max(1.0, abs(x[end])))
        if same.sum() > 1:
            sel = np.isclose(xs, x[end], rtol=0, atol=1e-14 * max(1.0, abs(x[end])))
            out[sel] = take(y[same])
    return out


def css_step(p: ConvexPolygon, direction, s: float, axis_point=None) -> ConvexPolygon:
    """Continuous Steiner symmetrization with parameter s in [0, 1].

    Chords parallel to ``direction`` keep their length while their midpoints
    move toward the axis (the line through ``axis_point``, default the
    centroid, orthogonal to ``direction``) by the factor (1 - s). Chord
    length and midpoint are piecewise linear between vertex abscissae, so
    sampling at those abscissae reproduces the image exactly.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    d = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(d)
    if not np.isfinite(norm) or norm == 0.0:
        raise DegenerateShadow("symmetrization direction must be a nonzero vector")
    d = d / norm
    perp = np.array([d[1], -d[0]])
    origin = p.centroid() if axis_point is None else np.asarray(axis_point, dtype=float)
    rel = p.vertices - origin
    # local frame: u along the axis, w along the symmetrization direction
    u = rel @ perp
    w = rel @ d
    local = np.stack([u, w], axis=1)
    width = u.max() - u.min()
    if width <= 1e-14 * max(1.0, np.abs(w).max()):
        raise DegenerateShadow("projection orthogonal to the direction has zero width")
    xs = np.unique(u)
    lo, hi = _chords(local, xs)
    mid = 0.5 * (lo + hi) * (1.0 - s)
    half = 0.5 * (hi - lo)
    pts = np.concatenate([np.stack([xs, mid - half], axis=1), np.stack([xs, mid + half], axis=1)])
    hull = convex_hull(pts)
    back = origin + hull[:, :1] * perp + hull[:, 1:] * d
    return ConvexPolygon(back)


def _decimate(p: ConvexPolygon, max_vertices: int) -> ConvexPolygon:
    """Remove the least significant vertices (smallest ear area) down to a cap,
    then rescale about the centroid to restore the area."""
    if p.n <= max_vertices:
        return p
    area0 = polygon_area(p)
    v = p.vertices.copy()
    while len(v) > max_vertices:
        prev = np.roll(v, 1, axis=0)
        nxt = np.roll(v, -1, axis=0)
        ears = np.abs(_cross(prev, v, nxt))
        # drop every other smallest ear per pass to keep this O(n log n)
        k = max(1, min(len(v) - max_vertices, len(v) // 8))
        order = np.argsort(ears)
        drop = []
        taken = np.zeros(len(v), bool)
        for idx in order:
            if len(drop) == k:
                break
            if taken[idx] or taken[idx - 1] or taken[(idx + 1) % len(v)]:
                continue
            taken[idx] = True
            drop.append(idx)
        v = np.delete(v, drop, axis=0)
    q = ConvexPolygon(v)
    c = q.centroid()
    return q.translated(-c).scaled(math.sqrt(area0 / polygon_area(q))).translated(c)


CSS_DIRECTIONS = 8


def css_to_ball_path(p: ConvexPolygon, n_steps: int, steps_per_sweep: int = 5,
                     max_vertices: int = 256) -> list[ConvexPolygon]:
    """Discrete continuous-Steiner-symmetrization path toward the disk.

    Directions cycle over 8 equally spaced angles; within each sweep the
    parameter s ramps from 0 to 1 starting from the sweep's initial shape.
    The first element is the (centred) input. Vertex counts are capped by
    ear removal followed by an area-restoring rescale.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    current = p.centered()
    out = [current]
    s_values = np.linspace(0.0, 1.0, steps_per_sweep + 1)[1:]
    k = 0
    while len(out) < n_steps:
        angle = math.pi * (k % CSS_DIRECTIONS) / CSS_DIRECTIONS
        d = (math.cos(angle), math.sin(angle))
        start = current
        for s in s_values:
            step = _decimate(css_step(start, d, float(s)), max_vertices)
            out.append(step)
            current = step
            if len(out) == n_steps:
                break
        k += 1
    return out


# Support functions ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SupportFunction:
    """h(theta) = R + sum_m a_m cos(m theta) + b_m sin(m theta), m = 1..M."""

    radius_offset: float
    cos_coeffs: np.ndarray
    sin_coeffs: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.cos_coeffs, dtype=float).reshape(-1)
        b = np.asarray(self.sin_coeffs, dtype=float).reshape(-1)
        if a.shape != b.shape:
            raise ValueError("cos and sin coefficient arrays must have equal length")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "cos_coeffs", a)
        object.__setattr__(self, "sin_coeffs", b)
        object.__setattr__(self, "radius_offset", float(self.radius_offset))

    @classmethod
    def constant(cls, radius: float, order: int = 0) -> "SupportFunction":
        return cls(radius, np.zeros(order), np.zeros(order))

    @property
    def order(self) -> int:
        return len(self.cos_coeffs)

    def _modes(self):
        return np.arange(1, self.order + 1, dtype=float)

    def value(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        m = self._modes()
        mt = np.multiply.outer(theta, m)
        return self.radius_offset + np.cos(mt) @ self.cos_coeffs + np.sin(mt) @ self.sin_coeffs

    def derivative(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        m = self._modes()
        mt = np.multiply.outer(theta, m)
        return np.sin(mt) @ (-m * self.cos_coeffs) + np.cos(mt) @ (m * self.sin_coeffs)

    def radius_of_curvature(self, theta) -> np.ndarray:
        """h + h''."""
        theta = np.asarray(theta, dtype=float)
        m = self._modes()
        mt = np.multiply.outer(theta, m)
        w = 1.0 - m * m
        return self.radius_offset + np.cos(mt) @ (w * self.cos_coeffs) + np.sin(mt) @ (w * self.sin_coeffs)

    def check_grid(self, n_samples: int = 0) -> np.ndarray:
        n = max(8 * max(self.order, 1), n_samples, 64)
        return np.linspace(0.0, 2 * math.pi, n, endpoint=False)

    def min_curvature_radius(self, n_samples: int = 0) -> float:
        return float(self.radius_of_curvature(self.check_grid(n_samples)).min())

    def is_convex(self, n_samples: int = 0) -> bool:
        grid = self.check_grid(n_samples)
        return bool(self.radius_of_curvature(grid).min() >= 0 and self.value(grid).min() > 0)

    def area(self) -> float:
        """Enclosed area, (1/2) int (h^2 - h'^2), in closed form."""
        m = self._modes()
        return math.pi * self.radius_offset**2 + 0.5 * math.pi * float(
            np.sum((1.0 - m * m) * (self.cos_coeffs**2 + self.sin_coeffs**2)))

    def scaled(self, factor: float) -> "SupportFunction":
        return SupportFunction(self.radius_offset * factor, self.cos_coeffs * factor, self.sin_coeffs * factor)


def polygon_from_support(h: SupportFunction, n_samples: int) -> ConvexPolygon:
    """Polygon through the boundary points h n + h' tau at n uniform angles."""
    grid = h.check_grid(n_samples)
    if h.radius_of_curvature(grid).min() < 0:
        raise NotConvexSupport(f"h + h'' reaches {h.radius_of_curvature(grid).min():.3g} < 0")
    if h.value(grid).min() <= 0:
        raise NotConvexSupport("support function is not positive; origin outside the body")
    theta = np.linspace(0.0, 2 * math.pi, n_samples, endpoint=False)
    hv = h.value(theta)
    dh = h.derivative(theta)
    c, s = np.cos(theta), np.sin(theta)
    pts = np.stack([hv * c - dh * s, hv * s + dh * c], axis=1)
    return ConvexPolygon(pts)


# Polygon text format --------------------------------------------------------

def parse_polygon(text: str) -> ConvexPolygon:
    """Parse "x y" lines; '#' lines and blank lines are ignored."""
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InvalidPolygon(f"line {lineno}: expected two numbers, got {line!r}")
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise InvalidPolygon(f"line {lineno}: {exc}") from None
    return ConvexPolygon(np.array(rows, dtype=float).reshape(-1, 2))


def read_polygon(path) -> ConvexPolygon:
    return parse_polygon(Path(path).read_text())


def write_polygon(p: ConvexPolygon, path, comment: str | None = None) -> None:
    head = f"# {comment}\n" if comment else ""
    Path(path).write_text(head + p.to_text())


# Standard shapes ------------------------------------------------------------

def regular_polygon(n: int, circumradius: float = 1.0, phase: float = 0.0) -> ConvexPolygon:
    t = phase + 2 * math.pi * np.arange(n) / n
    return ConvexPolygon(circumradius * np.stack([np.cos(t), np.sin(t)], axis=1))


def rectangle(a: float, b: float) -> ConvexPolygon:
    return ConvexPolygon(np.array([[0, 0], [a, 0], [a, b], [0, b]], dtype=float) - [a / 2, b / 2])


def ellipse_polygon(a: float, b: float, n: int = 256) -> ConvexPolygon:
    """Inscribed n-gon of the ellipse with semi-axes a, b."""
    t = 2 * math.pi * np.arange(n) / n
    return ConvexPolygon(np.stack([a * np.cos(t), b * np.sin(t)], axis=1))


def isosceles_triangle(apex_angle: float) -> ConvexPolygon:
    """Unit-area isosceles triangle with the given apex angle (radians)."""
    half = 0.5 * apex_angle
    tri = np.array([[-math.sin(half), 0.0], [math.sin(half), 0.0], [0.0, math.cos(half)]])
    return normalize_to_unit_area(ConvexPolygon(tri))


def unit_disk_polygon(n: int = 256) -> ConvexPolygon:
    """Regular n-gon rescaled to unit area."""
    return normalize_to_unit_area(regular_polygon(n))
