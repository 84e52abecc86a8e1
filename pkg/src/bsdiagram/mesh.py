"""Triangulation and uniform refinement of convex polygons."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import ConvexPolygon, diameter, polygon_area


@dataclass(frozen=True, eq=False)
class TriMesh:
    nodes: np.ndarray = field(repr=False)
    triangles: np.ndarray = field(repr=False)
    boundary: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name, dtype in (("nodes", float), ("triangles", np.int64), ("boundary", bool)):
            arr = np.ascontiguousarray(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                      - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))

    def area(self) -> float:
        return float(self.signed_areas().sum())

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Unique undirected edges and the number of triangles sharing each."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        return uniq, counts

    def max_edge(self) -> float:
        e, _ = self.edges()
        return float(np.linalg.norm(self.nodes[e[:, 0]] - self.nodes[e[:, 1]], axis=1).max())

    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)


def boundary_flags(nodes: np.ndarray, polygon: ConvexPolygon, rel_tol: float = 1e-9) -> np.ndarray:
    """True for nodes within rel_tol * diameter of some polygon edge."""
    v = polygon.vertices
    w = np.roll(v, -1, axis=0)
    scale = diameter(polygon)
    d = w - v
    dd = np.einsum("kj,kj->k", d, d)
    out = np.empty(len(nodes), bool)
    for start in range(0, len(nodes), 2048):
        chunk = nodes[start:start + 2048]
        rel = chunk[:, None, :] - v[None, :, :]
        t = np.clip(np.einsum("nkj,kj->nk", rel, d) / dd, 0.0, 1.0)
        gap = rel - t[..., None] * d[None]
        out[start:start + 2048] = np.sqrt((gap * gap).sum(-1)).min(axis=1) < rel_tol * scale
    return out


def fan_mesh(polygon: ConvexPolygon) -> TriMesh:
    v = polygon.vertices
    n = len(v)
    nodes = np.vstack([v, polygon.centroid()])
    tris = np.array([[n, i, (i + 1) % n] for i in range(n)])
    flags = np.ones(n + 1, bool)
    flags[n] = False
    return TriMesh(nodes, tris, flags)


def quality_mesh(polygon: ConvexPolygon, target_h: float, min_angle: float = 30.0) -> TriMesh:
    """Constrained quality Delaunay mesh (Shewchuk's Triangle).

    Boundary segments are the polygon edges; the maximum triangle area is
    that of an equilateral triangle with side target_h.
    """
    import triangle as tr

    v = polygon.vertices
    n = len(v)
    segs = np.stack([np.arange(n), (np.arange(n) + 1) % n], axis=1)
    max_area = math.sqrt(3.0) / 4.0 * target_h**2
    out = tr.triangulate({"vertices": np.array(v), "segments": segs}, f"pq{min_angle:g}a{max_area:.17g}Q")
    nodes = np.asarray(out["vertices"], dtype=float)
    tris = np.asarray(out["triangles"], dtype=np.int64)
    markers = np.asarray(out["vertex_markers"]).reshape(-1) != 0
    mesh = TriMesh(nodes, tris, markers)
    areas = mesh.signed_areas()
    if np.any(areas < 0):
        tris = tris.copy()
        flip = areas < 0
        tris[flip] = tris[flip][:, [0, 2, 1]]
        mesh = TriMesh(nodes, tris, mesh.boundary)
    return mesh


def refine(mesh: TriMesh) -> TriMesh:
    """Split every triangle into four through its edge midpoints."""
    t = mesh.triangles
    n = mesh.n_nodes
    e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    e.sort(axis=1)
    uniq, inverse, counts = np.unique(e, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    mids = 0.5 * (mesh.nodes[uniq[:, 0]] + mesh.nodes[uniq[:, 1]])
    # an edge on the boundary loop belongs to exactly one triangle
    mid_flags = counts == 1
    nt = len(t)
    m01 = n + inverse[:nt]
    m12 = n + inverse[nt:2 * nt]
    m20 = n + inverse[2 * nt:]
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    new = np.concatenate([
        np.stack([a, m01, m20], axis=1),
        np.stack([m01, b, m12], axis=1),
        np.stack([m20, m12, c], axis=1),
        np.stack([m01, m12, m20], axis=1),
    ])
    return TriMesh(np.vstack([mesh.nodes, mids]), new, np.concatenate([mesh.boundary, mid_flags]))


def refine_to(mesh: TriMesh, target_h: float) -> TriMesh:
    while mesh.max_edge() > target_h * (1 + 1e-12):
        mesh = refine(mesh)
    return mesh


def triangulate(polygon: ConvexPolygon, target_h: float, method: str = "fan") -> TriMesh:
    """Mesh a convex polygon with every edge no longer than target_h.

    ``fan`` joins the centroid to every vertex and refines uniformly.
    ``quality`` builds a graded Delaunay mesh with a minimum angle of 30
    degrees, which stays well shaped for polygons with many vertices or
    large aspect ratios.
    """
    if target_h <= 0:
        raise ValueError("target_h must be positive")
    if method == "fan":
        base = fan_mesh(polygon)
    elif method == "quality":
        base = quality_mesh(polygon, target_h)
    else:
        raise ValueError(f"unknown triangulation method {method!r}")
    return refine_to(base, target_h)


def audit(mesh: TriMesh, polygon: ConvexPolygon | None = None) -> list[str]:
    """List of violated mesh invariants (empty when the mesh is valid)."""
    problems = []
    areas = mesh.signed_areas()
    if np.any(areas <= 0):
        problems.append(f"{int((areas <= 0).sum())} triangles with non-positive area")
    scale = float(np.ptp(mesh.nodes, axis=0).max())
    rounded = np.round(mesh.nodes / (1e-12 * scale))
    if len(np.unique(rounded, axis=0)) != mesh.n_nodes:
        problems.append("duplicate nodes")
    if polygon is not None:
        a = polygon_area(polygon)
        if abs(areas.sum() - a) > 1e-10 * a:
            problems.append(f"area mismatch {areas.sum()} vs {a}")
        flags = boundary_flags(mesh.nodes, polygon)
        if not np.array_equal(flags, mesh.boundary):
            problems.append("boundary flags disagree with geometry")
    return problems
