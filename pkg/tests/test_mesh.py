import math

import pytest

from bsdiagram import geometry as g
from bsdiagram import mesh as msh


@pytest.mark.parametrize("shape", [
    g.rectangle(1, 1), g.rectangle(3, 0.2), g.regular_polygon(7), g.isosceles_triangle(math.radians(25)),
])
@pytest.mark.parametrize("method", ["fan", "quality"])
def test_triangulation_invariants(shape, method):
    h = g.diameter(shape) / 10
    m = msh.triangulate(shape, h, method=method)
    assert msh.audit(m, shape) == []
    assert m.max_edge() <= h * (1 + 1e-12)
    assert m.area() == pytest.approx(g.polygon_area(shape), rel=1e-12)


def test_refine_counts_and_flags():
    p = g.regular_polygon(5)
    m = msh.fan_mesh(p)
    r = msh.refine(m)
    e, _ = m.edges()
    assert r.n_triangles == 4 * m.n_triangles
    assert r.n_nodes == m.n_nodes + len(e)
    assert r.max_edge() == pytest.approx(m.max_edge() / 2)
    assert msh.audit(r, p) == []
    # boundary node count doubles on each refinement
    assert r.boundary.sum() == 2 * m.boundary.sum()


def test_edges_shared_by_at_most_two():
    m = msh.triangulate(g.rectangle(2, 1), 0.2, method="quality")
    e, counts = m.edges()
    assert counts.max() == 2
    # Euler characteristic of a disk
    assert m.n_nodes - len(e) + m.n_triangles == 1


def test_audit_detects_problems():
    p = g.rectangle(1, 1)
    m = msh.fan_mesh(p)
    bad = msh.TriMesh(m.nodes, m.triangles[:, [0, 2, 1]], m.boundary)
    assert any("non-positive" in s for s in msh.audit(bad, p))
    wrong = msh.TriMesh(m.nodes, m.triangles, ~m.boundary)
    assert any("boundary" in s for s in msh.audit(wrong, p))


def test_bad_arguments():
    with pytest.raises(ValueError):
        msh.triangulate(g.rectangle(1, 1), 0.0)
    with pytest.raises(ValueError):
        msh.triangulate(g.rectangle(1, 1), 0.1, method="voronoi")


def test_mesh_arrays_read_only():
    m = msh.fan_mesh(g.rectangle(1, 1))
    with pytest.raises(ValueError):
        m.nodes[0, 0] = 1.0
