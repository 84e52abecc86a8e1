import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bsdiagram import diagram as dg
from bsdiagram import geometry as g
from bsdiagram import special as sp
from bsdiagram.errors import EmptyInput, OutOfRange, PointOnPath


def crossing_winding(xy, q):
    """Signed crossings of the rightward ray from q, an independent oracle."""
    w = 0
    n = len(xy)
    for i in range(n):
        (x0, y0), (x1, y1) = xy[i], xy[(i + 1) % n]
        if y0 <= q[1] < y1 or y1 <= q[1] < y0:
            xc = x0 + (q[1] - y0) * (x1 - x0) / (y1 - y0)
            if xc > q[0]:
                w += 1 if y1 > y0 else -1
    return w


def test_region_clauses():
    vx, vy = dg.vertex_x(), dg.vertex_y()
    assert dg.region_R_contains(vx, vy)
    assert "faber-krahn" in dg.region_R_violations(vx * 0.99, vy)
    assert "saint-venant" in dg.region_R_violations(30.0, 20.0)
    assert "polya" in dg.region_R_violations(40.0, 39.0)
    assert "kohler-jobin" in dg.region_R_violations(20.0, 40.0)
    assert dg.region_R_contains(30.0, 50.0)


def test_kohler_jobin_curve_through_vertex():
    assert dg.kohler_jobin_curve(dg.vertex_x()) == pytest.approx(dg.vertex_y(), rel=1e-12)
    with pytest.raises(OutOfRange):
        dg.kohler_jobin_curve(10.0)


def test_volume_lower_bound():
    assert dg.volume_lower_bound(dg.vertex_x(), dg.vertex_y()) == pytest.approx(1.0)
    assert dg.volume_lower_bound(2 * dg.vertex_x(), dg.vertex_y()) == pytest.approx(1.0)
    assert dg.volume_lower_bound(dg.vertex_x(), 4 * dg.vertex_y()) == pytest.approx(1.0)
    with pytest.raises(OutOfRange):
        dg.volume_lower_bound(1.0, 100.0)


def test_homothety_curve_is_parabola():
    from bsdiagram.fem import ShapeMetrics
    m = ShapeMetrics(1.0, 20.0, 0.03, 20.0, 1 / 0.03, 0.0, 0.0)
    path = dg.homothety_curve(m, (20.0, 60.0), 11)
    xy = path.xy()
    np.testing.assert_allclose(xy[:, 1], m.y * (xy[:, 0] / m.x) ** 2)
    with pytest.raises(OutOfRange):
        dg.homothety_curve(m, (10.0, 60.0), 5)


@pytest.mark.parametrize("q", [(0.5, 0.5), (2.0, 0.5), (0.1, 0.9), (-1.0, 3.0), (0.999, 0.001)])
def test_winding_square(q):
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    assert dg.winding_number(sq, q) == crossing_winding(sq, q)
    assert dg.winding_number(sq[::-1], q) == -crossing_winding(sq, q)


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 40), st.integers(0, 10_000), st.floats(-2, 2), st.floats(-2, 2))
def test_winding_matches_ray_crossing(n, seed, qx, qy):
    rng = np.random.default_rng(seed)
    # star-shaped polygon around the origin: simple by construction
    th = np.sort(rng.uniform(0, 2 * math.pi, n))
    r = rng.uniform(0.3, 1.5, n)
    xy = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
    try:
        w = dg.winding_number(xy, (qx, qy))
    except PointOnPath:
        return
    assert w == crossing_winding(xy, (qx, qy))


def test_winding_figure_eight():
    t = np.linspace(0, 2 * math.pi, 400, endpoint=False)
    xy = np.stack([np.sin(t), np.sin(t) * np.cos(t)], axis=1)
    assert dg.winding_number(xy, (0.5, 0.0)) == -dg.winding_number(xy, (-0.5, 0.0))
    assert abs(dg.winding_number(xy, (0.5, 0.0))) == 1
    assert dg.winding_number(xy, (0.0, 0.4)) == 0


def test_winding_on_path_and_empty():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    with pytest.raises(PointOnPath):
        dg.winding_number(sq, (0.5, 0.0))
    with pytest.raises(EmptyInput):
        dg.winding_number(np.zeros((1, 2)), (0.5, 0.5))


def test_certify_interior_square():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    cert = dg.certify_interior(sq, (-0.5, 1.5, -0.5, 1.5), resolution=21)
    assert cert
    for c in cert:
        assert 0 < c.x < 1 and 0 < c.y < 1 and c.winding == 1
    inside = sum(1 for x in np.linspace(-0.5, 1.5, 21) for y in np.linspace(-0.5, 1.5, 21)
                 if 0 < x < 1 and 0 < y < 1)
    assert len(cert) == inside


def test_envelopes():
    pts = [dg.DiagramPoint(x, y) for x, y in [(20, 30), (20.5, 40), (25, 35), (25.2, 50), (30, 45)]]
    env = dg.estimate_envelopes(pts, 3)
    assert list(env.counts) == [2, 2, 1]
    assert list(env.lower) == [30, 35, 45]
    assert list(env.upper) == [40, 50, 45]
    with pytest.raises(EmptyInput):
        dg.estimate_envelopes([], 3)
    d = env.diagnostics()
    assert d["lower_decreases"] == 0 and d["upper_decreases"] == 1


def test_family_shapes_deterministic():
    for name in dg.FAMILIES:
        spec = dg.FamilySpec(name, seed=3)
        a = dg.family_shapes(spec, 4)
        b = dg.family_shapes(spec, 4)
        assert len(a) == 4
        for (p, pa), (q, qa) in zip(a, b):
            np.testing.assert_array_equal(p.vertices, q.vertices)
            assert pa == qa
            assert g.polygon_area(p) == pytest.approx(1.0, rel=1e-12)
    tri = dg.family_shapes(dg.FamilySpec("random_triangle", seed=1), 5)
    assert all(p.n == 3 for p, _ in tri)
    assert all(g.inradius(p) >= dg.MIN_RANDOM_INRADIUS for p, _ in tri)
    with pytest.raises(ValueError):
        dg.FamilySpec("hexagon")


def test_csv_roundtrip(tmp_path):
    pts = dg.sample_family(dg.FamilySpec("rectangle"), 2, levels=2)
    pts += dg.sample_family(dg.FamilySpec("random_quad", seed=4), 1, levels=2)
    text = dg.points_to_csv(pts)
    assert text.splitlines()[0] == ",".join(dg.CSV_COLUMNS)
    back = dg.points_from_csv(text)
    for a, b in zip(pts, back):
        assert (a.x, a.y, a.family, a.params, a.seed) == (b.x, b.y, b.family, b.params, b.seed)
    dg.write_points_csv(pts, tmp_path / "d.csv")
    assert (tmp_path / "d.csv.meta.json").exists()


def test_sampled_points_inside_region():
    pts = dg.sample_family(dg.FamilySpec("isosceles"), 3, levels=2)
    pts += dg.sample_family(dg.FamilySpec("regular"), 3, levels=2)
    for p in pts:
        assert dg.region_R_contains(p.x, p.y, p.tolerance()), (p.family, p.params)
        # conforming bounds hold for the unextrapolated values without tolerance
        assert p.x_raw >= sp.lambda1_ball()
        assert p.y_raw >= 1 / sp.torsion_ball()
        assert p.y_raw >= p.y * (1 - p.tolerance())


def test_regular_polygons_approach_vertex():
    pts = dg.sample_family(dg.FamilySpec("regular"), 6, levels=2)
    d = [math.hypot(p.x - dg.vertex_x(), p.y - dg.vertex_y()) for p in pts]
    assert all(b < a for a, b in zip(d, d[1:]))


def test_css_path_monotone():
    path = dg.css_path(g.rectangle(2, 0.5), 12, levels=2)
    assert len(path) == 12
    assert path.violations == ()
    assert path.points[-1].x < path.points[0].x


def test_minkowski_path_floor():
    p0, p1 = g.rectangle(1, 1), g.rectangle(2, 0.5)
    path = dg.minkowski_diagram_path(p0, p1, 3, levels=2)
    assert len(path) == 4
    assert path.violations == ()
    assert path.notes["hersh_protter_floor"] == pytest.approx(math.pi**2 / 4 * 4, rel=1e-9)


def test_svg_output():
    pts = [dg.DiagramPoint(20, 30, family="ellipse"), dg.DiagramPoint(25, 40, family="random_quad")]
    svg = dg.render_svg(pts)
    assert svg.startswith("<svg") or svg.startswith("<?xml")
    assert "</svg>" in svg
