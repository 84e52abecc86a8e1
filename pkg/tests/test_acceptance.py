"""End-to-end acceptance checks; each test prints one PASS/FAIL line."""
import math
import time

import pytest

from bsdiagram import cli
from bsdiagram import diagram as dg
from bsdiagram import geometry as g
from bsdiagram import shapederiv as sd
from bsdiagram import special as sp
from bsdiagram.fem import evaluate_shape
from bsdiagram.optimize import minimize_f_gamma

J = sp.first_zero_j0()
VX, VY = sp.lambda1_ball(), 1.0 / sp.torsion_ball()


@pytest.fixture
def report(capsys):
    def emit(label, ok, detail, elapsed=None):
        timing = "" if elapsed is None else f" [{elapsed:.1f} s]"
        with capsys.disabled():
            print(f"\n{label}: {'PASS' if ok else 'FAIL'} {detail}{timing}")
        return ok
    return emit


def rel(a, b):
    return abs(a - b) / abs(b)


def test_criterion_1_vertex(report):
    t0 = time.perf_counter()
    m = evaluate_shape(g.unit_disk_polygon(256), levels=3)
    dt = time.perf_counter() - t0
    ex, ey = rel(m.x, VX), rel(m.y, VY)
    ok = ex <= 0.01 and ey <= 0.01 and dt <= 30
    assert report("criterion 1 (vertex)", ok,
                  f"x={m.x:.5f} (rel {ex:.1e}) y={m.y:.5f} (rel {ey:.1e})", dt)


def test_criterion_2_analytic(report):
    t0 = time.perf_counter()
    sq = evaluate_shape(g.rectangle(1, 1), levels=3)
    rc = evaluate_shape(g.rectangle(2, 0.5), levels=3)
    el = evaluate_shape(g.ellipse_polygon(2, 0.5, 256), levels=3)
    dt = time.perf_counter() - t0
    e_sq = rel(sq.lambda1, 2 * math.pi**2)
    e_rc = rel(rc.lambda1, 4.25 * math.pi**2)
    e_t = rel(sq.torsion, sp.rectangle_reference(1, 1)[1])
    e_el = rel(el.torsion, math.pi * 8 * 0.125 / (4 * 4.25))
    ok = max(e_sq, e_rc, e_t) <= 0.005 and e_el <= 0.01 and dt <= 60
    assert report("criterion 2 (analytic)", ok,
                  f"square lambda {e_sq:.1e}, rect lambda {e_rc:.1e}, square T {e_t:.1e}, ellipse T {e_el:.1e}",
                  dt)


def test_criterion_3_constants(report):
    t0 = time.perf_counter()
    gp, gm = sd.slope_constants()
    slope = sp.perforated_disk_slope()
    dt = time.perf_counter() - t0
    ok = (abs(J - 2.404826) <= 1e-6 and abs(gp - 2.7668) <= 1e-3 and abs(gm - 1.4626) <= 1e-3
          and abs(slope - 1.078) <= 1e-3 and dt <= 1)
    assert report("criterion 3 (constants j, gamma+, gamma-, slope)", ok,
                  f"j={J:.7f} gamma+={gp:.5f} gamma-={gm:.5f} slope={slope:.5f}", dt)


def test_criterion_3_kohler_jobin_constant(report):
    c = sp.kohler_jobin_constant()
    two_sig = float(f"{c:.2g}")
    ok = two_sig == 0.077
    assert report("criterion 3 (c_B to two significant figures)", ok,
                  f"c_B={c:.7f} rounds to {two_sig} (target 0.077)")


@pytest.mark.parametrize("m", [2, 3])
def test_criterion_4_fd(report, m):
    t0 = time.perf_counter()
    rep = sd.verify_second_derivative_fd(sd.FourierPerturbation.single(m), levels=3)
    dt = time.perf_counter() - t0
    ok = rep.rel_err_lambda <= 0.05 and rep.rel_err_torsion <= 0.05 and dt <= 150
    if m == 2:
        ok = ok and rep.analytic_torsion == -0.5
    assert report(f"criterion 4 (finite differences, m={m})", ok,
                  f"lambda'' fd={rep.fd_lambda:.3f} exact={rep.analytic_lambda:.3f} (rel {rep.rel_err_lambda:.1e}); "
                  f"T'' fd={rep.fd_torsion:.5f} exact={rep.analytic_torsion:.5f} (rel {rep.rel_err_torsion:.1e})",
                  dt)


def test_criterion_5_conforming(report):
    t0 = time.perf_counter()
    shapes = dg.family_shapes(dg.FamilySpec("random_polygon", seed=2024), 100)
    raw_bad = soft_bad = 0
    kj_ratio = VX / math.sqrt(VY)
    for p, _ in shapes:
        m = evaluate_shape(p, levels=3)
        if m.lambda1_raw * m.area < VX or m.torsion_raw / m.area**2 > 1 / VY:
            raw_bad += 1
        if m.y < m.x * 0.99 or m.x / math.sqrt(m.y) < kj_ratio * 0.99:
            soft_bad += 1
    dt = time.perf_counter() - t0
    ok = raw_bad == 0 and soft_bad == 0 and dt <= 600
    assert report("criterion 5 (conforming invariants)", ok,
                  f"{len(shapes)} polygons, raw violations {raw_bad}, Polya/Kohler-Jobin violations {soft_bad}", dt)


def test_criterion_6_rm_structure(report):
    r = {m: sp.rm_value(m) for m in range(2, 51)}
    limit = 16 / J**2
    ordered = all(0 < r[2] <= r[m] < limit for m in r)
    sandwich = True
    for m in range(3, 21):
        lo, hi = sp.krasikov_bounds(m, J)
        v = J * sp.bessel_j_prime(m, J) / sp.bessel_j(m, J)
        sandwich = sandwich and lo <= v <= hi
    ok = ordered and sandwich
    assert report("criterion 6 (r_m ordering and Krasikov sandwich)", ok,
                  f"r_2={r[2]:.5f} max r_m={max(r.values()):.5f} < {limit:.5f}; sandwich m=3..20 {sandwich}")


def test_criterion_6_r50_limit(report):
    r50, limit = sp.rm_value(50), 16 / J**2
    gap = rel(r50, limit)
    assert report("criterion 6 (r_50 within 2% of 16/j^2)", gap <= 0.02,
                  f"r_50={r50:.5f} limit={limit:.5f} gap {100 * gap:.2f}%")


def test_criterion_7_classification(report):
    c1, c2, c3 = (sd.classify_gamma(x) for x in (1.0, 2.0, 3.0))
    neg, vneg = c2.negative_witness
    pos, vpos = c2.positive_witness
    # witnesses re-evaluated from the separate lambda'' and T'' formulas
    def direct(p):
        return -sd.torsion_second_derivative(p) * VY**2 - 2.0 * sd.lambda1_second_derivative(p)
    ok = (c1.kind is sd.Classification.POSITIVE_DEFINITE and c2.kind is sd.Classification.INDEFINITE
          and c3.kind is sd.Classification.NEGATIVE_DEFINITE and vneg < 0 < vpos
          and direct(neg) < 0 < direct(pos))
    assert report("criterion 7 (classification)", ok,
                  f"gamma=1 {c1.kind.value}, gamma=2 {c2.kind.value} "
                  f"({neg.describe()}: {vneg:.2f}, {pos.describe()}: {vpos:.2f}), gamma=3 {c3.kind.value}")


def test_criterion_8_css(report):
    t0 = time.perf_counter()
    path = dg.css_path(g.rectangle(3, 1 / 3), 80, levels=3)
    dt = time.perf_counter() - t0
    end = path.points[-1]
    ex, ey = rel(end.x, VX), rel(end.y, VY)
    ok = path.violations == () and ex <= 0.02 and ey <= 0.02
    assert report("criterion 8 (CSS path)", ok,
                  f"{len(path)} steps, violations {len(path.violations)}, end rel gap x {ex:.1e} y {ey:.1e}", dt)


def test_criterion_8_loop(report):
    t0 = time.perf_counter()
    loop = dg.build_loop(g.rectangle(1, 1), g.rectangle(2, 0.5), 16, levels=3, css_steps=40)
    cert = dg.certify_interior(loop, dg.loop_bounding_grid(loop), resolution=50)
    outside = dg.certified_region_audit(loop, cert)
    dt = time.perf_counter() - t0
    ok = len(cert) > 0 and not outside
    assert report("criterion 8 (loop certification)", ok,
                  f"{len(loop)} loop points, {len(cert)} certified, {len(outside)} outside R", dt)


@pytest.fixture(scope="module")
def default_diagram(tmp_path_factory):
    out = tmp_path_factory.mktemp("diagram")
    t0 = time.perf_counter()
    code = cli.main(["diagram", "--out", str(out)])
    dt = time.perf_counter() - t0
    return code, out, dt


def test_criterion_9_figure(report, default_diagram):
    code, out, dt = default_diagram
    pts = dg.points_from_csv((out / "diagram.csv").read_text())
    svg = (out / "diagram.svg").read_text()
    outside = [p for p in pts if not dg.region_R_contains(p.x, p.y, p.tolerance())]
    reg = sorted((p for p in pts if p.family == "regular"), key=lambda p: p.params[0])
    dist = [math.hypot(rel(p.x, VX), rel(p.y, VY)) for p in reg]
    accumulates = all(b < a for a, b in zip(dist, dist[1:])) and dist[-1] < 0.01
    rect = sorted((p for p in pts if p.family == "rectangle"), key=lambda p: p.params[0])
    fans = all(b.y > a.y and b.x > a.x for a, b in zip(rect, rect[1:]))
    ok = code == 0 and not outside and accumulates and fans and svg.rstrip().endswith("</svg>")
    assert report("criterion 9 (default diagram)", ok,
                  f"{len(pts)} points, {len(outside)} outside R; regular n={reg[-1].params[0]} at {dist[-1]:.1e} "
                  f"from the vertex; rectangles increasing {fans}", dt)


def test_criterion_10_optimizer(report):
    t0 = time.perf_counter()
    r0 = minimize_f_gamma(0.0, seed=0)
    r2 = minimize_f_gamma(2.0, seed=0)
    dt = time.perf_counter() - t0
    f0_disk = VY
    f2_disk = VY - 2.0 * VX
    e0 = rel(r0.score, f0_disk)
    budget = r2.error_budget(2.0)
    ok = e0 <= 0.005 and r2.score < f2_disk - budget and dt <= 600
    assert report("criterion 10 (optimizer)", ok,
                  f"gamma=0 score {r0.score:.5f} vs {f0_disk:.5f} (rel {e0:.1e}); gamma=2 score {r2.score:.4f} "
                  f"vs disk {f2_disk:.4f} (error budget {budget:.1e})", dt)
