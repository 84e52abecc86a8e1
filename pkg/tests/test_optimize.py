import math

import numpy as np
import pytest

from bsdiagram import optimize as opt
from bsdiagram.errors import BudgetExhausted, DiagramError, PinFailed
from bsdiagram.fem import ShapeMetrics
from bsdiagram.geometry import SupportFunction
from bsdiagram.special import UNIT_DISK_RADIUS, lambda1_ball


def surrogate(h, levels):
    """Cheap stand-in for the FEM: x and y grow with the support-function energy."""
    e = float(np.sum(np.arange(2, len(h.cos_coeffs) + 1) ** 2
                     * (np.asarray(h.cos_coeffs[1:]) ** 2 + np.asarray(h.sin_coeffs[1:]) ** 2)))
    x = lambda1_ball() * (1 + 10 * e)
    y = 8 * math.pi * (1 + 3 * e)
    return ShapeMetrics(1.0, x, 1 / y, x, y, 1e-6, 1e-6, (x,), (1 / y,))


@pytest.fixture
def cheap(monkeypatch):
    monkeypatch.setattr(opt, "_evaluate", surrogate)


def test_f_gamma():
    m = ShapeMetrics(1.0, 20.0, 0.03, 20.0, 1 / 0.03, 0, 0)
    assert opt.f_gamma(m, 0) == pytest.approx(1 / 0.03)
    assert opt.f_gamma(m, 2) == pytest.approx(1 / 0.03 - 40)


def test_disk_support_unit_area():
    assert opt.disk_support().area() == pytest.approx(1.0, rel=1e-12)
    assert opt.admissible(opt.disk_support())
    bad = SupportFunction(UNIT_DISK_RADIUS, [0, 0.5 * UNIT_DISK_RADIUS], [0, 0])
    assert not opt.admissible(bad)


def test_propose_keeps_area_and_translation():
    rng = np.random.default_rng(0)
    h = opt.disk_support()
    for _ in range(50):
        h = opt._propose(h, rng, 0.02)
        assert h.area() == pytest.approx(1.0, rel=1e-12)
        assert h.cos_coeffs[0] == 0 and h.sin_coeffs[0] == 0


def test_budget_validation():
    with pytest.raises(ValueError):
        opt.minimize_f_gamma(0.0, budget=50)
    with pytest.raises(ValueError):
        opt.minimize_f_gamma(0.0, budget=100, restarts=0)


def test_minimize_respects_budget_and_trace(cheap):
    r = opt.minimize_f_gamma(0.0, budget=100, restarts=2, seed=1)
    assert r.evaluations <= 101
    scores = [t.score for t in r.trace]
    assert all(b <= a for a, b in zip(scores, scores[1:]))
    # the surrogate is minimized by the disk at gamma = 0
    assert r.score == pytest.approx(8 * math.pi, rel=1e-3)
    assert opt.trace_to_csv(r.trace).splitlines()[0] == ",".join(opt.TRACE_COLUMNS)


def test_minimize_is_seeded(cheap):
    a = opt.minimize_f_gamma(5.0, budget=100, restarts=2, seed=7)
    b = opt.minimize_f_gamma(5.0, budget=100, restarts=2, seed=7)
    assert a.score == b.score
    np.testing.assert_array_equal(a.best.cos_coeffs, b.best.cos_coeffs)


def test_minimize_moves_away_from_disk_for_large_gamma(cheap):
    # with the surrogate, y - 5x decreases along every mode
    r = opt.minimize_f_gamma(5.0, budget=100, restarts=1, seed=0)
    assert r.score < 8 * math.pi - 5 * lambda1_ball()


def test_budget_exhausted(monkeypatch):
    def broken(h, levels):
        raise DiagramError("solver down")
    monkeypatch.setattr(opt, "_evaluate", broken)
    with pytest.raises(BudgetExhausted):
        opt.minimize_f_gamma(0.0, budget=100, restarts=1)


def test_probe_pins_x(cheap):
    target = lambda1_ball() * 1.05
    r = opt.probe_envelope(target, "min", budget=150, seed=0)
    assert abs(r.metrics.x - target) <= opt.PIN_TOL * target


def test_probe_rejects_low_target():
    with pytest.raises(ValueError):
        opt.probe_envelope(10.0)


def test_probe_pin_failure(monkeypatch):
    def flat(h, levels):
        return surrogate(opt.disk_support(), levels)
    monkeypatch.setattr(opt, "_evaluate", flat)
    with pytest.raises(PinFailed) as info:
        opt.probe_envelope(lambda1_ball() * 1.5, "max", budget=100)
    assert info.value.result is not None


# Full-solver runs ----------------------------------------------------------------

@pytest.fixture(scope="module")
def family_envelope():
    from bsdiagram import diagram as dg
    pts = []
    for name in ("ellipse", "rectangle", "isosceles", "regular"):
        pts += dg.sample_family(dg.FamilySpec(name), dg.DEFAULT_COUNTS[name], levels=2)
    return dg.estimate_envelopes(pts, 20)


@pytest.mark.slow
def test_gamma_one_does_not_beat_disk():
    r = opt.minimize_f_gamma(1.0, budget=100, restarts=1, seed=0)
    disk = 8 * math.pi - lambda1_ball()
    assert r.score >= disk - r.error_budget(1.0) - 1e-6 * abs(disk)
    scores = [t.score for t in r.trace]
    assert all(b <= a for a, b in zip(scores, scores[1:]))


@pytest.mark.slow
def test_probe_min_near_vertex():
    from bsdiagram.diagram import kohler_jobin_curve
    x = lambda1_ball() + 0.1
    r = opt.probe_envelope(x, "min", budget=100, seed=0)
    tol = r.metrics.torsion_err * r.metrics.y
    assert 8 * math.pi - tol <= r.metrics.y <= kohler_jobin_curve(r.metrics.x) + tol


@pytest.mark.slow
@pytest.mark.parametrize("sense", ["max", "min"])
def test_probe_at_25_dominates_family_envelope(sense, family_envelope):
    from bsdiagram.diagram import kohler_jobin_curve
    try:
        r = opt.probe_envelope(25.0, sense, budget=150, seed=0)
    except PinFailed as err:
        r = err.result
        pytest.fail(f"pin missed: x = {r.metrics.x:.4f}")
    y = r.metrics.y
    assert y <= kohler_jobin_curve(r.metrics.x) * (1 + 1e-6)
    if sense == "max":
        assert y >= float(family_envelope.upper_at(25.0)), f"probe y = {y:.3f}"
    else:
        assert y <= float(family_envelope.lower_at(25.0)), f"probe y = {y:.3f}"
