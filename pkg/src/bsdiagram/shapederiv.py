"""Second-order shape derivatives of lambda_1, T and F_gamma at the unit-area disk.

A perturbation is described by the Fourier coefficients of the first-order
support-function variation alpha; the second-order variation beta is the
constant that keeps the area fixed to second order.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import NotConvexSupport, OutOfRange
from .fem import evaluate_many
from .geometry import ConvexPolygon, SupportFunction, polygon_from_support
from .special import (MAX_ORDER, UNIT_DISK_RADIUS, first_zero_j0, lambda1_ball,
                      log_derivative_at_zero, rm_value, torsion_ball)

DEFAULT_ORDER = 16
PERTURBED_SAMPLES = 512
BOUNDARY_TOL = 1e-12


@lru_cache(maxsize=None)
def _bracket(m: int) -> float:
    return log_derivative_at_zero(m)


def _brackets(order: int) -> np.ndarray:
    """1 + j J_m'(j)/J_m(j) for m = 1..order (the m = 1 entry is unused)."""
    return np.array([0.0] + [_bracket(m) for m in range(2, order + 1)])


@dataclass(frozen=True, eq=False)
class FourierPerturbation:
    """alpha(theta) = sum_{m=1..M} a_m cos(m theta) + b_m sin(m theta)."""

    a: np.ndarray
    b: np.ndarray
    radius: float = UNIT_DISK_RADIUS
    c0: float = field(init=False)
    max_epsilon: float = field(init=False)

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float)).copy()
        b = np.atleast_1d(np.asarray(self.b, dtype=float)).copy()
        n = max(len(a), len(b))
        a = np.pad(a, (0, n - len(a)))
        b = np.pad(b, (0, n - len(b)))
        if n > MAX_ORDER:
            raise OutOfRange(f"order {n} exceeds {MAX_ORDER}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("coefficients must be finite")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        m = np.arange(1, n + 1)
        c0 = math.pi / self.radius * float(np.sum((m * m - 1) * (a * a + b * b)))
        object.__setattr__(self, "c0", c0)
        # the beta term only adds to h + h'', so |eps| * max|alpha + alpha''| < R keeps convexity
        grid = self.alpha_support().check_grid(PERTURBED_SAMPLES)
        curv = np.abs(SupportFunction(0.0, a, b).radius_of_curvature(grid)).max() if n else 0.0
        object.__setattr__(self, "max_epsilon", self.radius / curv if curv > 0 else math.inf)

    @classmethod
    def single(cls, m: int, a: float = 1.0, b: float = 0.0, order: int | None = None,
               radius: float = UNIT_DISK_RADIUS) -> "FourierPerturbation":
        """Perturbation with one active mode m."""
        if m < 1:
            raise OutOfRange("modes start at m = 1")
        n = max(m, order or 0)
        ca = np.zeros(n)
        cb = np.zeros(n)
        ca[m - 1] = a
        cb[m - 1] = b
        return cls(ca, cb, radius)

    @classmethod
    def random(cls, rng: np.random.Generator, order: int = DEFAULT_ORDER,
               scale: float = 1.0) -> "FourierPerturbation":
        """Gaussian coefficients decaying like 1/m."""
        m = np.arange(1, order + 1)
        return cls(rng.normal(size=order) * scale / m, rng.normal(size=order) * scale / m)

    @property
    def order(self) -> int:
        return len(self.a)

    def energies(self) -> np.ndarray:
        """a_m^2 + b_m^2 for m = 1..M."""
        return self.a**2 + self.b**2

    def alpha_support(self) -> SupportFunction:
        return SupportFunction(0.0, self.a, self.b)

    def describe(self) -> str:
        parts = []
        for m, (x, y) in enumerate(zip(self.a, self.b), start=1):
            if x:
                parts.append(f"a{m}={x:g}")
            if y:
                parts.append(f"b{m}={y:g}")
        return " ".join(parts) or "zero"


def volume_constraint_c0(p: FourierPerturbation) -> float:
    """(pi/R) sum (m^2 - 1)(a_m^2 + b_m^2)."""
    return p.c0


def lambda1_second_derivative(p: FourierPerturbation) -> float:
    """2 pi^2 j^2 sum_{m>=2} (1 + j J_m'/J_m)(a_m^2 + b_m^2)."""
    j = first_zero_j0()
    e = p.energies()
    return 2.0 * math.pi**2 * j * j * math.fsum(_brackets(p.order)[1:] * e[1:])


def torsion_second_derivative(p: FourierPerturbation) -> float:
    """-(1/2) sum_{m>=2} (m - 1)(a_m^2 + b_m^2)."""
    m = np.arange(1, p.order + 1)
    return -0.5 * math.fsum((m - 1) * p.energies())


def f_gamma_second_derivative(gamma: float, p: FourierPerturbation) -> float:
    """Second derivative of F_gamma = 1/T - gamma lambda_1 at the disk.

    Evaluated mode by mode as 2 pi^2 j^2 sum (1 + j J_m'/J_m)(r_m - gamma)(a_m^2 + b_m^2),
    which equals -T''/T(B)^2 - gamma lambda_1''.
    """
    j = first_zero_j0()
    e = p.energies()
    terms = [_brackets(p.order)[m - 1] * (rm_value(m) - gamma) * e[m - 1]
             for m in range(2, p.order + 1) if e[m - 1]]
    return 2.0 * math.pi**2 * j * j * math.fsum(terms)


class Classification(enum.Enum):
    POSITIVE_DEFINITE = "PositiveDefinite"
    NEGATIVE_DEFINITE = "NegativeDefinite"
    INDEFINITE = "Indefinite"
    BOUNDARY = "Boundary"


@dataclass(frozen=True)
class GammaClass:
    gamma: float
    kind: Classification
    # (perturbation, F_gamma'') pairs; filled for indefinite gamma only
    negative_witness: tuple | None = None
    positive_witness: tuple | None = None


def slope_constants() -> tuple[float, float]:
    """(gamma_plus, upper bound for gamma_minus) = (16/j^2, r_2)."""
    j = first_zero_j0()
    gamma_plus = 16.0 / (j * j)
    kj_slope = 2.0 / (torsion_ball() * lambda1_ball())
    if abs(kj_slope - gamma_plus) > 1e-12 * gamma_plus:
        raise ArithmeticError(f"slope identity failed: {kj_slope} vs {gamma_plus}")
    gamma_minus = 32.0 / (j * j * (j * j - 2.0))
    if abs(gamma_minus - rm_value(2)) > 1e-12 * gamma_minus:
        raise ArithmeticError("r_2 disagrees with the closed form")
    return gamma_plus, gamma_minus


def classify_gamma(gamma: float) -> GammaClass:
    """Sign of the quadratic form F_gamma'' on perturbations with a_0 = 0.

    Definite below r_2 and above lim r_m = 16/j^2; in between the m = 2
    mode is negative and any mode with r_m > gamma is positive.
    """
    lo, hi = rm_value(2), slope_constants()[0]
    if abs(gamma - lo) <= BOUNDARY_TOL or abs(gamma - hi) <= BOUNDARY_TOL:
        return GammaClass(gamma, Classification.BOUNDARY)
    if gamma < lo:
        return GammaClass(gamma, Classification.POSITIVE_DEFINITE)
    if gamma > hi:
        return GammaClass(gamma, Classification.NEGATIVE_DEFINITE)
    neg = FourierPerturbation.single(2)
    pos = None
    for m in range(3, MAX_ORDER + 1):
        if rm_value(m) > gamma:
            pos = FourierPerturbation.single(m)
            break
    return GammaClass(
        gamma,
        Classification.INDEFINITE,
        negative_witness=(neg, f_gamma_second_derivative(gamma, neg)),
        positive_witness=None if pos is None else (pos, f_gamma_second_derivative(gamma, pos)),
    )


def perturbed_disk(p: FourierPerturbation, epsilon: float,
                   n_samples: int = PERTURBED_SAMPLES) -> ConvexPolygon:
    """Polygon with support function R + eps alpha + (eps^2/2) beta, beta = c0/(2 pi).

    The constant beta makes the area exactly pi R^2 + pi eps^4 beta^2 / 4.
    """
    if abs(epsilon) >= p.max_epsilon:
        raise NotConvexSupport(f"|epsilon| = {abs(epsilon):g} >= max_epsilon = {p.max_epsilon:g}")
    beta = p.c0 / (2.0 * math.pi)
    h = SupportFunction(p.radius + 0.5 * epsilon**2 * beta, epsilon * p.a, epsilon * p.b)
    return polygon_from_support(h, n_samples)


def perturbed_area(p: FourierPerturbation, epsilon: float) -> float:
    """Exact area enclosed by the smooth support function of perturbed_disk."""
    beta = p.c0 / (2.0 * math.pi)
    return math.pi * p.radius**2 + math.pi * epsilon**4 * beta**2 / 4.0


# Finite-difference verification ------------------------------------------------

@dataclass(frozen=True)
class FDRow:
    epsilon: float
    fd_lambda: float
    fd_torsion: float
    # extrapolated in epsilon using this and the previous row (nan on the first)
    fd_lambda_extrap: float
    fd_torsion_extrap: float


@dataclass(frozen=True)
class FDReport:
    mode: str
    analytic_lambda: float
    analytic_torsion: float
    fd_lambda: float
    fd_torsion: float
    rel_err_lambda: float
    rel_err_torsion: float
    # scale of the finite-difference noise from the fem error estimates
    noise_lambda: float
    noise_torsion: float
    rows: tuple = ()
    tolerance: float = 0.05

    @staticmethod
    def _ok(fd, analytic, rel, noise, tol):
        if analytic == 0.0:
            return abs(fd) <= max(noise, 1e-8)
        return rel <= tol

    @property
    def passed(self) -> bool:
        return (self._ok(self.fd_lambda, self.analytic_lambda, self.rel_err_lambda, self.noise_lambda, self.tolerance)
                and self._ok(self.fd_torsion, self.analytic_torsion, self.rel_err_torsion, self.noise_torsion,
                             self.tolerance))

    def csv_rows(self):
        for r in self.rows:
            yield {
                "mode": self.mode,
                "epsilon": r.epsilon,
                "fd_lambda": r.fd_lambda_extrap if math.isfinite(r.fd_lambda_extrap) else r.fd_lambda,
                "analytic_lambda": self.analytic_lambda,
                "rel_err_lambda": _rel(r.fd_lambda_extrap if math.isfinite(r.fd_lambda_extrap) else r.fd_lambda,
                                       self.analytic_lambda),
                "fd_T": r.fd_torsion_extrap if math.isfinite(r.fd_torsion_extrap) else r.fd_torsion,
                "analytic_T": self.analytic_torsion,
                "rel_err_T": _rel(r.fd_torsion_extrap if math.isfinite(r.fd_torsion_extrap) else r.fd_torsion,
                                  self.analytic_torsion),
            }

    def to_text(self) -> str:
        lines = [f"mode {self.mode}",
                 f"  {'epsilon':>10} {'fd_lambda':>14} {'extrap':>14} {'fd_T':>12} {'extrap':>12}"]
        for r in self.rows:
            lines.append(f"  {r.epsilon:10.5f} {r.fd_lambda:14.6f} {r.fd_lambda_extrap:14.6f} "
                         f"{r.fd_torsion:12.6f} {r.fd_torsion_extrap:12.6f}")
        lines.append(f"  lambda'': analytic {self.analytic_lambda:.6f}  fd {self.fd_lambda:.6f}  "
                     f"rel err {self.rel_err_lambda:.2e}")
        lines.append(f"  T'':      analytic {self.analytic_torsion:.6f}  fd {self.fd_torsion:.6f}  "
                     f"rel err {self.rel_err_torsion:.2e}")
        lines.append(f"  {'PASS' if self.passed else 'FAIL'} (tolerance {self.tolerance:.0%})")
        return "\n".join(lines)


FD_CSV_COLUMNS = ["mode", "epsilon", "fd_lambda", "analytic_lambda", "rel_err_lambda",
                  "fd_T", "analytic_T", "rel_err_T"]


def fd_reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=FD_CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for rep in reports:
        for row in rep.csv_rows():
            w.writerow(row)
    return buf.getvalue()


def _rel(value, ref):
    if ref == 0.0:
        return abs(value)
    return abs(value - ref) / abs(ref)


def default_epsilons(p: FourierPerturbation) -> list[float]:
    """Half and a quarter of the convexity limit, capped at R for rigid motions."""
    e = min(p.max_epsilon, p.radius)
    return [0.5 * e, 0.25 * e]


def verify_second_derivative_fd(p: FourierPerturbation, epsilons=None, levels: int = 3,
                                workers: int = 1, tolerance: float = 0.05) -> FDReport:
    """Central second differences of lambda_1 and T along eps -> Omega_eps.

    D(eps) = (F(eps) + F(-eps) - 2 F(0)) / eps^2 has an O(eps^2) error, which
    is removed by Richardson extrapolation over consecutive epsilons.
    """
    eps = list(default_epsilons(p) if epsilons is None else epsilons)
    if len(eps) < 2:
        raise ValueError("need at least two epsilons")
    if any(e <= 0 for e in eps) or any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
        raise ValueError("epsilons must be positive and strictly decreasing")
    shapes = [perturbed_disk(p, 0.0)]
    for e in eps:
        shapes += [perturbed_disk(p, e), perturbed_disk(p, -e)]
    values = [(m.lambda1, m.torsion, m.lambda1_err, m.torsion_err)
              for m in evaluate_many(shapes, levels=levels, workers=workers)]
    lam0, t0 = values[0][0], values[0][1]
    rows = []
    noise_l = noise_t = 0.0
    prev = None
    for i, e in enumerate(eps):
        (lp, tp, elp, etp), (lm, tm, elm, etm) = values[1 + 2 * i], values[2 + 2 * i]
        dl = (lp + lm - 2.0 * lam0) / e**2
        dt = (tp + tm - 2.0 * t0) / e**2
        nl = 4.0 * max(elp, elm, values[0][2]) * lam0 / e**2
        nt = 4.0 * max(etp, etm, values[0][3]) * t0 / e**2
        if prev is None:
            xl = xt = math.nan
        else:
            r2 = (prev[0] / e) ** 2 - 1.0
            xl = dl + (dl - prev[1]) / r2
            xt = dt + (dt - prev[2]) / r2
            nl = nl * (1.0 + 2.0 / r2)
            nt = nt * (1.0 + 2.0 / r2)
        noise_l, noise_t = nl, nt
        rows.append(FDRow(e, dl, dt, xl, xt))
        prev = (e, dl, dt)
    best_l, best_t = rows[-1].fd_lambda_extrap, rows[-1].fd_torsion_extrap
    al = lambda1_second_derivative(p)
    at = torsion_second_derivative(p)
    return FDReport(
        mode=p.describe(),
        analytic_lambda=al,
        analytic_torsion=at,
        fd_lambda=best_l,
        fd_torsion=best_t,
        rel_err_lambda=_rel(best_l, al),
        rel_err_torsion=_rel(best_t, at),
        noise_lambda=noise_l,
        noise_torsion=noise_t,
        rows=tuple(rows),
        tolerance=tolerance,
    )
