"""Bessel functions, disk reference values and the mode-wise slope sequence.

Everything here is scalar and pure. J_m is evaluated in-tree (ascending
series for small arguments, Miller's backward recurrence for larger ones)
so the constants below do not depend on a platform special-function library.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import OutOfRange

MAX_ORDER = 60
SERIES_CUTOFF = 12.0


def _series_j(m: int, x: float) -> float:
    half = 0.5 * x
    term = half**m / math.factorial(m)
    scale = abs(term)
    terms = [term]
    q = -half * half
    k = 0
    # terms decrease once k > x/2; stop when the next one is negligible
    # against both the leading term and the running sum
    while k < 400:
        k += 1
        term *= q / (k * (k + m))
        terms.append(term)
        if k > half and abs(term) < 1e-16 * max(scale, 1e-15 * abs(math.fsum(terms))):
            break
    return math.fsum(terms)


def _miller_j(m: int, x: float) -> float:
    # start well above both the order and the argument so the minimal
    # solution dominates by the time the recurrence reaches m
    start = 2 * ((max(m, int(x)) + 30 + int(math.sqrt(40.0 * max(m, x)))) // 2)
    j_next = 0.0
    j_cur = 1e-30
    norm = 0.0
    wanted = 0.0
    for k in range(start, 0, -1):
        j_prev = (2.0 * k / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        # j_cur now holds J_{k-1}
        if k - 1 == m:
            wanted = j_cur
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
        if abs(j_cur) > 1e250:
            j_cur *= 1e-250
            j_next *= 1e-250
            norm *= 1e-250
            wanted *= 1e-250
    norm += j_cur
    return wanted / norm


def bessel_j(m: int, x: float) -> float:
    """Bessel function of the first kind J_m(x) for integer 0 <= m <= 60, x >= 0."""
    if m < 0 or m > MAX_ORDER or int(m) != m:
        raise OutOfRange(f"order {m} outside 0..{MAX_ORDER}")
    if x < 0 or not math.isfinite(x):
        raise OutOfRange(f"argument {x} must be finite and >= 0")
    m = int(m)
    if x == 0.0:
        return 1.0 if m == 0 else 0.0
    if x <= SERIES_CUTOFF:
        return _series_j(m, x)
    return _miller_j(m, x)


def bessel_j_prime(m: int, x: float) -> float:
    """Derivative J_m'(x)."""
    if m == 0:
        return -bessel_j(1, x)
    if m + 1 > MAX_ORDER:
        # three-term relation avoids J_{m+1} at the top order
        if x == 0.0:
            return 0.0
        return bessel_j(m - 1, x) - m / x * bessel_j(m, x)
    return 0.5 * (bessel_j(m - 1, x) - bessel_j(m + 1, x))


@lru_cache(maxsize=1)
def first_zero_j0() -> float:
    """First positive zero j_{0,1} of J_0, by bisection on [2, 3]."""
    lo, hi = 2.0, 3.0
    f_lo = bessel_j(0, lo)
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        f_mid = bessel_j(0, mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# Disk of unit area ---------------------------------------------------------

UNIT_DISK_RADIUS = 1.0 / math.sqrt(math.pi)


def lambda1_ball() -> float:
    """lambda_1 of the unit-area disk, pi * j01**2."""
    return math.pi * first_zero_j0() ** 2


def torsion_ball() -> float:
    """Torsional rigidity of the unit-area disk, 1/(8 pi)."""
    return 1.0 / (8.0 * math.pi)


def vertex() -> tuple[float, float]:
    """Diagram point of the unit-area disk."""
    return lambda1_ball(), 1.0 / torsion_ball()


def kohler_jobin_constant() -> float:
    """c_B = 1 / (T(B) lambda_1(B)^2) = 8 / (pi j01^4) in the plane."""
    return 1.0 / (torsion_ball() * lambda1_ball() ** 2)


@dataclass(frozen=True)
class DiskReference:
    radius: float
    lambda1: float
    torsion: float
    torsion_center: float
    eigenfunction_center: float


def disk_reference(radius: float) -> DiskReference:
    """Closed-form lambda_1, T, w(0) and phi(0) for a disk.

    phi is L2-normalized for every radius: phi(0) = 1/(sqrt(pi) R |J_1(j01)|).
    """
    if radius <= 0:
        raise OutOfRange("radius must be positive")
    j = first_zero_j0()
    r2 = radius * radius
    return DiskReference(
        radius=radius,
        lambda1=j * j / r2,
        torsion=math.pi * r2 * r2 / 8.0,
        torsion_center=r2 / 4.0,
        eigenfunction_center=1.0 / (math.sqrt(math.pi) * radius * abs(bessel_j(1, j))),
    )


# Reference shapes ----------------------------------------------------------

def rectangle_reference(a: float, b: float) -> tuple[float, float]:
    """(lambda_1, T) of an a x b rectangle.

    T comes from the sine series of the torsion function in the short
    direction, summed until the next odd-term contribution is below 1e-14.
    """
    if a <= 0 or b <= 0:
        raise OutOfRange("side lengths must be positive")
    lam = math.pi**2 * (1.0 / a**2 + 1.0 / b**2)
    s, l = min(a, b), max(a, b)
    total = 0.0
    n = 1
    while True:
        term = math.tanh(n * math.pi * l / (2.0 * s)) / n**5
        total += term
        if term < 1e-14:
            break
        n += 2
    torsion = s**3 * l / 12.0 - 16.0 * s**4 / math.pi**5 * total
    return lam, torsion


def ellipse_reference(a: float, b: float) -> float:
    """Torsional rigidity of the ellipse with semi-axes a, b."""
    if a <= 0 or b <= 0:
        raise OutOfRange("semi-axes must be positive")
    return math.pi * a**3 * b**3 / (4.0 * (a * a + b * b))


# Slope sequence --------------------------------------------------------------

def log_derivative_at_zero(m: int) -> float:
    """1 + j01 J_m'(j01) / J_m(j01); positive for every m >= 2."""
    j = first_zero_j0()
    return 1.0 + j * bessel_j_prime(m, j) / bessel_j(m, j)


def rm_value(m: int) -> float:
    """r_m = 16 (m-1) / (j01^2 (1 + j01 J_m'(j01)/J_m(j01))), m >= 2."""
    if m < 2:
        raise OutOfRange("r_m is defined for m >= 2")
    j = first_zero_j0()
    return 16.0 * (m - 1) / (j * j * log_derivative_at_zero(m))


def krasikov_bounds(m: int, y: float) -> tuple[float, float]:
    """Lower and upper bounds on y J_m'(y) / J_m(y), valid for 0 <= y < m + 1/2."""
    if y < 0 or y >= m + 0.5:
        raise OutOfRange(f"y={y} outside [0, m + 1/2) for m={m}")
    mu = (2 * m + 1) * (2 * m + 3)
    lower = m - 2.0 * y * y / (2 * m + 1)
    upper = (4 * y * y - 12 * m - 6 + math.sqrt((mu - 4 * y * y) ** 3 + mu * mu)) / (
        2.0 * ((2 * m + 1) * (2 * m + 5) - 4 * y * y)
    )
    return lower, upper


def perforated_disk_slope() -> float:
    """Slope 4 J_1(j01)^2 of the disk perforated by a vanishing hole.

    Cross-checked against T(B)^-2 w_B(0)^2 / phi_B(0)^2 built from the
    unit-area disk reference.
    """
    j = first_zero_j0()
    value = 4.0 * bessel_j(1, j) ** 2
    ref = disk_reference(UNIT_DISK_RADIUS)
    assembled = ref.torsion_center**2 / (ref.torsion**2 * ref.eigenfunction_center**2)
    if abs(assembled - value) > 1e-10 * value:
        raise ArithmeticError(f"perforated slope mismatch: {value} vs {assembled}")
    return value
