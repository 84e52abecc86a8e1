"""Conforming P1 finite elements for the Dirichlet eigenvalue and torsion.

Stiffness and consistent mass matrices are assembled exactly, so on any
mesh the discrete eigenvalue is an upper bound for lambda_1 and the
discrete torsional rigidity a lower bound for T. Values from nested
refinements are Richardson-extrapolated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh, splu

from .errors import NonConvergence, SingularMesh, SolverFailure
from .geometry import ConvexPolygon, centered_unit, diameter, inradius, polygon_area
from .mesh import TriMesh, refine, triangulate


@dataclass(frozen=True, eq=False)
class ScalarField:
    mesh: TriMesh = field(repr=False)
    values: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ShapeMetrics:
    area: float
    lambda1: float
    torsion: float
    x: float
    y: float
    lambda1_err: float
    torsion_err: float
    # per-level values on the nested meshes, coarsest first
    lambda1_levels: tuple = ()
    torsion_levels: tuple = ()

    @property
    def lambda1_raw(self) -> float:
        """Finest-mesh eigenvalue (upper bound for the exact one)."""
        return self.lambda1_levels[-1]

    @property
    def torsion_raw(self) -> float:
        """Finest-mesh torsional rigidity (lower bound for the exact one)."""
        return self.torsion_levels[-1]

    @property
    def x_raw(self) -> float:
        return self.lambda1_raw * self.area

    @property
    def y_raw(self) -> float:
        return self.area**2 / self.torsion_raw


def _gradients(mesh: TriMesh):
    p = mesh.nodes[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    # barycentric gradients: grad l_i = (y_j - y_k, x_k - x_j) / (2A)
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    area = 0.5 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    return b, c, area


def assemble(mesh: TriMesh) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Full P1 stiffness and consistent mass matrices (boundary rows included)."""
    b, c, area = _gradients(mesh)
    if np.any(area <= 0):
        raise SingularMesh(f"{int((area <= 0).sum())} triangles with non-positive area")
    ke = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) / (4.0 * area[:, None, None])
    me = area[:, None, None] / 12.0 * (np.ones((3, 3)) + np.eye(3))
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = mesh.n_nodes
    k = sp.csr_matrix((ke.ravel(), (rows, cols)), shape=(n, n))
    m = sp.csr_matrix((me.ravel(), (rows, cols)), shape=(n, n))
    return k, m


def load_vector(mesh: TriMesh) -> np.ndarray:
    """Integrals of the hat functions, area/3 per triangle vertex."""
    _, _, area = _gradients(mesh)
    return np.bincount(mesh.triangles.ravel(), weights=np.repeat(area / 3.0, 3), minlength=mesh.n_nodes)


def restrict(a: sp.spmatrix, mesh: TriMesh) -> sp.csc_matrix:
    idx = mesh.interior()
    return a.tocsr()[idx][:, idx].tocsc()


def _factor(k_int):
    try:
        return splu(k_int, permc_spec="COLAMD")
    except RuntimeError as exc:
        raise SolverFailure(f"sparse factorization failed: {exc}") from exc


def _torsion_from(k_int, b_int, lu):
    w = lu.solve(b_int)
    if not np.all(np.isfinite(w)):
        raise SolverFailure("non-finite torsion solution")
    # (b.w)^2 / (w.Kw) is a Rayleigh quotient: never above the exact discrete T
    kw = k_int @ w
    denom = float(w @ kw)
    if denom <= 0:
        raise SolverFailure("stiffness matrix is not positive definite")
    t = float(b_int @ w) ** 2 / denom
    return w, t


def solve_torsion(mesh: TriMesh) -> tuple[ScalarField, float]:
    """Torsion function w (K w = b) and T = integral of w."""
    k, _ = assemble(mesh)
    idx = mesh.interior()
    if len(idx) == 0:
        raise SolverFailure("mesh has no interior nodes")
    k_int = restrict(k, mesh)
    b = load_vector(mesh)[idx]
    w_int, t = _torsion_from(k_int, b, _factor(k_int))
    w = np.zeros(mesh.n_nodes)
    w[idx] = w_int
    return ScalarField(mesh, w), t


def inverse_iteration(k_int, m_int, lu, x0, tol=1e-10, max_iter=500):
    """Smallest eigenpair of K u = lambda M u, shift-invert about zero.

    Implicitly restarted Lanczos on (K^-1 M) with the given factorization
    of K. Plain inverse iteration stalls on slender domains, where
    lambda_2 / lambda_1 is within a fraction of a percent of one.
    """
    n = k_int.shape[0]
    x0 = np.asarray(x0, dtype=float)
    if n <= 3:
        vals, vecs = eigh(k_int.toarray(), m_int.toarray())
        return float(vals[0]), vecs[:, 0], 1
    op = LinearOperator((n, n), matvec=lu.solve, dtype=float)
    ncv = min(n - 1, 40)
    try:
        vals, vecs = eigsh(k_int, k=1, M=m_int, sigma=0.0, which="LM", OPinv=op, v0=x0,
                           ncv=ncv, tol=tol * 1e-2, maxiter=max_iter)
    except ArpackNoConvergence as exc:
        raise NonConvergence(f"eigensolver did not converge in {max_iter} restarts") from exc
    lam = float(vals[0])
    x = vecs[:, 0]
    x /= math.sqrt(float(x @ (m_int @ x)))
    kx = k_int @ x
    lam = float(x @ kx)
    mx = m_int @ x
    res = np.linalg.norm(kx - lam * mx) / (lam * np.linalg.norm(mx))
    if not res < max(tol, 1e-8):
        raise NonConvergence(f"eigenpair residual {res:.2e}")
    return lam, x, 1


def _orient(mesh, idx, phi_int):
    c = mesh.nodes[idx].mean(axis=0)
    k = int(np.argmin(np.linalg.norm(mesh.nodes[idx] - c, axis=1)))
    return -phi_int if phi_int[k] < 0 else phi_int


def solve_lambda1(mesh: TriMesh, tol: float = 1e-10, max_iter: int = 500) -> tuple[ScalarField, float]:
    """First Dirichlet eigenpair; phi has unit L2 norm and is positive at the centre."""
    k, m = assemble(mesh)
    idx = mesh.interior()
    if len(idx) == 0:
        raise SolverFailure("mesh has no interior nodes")
    k_int = restrict(k, mesh)
    m_int = restrict(m, mesh)
    lu = _factor(k_int)
    w, _ = _torsion_from(k_int, load_vector(mesh)[idx], lu)
    lam, phi_int, _ = inverse_iteration(k_int, m_int, lu, w, tol, max_iter)
    phi = np.zeros(mesh.n_nodes)
    phi[idx] = _orient(mesh, idx, phi_int)
    return ScalarField(mesh, phi), lam


def solve_both(mesh: TriMesh, tol: float = 1e-10, max_iter: int = 500) -> tuple[float, float]:
    """(lambda_1, T) on one mesh, sharing a single factorization."""
    k, m = assemble(mesh)
    idx = mesh.interior()
    if len(idx) == 0:
        raise SolverFailure("mesh has no interior nodes")
    k_int = restrict(k, mesh)
    m_int = restrict(m, mesh)
    lu = _factor(k_int)
    w, t = _torsion_from(k_int, load_vector(mesh)[idx], lu)
    lam, _, _ = inverse_iteration(k_int, m_int, lu, w, tol, max_iter)
    return lam, t


def richardson(values, ratio: float = 2.0, order: float = 2.0, order_tol: float = 0.3):
    """Extrapolate a sequence computed at h, h/ratio, h/ratio^2, ...

    Returns (estimate, relative error estimate, order used). With three or
    more levels the observed order replaces ``order`` when the two differ by
    more than ``order_tol``. The error estimate is the gap between the last
    two extrapolants, or the last correction when only one is available.
    """
    v = np.asarray(values, dtype=float)
    if len(v) == 1:
        return float(v[0]), float("nan"), order
    p = order
    if len(v) >= 3:
        d1, d2 = v[-2] - v[-3], v[-1] - v[-2]
        if d1 != 0 and d2 != 0 and d1 * d2 > 0:
            observed = math.log(abs(d1 / d2)) / math.log(ratio)
            if abs(observed - order) > order_tol:
                p = min(max(observed, 1.0), 4.0)
    f = ratio**p - 1.0
    ex = v[1:] + (v[1:] - v[:-1]) / f
    best = float(ex[-1])
    if len(ex) >= 2:
        err = abs(ex[-1] - ex[-2]) / abs(best)
    else:
        err = abs(v[-1] - v[-2]) / f / abs(best)
    return best, float(err), p


DEFAULT_LEVELS = 3
DEFAULT_H_FRACTION = 1.0 / 24.0


def base_mesh_size(p: ConvexPolygon, h_fraction: float = DEFAULT_H_FRACTION) -> float:
    """diameter * h_fraction, capped at half the inradius for slender shapes."""
    return min(diameter(p) * h_fraction, 0.5 * inradius(p))


def evaluate_shape(p: ConvexPolygon, levels: int = DEFAULT_LEVELS,
                   h_fraction: float = DEFAULT_H_FRACTION) -> ShapeMetrics:
    """lambda_1, T and the scale-invariant diagram coordinates of a polygon.

    The polygon is centred and rescaled to unit area before meshing, so the
    coordinates (x, y) do not depend on its position or size.
    """
    if levels < 2:
        raise ValueError("levels must be at least 2")
    area = polygon_area(p)
    q = centered_unit(p)
    mesh = triangulate(q, base_mesh_size(q, h_fraction), method="quality")
    lams, ts = [], []
    for level in range(levels):
        if level:
            mesh = refine(mesh)
        lam, t = solve_both(mesh)
        lams.append(lam)
        ts.append(t)
    lam, lam_err, _ = richardson(lams)
    t, t_err, _ = richardson(ts)
    # back to the original scale: lambda is (-2)-homogeneous, T is 4-homogeneous
    lam_p = lam / area
    t_p = t * area**2
    return ShapeMetrics(
        area=area,
        lambda1=lam_p,
        torsion=t_p,
        x=lam,
        y=1.0 / t,
        lambda1_err=lam_err,
        torsion_err=t_err,
        lambda1_levels=tuple(v / area for v in lams),
        torsion_levels=tuple(v * area**2 for v in ts),
    )


def _evaluate_job(args):
    p, levels = args
    return evaluate_shape(p, levels=levels)


def evaluate_many(polygons, levels: int = DEFAULT_LEVELS, workers: int = 1) -> list[ShapeMetrics]:
    """evaluate_shape over a list, in input order; workers > 1 uses processes."""
    jobs = [(p, levels) for p in polygons]
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_evaluate_job, jobs))
    return [_evaluate_job(j) for j in jobs]
