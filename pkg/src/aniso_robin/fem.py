"""First Robin eigenpair on a P1 mesh.

The discrete Rayleigh quotient is

    J(u) = (sum_T |T| H(grad u_T)^p + beta sum_e |e| H(nu_e) int_e |u|^p) / int |u|^p

with one-point gradient quadrature on triangles, 2-point Gauss on boundary
edges and the edge-midpoint rule for the denominator.  For ``p = 2`` and a
quadratic norm ``J`` is a ratio of quadratic forms, so the eigenpair is
found by inverse iteration.  Every other case minimizes ``J`` directly.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import InputError, NumericError
from .norms import Euclidean, Quadratic, flux

__all__ = [
    "EigenResult",
    "rayleigh",
    "rayleigh_gradient",
    "assemble_p2",
    "solve_p2_quadratic",
    "minimize_rayleigh",
    "gradient_check",
    "solve",
]

_GAUSS = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


@dataclass
class EigenResult:
    lam: float
    u: np.ndarray
    iterations: int
    rq_residual: float
    weak_residual: float
    converged: bool = True
    history: list = field(default_factory=list, repr=False)


# ---------------------------------------------------------------------------
# Rayleigh quotient


def _spow(u, e):
    return np.abs(u) ** e


def rayleigh(mesh, H, p, beta, u):
    """Return ``(numerator, denominator, J)`` of the discrete Rayleigh quotient."""
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.n_nodes,):
        raise InputError(f"u must have one value per node ({mesh.n_nodes})")
    T = mesh.triangles
    g = mesh.gradients(u)
    interior = np.sum(mesh.areas * H._eval(g) ** p)

    B = mesh.boundary_edges
    ui, uj = u[B[:, 0]], u[B[:, 1]]
    trace = sum(0.5 * _spow((1 - s) * ui + s * uj, p) for s in _GAUSS)
    boundary = np.sum(mesh.edge_lengths * H._eval(mesh.edge_normals) * trace)

    ut = u[T]
    mids = 0.5 * (ut + np.roll(ut, -1, axis=1))
    den = float(np.sum(mesh.areas / 3.0 * np.sum(_spow(mids, p), axis=1)))
    if den == 0:
        raise InputError("Rayleigh quotient is undefined for u = 0")
    num = float(interior + beta * boundary)
    return num, den, num / den


def _num_den_gradients(mesh, H, p, beta, u, eps=0.0):
    T = mesh.triangles
    n = mesh.n_nodes
    g = mesh.gradients(u)
    F = flux(H, g, p, eps=eps)
    loc = p * mesh.areas[:, None] * np.einsum("tk,tak->ta", F, mesh.basis_gradients)
    dnum = np.bincount(T.ravel(), weights=loc.ravel(), minlength=n)

    B = mesh.boundary_edges
    ui, uj = u[B[:, 0]], u[B[:, 1]]
    w = beta * mesh.edge_lengths * H._eval(mesh.edge_normals)
    di = np.zeros(len(B))
    dj = np.zeros(len(B))
    for s in _GAUSS:
        uq = (1 - s) * ui + s * uj
        dq = 0.5 * p * np.sign(uq) * _spow(uq, p - 1.0)
        di += dq * (1 - s)
        dj += dq * s
    dnum += np.bincount(B[:, 0], weights=w * di, minlength=n)
    dnum += np.bincount(B[:, 1], weights=w * dj, minlength=n)

    ut = u[T]
    mids = 0.5 * (ut + np.roll(ut, -1, axis=1))
    dm = p * np.sign(mids) * _spow(mids, p - 1.0) * (mesh.areas / 3.0)[:, None]
    # midpoint k sits on edge (k, k+1) and feeds half its derivative to each end
    loc = 0.5 * (dm + np.roll(dm, 1, axis=1))
    dden = np.bincount(T.ravel(), weights=loc.ravel(), minlength=n)
    return dnum, dden


def rayleigh_gradient(mesh, H, p, beta, u, eps=0.0):
    """``(J, dJ/du)``; ``eps > 0`` regularizes the flux where gradients vanish."""
    num, den, J = rayleigh(mesh, H, p, beta, u)
    dnum, dden = _num_den_gradients(mesh, H, p, beta, u, eps)
    return J, (dnum - J * dden) / den


# ---------------------------------------------------------------------------
# p = 2 matrices


def assemble_p2(mesh, A=None, boundary_weights=None):
    """Stiffness ``K`` (with matrix ``A``), weighted boundary mass ``B`` and mass ``M``."""
    if A is None:
        A = np.eye(2)
    A = np.asarray(A, dtype=float)
    T = mesh.triangles
    n = mesh.n_nodes
    G = mesh.basis_gradients
    Kloc = mesh.areas[:, None, None] * np.einsum("tak,kl,tbl->tab", G, A, G)
    rows = np.repeat(T, 3, axis=1).ravel()
    cols = np.tile(T, (1, 3)).ravel()
    K = sp.csr_matrix((Kloc.ravel(), (rows, cols)), shape=(n, n))

    Mref = (np.ones((3, 3)) + np.eye(3)) / 12.0
    M = sp.csr_matrix(((mesh.areas[:, None, None] * Mref).ravel(), (rows, cols)), shape=(n, n))

    Bd = mesh.boundary_edges
    if boundary_weights is None:
        boundary_weights = np.sqrt(np.einsum("ek,kl,el->e", mesh.edge_normals, A, mesh.edge_normals))
    Bref = (np.ones((2, 2)) + np.eye(2)) / 6.0
    Bloc = (mesh.edge_lengths * boundary_weights)[:, None, None] * Bref
    brows = np.repeat(Bd, 2, axis=1).ravel()
    bcols = np.tile(Bd, (1, 2)).ravel()
    Bm = sp.csr_matrix((Bloc.ravel(), (brows, bcols)), shape=(n, n))
    return K, Bm, M


def _normalize(u, mesh, H, p, beta):
    _, den, _ = rayleigh(mesh, H, p, beta, u)
    return u / den ** (1.0 / p)


def _weak_residual(mesh, H, p, beta, u, lam, P_lu):
    dnum, dden = _num_den_gradients(mesh, H, p, beta, u)
    r = (dnum - lam * dden) / p
    return float(np.sqrt(max(r @ P_lu.solve(r), 0.0)))


def _h1_factor(mesh):
    K, _, M = assemble_p2(mesh)
    return splu((K + M).tocsc())


def _finish(mesh, H, p, beta, u, iterations, rq_res, converged, history, take_abs):
    if take_abs:
        u = np.abs(u)
    elif np.sum(u) < 0:
        u = -u
    u = _normalize(u, mesh, H, p, beta)
    lam = rayleigh(mesh, H, p, beta, u)[2]
    weak = _weak_residual(mesh, H, p, beta, u, lam, _h1_factor(mesh))
    return EigenResult(float(lam), u, iterations, float(rq_res), weak, converged, history)


def solve_p2_quadratic(mesh, A, beta, tol=1e-12, max_iters=500):
    """Smallest eigenpair of ``(K + beta B) u = lam M u`` by shifted inverse iteration."""
    H = Quadratic(A)
    K, Bm, M = assemble_p2(mesh, H.A)
    S = (K + beta * Bm).tocsc()
    # a positive shift keeps the factorized operator definite even for beta = 0
    shift = 1.0 / mesh.area
    lu = splu((S + shift * M).tocsc())
    u = np.ones(mesh.n_nodes)
    lam_old = np.inf
    rq_res = np.inf
    history = []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        u = lu.solve(M @ u)
        u /= np.sqrt(u @ (M @ u))
        lam = float(u @ (S @ u))
        history.append(lam)
        rq_res = abs(lam_old - lam) / max(abs(lam), 1e-300) if np.isfinite(lam_old) else np.inf
        if abs(lam_old - lam) <= tol * max(abs(lam), 1e-12):
            converged = True
            break
        lam_old = lam
    if not np.all(np.isfinite(u)):
        raise NumericError("inverse iteration produced non-finite values")
    return _finish(mesh, H, 2.0, beta, u, it, rq_res, converged, history, take_abs=False)


# ---------------------------------------------------------------------------
# general p


def _default_init(mesh, seed):
    rng = np.random.default_rng(seed)
    return 1.0 + 0.01 * rng.uniform(-1.0, 1.0, mesh.n_nodes)


def minimize_rayleigh(mesh, H, p, beta, init="default", tol=1e-11, max_iters=20000, seed=0,
                      window=10):
    """Minimize ``J`` by preconditioned gradient descent with Barzilai-Borwein steps.

    Each iterate is rescaled to ``||u||_p = 1``.  The search direction is the
    gradient preconditioned by the Euclidean ``p = 2`` Robin operator.  The
    iteration stops once ``J`` has decreased by less than ``tol`` (relative)
    over ``window`` iterations.  The returned eigenfunction is ``|u|``.
    """
    if not p > 1:
        raise InputError("p must be > 1")
    if isinstance(init, str):
        if init != "default":
            raise InputError(f"unknown init {init!r}")
        u = _default_init(mesh, seed)
    else:
        u = np.array(init, dtype=float)
        if u.shape != (mesh.n_nodes,):
            raise InputError("init must have one value per node")
    if not np.any(u):
        raise InputError("init must not vanish identically")

    eps = 1e-10 * np.sqrt(mesh.area) if p < 2 else 0.0
    K, Bm, M = assemble_p2(mesh, boundary_weights=np.ones(len(mesh.boundary_edges)))
    P = (K + beta * Bm + M / mesh.area).tocsc()
    P_lu = splu(P)

    u = _normalize(u, mesh, H, p, beta)
    J, g = rayleigh_gradient(mesh, H, p, beta, u, eps)
    d = P_lu.solve(g)
    step = 0.5 / max(J, 1e-12)
    best_J, best_u = J, u
    history = [J]
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        ref = max(history[-window:])
        while True:
            trial = _normalize(u - step * d, mesh, H, p, beta)
            J_new, g_new = rayleigh_gradient(mesh, H, p, beta, trial, eps)
            # nonmonotone acceptance against the recent maximum
            if J_new <= ref + 1e-14 * abs(ref) or step < 1e-16:
                break
            step *= 0.5
        d_new = P_lu.solve(g_new)
        s = trial - u
        y = g_new - g
        sy = float(s @ y)
        sPs = float(s @ (P @ s))
        step = sPs / sy if sy > 0 else 2.0 * step
        u, J, g, d = trial, J_new, g_new, d_new
        history.append(J)
        if J < best_J:
            best_J, best_u = J, u
        if len(history) > window:
            old = history[-window - 1]
            if (old - min(history[-window:])) <= tol * abs(J):
                converged = True
                break
    old = history[-window - 1] if len(history) > window else history[0]
    rq_res = (old - best_J) / abs(best_J)
    return _finish(mesh, H, p, beta, best_u, it, rq_res, converged, history, take_abs=True)


def solve(mesh, H, p, beta, **kw):
    """Dispatch to the linear solver for ``p = 2`` with a quadratic norm, else minimize."""
    if p == 2 and isinstance(H, (Euclidean, Quadratic)):
        A = np.eye(2) if isinstance(H, Euclidean) else H.A
        return solve_p2_quadratic(mesh, A, beta, **kw)
    return minimize_rayleigh(mesh, H, p, beta, **kw)


def gradient_check(mesh, H, p, beta, u, probe_count=10, seed=0, step=1e-6):
    """Largest relative gap between ``dJ/du_i`` and central differences at random nodes."""
    u = np.asarray(u, dtype=float)
    J, g = rayleigh_gradient(mesh, H, p, beta, u)
    rng = np.random.default_rng(seed)
    nodes = rng.choice(mesh.n_nodes, size=min(probe_count, mesh.n_nodes), replace=False)
    scale = np.max(np.abs(g))
    worst = 0.0
    for i in nodes:
        e = np.zeros_like(u)
        e[i] = step
        fd = (rayleigh(mesh, H, p, beta, u + e)[2] - rayleigh(mesh, H, p, beta, u - e)[2]) / (2 * step)
        worst = max(worst, abs(fd - g[i]) / max(abs(g[i]), scale, 1e-300))
    return float(worst)
