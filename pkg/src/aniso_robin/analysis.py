"""Numerical checks of the anisotropic Robin Faber-Krahn inequality.

Level sets ``U_t = {u > t}`` of a P1 eigenfunction are cut out triangle by
triangle.  ``S_t`` is the part of ``dU_t`` inside the domain and ``Gamma_t``
the part on the domain boundary.  For a weight ``phi`` the functional

    F(U_t, phi) = (-(p-1) int_{U_t} phi^p' + int_{S_t} phi H(nu) + beta int_{Gamma_t} H(nu)) / |U_t|

equals the eigenvalue for ``phi = H(grad u)^(p-1) / u^(p-1)``.
"""

from dataclasses import dataclass

import numpy as np

from . import fem
from .errors import InputError
from .geometry import (
    _require_convex,
    aniso_distance_field,
    aniso_perimeter,
    inradius,
    kappa,
    rectangle,
)
from .mesh import generate_mesh
from .radial import RadialProblem, first_eigenvalue_radial

__all__ = [
    "LevelSetSlice",
    "FaberKrahnReport",
    "level_set",
    "representation_functional",
    "transplant_comparison",
    "faber_krahn",
    "fk_tolerance",
    "inradius_bound",
    "inradius_bound_value",
    "hardy_check",
    "unboundedness_sweep",
    "constant_upper_bound",
    "radial_functional",
]

MARGIN = 5e-3
BASE_TOL = 2e-3
BASE_H = 0.02


@dataclass(frozen=True)
class LevelSetSlice:
    t: float
    area_Ut: float
    sigma_St: float
    sigma_Gt: float
    integral_phi_St: float
    integral_phi_pow: float
    sigma_boundary: float


@dataclass(frozen=True)
class FaberKrahnReport:
    lam_domain: float
    lam_wulff: float
    R_equiv: float
    ratio: float
    mesh_h: float
    verdict: str
    tol: float

    def as_row(self):
        return {
            "lambda": self.lam_domain,
            "lambda_wulff": self.lam_wulff,
            "ratio": self.ratio,
            "verdict": self.verdict,
        }


# ---------------------------------------------------------------------------
# level sets


def _nodal(result):
    u = getattr(result, "u", result)
    return np.asarray(u, dtype=float)


def _sub_triangles(mesh, u, t):
    """Split ``{u > t}`` into triangles.

    Every vertex gets a key: ``("n", i)`` for a mesh node and ``("e", i, j)``
    for the crossing on mesh edge ``(i, j)``, so shared pieces match exactly
    between neighbours.  Returns ``(points, keys, parent)`` where ``points``
    has shape ``(S, 3, 2)``, plus the interior level segments as
    ``(a, b, parent)``.
    """
    P = mesh.nodes
    pts, keys, parent = [], [], []
    segs = []

    def cross(i, j):
        s = (t - u[i]) / (u[j] - u[i])
        return P[i] + s * (P[j] - P[i]), ("e",) + tuple(sorted((int(i), int(j))))

    above = u[mesh.triangles] > t
    count = above.sum(axis=1)
    full = np.flatnonzero(count == 3)
    for k in full:
        tri = mesh.triangles[k]
        pts.append(P[tri])
        keys.append([("n", int(i)) for i in tri])
        parent.append(k)
    for k in np.flatnonzero((count == 1) | (count == 2)):
        tri = mesh.triangles[k]
        flag = above[k]
        # rotate so the odd vertex comes first; orientation is preserved
        odd = int(np.flatnonzero(flag == (count[k] == 1))[0])
        a, b, c = tri[odd], tri[(odd + 1) % 3], tri[(odd + 2) % 3]
        xb, kb = cross(a, b)
        xc, kc = cross(a, c)
        if count[k] == 1:
            pts.append(np.array([P[a], xb, xc]))
            keys.append([("n", int(a)), kb, kc])
            parent.append(k)
        else:
            pts.append(np.array([xb, P[b], P[c]]))
            keys.append([kb, ("n", int(b)), ("n", int(c))])
            parent.append(k)
            pts.append(np.array([xb, P[c], xc]))
            keys.append([kb, ("n", int(c)), kc])
            parent.append(k)
        segs.append((xb, xc, k))
    pts = np.array(pts).reshape(-1, 3, 2)
    return pts, keys, np.array(parent, dtype=int), segs


def _anisotropic_outline(H, pts, keys):
    """Anisotropic length of the outline of a union of CCW triangles."""
    count = {}
    where = {}
    for s, kk in enumerate(keys):
        for a in range(3):
            e = (kk[a], kk[(a + 1) % 3])
            key = frozenset(e)
            count[key] = count.get(key, 0) + 1
            where[key] = (s, a)
    total = 0.0
    D = []
    for key, c in count.items():
        if c == 1:
            s, a = where[key]
            D.append(pts[s, (a + 1) % 3] - pts[s, a])
    if not D:
        return 0.0
    D = np.array(D)
    L = np.hypot(D[:, 0], D[:, 1])
    ok = L > 0
    nu = np.column_stack([D[ok, 1], -D[ok, 0]]) / L[ok, None]
    total = float(np.sum(L[ok] * H._eval(nu)))
    return total


def _edge_midpoint_quadrature(pts, f):
    """Integrate ``f`` (callable on ``(N, 2)`` points, parent-aware) over sub-triangles."""
    e1 = pts[:, 1] - pts[:, 0]
    e2 = pts[:, 2] - pts[:, 0]
    area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    total = np.zeros(len(pts))
    for a in range(3):
        mid = 0.5 * (pts[:, a] + pts[:, (a + 1) % 3])
        total += f(mid)
    return area / 3.0 * total, area


def _p1_value(mesh, u, parent, X):
    """Value of the P1 field at points ``X`` lying in triangles ``parent``."""
    T = mesh.triangles[parent]
    x0 = mesh.nodes[T[:, 0]]
    g = mesh.gradients(u)[parent]
    return u[T[:, 0]] + np.einsum("ij,ij->i", g, X - x0)


def level_set(mesh, H, p, beta, u, t, phi="eigen"):
    """Measure ``U_t`` and integrate the weight ``phi`` over it.

    ``phi="eigen"`` uses ``H(grad u)^(p-1) / u^(p-1)``.  A callable ``phi``
    maps the P1 values of ``u`` to weights and must be nonincreasing so
    that it is constant ``phi(t)`` on ``S_t``.
    """
    u = np.asarray(u, dtype=float)
    pts, keys, parent, segs = _sub_triangles(mesh, u, t)
    if len(pts) == 0:
        raise InputError(f"level set u > {t} is empty")
    g = mesh.gradients(u)
    Hg = H._eval(g)
    Hminus = H._eval(-g)
    gnorm = np.hypot(g[:, 0], g[:, 1])
    q = p / (p - 1.0)

    if phi == "eigen":
        def weight_pow(X, par):
            return (Hg[par] ** (p - 1.0) / _p1_value(mesh, u, par, X) ** (p - 1.0)) ** q

        def phi_on_level(par):
            return Hg[par] ** (p - 1.0) / t ** (p - 1.0)
    else:
        def weight_pow(X, par):
            return phi(_p1_value(mesh, u, par, X)) ** q

        def phi_on_level(par):
            return np.full(len(par), float(phi(t)))

    vals, areas = _edge_midpoint_quadrature(pts, lambda X: weight_pow(X, parent))
    area_Ut = float(areas.sum())
    integral_pow = float(vals.sum())

    sigma_St = 0.0
    int_phi_St = 0.0
    if segs:
        A = np.array([s[0] for s in segs])
        B = np.array([s[1] for s in segs])
        par = np.array([s[2] for s in segs], dtype=int)
        L = np.hypot(*(B - A).T)
        # the outward normal of U_t on S_t is -grad u / |grad u|
        hn = Hminus[par] / gnorm[par]
        sigma_St = float(np.sum(L * hn))
        int_phi_St = float(np.sum(L * hn * phi_on_level(par)))

    Bd = mesh.boundary_edges
    ui, uj = u[Bd[:, 0]], u[Bd[:, 1]]
    hi, lo = np.maximum(ui, uj), np.minimum(ui, uj)
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(lo > t, 1.0, np.where(hi > t, (hi - t) / (hi - lo), 0.0))
    sigma_Gt = float(np.sum(frac * mesh.edge_lengths * H._eval(mesh.edge_normals)))

    return LevelSetSlice(float(t), area_Ut, sigma_St, sigma_Gt, int_phi_St, integral_pow,
                         _anisotropic_outline(H, pts, keys))


def _prepare(result, t):
    if not 0 < t < 1:
        raise InputError(f"t must lie in (0, 1), got {t}")
    u = _nodal(result)
    if np.max(u) <= 0:
        raise InputError("eigenfunction must have a positive maximum")
    u = u / np.max(u)
    # step off nodal values, where the level set is not a curve
    while np.any(u == t):
        t = t + 1e-12
    return u, t


def representation_functional(result, mesh, H, p, beta, t):
    """Level-set slice at height ``t`` of the max-normalized ``u`` and the value of F."""
    u, t = _prepare(result, t)
    sl = level_set(mesh, H, p, beta, u, t)
    F = (-(p - 1.0) * sl.integral_phi_pow + sl.integral_phi_St + beta * sl.sigma_Gt) / sl.area_Ut
    return sl, float(F)


def _wulff_weight_integral(sol, r, n, p, kap):
    q = p / (p - 1.0)
    if r <= 0:
        return 0.0
    grid = sol.r[sol.r <= r]
    grid = np.append(grid, r)
    vals = sol.beta_at(grid) ** q * n * kap * grid ** (n - 1)
    return float(np.trapezoid(vals, grid))


def transplant_comparison(result, mesh, H, p, beta, t, radial_tol=1e-10):
    """Compare F on ``U_t`` with the Wulff-shape weight ``beta_r`` against F on ``W_r``.

    The weight at a point with ``u(x) = s`` is ``beta_{r(s)}`` where
    ``|W_{r(s)}| = |U_s|``.  Returns ``(F_domain, F_wulff, details)``.
    """
    u, t = _prepare(result, t)
    n = 2
    kap = kappa(H)
    R = np.sqrt(mesh.area / kap)
    sol = first_eigenvalue_radial(RadialProblem(n, p, R, beta), radial_tol)
    sl = level_set(mesh, H, p, beta, u, t, phi=lambda s: np.zeros_like(np.asarray(s, float)))
    r_t = np.sqrt(sl.area_Ut / kap)
    beta_rt = float(sol.beta_at(r_t))
    # the weight is equimeasurable with beta_{H°(x)} on W_{r(t)}
    I = _wulff_weight_integral(sol, r_t, n, p, kap)
    F_domain = (-(p - 1.0) * I + beta_rt * sl.sigma_St + beta * sl.sigma_Gt) / sl.area_Ut
    perim = n * kap * r_t ** (n - 1)
    F_wulff = (-(p - 1.0) * I + beta_rt * perim) / (kap * r_t ** n)
    details = {
        "t": sl.t,
        "r_t": r_t,
        "area_Ut": sl.area_Ut,
        "area_Wr": kap * r_t ** n,
        "beta_r": beta_rt,
        "lam_wulff": sol.lam,
        "slice": sl,
    }
    return float(F_domain), float(F_wulff), details


# ---------------------------------------------------------------------------
# Faber-Krahn


def fk_tolerance(h):
    """Declared relative tolerance of the eigenvalue comparison at mesh size ``h``."""
    return BASE_TOL * max(1.0, (h / BASE_H) ** 2)


def faber_krahn(d, H, p, beta, h, tol=None, **solve_kw):
    """Compare the eigenvalue of ``d`` with that of the Wulff shape of equal area."""
    if tol is None:
        tol = fk_tolerance(h)
    mesh = generate_mesh(d, h)
    lam = fem.solve(mesh, H, p, beta, **solve_kw).lam
    R = float(np.sqrt(d.area / kappa(H)))
    lam_w = first_eigenvalue_radial(RadialProblem(2, p, R, beta)).lam
    ratio = lam / lam_w
    if ratio < 1.0 - tol:
        verdict = "violated"
    elif ratio > 1.0 + MARGIN:
        verdict = "holds_with_margin"
    else:
        verdict = "holds"
    return FaberKrahnReport(float(lam), float(lam_w), R, float(ratio), float(h), verdict, float(tol))


# ---------------------------------------------------------------------------
# bounds


def inradius_bound_value(p, beta, R_H):
    """Closed-form lower bound for the eigenvalue of a convex set with inradius ``R_H``."""
    return ((p - 1.0) / p) ** p * beta / (R_H * (1.0 + beta ** (1.0 / (p - 1.0)) * R_H) ** (p - 1.0))


def inradius_bound(d, H, p, beta, h=0.02, mesh=None):
    """``(bound, lam, slack)`` for a convex domain."""
    _require_convex(d)
    R_H, _ = inradius(d, H)
    bound = inradius_bound_value(p, beta, R_H)
    if mesh is None:
        mesh = generate_mesh(d, h)
    lam = fem.solve(mesh, H, p, beta).lam
    return float(bound), float(lam), float(lam - bound)


def constant_upper_bound(d, H, beta):
    """Rayleigh quotient of the constant function."""
    return beta * aniso_perimeter(d, H) / d.area


_INTERIOR_RULE = np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]])


def hardy_check(d, mesh, H, u, alpha, theta, p=2.0):
    """Evaluate both sides of the Hardy-type inequality for the P1 field ``u``.

    Returns ``(lhs, rhs, holds)``.  The distance weight is sampled at the
    interior points of a degree-2 triangle rule.
    """
    _require_convex(d)
    if not (alpha > 0 and theta > 0):
        raise InputError("alpha and theta must be positive")
    u = np.asarray(u, dtype=float)
    lhs = fem.rayleigh(mesh, H, p, theta ** (p - 1.0), u)[0]
    X = np.einsum("qa,tak->tqk", _INTERIOR_RULE, mesh.nodes[mesh.triangles])
    U = np.einsum("qa,ta->tq", _INTERIOR_RULE, u[mesh.triangles])
    dist = aniso_distance_field(d, H, X.reshape(-1, 2)).reshape(U.shape)
    integral = float(np.sum(mesh.areas / 3.0 * np.sum(np.abs(U) ** p / (dist + alpha) ** p, axis=1)))
    at = alpha * theta
    rhs = (p - 1.0) * at ** (p - 1.0) * (1.0 - at) * integral
    return float(lhs), float(rhs), bool(lhs >= rhs - 1e-9 * abs(lhs))


def unboundedness_sweep(aspect_ratios, area, H, p, beta, h):
    """Eigenvalues of equal-area rectangles of growing aspect ratio.

    Each row is ``(ratio, width, height, lam, inradius_bound)``.
    """
    rows = []
    for a in aspect_ratios:
        if a < 1:
            raise InputError("aspect ratios must be >= 1")
        w = np.sqrt(area * a)
        ht = area / w
        d = rectangle(w, ht)
        bound, lam, _ = inradius_bound(d, H, p, beta, h)
        rows.append((float(a), float(w), float(ht), lam, bound))
    return rows


def radial_functional(n, p, R, beta, r, tol=1e-10):
    """F on ``W_r`` with the radial weight ``beta_s``; constant in ``r`` and equal to the eigenvalue."""
    sol = first_eigenvalue_radial(RadialProblem(n, p, R, beta), tol)
    # every term carries the volume of the unit Wulff shape, so it is set to 1
    I = _wulff_weight_integral(sol, r, n, p, 1.0)
    return float((-(p - 1.0) * I + sol.beta_at(r) * n * r ** (n - 1)) / r ** n)
