"""Quick invariant suites behind ``aniso-robin check``.

Each suite returns a list of ``(name, passed, detail)`` tuples.  The meshes
are coarse so that ``check --suite all`` finishes in well under a minute.
"""

import numpy as np

from . import analysis, fem, geometry
from .mesh import generate_mesh
from .norms import Euclidean, Quadratic, SmoothedPNorm, verify_identities
from .radial import RadialProblem, first_eigenvalue_radial, verify_scaling, verify_wulff_monotonicity

__all__ = ["SUITES", "run_suite"]

NORMS = {
    "euclidean": Euclidean(),
    "quadratic:4,0,0,1": Quadratic([[4, 0], [0, 1]]),
    "quadratic:2,1,1,2": Quadratic([[2, 1], [1, 2]]),
    "pnorm:3": SmoothedPNorm(3),
}


def _row(name, value, limit):
    return name, bool(value <= limit), f"{value:.3g} <= {limit:g}"


def norms_suite():
    out = []
    for label, H in NORMS.items():
        tol = 1e-8 if H.closed_form_polar else 1e-6
        rep = verify_identities(H, samples=50, seed=0)
        for key in ("euler", "polar_unit", "inverse_map", "homogeneity"):
            out.append(_row(f"{label} {key}", getattr(rep, key), tol))
    return out


def geometry_suite():
    E = Euclidean()
    Q = Quadratic([[4, 0], [0, 1]])
    out = [
        _row("kappa euclidean", abs(geometry.kappa(E) - np.pi), 1e-6),
        _row("kappa quadratic", abs(geometry.kappa(Q) - 2 * np.pi), 1e-6),
        _row("square inradius", abs(geometry.inradius(geometry.square(), E)[0] - 0.5), 1e-8),
    ]
    ratio = geometry.isoperimetric_ratio(geometry.wulff_polygon(Q, m=2048), Q)
    out.append(_row("wulff isoperimetric ratio", abs(ratio - 1), 1e-5))
    for tag in ("square", "triangle"):
        d = geometry.square() if tag == "square" else geometry.equilateral_triangle()
        r = geometry.isoperimetric_ratio(d, Q)
        out.append((f"{tag} isoperimetric ratio >= 1", bool(r >= 1 - 1e-12), f"{r:.6f}"))
    return out


def radial_suite():
    out = []
    lam = first_eigenvalue_radial(RadialProblem(2, 2, 1.0, 1e6)).lam
    out.append(_row("dirichlet limit", abs(lam / 2.404825557695773**2 - 1), 1e-3))
    for p in (1.5, 3.0):
        res = verify_scaling(RadialProblem(2, p, 1.0, 1.0), 2.0)[2]
        out.append(_row(f"scaling p={p:g}", res, 1e-7))
    ok = verify_wulff_monotonicity(Euclidean(), 2, 2.0, 1.0, [0.5, 1, 2, 4])
    out.append(("wulff monotonicity", bool(ok), ""))
    return out


def fem_suite():
    E = Euclidean()
    mesh = generate_mesh(geometry.ellipse(1, 1, 256), 0.05)
    lam_r = first_eigenvalue_radial(RadialProblem(2, 2, 1.0, 1.0)).lam
    res = fem.solve(mesh, E, 2, 1.0)
    out = [_row("disk vs radial", abs(res.lam / lam_r - 1), 5e-3)]
    u = 1.0 + 0.1 * np.random.default_rng(0).standard_normal(mesh.n_nodes)
    out.append(_row("gradient check", fem.gradient_check(mesh, E, 2.5, 1.0, u), 1e-5))
    out.append(_row("positivity", max(0.0, -res.u.min() / res.u.max()), 1e-10))
    ub = analysis.constant_upper_bound(geometry.ellipse(1, 1, 256), E, 1.0)
    out.append(("constant upper bound", bool(res.lam <= ub + 1e-12), f"{res.lam:.6f} <= {ub:.6f}"))
    return out


def analysis_suite():
    E = Euclidean()
    d = geometry.square()
    mesh = generate_mesh(d, 0.05)
    res = fem.solve(mesh, E, 2, 1.0)
    out = []
    for t in (0.7, 0.8):
        F = analysis.representation_functional(res, mesh, E, 2, 1.0, t)[1]
        out.append(_row(f"representation t={t:g}", abs(F / res.lam - 1), 0.05))
    bound, lam, slack = analysis.inradius_bound(d, E, 2, 1.0, mesh=mesh)
    out.append(("inradius bound", bool(slack >= -1e-9), f"slack {slack:.4f}"))
    lhs, rhs, ok = analysis.hardy_check(d, mesh, E, res.u, 0.25, 1.0)
    out.append(("hardy", ok, f"{lhs:.4f} >= {rhs:.4f}"))
    return out


SUITES = {
    "norms": norms_suite,
    "geometry": geometry_suite,
    "radial": radial_suite,
    "fem": fem_suite,
    "analysis": analysis_suite,
}


def run_suite(name):
    names = list(SUITES) if name == "all" else [name]
    rows = []
    for n in names:
        rows.extend((n,) + row for row in SUITES[n]())
    return rows
