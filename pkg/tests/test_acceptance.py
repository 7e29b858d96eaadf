"""Acceptance suite.  Each test prints one PASS/FAIL line with the measured value."""

import time
from contextlib import contextmanager

import numpy as np

from aniso_robin import Euclidean, Quadratic, SmoothedPNorm
from aniso_robin import analysis, fem
from aniso_robin.geometry import (
    ellipse,
    equilateral_triangle,
    rectangle,
    square,
    wulff_polygon,
)
from aniso_robin.mesh import generate_mesh
from aniso_robin.norms import evaluate, gradient, verify_identities
from aniso_robin.radial import RadialProblem, first_eigenvalue_radial, verify_scaling, verify_wulff_monotonicity

from oracles import bessel_radial_profile, j01, robin_ball_eigenvalue

E = Euclidean()
Q41 = Quadratic([[4, 0], [0, 1]])
Q21 = Quadratic([[2, 1], [1, 2]])
NORMS = {"euclidean": E, "quadratic:4,0,0,1": Q41, "quadratic:2,1,1,2": Q21}
DOMAINS = {
    "square": square(),
    "rect 2:1": rectangle(np.sqrt(2), 1 / np.sqrt(2)),
    "rect 4:1": rectangle(2, 0.5),
    "triangle": equilateral_triangle(),
}


@contextmanager
def criterion(capsys, number, title, budget):
    """Time the body and print one verdict line; the runtime budget is part of the criterion."""
    info = {}
    start = time.perf_counter()
    ok = False
    try:
        yield info
        elapsed = time.perf_counter() - start
        ok = elapsed <= budget
        if not ok:
            info["detail"] = info.get("detail", "") + f"; over budget {elapsed:.1f}s > {budget:g}s"
    finally:
        elapsed = time.perf_counter() - start
        with capsys.disabled():
            verdict = "PASS" if ok else "FAIL"
            print(f"\n[{verdict}] criterion {number}: {title} | {info.get('detail', '')} | "
                  f"{elapsed:.2f}s (budget {budget:g}s)")
    assert ok, info.get("detail")


def test_criterion_01_radial_vs_bessel(capsys):
    first_eigenvalue_radial(RadialProblem(2, 2.0, 1.0, 1.0))  # JIT warm-up outside the timer
    with criterion(capsys, 1, "radial shooting vs Bessel characteristic root", 5) as info:
        worst = 0.0
        for n in (2, 3):
            for R in (0.5, 1.0, 2.0):
                for beta in (0.1, 1.0, 10.0):
                    lam = first_eigenvalue_radial(RadialProblem(n, 2.0, R, beta)).lam
                    worst = max(worst, abs(lam / robin_ball_eigenvalue(n, R, beta) - 1))
        info["detail"] = f"max rel err {worst:.2e} (tol 1e-8, 18 cases)"
        assert worst <= 1e-8, info["detail"]


def test_criterion_02_dirichlet_limit(capsys):
    ref = j01() ** 2
    with criterion(capsys, 2, "Dirichlet limit beta=1e6", 1) as info:
        lam = first_eigenvalue_radial(RadialProblem(2, 2.0, 1.0, 1e6)).lam
        err = abs(lam / ref - 1)
        info["detail"] = f"lambda {lam:.8f} vs j01^2 {ref:.8f}, rel err {err:.2e} (tol 1e-3)"
        assert err <= 1e-3, info["detail"]


def test_criterion_03_wulff_equality(capsys):
    with criterion(capsys, 3, "FEM on Wulff ellipse = FEM on disk = radial", 60) as info:
        lam_w = fem.solve(generate_mesh(wulff_polygon(Q41, 1.0), 0.02), Q41, 2.0, 1.0).lam
        lam_d = fem.solve(generate_mesh(ellipse(1, 1, 512), 0.02), E, 2.0, 1.0).lam
        lam_r = first_eigenvalue_radial(RadialProblem(2, 2.0, 1.0, 1.0)).lam
        vals = (lam_w, lam_d, lam_r)
        spread = max(abs(a / b - 1) for a in vals for b in vals)
        info["detail"] = (f"wulff {lam_w:.6f}, disk {lam_d:.6f}, radial {lam_r:.6f}, "
                          f"max pairwise rel diff {spread:.2e} (tol 2e-3)")
        assert spread <= 2e-3, info["detail"]


def test_criterion_04_faber_krahn_matrix(capsys):
    with criterion(capsys, 4, "Faber-Krahn 12-case matrix", 600) as info:
        ratios = {}
        for dname, d in DOMAINS.items():
            for nname, H in NORMS.items():
                ratios[(dname, nname)] = analysis.faber_krahn(d, H, 2.0, 1.0, 0.02).ratio
        lo = min(ratios, key=ratios.get)
        info["detail"] = f"min ratio {ratios[lo]:.5f} at {lo} (need > 1 + 5e-3; none is a Wulff shape)"
        assert all(r >= 1 - 2e-3 for r in ratios.values()), info["detail"]
        assert all(r > 1 + 5e-3 for r in ratios.values()), info["detail"]


def test_criterion_05_scaling(capsys):
    with criterion(capsys, 5, "scaling law, radial and FEM", 30) as info:
        combos = [(2.0, 2.0, 2), (0.5, 2.0, 3), (3.0, 1.5, 2), (0.7, 3.0, 3), (1.7, 4.0, 2), (0.25, 2.5, 3)]
        worst_r = max(verify_scaling(RadialProblem(n, p, 1.0, 1.0), t)[2] for t, p, n in combos)
        mesh = generate_mesh(equilateral_triangle(), 0.05)
        worst_f = 0.0
        for H in (E, Q41, Q21):
            for t in (0.7, 3.0):
                big = fem.solve(mesh.dilated(t), H, 2.0, 1.0, tol=1e-14).lam
                ref = fem.solve(mesh, H, 2.0, t, tol=1e-14).lam
                worst_f = max(worst_f, abs(big / (ref / t**2) - 1))
        info["detail"] = f"radial max residual {worst_r:.2e} (tol 1e-7), FEM {worst_f:.2e} (tol 1e-10)"
        assert worst_r <= 1e-7 and worst_f <= 1e-10, info["detail"]


def test_criterion_06_monotonicity(capsys):
    with criterion(capsys, 6, "Wulff radius monotonicity and beta_r profile", 10) as info:
        results = {p: verify_wulff_monotonicity(E, 2, p, 1.0, [0.5, 1, 2, 4], endpoint_tol=1e-8)
                   for p in (1.5, 2.0, 3.0)}
        worst = 0.0
        for p in (1.5, 2.0, 3.0):
            sol = first_eigenvalue_radial(RadialProblem(2, p, 1.0, 1.0))
            worst = max(worst, abs(sol.beta_profile[0]), abs(sol.beta_profile[-1] - 1.0))
        info["detail"] = f"checks {results}, worst endpoint error {worst:.1e} (tol 1e-8)"
        assert all(results.values()) and worst <= 1e-8, info["detail"]


def test_criterion_07_representation(capsys):
    ts = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]
    with criterion(capsys, 7, "representation formula constancy", 60) as info:
        disk = generate_mesh(ellipse(1, 1, 512), 0.02)
        lam = robin_ball_eigenvalue(2, 1.0, 1.0)
        u = bessel_radial_profile(lam, np.hypot(*disk.nodes.T))
        dev_d = max(abs(analysis.representation_functional(u, disk, E, 2.0, 1.0, t)[1] / lam - 1)
                    for t in ts)
        sq = generate_mesh(square(), 0.02)
        dev_s = 0.0
        for H in (E, Q41):
            res = fem.solve(sq, H, 2.0, 1.0)
            dev_s = max(dev_s, max(abs(analysis.representation_functional(res, sq, H, 2.0, 1.0, t)[1]
                                       / res.lam - 1) for t in ts))
        info["detail"] = f"disk/Bessel max dev {dev_d:.2e} (tol 3%), square/FEM {dev_s:.2e} (tol 5%)"
        assert dev_d <= 0.03 and dev_s <= 0.05, info["detail"]


def test_criterion_08_bounds(capsys):
    with criterion(capsys, 8, "inradius lower bound, constant upper bound, Hardy", 60) as info:
        min_slack = np.inf
        min_gap = np.inf
        for d in DOMAINS.values():
            mesh = generate_mesh(d, 0.05)
            for H in NORMS.values():
                bound, lam, slack = analysis.inradius_bound(d, H, 2.0, 1.0, mesh=mesh)
                min_slack = min(min_slack, slack)
                min_gap = min(min_gap, analysis.constant_upper_bound(d, H, 1.0) + 1e-12 - lam)
        mesh = generate_mesh(square(), 0.05)
        rng = np.random.default_rng(2024)
        hardy = []
        for k in range(20):
            H = list(NORMS.values())[k % 3]
            alpha, theta = rng.uniform(0.05, 1.0, 2)
            hardy.append(analysis.hardy_check(square(), mesh, H, rng.standard_normal(mesh.n_nodes),
                                              alpha, theta)[2])
        info["detail"] = (f"min inradius slack {min_slack:.4f}, min upper-bound gap {min_gap:.4f}, "
                          f"Hardy {sum(hardy)}/20")
        assert min_slack >= 0 and min_gap >= 0 and all(hardy), info["detail"]


def test_criterion_09_simplicity_positivity(capsys):
    with criterion(capsys, 9, "seed independence and sign-definiteness", 120) as info:
        cases = [(square(), Q21, 1.5), (square(), E, 3.0), (equilateral_triangle(), Q41, 2.5),
                 (rectangle(2, 0.5), SmoothedPNorm(3), 2.0)]
        worst_seed, worst_sign = 0.0, 0.0
        for d, H, p in cases:
            mesh = generate_mesh(d, 0.03)
            a = fem.minimize_rayleigh(mesh, H, p, 1.0, seed=1)
            b = fem.minimize_rayleigh(mesh, H, p, 1.0, seed=2)
            worst_seed = max(worst_seed, abs(a.lam / b.lam - 1))
            for r in (a, b):
                worst_sign = max(worst_sign, -r.u.min() / r.u.max())
        info["detail"] = (f"max seed rel diff {worst_seed:.2e} (tol 1e-6), "
                          f"min u / max u {-worst_sign:.2e} (floor -1e-10)")
        assert worst_seed <= 1e-6 and worst_sign <= 1e-10, info["detail"]


def test_criterion_10_norm_identities(capsys):
    families = {"euclidean": E, "quadratic": Q21, "pnorm": SmoothedPNorm(4)}
    with criterion(capsys, 10, "norm identity suites and gradient check", 60) as info:
        worst = {}
        for name, H in families.items():
            rep = verify_identities(H, samples=1000, seed=0)
            closed = name != "pnorm"
            limits = {"euler": 1e-9, "polar_unit": 1e-10 if closed else 1e-6,
                      "inverse_map": 1e-8 if closed else 1e-6, "homogeneity": 1e-10}
            for key, lim in limits.items():
                worst[f"{name}.{key}"] = (getattr(rep, key), lim)
        rng = np.random.default_rng(0)
        fd_err = 0.0
        for H in families.values():
            for xi in rng.standard_normal((100, 2)):
                if np.min(np.abs(xi)) < 0.05:
                    continue
                fd = np.array([(evaluate(H, xi + e) - evaluate(H, xi - e)) / 2e-6 for e in 1e-6 * np.eye(2)])
                fd_err = max(fd_err, np.linalg.norm(gradient(H, xi) - fd) / np.linalg.norm(fd))
        mesh = generate_mesh(square(), 0.05)
        u = rng.uniform(0.5, 1.5, mesh.n_nodes)
        fem_err = max(fem.gradient_check(mesh, H, 2.5, 1.0, u) for H in families.values())
        bad = {k: v for k, (v, lim) in worst.items() if v > lim}
        info["detail"] = (f"identity violations {bad or 'none'}, gradient vs FD {fd_err:.1e}, "
                          f"Rayleigh gradient vs FD {fem_err:.1e} (tol 1e-5)")
        assert not bad and fd_err <= 1e-5 and fem_err <= 1e-5, info["detail"]
