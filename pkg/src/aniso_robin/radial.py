"""Radial Robin eigenvalue problem on Wulff shapes, solved by shooting.

With ``m = (-rho')^(p-1)`` the radial equation becomes the first-order system

    rho' = -m^(1/(p-1)),     (r^(n-1) m)' = lam r^(n-1) rho^(p-1),

with ``rho(0) = 1`` and ``m(0) = 0``.  The Robin condition at ``r = R`` is
``g(lam) = -m(R) + beta rho(R)^(p-1) = 0``.  The first eigenvalue is the
smallest root of ``g`` for which ``rho`` stays positive.  The same value
holds on the Wulff shape of every admissible norm.
"""

from dataclasses import dataclass

import numba
import numpy as np
from scipy.optimize import brentq

from .errors import InputError, NumericError

__all__ = [
    "RadialProblem",
    "RadialSolution",
    "shoot",
    "first_eigenvalue_radial",
    "lambda_of_wulff",
    "verify_scaling",
    "verify_wulff_monotonicity",
]

DEFAULT_STEPS = 10_000
START_FRACTION = 1e-4


@dataclass(frozen=True)
class RadialProblem:
    n: int
    p: float
    R: float
    beta: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InputError(f"dimension n must be an integer >= 2, got {self.n}")
        if not self.p > 1:
            raise InputError(f"p must be > 1, got {self.p}")
        if not self.R > 0:
            raise InputError(f"R must be > 0, got {self.R}")
        if not self.beta >= 0:
            raise InputError(f"beta must be >= 0, got {self.beta}")

    def replace(self, **kw):
        d = dict(n=self.n, p=self.p, R=self.R, beta=self.beta)
        d.update(kw)
        return RadialProblem(**d)


@dataclass(frozen=True)
class RadialSolution:
    problem: RadialProblem
    lam: float
    r: np.ndarray
    rho: np.ndarray
    rho_prime: np.ndarray
    beta_profile: np.ndarray
    bc_residual: float

    def rho_at(self, s):
        """Profile at radii ``s`` by cubic Hermite interpolation (``rho(0) = 1``)."""
        from scipy.interpolate import CubicHermiteSpline
        spline = CubicHermiteSpline(self.r, self.rho, self.rho_prime)
        return spline(np.clip(s, 0.0, self.problem.R))

    def beta_at(self, s):
        return np.interp(s, self.r, self.beta_profile)


@numba.njit(cache=True)
def _spow(x, e):
    if x >= 0.0:
        return x ** e
    return -((-x) ** e)


@numba.njit(cache=True)
def _rhs(r, rho, m, lam, n, p):
    drho = -_spow(m, 1.0 / (p - 1.0))
    dm = lam * _spow(rho, p - 1.0) - (n - 1.0) * m / r
    return drho, dm


@numba.njit(cache=True)
def _integrate(lam, n, p, R, steps, store):
    """Fixed-step RK4 from the series start ``r0`` to ``R``.

    Returns ``(r, rho, m, positive, finite)``; the arrays hold every grid
    point (with ``r = 0`` prepended) when ``store`` is true, else only the end.
    """
    r0 = START_FRACTION * R
    rho = 1.0 - (lam / n) ** (1.0 / (p - 1.0)) * ((p - 1.0) / p) * r0 ** (p / (p - 1.0))
    m = lam * r0 / n
    h = (R - r0) / steps
    size = steps + 2 if store else 1
    rs = np.empty(size)
    rhos = np.empty(size)
    ms = np.empty(size)
    if store:
        rs[0] = 0.0
        rhos[0] = 1.0
        ms[0] = 0.0
        rs[1] = r0
        rhos[1] = rho
        ms[1] = m
    positive = rho > 0.0
    finite = True
    r = r0
    for i in range(steps):
        k1r, k1m = _rhs(r, rho, m, lam, n, p)
        k2r, k2m = _rhs(r + 0.5 * h, rho + 0.5 * h * k1r, m + 0.5 * h * k1m, lam, n, p)
        k3r, k3m = _rhs(r + 0.5 * h, rho + 0.5 * h * k2r, m + 0.5 * h * k2m, lam, n, p)
        k4r, k4m = _rhs(r + h, rho + h * k3r, m + h * k3m, lam, n, p)
        rho = rho + h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
        m = m + h / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m)
        r = r0 + (i + 1) * h
        if not (np.isfinite(rho) and np.isfinite(m)):
            finite = False
            break
        if rho <= 0.0:
            positive = False
        if store:
            rs[i + 2] = r
            rhos[i + 2] = rho
            ms[i + 2] = m
    if not store:
        rs[0] = r
        rhos[0] = rho
        ms[0] = m
    return rs, rhos, ms, positive, finite


def _residual(prob, rho_R, m_R):
    return -m_R + prob.beta * _spow(rho_R, prob.p - 1.0)


def shoot(prob, lam, steps=DEFAULT_STEPS, profile=True):
    """Integrate from the origin at eigenvalue guess ``lam``.

    Returns ``(residual, profile, positive)`` where ``profile`` is a tuple
    ``(r, rho, m)`` (or ``None`` when ``profile=False``) and ``positive``
    tells whether ``rho`` stayed positive on ``[0, R]``.
    """
    if not lam > 0:
        raise InputError(f"shooting needs lam > 0, got {lam}")
    rs, rhos, ms, positive, finite = _integrate(float(lam), float(prob.n), float(prob.p),
                                                 float(prob.R), int(steps), bool(profile))
    if not finite:
        raise NumericError(f"radial integration blew up at lam={lam}")
    g = _residual(prob, rhos[-1], ms[-1])
    return g, ((rs, rhos, ms) if profile else None), bool(positive)


def _first_root(prob, tol, steps):
    """Bracket and solve for the first eigenvalue of ``prob``."""

    def indicator(lam):
        g, _, pos = shoot(prob, lam, steps, profile=False)
        return g, pos

    # a constant test function bounds the first eigenvalue by n beta / R
    lo = 0.0
    hi = prob.n * prob.beta / prob.R
    g_hi, pos_hi = indicator(hi)
    while pos_hi and g_hi > 0:
        lo, hi = hi, 2.0 * hi
        g_hi, pos_hi = indicator(hi)
    # past the first eigenvalue rho turns negative; bisect on that until the
    # upper end is a genuine sign change of g with a positive profile
    for _ in range(200):
        if pos_hi and g_hi <= 0:
            break
        mid = 0.5 * (lo + hi)
        g_mid, pos_mid = indicator(mid)
        if pos_mid and g_mid > 0:
            lo = mid
        else:
            hi, g_hi, pos_hi = mid, g_mid, pos_mid
    else:
        raise NumericError("could not bracket the first radial eigenvalue")
    if g_hi == 0:
        return hi
    if lo == 0.0:
        lo = hi * 1e-12
        while shoot(prob, lo, steps, profile=False)[0] <= 0:
            lo *= 1e-3
    return brentq(lambda lam: shoot(prob, lam, steps, profile=False)[0], lo, hi,
                  xtol=1e-300, rtol=max(tol, 4 * np.finfo(float).eps), maxiter=500)


def first_eigenvalue_radial(prob, tol=1e-10, steps=DEFAULT_STEPS):
    """First Robin eigenvalue of the ball (and of every Wulff shape) of radius ``prob.R``."""
    if not tol > 0:
        raise InputError("tol must be positive")
    if prob.beta == 0:
        r = np.linspace(0.0, prob.R, steps + 2)
        one = np.ones_like(r)
        zero = np.zeros_like(r)
        return RadialSolution(prob, 0.0, r, one, zero, zero, 0.0)
    lam = _first_root(prob, tol, steps)
    g, (r, rho, m), positive = shoot(prob, lam, steps)
    if not positive:
        raise NumericError("first eigenfunction lost positivity; solver bug", residual=g)
    rho_prime = -np.maximum(m, 0.0) ** (1.0 / (prob.p - 1.0))
    beta_profile = m / rho ** (prob.p - 1.0)
    return RadialSolution(prob, float(lam), r, rho, rho_prime, beta_profile, float(g))


def lambda_of_wulff(H, prob, tol=1e-10):
    """First eigenvalue on the Wulff shape of ``H`` with radius ``prob.R``.

    The value does not depend on ``H``; the norm is only checked for a
    matching dimension.
    """
    if H.dim != prob.n:
        raise InputError(f"norm dimension {H.dim} does not match problem dimension {prob.n}")
    return first_eigenvalue_radial(prob, tol).lam


def verify_scaling(prob, t, tol=1e-10):
    """Compare ``lam(tR, beta)`` with ``t^-p lam(R, t^(p-1) beta)``."""
    if not t > 0:
        raise InputError("scaling factor must be positive")
    lhs = first_eigenvalue_radial(prob.replace(R=prob.R * t), tol).lam
    rhs = t ** (-prob.p) * first_eigenvalue_radial(
        prob.replace(beta=t ** (prob.p - 1.0) * prob.beta), tol).lam
    return lhs, rhs, abs(lhs - rhs) / lhs


def verify_wulff_monotonicity(H, n, p, beta, radii, tol=1e-10, endpoint_tol=1e-8):
    """True iff the eigenvalue strictly decreases along ``radii`` and every beta profile
    is nondecreasing from 0 to ``beta``."""
    radii = list(radii)
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise InputError("radii must be strictly increasing")
    if H.dim != n:
        raise InputError("norm dimension does not match n")
    lams = []
    for R in radii:
        sol = first_eigenvalue_radial(RadialProblem(n, p, R, beta), tol)
        bp = sol.beta_profile
        scale = max(1.0, beta)
        if abs(bp[0]) > endpoint_tol * scale or abs(bp[-1] - beta) > endpoint_tol * scale:
            return False
        if np.any(np.diff(bp) < -1e-12 * scale):
            return False
        lams.append(sol.lam)
    return all(b < a for a, b in zip(lams, lams[1:]))
