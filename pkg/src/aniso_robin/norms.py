"""Anisotropic norms H, their polars H°, and checks of the identities linking them.

Every norm evaluates on arrays of shape ``(..., n)`` and reduces over the last
axis.  Four families are provided:

* :class:`Euclidean` -- ``|xi|``
* :class:`Quadratic` -- ``sqrt(xi^T A xi)`` with ``A`` symmetric positive definite
* :class:`SmoothedPNorm` -- the l_q norm, optionally smoothed by ``eps_reg``
* :class:`Custom` -- any even, 1-homogeneous callable

The first two have closed-form polars.  The others compute
``H°(x) = sup_{|u|=1} x.u / H(u)`` numerically.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import DomainError, InputError, NumericError

__all__ = [
    "AnisotropicNorm",
    "Euclidean",
    "Quadratic",
    "SmoothedPNorm",
    "Custom",
    "IdentityReport",
    "evaluate",
    "gradient",
    "polar_evaluate",
    "polar_gradient",
    "flux",
    "verify_identities",
]

TINY = 1e-12
POLAR_STARTS = 64
POLAR_ANGLE_TOL = 1e-10
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class AnisotropicNorm:
    """Base class; subclasses implement the ``_eval``/``_grad`` kernels on ``(N, n)`` arrays."""

    family = "abstract"
    closed_form_polar = False

    def __init__(self, dim):
        dim = int(dim)
        if dim < 2:
            raise InputError(f"dimension must be >= 2, got {dim}")
        self.dim = dim

    # kernels -----------------------------------------------------------
    def _eval(self, X):
        raise NotImplementedError

    def _grad(self, X):
        raise NotImplementedError

    def _polar(self, X):
        return _numeric_polar(self, X)[0]

    def _polar_grad(self, X):
        value, xi = _numeric_polar(self, X)
        return xi / self._eval(xi)[:, None]

    # public surface ----------------------------------------------------
    def __call__(self, xi):
        return evaluate(self, xi)

    def bounds(self):
        """Constants ``a <= b`` with ``a|xi| <= H(xi) <= b|xi|``."""
        U = _sphere_samples(self.dim, 4096)
        vals = self._eval(U)
        return float(vals.min()), float(vals.max())

    def to_config(self):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class Euclidean(AnisotropicNorm):
    family = "euclidean"
    closed_form_polar = True

    def __init__(self, dim=2):
        super().__init__(dim)

    def _eval(self, X):
        return np.sqrt(np.einsum("...i,...i->...", X, X))

    def _grad(self, X):
        return X / self._eval(X)[..., None]

    def _polar(self, X):
        return self._eval(X)

    def _polar_grad(self, X):
        return self._grad(X)

    def bounds(self):
        return 1.0, 1.0

    def to_config(self):
        return {"family": "euclidean", "dim": self.dim}


class Quadratic(AnisotropicNorm):
    """``H(xi) = sqrt(xi^T A xi)``; the polar is ``sqrt(x^T A^-1 x)``."""

    family = "quadratic"
    closed_form_polar = True

    def __init__(self, matrix):
        A = np.array(matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InputError(f"quadratic norm needs a square matrix, got shape {A.shape}")
        if not np.allclose(A, A.T, rtol=0, atol=1e-14 * np.abs(A).max()):
            raise InputError("quadratic norm matrix must be symmetric")
        eig = np.linalg.eigvalsh(A)
        if eig[0] <= 0:
            raise InputError("quadratic norm matrix must be positive definite")
        super().__init__(A.shape[0])
        A.setflags(write=False)
        self.A = A
        self.Ainv = np.linalg.inv(A)
        self.Ainv.setflags(write=False)
        self._eig = eig

    def _eval(self, X):
        return np.sqrt(np.einsum("...i,ij,...j->...", X, self.A, X))

    def _grad(self, X):
        return (X @ self.A) / self._eval(X)[..., None]

    def _polar(self, X):
        return np.sqrt(np.einsum("...i,ij,...j->...", X, self.Ainv, X))

    def _polar_grad(self, X):
        return (X @ self.Ainv) / self._polar(X)[..., None]

    def bounds(self):
        return float(np.sqrt(self._eig[0])), float(np.sqrt(self._eig[-1]))

    def to_config(self):
        return {"family": "quadratic", "matrix": self.A.tolist()}

    def __repr__(self):
        return f"Quadratic({self.A.tolist()})"


class SmoothedPNorm(AnisotropicNorm):
    """``(sum_i (xi_i^2 + eps^2)^(q/2))^(1/q) - n^(1/q) eps``.

    With ``eps_reg = 0`` (the default) this is the l_q norm and is exactly
    1-homogeneous.  For ``q > 2`` the ellipticity constant degenerates on the
    coordinate axes, so treat this family as experimental.
    """

    family = "pnorm"

    def __init__(self, q, eps_reg=0.0, dim=2):
        q = float(q)
        if not q > 1:
            raise InputError(f"l_q norm needs q > 1, got {q}")
        if eps_reg < 0:
            raise InputError("eps_reg must be >= 0")
        super().__init__(dim)
        self.q = q
        self.eps_reg = float(eps_reg)

    def _sum(self, X):
        return np.sum((X * X + self.eps_reg**2) ** (self.q / 2.0), axis=-1)

    def _eval(self, X):
        offset = self.dim ** (1.0 / self.q) * self.eps_reg
        return self._sum(X) ** (1.0 / self.q) - offset

    def _grad(self, X):
        s = self._sum(X)
        if self.eps_reg == 0:
            inner = np.sign(X) * np.abs(X) ** (self.q - 1.0)
        else:
            inner = (X * X + self.eps_reg**2) ** (self.q / 2.0 - 1.0) * X
        return inner * (s ** (1.0 / self.q - 1.0))[..., None]

    def bounds(self):
        if self.eps_reg > 0:
            return super().bounds()
        c = self.dim ** (1.0 / self.q - 0.5)
        return (c, 1.0) if self.q >= 2 else (1.0, c)

    def to_config(self):
        return {"family": "pnorm", "q": self.q, "eps_reg": self.eps_reg, "dim": self.dim}

    def __repr__(self):
        return f"SmoothedPNorm(q={self.q}, eps_reg={self.eps_reg}, dim={self.dim})"


class Custom(AnisotropicNorm):
    """Norm given by a user callable ``fn(X)`` evaluating on ``(..., n)`` arrays.

    Without an explicit ``grad`` the gradient is a central difference with
    step ``1e-6 |xi|``.
    """

    family = "custom"

    def __init__(self, fn, dim=2, grad=None, name="custom"):
        super().__init__(dim)
        self.fn = fn
        self.grad_fn = grad
        self.name = name

    def _eval(self, X):
        return np.asarray(self.fn(X), dtype=float)

    def _grad(self, X):
        if self.grad_fn is not None:
            return np.asarray(self.grad_fn(X), dtype=float)
        step = 1e-6 * np.linalg.norm(X, axis=-1)
        G = np.empty_like(X)
        for i in range(self.dim):
            E = np.zeros_like(X)
            E[..., i] = step
            G[..., i] = (self._eval(X + E) - self._eval(X - E)) / (2 * step)
        return G

    def to_config(self):
        raise InputError("custom norms cannot be serialized")

    def __repr__(self):
        return f"Custom({self.name!r}, dim={self.dim})"


# ---------------------------------------------------------------------------
# numeric polar


def _sphere_samples(n, count):
    if n == 2:
        th = 2 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(th), np.sin(th)])
    rng = np.random.default_rng(12345)
    U = rng.standard_normal((count, n))
    return U / np.linalg.norm(U, axis=1)[:, None]


def _numeric_polar(H, X):
    """Return ``(H°(x), maximizer)`` for each row; the maximizer lies on the unit sphere."""
    X = np.asarray(X, dtype=float)
    out = np.zeros(len(X))
    arg = np.zeros_like(X)
    nz = np.linalg.norm(X, axis=1) > 0
    if not nz.any():
        arg[:, 0] = 1.0
        return out, arg
    if H.dim == 2:
        v, a = _polar_circle(H, X[nz])
    else:
        v, a = _polar_sphere(H, X[nz])
    out[nz] = v
    arg[nz] = a
    arg[~nz, 0] = 1.0
    return out, arg


def _polar_circle(H, X):
    theta = 2 * np.pi * np.arange(POLAR_STARTS) / POLAR_STARTS
    U = np.column_stack([np.cos(theta), np.sin(theta)])
    W = U / H._eval(U)[:, None]
    vals = X @ W.T
    k = np.argmax(vals, axis=1)
    best = vals[np.arange(len(X)), k]
    dth = 2 * np.pi / POLAR_STARTS
    a = theta[k] - dth
    b = theta[k] + dth

    def f(th):
        u = np.column_stack([np.cos(th), np.sin(th)])
        return np.einsum("ij,ij->i", X, u) / H._eval(u)

    def slope_sign(th):
        u = np.column_stack([np.cos(th), np.sin(th)])
        du = np.column_stack([-np.sin(th), np.cos(th)])
        xu = np.einsum("ij,ij->i", X, u)
        xdu = np.einsum("ij,ij->i", X, du)
        return xdu * H._eval(u) - xu * np.einsum("ij,ij->i", H._grad(u), du)

    # value comparisons stop resolving the flat top near sqrt(machine eps), so
    # bisect on the sign of the angular derivative; golden section only narrows
    # brackets whose endpoint slopes are not yet signed
    bracketed = (slope_sign(a) > 0) & (slope_sign(b) < 0)
    if not bracketed.all():
        a0, b0 = a.copy(), b.copy()
        iters = int(np.ceil(np.log(1e-7 / (2 * dth)) / np.log(_GOLDEN))) + 1
        for _ in range(iters):
            c = b - _GOLDEN * (b - a)
            d = a + _GOLDEN * (b - a)
            left = f(c) > f(d)
            b = np.where(left, d, b)
            a = np.where(left, a, c)
        a = np.where(bracketed, a0, a)
        b = np.where(bracketed, b0, b)
    ok = (slope_sign(a) > 0) & (slope_sign(b) < 0)
    while np.any(ok & (b - a > 1e-3 * POLAR_ANGLE_TOL)):
        mid = 0.5 * (a + b)
        up = slope_sign(mid) > 0
        a = np.where(ok & up, mid, a)
        b = np.where(ok & ~up, mid, b)
    th = 0.5 * (a + b)
    val = f(th)
    if np.any(val < best - 1e-12 * np.abs(best)):
        raise NumericError("polar maximization lost the multi-start maximum",
                           residual=float(np.max(best - val)))
    val = np.maximum(val, best)
    return val, np.column_stack([np.cos(th), np.sin(th)])


def _polar_sphere(H, X, samples=4000, maxiter=200):
    U = _sphere_samples(H.dim, samples)
    W = U / H._eval(U)[:, None]
    vals = X @ W.T
    k = np.argmax(vals, axis=1)
    out = np.empty(len(X))
    arg = np.empty_like(X)
    for i, x in enumerate(X):
        def neg(v, x=x):
            v2 = v[None, :]
            return -float(x @ v / H._eval(v2)[0])

        res = optimize.minimize(neg, U[k[i]], method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": maxiter * H.dim})
        if not res.success:
            raise NumericError(f"polar maximization did not converge: {res.message}",
                               residual=float(res.fun))
        v = res.x / np.linalg.norm(res.x)
        out[i] = -neg(v)
        arg[i] = v
    return out, arg


# ---------------------------------------------------------------------------
# module-level operations


def _as_rows(H, xi):
    arr = np.asarray(xi, dtype=float)
    if arr.shape[-1:] != (H.dim,):
        raise InputError(f"expected vectors of dimension {H.dim}, got shape {arr.shape}")
    return arr.reshape(-1, H.dim), arr.shape[:-1]


def evaluate(H, xi):
    """``H(xi)``; returns a float for a single vector, else an array over the leading axes."""
    X, lead = _as_rows(H, xi)
    val = H._eval(X)
    return float(val[0]) if lead == () else val.reshape(lead)


def _check_nonzero(H, X, what):
    r = np.linalg.norm(X, axis=1)
    limit = 0.0 if H.family in ("euclidean", "quadratic") else TINY
    if np.any(r <= limit):
        raise DomainError(f"{what} is undefined at the origin")


def gradient(H, xi):
    """``H_xi(xi)``; zero-homogeneous, undefined at the origin."""
    X, lead = _as_rows(H, xi)
    _check_nonzero(H, X, "gradient")
    G = H._grad(X)
    return G[0] if lead == () else G.reshape(lead + (H.dim,))


def polar_evaluate(H, x):
    """``H°(x) = sup_{xi != 0} x.xi / H(xi)``."""
    X, lead = _as_rows(H, x)
    val = H._polar(X)
    return float(val[0]) if lead == () else val.reshape(lead)


def polar_gradient(H, x):
    """Gradient of the polar; ``H(polar_gradient(x)) == 1``."""
    X, lead = _as_rows(H, x)
    _check_nonzero(H, X, "polar gradient")
    G = H._polar_grad(X)
    return G[0] if lead == () else G.reshape(lead + (H.dim,))


def flux(H, G, p, eps=0.0):
    """``H(g)^(p-1) H_xi(g)`` row-wise, i.e. the gradient of ``H(g)^p / p``.

    Rows with ``g = 0`` map to zero.  With ``eps > 0`` the regularized
    ``(H^2 + eps^2)^((p-2)/2) H H_xi`` is returned instead.
    """
    G = np.asarray(G, dtype=float)
    out = np.zeros_like(G)
    r = np.linalg.norm(G, axis=1)
    nz = r > (0.0 if H.family in ("euclidean", "quadratic") else TINY)
    if not nz.any():
        return out
    g = G[nz]
    h = H._eval(g)
    dh = H._grad(g)
    if eps > 0:
        scale = (h * h + eps * eps) ** ((p - 2.0) / 2.0) * h
    else:
        scale = h ** (p - 1.0)
    out[nz] = scale[:, None] * dh
    return out


# ---------------------------------------------------------------------------
# identity checks


@dataclass(frozen=True)
class IdentityReport:
    euler: float
    polar_unit: float
    inverse_map: float
    homogeneity: float
    bounds: float
    sample_count: int
    gamma_estimate: float
    residuals: dict = field(default_factory=dict, compare=False)

    def as_dict(self):
        return {
            "euler": self.euler,
            "polar_unit": self.polar_unit,
            "inverse_map": self.inverse_map,
            "homogeneity": self.homogeneity,
            "bounds": self.bounds,
            "sample_count": self.sample_count,
            "gamma_estimate": self.gamma_estimate,
        }


def _ellipticity(H, X, p):
    """Smallest eigenvalue of ``D^2(H^p / p)(eta) / |eta|^(p-2)`` over the rows of X."""
    gamma = np.inf
    n = H.dim
    for eta in X:
        r = np.linalg.norm(eta)
        step = 1e-5 * r
        Jac = np.empty((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = step
            fp = flux(H, (eta + e)[None, :], p)[0]
            fm = flux(H, (eta - e)[None, :], p)[0]
            Jac[:, j] = (fp - fm) / (2 * step)
        Jac = 0.5 * (Jac + Jac.T)
        lam = np.linalg.eigvalsh(Jac)[0] / r ** (p - 2.0)
        gamma = min(gamma, lam)
    return float(gamma)


def verify_identities(H, samples=100, seed=0, p=2.0):
    """Measure how well the norm satisfies the structural identities on random samples.

    Residuals are relative to ``|xi|``.  The ellipticity constant ``gamma`` is
    an estimate from finite differences of the flux, not a certificate.
    """
    if samples < 1:
        raise InputError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((samples, H.dim))
    X = X[np.linalg.norm(X, axis=1) > 1e-3]
    r = np.linalg.norm(X, axis=1)

    h = H._eval(X)
    g = H._grad(X)
    ho = H._polar(X)
    go = H._polar_grad(X)

    euler = np.abs(np.einsum("ij,ij->i", g, X) - h) / r
    euler_o = np.abs(np.einsum("ij,ij->i", go, X) - ho) / r
    unit = np.maximum(np.abs(H._eval(go) - 1.0), np.abs(H._polar(g) - 1.0))
    inv1 = np.linalg.norm(ho[:, None] * H._grad(go) - X, axis=1) / r
    inv2 = np.linalg.norm(h[:, None] * H._polar_grad(g) - X, axis=1) / r
    homog = 0.0
    for t in (-2.0, -1.0, 0.5, 3.0):
        homog = max(homog, float(np.max(np.abs(H._eval(t * X) - abs(t) * h) / h)))
    a, b = H.bounds()
    viol = np.maximum(a * r - h, h - b * r) / r
    bound_res = float(max(0.0, np.max(viol)))

    report = IdentityReport(
        euler=float(max(euler.max(), euler_o.max())),
        polar_unit=float(unit.max()),
        inverse_map=float(max(inv1.max(), inv2.max())),
        homogeneity=homog,
        bounds=bound_res,
        sample_count=int(len(X)),
        gamma_estimate=max(0.0, _ellipticity(H, X, p)),
    )
    return report
