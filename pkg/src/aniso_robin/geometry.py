"""Planar polygonal domains, Wulff shapes and anisotropic geometric quantities.

Only two-dimensional domains are handled here.  Distance and inradius are
restricted to convex polygons.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import InputError, NumericError, UnsupportedError
from .norms import polar_evaluate

__all__ = [
    "Domain",
    "square",
    "rectangle",
    "ellipse",
    "regular_polygon",
    "equilateral_triangle",
    "wulff_polygon",
    "area",
    "aniso_perimeter",
    "kappa",
    "aniso_distance",
    "aniso_distance_field",
    "inradius",
    "isoperimetric_ratio",
    "read_domain",
    "write_domain",
]

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def _segments_cross(P, Q, R, S):
    """Proper intersection test between segment batches PQ and RS (broadcasting)."""
    def orient(a, b, c):
        return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - \
               (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])
    d1 = orient(R, S, P)
    d2 = orient(R, S, Q)
    d3 = orient(P, Q, R)
    d4 = orient(P, Q, S)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


def _is_simple(V):
    m = len(V)
    E0 = V
    E1 = np.roll(V, -1, axis=0)
    idx = np.arange(m)
    for start in range(0, m, 256):
        i = idx[start:start + 256]
        hit = _segments_cross(E0[i, None, :], E1[i, None, :], E0[None, :, :], E1[None, :, :])
        # adjacent edges share an endpoint and never properly cross
        if hit.any():
            return False
    return True


@dataclass(frozen=True, eq=False)
class Domain:
    """Simple polygon with counter-clockwise vertices.

    Clockwise input is reversed.  Edge ``k`` runs from vertex ``k`` to
    vertex ``k+1``.  ``normals[k]`` is its unit outward normal.
    """

    vertices: np.ndarray
    tag: str = ""

    def __post_init__(self):
        V = np.array(self.vertices, dtype=float)
        if V.ndim != 2 or V.shape[1] != 2 or len(V) < 3:
            raise InputError("a domain needs at least three 2-D vertices")
        if not np.all(np.isfinite(V)):
            raise InputError("vertex coordinates must be finite")
        E = np.roll(V, -1, axis=0) - V
        L = np.hypot(E[:, 0], E[:, 1])
        if np.any(L <= 1e-14 * max(1.0, np.abs(V).max())):
            raise InputError("polygon has a degenerate zero-length edge")
        signed = 0.5 * np.sum(V[:, 0] * np.roll(V[:, 1], -1) - np.roll(V[:, 0], -1) * V[:, 1])
        if signed < 0:
            V = V[::-1].copy()
            E = np.roll(V, -1, axis=0) - V
            L = np.hypot(E[:, 0], E[:, 1])
            signed = -signed
        cross = E[:, 0] * np.roll(E[:, 1], -1) - E[:, 1] * np.roll(E[:, 0], -1)
        convex = bool(np.all(cross >= -1e-14 * L * np.roll(L, -1)))
        if not convex and not _is_simple(V):
            raise InputError("polygon is self-intersecting")
        if signed <= 0:
            raise InputError("polygon has zero area")
        V.setflags(write=False)
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "_edges", E)
        object.__setattr__(self, "_lengths", L)
        object.__setattr__(self, "_area", float(signed))
        object.__setattr__(self, "convex", convex)

    @property
    def edges(self):
        return self._edges

    @property
    def edge_lengths(self):
        return self._lengths

    @property
    def normals(self):
        E = self._edges
        return np.column_stack([E[:, 1], -E[:, 0]]) / self._lengths[:, None]

    @property
    def area(self):
        return self._area

    @property
    def diameter(self):
        V = self.vertices
        return float(np.max(np.linalg.norm(V[:, None, :] - V[None, :, :], axis=-1))) \
            if len(V) <= 2048 else float(np.ptp(V, axis=0).max() * np.sqrt(2))

    def scaled(self, t, tag=None):
        return Domain(self.vertices * t, tag=self.tag if tag is None else tag)

    def contains(self, X, strict=True):
        """Vectorised point-in-polygon test.

        ``strict`` excludes points on the boundary (up to rounding) for convex
        domains; non-convex domains use the even-odd rule.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        V = self.vertices
        if self.convex:
            N = self.normals
            c = np.einsum("ij,ij->i", V, N)
            slack = 1e-12 * max(1.0, float(np.abs(V).max()))
            lhs = X @ N.T - c[None, :]
            return np.all(lhs < -slack if strict else lhs <= slack, axis=1)
        W = np.roll(V, -1, axis=0)
        inside = np.zeros(len(X), dtype=bool)
        for a, b in zip(V, W):
            cond = (a[1] > X[:, 1]) != (b[1] > X[:, 1])
            with np.errstate(divide="ignore", invalid="ignore"):
                xc = a[0] + (X[:, 1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
            inside ^= cond & (X[:, 0] < xc)
        return inside

    def __repr__(self):
        return f"Domain(tag={self.tag!r}, vertices={len(self.vertices)}, area={self.area:.6g})"


# ---------------------------------------------------------------------------
# generators


def square(side=1.0):
    s = float(side)
    return Domain([[0, 0], [s, 0], [s, s], [0, s]], tag="square")


def rectangle(width, height):
    w, h = float(width), float(height)
    if w <= 0 or h <= 0:
        raise InputError("rectangle sides must be positive")
    return Domain([[0, 0], [w, 0], [w, h], [0, h]], tag=f"rect:{w:g},{h:g}")


def ellipse(a, b, m=512):
    if a <= 0 or b <= 0:
        raise InputError("ellipse semi-axes must be positive")
    th = 2 * np.pi * np.arange(m) / m
    return Domain(np.column_stack([a * np.cos(th), b * np.sin(th)]), tag=f"ellipse:{a:g},{b:g}")


def regular_polygon(k, circumradius=1.0):
    if k < 3:
        raise InputError("regular polygon needs k >= 3")
    th = 2 * np.pi * np.arange(k) / k + np.pi / 2
    return Domain(circumradius * np.column_stack([np.cos(th), np.sin(th)]), tag=f"regular:{k}")


def equilateral_triangle(area=1.0):
    side = np.sqrt(4 * area / np.sqrt(3))
    return Domain([[0, 0], [side, 0], [side / 2, side * np.sqrt(3) / 2]], tag="triangle")


def wulff_polygon(H, R=1.0, center=(0.0, 0.0), m=512):
    """Polygon inscribed in ``{H°(x - center) < R}`` with vertices at angles ``2 pi k / m``."""
    if H.dim != 2:
        raise InputError("polygonal Wulff shapes are two-dimensional")
    if R <= 0:
        raise InputError("Wulff radius must be positive")
    if m < 8:
        raise InputError("Wulff polygon needs m >= 8 samples")
    th = 2 * np.pi * np.arange(m) / m
    U = np.column_stack([np.cos(th), np.sin(th)])
    V = np.asarray(center, dtype=float) + R * U / polar_evaluate(H, U)[:, None]
    return Domain(V, tag=f"wulff:{R:g}")


# ---------------------------------------------------------------------------
# measures


def area(d):
    """Shoelace area."""
    return d.area


def aniso_perimeter(d, H):
    """``sum_e |e| H(nu_e)``; the Euclidean perimeter when H is Euclidean."""
    if H.dim != 2:
        raise InputError("anisotropic perimeter of a polygon needs a 2-D norm")
    return float(np.sum(d.edge_lengths * H._eval(d.normals)))


_KAPPA_CACHE = {}


def _kappa_extrapolated(H):
    areas = [wulff_polygon(H, 1.0, (0.0, 0.0), m).area for m in (512, 1024, 2048)]
    a1 = (4 * areas[1] - areas[0]) / 3
    a2 = (4 * areas[2] - areas[1]) / 3
    return (16 * a2 - a1) / 15


def kappa(H):
    """Area of the unit Wulff shape, Richardson-extrapolated from inscribed polygons."""
    if H.dim != 2:
        raise InputError("kappa is computed for two-dimensional norms only")
    try:
        key = repr(H.to_config())
    except InputError:
        return float(_kappa_extrapolated(H))
    if key not in _KAPPA_CACHE:
        _KAPPA_CACHE[key] = float(_kappa_extrapolated(H))
    return _KAPPA_CACHE[key]


def isoperimetric_ratio(d, H):
    """``sigma_H(boundary) / (2 sqrt(kappa |d|))``; at least 1, and 1 only for Wulff shapes."""
    return aniso_perimeter(d, H) / (2.0 * np.sqrt(kappa(H) * d.area))


# ---------------------------------------------------------------------------
# anisotropic distance


def _require_convex(d):
    if not d.convex:
        raise UnsupportedError("anisotropic distance and inradius need a convex domain")


def aniso_distance(d, H, x, with_flag=False, tol=1e-10):
    """``min_{y on boundary} H°(x - y)`` by golden section along every edge.

    Points outside (or on) the boundary give 0; pass ``with_flag=True`` to
    also receive whether ``x`` was strictly inside.
    """
    _require_convex(d)
    x = np.asarray(x, dtype=float)
    if x.shape != (2,):
        raise InputError("aniso_distance takes a single 2-D point")
    inside = bool(d.contains(x[None, :])[0])
    if not inside:
        return (0.0, False) if with_flag else 0.0

    A = d.vertices
    E = d.edges

    def f(s):
        return polar_evaluate(H, x[None, :] - (A + s[:, None] * E))

    a = np.zeros(len(A))
    b = np.ones(len(A))
    iters = int(np.ceil(np.log(tol) / np.log(_GOLDEN))) + 1
    for _ in range(iters):
        c = b - _GOLDEN * (b - a)
        dd = a + _GOLDEN * (b - a)
        left = f(c) < f(dd)
        b = np.where(left, dd, b)
        a = np.where(left, a, c)
    s = 0.5 * (a + b)
    vals = np.minimum(f(s), np.minimum(f(np.zeros_like(s)), f(np.ones_like(s))))
    val = float(vals.min())
    return (val, True) if with_flag else val


def aniso_distance_field(d, H, X):
    """Vectorised distance for a convex polygon: ``min_e (c_e - x.nu_e) / H(nu_e)``.

    For a convex polygon the boundary distance equals the distance to the
    nearest supporting line.  The distance to the line ``{y.nu = c}`` is
    ``(c - x.nu) / H(nu)``.  Points outside are clipped to 0.
    """
    _require_convex(d)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    N = d.normals
    c = np.einsum("ij,ij->i", d.vertices, N)
    hn = H._eval(N)
    D = (c[None, :] - X @ N.T) / hn[None, :]
    return np.maximum(D.min(axis=1), 0.0)


def inradius(d, H):
    """Largest anisotropic distance to the boundary, together with a maximizer.

    The distance is a minimum of affine functions on a convex polygon, so
    its maximum solves a linear program in ``(x, y, r)``.
    """
    _require_convex(d)
    N = d.normals
    c = np.einsum("ij,ij->i", d.vertices, N)
    hn = H._eval(N)
    A_ub = np.column_stack([N, hn])
    res = linprog(c=[0.0, 0.0, -1.0], A_ub=A_ub, b_ub=c,
                  bounds=[(None, None), (None, None), (0, None)], method="highs")
    if res.status != 0:
        raise NumericError(f"inradius linear program failed: {res.message}")
    x = res.x[:2]
    value = float(aniso_distance_field(d, H, x[None, :])[0])
    return value, x


# ---------------------------------------------------------------------------
# file format


def read_domain(path):
    """Read ``v x y`` vertex lines; ``#`` starts a comment."""
    verts = []
    tag = str(path)
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] != "v" or len(parts) != 3:
                raise InputError(f"{path}:{lineno}: expected 'v x y', got {line!r}")
            try:
                verts.append((float(parts[1]), float(parts[2])))
            except ValueError:
                raise InputError(f"{path}:{lineno}: bad coordinate in {line!r}") from None
    return Domain(np.array(verts), tag=tag)


def write_domain(d, path):
    with open(path, "w") as fh:
        fh.write(f"# {d.tag}\n")
        for x, y in d.vertices:
            fh.write(f"v {float(x)!r} {float(y)!r}\n")
