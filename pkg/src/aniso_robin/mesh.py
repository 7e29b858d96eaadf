"""P1 triangulations of polygonal domains.

Interior nodes come from a triangular lattice of spacing ``h`` with the
points near the boundary removed.  Every polygon edge is split into equal
segments no longer than ``h``, so the mesh tiles the polygon exactly.
Delaunay triangulation and a few Laplacian smoothing sweeps follow.
Nothing is random, so identical inputs give identical meshes.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay

from .errors import InputError, NumericError

__all__ = ["Mesh", "generate_mesh", "write_mesh"]

CLEARANCE = 0.5
SMOOTHING_SWEEPS = 6


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    h: float

    def __post_init__(self):
        P = self.nodes
        T = self.triangles
        e1 = P[T[:, 1]] - P[T[:, 0]]
        e2 = P[T[:, 2]] - P[T[:, 0]]
        areas = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        if np.any(areas <= 0):
            raise NumericError("mesh has inverted or degenerate triangles")
        # gradients of the three barycentric basis functions on each triangle
        G = np.empty((len(T), 3, 2))
        for a in range(3):
            b, c = (a + 1) % 3, (a + 2) % 3
            edge = P[T[:, c]] - P[T[:, b]]
            G[:, a, 0] = -edge[:, 1] / (2 * areas)
            G[:, a, 1] = edge[:, 0] / (2 * areas)
        B = self.boundary_edges
        D = P[B[:, 1]] - P[B[:, 0]]
        lengths = np.hypot(D[:, 0], D[:, 1])
        normals = np.column_stack([D[:, 1], -D[:, 0]]) / lengths[:, None]
        for name, val in (("areas", areas), ("basis_gradients", G),
                          ("edge_lengths", lengths), ("edge_normals", normals)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def area(self):
        return float(np.sum(self.areas))

    @property
    def boundary_nodes(self):
        return np.unique(self.boundary_edges)

    def gradients(self, u):
        """Constant gradient of the P1 field ``u`` on every triangle, shape ``(T, 2)``."""
        return np.einsum("ta,tak->tk", u[self.triangles], self.basis_gradients)

    def dilated(self, t):
        return Mesh(self.nodes * t, self.triangles, self.boundary_edges, self.h * t)

    def min_angle(self):
        """Smallest interior angle in degrees."""
        P = self.nodes
        T = self.triangles
        worst = 180.0
        for a in range(3):
            u = P[T[:, (a + 1) % 3]] - P[T[:, a]]
            v = P[T[:, (a + 2) % 3]] - P[T[:, a]]
            cosang = np.einsum("ij,ij->i", u, v) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
            worst = min(worst, float(np.degrees(np.arccos(np.clip(cosang, -1, 1))).min()))
        return worst


def _boundary_nodes(V, h):
    pts = []
    for a, b in zip(V, np.roll(V, -1, axis=0)):
        k = max(1, int(np.ceil(np.linalg.norm(b - a) / h - 1e-9)))
        s = np.arange(k)[:, None] / k
        pts.append(a + s * (b - a))
    return np.vstack(pts)


def _segment_distance(X, A, B):
    """Euclidean distance from each row of X to the nearest segment A[k]B[k]."""
    out = np.full(len(X), np.inf)
    D = B - A
    LL = np.einsum("ij,ij->i", D, D)
    for start in range(0, len(A), 128):
        a = A[start:start + 128]
        d = D[start:start + 128]
        ll = LL[start:start + 128]
        rel = X[:, None, :] - a[None, :, :]
        s = np.clip(np.einsum("nkj,kj->nk", rel, d) / ll[None, :], 0.0, 1.0)
        diff = rel - s[..., None] * d[None, :, :]
        out = np.minimum(out, np.sqrt(np.einsum("nkj,nkj->nk", diff, diff)).min(axis=1))
    return out


def _lattice(domain, h):
    lo = domain.vertices.min(axis=0)
    hi = domain.vertices.max(axis=0)
    dy = h * np.sqrt(3) / 2
    ys = lo[1] + dy * np.arange(int(np.ceil((hi[1] - lo[1]) / dy)) + 1)
    rows = []
    for j, y in enumerate(ys):
        xs = lo[0] + (0.5 * h if j % 2 else 0.0) + h * np.arange(int(np.ceil((hi[0] - lo[0]) / h)) + 2)
        rows.append(np.column_stack([xs, np.full_like(xs, y)]))
    X = np.vstack(rows)
    # centre the lattice in the bounding box so symmetric domains get symmetric meshes
    X += 0.5 * ((hi - lo) - (X.max(axis=0) - X.min(axis=0)))
    return X


def _triangulate(P, domain, n_boundary):
    tri = Delaunay(P)
    T = tri.simplices.copy()
    C = P[T].mean(axis=1)
    T = T[domain.contains(C, strict=False)]
    e1 = P[T[:, 1]] - P[T[:, 0]]
    e2 = P[T[:, 2]] - P[T[:, 0]]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    flip = area < 0
    T[flip] = T[flip][:, [0, 2, 1]]
    T = T[np.abs(area) > 1e-14 * np.abs(area).max()]
    return T


def _boundary_edges(T):
    E = np.vstack([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
    key = np.sort(E, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    return E[counts[inv.ravel()] == 1]


def _missing_segments(T, n_boundary):
    """Boundary polyline segments (consecutive boundary nodes) absent from the triangulation."""
    E = np.vstack([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
    have = set(map(tuple, np.sort(E, axis=1).tolist()))
    idx = np.arange(n_boundary)
    seg = np.sort(np.column_stack([idx, np.roll(idx, -1)]), axis=1)
    return [k for k, s in enumerate(map(tuple, seg.tolist())) if s not in have]


def generate_mesh(domain, h):
    """Triangulate ``domain`` with target edge length ``h``."""
    h = float(h)
    if not h > 0:
        raise InputError("mesh size h must be positive")
    V = domain.vertices
    span = np.ptp(V, axis=0).min()
    if h > span:
        raise InputError(f"mesh size h={h} is too large for a domain of width {span:.3g}")

    Bn = _boundary_nodes(V, h)
    X = _lattice(domain, h)
    X = X[domain.contains(X, strict=True)]
    if len(X):
        X = X[_segment_distance(X, V, np.roll(V, -1, axis=0)) > CLEARANCE * h]

    for _ in range(50):
        nb = len(Bn)
        P = np.vstack([Bn, X])
        T = _triangulate(P, domain, nb)
        missing = _missing_segments(T, nb)
        if not missing:
            break
        # split non-conforming boundary segments and try again
        new = []
        miss = set(missing)
        for k in range(nb):
            new.append(Bn[k])
            if k in miss:
                new.append(0.5 * (Bn[k] + Bn[(k + 1) % nb]))
        Bn = np.array(new)
    else:
        raise NumericError("could not build a boundary-conforming triangulation")

    nb = len(Bn)
    for _ in range(SMOOTHING_SWEEPS):
        if len(X) == 0:
            break
        P = np.vstack([Bn, X])
        E = np.vstack([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
        E = np.unique(np.sort(E, axis=1), axis=0)
        nbr_sum = np.zeros_like(P)
        deg = np.zeros(len(P))
        np.add.at(nbr_sum, E[:, 0], P[E[:, 1]])
        np.add.at(nbr_sum, E[:, 1], P[E[:, 0]])
        np.add.at(deg, E[:, 0], 1)
        np.add.at(deg, E[:, 1], 1)
        moved = nbr_sum[nb:] / np.maximum(deg[nb:], 1)[:, None]
        keep = domain.contains(moved, strict=True)
        X = np.where(keep[:, None], moved, X)
        P = np.vstack([Bn, X])
        T2 = _triangulate(P, domain, nb)
        if _missing_segments(T2, nb):
            break
        T = T2

    P = np.vstack([Bn, X])
    return Mesh(P, T, _boundary_edges(T), h)


def write_mesh(mesh, path):
    """Text export: ``n x y`` nodes, ``t i j k`` triangles, ``b i j nx ny`` boundary edges."""
    with open(path, "w") as fh:
        for x, y in mesh.nodes:
            fh.write(f"n {float(x)!r} {float(y)!r}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"t {i} {j} {k}\n")
        for (i, j), (nx, ny) in zip(mesh.boundary_edges, mesh.edge_normals):
            fh.write(f"b {i} {j} {float(nx)!r} {float(ny)!r}\n")
