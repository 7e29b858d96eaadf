import numpy as np
import pytest

from aniso_robin import InputError, Quadratic
from aniso_robin.geometry import Domain, ellipse, equilateral_triangle, rectangle, square, wulff_polygon
from aniso_robin.mesh import generate_mesh, write_mesh

CASES = {
    "square": (square(), 0.05),
    "rect": (rectangle(2, 0.5), 0.05),
    "triangle": (equilateral_triangle(), 0.05),
    "ellipse": (ellipse(1, 0.5, 128), 0.05),
    "wulff": (wulff_polygon(Quadratic([[2, 1], [1, 2]]), 1, m=256), 0.04),
    "lshape": (Domain([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]]), 0.1),
}


def boundary_loop_length(mesh):
    D = mesh.nodes[mesh.boundary_edges[:, 1]] - mesh.nodes[mesh.boundary_edges[:, 0]]
    return np.hypot(*D.T).sum()


def test_unit_square_coarse():
    m = generate_mesh(square(), 0.5)
    assert 8 <= len(m.triangles) <= 12
    assert m.area == pytest.approx(1, abs=1e-15)


@pytest.mark.parametrize("name", list(CASES))
def test_mesh_invariants(name):
    d, h = CASES[name]
    m = generate_mesh(d, h)
    assert np.all(m.areas > 0)
    assert m.area == pytest.approx(d.area, rel=1e-10)
    assert m.min_angle() >= 20
    # boundary edges close up and trace the polygon
    B = m.boundary_edges
    assert sorted(B[:, 0]) == sorted(B[:, 1])
    assert boundary_loop_length(m) == pytest.approx(d.edge_lengths.sum(), rel=1e-10)
    if d.convex:
        assert np.all(~d.contains(m.nodes[m.boundary_nodes], strict=True))
    mid = 0.5 * (m.nodes[B[:, 0]] + m.nodes[B[:, 1]])
    assert np.all(~d.contains(mid + 1e-6 * m.edge_normals, strict=False))


def test_deterministic(tmp_path):
    a = generate_mesh(ellipse(1, 0.5, 128), 0.05)
    b = generate_mesh(ellipse(1, 0.5, 128), 0.05)
    write_mesh(a, tmp_path / "a.txt")
    write_mesh(b, tmp_path / "b.txt")
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()
    lines = (tmp_path / "a.txt").read_text().splitlines()
    assert lines[0].startswith("n ") and any(l.startswith("t ") for l in lines)
    assert any(l.startswith("b ") for l in lines)


def test_gradients_exact_for_linear_fields():
    m = generate_mesh(rectangle(2, 1), 0.1)
    u = 3 * m.nodes[:, 0] - 2 * m.nodes[:, 1] + 1
    assert np.allclose(m.gradients(u), [3, -2], atol=1e-12)


def test_dilation():
    m = generate_mesh(square(), 0.1)
    big = m.dilated(3.0)
    assert big.area == pytest.approx(9 * m.area, rel=1e-14)
    assert np.allclose(big.edge_normals, m.edge_normals)


@pytest.mark.parametrize("h", [0.0, -1.0, 2.0])
def test_bad_mesh_size(h):
    with pytest.raises(InputError):
        generate_mesh(square(), h)
