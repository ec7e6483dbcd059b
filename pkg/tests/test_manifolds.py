import numpy as np
import pytest

from floquet_crossings.errors import InvalidSize, RadiusTooLarge, SelfIntersection
from floquet_crossings.manifolds import (Loop, build_grid, export_mesh_csv, slab_mesh,
                                         slice_mesh, sphere3_embedding, sphere_mesh, tube_mesh)

KINDS = ["torus3", "torus_cylinder", "sphere3", "sphere_circle", "sphere_cylinder"]


def test_torus_grid():
    g = build_grid("torus3", (8, 8, 8))
    assert g.n_vertices == 512 and all(g.periodic)


def test_cylinder_time_axis():
    g = build_grid("torus_cylinder", (8, 8, 9))
    t = g.axis_values(2)
    assert len(t) == 9 and t[0] == 0 and t[-1] == 1


def test_sphere3_pole_row():
    g = build_grid("sphere3", (9, 9, 16))
    x = sphere3_embedding(g.coords()[0])
    assert np.allclose(x[..., 0], 1) and np.allclose(x[..., 1:], 0)


@pytest.mark.parametrize("kind", KINDS)
def test_grid_too_small(kind):
    with pytest.raises(InvalidSize):
        build_grid(kind, (3, 8, 8))


def test_reversed_grid():
    g = build_grid("torus3", (8, 8, 8))
    assert g.reversed().orientation == -g.orientation


def test_wrap_and_distance():
    g = build_grid("torus3", (8, 8, 8))
    p = g.wrap(np.array([4.0, -4.0, 1.25]))
    assert -np.pi <= p[0] < np.pi and -np.pi <= p[1] < np.pi and np.isclose(p[2], 0.25)
    d = g.chart_distance(np.array([3.0, 0, 0.9]), np.array([-3.0, 0, 0.1]))
    assert np.allclose(d, [2 * np.pi - 6.0, 0, 0.2])


# --- meshes -----------------------------------------------------------------

def test_equatorial_sphere_at_identity():
    g = build_grid("sphere3", (24, 24, 24))
    m = sphere_mesh(g, (0, 0, 0), np.pi / 2)
    assert np.allclose(m.vertices[:, 0], np.pi / 2)
    assert m.is_closed() and m.euler_characteristic() == 2


def test_sphere_mesh_combinatorics():
    g = build_grid("torus3", (16, 16, 16))
    m = sphere_mesh(g, (0.3, -0.2, 0.5), (1.0, 1.0, 0.2), resolution=(4, 8))
    assert len(m.quads) == 32
    assert m.euler_characteristic() == 2 and m.is_closed()


def test_antipodal_spheres_have_opposite_sign():
    g = build_grid("sphere3", (24, 24, 24))
    a = sphere_mesh(g, (0, 0, 0), np.pi / 2)
    b = sphere_mesh(g, (np.pi, 0, 0), np.pi / 2)
    assert np.allclose(a.vertices, b.vertices)
    assert a.signs == tuple(-s for s in b.signs)


def test_sphere_radius_too_large():
    g = build_grid("sphere3", (24, 24, 24))
    with pytest.raises(RadiusTooLarge):
        sphere_mesh(g, (0, 0, 0), np.pi)
    with pytest.raises(RadiusTooLarge):
        sphere_mesh(g, (0, 0, 0), 1.0, exclusions=[(0.5, 1.0, 1.0)])


def diagonal_loop(offset=0.0, t=0.5):
    return Loop(origin=(-np.pi + offset, -np.pi, t), span=(2 * np.pi, 2 * np.pi, 0),
                e1=(0, 1, 0), e2=(0, 0, 1))


def test_tube_combinatorics():
    g = build_grid("torus3", (24, 24, 24))
    m = tube_mesh(g, diagonal_loop(), (np.pi / 2, 0.25), resolution=(12, 8))
    assert len(m.quads) == 96
    assert m.is_closed() and m.euler_characteristic() == 0


def test_tube_around_diagonal_loop():
    g = build_grid("torus3", (24, 24, 24))
    m = tube_mesh(g, diagonal_loop(), (np.pi / 2, 0.25))
    # every vertex sits on the boundary of the rectangle around the loop
    d = g.chart_distance(np.zeros(3), m.vertices)
    off = np.mod(m.vertices[:, 1] - m.vertices[:, 0] + np.pi, 2 * np.pi) - np.pi
    on_side = np.isclose(np.abs(off), np.pi / 2) | np.isclose(np.abs(m.vertices[:, 2] - 0.5), 0.25)
    assert np.all(on_side)
    assert np.all(np.abs(off) <= np.pi / 2 + 1e-9) and d.shape == m.vertices.shape


def test_tube_self_intersection():
    g = build_grid("torus3", (24, 24, 24))
    with pytest.raises(SelfIntersection):
        tube_mesh(g, diagonal_loop(), (4.0, 0.25))


def test_rudner_slab():
    g = build_grid("torus3", (24, 24, 24))
    m = slab_mesh(g, 7 / 8, 1 / 8)
    assert m.is_closed()
    hi = m.vertices[m.quads[m.component == 0]][..., 2]
    lo = m.vertices[m.quads[m.component == 1]][..., 2]
    assert np.allclose(hi, 1 / 8) and np.allclose(lo, 7 / 8)
    assert m.signs[0] == -m.signs[1]


def test_collar_slice_single_piece():
    g = build_grid("torus_cylinder", (16, 16, 17))
    m = slice_mesh(g, 1 / 16)
    assert len(m.signs) == 1 and m.is_closed() and m.euler_characteristic() == 0


def test_reversed_grid_flips_every_sign():
    for g in (build_grid("sphere3", (24, 24, 24)), build_grid("torus3", (24, 24, 24))):
        r = g.reversed()
        if g.kind == "sphere3":
            a, b = sphere_mesh(g, (0, 0, 0), 1.0), sphere_mesh(r, (0, 0, 0), 1.0)
        else:
            a, b = slab_mesh(g, 7 / 8, 1 / 8), slab_mesh(r, 7 / 8, 1 / 8)
        assert a.signs == tuple(-s for s in b.signs)


def test_flipped_and_refined():
    g = build_grid("torus3", (24, 24, 24))
    m = tube_mesh(g, diagonal_loop(), (1.0, 0.25), resolution=(16, 16))
    assert m.flipped().signs == tuple(-s for s in m.signs)
    r = m.refined()
    assert len(r.quads) == 4 * len(m.quads) and r.signs == m.signs and r.is_closed()


def test_sphere_poles_are_single_vertices():
    g = build_grid("sphere_circle", (16, 24, 24))
    m = slab_mesh(g, 0.25, 0.75)
    for c in (0, 1):
        idx = np.unique(m.quads[m.component == c])
        theta = m.vertices[idx, 0]
        assert np.sum(np.isclose(theta, 0)) == 1 and np.sum(np.isclose(theta, np.pi)) == 1
    assert m.is_closed() and m.euler_characteristic(0) == 2


def test_export_mesh_csv(tmp_path):
    g = build_grid("torus3", (8, 8, 8))
    m = sphere_mesh(g, (0, 0, 0.5), (1, 1, 0.2), resolution=(4, 8))
    p = tmp_path / "m.csv"
    export_mesh_csv(m, p)
    rows = p.read_text().splitlines()
    assert rows[0] == "kind,index,a,b,c,d,sign"
    assert sum(r.startswith("q,") for r in rows) == 32
