"""Load vectors and stress recovery."""

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boxgirder.elements import Material
from boxgirder.fem import BoundarySpec, FEModel, solve
from boxgirder.loads import (
    body_force_gravity,
    deck_point_loads,
    face_areas,
    surface_pressure,
    thermal_strain_load,
)
from boxgirder.mesh import FACE_ETA_PLUS, TendonLayout, add_tendons
from boxgirder.stress import SZZ, recover_stress
from boxgirder.verification import CONCRETE, block_mesh

STRAND = Material(1.95e11, 0.3, 7850.0, 2e-5)
# fully restrained strand: E * alpha * |dT| with the cooling constants
COOLING_STRESS = 1.95e11 * 2e-5 * 370.0  # 1.443e9 Pa


def top_faces(mesh):
    """Faces on Y = max (the local eta+ face of the swept block)."""
    ymax = mesh.nodes[:, 1].max()
    hexes = np.flatnonzero(np.isclose(mesh.nodes[mesh.hexes][:, :, 1].max(axis=1), ymax))
    return np.column_stack([hexes, np.full(hexes.size, FACE_ETA_PLUS)])


def test_unit_cube_gravity():
    mesh = block_mesh(1, 1, 1, 1, 1, 1)
    f = body_force_gravity(mesh, rho={0: 1000.0}, g=9.8)
    assert f[1::3].sum() == pytest.approx(-9800.0, rel=1e-14)
    np.testing.assert_allclose(f[1::3], -9800.0 / 8, rtol=1e-14)
    assert not f[0::3].any() and not f[2::3].any()


@given(lx=st.floats(0.2, 5), ly=st.floats(0.2, 5), lz=st.floats(0.2, 5), n=st.integers(1, 3))
def test_gravity_total_is_weight(lx, ly, lz, n):
    mesh = block_mesh(lx, ly, lz, n, n, n)
    f = body_force_gravity(mesh, rho={0: 2500.0}, g=9.8)
    assert -f[1::3].sum() == pytest.approx(2500 * 9.8 * mesh.volume(), rel=1e-10)


def test_inactive_hexes_carry_no_weight():
    mesh = block_mesh(1, 1, 2, 1, 1, 2)
    f = body_force_gravity(mesh, active=np.array([True, False]), rho={0: 1000.0})
    assert f[1::3].sum() == pytest.approx(-9800.0)
    far = np.flatnonzero(np.isclose(mesh.nodes[:, 2], 2.0))
    assert not f[3 * far + 1].any()


def test_gravity_from_materials():
    mesh = block_mesh(1, 1, 1, 1, 1, 1)
    f = body_force_gravity(mesh, materials={0: CONCRETE})
    assert f.sum() == pytest.approx(-2500 * 9.8)


def test_unit_face_pressure():
    mesh = block_mesh(1, 1, 1, 1, 1, 1)
    f = surface_pressure(mesh, top_faces(mesh), 4801.0)
    assert f[1::3].sum() == pytest.approx(-4801.0, rel=1e-14)
    assert np.abs(f[0::3]).max() < 1e-12 and np.abs(f[2::3]).max() < 1e-12


def test_zero_pressure_is_zero_vector():
    mesh = block_mesh(1, 1, 1, 1, 1, 1)
    assert not surface_pressure(mesh, top_faces(mesh), 0.0).any()


def test_pressure_additive_over_faces():
    mesh = block_mesh(1, 1, 2, 1, 1, 2)
    faces = top_faces(mesh)
    both = surface_pressure(mesh, faces, 1e3)
    parts = surface_pressure(mesh, faces[:1], 1e3) + surface_pressure(mesh, faces[1:], 1e3)
    np.testing.assert_allclose(both, parts, rtol=0, atol=1e-12)
    assert both[1::3].sum() == pytest.approx(-2e3)
    assert face_areas(mesh, faces).sum() == pytest.approx(2.0)


def test_point_loads_total_and_off_deck():
    mesh = block_mesh(2, 1, 4, 2, 1, 4)
    faces = top_faces(mesh)
    f = deck_point_loads(mesh, faces, [[0.3, 1.7], [1.5, 3.9]], [1e4, 2e4])
    assert f[1::3].sum() == pytest.approx(-3e4)
    with pytest.raises(ValueError, match="off the deck"):
        deck_point_loads(mesh, faces, [[2.5, 1.0]], [1.0])


# ---------------------------------------------------------------- thermal strain


@pytest.fixture(scope="module")
def strand_block():
    mesh = block_mesh(1, 1, 4, 1, 1, 4)
    mesh = add_tendons(mesh, TendonLayout([np.array([[0.5, 0.5, 0.2], [0.5, 0.5, 3.8]])], 22, 140e-6), 6, "T")
    return mesh, FEModel(mesh, {0: CONCRETE, 1: STRAND})


def test_zero_temperature_change(strand_block):
    mesh, model = strand_block
    assert not thermal_strain_load(model, np.ones(len(mesh.trusses), bool), 2e-5, 0.0).any()


def test_cooling_load_self_equilibrated(strand_block):
    mesh, model = strand_block
    f = thermal_strain_load(model, np.ones(len(mesh.trusses), bool), 2e-5, -370.0)
    np.testing.assert_allclose(f.reshape(-1, 3).sum(axis=0), 0.0, atol=1e-6)
    assert np.abs(f).max() > 1e5


def test_fully_restrained_strand_stress(strand_block):
    mesh, model = strand_block
    hosts = np.unique(mesh.hexes)
    bcs = BoundarySpec({(n, d) for n in hosts for d in range(3)})
    sys_ = model.assemble(bcs=bcs)
    tm = np.ones(len(mesh.trusses), bool)
    u = solve(sys_, thermal_strain_load(model, tm, 2e-5, -370.0))
    field = recover_stress(model, sys_.hex_mask, u, tm, -370.0)
    np.testing.assert_allclose(field.truss, COOLING_STRESS, rtol=1e-10)
    assert COOLING_STRESS == pytest.approx(1.443e9, rel=1e-12)


def test_cooled_strand_in_free_block_loses_some_stress(strand_block):
    mesh, model = strand_block

    def at(p):
        return int(np.flatnonzero(np.all(np.isclose(mesh.nodes, p), axis=1))[0])

    o, x, y = at([0, 0, 0]), at([1, 0, 0]), at([0, 1, 0])
    bcs = BoundarySpec({(o, 0), (o, 1), (o, 2), (x, 1), (x, 2), (y, 2)})
    sys_ = model.assemble(bcs=bcs)
    tm = np.ones(len(mesh.trusses), bool)
    u = solve(sys_, thermal_strain_load(model, tm, 2e-5, -370.0))
    field = recover_stress(model, sys_.hex_mask, u, tm, -370.0)
    assert np.all(field.truss > 0) and np.all(field.truss < COOLING_STRESS)
    # the concrete takes the matching compression
    P = field.truss.mean() * mesh.truss_area[0]
    mid = np.flatnonzero(np.isclose(mesh.nodes[mesh.hexes][:, :, 2].mean(axis=1), 2.5))
    assert field.gauss[mid, :, SZZ].mean() == pytest.approx(-P, rel=0.02)


# ---------------------------------------------------------------- stress recovery


def test_pure_bending_slope():
    L, b, h = 8.0, 0.5, 1.0
    # elements kept near cubic; long thin hex8 lock in bending and under-read the slope
    mesh = block_mesh(b, h, L, 2, 8, 64)
    model = FEModel(mesh, {0: replace(CONCRETE, nu=0.0)})
    M = 1e6
    I = b * h ** 3 / 12
    f = np.zeros(3 * mesh.n_nodes)
    for z, sgn in ((0.0, -1.0), (L, 1.0)):
        nodes = np.flatnonzero(np.isclose(mesh.nodes[:, 2], z))
        y = mesh.nodes[nodes, 1]
        wy = np.where(np.isclose(y, 0) | np.isclose(y, h), 0.5, 1.0) * h / 8
        wx = np.where(np.isclose(mesh.nodes[nodes, 0], 0) | np.isclose(mesh.nodes[nodes, 0], b), 0.5, 1.0) * b / 2
        f[3 * nodes + 2] += sgn * M * (y - h / 2) / I * wx * wy
    c = np.flatnonzero(np.all(np.isclose(mesh.nodes, [0, h / 2, L / 2]), axis=1))[0]
    c2 = np.flatnonzero(np.all(np.isclose(mesh.nodes, [b, h / 2, L / 2]), axis=1))[0]
    c3 = np.flatnonzero(np.all(np.isclose(mesh.nodes, [0, h / 2, 0]), axis=1))[0]
    bcs = BoundarySpec({(c, 0), (c, 1), (c, 2), (c2, 1), (c2, 2), (c3, 1)})
    u = solve(model.assemble(bcs=bcs), f)
    end = np.flatnonzero(np.isclose(mesh.nodes[:, 2], L))
    M_applied = f[3 * end + 2] @ (mesh.nodes[end, 1] - h / 2)
    field = recover_stress(model, np.ones(len(mesh.hexes), bool), u)
    nodal = field.nodal(mesh)
    mid = np.flatnonzero(np.isclose(mesh.nodes[:, 2], L / 2))
    slope = np.polyfit(mesh.nodes[mid, 1], nodal[mid, SZZ], 1)[0]
    assert slope == pytest.approx(M_applied / I, rel=0.02)


def test_nodal_average_of_uniform_field():
    from boxgirder.verification import patch_test

    f = patch_test(1e6)
    mesh = block_mesh(1, 1, 1, 2, 2, 2)
    np.testing.assert_allclose(f.nodal(mesh)[:, SZZ], 1e6, rtol=1e-9)
