"""Swept girder and pier meshes, tendon embedding and mesh validation."""

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from boxgirder.elements import HEX_CORNERS, shape_functions
from boxgirder.mesh import (
    Mesh,
    MeshError,
    MeshResolution,
    SpanLayout,
    TendonLayout,
    add_tendons,
    embed_tendon,
    extrude_template,
    generate_girder_mesh,
    generate_pier_mesh,
    section_params_at,
    validate_mesh,
)
from boxgirder.section import HeightProfile, SectionParams, build_cross_section, section_properties
from boxgirder.verification import block_mesh
from conftest import MINI_LAYOUT, MINI_PROFILE, MINI_RESOLUTION

MID = SectionParams(22.5, 11.0, 3.5, 0.30, 0.32, 0.50, 0.20)
UNIT_CUBE = 0.5 * (HEX_CORNERS + 1.0)


def unit_cube_mesh():
    return Mesh(UNIT_CUBE.copy(), np.arange(8)[None], np.zeros(1, int), np.zeros(1, int), segment_names={0: "A"})


@pytest.fixture(scope="module")
def default_girder():
    return generate_girder_mesh(HeightProfile(12.5, 3.5, 96.0, 2.0, 1.5, 0.32, 0.5, 1.2, 10.0), MID, SpanLayout(),
                                MeshResolution(max_element_length=1.5))


@pytest.fixture(scope="module")
def mini_girder():
    return generate_girder_mesh(MINI_PROFILE, MID, MINI_LAYOUT, MINI_RESOLUTION)


def test_one_quad_one_division():
    m = extrude_template(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float), [[0, 1, 2, 3]], [0.0, 1.0])
    assert m.hexes.shape == (1, 8) and m.n_nodes == 8
    assert m.volume() == pytest.approx(1.0)


@given(nx=st.integers(1, 4), ny=st.integers(1, 4), n=st.integers(1, 5))
@settings(max_examples=20)
def test_extrusion_counts(nx, ny, n):
    m = block_mesh(1.0, 1.0, 1.0, nx, ny, n)
    assert len(m.hexes) == nx * ny * n
    assert m.n_nodes == (nx + 1) * (ny + 1) * (n + 1)


def test_extrusion_rejects_decreasing_stations():
    with pytest.raises(MeshError, match="strictly increasing"):
        extrude_template(np.zeros((4, 2)), [[0, 1, 2, 3]], [1.0, 0.0])


def test_default_midspan_depth(default_girder):
    z = 122.0 + 105.0
    nodes = default_girder.nodes
    sel = np.abs(nodes[:, 2] - z) < 1e-6
    assert sel.any()
    assert np.ptp(nodes[sel, 1]) == pytest.approx(3.5, abs=1e-9)
    assert nodes[sel, 1].max() == pytest.approx(0.0, abs=1e-12)  # deck at Y = 0


def test_default_root_depth(default_girder):
    z = 122.0 - 6.0  # zero-block face
    sel = np.abs(default_girder.nodes[:, 2] - z) < 1e-6
    assert np.ptp(default_girder.nodes[sel, 1]) == pytest.approx(12.5, abs=1e-9)


def test_default_girder_valid(default_girder):
    rep = validate_mesh(default_girder)
    assert rep.ok, rep.summary()
    assert rep.min_jacobian > 0


def test_segments_partition_girder(mini_girder):
    names = {mini_girder.segment_names[int(s)] for s in np.unique(mini_girder.hex_segment)}
    assert names == {s[0] for s in MINI_LAYOUT.segments()}
    for name in ("deck", "end_left", "end_right"):
        assert len(mini_girder.face_sets[name]) > 0


def test_girder_volume_matches_section_integral(mini_girder):
    layout = replace(MINI_LAYOUT, diaphragm_thickness=0.0)
    mesh = generate_girder_mesh(MINI_PROFILE, MID, layout, MINI_RESOLUTION)
    z = np.linspace(0, layout.total_length, 4001)
    A = [section_properties(build_cross_section(section_params_at(v, layout, MINI_PROFILE, MID))).A for v in z]
    exact = np.trapezoid(A, z)
    assert mesh.volume() == pytest.approx(exact, rel=0.01)


def test_girder_volume_converges(mini_girder):
    layout = replace(MINI_LAYOUT, diaphragm_thickness=0.0)
    z = np.linspace(0, layout.total_length, 4001)
    A = [section_properties(build_cross_section(section_params_at(v, layout, MINI_PROFILE, MID))).A for v in z]
    exact = np.trapezoid(A, z)
    err = [abs(generate_girder_mesh(MINI_PROFILE, MID, layout, replace(MINI_RESOLUTION, max_element_length=h))
               .volume() - exact) for h in (4.0, 2.0, 1.0)]
    assert err[0] > err[1] > err[2]


def test_mesh_regeneration_bit_identical():
    a = generate_girder_mesh(MINI_PROFILE, MID, MINI_LAYOUT, MINI_RESOLUTION)
    b = generate_girder_mesh(MINI_PROFILE, MID, MINI_LAYOUT, MINI_RESOLUTION)
    assert np.array_equal(a.nodes, b.nodes) and np.array_equal(a.hexes, b.hexes)
    assert np.array_equal(a.hex_segment, b.hex_segment)


def test_resolution_below_minimum():
    with pytest.raises(MeshError, match="n_flange"):
        generate_girder_mesh(MINI_PROFILE, MID, MINI_LAYOUT, replace(MINI_RESOLUTION, n_flange=3))
    with pytest.raises(MeshError, match="min_divisions_per_segment"):
        MeshResolution(min_divisions_per_segment=2).check()


# ---------------------------------------------------------------- piers


def test_unit_solid_pier():
    m = generate_pier_mesh(1.0, (1.0, 1.0), n_height=1, n_plan=1)
    assert len(m.hexes) == 1 and m.n_nodes == 8
    assert m.volume() == pytest.approx(1.0)


def test_hollow_pier_volume():
    H, lz, lx, w = 50.0, 6.0, 11.0, 0.8
    m = generate_pier_mesh(H, (lz, lx), wall=w, n_height=5)
    exact = H * (lz * lx - (lz - 2 * w) * (lx - 2 * w))
    assert m.volume() == pytest.approx(exact, rel=0.005)
    assert validate_mesh(m).ok


def test_zero_height_pier():
    with pytest.raises(MeshError, match="height"):
        generate_pier_mesh(0.0, (1.0, 1.0))


# ---------------------------------------------------------------- embedding


def test_centroid_weights():
    m = unit_cube_mesh()
    _, _, _, cons = embed_tendon(m, TendonLayout([np.array([[0.5, 0.5, 0.5], [0.5, 0.5, 0.9]])]), 1)
    np.testing.assert_allclose(cons[0].weights, 0.125, atol=1e-12)


def test_corner_weights():
    m = unit_cube_mesh()
    _, _, _, cons = embed_tendon(m, TendonLayout([np.array([[1.0, 1.0, 1.0], [0.5, 0.5, 0.5]])]), 1)
    w = cons[0].weights
    assert w[6] == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(np.delete(w, 6), 0.0, atol=1e-12)


distorted = arrays(np.float64, (8, 3), elements=st.floats(-0.15, 0.15))


@given(d=distorted, nat=arrays(np.float64, 3, elements=st.floats(-0.95, 0.95)))
@settings(max_examples=60)
def test_embedding_reproduces_point(d, nat):
    coords = UNIT_CUBE + d
    m = Mesh(coords, np.arange(8)[None], np.zeros(1, int), np.zeros(1, int))
    p = shape_functions(nat) @ coords
    q_nat = nat.copy()
    q_nat[2] += -0.5 if nat[2] > 0 else 0.5
    q = shape_functions(q_nat) @ coords
    _, _, _, cons = embed_tendon(m, TendonLayout([np.array([p, q])]), 1)
    w = cons[0].weights
    assert np.linalg.norm(w @ coords - p) <= 1e-9
    assert w.sum() == pytest.approx(1.0, abs=1e-10)
    # rigid translation of the host moves the embedded point identically
    t = np.array([0.3, -2.0, 1.1])
    assert np.linalg.norm(w @ (coords + t) - (p + t)) <= 1e-9


def test_truss_area_and_divisions():
    m = block_mesh(1, 1, 4, 1, 1, 4)
    lay = TendonLayout([np.array([[0.5, 0.5, 0.1], [0.5, 0.5, 3.9]])], strands_per_tendon=12)
    m2 = add_tendons(m, lay, 5, "T")
    assert len(m2.trusses) == 5
    np.testing.assert_allclose(m2.truss_area, 12 * 140e-6)
    assert validate_mesh(m2).ok


def test_point_outside_mesh_reported():
    m = unit_cube_mesh()
    with pytest.raises(MeshError, match="outside the mesh"):
        embed_tendon(m, TendonLayout([np.array([[0.5, 0.5, 0.5], [0.5, 0.5, 1.5]])]), 2)


def test_strand_count_positive():
    with pytest.raises(MeshError):
        TendonLayout([], strands_per_tendon=0)


# ---------------------------------------------------------------- validation


def test_unit_cube_report():
    rep = validate_mesh(unit_cube_mesh())
    assert rep.ok
    assert rep.min_jacobian == pytest.approx(0.125)


def test_swapped_nodes_flagged():
    m = unit_cube_mesh()
    bad = replace(m, hexes=m.hexes[:, [1, 0, 2, 3, 4, 5, 6, 7]])
    rep = validate_mesh(bad)
    assert not rep.ok and rep.bad_jacobian == [0]
    assert rep.min_jacobian < 0


def test_orphan_node_listed():
    m = unit_cube_mesh()
    rep = validate_mesh(replace(m, nodes=np.vstack([m.nodes, [[5.0, 5.0, 5.0]]])))
    assert not rep.ok and rep.orphan_nodes == [8]


def test_duplicate_nodes_listed():
    m = block_mesh(1, 1, 2, 1, 1, 2)
    # detach the second hex so its lower face duplicates the first hex's top face
    nodes = np.vstack([m.nodes, m.nodes[m.hexes[1, :4]]])
    hexes = m.hexes.copy()
    hexes[1, :4] = np.arange(m.n_nodes, m.n_nodes + 4)
    rep = validate_mesh(replace(m, nodes=nodes, hexes=hexes))
    assert len(rep.duplicate_nodes) == 4 and not rep.ok
