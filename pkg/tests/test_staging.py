"""Staged construction: activation, superposition and temporary supports."""

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boxgirder.bridge import conservation_error
from boxgirder.fem import BoundarySpec, FEModel, solve
from boxgirder.loads import body_force_gravity
from boxgirder.staging import (
    Constraint,
    LoadSpec,
    ScheduleError,
    ScheduleOptions,
    Stage,
    StageSchedule,
    default_schedule,
    run_staged_analysis,
    stage_log_rows,
)
from boxgirder.stress import recover_stress
from boxgirder.verification import CONCRETE, block_mesh
from conftest import MINI_LAYOUT

MATS = {0: CONCRETE}


def segmented_beam(n_seg=2, per_seg=2):
    """Cantilever along Z split into segments S0, S1, ... clamped at z = 0."""
    mesh = block_mesh(1.0, 1.0, float(n_seg * per_seg), 1, 1, n_seg * per_seg)
    zc = mesh.nodes[mesh.hexes][:, :, 2].mean(axis=1)
    seg = (zc // per_seg).astype(int)
    mesh = replace(mesh, hex_segment=seg, segment_names={i: f"S{i}" for i in range(n_seg)},
                   node_sets={"tip": np.flatnonzero(np.isclose(mesh.nodes[:, 2], n_seg * per_seg))})
    root = np.flatnonzero(np.isclose(mesh.nodes[:, 2], 0.0))
    return mesh, BoundarySpec({(int(n), d) for n in root for d in range(3)})


@pytest.fixture(scope="module")
def beam():
    return segmented_beam()


def one_shot(mesh, bcs, f):
    model = FEModel(mesh, MATS)
    sys_ = model.assemble(bcs=bcs)
    u = solve(sys_, f)
    return u, recover_stress(model, sys_.hex_mask, u)


def test_stress_free_activation(beam):
    mesh, bcs = beam
    sched = StageSchedule((Stage("s0", ("S0",), loads=(LoadSpec("gravity"),)),
                           Stage("s1", ("S1",))))
    r0, r1 = run_staged_analysis(mesh, MATS, bcs, sched)
    late = mesh.hex_segment == 1
    assert not r0.stress.gauss[late].any()
    # activation without load adds nothing, even though S1 shares nodes with a deformed S0
    assert not r1.stress.gauss[late].any()
    assert np.array_equal(r1.stress.gauss, r0.stress.gauss)


def test_single_stage_equals_one_shot(beam):
    mesh, bcs = beam
    sched = StageSchedule((Stage("all", ("S0", "S1"), loads=(LoadSpec("gravity"),)),))
    (r,) = run_staged_analysis(mesh, MATS, bcs, sched)
    u, field = one_shot(mesh, bcs, body_force_gravity(mesh, materials=MATS))
    scale = np.abs(field.gauss).max()
    assert np.abs(r.displacement_total - u).max() <= 1e-10 * np.abs(u).max()
    assert np.abs(r.stress.gauss - field.gauss).max() <= 1e-10 * scale


def test_two_stage_cantilever_superposition(beam):
    mesh, bcs = beam
    sched = StageSchedule((Stage("s0", ("S0",), loads=(LoadSpec("gravity"),)),
                           Stage("s1", ("S1",), loads=(LoadSpec("gravity"),))))
    r = run_staged_analysis(mesh, MATS, bcs, sched)
    # oracle: S0 alone under its weight, plus the full beam under the weight of S1
    model = FEModel(mesh, MATS)
    first = mesh.hex_segment == 0
    s0 = model.assemble({0}, None, bcs)
    u0 = solve(s0, body_force_gravity(mesh, first, materials=MATS))
    s1 = model.assemble({0, 1}, None, bcs)
    u1 = solve(s1, body_force_gravity(mesh, ~first, materials=MATS))
    expect = recover_stress(model, s0.hex_mask, u0) + recover_stress(model, s1.hex_mask, u1)
    assert np.abs(r[-1].stress.gauss - expect.gauss).max() <= 1e-10 * np.abs(expect.gauss).max()


@given(k=st.integers(2, 5))
@settings(max_examples=4)
def test_gravity_split_into_equal_stages(beam, k):
    mesh, bcs = beam
    stages = (Stage("a0", ("S0", "S1"), loads=(LoadSpec("gravity", 1.0 / k, segments="*"),)),) + tuple(
        Stage(f"a{i}", loads=(LoadSpec("gravity", 1.0 / k, segments="*"),)) for i in range(1, k))
    r = run_staged_analysis(mesh, MATS, bcs, StageSchedule(stages))
    _, field = one_shot(mesh, bcs, body_force_gravity(mesh, materials=MATS))
    assert np.abs(r[-1].stress.gauss - field.gauss).max() <= 1e-10 * np.abs(field.gauss).max()


def test_prop_and_release(beam):
    mesh, bcs = beam
    sched = StageSchedule(
        (Stage("cast", ("S0", "S1"), loads=(LoadSpec("gravity"),), add_constraints=("prop",)),
         Stage("release", release_constraints=("prop",))),
        {"prop": Constraint("prop", "tip", (1,))})
    cast, rel = run_staged_analysis(mesh, MATS, bcs, sched)
    assert abs(cast.reaction_increment[1::3]).sum() > 0
    u, field = one_shot(mesh, bcs, body_force_gravity(mesh, materials=MATS))
    assert np.abs(rel.displacement_total - u).max() <= 1e-8 * np.abs(u).max()
    assert np.abs(rel.stress.gauss - field.gauss).max() <= 1e-8 * np.abs(field.gauss).max()
    tip = 3 * mesh.node_sets["tip"] + 1
    assert np.abs(rel.reaction_total[tip]).max() <= 1e-8 * np.abs(cast.reaction_total[tip]).max()


def test_load_bookkeeping(beam):
    mesh, bcs = beam
    sched = StageSchedule((Stage("s0", ("S0",), loads=(LoadSpec("gravity"),)),
                           Stage("s1", ("S1",), loads=(LoadSpec("gravity"),))))
    r0, r1 = run_staged_analysis(mesh, MATS, bcs, sched)
    W = CONCRETE.rho * 9.8 * mesh.volume()
    assert r0.applied_total[1] == pytest.approx(-W / 2, rel=1e-12)
    assert r1.applied_total[1] == pytest.approx(-W, rel=1e-12)
    assert conservation_error(r1) < 1e-10
    rows = stage_log_rows([r0, r1])
    assert [row[2] for row in rows] == [1, 2]
    assert rows[1][3] == pytest.approx(W, rel=1e-12)


def test_categories_add_up(beam):
    mesh, bcs = beam
    f = np.zeros(3 * mesh.n_nodes)
    f[3 * mesh.node_sets["tip"] + 0] = 1e4
    sched = StageSchedule((Stage("s0", ("S0", "S1"), loads=(LoadSpec("gravity"), LoadSpec("nodal", category="extra",
                                                                                           vector=f))),))
    (r,) = run_staged_analysis(mesh, MATS, bcs, sched)
    assert list(r.stress_by_category) == ["dead", "extra"]
    both = r.stress_by_category["dead"] + r.stress_by_category["extra"]
    np.testing.assert_array_equal(both.gauss, r.stress.gauss)


def test_load_on_inactive_nodes_rejected(beam):
    mesh, bcs = beam
    f = np.zeros(3 * mesh.n_nodes)
    f[3 * mesh.node_sets["tip"] + 1] = 1.0
    sched = StageSchedule((Stage("s0", ("S0",), loads=(LoadSpec("nodal", vector=f),)),))
    with pytest.raises(ScheduleError, match="inactive nodes"):
        run_staged_analysis(mesh, MATS, bcs, sched)


# ---------------------------------------------------------------- validation


def test_release_of_unknown_constraint():
    sched = StageSchedule((Stage("a", ("S0",), release_constraints=("prop",)),), {"prop": Constraint("prop", "tip")})
    with pytest.raises(ScheduleError, match="never added"):
        sched.validate()


def test_double_activation_and_leftover_prop():
    sched = StageSchedule((Stage("a", ("S0",), add_constraints=("prop",)), Stage("b", ("S0",))),
                          {"prop": Constraint("prop", "tip")})
    with pytest.raises(ScheduleError) as exc:
        sched.validate()
    assert "already activated" in str(exc.value) and "left at the end" in str(exc.value)


def test_unknown_segment_against_mesh(beam):
    mesh, _ = beam
    with pytest.raises(ScheduleError, match="'S9' not in the mesh"):
        StageSchedule((Stage("a", ("S9",)),)).validate(mesh)


def test_unknown_load_kind():
    with pytest.raises(ScheduleError, match="unknown load kind"):
        LoadSpec("wind")


# ---------------------------------------------------------------- default schedule


def test_default_schedule_stage_count():
    assert len(default_schedule(MINI_LAYOUT).stages) == 5
    one = default_schedule(MINI_LAYOUT, ScheduleOptions(n_substages=1))
    assert [s.name for s in one.stages] == ["phase1", "cantilever_1", "closure", "pavement"]
    with pytest.raises(ScheduleError, match="n_substages"):
        default_schedule(MINI_LAYOUT, ScheduleOptions(n_substages=3))


def test_default_schedule_activates_every_segment():
    sched = default_schedule(MINI_LAYOUT)
    segs = [s for st in sched.stages for s in st.activate_segments]
    assert len(segs) == len(set(segs))
    girder = {s[0] for s in MINI_LAYOUT.segments()}
    assert girder <= set(segs)
    sched.validate()


def test_mini_bridge_stages(mini_analysis):
    res = mini_analysis.results
    assert [r.name for r in res] == ["phase1", "cantilever_1", "cantilever_2", "closure", "pavement"]
    counts = [len(r.active_segments) for r in res]
    assert counts == sorted(counts)
    for r in res:
        assert conservation_error(r) < 1e-8
        assert r.equilibrium < 1e-8
    fin = res[-1]
    total = fin.stress_by_category["dead"] + fin.stress_by_category["prestress"]
    np.testing.assert_array_equal(total.gauss, fin.stress.gauss)
    # the tendons are in tension and the scaffolds carry nothing once released
    assert np.all(fin.stress.truss > 0)
    model = mini_analysis.model
    for name in ("scaffold_1", "scaffold_2"):
        dofs = 3 * np.asarray(model.mesh.node_sets[name]) + 1
        dofs = np.setdiff1d(dofs, model.bcs.fixed_dofs())  # end bearings stay
        assert dofs.size and not fin.reaction_total[dofs].any()
