"""
The three-span continuous rigid-frame bridge: girder, piers, tendons,
supports, construction schedule, section cuts and the analysis drivers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .elements import Material
from .fem import BoundarySpec, FEModel, reactions, solve
from .mesh import (
    CONCRETE,
    STRAND,
    Mesh,
    MeshError,
    MeshResolution,
    SpanLayout,
    TendonLayout,
    add_tendons,
    generate_girder_mesh,
    generate_pier_mesh,
    merge_meshes,
    validate_mesh,
)
from .section import HeightProfile, SectionParams
from .shear_lag import ShearLagProfile, girder_cut, girder_nodal_stress, shear_lag_profile
from .staging import (
    CONTINUITY_GROUPS,
    ScheduleOptions,
    StageResult,
    StageSchedule,
    cantilever_group,
    default_schedule,
    run_staged_analysis,
)
from .stress import recover_stress

log = logging.getLogger(__name__)

CUT_IDS = ("side_L4", "side_L2", "block0", "main_L8", "main_L4", "main_L2")


@dataclass(frozen=True)
class TendonOptions:
    """Lumped tendon layout.

    Each line stands for several tendons of ``strands_per_tendon`` strands.
    Transverse positions of bottom-plate lines are fractions of the clear
    half-width between webs; lengths are fractions of the span they sit in.
    """

    strands_per_tendon: int = 22
    strand_area: float = 140e-6
    zero_block_tendons: int = 4
    tendons_per_pair: int = 16
    top_offsets: tuple = (-0.75, 0.75)  # about each web centreline
    top_depth: float = 0.15  # below the deck surface
    anchor_inset: float = 0.25
    mid_bottom: int = 40
    mid_bottom_x: tuple = (0.16, 0.38, 0.60, 0.80)
    mid_bottom_half: tuple = (0.190, 0.162, 0.133, 0.105)  # of the main span, about mid-span
    mid_top: int = 2
    mid_top_x: float = 2.5
    mid_top_half: float = 0.143
    side_bottom: int = 20
    side_bottom_x: tuple = (0.30, 0.70)
    side_bottom_reach: tuple = (0.148, 0.213)  # of the side span, past the side closure
    side_start: float = 2.0  # from the abutment
    max_truss_length: float = 1.5

    def __post_init__(self):
        if self.strands_per_tendon <= 0 or self.strand_area <= 0:
            raise ValueError("tendon strands and strand area must be > 0")
        if len(self.mid_bottom_x) != len(self.mid_bottom_half):
            raise ValueError("mid_bottom_x and mid_bottom_half differ in length")
        if len(self.side_bottom_x) != len(self.side_bottom_reach):
            raise ValueError("side_bottom_x and side_bottom_reach differ in length")


@dataclass(frozen=True)
class BridgeConfig:
    params: SectionParams = SectionParams(22.5, 11.0, 3.5, 0.30, 0.32, 0.50, 0.20)
    profile: HeightProfile = HeightProfile(12.5, 3.5, 96.0, 2.0, 1.50, 0.32, 0.50, 1.20, 10.0)
    layout: SpanLayout = SpanLayout()
    resolution: MeshResolution = MeshResolution(max_element_length=1.5, n_pier_h=10)
    concrete: Material = Material(3.5e10, 0.2, 2500.0)
    strand: Material = Material(1.95e11, 0.3, 7850.0, 2e-5)
    tendons: TendonOptions = TendonOptions()
    schedule: ScheduleOptions = ScheduleOptions()
    bearing_spring: float = 2e7
    pier_wall: float = 0.8
    piers: bool = True
    g: float = 9.8

    def materials(self) -> dict:
        return {CONCRETE: self.concrete, STRAND: self.strand}


@dataclass
class BridgeModel:
    config: BridgeConfig
    mesh: Mesh
    bcs: BoundarySpec
    schedule: StageSchedule
    cuts: dict  # cut id -> z

    @property
    def materials(self) -> dict:
        return self.config.materials()


def cut_stations(layout: SpanLayout) -> dict:
    """Stations of the six key sections (side-span quarter and half, 5 m off
    the pier face, main-span eighth, quarter and half)."""
    s0, s1, _ = layout.spans
    p1 = float(layout.pier_z[0])
    return {
        "side_L4": 0.25 * s0,
        "side_L2": 0.5 * s0,
        "block0": p1 + layout.pier_plan[0] / 2 + 5.0,
        "main_L8": p1 + s1 / 8,
        "main_L4": p1 + s1 / 4,
        "main_L2": p1 + s1 / 2,
    }


# ------------------------------------------------------------------ tendons


def _bottom_line(mesh: Mesh, x: float, z0: float, z1: float) -> np.ndarray:
    gi = mesh.girder
    st = gi.stations
    zs = np.unique(np.concatenate([[z0, z1], st[(st > z0) & (st < z1)]]))
    pts = []
    for z in zs:
        p = gi.params_at(z)
        pts.append((x, -p.h + 0.5 * p.t_bot, z))
    return np.array(pts)


def tendon_layouts(mesh: Mesh, cfg: BridgeConfig) -> list[tuple[str, TendonLayout]]:
    """Named tendon groups for the mesh's girder."""
    o, lay, p = cfg.tendons, cfg.layout, cfg.params
    strands, area = o.strands_per_tendon, o.strand_area
    xw = p.B_bot / 2 - p.t_web / 2
    xi = p.B_bot / 2 - p.t_web
    top_x = sorted(s * (xw + d) for s in (-1, 1) for d in o.top_offsets)
    L0, seg, n = lay.zero_block_length, lay.arm_length / lay.segments_per_arm, lay.segments_per_arm
    out = []

    def lumped(polys, count):
        per_line = count / len(polys)
        return TendonLayout(polys, strands_per_tendon=int(round(per_line * strands)), strand_area=area)

    for pier, zp in enumerate(lay.pier_z, start=1):
        for k in range(0, n + 1):
            count = o.zero_block_tendons if k == 0 else o.tendons_per_pair
            if count <= 0:
                continue
            half = L0 / 2 + k * seg - o.anchor_inset
            polys = [np.array([(x, -o.top_depth, zp - half), (x, -o.top_depth, zp + half)]) for x in top_x]
            out.append((cantilever_group(pier, k), lumped(polys, count)))

    p1 = lay.pier_z[0]
    zm = p1 + lay.spans[1] / 2
    if o.mid_bottom > 0:
        polys = [_bottom_line(mesh, s * f * xi, zm - h * lay.spans[1], zm + h * lay.spans[1])
                 for f, h in zip(o.mid_bottom_x, o.mid_bottom_half) for s in (-1, 1)]
        mid = lumped(polys, o.mid_bottom)
        if o.mid_top > 0:
            tl = o.mid_top_half * lay.spans[1]
            tops = [np.array([(s * o.mid_top_x, -o.top_depth, zm - tl), (s * o.mid_top_x, -o.top_depth, zm + tl)])
                    for s in (-1, 1)]
            out.append((CONTINUITY_GROUPS[1], lumped(tops, o.mid_top)))
        out.append((CONTINUITY_GROUPS[1], mid))
    if o.side_bottom > 0:
        se = lay.side_end_length + lay.closure_length
        L = lay.total_length
        for name, sign in ((CONTINUITY_GROUPS[0], 1), (CONTINUITY_GROUPS[2], -1)):
            polys = []
            for f, r in zip(o.side_bottom_x, o.side_bottom_reach):
                za, zb = o.side_start, se + r * lay.spans[0]
                z0, z1 = (za, zb) if sign > 0 else (L - zb, L - za)
                polys += [_bottom_line(mesh, s * f * xi, z0, z1) for s in (-1, 1)]
            out.append((name, lumped(polys, o.side_bottom)))
    return out


def _add_groups(mesh: Mesh, groups, cfg: BridgeConfig) -> Mesh:
    girder = np.zeros(len(mesh.hexes), bool)
    ch = mesh.girder.cell_hex
    girder[ch[ch >= 0]] = True
    for name, lay in groups:
        lengths = [float(np.linalg.norm(np.diff(pl, axis=0), axis=1).sum()) for pl in lay.polylines]
        divs = [max(1, int(np.ceil(L / cfg.tendons.max_truss_length))) for L in lengths]
        mesh = add_tendons(mesh, lay, divs, name, host_mask=girder, material=STRAND)
    return mesh


# -------------------------------------------------------------------- model


def _pier(mesh: Mesh, cfg: BridgeConfig, zp: float, name: str) -> Mesh:
    gi = mesh.girder
    lay = cfg.layout
    lz, lx = lay.pier_plan
    k = gi.interval(zp)
    p = gi.station_params[k]
    tpl = gi.template
    xl = tpl.x_line_params(p)
    x_lines = xl[(xl >= -lx / 2 - 1e-9) & (xl <= lx / 2 + 1e-9)]
    if abs(x_lines[0] + lx / 2) > 1e-6 or abs(x_lines[-1] - lx / 2) > 1e-6:
        raise MeshError("pier width must equal the bottom-plate width so the pier top shares girder nodes")
    st = gi.stations
    z_lines = st[(st >= zp - lz / 2 - 1e-9) & (st <= zp + lz / 2 + 1e-9)] - zp
    # walls snap to the web bands across and to the diaphragm lines along the bridge
    wx = p.t_web
    wz = lay.diaphragm_thickness if lay.diaphragm_thickness > 0 else cfg.pier_wall
    nh = max(cfg.resolution.n_pier_h, 1)
    return generate_pier_mesh(lay.pier_height, (lz, lx), wall=(wx, wz), x_lines=x_lines, z_lines=z_lines,
                              top=(0.0, -p.h, zp), n_height=nh)


def build_bridge(cfg: BridgeConfig | None = None) -> BridgeModel:
    cfg = cfg or BridgeConfig()
    lay = cfg.layout
    mesh = generate_girder_mesh(cfg.profile, cfg.params, lay, cfg.resolution)
    gi = mesh.girder
    if cfg.piers:
        for i, zp in enumerate(lay.pier_z, start=1):
            mesh = merge_meshes(mesh, _pier(mesh, cfg, zp, f"P{i}"), prefix=f"P{i}_")
    else:
        # keep the schedule's pier segment names resolvable
        names = dict(mesh.segment_names)
        names.update({max(names) + 1: "P1_PIER", max(names) + 2: "P2_PIER"})
        mesh = replace(mesh, segment_names=names)
    mesh = replace(mesh, girder=gi)
    mesh = _add_groups(mesh, tendon_layouts(mesh, cfg), cfg)

    ng = gi.node_grid
    st = gi.stations
    node_sets = dict(mesh.node_sets)
    se = lay.side_end_length
    L = lay.total_length
    for name, ks in (("scaffold_1", np.flatnonzero(st <= se + 1e-9)),
                     ("scaffold_2", np.flatnonzero(st >= L - se - 1e-9))):
        ids = ng[ks, :, 0]
        node_sets[name] = np.unique(ids[ids >= 0])
    xk = gi.template.x_kind()
    for name, z in (("scaffold_1_long", se / 2), ("scaffold_2_long", L - se / 2)):
        k = int(np.argmin(np.abs(st - z)))
        ids = [ng[k, i, 0] for i in range(len(xk) + 1)
               if ((i < len(xk) and xk[i].startswith("web")) or (i > 0 and xk[i - 1].startswith("web")))]
        node_sets[name] = np.array(sorted(i for i in ids if i >= 0))
    p_end = gi.station_params[0]
    xw = p_end.B_bot / 2 - p_end.t_web / 2
    fixed, springs = set(), []
    for side in ("bearing_left", "bearing_right"):
        ids = np.asarray(mesh.node_sets[side])
        fixed |= {(int(n), 1) for n in ids}
        for s in (-1, 1):
            n = int(ids[np.argmin(np.abs(mesh.nodes[ids, 0] - s * xw))])
            springs.append((n, 0, cfg.bearing_spring))
        node_sets[side + "_springs"] = np.array(sorted(sp[0] for sp in springs[-2:]))
    if cfg.piers:
        for i in (1, 2):
            fixed |= {(int(n), d) for n in mesh.node_sets[f"P{i}_pier_bottom"] for d in range(3)}
    else:
        # stand-in for the piers: root soffit nodes fixed
        for zp in lay.pier_z:
            ks = np.flatnonzero(np.abs(st - zp) <= lay.pier_plan[0] / 2 + 1e-9)
            ids = ng[ks, :, 0]
            fixed |= {(int(n), d) for n in ids[ids >= 0] for d in range(3)}
    mesh = replace(mesh, node_sets=node_sets)
    bcs = BoundarySpec(fixed, springs)
    schedule = default_schedule(lay, cfg.schedule, groups=set(mesh.group_names.values()))
    return BridgeModel(cfg, mesh, bcs, schedule, cut_stations(lay))


# ----------------------------------------------------------------- analyses


@dataclass
class StagedAnalysis:
    model: BridgeModel
    results: list
    profiles: dict = field(default_factory=dict)  # variant -> {cut id -> ShearLagProfile}

    @property
    def final(self) -> StageResult:
        return self.results[-1]


def profiles_for(mesh: Mesh, field_, cuts: dict) -> dict:
    nodal = girder_nodal_stress(mesh, field_)
    return {cid: shear_lag_profile(field_, girder_cut(mesh, z, cid), mesh, nodal=nodal) for cid, z in cuts.items()}


def run_staged(model: BridgeModel, check_mesh: bool = True, method: str = "direct") -> StagedAnalysis:
    """Staged construction of the bridge and the shear-lag profiles of the
    completed state, with and without the prestress category."""
    if check_mesh:
        rep = validate_mesh(model.mesh)
        if not rep.ok:
            raise MeshError("mesh failed validation:\n" + rep.summary())
    res = run_staged_analysis(model.mesh, model.materials, model.bcs, model.schedule, g=model.config.g,
                              history="final", method=method)
    fin = res[-1]
    out = StagedAnalysis(model, res)
    out.profiles["total"] = profiles_for(model.mesh, fin.stress, model.cuts)
    if "dead" in fin.stress_by_category and len(fin.stress_by_category) > 1:
        out.profiles["dead"] = profiles_for(model.mesh, fin.stress_by_category["dead"], model.cuts)
    return out


def completed_system(model: BridgeModel):
    """FE model and assembled system of the completed bridge (all parts active)."""
    fem = FEModel(model.mesh, model.materials)
    return fem, fem.assemble(None, None, model.bcs)


@dataclass
class LiveLoadResult:
    profiles: dict  # cut id -> ShearLagProfile
    displacement: np.ndarray
    field: object
    applied: np.ndarray  # (Fx, Fy, Fz)
    reaction: np.ndarray

    @property
    def conservation(self) -> float:
        scale = float(np.linalg.norm(self.applied))
        return float(np.linalg.norm(self.reaction + self.applied) / scale) if scale > 0 else 0.0


def run_live_load(model: BridgeModel, case, check_mesh: bool = True, stage: int | None = None) -> LiveLoadResult:
    """Vehicle effect on the completed bridge, profiled at every key section.

    Tendons stay inactive, so the result is the pure live-load response.
    A station that is not one of the key sections gets its own profile.
    """
    from .live_load import build_live_load

    if check_mesh:
        rep = validate_mesh(model.mesh)
        if not rep.ok:
            raise MeshError("mesh failed validation:\n" + rep.summary())
    fem = FEModel(model.mesh, model.materials)
    sys_ = fem.assemble(None, [], model.bcs)
    F = build_live_load(case, model.mesh, g=model.config.g, stage=stage)
    u = solve(sys_, F)
    rf, rs = reactions(sys_, u, F)
    R = np.zeros(3 * model.mesh.n_nodes)
    R[sys_.fixed_dofs] += rf
    np.add.at(R, sys_.spring_dofs, rs)
    fld = recover_stress(fem, sys_.hex_mask, u)
    cuts = dict(model.cuts)
    if not any(abs(z - case.station) < 1e-9 for z in cuts.values()):
        cuts["station"] = case.station
    prof = profiles_for(model.mesh, fld, cuts)
    return LiveLoadResult(prof, u, fld, F.reshape(-1, 3).sum(axis=0), R.reshape(-1, 3).sum(axis=0))


def max_lambda(profile: ShearLagProfile, plates=("top", "bottom", "cantilever_left", "cantilever_right")) -> float:
    vals = [profile.plate_stats(p)[0] for p in plates if (profile.plate == p).any()]
    vals = [v for v in vals if np.isfinite(v)]
    return max(vals) if vals else float("nan")


def min_lambda(profile: ShearLagProfile, plates=("top", "bottom", "cantilever_left", "cantilever_right")) -> float:
    vals = [profile.plate_stats(p)[1] for p in plates if (profile.plate == p).any()]
    vals = [v for v in vals if np.isfinite(v)]
    return min(vals) if vals else float("nan")


def conservation_error(result: StageResult) -> float:
    """Relative mismatch between the applied load resultant and the support reactions."""
    R = result.reaction_total.reshape(-1, 3).sum(axis=0)
    F = np.asarray(result.applied_total, float)
    scale = float(np.linalg.norm(F))
    return float(np.linalg.norm(R + F) / scale) if scale > 0 else float(np.linalg.norm(R))
