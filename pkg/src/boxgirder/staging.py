"""
Staged construction by incremental superposition.

Each stage assembles the currently active elements with the current set of
supports, solves only the load added in that stage and adds the resulting
stress increment to the elements active in that stage.  Elements therefore
join the structure stress free.  Releasing a temporary support applies its
accumulated reaction, with reversed sign, to the structure without that
support.

Loads are grouped in categories (``"dead"``, ``"prestress"``, ...), solved
as separate right-hand sides, so per-category states come out of one run.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .fem import BoundarySpec, FEModel, SolverError, equilibrium_error, reactions, solve
from .loads import body_force_gravity, surface_pressure, thermal_strain_load
from .mesh import Mesh, SpanLayout
from .stress import StressField, recover_stress

log = logging.getLogger(__name__)

ALL = "*"


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class LoadSpec:
    """One load added in a stage.

    kind
        ``"gravity"`` (``value`` scales g), ``"pressure"`` (Pa on ``face_set``),
        ``"thermal"`` (temperature change of tendon ``groups``) or ``"nodal"``
        (explicit global ``vector``).
    segments
        Segments whose elements carry a gravity or pressure load.  ``None``
        means the segments activated in the same stage, ``"*"`` all active.
    """

    kind: str
    value: float = 1.0
    category: str = "dead"
    face_set: str = "deck"
    segments: tuple | str | None = None
    groups: tuple = ()
    vector: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("gravity", "pressure", "thermal", "nodal"):
            raise ScheduleError(f"unknown load kind {self.kind!r}")
        if self.kind == "nodal" and self.vector is None:
            raise ScheduleError("nodal load needs a vector")
        if self.kind == "thermal" and not self.groups:
            raise ScheduleError("thermal load needs tendon groups")


@dataclass(frozen=True)
class Constraint:
    """Temporary support: ``dofs`` fixed on a named node set (or explicit nodes)."""

    name: str
    node_set: str | None = None
    dofs: tuple = (1,)
    nodes: tuple | None = None

    def resolve(self, mesh: Mesh) -> np.ndarray:
        if self.nodes is not None:
            ids = np.asarray(self.nodes, int)
        else:
            if self.node_set not in mesh.node_sets:
                raise ScheduleError(f"constraint {self.name!r}: unknown node set {self.node_set!r}")
            ids = np.asarray(mesh.node_sets[self.node_set], int)
        return np.unique((3 * ids[:, None] + np.asarray(self.dofs, int)).ravel())


@dataclass(frozen=True)
class Stage:
    name: str
    activate_segments: tuple = ()
    activate_tendon_groups: tuple = ()
    loads: tuple = ()
    add_constraints: tuple = ()
    release_constraints: tuple = ()


@dataclass(frozen=True)
class StageSchedule:
    stages: tuple
    constraints: dict = field(default_factory=dict)

    def validate(self, mesh: Mesh | None = None) -> None:
        problems = []
        seen_seg, seen_grp, active = {}, {}, set()
        for i, st in enumerate(self.stages):
            for s in st.activate_segments:
                if s in seen_seg:
                    problems.append(f"stage {st.name!r}: segment {s!r} already activated in stage {seen_seg[s]!r}")
                seen_seg[s] = st.name
            for g in st.activate_tendon_groups:
                if g in seen_grp:
                    problems.append(f"stage {st.name!r}: tendon group {g!r} already activated")
                seen_grp[g] = st.name
            for c in st.add_constraints:
                if c not in self.constraints:
                    problems.append(f"stage {st.name!r}: unknown constraint {c!r}")
                elif c in active:
                    problems.append(f"stage {st.name!r}: constraint {c!r} added twice")
                active.add(c)
            for c in st.release_constraints:
                if c not in active:
                    problems.append(f"stage {st.name!r}: releases constraint {c!r} that was never added")
                active.discard(c)
            for ld in st.loads:
                if ld.kind == "thermal":
                    for g in ld.groups:
                        if g not in seen_grp:
                            problems.append(f"stage {st.name!r}: thermal load on inactive tendon group {g!r}")
        if active:
            problems.append(f"temporary constraints left at the end: {sorted(active)}")
        if not self.stages:
            problems.append("schedule has no stages")
        if mesh is not None:
            names = set(mesh.segment_names.values())
            for s in sorted(set(seen_seg) - names):
                problems.append(f"segment {s!r} not in the mesh")
            groups = set(mesh.group_names.values())
            for g in sorted(set(seen_grp) - groups):
                problems.append(f"tendon group {g!r} not in the mesh")
            for c in self.constraints.values():
                if c.nodes is None and c.node_set not in mesh.node_sets:
                    problems.append(f"constraint {c.name!r}: unknown node set {c.node_set!r}")
        if problems:
            raise ScheduleError("invalid schedule:\n  " + "\n  ".join(problems))

    @property
    def categories(self) -> list[str]:
        cats = []
        for st in self.stages:
            for ld in st.loads:
                if ld.category not in cats:
                    cats.append(ld.category)
        return cats or ["dead"]


@dataclass
class StageResult:
    index: int
    name: str
    active_segments: frozenset
    displacement: np.ndarray  # incremental, all categories
    displacement_total: np.ndarray
    stress: StressField | None  # accumulated, all categories
    stress_by_category: dict
    reaction_increment: np.ndarray  # global vector of support forces added in this stage
    reaction_total: np.ndarray
    applied_total: np.ndarray  # cumulative external load resultant (Fx, Fy, Fz)
    equilibrium: float

    @property
    def max_deflection(self) -> float:
        return float(np.abs(self.displacement_total[1::3]).max()) if self.displacement_total.size else 0.0


# ------------------------------------------------------------------ engine


def _faces_on(mesh: Mesh, name: str, hex_sel: np.ndarray) -> np.ndarray:
    if name not in mesh.face_sets:
        raise ScheduleError(f"unknown face set {name!r}")
    f = np.asarray(mesh.face_sets[name]).reshape(-1, 2)
    return f[hex_sel[f[:, 0]]]


def _segment_mask(mesh: Mesh, spec, new_mask, active_mask):
    if spec is None:
        return new_mask
    if spec == ALL:
        return active_mask
    ids = [mesh.segment_id(s) for s in spec]
    return np.isin(mesh.hex_segment, ids) & active_mask


def run_staged_analysis(mesh: Mesh, materials: dict, bcs: BoundarySpec | None, schedule: StageSchedule, *,
                        g: float = 9.8, history: str = "all", method: str = "direct",
                        tol: float = 1e-8, model: FEModel | None = None) -> list[StageResult]:
    """Run every stage of ``schedule``.

    ``history="final"`` keeps the accumulated stress only on the last
    result, which saves memory on large models.
    """
    schedule.validate(mesh)
    bcs = bcs or BoundarySpec()
    model = model or FEModel(mesh, materials)
    cats = schedule.categories
    nc = len(cats)
    ndof = 3 * mesh.n_nodes
    ne, nt = len(mesh.hexes), len(mesh.trusses)
    permanent = set(bcs.fixed_dofs().tolist())
    temp_dofs = {name: np.array([d for d in c.resolve(mesh) if d not in permanent], int)
                 for name, c in schedule.constraints.items()}

    seg_ids: set[int] = set()
    grp_ids: set[int] = set()
    active_temp: list[str] = []
    u_tot = np.zeros((ndof, nc))
    R_tot = np.zeros((ndof, nc))
    applied = np.zeros(3)
    acc = {c: StressField.zeros(ne, nt) for c in cats}
    prev_mask = np.zeros(ne, bool)
    results = []
    for i, st in enumerate(schedule.stages):
        try:
            seg_ids |= {mesh.segment_id(s) for s in st.activate_segments}
            grp_ids |= {mesh.group_id(gn) for gn in st.activate_tendon_groups}
        except KeyError as exc:
            raise ScheduleError(f"stage {st.name!r}: {exc.args[0]}") from None
        released = [c for c in st.release_constraints]
        active_temp = [c for c in active_temp + list(st.add_constraints) if c not in released]
        extra = np.concatenate([temp_dofs[c] for c in active_temp]) if active_temp else np.zeros(0, int)
        stage_bcs = BoundarySpec(bcs.fixed | {(int(d) // 3, int(d) % 3) for d in extra}, list(bcs.springs))
        sys_ = model.assemble(seg_ids, grp_ids, stage_bcs)
        hmask = sys_.hex_mask
        new_mask = hmask & ~prev_mask
        try:
            model.check_supported(sys_)
        except SolverError as exc:
            raise SolverError(f"stage {st.name!r}: {exc}") from None

        F = np.zeros((ndof, nc))
        dT = np.zeros((nt, nc))
        for ld in st.loads:
            j = cats.index(ld.category)
            if ld.kind == "gravity":
                m = _segment_mask(mesh, ld.segments, new_mask, hmask)
                F[:, j] += ld.value * body_force_gravity(mesh, m, g=g, materials=materials)
            elif ld.kind == "pressure":
                m = _segment_mask(mesh, ld.segments, new_mask, hmask)
                F[:, j] += surface_pressure(mesh, _faces_on(mesh, ld.face_set, m), ld.value)
            elif ld.kind == "thermal":
                gids = [mesh.group_id(gn) for gn in ld.groups]
                tm = sys_.truss_mask & np.isin(mesh.truss_group, gids)
                alpha = np.array([materials[int(k)].alpha for k in mesh.truss_material]) if nt else np.zeros(0)
                F[:, j] += thermal_strain_load(model, tm, alpha, ld.value)
                dT[tm, j] += ld.value
            else:
                F[:, j] += np.asarray(ld.vector, float)
        for d in range(3):
            applied[d] += F[d::3].sum()
        # only loads on active dofs can act; anything else is a schedule bug
        inactive = np.ones(ndof, bool)
        inactive[sys_.active_dofs] = False
        if np.any(F[inactive] != 0):
            raise ScheduleError(f"stage {st.name!r}: load applied to inactive nodes")
        F_rel = F.copy()
        for c in released:
            dofs = temp_dofs[c]
            F_rel[dofs] -= R_tot[dofs]
            R_tot[dofs] = 0.0

        try:
            du = solve(sys_, F_rel, method=method, tol=tol)
        except SolverError as exc:
            raise SolverError(f"stage {st.name!r}: {exc}") from None
        rf, rs = reactions(sys_, du, F_rel)
        dR = np.zeros((ndof, nc))
        dR[sys_.fixed_dofs] += rf
        np.add.at(dR, sys_.spring_dofs, rs)
        R_tot += dR
        eq = max(equilibrium_error(sys_, du[:, j], F_rel[:, j]) for j in range(nc))
        if eq > tol:
            raise SolverError(f"stage {st.name!r}: equilibrium error {eq:.3e}")
        u_tot += du
        for j, c in enumerate(cats):
            if np.any(du[:, j]) or np.any(dT[:, j]):
                acc[c] = acc[c] + recover_stress(model, hmask, du[:, j], sys_.truss_mask, dT[:, j])
            else:
                acc[c].hex_active |= hmask
        prev_mask = hmask
        keep = history == "all" or i == len(schedule.stages) - 1
        total = None
        if keep:
            total = acc[cats[0]].copy()
            for c in cats[1:]:
                total = total + acc[c]
        res = StageResult(
            index=i,
            name=st.name,
            active_segments=frozenset(mesh.segment_names[s] for s in seg_ids),
            displacement=du.sum(axis=1),
            displacement_total=u_tot.sum(axis=1),
            stress=total,
            stress_by_category={c: acc[c].copy() for c in cats} if keep else {},
            reaction_increment=dR.sum(axis=1),
            reaction_total=R_tot.sum(axis=1),
            applied_total=applied.copy(),
            equilibrium=eq,
        )
        log.info("stage %d %s: %d segments, max deflection %.4g m", i, st.name, len(seg_ids), res.max_deflection)
        results.append(res)
    return results


def stage_log_rows(results: list[StageResult]) -> list[tuple]:
    """Rows ``(stage, name, active_segments, total_load_N, max_deflection_m)``."""
    return [(r.index, r.name, len(r.active_segments), float(-r.applied_total[1]), r.max_deflection)
            for r in results]


# -------------------------------------------------------- default schedule


@dataclass(frozen=True)
class ScheduleOptions:
    n_substages: int | None = None  # cantilever sub-stages (default: one per segment pair)
    p_t_structure: float = 2491.0
    p_mid: float = 601.0
    p_pavement: float = 4801.0
    dT: float = -370.0
    prestress: bool = True
    mid_continuity_segments: int = 4  # arm segments next to MC that take the span-centre load


def cantilever_group(pier: int, k: int) -> str:
    """Tendon group anchored at the tips of cantilever segment pair ``k`` (0 = 0# block)."""
    return f"T{pier}_{k}"


CONTINUITY_GROUPS = ("K_SIDE1", "K_MID", "K_SIDE2")


def default_schedule(layout: SpanLayout, options: ScheduleOptions | None = None,
                     groups: set | None = None) -> StageSchedule:
    """Three-phase balanced-cantilever sequence.

    1. 0# blocks, piers and the side-span ends cast on scaffolding (vertical
       and longitudinal scaffold supports added);
    2. cantilever segment pairs, symmetric on both T-frames, in
       ``n_substages`` groups with their tendons cooled on activation;
    3. side and mid closures with the continuity tendons, then scaffold
       release;

    followed by the pavement load.  ``groups`` restricts tendon groups to the
    ones present in the mesh.
    """
    o = options or ScheduleOptions()
    n = layout.segments_per_arm
    ns = n if o.n_substages is None else o.n_substages
    if not 1 <= ns <= n:
        raise ScheduleError(f"n_substages must be in [1, {n}]")
    names = {s[0] for s in layout.segments()}
    for s in ("P1_0", "P2_0", "SE1", "SE2", "SC1", "SC2", "MC"):
        if s not in names:
            raise ScheduleError(f"span layout lacks segment {s!r}")

    def have(gn):
        return o.prestress and (groups is None or gn in groups)

    def cool(gs):
        gs = tuple(gn for gn in gs if have(gn))
        return (LoadSpec("thermal", o.dT, "prestress", groups=gs),) if gs else ()

    t0 = tuple(cantilever_group(p, 0) for p in (1, 2) if have(cantilever_group(p, 0)))
    stages = [Stage(
        "phase1",
        activate_segments=("P1_PIER", "P2_PIER", "P1_0", "P2_0", "SE1", "SE2"),
        activate_tendon_groups=t0,
        loads=(LoadSpec("gravity"), LoadSpec("pressure", o.p_t_structure, segments=("P1_0", "P2_0")))
        + cool(t0),
        add_constraints=("scaffold_1", "scaffold_2", "scaffold_1_long", "scaffold_2_long"),
    )]
    chunks = np.array_split(np.arange(1, n + 1), ns)
    for c, ks in enumerate(chunks):
        segs = tuple(f"P{p}{side}{k}" for k in ks for p in (1, 2) for side in "SM")
        gs = tuple(cantilever_group(p, int(k)) for k in ks for p in (1, 2) if have(cantilever_group(p, int(k))))
        stages.append(Stage(
            f"cantilever_{c + 1}",
            activate_segments=segs,
            activate_tendon_groups=gs,
            loads=(LoadSpec("gravity"), LoadSpec("pressure", o.p_t_structure)) + cool(gs),
        ))
    kg = tuple(gn for gn in CONTINUITY_GROUPS if have(gn))
    mid = ("MC",) + tuple(f"P{p}M{k}" for p in (1, 2) for k in range(max(1, n - o.mid_continuity_segments + 1), n + 1))
    stages.append(Stage(
        "closure",
        activate_segments=("SC1", "SC2", "MC"),
        activate_tendon_groups=kg,
        loads=(LoadSpec("gravity"), LoadSpec("pressure", o.p_mid, segments=mid)) + cool(kg),
        release_constraints=("scaffold_1", "scaffold_2", "scaffold_1_long", "scaffold_2_long"),
    ))
    stages.append(Stage("pavement", loads=(LoadSpec("pressure", o.p_pavement, segments=ALL),)))
    constraints = {
        "scaffold_1": Constraint("scaffold_1", "scaffold_1", (1,)),
        "scaffold_2": Constraint("scaffold_2", "scaffold_2", (1,)),
        "scaffold_1_long": Constraint("scaffold_1_long", "scaffold_1_long", (2,)),
        "scaffold_2_long": Constraint("scaffold_2_long", "scaffold_2_long", (2,)),
    }
    return StageSchedule(tuple(stages), constraints)
