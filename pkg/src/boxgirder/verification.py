"""
Reference problems with closed-form answers: a uniaxial hex patch, a
slender solid cantilever and a simply supported box girder compared with
the analytic shear-lag solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytic import ReissnerParams, analytic_stress_uniform, reissner_parameters
from .elements import Material
from .fem import BoundarySpec, FEModel, solve
from .loads import face_areas, surface_pressure
from .mesh import Mesh, MeshResolution, extrude_template, generate_box_beam
from .section import SectionParams, SectionProperties, build_cross_section, section_properties
from .shear_lag import ShearLagProfile, girder_cut, shear_lag_profile
from .stress import StressField, recover_stress

CONCRETE = Material(3.5e10, 0.2, 2500.0)
BOX_PARAMS = SectionParams(22.5, 11.0, 3.5, 0.30, 0.32, 0.50, 0.20)


def block_mesh(lx: float, ly: float, lz: float, nx: int, ny: int, nz: int) -> Mesh:
    """Structured hex block ``[0, lx] x [0, ly] x [0, lz]`` swept along Z."""
    xs, ys = np.linspace(0, lx, nx + 1), np.linspace(0, ly, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    xy = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange(xy.shape[0]).reshape(nx + 1, ny + 1)
    quads = np.column_stack([idx[:-1, :-1].ravel(), idx[1:, :-1].ravel(),
                             idx[1:, 1:].ravel(), idx[:-1, 1:].ravel()])
    return extrude_template(xy, quads, np.linspace(0, lz, nz + 1))


def _end_weights(mesh: Mesh, z: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes on the plane ``Z = z`` and their tributary area share (sums to 1)."""
    nodes = np.flatnonzero(np.isclose(mesh.nodes[:, 2], z))
    xy = mesh.nodes[nodes, :2]
    w = np.ones(nodes.size)
    for j in range(2):
        u = np.unique(np.round(xy[:, j], 12))
        trib = np.zeros(u.size)
        d = np.diff(u)
        trib[:-1] += d / 2
        trib[1:] += d / 2
        w *= trib[np.searchsorted(u, np.round(xy[:, j], 12))]
    return nodes, w / w.sum()


def patch_test(traction: float = 1e6, dims=(1.0, 1.0, 1.0), mat: Material = CONCRETE,
               distort: float = 0.0) -> StressField:
    """2x2x2 block, minimally supported at ``Z = 0`` and pulled by ``traction`` at ``Z = lz``.

    ``distort`` moves the centre node off the grid; the patch must still
    reproduce the uniform stress.
    """
    lx, ly, lz = dims
    mesh = block_mesh(lx, ly, lz, 2, 2, 2)
    if distort:
        c = np.flatnonzero(np.all(np.isclose(mesh.nodes, [lx / 2, ly / 2, lz / 2]), axis=1))
        mesh.nodes[c] += distort * np.array([lx, ly, lz])
    base = np.flatnonzero(np.isclose(mesh.nodes[:, 2], 0.0))
    fixed = {(n, 2) for n in base}
    o = base[np.argmin(np.linalg.norm(mesh.nodes[base], axis=1))]
    ox = base[np.argmin(np.linalg.norm(mesh.nodes[base] - [lx, 0, 0], axis=1))]
    fixed |= {(o, 0), (o, 1), (ox, 1)}
    model = FEModel(mesh, {0: mat})
    sys_ = model.assemble(bcs=BoundarySpec(fixed))
    nodes, w = _end_weights(mesh, lz)
    f = np.zeros(3 * mesh.n_nodes)
    f[3 * nodes + 2] = traction * lx * ly * w
    u = solve(sys_, f)
    return recover_stress(model, np.ones(len(mesh.hexes), bool), u)


def timoshenko_tip_deflection(P: float, L: float, b: float, h: float, mat: Material) -> float:
    """Tip deflection of an end-loaded cantilever with shear flexibility (Cowper shear factor)."""
    I = b * h ** 3 / 12
    G = mat.E / (2 * (1 + mat.nu))
    kappa = 10 * (1 + mat.nu) / (12 + 11 * mat.nu)
    return P * L ** 3 / (3 * mat.E * I) + P * L / (kappa * G * b * h)


def cantilever_tip_deflection(n_long: int, n_h: int = 4, n_b: int = 4, L: float = 20.0, h: float = 1.0,
                              b: float = 1.0, P: float = 1e5, mat: Material = CONCRETE) -> float:
    """Mean vertical tip deflection of a clamped solid cantilever under an end shear ``P``."""
    mesh = block_mesh(b, h, L, n_b, n_h, n_long)
    root = np.flatnonzero(np.isclose(mesh.nodes[:, 2], 0.0))
    fixed = {(n, d) for n in root for d in range(3)}
    model = FEModel(mesh, {0: mat})
    sys_ = model.assemble(bcs=BoundarySpec(fixed))
    tip, w = _end_weights(mesh, L)
    f = np.zeros(3 * mesh.n_nodes)
    f[3 * tip + 1] = -P * w
    u = solve(sys_, f)
    return float(-(w * u[3 * tip + 1]).sum())


@dataclass
class BoxBenchmark:
    span: float
    q: float  # line load, N/m
    mesh: Mesh
    field: StressField
    profile: ShearLagProfile
    analytic: np.ndarray  # analytic sigma_z at the profile samples
    props: SectionProperties
    reissner: ReissnerParams
    n_dof: int

    def plate(self, name: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(x, sigma_FE, sigma_analytic)`` on one plate, sorted by x."""
        m = self.profile.plate == name
        o = np.argsort(self.profile.x[m])
        return self.profile.x[m][o], self.profile.sigma[m][o], self.analytic[m][o]

    def correlation(self, name: str) -> float:
        _, fe, an = self.plate(name)
        return float(np.corrcoef(fe, an)[0, 1])

    def peak_error(self, name: str) -> float:
        """Relative difference of the largest-magnitude stresses."""
        _, fe, an = self.plate(name)
        a, b = fe[np.argmax(np.abs(fe))], an[np.argmax(np.abs(an))]
        return float(abs(a - b) / abs(b))


def simply_supported_box(span: float = 40.0, n_div: int = 80, params: SectionParams = BOX_PARAMS,
                         pressure: float = 1e4, load: str = "webs", resolution: MeshResolution | None = None,
                         mat: Material = CONCRETE, web_band: float = 0.3) -> BoxBenchmark:
    """Prismatic single-cell box on end bearings under a uniform deck load.

    ``load="deck"`` presses the whole deck; ``load="webs"`` only the deck
    strips within ``web_band`` of the web centrelines, which keeps the flange
    free of local plate bending.
    """
    if load not in ("deck", "webs"):
        raise ValueError("load must be 'deck' or 'webs'")
    res = resolution or MeshResolution()
    dia = ((0.0, 0.5), (span - 0.5, span))
    mesh = generate_box_beam(params, span, n_div, res, diaphragms=dia)
    left, right = mesh.node_sets["bearing_left"], mesh.node_sets["bearing_right"]
    fixed = {(n, 1) for n in np.concatenate([left, right])}
    fixed |= {(n, 2) for n in left}
    fixed |= {(left[0], 0), (right[0], 0)}
    model = FEModel(mesh, {0: mat})
    sys_ = model.assemble(bcs=BoundarySpec(fixed))
    deck = mesh.face_sets["deck"]
    if load == "webs":
        xc = mesh.nodes[mesh.hexes[deck[:, 0]]][:, :, 0].mean(axis=1)
        xw = params.B_bot / 2 - params.t_web / 2
        deck = deck[np.abs(np.abs(xc) - xw) < web_band]
    f = surface_pressure(mesh, deck, pressure)
    q = pressure * face_areas(mesh, deck).sum() / span
    u = solve(sys_, f)
    field = recover_stress(model, np.ones(len(mesh.hexes), bool), u)
    cut = girder_cut(mesh, span / 2, "mid")
    prof = shear_lag_profile(field, cut, mesh)
    cs = build_cross_section(params)
    props = section_properties(cs)
    rp = reissner_parameters(props, cs, mat, span)
    an = analytic_stress_uniform(q, span, rp, props, (cut.x, rp.y_c - cut.y, np.full(cut.x.size, span / 2)))
    return BoxBenchmark(span, q, mesh, field, prof, an, props, rp, sys_.n_eq)
