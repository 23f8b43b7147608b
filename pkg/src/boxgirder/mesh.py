"""
Swept hexahedral meshes of the box girder and its piers, tendon embedding
and mesh checks.

Global axes: X transverse, Y vertical (deck surface at Y = 0), Z along the
bridge starting at the left abutment.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

from .elements import (
    GAUSS_POINTS,
    hex_jacobians,
    hex_volumes,
    shape_derivatives,
    shape_functions,
)
from .section import GeometryError, HeightProfile, SectionParams, height_at


class MeshError(ValueError):
    pass


# local faces of a VTK hexahedron, ordered so the right-hand normal points outward
HEX_FACES = np.array(
    [
        [0, 3, 2, 1],  # zeta = -1
        [4, 5, 6, 7],  # zeta = +1
        [0, 1, 5, 4],  # eta = -1
        [1, 2, 6, 5],  # xi = +1
        [2, 3, 7, 6],  # eta = +1
        [3, 0, 4, 7],  # xi = -1
    ]
)
FACE_ZETA_MINUS, FACE_ZETA_PLUS, FACE_ETA_MINUS, FACE_XI_PLUS, FACE_ETA_PLUS, FACE_XI_MINUS = range(6)

CONCRETE, STRAND = 0, 1


@dataclass(frozen=True)
class EmbeddingConstraint:
    truss_node_id: int
    host_hex_id: int
    weights: np.ndarray


@dataclass(frozen=True)
class TendonLayout:
    """Tendon polylines; each polyline is one (possibly lumped) tendon line."""

    polylines: list
    strands_per_tendon: int = 22
    strand_area: float = 140e-6
    control_stress: float = 1395e6

    def __post_init__(self):
        if self.strands_per_tendon <= 0:
            raise MeshError("strands_per_tendon must be > 0")

    @property
    def area(self) -> float:
        return self.strands_per_tendon * self.strand_area


@dataclass(frozen=True)
class Template:
    """Structured quad template of the box cross-section.

    Cells are indexed on a logical ``(i, j)`` grid; ``x_bands`` and ``y_bands``
    give the band kind and division count of each logical band.
    """

    x_bands: tuple
    y_bands: tuple
    cell_mask: np.ndarray  # (NX, NY) solid cells
    void_mask: np.ndarray  # (NX, NY) cells inside the cell void
    cell_region: np.ndarray  # (NX, NY) region label per cell

    @property
    def shape(self):
        return self.cell_mask.shape

    def x_kind(self):
        return np.array([k for k, n in self.x_bands for _ in range(n)])

    def x_line_params(self, p: SectionParams) -> np.ndarray:
        """Transverse coordinates of the logical x-lines."""
        bt, bb, tw = p.B_top / 2, p.B_bot / 2, p.t_web
        edges = {
            "cant_l": (-bt, -bb), "web_l": (-bb, -bb + tw), "flange": (-bb + tw, bb - tw),
            "web_r": (bb - tw, bb), "cant_r": (bb, bt),
        }
        xs = [edges[self.x_bands[0][0]][0]]
        for kind, n in self.x_bands:
            a, b = edges[kind]
            xs.extend(a + (b - a) * np.arange(1, n + 1) / n)
        return np.array(xs)

    def node_coords(self, p: SectionParams) -> tuple[np.ndarray, np.ndarray]:
        """``(x, y)`` of all logical nodes, ``y`` up from the bottom fiber."""
        x = self.x_line_params(p)
        nb, nw, nt = (n for _, n in self.y_bands)
        NY = nb + nw + nt
        j = np.arange(NY + 1)
        # thickness of the top plate under each x-line (tapered on cantilevers)
        bb = p.B_bot / 2
        s = np.clip((np.abs(x) - bb) / max(p.cant_len, 1e-300), 0.0, 1.0)
        s[np.abs(x) <= bb] = 0.0
        t_loc = p.t_top + (p.t_cant_end - p.t_top) * s
        yb = p.t_bot * np.minimum(j, nb) / nb
        yw = (p.h - p.t_top - p.t_bot) * np.clip(j - nb, 0, nw) / nw
        base = yb + yw  # valid below the top band
        X = np.repeat(x[:, None], NY + 1, axis=1)
        Y = np.repeat(base[None, :], x.size, axis=0)
        jt = np.clip(j - nb - nw, 0, nt) / nt
        top = (p.h - t_loc)[:, None] + t_loc[:, None] * jt[None, :]
        in_top = j >= nb + nw
        Y[:, in_top] = top[:, in_top]
        return X, Y


def build_template(res: "MeshResolution", cantilevers: bool = True) -> Template:
    xb = []
    if cantilevers:
        xb.append(("cant_l", res.n_cant))
    xb += [("web_l", res.n_web_t), ("flange", res.n_flange), ("web_r", res.n_web_t)]
    if cantilevers:
        xb.append(("cant_r", res.n_cant))
    yb = (("bottom", res.n_bot), ("web", res.n_web_h), ("top", res.n_top))
    xk = np.array([k for k, n in xb for _ in range(n)])
    yk = np.array([k for k, n in yb for _ in range(n)])
    NX, NY = xk.size, yk.size
    mask = np.zeros((NX, NY), bool)
    void = np.zeros((NX, NY), bool)
    region = np.empty((NX, NY), dtype=object)
    for i in range(NX):
        for j in range(NY):
            kx, ky = xk[i], yk[j]
            if kx.startswith("web"):
                mask[i, j] = True
                region[i, j] = "web_left" if kx == "web_l" else "web_right"
            elif kx == "flange":
                if ky == "web":
                    void[i, j] = True
                    region[i, j] = "void"
                else:
                    mask[i, j] = True
                    region[i, j] = ky
            else:
                if ky == "top":
                    mask[i, j] = True
                    region[i, j] = "cantilever_left" if kx == "cant_l" else "cantilever_right"
                else:
                    region[i, j] = ""
    return Template(tuple(xb), yb, mask, void, region)


@dataclass(frozen=True)
class MeshResolution:
    n_cant: int = 4
    n_flange: int = 8
    n_web_t: int = 1
    n_web_h: int = 4
    n_top: int = 2
    n_bot: int = 2
    max_element_length: float = 3.0
    min_divisions_per_segment: int = 4
    n_pier_h: int = 4

    def check(self):
        for name in ("n_cant", "n_flange", "n_web_t", "n_web_h", "n_top", "n_bot", "n_pier_h"):
            if getattr(self, name) < 1:
                raise MeshError(f"resolution {name} = {getattr(self, name)} below minimum 1")
        if self.n_flange < 2 or self.n_flange % 2:
            raise MeshError("resolution n_flange must be even and >= 2")
        if self.min_divisions_per_segment < 4:
            raise MeshError("resolution min_divisions_per_segment below minimum 4")
        if not self.max_element_length > 0:
            raise MeshError("max_element_length must be > 0")


@dataclass(frozen=True)
class SpanLayout:
    spans: tuple = (122.0, 210.0, 122.0)
    zero_block_length: float = 12.0
    closure_length: float = 2.0
    segments_per_arm: int = 8
    diaphragm_thickness: float = 1.0
    pier_plan: tuple = (6.0, 11.0)  # (along bridge, transverse)
    pier_height: float = 50.0
    end_diaphragms: bool = True
    closure_diaphragm_thickness: float = 0.0

    @property
    def pier_z(self) -> list[float]:
        return list(np.cumsum(self.spans)[:-1])

    @property
    def total_length(self) -> float:
        return float(sum(self.spans))

    @property
    def arm_length(self) -> float:
        return 0.5 * (self.spans[1] - self.closure_length) - 0.5 * self.zero_block_length

    @property
    def side_end_length(self) -> float:
        return self.spans[0] - 0.5 * self.zero_block_length - self.arm_length - self.closure_length

    def check(self):
        if len(self.spans) != 3 or min(self.spans) <= 0:
            raise MeshError("span layout needs three positive spans")
        if abs(self.spans[0] - self.spans[2]) > 1e-9:
            raise MeshError("side spans must be equal")
        if self.arm_length <= 0 or self.segments_per_arm < 1:
            raise MeshError("cantilever arm length must be positive")
        if self.side_end_length <= 0:
            raise MeshError(
                f"side span too short for the cantilever arm (side end length {self.side_end_length:g} m)"
            )
        if self.pier_plan[0] >= self.zero_block_length:
            raise MeshError("pier is longer than the 0# block")

    def segments(self) -> list[tuple[str, float, float]]:
        """Girder segments ``(name, z0, z1)`` in bridge order."""
        L0, a, c, n = self.zero_block_length, self.arm_length, self.closure_length, self.segments_per_arm
        p1, p2 = self.pier_z
        out = [("SE1", 0.0, self.side_end_length), ("SC1", self.side_end_length, self.side_end_length + c)]
        seg = a / n
        for p, zp in ((1, p1), (2, p2)):
            left = [(f"P{p}{'S' if p == 1 else 'M'}{k}", zp - L0 / 2 - k * seg, zp - L0 / 2 - (k - 1) * seg)
                    for k in range(n, 0, -1)]
            right = [(f"P{p}{'M' if p == 1 else 'S'}{k}", zp + L0 / 2 + (k - 1) * seg, zp + L0 / 2 + k * seg)
                     for k in range(1, n + 1)]
            out += left + [(f"P{p}_0", zp - L0 / 2, zp + L0 / 2)] + right
            if p == 1:
                out.append(("MC", zp + L0 / 2 + a, zp + L0 / 2 + a + c))
        L = self.total_length
        out += [("SC2", L - self.side_end_length - c, L - self.side_end_length), ("SE2", L - self.side_end_length, L)]
        return out

    def diaphragms(self) -> list[tuple[float, float]]:
        t, lp = self.diaphragm_thickness, self.pier_plan[0] / 2
        out = []
        if t > 0:
            for zp in self.pier_z:
                out += [(zp - lp, zp - lp + t), (zp + lp - t, zp + lp)]
            if self.end_diaphragms:
                out += [(0.0, t), (self.total_length - t, self.total_length)]
        tc = self.closure_diaphragm_thickness
        if tc > 0:
            zm = self.pier_z[0] + self.spans[1] / 2
            out.append((zm - tc / 2, zm + tc / 2))
        return sorted(out)


@dataclass(frozen=True)
class GirderInfo:
    """Bookkeeping that maps girder hexes back to template cells and stations."""

    template: Template
    stations: np.ndarray
    station_params: tuple
    cell_hex: np.ndarray  # (n_intervals, NX, NY) hex id or -1
    node_grid: np.ndarray  # (n_stations, NX+1, NY+1) node id or -1
    layout: SpanLayout | None = None

    def params_at(self, z: float) -> SectionParams:
        st = self.stations
        if z < st[0] - 1e-9 or z > st[-1] + 1e-9:
            raise MeshError(f"station z = {z} outside girder [{st[0]}, {st[-1]}]")
        k = int(np.clip(np.searchsorted(st, z, side="right") - 1, 0, st.size - 2))
        t = (z - st[k]) / (st[k + 1] - st[k])
        a, b = self.station_params[k], self.station_params[k + 1]
        vals = {f: (1 - t) * getattr(a, f) + t * getattr(b, f)
                for f in ("B_top", "B_bot", "h", "t_top", "t_bot", "t_web", "t_cant_end")}
        return SectionParams(**vals)

    def interval(self, z: float) -> int:
        st = self.stations
        return int(np.clip(np.searchsorted(st, z, side="right") - 1, 0, st.size - 2))


@dataclass(frozen=True)
class Mesh:
    nodes: np.ndarray  # (nn, 3)
    hexes: np.ndarray  # (ne, 8)
    hex_material: np.ndarray
    hex_segment: np.ndarray
    trusses: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), int))
    truss_area: np.ndarray = field(default_factory=lambda: np.zeros(0))
    truss_material: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    truss_group: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    node_sets: dict = field(default_factory=dict)
    face_sets: dict = field(default_factory=dict)  # name -> (nf, 2) [hex, local face]
    emb_node: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    emb_host: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    emb_weights: np.ndarray = field(default_factory=lambda: np.zeros((0, 8)))
    segment_names: dict = field(default_factory=dict)
    group_names: dict = field(default_factory=dict)
    girder: GirderInfo | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def embedding(self) -> list[EmbeddingConstraint]:
        return [EmbeddingConstraint(int(n), int(h), w) for n, h, w in
                zip(self.emb_node, self.emb_host, self.emb_weights)]

    def segment_id(self, name: str) -> int:
        for k, v in self.segment_names.items():
            if v == name:
                return k
        raise KeyError(f"unknown segment {name!r}")

    def group_id(self, name: str) -> int:
        for k, v in self.group_names.items():
            if v == name:
                return k
        raise KeyError(f"unknown tendon group {name!r}")

    def hex_coords(self, idx=None) -> np.ndarray:
        h = self.hexes if idx is None else self.hexes[idx]
        return self.nodes[h]

    def volume(self, hex_mask=None) -> float:
        idx = None if hex_mask is None else np.flatnonzero(hex_mask)
        return float(hex_volumes(self.hex_coords(idx)).sum())


# ---------------------------------------------------------------- sweeping


def extrude_template(template_xy, quads, stations) -> Mesh:
    """Sweep a planar quad template along Z.

    ``template_xy`` is ``(nt, 2)`` or a callable ``z -> (nt, 2)``; quads are
    counter-clockwise in the X-Y plane.
    """
    stations = np.asarray(stations, dtype=float)
    if stations.size < 2 or np.any(np.diff(stations) <= 0):
        raise MeshError("stations must be strictly increasing with at least one division")
    quads = np.asarray(quads, dtype=int)
    layers = []
    for z in stations:
        xy = np.asarray(template_xy(z) if callable(template_xy) else template_xy, dtype=float)
        layers.append(np.column_stack([xy, np.full(len(xy), z)]))
    nt = len(layers[0])
    nodes = np.vstack(layers)
    k = np.arange(stations.size - 1)[:, None, None] * nt
    hexes = np.concatenate([quads[None] + k, quads[None] + k + nt], axis=2).reshape(-1, 8)
    ne = len(hexes)
    mesh = Mesh(nodes, hexes, np.zeros(ne, int), np.zeros(ne, int), segment_names={0: "all"})
    _check_jacobians(mesh)
    return mesh


def _check_jacobians(mesh: Mesh):
    if len(mesh.hexes) == 0:
        return
    _, det = hex_jacobians(mesh.hex_coords())
    bad = np.flatnonzero(det.min(axis=1) <= 0)
    if bad.size:
        raise MeshError(f"non-positive Jacobian in hex {int(bad[0])} ({bad.size} element(s) affected)")


def _station_grid(layout: SpanLayout, res: MeshResolution) -> np.ndarray:
    segs = layout.segments()
    lines = {round(z, 9) for _, z0, z1 in segs for z in (z0, z1)}
    for a, b in layout.diaphragms():
        lines.update((round(a, 9), round(b, 9)))
    lp = layout.pier_plan[0] / 2
    for zp in layout.pier_z:
        lines.update((round(zp - lp, 9), round(zp + lp, 9)))
    base = np.array(sorted(lines))
    out = [base[0]]
    for name, z0, z1 in segs:
        inner = base[(base > z0 + 1e-9) & (base < z1 - 1e-9)]
        pts = np.concatenate([[z0], inner, [z1]])
        seg_len = z1 - z0
        need = max(res.min_divisions_per_segment, int(np.ceil(seg_len / res.max_element_length - 1e-9)))
        # split each sub-interval in proportion to its length
        for a, b in zip(pts[:-1], pts[1:]):
            n = max(1, int(round(need * (b - a) / seg_len)))
            n = max(n, int(np.ceil((b - a) / res.max_element_length - 1e-9)))
            out.extend(a + (b - a) * np.arange(1, n + 1) / n)
    return np.array(out)


def section_params_at(z: float, layout: SpanLayout, profile: HeightProfile,
                      params: SectionParams) -> SectionParams:
    """Girder section at bridge station ``z`` (root values over the 0# block)."""
    d = min(abs(z - zp) for zp in layout.pier_z)
    s = d - layout.zero_block_length / 2
    L = profile.haunch_length
    if s <= L:
        h, t_bot = height_at(profile, max(s, 0.0))
    else:
        h, t_bot = profile.h_mid, profile.t_bot_mid
    frac = min(max(s, 0.0) / L, 1.0)
    t_top = params.t_top
    if profile.t_top_root is not None:
        t_top = profile.t_top_root + (params.t_top - profile.t_top_root) * frac
    t_web = params.t_web
    if profile.t_web_root is not None:
        zone = profile.web_root_zone
        span = layout.zero_block_length / 2 + L - zone
        if d <= zone:
            t_web = profile.t_web_root
        elif span > 0:
            t_web = profile.t_web_root + (params.t_web - profile.t_web_root) * min((d - zone) / span, 1.0)
    return replace(params, h=h, t_bot=t_bot, t_top=t_top, t_web=t_web)


def generate_girder_mesh(profile: HeightProfile, params: SectionParams, span_layout: SpanLayout,
                         resolution: MeshResolution) -> Mesh:
    """Swept hex mesh of the variable-depth girder.

    ``params`` holds the mid-span section; depth and bottom-plate thickness
    follow ``profile`` from each 0# block edge, top-plate and web thickness
    follow the root values stored on the profile.
    """
    resolution.check()
    span_layout.check()
    tpl = build_template(resolution, cantilevers=params.cant_len > 0)
    stations = _station_grid(span_layout, resolution)
    sparams = tuple(section_params_at(z, span_layout, profile, params) for z in stations)
    for z, p in zip(stations, sparams):
        try:
            p.check()
        except GeometryError as exc:
            raise MeshError(f"section at z = {z:.3f} m infeasible: {exc}") from None

    segs = span_layout.segments()
    seg_names = {k: s[0] for k, s in enumerate(segs)}
    zmid = 0.5 * (stations[:-1] + stations[1:])
    bounds = np.array([s[2] for s in segs])
    iseg = np.searchsorted(bounds, zmid)
    dia = np.zeros(zmid.size, bool)
    for a, b in span_layout.diaphragms():
        dia |= (zmid > a) & (zmid < b)
    interfaces = [(f"interface_{segs[k][0]}_{segs[k + 1][0]}", segs[k][2]) for k in range(len(segs) - 1)]
    return _sweep_box(tpl, stations, sparams, dia, iseg, seg_names, span_layout, interfaces)


def generate_box_beam(params: SectionParams, length: float, n_div: int, resolution: MeshResolution,
                      diaphragms=((0.0, 1.0),), grading: float = 1.0) -> Mesh:
    """Prismatic box of the given section from ``z = 0`` to ``length``.

    ``diaphragms`` lists solid ``(z0, z1)`` intervals; station lines are
    added at their faces.  ``grading > 1`` clusters stations toward both ends.
    """
    resolution.check()
    params.check()
    if not length > 0 or n_div < 1:
        raise MeshError("box beam needs length > 0 and at least one division")
    t = np.linspace(-1.0, 1.0, n_div + 1)
    if grading != 1.0:
        t = np.sign(t) * np.abs(t) ** grading
    stations = 0.5 * length * (1.0 + t)
    extra = [z for a, b in diaphragms for z in (a, b) if 0 < z < length]
    stations = np.unique(np.round(np.concatenate([stations, extra]), 9))
    tpl = build_template(resolution, cantilevers=params.cant_len > 0)
    zmid = 0.5 * (stations[:-1] + stations[1:])
    dia = np.zeros(zmid.size, bool)
    for a, b in diaphragms:
        dia |= (zmid > a) & (zmid < b)
    sparams = (params,) * stations.size
    return _sweep_box(tpl, stations, sparams, dia, np.zeros(zmid.size, int), {0: "BEAM"}, None, [])


def _sweep_box(tpl: Template, stations, sparams, dia, iseg, seg_names, layout, interfaces) -> Mesh:
    NX, NY = tpl.shape
    nst = stations.size
    cell_on = np.zeros((nst - 1, NX, NY), bool)
    cell_on[:] = tpl.cell_mask
    cell_on[dia] |= tpl.void_mask
    node_on = np.zeros((nst, NX + 1, NY + 1), bool)
    for di in (0, 1):
        for dj in (0, 1):
            node_on[:-1, di:NX + di, dj:NY + dj] |= cell_on
            node_on[1:, di:NX + di, dj:NY + dj] |= cell_on

    node_grid = -np.ones(node_on.shape, int)
    node_grid[node_on] = np.arange(node_on.sum())
    coords = []
    for k in range(nst):
        X, Y = tpl.node_coords(sparams[k])
        m = node_on[k]
        h = sparams[k].h
        coords.append(np.column_stack([X[m], Y[m] - h, np.full(m.sum(), stations[k])]))
    nodes = np.vstack(coords)

    kk, ii, jj = np.nonzero(cell_on)
    n00 = node_grid[kk, ii, jj]
    quad = np.stack([node_grid[kk, ii, jj], node_grid[kk, ii + 1, jj],
                     node_grid[kk, ii + 1, jj + 1], node_grid[kk, ii, jj + 1]], axis=1)
    quad1 = np.stack([node_grid[kk + 1, ii, jj], node_grid[kk + 1, ii + 1, jj],
                      node_grid[kk + 1, ii + 1, jj + 1], node_grid[kk + 1, ii, jj + 1]], axis=1)
    hexes = np.concatenate([quad, quad1], axis=1)
    assert np.all(n00 >= 0) and np.all(hexes >= 0)
    cell_hex = -np.ones(cell_on.shape, int)
    cell_hex[kk, ii, jj] = np.arange(len(hexes))
    segment = iseg[kk]

    face_sets = {}
    top_j = NY - 1
    deck = np.flatnonzero(jj == top_j)
    face_sets["deck"] = np.column_stack([deck, np.full(deck.size, FACE_ETA_PLUS)])
    first, last = np.flatnonzero(kk == 0), np.flatnonzero(kk == nst - 2)
    face_sets["end_left"] = np.column_stack([first, np.full(first.size, FACE_ZETA_MINUS)])
    face_sets["end_right"] = np.column_stack([last, np.full(last.size, FACE_ZETA_PLUS)])
    bottom = np.flatnonzero(jj == 0)
    face_sets["soffit"] = np.column_stack([bottom, np.full(bottom.size, FACE_ETA_MINUS)])
    for name, z in interfaces:
        ks = int(np.argmin(np.abs(stations - z)))
        sel = np.flatnonzero(kk == ks - 1)
        face_sets[name] = np.column_stack([sel, np.full(sel.size, FACE_ZETA_PLUS)])

    node_sets = {}
    xk = tpl.x_kind()
    web_lines = {side: [i for i in range(NX + 1) if (i < NX and xk[i] == side) or (i > 0 and xk[i - 1] == side)]
                 for side in ("web_l", "web_r")}
    for name, k in (("bearing_left", 0), ("bearing_right", nst - 1)):
        ids = [node_grid[k, i, 0] for side in ("web_l", "web_r") for i in web_lines[side]]
        node_sets[name] = np.array(sorted(i for i in ids if i >= 0))

    mesh = Mesh(
        nodes=nodes,
        hexes=hexes,
        hex_material=np.full(len(hexes), CONCRETE),
        hex_segment=segment,
        node_sets=node_sets,
        face_sets=face_sets,
        segment_names=seg_names,
        girder=GirderInfo(tpl, stations, tuple(sparams), cell_hex, node_grid, layout),
    )
    _check_jacobians(mesh)
    return mesh


def generate_pier_mesh(pier_height: float, plan_dims, resolution: MeshResolution | None = None, *,
                       wall=None, x_lines=None, z_lines=None, top=(0.0, 0.0, 0.0),
                       n_height: int | None = None, n_plan: int = 2) -> Mesh:
    """Prismatic pier of hexes, hollow when ``wall`` is given.

    ``plan_dims`` is ``(length along Z, width along X)``.  Explicit
    ``x_lines``/``z_lines`` let the top face share nodes with the girder.
    ``wall`` is a thickness or ``(wall_x, wall_z)`` pair; cells whose centre
    lies in the inner rectangle are left out.
    """
    if not pier_height > 0:
        raise MeshError("pier height must be > 0")
    lz, lx = plan_dims
    if not (lz > 0 and lx > 0):
        raise MeshError("pier plan dimensions must be > 0")
    nh = n_height or (resolution.n_pier_h if resolution else 1)
    if nh < 1:
        raise MeshError("pier needs at least one division along its height")
    if wall is not None:
        wx, wz = (wall, wall) if np.isscalar(wall) else wall
        if 2 * wx >= lx or 2 * wz >= lz:
            wall = None
    if x_lines is None:
        if wall is None:
            x_lines = np.linspace(-lx / 2, lx / 2, n_plan + 1)
        else:
            x_lines = np.concatenate([[-lx / 2], np.linspace(-lx / 2 + wx, lx / 2 - wx, n_plan + 1), [lx / 2]])
    if z_lines is None:
        if wall is None:
            z_lines = np.linspace(-lz / 2, lz / 2, n_plan + 1)
        else:
            z_lines = np.concatenate([[-lz / 2], np.linspace(-lz / 2 + wz, lz / 2 - wz, n_plan + 1), [lz / 2]])
    x_lines, z_lines = np.asarray(x_lines, float), np.asarray(z_lines, float)
    xc = 0.5 * (x_lines[:-1] + x_lines[1:])
    zc = 0.5 * (z_lines[:-1] + z_lines[1:])
    cx = 0.5 * (x_lines[0] + x_lines[-1])
    cz = 0.5 * (z_lines[0] + z_lines[-1])
    solid = np.ones((xc.size, zc.size), bool)
    if wall is not None:
        solid = ~((np.abs(xc - cx)[:, None] < lx / 2 - wx - 1e-9) & (np.abs(zc - cz)[None, :] < lz / 2 - wz - 1e-9))
    nx, nz = x_lines.size, z_lines.size
    used = np.zeros((nx, nz), bool)
    for di in (0, 1):
        for dj in (0, 1):
            used[di:nx - 1 + di, dj:nz - 1 + dj] |= solid
    grid = -np.ones((nh + 1, nx, nz), int)
    grid[:, used] = np.arange((nh + 1) * used.sum()).reshape(nh + 1, -1)
    ys = np.linspace(-pier_height, 0.0, nh + 1)
    X, Z = np.meshgrid(x_lines, z_lines, indexing="ij")
    nodes = np.vstack([np.column_stack([X[used], np.full(used.sum(), y), Z[used]]) for y in ys])
    nodes = nodes + np.asarray(top, float)
    ii, jj = np.nonzero(solid)
    hexes = []
    for k in range(nh):
        # ordering (x, z, y) as (xi, eta, zeta) is left-handed; swap eta order
        q0 = np.stack([grid[k, ii, jj + 1], grid[k, ii + 1, jj + 1], grid[k, ii + 1, jj], grid[k, ii, jj]], 1)
        q1 = np.stack([grid[k + 1, ii, jj + 1], grid[k + 1, ii + 1, jj + 1], grid[k + 1, ii + 1, jj],
                       grid[k + 1, ii, jj]], 1)
        hexes.append(np.concatenate([q0, q1], 1))
    hexes = np.vstack(hexes)
    ne = len(hexes)
    ncell = ii.size
    top_faces = np.arange(ne - ncell, ne)
    mesh = Mesh(
        nodes=nodes,
        hexes=hexes,
        hex_material=np.full(ne, CONCRETE),
        hex_segment=np.zeros(ne, int),
        node_sets={"pier_bottom": np.sort(grid[0][used]), "pier_top": np.sort(grid[nh][used])},
        face_sets={"pier_top": np.column_stack([top_faces, np.full(ncell, FACE_ZETA_PLUS)])},
        segment_names={0: "PIER"},
    )
    _check_jacobians(mesh)
    return mesh


def merge_meshes(a: Mesh, b: Mesh, tol: float = 1e-6, segment_offset: int | None = None,
                 prefix: str = "") -> Mesh:
    """Append ``b`` to ``a``, fusing nodes of ``b`` that coincide with nodes of ``a``.

    Coincident nodes act as the tie between the two parts.
    """
    if segment_offset is None:
        segment_offset = (max(a.segment_names) + 1) if a.segment_names else 0
    tree = cKDTree(a.nodes)
    dist, idx = tree.query(b.nodes, distance_upper_bound=tol)
    fused = dist <= tol
    new_ids = np.empty(len(b.nodes), int)
    new_ids[fused] = idx[fused]
    n_new = int((~fused).sum())
    new_ids[~fused] = len(a.nodes) + np.arange(n_new)
    nodes = np.vstack([a.nodes, b.nodes[~fused]])
    off = len(a.hexes)
    node_sets = dict(a.node_sets)
    for k, v in b.node_sets.items():
        node_sets[prefix + k] = new_ids[v]
    face_sets = dict(a.face_sets)
    for k, v in b.face_sets.items():
        face_sets[prefix + k] = v + np.array([off, 0])
    names = dict(a.segment_names)
    for k, v in b.segment_names.items():
        names[k + segment_offset] = prefix + v if prefix and v == "PIER" else v
    return replace(
        a,
        nodes=nodes,
        hexes=np.vstack([a.hexes, new_ids[b.hexes]]),
        hex_material=np.concatenate([a.hex_material, b.hex_material]),
        hex_segment=np.concatenate([a.hex_segment, b.hex_segment + segment_offset]),
        node_sets=node_sets,
        face_sets=face_sets,
        segment_names=names,
    )


# ----------------------------------------------------------- point location


def invert_trilinear(coords: np.ndarray, points: np.ndarray, iters: int = 30, tol: float = 1e-13):
    """Natural coordinates of ``points (m, 3)`` inside hexes ``coords (m, 8, 3)``.

    Damped Newton iteration; returns ``(nat, converged)``.
    """
    nat = np.zeros_like(points, dtype=float)
    ok = np.zeros(len(points), bool)
    for _ in range(iters):
        N = shape_functions(nat)
        x = np.einsum("ma,maj->mj", N, coords)
        r = points - x
        J = np.einsum("mia,maj->mji", shape_derivatives(nat), coords)  # dx_j/dxi_i
        try:
            step = np.linalg.solve(J, r[..., None])[..., 0]
        except np.linalg.LinAlgError:
            break
        # limit the step to keep far-away candidates from diverging
        big = np.abs(step).max(axis=1)
        step *= np.minimum(1.0, 1.0 / np.maximum(big, 1e-300))[:, None]
        nat = nat + step
        ok = np.linalg.norm(r, axis=1) <= tol * (1.0 + np.abs(points).max(axis=1))
        if np.all(ok | (big < 1e-15)):
            break
    N = shape_functions(nat)
    r = points - np.einsum("ma,maj->mj", N, coords)
    ok = np.linalg.norm(r, axis=1) <= 1e-9
    return nat, ok


def locate_points(mesh: Mesh, points, hex_mask=None, tol: float = 1e-6):
    """Host hex and natural coordinates of each point.

    Among several hosts the lowest hex id wins.  Points outside every
    candidate get host ``-1``.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    cand = np.arange(len(mesh.hexes)) if hex_mask is None else np.flatnonzero(hex_mask)
    host = -np.ones(len(points), int)
    nat_out = np.zeros((len(points), 3))
    if cand.size == 0:
        return host, nat_out
    xyz = mesh.nodes[mesh.hexes[cand]]
    cen = xyz.mean(axis=1)
    rad = np.linalg.norm(xyz - cen[:, None], axis=2).max(axis=1)
    tree = cKDTree(cen)
    lists = tree.query_ball_point(points, r=float(rad.max()) * (1 + 1e-9) + tol)
    pi, ci = [], []
    for p, lst in enumerate(lists):
        lst = sorted(lst)
        pi.extend([p] * len(lst))
        ci.extend(lst)
    if not pi:
        return host, nat_out
    pi, ci = np.array(pi), np.array(ci)
    near = np.linalg.norm(points[pi] - cen[ci], axis=1) <= rad[ci] + tol
    pi, ci = pi[near], ci[near]
    nat, ok = invert_trilinear(xyz[ci], points[pi])
    inside = ok & np.all(np.abs(nat) <= 1.0 + tol, axis=1)
    order = np.lexsort((cand[ci], pi))
    for t in order:
        if inside[t] and host[pi[t]] < 0:
            host[pi[t]] = cand[ci[t]]
            nat_out[pi[t]] = np.clip(nat[t], -1.0 - tol, 1.0 + tol)
    return host, nat_out


def embed_tendon(mesh: Mesh, layout: TendonLayout, divisions, host_mask=None, group: int = 0,
                 material: int = STRAND):
    """Discretise tendon polylines into trusses and embed their nodes.

    ``divisions`` is an int or one int per polyline (equal arc-length pieces).
    Returns ``(new_nodes, trusses, areas, constraints)`` where truss node ids
    continue the mesh numbering.
    """
    polys = [np.asarray(p, dtype=float) for p in layout.polylines]
    divs = [divisions] * len(polys) if np.isscalar(divisions) else list(divisions)
    nid = len(mesh.nodes)
    new_nodes, trusses, constraints = [], [], []
    for poly, n in zip(polys, divs):
        if n < 1:
            raise MeshError("tendon divisions must be >= 1")
        seg = np.linalg.norm(np.diff(poly, axis=0), axis=1)
        if np.any(seg <= 0):
            raise MeshError("tendon polyline has repeated points")
        s = np.concatenate([[0.0], np.cumsum(seg)])
        t = np.linspace(0.0, s[-1], n + 1)
        pts = np.column_stack([np.interp(t, s, poly[:, d]) for d in range(3)])
        host, nat = locate_points(mesh, pts, host_mask)
        if np.any(host < 0):
            p = pts[np.flatnonzero(host < 0)[0]]
            raise MeshError(f"tendon point ({p[0]:.4f}, {p[1]:.4f}, {p[2]:.4f}) lies outside the mesh")
        w = shape_functions(nat)
        ids = nid + np.arange(n + 1)
        nid += n + 1
        new_nodes.append(pts)
        trusses.append(np.column_stack([ids[:-1], ids[1:]]))
        constraints += [EmbeddingConstraint(int(i), int(hh), ww) for i, hh, ww in zip(ids, host, w)]
    if not polys:
        return np.zeros((0, 3)), np.zeros((0, 2), int), np.zeros(0), []
    trusses = np.vstack(trusses)
    return np.vstack(new_nodes), trusses, np.full(len(trusses), layout.area), constraints


def add_tendons(mesh: Mesh, layout: TendonLayout, divisions, group_name: str, host_mask=None,
                material: int = STRAND) -> Mesh:
    """Mesh with the embedded tendon group appended (an existing group name is extended)."""
    known = {v: k for k, v in mesh.group_names.items()}
    gid = known.get(group_name, (max(mesh.group_names) + 1) if mesh.group_names else 0)
    nodes, trusses, areas, cons = embed_tendon(mesh, layout, divisions, host_mask, gid, material)
    names = dict(mesh.group_names)
    names[gid] = group_name
    return replace(
        mesh,
        nodes=np.vstack([mesh.nodes, nodes]),
        trusses=np.vstack([mesh.trusses, trusses]),
        truss_area=np.concatenate([mesh.truss_area, areas]),
        truss_material=np.concatenate([mesh.truss_material, np.full(len(trusses), material)]),
        truss_group=np.concatenate([mesh.truss_group, np.full(len(trusses), gid)]),
        emb_node=np.concatenate([mesh.emb_node, [c.truss_node_id for c in cons]]).astype(int),
        emb_host=np.concatenate([mesh.emb_host, [c.host_hex_id for c in cons]]).astype(int),
        emb_weights=np.vstack([mesh.emb_weights] + [c.weights[None] for c in cons]),
        group_names=names,
    )


# --------------------------------------------------------------- validation


@dataclass
class MeshReport:
    ok: bool
    n_nodes: int
    n_hexes: int
    n_trusses: int
    min_jacobian: float
    bad_jacobian: list
    duplicate_nodes: list
    orphan_nodes: list
    set_problems: list
    embedding_problems: list

    def summary(self) -> str:
        lines = [
            f"ok: {self.ok}",
            f"nodes: {self.n_nodes}  hexes: {self.n_hexes}  trusses: {self.n_trusses}",
            f"min Gauss-point Jacobian determinant: {self.min_jacobian:.6g}",
            f"elements with non-positive Jacobian: {len(self.bad_jacobian)}",
            f"duplicate node pairs: {len(self.duplicate_nodes)}",
            f"orphan nodes: {len(self.orphan_nodes)}",
        ]
        lines += [f"set problem: {p}" for p in self.set_problems]
        lines += [f"embedding problem: {p}" for p in self.embedding_problems]
        return "\n".join(lines)


def validate_mesh(mesh: Mesh) -> MeshReport:
    """Diagnostic checks.  The Jacobian reported is ``det(dx/dxi)`` at the
    2x2x2 Gauss points, so a unit cube gives 1/8."""
    nn = len(mesh.nodes)
    problems = []
    if len(mesh.hexes):
        if mesh.hexes.min() < 0 or mesh.hexes.max() >= nn:
            problems.append("hex references a missing node")
            return MeshReport(False, nn, len(mesh.hexes), len(mesh.trusses), float("nan"), [], [], [],
                              problems, [])
        _, det = hex_jacobians(mesh.hex_coords(), GAUSS_POINTS)
        dmin = det.min(axis=1)
        min_j = float(dmin.min())
        bad = np.flatnonzero(dmin <= 0).tolist()
    else:
        min_j, bad = float("nan"), []

    emb_problems = []
    if len(mesh.trusses):
        if mesh.trusses.min() < 0 or mesh.trusses.max() >= nn:
            problems.append("truss references a missing node")
        else:
            L = np.linalg.norm(np.diff(mesh.nodes[mesh.trusses], axis=1)[:, 0], axis=1)
            for t in np.flatnonzero(L <= 0):
                problems.append(f"truss {t} has zero length")
    if len(mesh.emb_node):
        s = mesh.emb_weights.sum(axis=1)
        for k in np.flatnonzero(np.abs(s - 1) > 1e-10):
            emb_problems.append(f"weights of node {mesh.emb_node[k]} sum to {s[k]!r}")
        for k in np.flatnonzero((mesh.emb_weights < -0.05).any(1) | (mesh.emb_weights > 1.05).any(1)):
            emb_problems.append(f"weights of node {mesh.emb_node[k]} outside [-0.05, 1.05]")
        hosts = mesh.hexes[mesh.emb_host]
        x = np.einsum("ma,maj->mj", mesh.emb_weights, mesh.nodes[hosts])
        err = np.linalg.norm(x - mesh.nodes[mesh.emb_node], axis=1)
        for k in np.flatnonzero(err > 1e-6):
            emb_problems.append(f"embedded node {mesh.emb_node[k]} off its host by {err[k]:.3g} m")
    if len(mesh.trusses):
        tn = np.unique(mesh.trusses)
        missing = np.setdiff1d(tn, mesh.emb_node)
        if missing.size:
            emb_problems.append(f"{missing.size} truss node(s) without embedding")

    used = np.zeros(nn, bool)
    used[mesh.hexes.ravel()] = True
    if len(mesh.trusses):
        used[mesh.trusses.ravel()] = True
    orphans = np.flatnonzero(~used).tolist()

    structural = np.unique(mesh.hexes.ravel()) if len(mesh.hexes) else np.zeros(0, int)
    dups = []
    if structural.size > 1:
        pairs = cKDTree(mesh.nodes[structural]).query_pairs(1e-9, output_type="ndarray")
        dups = [(int(structural[a]), int(structural[b])) for a, b in pairs]
        dups.sort()

    for name, ids in mesh.node_sets.items():
        ids = np.asarray(ids)
        if ids.size and (ids.min() < 0 or ids.max() >= nn):
            problems.append(f"node set {name!r} references missing nodes")
    for name, faces in mesh.face_sets.items():
        faces = np.asarray(faces)
        if faces.size and (faces[:, 0].min() < 0 or faces[:, 0].max() >= len(mesh.hexes)
                           or faces[:, 1].min() < 0 or faces[:, 1].max() > 5):
            problems.append(f"face set {name!r} references missing faces")
    segs = set(np.unique(mesh.hex_segment).tolist())
    unknown = segs - set(mesh.segment_names)
    if mesh.segment_names and unknown:
        problems.append(f"segment ids without names: {sorted(unknown)}")

    ok = not (bad or dups or orphans or problems or emb_problems)
    return MeshReport(ok, nn, len(mesh.hexes), len(mesh.trusses), min_j, bad, dups, orphans, problems,
                      emb_problems)


def face_nodes(mesh: Mesh, faces: np.ndarray) -> np.ndarray:
    faces = np.asarray(faces)
    return mesh.hexes[faces[:, 0][:, None], HEX_FACES[faces[:, 1]]]
