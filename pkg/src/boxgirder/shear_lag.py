"""
Shear-lag coefficients from a solid stress field.

At a section cut the longitudinal stress ``sigma_z`` is integrated to the
resultants ``N`` and ``M`` (about the cut's own centroid); the primary-beam
stress is ``sigma_bar = N/A + M (y - y_c)/I`` and the coefficient is
``lambda = sigma_z / sigma_bar``.  Section properties used for ``sigma_bar``
come from the same quadrature as the resultants, so integrating
``sigma_bar`` over the cut gives back ``N`` and ``M`` to round-off.

Fiber height ``y`` is measured up from the bottom fiber of the cut.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elements import shape_derivatives, shape_functions
from .mesh import Mesh, MeshError, locate_points
from .section import SectionProperties
from .stress import SZZ, StressField, interpolate_nodal

PLATES = ("cantilever_left", "top", "cantilever_right", "web_left", "web_right", "bottom")

_G3, _W3 = np.polynomial.legendre.leggauss(3)


@dataclass(frozen=True)
class SectionCut:
    cut_id: str
    z: float
    plate: np.ndarray  # plate tag per sample
    x: np.ndarray
    y: np.ndarray  # above the bottom fiber
    h: float  # section depth at the cut

    @property
    def points(self) -> np.ndarray:
        """Global coordinates of the samples (deck surface at Y = 0)."""
        return np.column_stack([self.x, self.y - self.h, np.full(self.x.size, self.z)])


@dataclass
class ShearLagProfile:
    cut_id: str
    z: float
    plate: np.ndarray
    x: np.ndarray
    y: np.ndarray
    sigma: np.ndarray
    sigma_bar: np.ndarray
    lam: np.ndarray  # nan where undefined
    defined: np.ndarray
    N: float
    M: float
    props: SectionProperties

    def plate_stats(self, plate: str) -> tuple[float, float, float]:
        """``(max lambda, min lambda, x at max)`` over the defined samples of a plate."""
        m = (self.plate == plate) & self.defined
        if not m.any():
            return float("nan"), float("nan"), float("nan")
        lam, x = self.lam[m], self.x[m]
        k = int(np.argmax(lam))
        return float(lam[k]), float(lam.min()), float(x[k])

    def value_at(self, plate: str, x: float) -> float:
        m = self.plate == plate
        k = int(np.argmin(np.abs(self.x[m] - x)))
        return float(self.lam[m][k])

    def rows(self):
        for i in range(self.x.size):
            yield (self.cut_id, str(self.plate[i]), float(self.x[i]), float(self.y[i]), float(self.sigma[i]),
                   float(self.sigma_bar[i]), float(self.lam[i]), bool(self.defined[i]))


def _dense(a: np.ndarray) -> np.ndarray:
    """Add midpoints between consecutive values."""
    mids = 0.5 * (a[:-1] + a[1:])
    return np.sort(np.concatenate([a, mids]))


def girder_cut(mesh: Mesh, z: float, cut_id: str = "cut", refine: bool = True) -> SectionCut:
    """Sample fibers on the girder section at station ``z``.

    Flange samples sit at plate mid-thickness and run between the web
    centrelines (the web junction); cantilevers run from the tip to the web
    centreline; webs are sampled on their outer fiber.
    """
    gi = mesh.girder
    if gi is None:
        raise MeshError("mesh has no girder bookkeeping")
    p = gi.params_at(z)
    tpl = gi.template
    xl = tpl.x_line_params(p)
    xs = _dense(xl) if refine else xl
    bb, tw, bt = p.B_bot / 2, p.t_web, p.B_top / 2
    xj = bb - tw / 2
    plates, X, Y = [], [], []

    def add(tag, x, y):
        plates.extend([tag] * len(x))
        X.extend(x)
        Y.extend(y)

    inner = np.unique(np.concatenate([xs[np.abs(xs) < xj - 1e-9], [-xj, xj]]))
    add("top", inner, np.full(inner.size, p.h - p.t_top / 2))
    add("bottom", inner, np.full(inner.size, p.t_bot / 2))
    if p.cant_len > 0:
        xr = np.unique(np.concatenate([xs[xs > xj + 1e-9], [xj]]))
        s = np.clip((xr - bb) / p.cant_len, 0.0, 1.0)
        t = p.t_top + (p.t_cant_end - p.t_top) * s
        add("cantilever_right", xr, p.h - t / 2)
        add("cantilever_left", -xr[::-1], (p.h - t / 2)[::-1])
    nb, nw, _ = (n for _, n in tpl.y_bands)
    yw = p.t_bot + (p.h - p.t_top - p.t_bot) * np.arange(nw + 1) / nw
    yw = _dense(yw) if refine else yw
    add("web_left", np.full(yw.size, -bb), yw)
    add("web_right", np.full(yw.size, bb), yw)
    return SectionCut(cut_id, float(z), np.array(plates), np.array(X, float), np.array(Y, float), p.h)


def _cut_hexes(mesh: Mesh, z: float, hex_mask) -> tuple[np.ndarray, float]:
    gi = mesh.girder
    if gi is None:
        raise MeshError("mesh has no girder bookkeeping")
    st = gi.stations
    if z < st[0] - 1e-9 or z > st[-1] + 1e-9:
        raise MeshError(f"cut station z = {z} outside the girder [{st[0]}, {st[-1]}]")
    k = gi.interval(z)
    ids = gi.cell_hex[k][gi.cell_hex[k] >= 0]
    if hex_mask is not None:
        ids = ids[np.asarray(hex_mask)[ids]]
    if ids.size == 0:
        raise MeshError(f"no active elements at z = {z}")
    zeta = 2.0 * (z - st[k]) / (st[k + 1] - st[k]) - 1.0
    return ids, float(np.clip(zeta, -1.0, 1.0))


def cut_quadrature(mesh: Mesh, z: float, hex_mask=None):
    """3x3 Gauss rule on the cut plane: ``(host, nat, points, weights)``."""
    ids, zeta = _cut_hexes(mesh, z, hex_mask)
    s, t = np.meshgrid(_G3, _G3, indexing="ij")
    w2 = np.outer(_W3, _W3).ravel()
    nat1 = np.column_stack([s.ravel(), t.ravel(), np.full(s.size, zeta)])
    nat = np.tile(nat1, (ids.size, 1))
    host = np.repeat(ids, nat1.shape[0])
    xyz = mesh.nodes[mesh.hexes[host]]
    pts = np.einsum("pa,paj->pj", shape_functions(nat), xyz)
    dN = shape_derivatives(nat)
    a = np.einsum("pa,paj->pj", dN[:, 0], xyz)
    b = np.einsum("pa,paj->pj", dN[:, 1], xyz)
    # cut planes are normal to Z, so the projected area element is the X-Y cross product
    det = np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
    return host, nat, pts, det * np.tile(w2, ids.size)


def _girder_mask(mesh: Mesh, field: StressField | None) -> np.ndarray:
    m = np.zeros(len(mesh.hexes), bool)
    ch = mesh.girder.cell_hex
    m[ch[ch >= 0]] = True
    if field is not None:
        m &= field.hex_active
    return m


def girder_nodal_stress(mesh: Mesh, field: StressField) -> np.ndarray:
    """Nodal stresses averaged over active girder elements only."""
    return field.nodal(mesh, _girder_mask(mesh, field))


def cut_properties(mesh: Mesh, z: float, hex_mask=None) -> SectionProperties:
    """Area, centroid height above the bottom fiber and I of the meshed cut."""
    _, _, pts, w = cut_quadrature(mesh, z, hex_mask)
    h = mesh.girder.params_at(z).h
    y = pts[:, 1] + h
    A = w.sum()
    y_c = (w * y).sum() / A
    I = (w * (y - y_c) ** 2).sum()
    p = mesh.girder.params_at(z)
    return SectionProperties(float(A), float(y_c), float(I), p.B_top / h, p.B_bot / h, float("nan"))


def _sigma_z(mesh, nodal, host, nat):
    return interpolate_nodal(mesh, nodal, host, nat)[:, SZZ]


def section_resultants(field: StressField, cut: SectionCut, mesh: Mesh, nodal=None) -> tuple[float, float]:
    """``N = ∫ sigma_z dA`` and ``M = ∫ sigma_z (y - y_c) dA`` over the cut."""
    nodal = girder_nodal_stress(mesh, field) if nodal is None else nodal
    mask = _girder_mask(mesh, field)
    host, nat, pts, w = cut_quadrature(mesh, cut.z, mask)
    props = cut_properties(mesh, cut.z, mask)
    y = pts[:, 1] + cut.h
    s = _sigma_z(mesh, nodal, host, nat)
    return float((w * s).sum()), float((w * s * (y - props.y_c)).sum())


def primary_beam_stress(N: float, M: float, props: SectionProperties, y):
    """Plane-section stress ``N/A + M (y - y_c)/I``."""
    return N / props.A + M * (np.asarray(y, float) - props.y_c) / props.I


def lambda_floor(sigma_bar: np.ndarray) -> float:
    return max(0.02 * float(np.abs(sigma_bar).max(initial=0.0)), 10e3)


def shear_lag_profile(field: StressField, cut: SectionCut, mesh: Mesh, props: SectionProperties | None = None,
                      nodal=None) -> ShearLagProfile:
    """Sample ``sigma_z``, ``sigma_bar`` and ``lambda`` along the cut fibers.

    Samples where ``|sigma_bar|`` is below the floor are flagged undefined
    and carry ``lambda = nan``.
    """
    mask = _girder_mask(mesh, field)
    nodal = girder_nodal_stress(mesh, field) if nodal is None else nodal
    props = cut_properties(mesh, cut.z, mask) if props is None else props
    N, M = section_resultants(field, cut, mesh, nodal)
    ids, _ = _cut_hexes(mesh, cut.z, mask)
    sub = np.zeros(len(mesh.hexes), bool)
    sub[ids] = True
    # elements on both sides of a station plane can host the samples
    gi = mesh.girder
    k = gi.interval(cut.z)
    for kk in (k - 1, k + 1):
        if 0 <= kk < gi.cell_hex.shape[0]:
            o = gi.cell_hex[kk][gi.cell_hex[kk] >= 0]
            sub[o[mask[o]]] = True
    host, nat = locate_points(mesh, cut.points, sub, tol=1e-7)
    if np.any(host < 0):
        bad = cut.points[np.flatnonzero(host < 0)[0]]
        raise MeshError(f"cut {cut.cut_id!r}: sample ({bad[0]:.3f}, {bad[1]:.3f}, {bad[2]:.3f}) is off the mesh")
    sigma = _sigma_z(mesh, nodal, host, nat)
    sbar = primary_beam_stress(N, M, props, cut.y)
    floor = lambda_floor(sbar)
    ok = np.abs(sbar) >= floor
    lam = np.full(sigma.size, np.nan)
    lam[ok] = sigma[ok] / sbar[ok]
    return ShearLagProfile(cut.cut_id, cut.z, cut.plate, cut.x, cut.y, sigma, sbar, lam, ok, N, M, props)


def resultant_identity_error(field: StressField, cut: SectionCut, mesh: Mesh, nodal=None) -> float:
    """Relative mismatch between (N, M) of the field and of the reconstructed ``sigma_bar``."""
    mask = _girder_mask(mesh, field)
    props = cut_properties(mesh, cut.z, mask)
    N, M = section_resultants(field, cut, mesh, nodal)
    _, _, pts, w = cut_quadrature(mesh, cut.z, mask)
    y = pts[:, 1] + cut.h
    sb = primary_beam_stress(N, M, props, y)
    N2 = (w * sb).sum()
    M2 = (w * sb * (y - props.y_c)).sum()
    scale_N = abs(N) + abs(M) * np.sqrt(props.A / props.I)
    scale_M = abs(M) + abs(N) * np.sqrt(props.I / props.A)
    if scale_N == 0:
        return 0.0
    return float(max(abs(N2 - N) / scale_N, abs(M2 - M) / scale_M))
