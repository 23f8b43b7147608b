"""
Single-cell box-girder cross-sections.

Coordinates: ``x`` is transverse (positive to the right, 0 on the bridge axis),
``y`` is vertical measured up from the bottom fiber.  All lengths in metres.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from shapely.geometry import Polygon, box
from shapely.geometry.polygon import orient


class GeometryError(ValueError):
    """Raised for infeasible section or profile parameters."""


@dataclass(frozen=True)
class SectionParams:
    B_top: float
    B_bot: float
    h: float
    t_top: float
    t_bot: float
    t_web: float
    t_cant_end: float = 0.20

    @property
    def cant_len(self) -> float:
        return 0.5 * (self.B_top - self.B_bot)

    def check(self) -> None:
        problems = []
        for name in ("B_top", "B_bot", "h", "t_top", "t_bot", "t_web", "t_cant_end"):
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be > 0 (got {getattr(self, name)!r})")
        if problems:
            raise GeometryError("; ".join(problems))
        if self.B_top < self.B_bot:
            problems.append(f"B_top ({self.B_top}) < B_bot ({self.B_bot})")
        if self.t_top + self.t_bot >= self.h:
            problems.append(
                f"t_top + t_bot ({self.t_top + self.t_bot:g}) >= h ({self.h:g}): void collapses"
            )
        if 2.0 * self.t_web >= self.B_bot:
            problems.append(f"2*t_web ({2 * self.t_web:g}) >= B_bot ({self.B_bot:g}): webs overlap")
        if self.cant_len > 0 and self.t_cant_end > self.t_top:
            problems.append("t_cant_end must not exceed t_top")
        if problems:
            raise GeometryError("; ".join(problems))


@dataclass(frozen=True)
class CrossSection:
    """Outer outline, the cell void and per-plate midline samples.

    ``void_polygon`` may be ``None`` for plain solid outlines built directly
    (used to check the integrals); :func:`build_cross_section` never does that.
    """

    outer_polygon: np.ndarray
    void_polygon: np.ndarray | None
    plate_midlines: dict = field(default_factory=dict)
    params: SectionParams | None = None


@dataclass(frozen=True)
class SectionProperties:
    A: float
    y_c: float
    I: float
    ratio_top: float
    ratio_2b_h: float
    flange_stiffness_ratio: float


@dataclass(frozen=True)
class HeightProfile:
    h_root: float
    h_mid: float
    haunch_length: float
    exponent: float = 2.0
    t_bot_root: float = 1.50
    t_bot_mid: float = 0.32
    # top-plate and web thickness at the root; None keeps the mid-span value
    t_top_root: float | None = None
    t_web_root: float | None = None
    web_root_zone: float = 10.0

    def __post_init__(self):
        if not (self.h_root >= self.h_mid > 0):
            raise GeometryError(f"need h_root >= h_mid > 0, got {self.h_root}, {self.h_mid}")
        if not self.haunch_length > 0:
            raise GeometryError("haunch_length must be > 0")
        if not self.exponent > 0:
            raise GeometryError("exponent must be > 0")


def build_cross_section(params: SectionParams) -> CrossSection:
    """Outline and void polygons (counter-clockwise) of the box section."""
    params.check()
    bt, bb, h = params.B_top / 2, params.B_bot / 2, params.h
    tt, tb, tw, te = params.t_top, params.t_bot, params.t_web, params.t_cant_end

    if params.cant_len > 0:
        outer = [
            (-bb, 0.0), (bb, 0.0), (bb, h - tt), (bt, h - te),
            (bt, h), (-bt, h), (-bt, h - te), (-bb, h - tt),
        ]
    else:
        outer = [(-bb, 0.0), (bb, 0.0), (bb, h), (-bb, h)]
    xi = bb - tw
    void = [(-xi, tb), (xi, tb), (xi, h - tt), (-xi, h - tt)]

    outer = np.array(outer, dtype=float)
    void = np.array(void, dtype=float)
    if polygon_area(void) <= 0:
        raise GeometryError("void area is zero: solid sections are not supported")
    po, pv = Polygon(outer), Polygon(void)
    if not (po.is_valid and pv.is_valid):
        raise GeometryError("outline or void polygon self-intersects")
    if not po.contains(pv) or po.exterior.distance(pv.exterior) <= 0:
        raise GeometryError("void is not strictly inside the outline")

    n = 21
    ym_top = h - tt / 2
    mid = {
        "top": np.column_stack([np.linspace(-xi, xi, n), np.full(n, ym_top)]),
        "bottom": np.column_stack([np.linspace(-xi, xi, n), np.full(n, tb / 2)]),
        "web_left": np.column_stack([np.full(n, -bb + tw / 2), np.linspace(tb, h - tt, n)]),
        "web_right": np.column_stack([np.full(n, bb - tw / 2), np.linspace(tb, h - tt, n)]),
    }
    if params.cant_len > 0:
        s = np.linspace(0.0, 1.0, n)
        t = tt + (te - tt) * s
        xs = bb + s * params.cant_len
        mid["cantilever_right"] = np.column_stack([xs, h - t / 2])
        mid["cantilever_left"] = np.column_stack([-xs[::-1], (h - t / 2)[::-1]])
    return CrossSection(outer, void, mid, params)


def polygon_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    x1, y1 = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(x * y1 - x1 * y))


def polygon_integrals(v) -> tuple[float, float, float, float]:
    """Green's theorem integrals of a simple polygon.

    Returns ``(A, Sx, Sy, Ixx)`` with ``Sx = ∫y dA``, ``Sy = ∫x dA`` and
    ``Ixx = ∫y² dA`` about the coordinate origin.  Clockwise input gives
    negated values.
    """
    v = np.asarray(v, dtype=float)
    x, y = v[:, 0], v[:, 1]
    x1, y1 = np.roll(x, -1), np.roll(y, -1)
    c = x * y1 - x1 * y
    A = 0.5 * c.sum()
    Sx = (c * (y + y1)).sum() / 6.0
    Sy = (c * (x + x1)).sum() / 6.0
    Ixx = (c * (y * y + y * y1 + y1 * y1)).sum() / 12.0
    return float(A), float(Sx), float(Sy), float(Ixx)


def _region_integrals(outer, void=None):
    A, Sx, _, Ixx = polygon_integrals(outer)
    if void is not None:
        a, s, _, i = polygon_integrals(void)
        A, Sx, Ixx = A - a, Sx - s, Ixx - i
    return A, Sx, Ixx


def _clip_band(poly: Polygon, y0: float, y1: float) -> list[np.ndarray]:
    minx, _, maxx, _ = poly.bounds
    piece = poly.intersection(box(minx - 1.0, y0, maxx + 1.0, y1))
    geoms = getattr(piece, "geoms", [piece])
    out = []
    for g in geoms:
        if g.geom_type != "Polygon" or g.area <= 0:
            continue
        g = orient(g, 1.0)  # exterior CCW, holes CW
        out.append((np.asarray(g.exterior.coords)[:-1], [np.asarray(r.coords)[:-1] for r in g.interiors]))
    return out


def section_properties(cs: CrossSection) -> SectionProperties:
    """Integrals about the bottom-left corner of the bounding box, so ``y_c``
    is the height above the bottom fiber and large coordinate offsets do not
    cancel in ``I``."""
    origin = cs.outer_polygon.min(axis=0)
    outer = cs.outer_polygon - origin
    void = None if cs.void_polygon is None else cs.void_polygon - origin
    A, Sx, Ixx = _region_integrals(outer, void)
    y_c = Sx / A
    I = Ixx - A * y_c ** 2

    p = cs.params
    if p is None or void is None:
        h = float(np.ptp(outer[:, 1]))
        bb = float(np.ptp(outer[:, 0]))
        return SectionProperties(A, y_c, I, bb / h, bb / h, float("nan"))

    # flange plates: everything above the underside of the top plate at the
    # web and everything below the top of the bottom plate
    solid = Polygon(outer, [void])
    I_s = 0.0
    for y0, y1 in ((p.h - p.t_top, p.h + 1.0), (-1.0, p.t_bot)):
        for ext, holes in _clip_band(solid, y0, y1):
            a, sx, ixx = _region_integrals(ext)
            for hole in holes:  # clockwise, so the signed integrals subtract
                ha, hs, hi = _region_integrals(hole)
                a, sx, ixx = a + ha, sx + hs, ixx + hi
            I_s += ixx - 2.0 * y_c * sx + a * y_c ** 2
    return SectionProperties(
        A=A,
        y_c=y_c,
        I=I,
        ratio_top=p.B_top / p.h,
        ratio_2b_h=p.B_bot / p.h,
        flange_stiffness_ratio=I_s / I,
    )


def height_at(profile: HeightProfile, z: float) -> tuple[float, float]:
    """Depth and bottom-plate thickness at distance ``z`` from the haunch root."""
    L = profile.haunch_length
    if z < -1e-12 or z > L + 1e-12:
        raise GeometryError(f"z = {z} outside haunch [0, {L}]")
    s = (1.0 - min(max(z, 0.0), L) / L) ** profile.exponent
    h = profile.h_mid + (profile.h_root - profile.h_mid) * s
    t = profile.t_bot_mid + (profile.t_bot_root - profile.t_bot_mid) * s
    return h, t


def planform_ratios(span: float, params: SectionParams, h_mid: float | None = None):
    """Span-to-width ``L/2b`` and aspect ``2b/h`` ratios."""
    if not span > 0:
        raise GeometryError("span must be > 0")
    h = params.h if h_mid is None else h_mid
    return span / params.B_bot, params.B_bot / h


def scaled_widths(params: SectionParams, B_bot: float, scale_top: bool = True) -> SectionParams:
    """Same section with a new bottom width; the top width follows proportionally."""
    B_top = params.B_top * B_bot / params.B_bot if scale_top else params.B_top
    return replace(params, B_bot=B_bot, B_top=B_top)
