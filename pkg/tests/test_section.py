"""Cross-section outline, polygon integrals and the haunch profile."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boxgirder.section import (
    CrossSection,
    GeometryError,
    HeightProfile,
    SectionParams,
    build_cross_section,
    height_at,
    planform_ratios,
    polygon_integrals,
    scaled_widths,
    section_properties,
)

MID = SectionParams(22.5, 11.0, 3.5, 0.30, 0.32, 0.50, 0.20)
PROFILE = HeightProfile(12.5, 3.5, 96.0)


def raster_properties(outer, void, step):
    """Area, centroid and I by cell-centre sampling with an even-odd point test."""

    def inside(poly, x, y):
        res = np.zeros(x.shape, bool)
        x0, y0 = poly[:, 0], poly[:, 1]
        x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
        for a, b, c, d in zip(x0, y0, x1, y1):
            if b == d:
                continue
            cross = ((b > y) != (d > y)) & (x < a + (y - b) * (c - a) / (d - b))
            res ^= cross
        return res

    xmin, ymin = outer.min(axis=0)
    xmax, ymax = outer.max(axis=0)
    xs = np.arange(xmin + step / 2, xmax, step)
    A = Sy = Syy = 0.0
    for y in np.arange(ymin + step / 2, ymax, step):
        yy = np.full(xs.size, y)
        n = np.count_nonzero(inside(outer, xs, yy) & ~inside(void, xs, yy))
        A += n
        Sy += n * y
        Syy += n * y * y
    A *= step * step
    Sy *= step * step
    Syy *= step * step
    yc = Sy / A
    return A, yc, Syy - A * yc ** 2


def test_default_section_has_cantilever_575():
    cs = build_cross_section(MID)
    assert MID.cant_len == pytest.approx(5.75)
    assert cs.void_polygon is not None
    assert set(cs.plate_midlines) == {"top", "bottom", "web_left", "web_right", "cantilever_left",
                                      "cantilever_right"}


def test_polygons_are_counter_clockwise_and_nested():
    cs = build_cross_section(MID)
    assert polygon_integrals(cs.outer_polygon)[0] > 0
    assert polygon_integrals(cs.void_polygon)[0] > 0
    xo, yo = cs.outer_polygon[:, 0], cs.outer_polygon[:, 1]
    xv, yv = cs.void_polygon[:, 0], cs.void_polygon[:, 1]
    assert xv.min() > xo.min() and xv.max() < xo.max()
    assert yv.min() > yo.min() and yv.max() < yo.max()


def test_collapsed_void_is_rejected():
    p = SectionParams(11.0, 11.0, 0.62, 0.30, 0.32, 0.50, 0.20)
    with pytest.raises(GeometryError, match="void collapses"):
        build_cross_section(p)


def test_overlapping_webs_are_rejected():
    with pytest.raises(GeometryError, match="webs overlap"):
        build_cross_section(SectionParams(22.5, 1.0, 3.5, 0.3, 0.32, 0.5))


@pytest.mark.parametrize("field", ["B_top", "h", "t_web"])
def test_non_positive_dimension_named(field):
    from dataclasses import replace

    with pytest.raises(GeometryError, match=field):
        build_cross_section(replace(MID, **{field: 0.0}))


def test_rectangle_closed_form():
    b, h = 2.0, 3.0
    outer = np.array([[0, 0], [b, 0], [b, h], [0, h]], float)
    sp = section_properties(CrossSection(outer, None))
    assert sp.A == pytest.approx(b * h, rel=1e-14)
    assert sp.y_c == pytest.approx(h / 2, rel=1e-14)
    assert sp.I == pytest.approx(b * h ** 3 / 12, rel=1e-13)


def test_default_section_against_raster_oracle():
    # frozen from the raster oracle below (1 mm cells): A = 12.575 m2, I = 25.460 m4
    cs = build_cross_section(MID)
    sp = section_properties(cs)
    A_r, yc_r, I_r = raster_properties(cs.outer_polygon, cs.void_polygon, 0.001)
    assert sp.A == pytest.approx(A_r, rel=1e-3)
    assert sp.y_c == pytest.approx(yc_r, rel=1e-3)
    assert sp.I == pytest.approx(I_r, rel=1e-3)
    assert sp.A == pytest.approx(12.575, rel=1e-4)
    assert sp.I == pytest.approx(25.460, rel=1e-4)


def test_default_section_ratios():
    sp = section_properties(build_cross_section(MID))
    assert round(sp.ratio_top, 2) == 6.43
    assert 0 < sp.y_c < MID.h
    assert 0 < sp.flange_stiffness_ratio < 1


def test_flange_stiffness_ratio_grows_with_bottom_width():
    ratios = [section_properties(build_cross_section(scaled_widths(MID, 2 * b))).flange_stiffness_ratio
              for b in (5.25, 5.6, 5.96, 6.3)]
    assert np.all(np.diff(ratios) > 0)


@given(dx=st.floats(-50, 50), dy=st.floats(-50, 50))
def test_properties_translation_invariant(dx, dy):
    cs = build_cross_section(MID)
    moved = CrossSection(cs.outer_polygon + [dx, dy], cs.void_polygon + [dx, dy], cs.plate_midlines, cs.params)
    a, b = section_properties(cs), section_properties(moved)
    assert b.A == pytest.approx(a.A, rel=1e-12)
    assert b.I == pytest.approx(a.I, rel=1e-12)
    assert b.y_c == pytest.approx(a.y_c, rel=1e-12)


def test_second_moment_additive():
    cs = build_cross_section(MID)
    sp = section_properties(cs)
    Ao, So, _, Io = polygon_integrals(cs.outer_polygon)  # bottom fiber at y = 0
    Av, Sv, _, Iv = polygon_integrals(cs.void_polygon)
    yc = sp.y_c
    I_outer = Io - 2 * yc * So + Ao * yc ** 2
    I_void = Iv - 2 * yc * Sv + Av * yc ** 2
    assert I_outer - I_void == pytest.approx(sp.I, rel=1e-12)


def test_clockwise_polygon_negates_integrals():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    a = np.array(polygon_integrals(sq))
    b = np.array(polygon_integrals(sq[::-1]))
    np.testing.assert_allclose(a, -b)


@given(b=st.floats(0.5, 10), h=st.floats(0.5, 10), x0=st.floats(-5, 5), y0=st.floats(-5, 5))
def test_rectangle_integrals_property(b, h, x0, y0):
    r = np.array([[x0, y0], [x0 + b, y0], [x0 + b, y0 + h], [x0, y0 + h]])
    A, Sx, Sy, Ixx = polygon_integrals(r)
    assert A == pytest.approx(b * h, rel=1e-12)
    assert Sx == pytest.approx(b * h * (y0 + h / 2), rel=1e-9, abs=1e-9)
    assert Sy == pytest.approx(b * h * (x0 + b / 2), rel=1e-9, abs=1e-9)
    assert Ixx == pytest.approx(b * h ** 3 / 12 + b * h * (y0 + h / 2) ** 2, rel=1e-9, abs=1e-9)


# ---------------------------------------------------------------- height profile


def test_height_endpoints():
    assert height_at(PROFILE, 0.0) == (12.5, 1.5)
    h, t = height_at(PROFILE, 96.0)
    assert h == 3.5 and t == pytest.approx(0.32)


def test_linear_profile_midpoint():
    p = HeightProfile(12.5, 3.5, 96.0, exponent=1.0)
    assert height_at(p, 48.0)[0] == pytest.approx(8.0)


@pytest.mark.parametrize("z", [-0.1, 96.5])
def test_height_outside_haunch(z):
    with pytest.raises(GeometryError, match="outside haunch"):
        height_at(PROFILE, z)


def test_profile_rejects_inverted_depths():
    with pytest.raises(GeometryError):
        HeightProfile(3.0, 3.5, 96.0)


@given(z=st.lists(st.floats(0, 96), min_size=2, max_size=20), e=st.floats(0.5, 4))
def test_height_monotone(z, e):
    p = HeightProfile(12.5, 3.5, 96.0, exponent=e)
    zs = np.sort(z)
    hs = [height_at(p, v)[0] for v in zs]
    assert np.all(np.diff(hs) <= 1e-12)
    assert all(3.5 <= h <= 12.5 for h in hs)


# ---------------------------------------------------------------- planform


def test_planform_default_span():
    L2b, b2h = planform_ratios(210.0, MID)
    assert round(L2b, 2) == 19.09


def test_planform_aspect_three():
    _, b2h = planform_ratios(100.0, scaled_widths(MID, 10.5))
    assert b2h == pytest.approx(3.0)


def test_planform_unit_ratio():
    assert planform_ratios(11.0, MID)[0] == 1.0


def test_planform_rejects_zero_span():
    with pytest.raises(GeometryError):
        planform_ratios(0.0, MID)
