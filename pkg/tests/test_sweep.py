"""Aspect and span sweeps."""

from dataclasses import replace

import numpy as np
import pytest

from boxgirder.bridge import BridgeConfig
from boxgirder.sweep import (
    ASPECT_RATIOS,
    MAIN_SPANS,
    MemberResult,
    SweepError,
    SweepReport,
    aspect_config,
    run_sweep,
    span_config,
)


def test_aspect_values_are_bottom_width_over_depth():
    base = BridgeConfig()
    for r in ASPECT_RATIOS:
        cfg = aspect_config(base, r)
        assert cfg.params.B_bot / cfg.params.h == pytest.approx(r, rel=1e-14)
        assert cfg.layout.pier_plan[1] == cfg.params.B_bot
        # cantilevers keep their proportion to the bottom width
        assert cfg.params.B_top / cfg.params.B_bot == pytest.approx(base.params.B_top / base.params.B_bot)
    held = aspect_config(base, 3.0, scale_top=False)
    assert held.params.B_top == base.params.B_top
    assert [round(aspect_config(base, r).params.B_bot / 2, 2) for r in ASPECT_RATIOS] == [5.25, 5.6, 5.95, 6.3]


def test_span_config_scales_side_spans():
    base = BridgeConfig()
    cfg = span_config(base, 165.0)
    assert cfg.layout.spans == pytest.approx((122 * 165 / 210, 165.0, 122 * 165 / 210))
    assert cfg.profile.haunch_length == pytest.approx(96 * 165 / 210)
    assert span_config(base, 210.0) == base
    with pytest.raises(ValueError):
        span_config(base, 0.0)


def test_span_sweep_values():
    B = BridgeConfig().params.B_bot
    assert [round(L / B, 2) for L in MAIN_SPANS] == [15.0, 16.82, 19.09, 20.91]


def test_summary_rows_per_plate(mini_analysis):
    members = [MemberResult(v, mini_analysis.profiles, [], 0.0) for v in (3.0, 3.2, 3.4, 3.6)]
    rows = SweepReport("aspect", "total", members).rows()
    plates = {r[2] for r in rows}
    assert len(mini_analysis.profiles["total"]) == 6
    for pl in plates:
        assert sum(r[2] == pl for r in rows) == 24
    assert [r[0] for r in rows] == sorted(r[0] for r in rows)


def test_single_member_equals_staged_run_and_partial_results_survive(mini_analysis, mini_config):
    bad = replace(mini_config, resolution=replace(mini_config.resolution, n_flange=3))
    seen = []
    with pytest.raises(SweepError, match=r"after members \[1\]"):
        run_sweep("aspect", [(1.0, mini_config), (2.0, bad)], on_member=seen.append)
    assert [m.value for m in seen] == [1.0]
    got, ref = seen[0].variants, mini_analysis.profiles
    assert set(got) == set(ref)
    for variant in ref:
        for cid, p in ref[variant].items():
            np.testing.assert_array_equal(got[variant][cid].lam, p.lam)
            np.testing.assert_array_equal(got[variant][cid].sigma, p.sigma)
    assert seen[0].conservation < 1e-8


def test_empty_sweep():
    assert run_sweep("span", []).members == []
