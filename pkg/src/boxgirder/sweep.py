"""
Parametric sweeps over the bridge: bottom-plate aspect ratio ``2b/h`` and
main span.  Each member is a full staged analysis; members run in a process
pool when more than one worker is allowed.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bridge import CUT_IDS, BridgeConfig, build_bridge, conservation_error, run_staged
from .section import scaled_widths
from .shear_lag import PLATES
from .staging import stage_log_rows

log = logging.getLogger(__name__)

ASPECT_RATIOS = (3.0, 3.2, 3.4, 3.6)
MAIN_SPANS = (165.0, 185.0, 210.0, 230.0)


class SweepError(RuntimeError):
    pass


def aspect_config(base: BridgeConfig, ratio: float, scale_top: bool = True) -> BridgeConfig:
    """Bridge with ``B_bot = ratio * h`` at the shallow (mid-span) depth."""
    if not ratio > 0:
        raise ValueError("aspect ratio must be > 0")
    p = scaled_widths(base.params, ratio * base.params.h, scale_top)
    lay = replace(base.layout, pier_plan=(base.layout.pier_plan[0], p.B_bot))
    return replace(base, params=p, layout=lay)


def span_config(base: BridgeConfig, main_span: float) -> BridgeConfig:
    """Bridge with a new main span; side spans and the haunch scale with it."""
    if not main_span > 0:
        raise ValueError("main span must be > 0")
    s0, s1, s2 = base.layout.spans
    f = main_span / s1
    lay = replace(base.layout, spans=(s0 * f, main_span, s2 * f))
    prof = replace(base.profile, haunch_length=base.profile.haunch_length * f)
    return replace(base, layout=lay, profile=prof)


@dataclass
class MemberResult:
    value: float  # reported sweep coordinate (2b/h or L/2b)
    variants: dict  # variant -> {cut id -> ShearLagProfile}
    stage_log: list
    conservation: float


@dataclass
class SweepReport:
    kind: str
    variant: str
    members: list = field(default_factory=list)

    @property
    def values(self) -> list[float]:
        return [m.value for m in self.members]

    def rows(self) -> list[tuple]:
        """Summary rows, sorted by sweep value, cut and plate."""
        out = []
        for m in self.members:
            profs = m.variants[self.variant]
            for cid in CUT_IDS:
                if cid not in profs:
                    continue
                p = profs[cid]
                for pl in PLATES:
                    mx, mn, xm = p.plate_stats(pl)
                    out.append((m.value, cid, pl, mx, mn, xm))
        order = {c: i for i, c in enumerate(CUT_IDS)}
        plate_order = {p: i for i, p in enumerate(PLATES)}
        return sorted(out, key=lambda r: (r[0], order[r[1]], plate_order[r[2]]))

    def section_max(self, cut_id: str, plates=("top", "bottom", "cantilever_left", "cantilever_right")) -> list[float]:
        """Largest lambda over ``plates`` at one cut, per member."""
        vals = []
        for m in self.members:
            p = m.variants[self.variant][cut_id]
            v = [p.plate_stats(pl)[0] for pl in plates]
            v = [x for x in v if np.isfinite(x)]
            vals.append(max(v) if v else float("nan"))
        return vals


def run_member(cfg: BridgeConfig, value: float, variant: str = "total") -> MemberResult:
    model = build_bridge(cfg)
    an = run_staged(model)
    if variant not in an.profiles:
        raise SweepError(f"member {value:g}: no {variant!r} profiles")
    return MemberResult(value, an.profiles, stage_log_rows(an.results), conservation_error(an.final))


def _run(args):
    return run_member(*args)


def run_sweep(kind: str, members: list[tuple[float, BridgeConfig]], threads: int = 1, variant: str = "total",
              on_member=None) -> SweepReport:
    """Run the members (``(value, config)`` pairs) and collect a report.

    ``on_member(result)`` is called as each member finishes, so callers can
    persist partial results.  The first failing member aborts the sweep.
    """
    rep = SweepReport(kind, variant)
    jobs = [(cfg, v, variant) for v, cfg in members]
    workers = max(1, min(int(threads), len(jobs), os.cpu_count() or 1))
    done = []
    try:
        if workers == 1:
            for job in jobs:
                r = _run(job)
                done.append(r)
                if on_member:
                    on_member(r)
        else:
            with ProcessPoolExecutor(workers) as ex:
                for r in ex.map(_run, jobs):
                    done.append(r)
                    if on_member:
                        on_member(r)
    except Exception as exc:
        finished = ", ".join(f"{r.value:g}" for r in done) or "none"
        raise SweepError(f"{kind} sweep failed after members [{finished}]: {type(exc).__name__}: {exc}") from exc
    rep.members = sorted(done, key=lambda r: r.value)
    return rep


def run_sweep_aspect(base: BridgeConfig | None = None, ratios=ASPECT_RATIOS, threads: int = 1,
                     scale_top: bool = True, variant: str = "total", on_member=None) -> SweepReport:
    """Staged runs at ``2b/h`` in ``ratios`` with the main span fixed."""
    base = base or BridgeConfig()
    members = [(float(r), aspect_config(base, r, scale_top)) for r in ratios]
    return run_sweep("aspect", members, threads, variant, on_member)


def run_sweep_span(base: BridgeConfig | None = None, spans=MAIN_SPANS, threads: int = 1, variant: str = "total",
                   on_member=None) -> SweepReport:
    """Staged runs at the main spans in ``spans``; the value reported is ``L/2b``."""
    base = base or BridgeConfig()
    members = [(round(float(L) / base.params.B_bot, 2), span_config(base, L)) for L in spans]
    return run_sweep("span", members, threads, variant, on_member)
