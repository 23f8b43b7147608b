"""
Command-line driver.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import output
from .analytic import analytic_stress_concentrated, analytic_stress_uniform, reissner_parameters
from .bridge import build_bridge, max_lambda, min_lambda, run_live_load, run_staged
from .config import Config, ConfigError, default_config, load_config
from .fem import SolverError
from .live_load import LiveLoadCase, Truck, lane_offsets
from .mesh import MeshError, validate_mesh
from .section import GeometryError, build_cross_section, section_properties
from .staging import ScheduleError, stage_log_rows
from .sweep import SweepError, run_sweep_aspect, run_sweep_span

log = logging.getLogger("boxgirder")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
CONSERVATION_TOL = 1e-8


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


class NumericalFailure(RuntimeError):
    pass


def _global_flags(p: argparse.ArgumentParser, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", metavar="PATH", default=d, help="configuration file (default: shipped bridge)")
    p.add_argument("--out", metavar="DIR", default=d, help="output directory (default: from the config)")
    p.add_argument("--threads", metavar="N", type=int, default=d if suppress else 1,
                   help="concurrent sweep members")
    p.add_argument("--vtk", action="store_true", default=d if suppress else False, help="also write VTK files")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="boxgirder", description="Staged solid FE analysis and shear lag of a box-girder bridge.")
    _global_flags(ap, suppress=False)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "analyze": "staged construction and shear-lag profiles of the completed bridge",
        "live-load": "truck loading on the completed bridge",
        "sweep-aspect": "staged runs over the bottom-plate aspect ratio 2b/h",
        "sweep-span": "staged runs over the main span",
        "analytic": "closed-form mid-span stress of a simply supported box",
        "validate-mesh": "build the mesh and report its checks",
        "dump-section": "section properties at mid-span and at the pier",
    }
    for name, h in helps.items():
        _global_flags(sub.add_parser(name, help=h, description=h), suppress=True)
    return ap


# ---------------------------------------------------------------- commands


def _conservation(label: str, err: float):
    if not err <= CONSERVATION_TOL:
        raise NumericalFailure(f"{label}: applied load and reactions differ by {err:.3e} (relative)")


def _summary_line(cid, prof) -> str:
    return f"  {cid:8s} max lambda {max_lambda(prof):7.3f}   min lambda {min_lambda(prof):7.3f}"


def cmd_analyze(cfg: Config, out: Path, args) -> None:
    model = build_bridge(cfg.bridge)
    an = run_staged(model)
    output.write_stage_log(out / "stage_log.csv", stage_log_rows(an.results))
    output.write_reactions(out / "reactions.csv", output.reaction_rows(an.results))
    output.write_node_reactions(out / "node_reactions.csv", output.node_reaction_rows(an.final))
    for variant, profs in sorted(an.profiles.items()):
        output.write_profiles(out / f"profiles_{variant}.csv", profs)
    if args.vtk:
        vdir = out / "vtk"
        vdir.mkdir(exist_ok=True)
        for r in an.results:
            output.write_vtk(vdir / f"stage_{r.index:02d}_{r.name}.vtk", model.mesh, r.displacement_total,
                             r.stress, title=f"stage {r.index} {r.name}")
    for r in an.results:
        _conservation(f"stage {r.name!r}", output.reaction_rows([r])[0][-1])
    print(f"staged analysis: {len(an.results)} stages, max deflection {an.final.max_deflection:.4g} m")
    for variant in sorted(an.profiles):
        print(f"{variant}:")
        for cid, p in an.profiles[variant].items():
            print(_summary_line(cid, p))


def _live_case(cfg: Config, model) -> LiveLoadCase:
    o = cfg.analysis.live_load
    z = model.cuts[o.station] if isinstance(o.station, str) else float(o.station)
    offs = lane_offsets(o.n_trucks, o.arrangement, cfg.bridge.params.B_top / 2)
    trucks = tuple(Truck(o.gross_t, tuple(o.axle_split), tuple(o.axle_spacing), off, o.track, tuple(o.patch))
                   for off in offs)
    return LiveLoadCase(trucks, z, o.arrangement, o.stages)


def cmd_live_load(cfg: Config, out: Path, args) -> None:
    model = build_bridge(cfg.bridge)
    case = _live_case(cfg, model)
    res = run_live_load(model, case)
    _conservation("live load", res.conservation)
    output.write_profiles(out / "live_load_profiles.csv", res.profiles)
    if args.vtk:
        output.write_vtk(out / "live_load.vtk", model.mesh, res.displacement, res.field, title="live load")
    print(f"live load: {len(case.trucks)} trucks, {case.total_weight_t:g} t at z = {case.station:g} m")
    for cid, p in res.profiles.items():
        print(_summary_line(cid, p))


def _run_sweep(kind: str, cfg: Config, out: Path, args) -> None:
    sdir = out / f"sweep_{kind}"
    sdir.mkdir(exist_ok=True)
    variant = cfg.analysis.variant

    def keep(m):
        # members are persisted as they finish so a failed sweep leaves them on disk
        output.write_profiles(sdir / f"profiles_{m.value:g}.csv", m.variants[variant])
        output.write_stage_log(sdir / f"stage_log_{m.value:g}.csv", m.stage_log)

    s = cfg.analysis.sweep
    if kind == "aspect":
        rep = run_sweep_aspect(cfg.bridge, s.aspect_ratios, args.threads, s.scale_top, variant, keep)
    else:
        rep = run_sweep_span(cfg.bridge, s.main_spans, args.threads, variant, keep)
    for m in rep.members:
        _conservation(f"sweep member {m.value:g}", m.conservation)
    output.write_summary(out / f"sweep_{kind}_summary.csv", rep.rows())
    print(f"{kind} sweep ({variant}): mid-span max lambda")
    for v, lam in zip(rep.values, rep.section_max("main_L2")):
        print(f"  {v:6g}  {lam:.3f}")


def cmd_sweep_aspect(cfg, out, args):
    _run_sweep("aspect", cfg, out, args)


def cmd_sweep_span(cfg, out, args):
    _run_sweep("span", cfg, out, args)


def cmd_analytic(cfg: Config, out: Path, args) -> None:
    o = cfg.analysis.analytic
    p = cfg.bridge.params
    cs = build_cross_section(p)
    props = section_properties(cs)
    rp = reissner_parameters(props, cs, cfg.bridge.concrete, o.span)
    z = o.span / 2 if o.z is None else o.z
    rows = []
    xj = p.B_bot / 2 - p.t_web / 2
    for plate, xs, y in (("top", np.linspace(-xj, xj, 41), p.h - p.t_top / 2),
                         ("bottom", np.linspace(-xj, xj, 41), p.t_bot / 2),
                         ("cantilever_right", np.linspace(p.B_bot / 2, p.B_top / 2, 21), p.h - p.t_top / 2)):
        v = np.full(xs.size, rp.y_c - y)
        pt = (xs, v, np.full(xs.size, z))
        if o.load == "uniform":
            s = analytic_stress_uniform(o.q, o.span, rp, props, pt)
            beam = o.q * v * z * (o.span - z) / (2 * props.I)
        else:
            s = analytic_stress_concentrated(o.P, o.span, rp, props, pt)
            beam = o.P * v * min(z, o.span - z) / (2 * props.I)
        for x, si, bi in zip(xs, s, beam):
            rows.append(("analytic", plate, x, y - p.h, si, bi, si / bi if abs(bi) > 0 else float("nan"), abs(bi) > 0))
    output.write_csv(out / "analytic_profile.csv", output.PROFILE_HEADER, rows)
    print(f"k = {rp.k:.6g} 1/m, k1 = {rp.k1:.6g} 1/(Pa m^4), span {o.span:g} m, {o.load} load, z = {z:g} m")


def cmd_validate_mesh(cfg: Config, out: Path, args) -> None:
    model = build_bridge(cfg.bridge)
    rep = validate_mesh(model.mesh)
    m = model.mesh
    print(f"nodes {m.n_nodes}  hexes {len(m.hexes)}  trusses {len(m.trusses)}  dof {3 * m.n_nodes}")
    print(rep.summary())
    if args.vtk:
        output.write_vtk(out / "mesh.vtk", m, title="mesh")
    if not rep.ok:
        raise NumericalFailure("mesh failed validation")


def cmd_dump_section(cfg: Config, out: Path, args) -> None:
    from dataclasses import replace

    b = cfg.bridge
    root = replace(b.params, h=b.profile.h_root, t_bot=b.profile.t_bot_root,
                   t_top=b.profile.t_top_root or b.params.t_top, t_web=b.profile.t_web_root or b.params.t_web)
    rows = []
    for name, p in (("mid-span", b.params), ("pier", root)):
        cs = build_cross_section(p)
        sp = section_properties(cs)
        rows += output.polygon_rows(name, cs)
        print(f"{name}: h {p.h:g} m  A {sp.A:.6g} m2  y_c {sp.y_c:.6g} m  I {sp.I:.6g} m4  "
              f"B_top/h {p.B_top / p.h:.4g}  2b/h {p.B_bot / p.h:.4g}")
    print(f"main span / bottom width (L/2b) {b.layout.spans[1] / b.params.B_bot:.4g}")
    output.write_csv(out / "section_polygons.csv", output.POLYGON_HEADER, rows)


COMMANDS = {
    "analyze": cmd_analyze,
    "live-load": cmd_live_load,
    "sweep-aspect": cmd_sweep_aspect,
    "sweep-span": cmd_sweep_span,
    "analytic": cmd_analytic,
    "validate-mesh": cmd_validate_mesh,
    "dump-section": cmd_dump_section,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config) if args.config else default_config()
    except ConfigError as exc:
        print(f"configuration error in {args.config or 'default config'}:\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads is not None and args.threads < 1:
        print("--threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out = output.prepare_dir(args.out or cfg.output.dir)
    except output.OutputError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    args.vtk = bool(args.vtk or cfg.output.vtk)
    try:
        COMMANDS[args.command](cfg, out, args)
    except (ScheduleError, GeometryError) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, MeshError, SweepError, NumericalFailure, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
