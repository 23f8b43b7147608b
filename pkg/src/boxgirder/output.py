"""
Result files: shear-lag profile CSVs, sweep summaries, stage logs,
reaction checks and legacy ASCII VTK snapshots.

Numbers are written with a fixed format so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

from .bridge import conservation_error
from .shear_lag import PLATES

PROFILE_HEADER = ("cut_id", "plate", "x_m", "y_m", "sigma_Pa", "sigma_bar_Pa", "lambda", "defined_flag")
SUMMARY_HEADER = ("sweep_value", "cut_id", "plate", "max_lambda", "min_lambda", "x_at_max_m")
STAGE_HEADER = ("stage", "name", "active_segments", "total_load_N", "max_deflection_m")
REACTION_HEADER = ("stage", "name", "applied_Fx_N", "applied_Fy_N", "applied_Fz_N",
                   "reaction_Fx_N", "reaction_Fy_N", "reaction_Fz_N", "relative_error")
NODE_REACTION_HEADER = ("node_id", "dof", "reaction_N")
POLYGON_HEADER = ("section", "polygon", "vertex", "x_m", "y_m")

VTK_HEXAHEDRON = 12
VTK_LINE = 3


class OutputError(OSError):
    pass


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if np.isnan(v):
            return "nan"
        # drop the sign of zero so -0.0 and 0.0 print alike
        return f"{v + 0.0:.10g}"
    return str(v)


def prepare_dir(path) -> Path:
    """Create ``path`` if needed and make sure files can be written there."""
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
        probe = p / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OutputError(f"output directory {str(p)!r} is not writable: {exc.strerror or exc}") from None
    return p


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    tmp = path.with_name(path.name + ".part")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    os.replace(tmp, path)
    return path


def profile_rows(profiles: dict):
    """Rows of several profiles in cut order as given, plates in fixed order."""
    order = {p: i for i, p in enumerate(PLATES)}
    for cid, prof in profiles.items():
        rows = list(prof.rows())
        rows.sort(key=lambda r: order[r[1]])  # stable: keeps the fiber order within a plate
        yield from rows


def write_profiles(path, profiles: dict) -> Path:
    return write_csv(path, PROFILE_HEADER, profile_rows(profiles))


def write_summary(path, rows) -> Path:
    return write_csv(path, SUMMARY_HEADER, rows)


def write_stage_log(path, rows) -> Path:
    return write_csv(path, STAGE_HEADER, rows)


def reaction_rows(results) -> list[tuple]:
    return [(r.index, r.name, *r.applied_total, *r.reaction_total.reshape(-1, 3).sum(axis=0), conservation_error(r))
            for r in results]


def write_reactions(path, rows) -> Path:
    return write_csv(path, REACTION_HEADER, rows)


def node_reaction_rows(result) -> list[tuple]:
    """Nonzero support forces of one stage, by node and direction (0=x, 1=y, 2=z)."""
    R = np.asarray(result.reaction_total, float)
    return [(int(i) // 3, int(i) % 3, R[i]) for i in np.flatnonzero(R)]


def write_node_reactions(path, rows) -> Path:
    return write_csv(path, NODE_REACTION_HEADER, rows)


def polygon_rows(name: str, cs) -> list[tuple]:
    rows = []
    for tag, poly in (("outer", cs.outer_polygon), ("void", cs.void_polygon)):
        if poly is not None:
            rows += [(name, tag, i, x, y) for i, (x, y) in enumerate(np.asarray(poly))]
    return rows


def write_vtk(path, mesh, displacement=None, field=None, title: str = "box girder") -> Path:
    """Legacy ASCII unstructured grid with hexes and trusses.

    Point data: displacement.  Cell data: segment or tendon group id and the
    mean longitudinal stress (hexes) or axial stress (trusses).
    """
    path = Path(path)
    nn, ne, nt = mesh.n_nodes, len(mesh.hexes), len(mesh.trusses)
    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {nn} double"]
    lines += [" ".join(fmt(c) for c in p) for p in mesh.nodes]
    lines.append(f"CELLS {ne + nt} {9 * ne + 3 * nt}")
    lines += ["8 " + " ".join(str(int(i)) for i in h) for h in mesh.hexes]
    lines += ["2 " + " ".join(str(int(i)) for i in t) for t in mesh.trusses]
    lines.append(f"CELL_TYPES {ne + nt}")
    lines += [str(VTK_HEXAHEDRON)] * ne + [str(VTK_LINE)] * nt
    lines += [f"CELL_DATA {ne + nt}", "SCALARS part_id int 1", "LOOKUP_TABLE default"]
    lines += [str(int(s)) for s in mesh.hex_segment] + [str(int(g)) for g in mesh.truss_group]
    if field is not None:
        szz = field.gauss[:, :, 2].mean(axis=1)
        lines += ["SCALARS sigma_long_Pa double 1", "LOOKUP_TABLE default"]
        lines += [fmt(v) for v in szz] + [fmt(v) for v in field.truss]
    if displacement is not None:
        u = np.asarray(displacement, float).reshape(-1, 3)
        lines += [f"POINT_DATA {nn}", "VECTORS displacement double"]
        lines += [" ".join(fmt(c) for c in row) for row in u]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
