"""CSV and VTK writers."""

import csv
import hashlib

import numpy as np
import pytest

from boxgirder.output import (
    PROFILE_HEADER,
    STAGE_HEADER,
    SUMMARY_HEADER,
    OutputError,
    fmt,
    polygon_rows,
    prepare_dir,
    write_csv,
    write_profiles,
    write_stage_log,
    write_vtk,
)
from boxgirder.section import SectionParams, build_cross_section
from boxgirder.staging import stage_log_rows
from boxgirder.verification import block_mesh, patch_test


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.mark.parametrize("v,s", [(1.0, "1"), (-0.0, "0"), (0.1 + 0.2, "0.3"), (1e-20, "1e-20"), (3, "3"),
                                 (True, "1"), (np.float64("nan"), "nan"), (np.int64(7), "7"), ("x", "x"),
                                 (123456789.123456, "123456789.1")])
def test_fmt(v, s):
    assert fmt(v) == s


def test_documented_headers():
    assert PROFILE_HEADER == ("cut_id", "plate", "x_m", "y_m", "sigma_Pa", "sigma_bar_Pa", "lambda", "defined_flag")
    assert SUMMARY_HEADER == ("sweep_value", "cut_id", "plate", "max_lambda", "min_lambda", "x_at_max_m")
    assert STAGE_HEADER == ("stage", "name", "active_segments", "total_load_N", "max_deflection_m")


def test_profiles_written_deterministically(tmp_path, mini_analysis):
    a = write_profiles(tmp_path / "a.csv", mini_analysis.profiles["total"])
    b = write_profiles(tmp_path / "b.csv", mini_analysis.profiles["total"])
    assert sha(a) == sha(b)
    with open(a, newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == PROFILE_HEADER
    n = sum(p.x.size for p in mini_analysis.profiles["total"].values())
    assert len(rows) == n + 1
    assert {r[7] for r in rows[1:]} <= {"0", "1"}


def test_stage_log(tmp_path, mini_analysis):
    p = write_stage_log(tmp_path / "s.csv", stage_log_rows(mini_analysis.results))
    lines = p.read_text().splitlines()
    assert lines[0] == ",".join(STAGE_HEADER)
    assert lines[1].startswith("0,phase1,")
    assert len(lines) == 1 + len(mini_analysis.results)


def test_write_is_atomic(tmp_path):
    p = write_csv(tmp_path / "x.csv", ("a",), [(1,), (2,)])
    assert p.read_text() == "a\n1\n2\n"
    assert not list(tmp_path.glob("*.part"))


def test_unwritable_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OutputError, match="not writable"):
        prepare_dir(blocker / "sub")


def test_polygon_rows():
    cs = build_cross_section(SectionParams(22.5, 11.0, 3.5, 0.30, 0.32, 0.50, 0.20))
    rows = polygon_rows("mid", cs)
    assert len(rows) == len(cs.outer_polygon) + len(cs.void_polygon)
    assert rows[0][:3] == ("mid", "outer", 0)


def test_vtk_layout(tmp_path):
    mesh = block_mesh(1, 1, 1, 2, 2, 2)
    field = patch_test(1e6)
    u = np.zeros(3 * mesh.n_nodes)
    text = write_vtk(tmp_path / "m.vtk", mesh, u, field).read_text().splitlines()
    assert text[0] == "# vtk DataFile Version 3.0" and text[3] == "DATASET UNSTRUCTURED_GRID"
    assert f"POINTS {mesh.n_nodes} double" in text
    assert "CELLS 8 72" in text and "CELL_TYPES 8" in text
    i = text.index("SCALARS sigma_long_Pa double 1")
    np.testing.assert_allclose([float(v) for v in text[i + 2:i + 10]], 1e6, rtol=1e-9)
    assert text[-1 - mesh.n_nodes] == "VECTORS displacement double"
