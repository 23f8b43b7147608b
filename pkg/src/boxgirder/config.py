"""
Bridge configuration documents.

A configuration is JSON.  Every dimensioned value is a string carrying its
unit (``"50 cm"``, ``"3.5e4 MPa"``); dimensionless values are plain numbers.
All problems found in a document are reported together, each with the line
of the offending key.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from importlib import resources

from .bridge import CUT_IDS, BridgeConfig, TendonOptions
from .elements import Material
from .mesh import MeshResolution, SpanLayout
from .section import HeightProfile, SectionParams
from .staging import ScheduleOptions

# unit -> (dimension, factor to SI)
UNITS = {
    "m": ("length", 1.0), "cm": ("length", 1e-2), "mm": ("length", 1e-3), "km": ("length", 1e3),
    "m2": ("area", 1.0), "cm2": ("area", 1e-4), "mm2": ("area", 1e-6),
    "Pa": ("pressure", 1.0), "kPa": ("pressure", 1e3), "MPa": ("pressure", 1e6), "GPa": ("pressure", 1e9),
    "N/m2": ("pressure", 1.0), "N/mm2": ("pressure", 1e6),
    "N": ("force", 1.0), "kN": ("force", 1e3), "MN": ("force", 1e6),
    "N/m": ("force_per_length", 1.0), "kN/m": ("force_per_length", 1e3), "MN/m": ("force_per_length", 1e6),
    "kg/m3": ("density", 1.0), "t/m3": ("density", 1e3),
    "K": ("temperature", 1.0), "degC": ("temperature", 1.0), "°C": ("temperature", 1.0),
    "1/K": ("expansion", 1.0), "1/degC": ("expansion", 1.0), "1/°C": ("expansion", 1.0),
    "m/s2": ("acceleration", 1.0),
    "kg": ("mass", 1.0), "t": ("mass", 1e3),
}

# spring stiffness shares the N/m family with line loads
_SAME = {"stiffness": "force_per_length"}

_NUM = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S.*?)?\s*$")

REQUESTS = ("staged", "live_load", "sweep_aspect", "sweep_span", "analytic")
VARIANTS = ("total", "dead")


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


@dataclass(frozen=True)
class LiveLoadOptions:
    station: str | float = "main_L2"  # cut id or distance from the left abutment (m)
    n_trucks: int = 4
    gross_t: float = 32.2
    arrangement: str = "symmetric"
    stages: int = 1
    axle_split: tuple = (0.2, 0.4, 0.4)
    axle_spacing: tuple = (3.5, 1.35)
    track: float = 1.8
    patch: tuple = (0.6, 0.2)


@dataclass(frozen=True)
class SweepOptions:
    aspect_ratios: tuple = (3.0, 3.2, 3.4, 3.6)
    main_spans: tuple = (165.0, 185.0, 210.0, 230.0)
    scale_top: bool = True


@dataclass(frozen=True)
class AnalyticOptions:
    span: float = 50.0
    load: str = "uniform"
    q: float = 1e5  # N/m
    P: float = 1e6  # N
    z: float | None = None  # station; mid-span when None


@dataclass(frozen=True)
class AnalysisRequest:
    request: str = "staged"
    variant: str = "total"
    live_load: LiveLoadOptions = LiveLoadOptions()
    sweep: SweepOptions = SweepOptions()
    analytic: AnalyticOptions = AnalyticOptions()


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    vtk: bool = False


@dataclass(frozen=True)
class Config:
    bridge: BridgeConfig = BridgeConfig()
    analysis: AnalysisRequest = AnalysisRequest()
    output: OutputSpec = OutputSpec()
    units: dict = field(default_factory=dict)  # dotted key -> declared unit


# ------------------------------------------------------------------ schema
# leaf kinds: a dimension name, "float", "int", "bool", "str", "opt_int",
# or ("list", kind)

_SECTION = {k: "length" for k in ("B_top", "B_bot", "h", "t_top", "t_bot", "t_web", "t_cant_end")}
_PROFILE = {"h_root": "length", "h_mid": "length", "haunch_length": "length", "exponent": "float",
            "t_bot_root": "length", "t_bot_mid": "length", "t_top_root": "length", "t_web_root": "length",
            "web_root_zone": "length"}
_LAYOUT = {"spans": ("list", "length"), "zero_block_length": "length", "closure_length": "length",
           "segments_per_arm": "int", "diaphragm_thickness": "length", "pier_plan": ("list", "length"),
           "pier_height": "length", "end_diaphragms": "bool", "closure_diaphragm_thickness": "length"}
_MATERIAL = {"E": "pressure", "nu": "float", "rho": "density", "alpha": "expansion"}
_TENDONS = {"strands_per_tendon": "int", "strand_area": "area", "zero_block_tendons": "int",
            "tendons_per_pair": "int", "top_offsets": ("list", "length"), "top_depth": "length",
            "anchor_inset": "length", "mid_bottom": "int", "mid_bottom_x": ("list", "float"),
            "mid_bottom_half": ("list", "float"), "mid_top": "int", "mid_top_x": "length",
            "mid_top_half": "float", "side_bottom": "int", "side_bottom_x": ("list", "float"),
            "side_bottom_reach": ("list", "float"), "side_start": "length", "max_truss_length": "length"}
_MESH = {"n_cant": "int", "n_flange": "int", "n_web_t": "int", "n_web_h": "int", "n_top": "int", "n_bot": "int",
         "max_element_length": "length", "min_divisions_per_segment": "int", "n_pier_h": "int"}
_BOUNDARY = {"bearing_spring": "stiffness", "pier_wall": "length", "piers": "bool"}
_SCHEDULE = {"n_substages": "opt_int", "p_t_structure": "pressure", "p_mid": "pressure", "p_pavement": "pressure",
             "dT": "temperature", "prestress": "bool", "mid_continuity_segments": "int"}
_LIVE = {"station": "station", "n_trucks": "int", "gross_weight": "mass", "arrangement": "str", "stages": "int",
         "axle_split": ("list", "float"), "axle_spacing": ("list", "length"), "track": "length",
         "patch": ("list", "length")}
_SWEEP = {"aspect_ratios": ("list", "float"), "main_spans": ("list", "length"), "scale_top": "bool"}
_ANALYTIC = {"span": "length", "load": "str", "q": "force_per_length", "P": "force", "z": "length"}

SCHEMA = {
    "geometry": {"section": _SECTION, "height_profile": _PROFILE, "span_layout": _LAYOUT},
    "materials": {"concrete": _MATERIAL, "strand": _MATERIAL},
    "tendons": _TENDONS,
    "mesh": _MESH,
    "boundary": _BOUNDARY,
    "schedule": _SCHEDULE,
    "gravity": "acceleration",
    "analysis": {"request": "str", "variant": "str", "live_load": _LIVE, "sweep": _SWEEP, "analytic": _ANALYTIC},
    "output": {"dir": "str", "vtk": "bool"},
}


# ------------------------------------------------------------ key lines


def _key_lines(text: str) -> dict:
    """Line number of every object key, by key path."""
    out = {}
    stack = []  # [kind, path, key or index, expecting key]
    i, n, line = 0, len(text), 1

    def value_path():
        if not stack:
            return ()
        top = stack[-1]
        return top[1] + (top[2],)

    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
        elif c == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 2 if text[j] == "\\" else 1
            if stack and stack[-1][0] == "obj" and stack[-1][3]:
                key = json.loads(text[i:j + 1])
                stack[-1][2], stack[-1][3] = key, False
                out.setdefault(stack[-1][1] + (key,), line)
            i = j + 1
            continue
        elif c == "{":
            stack.append(["obj", value_path(), None, True])
        elif c == "[":
            stack.append(["arr", value_path(), 0, False])
        elif c == ",":
            if stack and stack[-1][0] == "obj":
                stack[-1][3] = True
            elif stack:
                stack[-1][2] += 1
        elif c in "}]" and stack:
            stack.pop()
        i += 1
    return out


# ------------------------------------------------------------------ parsing


class _Reader:
    def __init__(self, lines):
        self.lines = lines
        self.problems = []
        self.units = {}

    def line_of(self, path) -> int:
        path = tuple(p for p in path if isinstance(p, str))
        while path:
            if path in self.lines:
                return self.lines[path]
            path = path[:-1]
        return 1

    def err(self, path, msg):
        self.problems.append((self.line_of(path), f"{'.'.join(map(str, path))}: {msg}"))

    def quantity(self, path, raw, dim):
        name = ".".join(map(str, path))
        if isinstance(raw, bool):
            self.err(path, "expected a quantity, got a boolean")
            return None
        if isinstance(raw, (int, float)):
            self.err(path, f"missing unit (expected a {dim.replace('_', ' ')})")
            return None
        if not isinstance(raw, str):
            self.err(path, f"expected a quantity string, got {type(raw).__name__}")
            return None
        m = _NUM.match(raw)
        if not m:
            self.err(path, f"cannot read quantity {raw!r}")
            return None
        val, unit = float(m.group(1)), m.group(2)
        if unit is None:
            self.err(path, f"missing unit in {raw!r}")
            return None
        if unit not in UNITS:
            self.err(path, f"unknown unit {unit!r}")
            return None
        udim, factor = UNITS[unit]
        if udim != _SAME.get(dim, dim):
            self.err(path, f"unit {unit!r} is a {udim.replace('_', ' ')}, expected a {dim.replace('_', ' ')}")
            return None
        self.units[name] = unit
        return val * factor

    def leaf(self, path, raw, kind):
        if isinstance(kind, tuple):
            if not isinstance(raw, list):
                self.err(path, "expected a list")
                return None
            vals = [self.leaf(path + (i,), v, kind[1]) for i, v in enumerate(raw)]
            return None if any(v is None for v in vals) else tuple(vals)
        if kind == "float":
            if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                self.err(path, f"expected a number, got {raw!r}")
                return None
            return float(raw)
        if kind in ("int", "opt_int"):
            if raw is None and kind == "opt_int":
                return None
            if isinstance(raw, bool) or not isinstance(raw, int):
                self.err(path, f"expected an integer, got {raw!r}")
                return None
            return raw
        if kind == "bool":
            if not isinstance(raw, bool):
                self.err(path, f"expected true or false, got {raw!r}")
                return None
            return raw
        if kind == "str":
            if not isinstance(raw, str):
                self.err(path, f"expected a string, got {raw!r}")
                return None
            return raw
        if kind == "station":
            if isinstance(raw, str) and raw in CUT_IDS:
                return raw
            if isinstance(raw, str) and _NUM.match(raw) and _NUM.match(raw).group(2):
                return self.quantity(path, raw, "length")
            self.err(path, f"station must be one of {', '.join(CUT_IDS)} or a length, got {raw!r}")
            return None
        return self.quantity(path, raw, kind)

    def block(self, path, raw, schema) -> dict:
        """Read a block; unknown keys are reported, absent keys stay absent."""
        if not isinstance(raw, dict):
            self.err(path, "expected an object")
            return {}
        out = {}
        for k, v in raw.items():
            if k not in schema:
                self.err(path + (k,), "unknown key")
                continue
            kind = schema[k]
            if isinstance(kind, dict):
                out[k] = self.block(path + (k,), v, kind)
            else:
                val = self.leaf(path + (k,), v, kind)
                if val is not None or kind == "opt_int":
                    out[k] = val
        return out


def _build(r: _Reader, doc: dict) -> Config:
    base = BridgeConfig()
    geo = doc.get("geometry", {})

    def make(path, current, values):
        if not values:
            return current
        try:
            return replace(current, **values)
        except (ValueError, TypeError) as exc:
            r.err(path, str(exc))
            return current

    params = make(("geometry", "section"), base.params, geo.get("section"))
    prof = make(("geometry", "height_profile"), base.profile, geo.get("height_profile"))
    lay = make(("geometry", "span_layout"), base.layout, geo.get("span_layout"))
    mats = doc.get("materials", {})
    conc = make(("materials", "concrete"), base.concrete, mats.get("concrete"))
    strand = make(("materials", "strand"), base.strand, mats.get("strand"))
    tend = make(("tendons",), base.tendons, doc.get("tendons"))
    res = make(("mesh",), base.resolution, doc.get("mesh"))
    sched = make(("schedule",), base.schedule, doc.get("schedule"))
    bnd = doc.get("boundary", {})
    bridge = replace(base, params=params, profile=prof, layout=lay, concrete=conc, strand=strand, tendons=tend,
                     resolution=res, schedule=sched, **bnd)
    if "gravity" in doc:
        bridge = replace(bridge, g=doc["gravity"])

    # cross-block invariants
    for path, check in (
        (("geometry", "section"), params.check),
        (("geometry", "span_layout"), lay.check),
        (("mesh",), res.check),
    ):
        try:
            check()
        except ValueError as exc:
            r.err(path, str(exc))
    if abs(params.h - prof.h_mid) > 1e-9:
        r.err(("geometry", "height_profile", "h_mid"),
              f"h_mid = {prof.h_mid:g} m differs from the section depth h = {params.h:g} m")
    if abs(lay.pier_plan[1] - params.B_bot) > 1e-9:
        r.err(("geometry", "span_layout", "pier_plan"),
              f"pier width {lay.pier_plan[1]:g} m must equal the bottom width {params.B_bot:g} m")
    if bridge.bearing_spring <= 0:
        r.err(("boundary", "bearing_spring"), "spring stiffness must be > 0")

    an = doc.get("analysis", {})
    ll = dict(an.get("live_load", {}))
    if "gross_weight" in ll:
        ll["gross_t"] = ll.pop("gross_weight") / 1e3
    live = make(("analysis", "live_load"), LiveLoadOptions(), ll)
    if not 32.2 <= live.gross_t <= 34.1:
        r.err(("analysis", "live_load", "gross_weight"),
              f"truck gross weight {live.gross_t:g} t outside the tested range [32.2, 34.1] t")
    if live.arrangement not in ("symmetric", "eccentric"):
        r.err(("analysis", "live_load", "arrangement"), f"unknown arrangement {live.arrangement!r}")
    sweep = make(("analysis", "sweep"), SweepOptions(), an.get("sweep"))
    ana = make(("analysis", "analytic"), AnalyticOptions(), an.get("analytic"))
    if ana.load not in ("uniform", "concentrated"):
        r.err(("analysis", "analytic", "load"), f"load must be 'uniform' or 'concentrated', got {ana.load!r}")
    request = an.get("request", "staged")
    if request not in REQUESTS:
        r.err(("analysis", "request"), f"unknown request {request!r} (one of {', '.join(REQUESTS)})")
    variant = an.get("variant", "total")
    if variant not in VARIANTS:
        r.err(("analysis", "variant"), f"unknown variant {variant!r} (one of {', '.join(VARIANTS)})")
    out = make(("output",), OutputSpec(), doc.get("output"))
    return Config(bridge, AnalysisRequest(request, variant, live, sweep, ana), out, dict(r.units))


def parse_config(text: str) -> Config:
    """Parse and validate a configuration document; raises ``ConfigError``."""
    if not text or not text.strip():
        raise ConfigError(["line 1: missing geometry"])
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"line {exc.lineno}: {exc.msg} (column {exc.colno})"]) from None
    if not isinstance(raw, dict):
        raise ConfigError(["line 1: the document must be a JSON object"])
    r = _Reader(_key_lines(text))
    if "geometry" not in raw:
        r.problems.append((1, "missing geometry"))
    doc = r.block((), raw, SCHEMA)
    cfg = None
    if not r.problems:
        cfg = _build(r, doc)
    if r.problems:
        raise ConfigError(f"line {ln}: {msg}" for ln, msg in sorted(r.problems, key=lambda p: p[0]))
    return cfg


def load_config(path) -> Config:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def default_config_text() -> str:
    """The shipped configuration of the three-span bridge."""
    return resources.files("boxgirder").joinpath("data/default_bridge.json").read_text(encoding="utf-8")


def default_config() -> Config:
    return parse_config(default_config_text())
