import json
import os
from dataclasses import replace

import pytest
from hypothesis import HealthCheck, settings

from boxgirder.bridge import BridgeConfig, build_bridge
from boxgirder.config import default_config_text
from boxgirder.mesh import MeshResolution, SpanLayout
from boxgirder.section import HeightProfile

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# acceptance verdicts, criterion number -> line; filled by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])

MINI_LAYOUT = SpanLayout(spans=(30.0, 50.0, 30.0), zero_block_length=8.0, segments_per_arm=2,
                         pier_plan=(4.0, 11.0), pier_height=10.0)
MINI_PROFILE = HeightProfile(5.0, 3.5, 18.0, 2.0, 0.8, 0.32, 0.5, 0.8, 4.0)
MINI_RESOLUTION = MeshResolution(n_cant=2, n_flange=4, n_web_h=2, n_top=1, n_bot=1,
                                 max_element_length=2.5, n_pier_h=2)


def mini_bridge_config() -> BridgeConfig:
    """A 30/50/30 m frame with two segments per arm; builds and runs in seconds."""
    return replace(BridgeConfig(), layout=MINI_LAYOUT, profile=MINI_PROFILE, resolution=MINI_RESOLUTION)


def mini_config_text() -> str:
    doc = json.loads(default_config_text())
    g = doc["geometry"]
    g["height_profile"].update(h_root="5 m", haunch_length="18 m", t_bot_root="80 cm",
                               t_web_root="80 cm", web_root_zone="4 m")
    g["span_layout"].update(spans=["30 m", "50 m", "30 m"], zero_block_length="8 m", segments_per_arm=2,
                            pier_plan=["4 m", "11 m"], pier_height="10 m")
    doc["mesh"].update(n_cant=2, n_flange=4, n_web_h=2, n_top=1, n_bot=1, max_element_length="2.5 m",
                       n_pier_h=2)
    return json.dumps(doc, indent=2)


@pytest.fixture(scope="session")
def mini_config():
    return mini_bridge_config()


@pytest.fixture(scope="session")
def mini_model(mini_config):
    return build_bridge(mini_config)


@pytest.fixture(scope="session")
def mini_analysis(mini_model):
    from boxgirder.bridge import run_staged

    return run_staged(mini_model)


@pytest.fixture
def mini_config_file(tmp_path):
    p = tmp_path / "mini.json"
    p.write_text(mini_config_text())
    return p
