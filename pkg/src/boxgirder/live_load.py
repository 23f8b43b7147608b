"""
Vehicle loads for the completed bridge.

A truck is three axles with two wheels each; every wheel is a rectangular
contact patch whose force is spread over a 4x4 grid of sub-points and mapped
to the deck faces.  Trucks are placed so the resultant of their axle loads
sits at the case station.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .loads import deck_point_loads
from .mesh import Mesh

# transverse distance between truck centrelines in adjacent lanes
LANE_WIDTH = 3.3


@dataclass(frozen=True)
class Truck:
    gross_t: float = 32.2
    axle_split: tuple = (0.2, 0.4, 0.4)
    axle_spacing: tuple = (3.5, 1.35)  # front to middle, middle to rear (m)
    lane_offset: float = 0.0  # truck centreline, transverse (m)
    track: float = 1.8  # wheel centre to wheel centre (m)
    patch: tuple = (0.6, 0.2)  # wheel contact, transverse x longitudinal (m)

    def __post_init__(self):
        if self.gross_t <= 0:
            raise ValueError("truck gross weight must be > 0")
        if len(self.axle_split) != 3 or len(self.axle_spacing) != 2:
            raise ValueError("a truck has exactly 3 axles")
        if abs(sum(self.axle_split) - 1.0) > 1e-12 or min(self.axle_split) < 0:
            raise ValueError("axle split fractions must be >= 0 and sum to 1")
        if min(self.axle_spacing) <= 0 or self.track <= 0 or min(self.patch) <= 0:
            raise ValueError("axle spacing, track and patch size must be > 0")

    def axle_positions(self) -> np.ndarray:
        """Axle offsets along the bridge relative to the load resultant."""
        a = np.concatenate([[0.0], np.cumsum(self.axle_spacing)])
        return a - float(np.dot(self.axle_split, a))


@dataclass(frozen=True)
class LiveLoadCase:
    trucks: tuple = ()
    station: float = 0.0
    arrangement: str = "symmetric"  # or "eccentric"
    stages: int = 1

    def __post_init__(self):
        if self.arrangement not in ("symmetric", "eccentric"):
            raise ValueError(f"unknown truck arrangement {self.arrangement!r}")
        if self.stages < 1:
            raise ValueError("stage count must be >= 1")

    @property
    def total_weight_t(self) -> float:
        return float(sum(t.gross_t for t in self.trucks))

    def mirrored(self) -> "LiveLoadCase":
        """The same case reflected about the bridge centreline."""
        return replace(self, trucks=tuple(replace(t, lane_offset=-t.lane_offset) for t in self.trucks))

    def trucks_at_stage(self, k: int) -> tuple:
        """Trucks on the deck after loading stage ``k`` (1-based)."""
        if not 1 <= k <= self.stages:
            raise ValueError(f"stage {k} outside 1..{self.stages}")
        n = int(np.ceil(len(self.trucks) * k / self.stages))
        return self.trucks[:n]


def lane_offsets(n: int, arrangement: str = "symmetric", deck_half_width: float = 11.25,
                 margin: float = 0.5, truck_half_width: float = 1.2) -> list[float]:
    """Truck centrelines for ``n`` lanes.

    Symmetric lanes straddle the bridge centreline; eccentric lanes are packed
    against the right-hand kerb.
    """
    if n <= 0:
        return []
    if arrangement == "symmetric":
        offs = [LANE_WIDTH * (i - (n - 1) / 2) for i in range(n)]
    elif arrangement == "eccentric":
        edge = deck_half_width - margin - truck_half_width
        offs = [edge - LANE_WIDTH * i for i in range(n)][::-1]
    else:
        raise ValueError(f"unknown truck arrangement {arrangement!r}")
    if max(abs(o) for o in offs) + truck_half_width > deck_half_width + 1e-9:
        raise ValueError(f"{n} lanes do not fit on a deck of half-width {deck_half_width} m")
    return offs


def default_case(station: float, n_trucks: int = 4, gross_t: float = 32.2, arrangement: str = "symmetric",
                 deck_half_width: float = 11.25, stages: int = 1) -> LiveLoadCase:
    offs = lane_offsets(n_trucks, arrangement, deck_half_width)
    return LiveLoadCase(tuple(Truck(gross_t, lane_offset=o) for o in offs), station, arrangement, stages)


def wheel_points(case: LiveLoadCase, g: float = 9.8, stage: int | None = None):
    """Plan positions ``(x, z)`` and downward forces (N) of all patch sub-points."""
    trucks = case.trucks if stage is None else case.trucks_at_stage(stage)
    u = (np.arange(4) + 0.5) / 4 - 0.5
    pts, frc = [], []
    for t in trucks:
        dx, dz = np.meshgrid(u * t.patch[0], u * t.patch[1], indexing="ij")
        for frac, za in zip(t.axle_split, t.axle_positions()):
            wheel = t.gross_t * 1e3 * g * frac / 2
            for side in (-1, 1):
                xc = t.lane_offset + side * t.track / 2
                pts.append(np.column_stack([xc + dx.ravel(), case.station + za + dz.ravel()]))
                frc.append(np.full(16, wheel / 16))
    if not pts:
        return np.zeros((0, 2)), np.zeros(0)
    return np.vstack(pts), np.concatenate(frc)


def build_live_load(case: LiveLoadCase, mesh: Mesh, g: float = 9.8, stage: int | None = None,
                    face_set: str = "deck") -> np.ndarray:
    """Nodal load vector of a live-load case (all trucks unless ``stage`` is given).

    Raises ``ValueError`` when a wheel patch is off the deck.
    """
    pts, frc = wheel_points(case, g, stage)
    return deck_point_loads(mesh, mesh.face_sets[face_set], pts, frc)
