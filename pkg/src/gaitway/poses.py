"""Tracker pose records shared by the obstacle engine, simulator, and wire IO."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class HeadPose:
    time: float
    position: tuple[float, float, float]   # x along lane, y mediolateral, z up
    yaw: float                             # degrees, 0 = facing +x


@dataclass(frozen=True)
class FootPose:
    time: float
    foot: str                              # left | right
    position: tuple[float, float, float]   # ankle tracker origin
    yaw: float


def split_by_foot(poses) -> tuple[list[FootPose], list[FootPose]]:
    left = [p for p in poses if p.foot == "left"]
    right = [p for p in poses if p.foot == "right"]
    return left, right
