"""Shared builders for synthetic frames and pose streams."""

from __future__ import annotations

import numpy as np
import pytest

from gaitway.walkway import TILE_COLS, TILE_ROWS, PressureFrame


def blank_values(tile_count: int = 1) -> np.ndarray:
    return np.zeros((tile_count, TILE_ROWS, TILE_COLS), dtype=np.uint16)


def make_frame(values: np.ndarray, seq: int = 0, time_s: float = 0.0) -> PressureFrame:
    return PressureFrame(seq=seq, timestamp_us=int(round(time_s * 1e6)),
                         values=np.asarray(values, dtype=np.uint16))


def frame_with_nodes(nodes: dict, tile_count: int = 1, seq: int = 0,
                     time_s: float = 0.0) -> PressureFrame:
    """nodes: {(tile, row, col): raw_count}."""
    values = blank_values(tile_count)
    for (tile, row, col), raw in nodes.items():
        values[tile, row, col] = raw
    return make_frame(values, seq=seq, time_s=time_s)


@pytest.fixture(scope="session")
def sentence_bank():
    from gaitway.dualtask import load_sentence_bank
    return load_sentence_bank()
