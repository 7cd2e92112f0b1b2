"""Binary wire protocol for pressure frames, pose recording files, heatmap
export, and recording persistence.

Frame layout (little-endian): 22-byte header `magic "PWK1", version u8,
tile_count u8, rows u16, cols u16, seq u32, timestamp_us u64`, then
tile-major row-major u16 raw counts (top 4 bits zero). Every decode failure
is a typed WireError subclass; fuzzed input must never escalate past these.
"""

from __future__ import annotations

import json
import math
import struct
from pathlib import Path

import numpy as np

from .errors import RecordingError
from .poses import FootPose, HeadPose
from .walkway import RAW_MAX, TILE_COLS, TILE_ROWS, PITCH_M, PressureFrame

FRAME_MAGIC = b"PWK1"
POSE_MAGIC = b"PWP1"
WIRE_VERSION = 1
_HEADER = struct.Struct("<4sBBHHIQ")
HEADER_SIZE = _HEADER.size  # 22

_POSE_HEADER = struct.Struct("<4sB")
_POSE_RECORD = struct.Struct("<B5d")  # kind, time, x, y, z, yaw
_POSE_KINDS = {"head": 0, "left": 1, "right": 2}
_KIND_NAMES = {v: k for k, v in _POSE_KINDS.items()}


class WireError(ValueError):
    """Base for every malformed-bytes condition."""


class BadMagicError(WireError):
    pass


class UnsupportedVersionError(WireError):
    pass


class TruncatedFrameError(WireError):
    pass


class CorruptFrameError(WireError):
    pass


def encode_frame(frame: PressureFrame) -> bytes:
    """One frame to wire bytes; exact inverse of decode_frame."""
    tiles = frame.tile_count
    if not 1 <= tiles <= 255:
        raise WireError(f"tile_count {tiles} not encodable in one byte")
    if not 0 <= frame.seq < 2 ** 32:
        raise WireError(f"seq {frame.seq} outside u32 range")
    if not 0 <= frame.timestamp_us < 2 ** 64:
        raise WireError(f"timestamp {frame.timestamp_us} outside u64 range")
    header = _HEADER.pack(FRAME_MAGIC, WIRE_VERSION, tiles, TILE_ROWS,
                          TILE_COLS, frame.seq, frame.timestamp_us)
    payload = np.ascontiguousarray(frame.values, dtype="<u2").tobytes()
    return header + payload


def decode_frame(buf: bytes, offset: int = 0) -> tuple[PressureFrame, int]:
    """Decode one frame starting at `offset`; returns (frame, next offset)."""
    if not isinstance(buf, (bytes, bytearray, memoryview)):
        raise WireError("frame buffer must be bytes-like")
    buf = memoryview(buf)
    if len(buf) - offset < HEADER_SIZE:
        raise TruncatedFrameError(
            f"need {HEADER_SIZE} header bytes at offset {offset}, "
            f"have {len(buf) - offset}")
    magic, version, tiles, rows, cols, seq, ts = _HEADER.unpack_from(buf, offset)
    if magic != FRAME_MAGIC:
        raise BadMagicError(f"bad magic {bytes(magic)!r} at offset {offset}")
    if version != WIRE_VERSION:
        raise UnsupportedVersionError(f"unsupported version {version}")
    if rows != TILE_ROWS or cols != TILE_COLS:
        raise CorruptFrameError(f"tile grid {rows}x{cols} is not "
                                f"{TILE_ROWS}x{TILE_COLS}")
    if tiles < 1:
        raise CorruptFrameError("tile_count must be at least 1")
    payload_len = tiles * TILE_ROWS * TILE_COLS * 2
    start = offset + HEADER_SIZE
    if len(buf) - start < payload_len:
        raise TruncatedFrameError(
            f"payload needs {payload_len} bytes at offset {start}, "
            f"have {len(buf) - start}")
    raw = np.frombuffer(buf[start:start + payload_len], dtype="<u2")
    if raw.size and int(raw.max()) > RAW_MAX:
        raise CorruptFrameError(
            f"raw value {int(raw.max())} exceeds {RAW_MAX} at offset {start}")
    values = raw.reshape(tiles, TILE_ROWS, TILE_COLS).astype(np.uint16)
    return (PressureFrame(seq=seq, timestamp_us=ts, values=values),
            start + payload_len)


def decode_frame_stream(buf: bytes) -> list[PressureFrame]:
    """All frames in a concatenated buffer; trailing garbage is an error."""
    frames = []
    offset = 0
    n = len(buf)
    while offset < n:
        frame, offset = decode_frame(buf, offset)
        frames.append(frame)
    return frames


def encode_poses(head_poses, foot_poses) -> bytes:
    """Pose recording file: 5-byte header then fixed 41-byte records,
    merged in time order."""
    records = [(p.time, 0, p.position, p.yaw) for p in head_poses]
    for p in foot_poses:
        if p.foot not in ("left", "right"):
            raise WireError(f"unknown foot {p.foot!r}")
        records.append((p.time, _POSE_KINDS[p.foot], p.position, p.yaw))
    records.sort(key=lambda r: (r[0], r[1]))
    out = [_POSE_HEADER.pack(POSE_MAGIC, WIRE_VERSION)]
    for time, kind, (x, y, z), yaw in records:
        out.append(_POSE_RECORD.pack(kind, time, x, y, z, yaw))
    return b"".join(out)


def decode_poses(buf: bytes) -> tuple[list[HeadPose], list[FootPose]]:
    if len(buf) < _POSE_HEADER.size:
        raise TruncatedFrameError("pose file shorter than its header")
    magic, version = _POSE_HEADER.unpack_from(buf, 0)
    if magic != POSE_MAGIC:
        raise BadMagicError(f"bad pose magic {bytes(magic)!r}")
    if version != WIRE_VERSION:
        raise UnsupportedVersionError(f"unsupported pose version {version}")
    body = len(buf) - _POSE_HEADER.size
    if body % _POSE_RECORD.size:
        raise TruncatedFrameError(
            f"pose records truncated at offset {len(buf) - body % _POSE_RECORD.size}")
    head, feet = [], []
    for i in range(body // _POSE_RECORD.size):
        offset = _POSE_HEADER.size + i * _POSE_RECORD.size
        kind, time, x, y, z, yaw = _POSE_RECORD.unpack_from(buf, offset)
        if kind not in _KIND_NAMES:
            raise CorruptFrameError(f"unknown pose kind {kind} at offset {offset}")
        if not all(math.isfinite(v) for v in (time, x, y, z, yaw)):
            raise CorruptFrameError(f"non-finite pose value at offset {offset}")
        if kind == 0:
            head.append(HeadPose(time=time, position=(x, y, z), yaw=yaw))
        else:
            feet.append(FootPose(time=time, foot=_KIND_NAMES[kind],
                                 position=(x, y, z), yaw=yaw))
    return head, feet


def aggregate_frames(frames, aggregation: str) -> np.ndarray:
    """Elementwise mean or max of raw values, as the lane grid (rows, cols)."""
    if not frames:
        raise ValueError("heatmap needs at least one frame")
    if aggregation not in ("mean", "max"):
        raise ValueError(f"unknown aggregation {aggregation!r}")
    stack = np.stack([f.values for f in frames])
    agg = stack.mean(axis=0) if aggregation == "mean" else stack.max(axis=0)
    return np.concatenate(list(agg), axis=1)


def export_heatmap(frames, aggregation: str, out_path) -> tuple[np.ndarray, dict]:
    """Write a 16-bit P5 graymap plus a JSON stats sidecar.

    Pixel values are the aggregated raw counts (rounded for mean); the
    sidecar records the post-rounding statistics and walkway geometry.
    """
    lane = aggregate_frames(frames, aggregation)
    image = np.clip(np.rint(lane), 0, 65535).astype(np.uint16)
    height, width = image.shape
    out_path = Path(out_path)
    with open(out_path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n65535\n".encode())
        fh.write(image.astype(">u2").tobytes())
    stats = {
        "aggregation": aggregation,
        "frame_count": len(frames),
        "min": int(image.min()),
        "max": int(image.max()),
        "mean": float(image.mean()),
        "width_px": int(width),
        "height_px": int(height),
        "tile_count": int(width // TILE_COLS),
        "rows": TILE_ROWS,
        "cols": TILE_COLS,
        "pitch_m": PITCH_M,
    }
    sidecar = out_path.with_suffix(out_path.suffix + ".json")
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return image, stats


def read_pgm16(path) -> np.ndarray:
    """Read back a 16-bit P5 graymap written by export_heatmap."""
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise RecordingError("not a P5 graymap")
    fields = []
    offset = 2
    while len(fields) < 3:
        while offset < len(data) and data[offset:offset + 1].isspace():
            offset += 1
        if data[offset:offset + 1] == b"#":
            while offset < len(data) and data[offset] != 0x0A:
                offset += 1
            continue
        start = offset
        while offset < len(data) and not data[offset:offset + 1].isspace():
            offset += 1
        fields.append(int(data[start:offset]))
    offset += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval != 65535:
        raise RecordingError(f"expected 16-bit maxval, got {maxval}")
    pixels = np.frombuffer(data, dtype=">u2", offset=offset,
                           count=width * height)
    return pixels.reshape(height, width).astype(np.uint16)


def save_recording(recording, directory, report=None) -> Path:
    """Persist a session: session.json + frames.bin + poses.bin."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "frames.bin").write_bytes(
        b"".join(encode_frame(f) for f in recording.frames))
    (directory / "poses.bin").write_bytes(
        encode_poses(recording.head_poses, recording.foot_poses))
    doc = {
        "config": recording.config.to_dict(),
        "aborted": recording.aborted,
        "events": [e.to_dict() for e in recording.events],
    }
    if report is not None:
        doc["report"] = report.to_dict() if hasattr(report, "to_dict") else report
    with open(directory / "session.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return directory


def load_recording(directory):
    """Load a persisted session back into a Recording."""
    from .session import Recording, SessionConfig, SessionEvent

    directory = Path(directory)
    try:
        with open(directory / "session.json", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as err:
        raise RecordingError(f"session.json: {err}") from err
    try:
        frames = decode_frame_stream((directory / "frames.bin").read_bytes())
    except WireError as err:
        raise RecordingError(f"frames.bin: {err}") from err
    poses_path = directory / "poses.bin"
    head, feet = ([], [])
    if poses_path.exists():
        try:
            head, feet = decode_poses(poses_path.read_bytes())
        except WireError as err:
            raise RecordingError(f"poses.bin: {err}") from err
    events = [SessionEvent(e["time"], e["kind"], e.get("payload", {}))
              for e in doc.get("events", [])]
    return Recording(config=SessionConfig.from_dict(doc["config"]),
                     frames=frames, head_poses=head, foot_poses=feet,
                     events=events, aborted=doc.get("aborted", False))
