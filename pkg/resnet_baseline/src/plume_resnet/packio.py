"""Read-only scene-pack (.spk) loader.

Implements the documented container contract independently of the
producing toolkit: magic "SPK1", u16 LE version, u32 LE record count;
per record a u32 LE header length, a UTF-8 JSON header, 15 channels of
32x32 float32 LE row-major data in registry order, then 1024 bytes of
0/1 validity flags.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

GRID = 32
N_PIXELS = GRID * GRID

CHANNELS = (
    "xch4_corrected",
    "enhancement",
    "xch4_precision",
    "albedo_swir",
    "aot_swir",
    "chi2",
    "surface_altitude",
    "surface_pressure",
    "qa_value",
    "wind_east",
    "wind_north",
    "snow_proxy",
    "surface_class",
    "plume_mask",
    "cloud_fraction",
)
N_CHANNELS = len(CHANNELS)

MAGIC = b"SPK1"
VERSION = 1

LABEL_TO_CLASS = {"artifact": 0, "plume": 1}


class PackReadError(ValueError):
    """Scene-pack file is malformed."""


@dataclass(frozen=True)
class Record:
    """One patch: channel stack, validity mask, label and metadata."""

    grids: np.ndarray  # (15, 32, 32) float32, NaN on invalid pixels
    valid: np.ndarray  # (32, 32) bool
    label: str
    pixel_area_km2: float
    meta: dict

    @property
    def record_id(self) -> str:
        return self.meta.get("id", "")

    def channel(self, name: str) -> np.ndarray:
        return self.grids[CHANNELS.index(name)]


def _take(buf: bytes, offset: int, n: int, what: str) -> tuple[bytes, int]:
    end = offset + n
    if end > len(buf):
        raise PackReadError(f"truncated pack: needed {n} bytes for {what}")
    return buf[offset:end], end


def read_pack(path) -> list[Record]:
    with open(path, "rb") as f:
        buf = f.read()
    if buf[:4] != MAGIC:
        raise PackReadError(f"not a scene pack: bad magic {buf[:4]!r}")
    offset = 4
    raw, offset = _take(buf, offset, 2, "version")
    (version,) = struct.unpack("<H", raw)
    if version != VERSION:
        raise PackReadError(f"unsupported pack version {version}")
    raw, offset = _take(buf, offset, 4, "record count")
    (count,) = struct.unpack("<I", raw)
    records = []
    for rec in range(count):
        raw, offset = _take(buf, offset, 4, f"record {rec} header length")
        (hlen,) = struct.unpack("<I", raw)
        raw, offset = _take(buf, offset, hlen, f"record {rec} header")
        header = json.loads(raw.decode("utf-8"))
        if tuple(header.get("channels", ())) != CHANNELS:
            raise PackReadError(f"record {rec}: unexpected channel registry")
        raw, offset = _take(buf, offset, N_CHANNELS * N_PIXELS * 4, f"record {rec} payload")
        grids = np.frombuffer(raw, dtype="<f4").reshape(N_CHANNELS, GRID, GRID).copy()
        raw, offset = _take(buf, offset, N_PIXELS, f"record {rec} valid mask")
        valid = np.frombuffer(raw, dtype=np.uint8).astype(bool).reshape(GRID, GRID)
        records.append(
            Record(
                grids=grids,
                valid=valid,
                label=header.get("label", "unlabeled"),
                pixel_area_km2=float(header.get("pixel_area_km2", 38.5)),
                meta=header.get("meta", {}),
            )
        )
    if offset != len(buf):
        raise PackReadError("trailing bytes after the declared records")
    return records


def class_labels(records) -> np.ndarray:
    """plume -> 1, artifact -> 0; rejects unlabeled records."""
    try:
        return np.asarray([LABEL_TO_CLASS[r.label] for r in records], dtype=np.int64)
    except KeyError as exc:
        raise PackReadError(f"cannot use label {exc.args[0]!r} for training") from None
