"""Scene patch data model and the bit-exact scene-pack container.

A scene patch is a 32x32 raster with 15 fixed channels, a boolean
valid-retrieval mask, a class label and free-form string metadata.
Patches are immutable after construction and safe to share across
workers. Packs are a simple little-endian binary container whose
round trip is byte-exact on the float payloads.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

GRID = 32
N_PIXELS = GRID * GRID

#: Closed channel registry, ordinal order is fixed.
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
CHANNEL_INDEX = {name: i for i, name in enumerate(CHANNELS)}

LABELS = ("plume", "artifact", "unlabeled")

SURFACE_LAND = 0
SURFACE_WATER = 1
SURFACE_COAST = 2
SURFACE_LAND_WATER = 3
SURFACE_CLASSES = (SURFACE_LAND, SURFACE_WATER, SURFACE_COAST, SURFACE_LAND_WATER)

DEFAULT_PIXEL_AREA_KM2 = 38.5  # 7 km x 5.5 km nadir pixel

PACK_MAGIC = b"SPK1"
PACK_VERSION = 1


class SceneError(ValueError):
    """A patch or mask violates a structural invariant."""


class PackError(Exception):
    """Base class for scene-pack container errors."""


class PackMagicError(PackError):
    """File does not start with the pack magic bytes."""


class PackTruncatedError(PackError):
    """File ends before the declared payload is complete."""


class PackChannelError(PackError):
    """Record header declares a channel list that does not match the registry."""


class PackHeaderError(PackError):
    """Record header is malformed or inconsistent with its declared length."""


def _dilate_once(mask: np.ndarray) -> np.ndarray:
    """One morphological dilation with the 3x3 full neighborhood, clipped at edges."""
    out = mask.copy()
    out[1:, :] |= mask[:-1, :]
    out[:-1, :] |= mask[1:, :]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    out[1:, 1:] |= mask[:-1, :-1]
    out[:-1, :-1] |= mask[1:, 1:]
    out[1:, :-1] |= mask[:-1, 1:]
    out[:-1, 1:] |= mask[1:, :-1]
    return out


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ScenePatch:
    """One 32x32 multi-channel patch, the unit of classification.

    ``grids`` is a ``(15, 32, 32)`` float32 array in registry order.
    Invalid pixels (``valid == False``) carry NaN in every channel; the
    boolean mask is authoritative.
    """

    grids: np.ndarray
    valid: np.ndarray
    label: str = "unlabeled"
    pixel_area_km2: float = DEFAULT_PIXEL_AREA_KM2
    meta: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        grids = np.asarray(self.grids)
        if grids.shape != (N_CHANNELS, GRID, GRID):
            raise SceneError(
                f"grids must have shape {(N_CHANNELS, GRID, GRID)}, got {grids.shape}"
            )
        grids = np.ascontiguousarray(grids, dtype=np.float32)
        valid = np.asarray(self.valid)
        if valid.shape != (GRID, GRID):
            raise SceneError(f"valid mask must have shape {(GRID, GRID)}, got {valid.shape}")
        valid = np.ascontiguousarray(valid, dtype=bool)
        if self.label not in LABELS:
            raise SceneError(f"label must be one of {LABELS}, got {self.label!r}")
        area = float(self.pixel_area_km2)
        if not np.isfinite(area) or area <= 0:
            raise SceneError(f"pixel_area_km2 must be positive, got {area}")
        meta = dict(self.meta)
        for k, v in meta.items():
            if not isinstance(k, str) or not isinstance(v, str):
                raise SceneError("meta must map strings to strings")

        invalid = ~valid
        if invalid.any() and not np.isnan(grids[:, invalid]).all():
            raise SceneError("invalid pixels must carry NaN in every channel")
        if valid.any():
            if not np.isfinite(grids[:, valid]).all():
                raise SceneError("valid pixels must be finite in every channel")
            qa = grids[CHANNEL_INDEX["qa_value"]][valid]
            if qa.min() < 0.0 or qa.max() > 1.0:
                raise SceneError("qa_value must lie in [0, 1] on valid pixels")
            pm = grids[CHANNEL_INDEX["plume_mask"]][valid]
            if pm.min() < 0.0 or pm.max() > 1.0:
                raise SceneError("plume_mask values must lie in [0, 1]")
            sc = grids[CHANNEL_INDEX["surface_class"]][valid]
            if not np.isin(sc, np.asarray(SURFACE_CLASSES, dtype=np.float32)).all():
                raise SceneError(
                    "surface_class must be integer-coded 0=land, 1=water, 2=coast, 3=land+water"
                )

        object.__setattr__(self, "grids", _freeze(grids))
        object.__setattr__(self, "valid", _freeze(valid))
        object.__setattr__(self, "pixel_area_km2", area)
        object.__setattr__(self, "meta", meta)

    @classmethod
    def from_channels(
        cls,
        channels: Mapping[str, np.ndarray],
        valid: np.ndarray,
        label: str = "unlabeled",
        pixel_area_km2: float = DEFAULT_PIXEL_AREA_KM2,
        meta: Mapping[str, str] | None = None,
    ) -> "ScenePatch":
        unknown = set(channels) - set(CHANNELS)
        if unknown:
            raise SceneError(f"unknown channel names: {sorted(unknown)}")
        missing = set(CHANNELS) - set(channels)
        if missing:
            raise SceneError(f"missing channels: {sorted(missing)}")
        grids = np.stack([np.asarray(channels[name], dtype=np.float32) for name in CHANNELS])
        return cls(grids, valid, label, pixel_area_km2, meta or {})

    def channel(self, name: str) -> np.ndarray:
        """Read-only 32x32 view of one channel."""
        try:
            return self.grids[CHANNEL_INDEX[name]]
        except KeyError:
            raise SceneError(f"unknown channel {name!r}") from None

    @property
    def patch_id(self) -> str:
        return self.meta.get("id", "")


@dataclass(frozen=True)
class PlumeMasks:
    """High- and low-confidence plume pixel sets plus the first-stage CNN score."""

    high: np.ndarray
    low: np.ndarray
    cnn_score: float

    def __post_init__(self) -> None:
        high = np.ascontiguousarray(np.asarray(self.high), dtype=bool)
        low = np.ascontiguousarray(np.asarray(self.low), dtype=bool)
        if high.shape != (GRID, GRID) or low.shape != (GRID, GRID):
            raise SceneError("plume masks must have shape (32, 32)")
        if (high & ~low).any():
            raise SceneError("high-confidence mask must be a subset of the low-confidence mask")
        score = float(self.cnn_score)
        if not (0.0 <= score <= 1.0):
            raise SceneError(f"cnn_score must lie in [0, 1], got {score}")
        object.__setattr__(self, "high", _freeze(high))
        object.__setattr__(self, "low", _freeze(low))
        object.__setattr__(self, "cnn_score", score)

    @property
    def high_count(self) -> int:
        return int(self.high.sum())


def derive_masks(patch: ScenePatch) -> PlumeMasks:
    """Decode the detector masks from the plume_mask channel.

    High = pixels with a positive encoded value, low = high dilated once,
    cnn_score = the maximum encoded value (0 for an empty mask).
    """
    pm = patch.channel("plume_mask")
    high = np.zeros((GRID, GRID), dtype=bool)
    np.greater(pm, 0.0, out=high, where=patch.valid)
    if high.any():
        low = _dilate_once(high)
        score = float(pm[high].max())
    else:
        low = high.copy()
        score = 0.0
    return PlumeMasks(high=high, low=low, cnn_score=score)


def _header_dict(patch: ScenePatch) -> dict:
    return {
        "id": patch.patch_id,
        "label": patch.label,
        "pixel_area_km2": patch.pixel_area_km2,
        "channels": list(CHANNELS),
        "meta": dict(patch.meta),
    }


def write_pack(patches: Iterable[ScenePatch], path) -> None:
    """Write patches to a scene-pack file (little-endian, byte-exact round trip)."""
    items: Sequence[ScenePatch] = list(patches)
    with open(path, "wb") as f:
        f.write(PACK_MAGIC)
        f.write(struct.pack("<H", PACK_VERSION))
        f.write(struct.pack("<I", len(items)))
        for patch in items:
            header = json.dumps(_header_dict(patch), separators=(",", ":")).encode("utf-8")
            f.write(struct.pack("<I", len(header)))
            f.write(header)
            grids = patch.grids
            if grids.dtype.byteorder == ">":  # big-endian hosts only
                grids = grids.astype("<f4")
            f.write(grids.tobytes(order="C"))
            f.write(patch.valid.astype(np.uint8).tobytes(order="C"))


def _take(buf: bytes, offset: int, n: int, what: str) -> tuple[bytes, int]:
    end = offset + n
    if end > len(buf):
        raise PackTruncatedError(
            f"truncated payload: expected {n} bytes for {what} at offset {offset}, "
            f"file has {len(buf) - offset}"
        )
    return buf[offset:end], end


def read_pack(path) -> list[ScenePatch]:
    """Read a scene-pack file written by :func:`write_pack`."""
    with open(path, "rb") as f:
        buf = f.read()
    if len(buf) < 4 or buf[:4] != PACK_MAGIC:
        raise PackMagicError(f"bad magic: expected {PACK_MAGIC!r}, got {buf[:4]!r}")
    offset = 4
    raw, offset = _take(buf, offset, 2, "format version")
    (version,) = struct.unpack("<H", raw)
    if version != PACK_VERSION:
        raise PackHeaderError(f"unsupported pack version {version}")
    raw, offset = _take(buf, offset, 4, "record count")
    (count,) = struct.unpack("<I", raw)

    patches: list[ScenePatch] = []
    for rec in range(count):
        raw, offset = _take(buf, offset, 4, f"record {rec} header length")
        (hlen,) = struct.unpack("<I", raw)
        raw, offset = _take(buf, offset, hlen, f"record {rec} header")
        try:
            header = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise PackHeaderError(f"record {rec}: malformed header JSON ({exc})") from None
        channels = header.get("channels")
        if not isinstance(channels, list):
            raise PackHeaderError(f"record {rec}: header missing channel list")
        for name in channels:
            if name not in CHANNEL_INDEX:
                raise PackChannelError(f"record {rec}: unknown channel name {name!r}")
        if tuple(channels) != CHANNELS:
            raise PackChannelError(
                f"record {rec}: channel list must match the registry order exactly"
            )
        raw, offset = _take(buf, offset, N_CHANNELS * N_PIXELS * 4, f"record {rec} channels")
        grids = np.frombuffer(raw, dtype="<f4").reshape(N_CHANNELS, GRID, GRID)
        raw, offset = _take(buf, offset, N_PIXELS, f"record {rec} valid mask")
        flags = np.frombuffer(raw, dtype=np.uint8)
        if not np.isin(flags, (0, 1)).all():
            raise PackHeaderError(f"record {rec}: valid mask bytes must be 0 or 1")
        valid = flags.astype(bool).reshape(GRID, GRID)
        meta = header.get("meta", {})
        patches.append(
            ScenePatch(
                grids=grids.copy(),
                valid=valid,
                label=header.get("label", "unlabeled"),
                pixel_area_km2=header.get("pixel_area_km2", DEFAULT_PIXEL_AREA_KM2),
                meta=meta,
            )
        )
    if offset != len(buf):
        raise PackHeaderError(
            f"header/payload length mismatch: {len(buf) - offset} trailing bytes"
        )
    return patches
