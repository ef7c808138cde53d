"""Deterministic synthetic scene generator.

Produces labeled plume and artifact patches so every pipeline stage can be
exercised without real retrieval data. Plume scenes carry a wind-aligned
anisotropic Gaussian enhancement; artifact scenes carry an enhancement
constructed to correlate (|r| >= 0.5) with one confounder channel (albedo
gradient, coastline, aerosol blob or elevation gradient). Identical
configs produce byte-identical patches; per-scene randomness comes from a
counter-based stream keyed on (seed, scene index), so generation order is
irrelevant.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .scene import (
    DEFAULT_PIXEL_AREA_KM2,
    GRID,
    SURFACE_COAST,
    SURFACE_LAND,
    SURFACE_LAND_WATER,
    SURFACE_WATER,
    ScenePatch,
)

ARTIFACT_KINDS = ("albedo_gradient", "coastline", "aerosol_blob", "elevation_gradient")

_BASE_XCH4 = 1870.0  # ppb, nominal background column
_SCALE_HEIGHT_M = 8400.0

_YY, _XX = np.mgrid[0.0:GRID, 0.0:GRID]


class ConfigError(ValueError):
    """Invalid generator configuration."""


def _default_mix() -> dict:
    w = 1.0 / len(ARTIFACT_KINDS)
    return {kind: w for kind in ARTIFACT_KINDS}


@dataclass(frozen=True)
class GenConfig:
    seed: int
    n_scenes: int
    plume_fraction: float = 0.5
    artifact_mix: Mapping[str, float] = field(default_factory=_default_mix)
    enhancement_scale_ppb: float = 40.0
    noise_ppb: float = 12.0
    wind_speed_range_mps: tuple[float, float] = (1.0, 9.0)

    def __post_init__(self) -> None:
        if int(self.seed) < 0:
            raise ConfigError("seed must be nonnegative")
        if int(self.n_scenes) < 0:
            raise ConfigError("n_scenes must be nonnegative")
        if not (0.0 <= self.plume_fraction <= 1.0):
            raise ConfigError("plume_fraction must lie in [0, 1]")
        mix = dict(self.artifact_mix)
        if set(mix) != set(ARTIFACT_KINDS):
            raise ConfigError(f"artifact_mix must weight exactly {ARTIFACT_KINDS}")
        weights = np.asarray([mix[k] for k in ARTIFACT_KINDS], dtype=np.float64)
        if (weights < 0).any():
            raise ConfigError("artifact_mix weights must be nonnegative")
        if abs(weights.sum() - 1.0) > 1e-9:
            raise ConfigError("artifact_mix weights must sum to 1")
        if self.enhancement_scale_ppb <= 0:
            raise ConfigError("enhancement_scale_ppb must be positive")
        if self.noise_ppb < 0:
            raise ConfigError("noise_ppb must be nonnegative")
        lo, hi = self.wind_speed_range_mps
        if not (0.0 <= lo <= hi):
            raise ConfigError("wind_speed_range_mps must satisfy 0 <= lo <= hi")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "n_scenes", int(self.n_scenes))
        object.__setattr__(self, "artifact_mix", mix)
        object.__setattr__(self, "wind_speed_range_mps", (float(lo), float(hi)))

    @classmethod
    def from_dict(cls, d: Mapping) -> "GenConfig":
        known = {
            "seed", "n_scenes", "plume_fraction", "artifact_mix",
            "enhancement_scale_ppb", "noise_ppb", "wind_speed_range_mps",
        }
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(d)
        if "wind_speed_range_mps" in kwargs:
            kwargs["wind_speed_range_mps"] = tuple(kwargs["wind_speed_range_mps"])
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path) -> "GenConfig":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def _scene_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, 1, index])


def _smooth_field(rng: np.random.Generator, knots: int = 5) -> np.ndarray:
    """Unit-variance smooth random field via bilinear upsampling of coarse noise."""
    coarse = rng.normal(size=(knots, knots))
    t = np.linspace(0.0, knots - 1.0, GRID)
    i0 = np.minimum(t.astype(int), knots - 2)
    frac = t - i0
    a = coarse[np.ix_(i0, i0)]
    b = coarse[np.ix_(i0, i0 + 1)]
    c = coarse[np.ix_(i0 + 1, i0)]
    d = coarse[np.ix_(i0 + 1, i0 + 1)]
    fy = frac[:, None]
    fx = frac[None, :]
    out = a * (1 - fy) * (1 - fx) + b * (1 - fy) * fx + c * fy * (1 - fx) + d * fy * fx
    std = out.std()
    if std < 1e-12:
        return np.zeros((GRID, GRID))
    return (out - out.mean()) / std


def _ramp(rng: np.random.Generator) -> np.ndarray:
    """Unit-scale linear gradient in a random direction."""
    psi = rng.uniform(0.0, 2.0 * math.pi)
    return ((_XX - 16.0) * math.cos(psi) + (_YY - 16.0) * math.sin(psi)) / 16.0


def _gaussian_blob(rng, amplitude: float, sigma_lo: float, sigma_hi: float) -> np.ndarray:
    cx = rng.uniform(6.0, 26.0)
    cy = rng.uniform(6.0, 26.0)
    sigma = rng.uniform(sigma_lo, sigma_hi)
    return amplitude * np.exp(-(((_XX - cx) ** 2 + (_YY - cy) ** 2) / (2.0 * sigma**2)))


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    da = a - a.mean()
    db = b - b.mean()
    denom = math.sqrt(float(np.dot(da, da)) * float(np.dot(db, db)))
    if denom == 0.0:
        return 0.0
    return float(np.dot(da, db)) / denom


def _common_context(rng, cfg: GenConfig) -> dict:
    """Channels shared by both scene classes, before class-specific edits."""
    ctx: dict = {}
    lo, hi = cfg.wind_speed_range_mps
    speed = rng.uniform(lo, hi)
    theta = rng.uniform(0.0, 2.0 * math.pi)
    ctx["wind_speed"] = speed
    ctx["wind_theta"] = theta
    # ERA5-style winds are effectively constant at patch scale.
    ctx["wind_east"] = np.full((GRID, GRID), speed * math.cos(theta))
    ctx["wind_north"] = np.full((GRID, GRID), speed * math.sin(theta))

    ctx["xch4_base"] = rng.uniform(_BASE_XCH4 - 30.0, _BASE_XCH4 + 30.0)
    ctx["xch4_smooth"] = rng.uniform(2.0, 8.0) * _smooth_field(rng)
    ctx["noise"] = rng.normal(0.0, cfg.noise_ppb, (GRID, GRID))

    ctx["albedo"] = np.clip(
        rng.uniform(0.08, 0.35) + 0.06 * _smooth_field(rng), 0.01, 0.95
    )
    ctx["aot"] = np.clip(0.03 + 0.02 * _smooth_field(rng) + rng.uniform(0.0, 0.05), 0.0, None)
    ctx["chi2"] = np.clip(rng.uniform(0.9, 1.3) + 0.08 * _smooth_field(rng), 0.05, None)
    altitude = np.clip(rng.uniform(0.0, 1200.0) + 50.0 * _smooth_field(rng), 0.0, None)
    ctx["altitude"] = altitude
    ctx["pressure"] = 101325.0 * np.exp(-altitude / _SCALE_HEIGHT_M) + rng.normal(
        0.0, 30.0, (GRID, GRID)
    )
    ctx["qa_base"] = rng.uniform(0.75, 0.95) + 0.05 * _smooth_field(rng)
    if rng.random() < 0.1:
        ctx["snow"] = np.clip(0.6 * _smooth_field(rng) - rng.uniform(0.3, 0.9), 0.0, 1.0)
    else:
        ctx["snow"] = np.zeros((GRID, GRID))
    if rng.random() < 0.35:
        ctx["cloud"] = np.clip(0.9 * _smooth_field(rng) - rng.uniform(0.4, 1.2), 0.0, 1.0)
    else:
        ctx["cloud"] = np.zeros((GRID, GRID))
    ctx["precision"] = np.clip(rng.uniform(4.0, 9.0) + 0.6 * _smooth_field(rng), 0.5, None)
    ctx["surface_class"] = np.zeros((GRID, GRID))
    return ctx


def _draw_valid(rng) -> np.ndarray:
    valid = np.ones((GRID, GRID), dtype=bool)
    if rng.random() < 0.5:
        blob = _smooth_field(rng)
        frac = rng.uniform(0.02, 0.15)
        valid &= blob < np.quantile(blob, 1.0 - frac)
    if rng.random() < 0.15:
        width = int(rng.integers(1, 4))
        if rng.random() < 0.5:
            valid[:, :width] = False
        else:
            valid[:, -width:] = False
    return valid


def _plume_scene(rng, cfg: GenConfig, ctx: dict) -> dict:
    theta = ctx["wind_theta"]
    # Row index increases southward, so a wind toward (east, north) advects
    # along the grid direction (cos theta, -sin theta).
    dx, dy = math.cos(theta), -math.sin(theta)
    cx = 16.0 + rng.uniform(-5.0, 5.0)
    cy = 16.0 + rng.uniform(-5.0, 5.0)
    u = (_XX - cx) * dx + (_YY - cy) * dy
    v = -(_XX - cx) * dy + (_YY - cy) * dx
    sigma_along = rng.uniform(3.5, 6.5)
    sigma_cross = sigma_along * rng.uniform(0.25, 0.55)
    amp = cfg.enhancement_scale_ppb * rng.uniform(0.9, 1.8)
    signal = amp * np.exp(-(u**2 / (2 * sigma_along**2) + v**2 / (2 * sigma_cross**2)))
    high = signal > amp / 2.0
    cnn_score = rng.uniform(0.5, 1.0)
    return {
        "signal": signal,
        "high": high,
        "cnn_score": cnn_score,
        "kind": "plume",
        "qa_penalty": np.zeros((GRID, GRID)),
        "chi2_bump": np.zeros((GRID, GRID)),
        "confounder": None,
    }


def _artifact_scene(rng, cfg: GenConfig, ctx: dict) -> dict:
    weights = [cfg.artifact_mix[k] for k in ARTIFACT_KINDS]
    kind = str(rng.choice(ARTIFACT_KINDS, p=weights))

    if kind == "albedo_gradient":
        ctx["albedo"] = np.clip(
            ctx["albedo"] + rng.uniform(0.15, 0.4) * _ramp(rng), 0.01, 0.95
        )
        conf = ctx["albedo"]
    elif kind == "coastline":
        psi = rng.uniform(0.0, 2.0 * math.pi)
        d = (_XX - 16.0) * math.cos(psi) + (_YY - 16.0) * math.sin(psi) + rng.uniform(-4, 4)
        sclass = np.where(d > 1.5, SURFACE_WATER, SURFACE_LAND).astype(np.float64)
        band = np.abs(d) <= 1.5
        sclass[band] = SURFACE_COAST
        speckle = band & (rng.random((GRID, GRID)) < 0.3)
        sclass[speckle] = SURFACE_LAND_WATER
        ctx["surface_class"] = sclass
        conf = sclass
    elif kind == "aerosol_blob":
        ctx["aot"] = ctx["aot"] + _gaussian_blob(rng, rng.uniform(0.4, 1.0), 3.0, 7.0)
        conf = ctx["aot"]
    else:  # elevation_gradient
        altitude = np.clip(
            ctx["altitude"] + rng.uniform(400.0, 900.0) * (_ramp(rng) + 1.5), 0.0, None
        )
        ctx["altitude"] = altitude
        ctx["pressure"] = 101325.0 * np.exp(-altitude / _SCALE_HEIGHT_M) + rng.normal(
            0.0, 30.0, (GRID, GRID)
        )
        conf = ctx["altitude"]

    conf_std = (conf - conf.mean()) / conf.std()
    sign = float(rng.choice([-1.0, 1.0]))
    beta = cfg.enhancement_scale_ppb * rng.uniform(0.5, 1.0)
    shape = sign * conf_std
    high = shape > shape.max() / 2.0
    cnn_score = rng.uniform(0.2, 0.9)
    norm_pos = np.clip(shape, 0.0, None) / shape.max()
    return {
        "signal": beta * shape,
        "signal_unit": shape,
        "beta": beta,
        "high": high,
        "cnn_score": cnn_score,
        "kind": kind,
        "qa_penalty": rng.uniform(0.05, 0.35) * norm_pos,
        "chi2_bump": rng.uniform(0.1, 0.5) * norm_pos,
        "confounder": conf,
    }


def _gen_scene(cfg: GenConfig, index: int, plume: bool) -> ScenePatch:
    rng = _scene_rng(cfg.seed, index)
    ctx = _common_context(rng, cfg)
    spec = _plume_scene(rng, cfg, ctx) if plume else _artifact_scene(rng, cfg, ctx)

    valid = _draw_valid(rng)
    valid |= spec["high"]  # the detector only marks retrieved pixels

    enhancement = spec["signal"] + ctx["noise"]
    if spec["confounder"] is not None:
        # Guarantee the constructed confounder correlation on stored values.
        conf32 = spec["confounder"].astype(np.float32).astype(np.float64)[valid]
        beta = spec["beta"]
        for _ in range(40):
            enh32 = enhancement.astype(np.float32).astype(np.float64)[valid]
            if abs(_pearson(enh32, conf32)) >= 0.5:
                break
            beta *= 1.6
            enhancement = beta * spec["signal_unit"] + ctx["noise"]

    xch4 = ctx["xch4_base"] + ctx["xch4_smooth"] + enhancement
    qa = np.clip(
        ctx["qa_base"] - 0.5 * ctx["cloud"] - 0.4 * np.clip(ctx["aot"] - 0.1, 0.0, None)
        - spec["qa_penalty"],
        0.0,
        1.0,
    )
    chi2 = ctx["chi2"] + spec["chi2_bump"]
    plume_mask = np.where(spec["high"], spec["cnn_score"], 0.0)

    channels = {
        "xch4_corrected": xch4,
        "enhancement": enhancement,
        "xch4_precision": ctx["precision"],
        "albedo_swir": ctx["albedo"],
        "aot_swir": ctx["aot"],
        "chi2": chi2,
        "surface_altitude": ctx["altitude"],
        "surface_pressure": ctx["pressure"],
        "qa_value": qa,
        "wind_east": ctx["wind_east"],
        "wind_north": ctx["wind_north"],
        "snow_proxy": ctx["snow"],
        "surface_class": ctx["surface_class"],
        "plume_mask": plume_mask,
        "cloud_fraction": ctx["cloud"],
    }
    grids = np.stack([channels[name].astype(np.float32) for name in channels])
    grids[:, ~valid] = np.nan

    meta = {
        "id": f"scene-{cfg.seed}-{index:06d}",
        "kind": spec["kind"],
        "wind_speed_mps": repr(float(ctx["wind_speed"])),
        "cnn_score": repr(float(spec["cnn_score"])),
    }
    from .scene import CHANNELS  # local alias for ordering assertion

    assert tuple(channels) == CHANNELS
    return ScenePatch(
        grids=grids,
        valid=valid,
        label="plume" if plume else "artifact",
        pixel_area_km2=DEFAULT_PIXEL_AREA_KM2,
        meta=meta,
    )


def generate(config: GenConfig) -> list[ScenePatch]:
    """Generate `n_scenes` labeled patches; a pure function of the config."""
    n = config.n_scenes
    if n == 0:
        return []
    n_plume = int(math.floor(config.plume_fraction * n + 0.5))
    label_rng = np.random.default_rng([config.seed, 0])
    perm = label_rng.permutation(n)
    is_plume = np.zeros(n, dtype=bool)
    is_plume[perm[:n_plume]] = True
    return [_gen_scene(config, i, bool(is_plume[i])) for i in range(n)]


def generate_score_only(
    seed: int, n_scenes: int, plume_fraction: float = 0.5
) -> list[ScenePatch]:
    """Diagnostic dataset where only the encoded CNN score separates classes.

    Mask shapes and every physical channel are drawn from one
    class-independent distribution; plume scenes encode scores in
    [0.7, 1.0], artifact scenes in [0.05, 0.35]. Useful for checking that
    explainers isolate the score feature/channel.
    """
    cfg = GenConfig(seed=seed, n_scenes=n_scenes, plume_fraction=plume_fraction)
    if n_scenes == 0:
        return []
    n_plume = int(math.floor(plume_fraction * n_scenes + 0.5))
    label_rng = np.random.default_rng([seed, 2])
    perm = label_rng.permutation(n_scenes)
    is_plume = np.zeros(n_scenes, dtype=bool)
    is_plume[perm[:n_plume]] = True

    patches = []
    for i in range(n_scenes):
        rng = np.random.default_rng([seed, 3, i])
        ctx = _common_context(rng, cfg)
        # Class-independent blob mask.
        blob = _gaussian_blob(rng, 1.0, 2.0, 4.0)
        high = blob > 0.5
        score = rng.uniform(0.7, 1.0) if is_plume[i] else rng.uniform(0.05, 0.35)
        valid = np.ones((GRID, GRID), dtype=bool)
        enhancement = ctx["noise"]
        xch4 = ctx["xch4_base"] + ctx["xch4_smooth"] + enhancement
        qa = np.clip(ctx["qa_base"], 0.0, 1.0)
        channels = {
            "xch4_corrected": xch4,
            "enhancement": enhancement,
            "xch4_precision": ctx["precision"],
            "albedo_swir": ctx["albedo"],
            "aot_swir": ctx["aot"],
            "chi2": ctx["chi2"],
            "surface_altitude": ctx["altitude"],
            "surface_pressure": ctx["pressure"],
            "qa_value": qa,
            "wind_east": ctx["wind_east"],
            "wind_north": ctx["wind_north"],
            "snow_proxy": ctx["snow"],
            "surface_class": ctx["surface_class"],
            "plume_mask": np.where(high, score, 0.0),
            "cloud_fraction": ctx["cloud"],
        }
        grids = np.stack([channels[name].astype(np.float32) for name in channels])
        patches.append(
            ScenePatch(
                grids=grids,
                valid=valid,
                label="plume" if is_plume[i] else "artifact",
                meta={"id": f"scoreonly-{seed}-{i:06d}", "kind": "score_only"},
            )
        )
    return patches
