"""Expert feature extraction: 41 scalar descriptors per scene patch.

The extractor combines mask geometry (principal axes, dilations), masked
statistics (Pearson correlations, moments, background enhancement) and
surface/cloud context into a fixed-order feature vector. Degenerate
selections (empty masks, zero-variance fields) produce 0 and are flagged
instead of propagating NaN.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .scene import (
    GRID,
    N_PIXELS,
    SURFACE_COAST,
    SURFACE_LAND,
    SURFACE_LAND_WATER,
    PlumeMasks,
    SceneError,
    ScenePatch,
    _dilate_once,
)

FEATURE_NAMES = (
    "cnn_plume_score",
    "valid_pixel_fraction",
    "high_mask_pixel_count",
    "high_mask_enhancement_sum",
    "xch4_std",
    "xch4_skewness",
    "xch4_kurtosis",
    "ime_kg",
    "plume_length_km",
    "wind_speed_10m",
    "cloud_adjacent_enhancement_sum",
    "cloud_adjacent_pixel_count",
    "plume_wind_angle_deg",
    "plume_elongation_ratio",
    "ch4_albedo_corr_scene",
    "ch4_albedo_corr_dil",
    "ch4_aot_corr_scene",
    "ch4_aot_corr_dil",
    "ch4_psurf_corr_scene",
    "ch4_psurf_corr_dil",
    "ch4_chi2_corr_scene",
    "ch4_chi2_corr_dil",
    "cloud_angle_high_deg",
    "cloud_angle_low_deg",
    "coast_angle_deg",
    "mean_chi2_high",
    "mean_chi2_low",
    "mean_albedo_high",
    "mean_albedo_low",
    "mean_aot_high",
    "mean_aot_low",
    "mean_qa_high",
    "mean_qa_low",
    "bg_xch4_std_high",
    "bg_xch4_std_low",
    "mean_enh_above_bg_high",
    "mean_enh_above_bg_low",
    "max_enh_above_bg_high",
    "land_fraction_high",
    "land_water_fraction_high",
    "coast_fraction_high",
)
N_FEATURES = len(FEATURE_NAMES)
FEATURE_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}

# Column-enhancement (ppb) to mass (kg/m^2) conversion constants.
M_CH4 = 0.01604  # kg/mol
M_AIR = 0.02896  # kg/mol
GRAVITY = 9.80665  # m/s^2

#: Within-pixel coordinate variance of a unit cell; regularizes the
#: elongation ratio so single-pixel and collinear masks stay finite.
CELL_VARIANCE = 1.0 / 12.0


@dataclass(frozen=True)
class FeatureVector:
    """The 41 named features of one patch, in canonical order."""

    values: np.ndarray
    flags: frozenset = frozenset()

    def __post_init__(self) -> None:
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if vals.shape != (N_FEATURES,):
            raise SceneError(f"feature vector must have {N_FEATURES} values, got {vals.shape}")
        if not np.isfinite(vals).all():
            bad = [FEATURE_NAMES[i] for i in np.nonzero(~np.isfinite(vals))[0]]
            raise SceneError(f"non-finite feature values: {bad}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "flags", frozenset(self.flags))

    def __getitem__(self, name: str) -> float:
        return float(self.values[FEATURE_INDEX[name]])

    def as_dict(self) -> dict:
        return {name: float(v) for name, v in zip(FEATURE_NAMES, self.values)}


def dilate(mask: np.ndarray, times: int = 1) -> np.ndarray:
    """Morphological dilation with the 3x3 full neighborhood, `times` applications."""
    if times < 0:
        raise ValueError("times must be nonnegative")
    out = np.ascontiguousarray(np.asarray(mask), dtype=bool)
    if out.shape != (GRID, GRID):
        raise ValueError(f"mask must have shape ({GRID}, {GRID})")
    out = out.copy()
    for _ in range(times):
        out = _dilate_once(out)
    return out


def dilation_ring(low: np.ndarray) -> np.ndarray:
    """Pixels reached by one dilation of the low mask, minus the mask itself."""
    return dilate(low, 1) & ~np.asarray(low, dtype=bool)


def _pearson_flagged(a: np.ndarray, b: np.ndarray) -> tuple[float, bool]:
    """Sample Pearson r of two 1-D samples; (0, degenerate) on tiny/flat input."""
    n = a.size
    if n < 3:
        return 0.0, True
    a = a.astype(np.float64)
    b = b.astype(np.float64)
    da = a - a.mean()
    db = b - b.mean()
    va = float(np.dot(da, da))
    vb = float(np.dot(db, db))
    if va == 0.0 or vb == 0.0:
        return 0.0, True
    r = float(np.dot(da, db) / math.sqrt(va * vb))
    return min(1.0, max(-1.0, r)), False


def masked_pearson(a: np.ndarray, b: np.ndarray, sel: np.ndarray) -> float:
    """Pearson correlation of two pixel fields over a pixel set.

    Returns 0 when fewer than 3 pixels are selected or either field is
    constant on the selection.
    """
    sel = np.asarray(sel, dtype=bool)
    r, _ = _pearson_flagged(np.asarray(a)[sel], np.asarray(b)[sel])
    return r


def principal_axis(mask: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Principal axis of a pixel set from the 2x2 covariance of pixel centers.

    Coordinates are (x, y) = (column, row). Returns the unit eigenvector of
    the largest eigenvalue with canonical sign (x >= 0; if x == 0 then
    y >= 0) plus both eigenvalues, lam1 >= lam2 >= 0. Raises on an empty
    mask.
    """
    rows, cols = np.nonzero(np.asarray(mask, dtype=bool))
    if rows.size == 0:
        raise ValueError("principal_axis requires a nonempty mask")
    x = cols.astype(np.float64)
    y = rows.astype(np.float64)
    a = float(np.var(x))
    c = float(np.var(y))
    b = float(np.mean(x * y) - x.mean() * y.mean())
    half_tr = 0.5 * (a + c)
    disc = math.hypot(0.5 * (a - c), b)
    lam1 = half_tr + disc
    lam2 = max(half_tr - disc, 0.0)
    if b != 0.0:
        v1 = np.array([b, lam1 - a])
        v2 = np.array([lam1 - c, b])
        vec = v1 if np.dot(v1, v1) >= np.dot(v2, v2) else v2
    elif a >= c:
        vec = np.array([1.0, 0.0])
    else:
        vec = np.array([0.0, 1.0])
    vec = vec / math.hypot(vec[0], vec[1])
    if vec[0] < 0.0 or (vec[0] == 0.0 and vec[1] < 0.0):
        vec = -vec
    return vec, lam1, lam2


def _axis_angle_deg(u: np.ndarray, v: np.ndarray) -> float:
    """Angle between two directions folded to [0, 90] degrees (no orientation)."""
    nu = math.hypot(u[0], u[1])
    nv = math.hypot(v[0], v[1])
    cosang = abs(float(u[0] * v[0] + u[1] * v[1])) / (nu * nv)
    return math.degrees(math.acos(min(1.0, cosang)))


def ime(patch: ScenePatch, masks: PlumeMasks) -> float:
    """Integrated mass enhancement (kg) over the high-confidence mask.

    Converts the ppb column enhancement per pixel to kg/m^2 via
    (M_CH4 / M_air) * (p_surf / g) * 1e-9 and sums over the mask area.
    """
    high = masks.high
    if not high.any():
        return 0.0
    enh = patch.channel("enhancement")[high].astype(np.float64)
    psurf = patch.channel("surface_pressure")[high].astype(np.float64)
    area_m2 = patch.pixel_area_km2 * 1e6
    kg_per_m2_per_ppb = (M_CH4 / M_AIR) * (psurf / GRAVITY) * 1e-9
    return float(np.sum(enh * kg_per_m2_per_ppb) * area_m2)


def background_stats(
    patch: ScenePatch, masks: PlumeMasks, which: str = "high"
) -> tuple[float, float, float]:
    """(background std, mean enhancement above background, max enhancement above background).

    Background = valid pixels outside the selected mask; the background
    level is its median XCH4. Empty background or empty mask falls back
    to 0 for the affected outputs.
    """
    if which not in ("high", "low"):
        raise ValueError("which must be 'high' or 'low'")
    mask = masks.high if which == "high" else masks.low
    valid = patch.valid
    xch4 = patch.channel("xch4_corrected")
    bg_sel = valid & ~mask
    mask_sel = mask & valid
    bg_std = 0.0
    mean_enh = 0.0
    max_enh = 0.0
    if bg_sel.any():
        bg_vals = xch4[bg_sel].astype(np.float64)
        bg_std = float(np.std(bg_vals))
        level = float(np.median(bg_vals))
        if mask_sel.any():
            above = xch4[mask_sel].astype(np.float64) - level
            mean_enh = float(above.mean())
            max_enh = float(above.max())
    return bg_std, mean_enh, max_enh


def _moments(x: np.ndarray) -> tuple[float, float, float, bool]:
    """(std, adjusted skewness, excess kurtosis, degenerate) over a 1-D sample."""
    n = x.size
    if n == 0:
        return 0.0, 0.0, 0.0, True
    x = x.astype(np.float64)
    d = x - x.mean()
    m2 = float(np.mean(d * d))
    std = math.sqrt(m2)
    if n < 3 or m2 == 0.0:
        return std, 0.0, 0.0, True
    m3 = float(np.mean(d**3))
    m4 = float(np.mean(d**4))
    g1 = m3 / m2**1.5
    skew = g1 * math.sqrt(n * (n - 1.0)) / (n - 2.0)  # adjusted sample coefficient
    kurt = m4 / (m2 * m2) - 3.0  # Fisher excess
    return std, skew, kurt, False


def _box3_sum(field: np.ndarray) -> np.ndarray:
    """Sum of each pixel's 3x3 neighborhood, zero-padded at the edges."""
    padded = np.zeros((GRID + 2, GRID + 2), dtype=np.float64)
    padded[1:-1, 1:-1] = field
    return (
        padded[:-2, :-2] + padded[:-2, 1:-1] + padded[:-2, 2:]
        + padded[1:-1, :-2] + padded[1:-1, 1:-1] + padded[1:-1, 2:]
        + padded[2:, :-2] + padded[2:, 1:-1] + padded[2:, 2:]
    )


def _mean_over(field: np.ndarray, sel: np.ndarray) -> tuple[float, bool]:
    if not sel.any():
        return 0.0, True
    return float(field[sel].astype(np.float64).mean()), False


def extract(patch: ScenePatch, masks: PlumeMasks) -> FeatureVector:
    """Compute the 41-feature vector for one patch and its detector masks."""
    valid = patch.valid
    high = masks.high
    low = masks.low
    if (high & ~valid).any():
        raise SceneError("high-confidence mask marks invalid pixels")

    flags: set[str] = set()

    def flag(name: str) -> None:
        flags.add(name)

    xch4 = patch.channel("xch4_corrected")
    enh = patch.channel("enhancement")
    albedo = patch.channel("albedo_swir")
    aot = patch.channel("aot_swir")
    chi2 = patch.channel("chi2")
    psurf = patch.channel("surface_pressure")
    qa = patch.channel("qa_value")
    wind_e = patch.channel("wind_east")
    wind_n = patch.channel("wind_north")
    sclass = patch.channel("surface_class")
    cloud = patch.channel("cloud_fraction")

    n_valid = int(valid.sum())
    low_v = low & valid
    ring_v = dilation_ring(low) & valid

    out = np.zeros(N_FEATURES, dtype=np.float64)

    def put(name: str, value: float) -> None:
        out[FEATURE_INDEX[name]] = value

    put("cnn_plume_score", masks.cnn_score)
    put("valid_pixel_fraction", n_valid / N_PIXELS)
    n_high = int(high.sum())
    put("high_mask_pixel_count", float(n_high))
    put("high_mask_enhancement_sum", float(enh[high].sum()) if n_high else 0.0)

    # Scene moments over all valid pixels.
    std, skew, kurt, degen = _moments(xch4[valid])
    put("xch4_std", std)
    put("xch4_skewness", skew)
    put("xch4_kurtosis", kurt)
    if degen:
        flag("xch4_skewness")
        flag("xch4_kurtosis")

    put("ime_kg", ime(patch, masks))
    put("plume_length_km", math.sqrt(n_high * patch.pixel_area_km2))

    if n_valid:
        speeds = np.hypot(wind_e[valid].astype(np.float64), wind_n[valid].astype(np.float64))
        put("wind_speed_10m", float(speeds.mean()))
        mean_wind = np.array(
            [float(wind_e[valid].astype(np.float64).mean()),
             float(wind_n[valid].astype(np.float64).mean())]
        )
    else:
        flag("wind_speed_10m")
        mean_wind = np.zeros(2)

    # Cloud adjacency via a 3x3 box kernel over the cloud-fraction field.
    cloud_filled = np.where(valid, cloud, 0.0).astype(np.float64)
    boxsum = _box3_sum(cloud_filled)
    if n_high:
        put("cloud_adjacent_enhancement_sum", float((enh[high] * boxsum[high]).sum()))
        put("cloud_adjacent_pixel_count", float((boxsum[high] > 0.0).sum()))

    # Mask geometry. The grid direction of the (east, north) wind vector is
    # (x, -y) because the row index increases southward.
    high_axis = None
    if n_high:
        axis, lam1, lam2 = principal_axis(high)
        if lam1 > 0.0:
            high_axis = axis
        put("plume_elongation_ratio", (lam1 + CELL_VARIANCE) / (lam2 + CELL_VARIANCE))
    else:
        flag("plume_elongation_ratio")

    wind_grid = np.array([mean_wind[0], -mean_wind[1]])
    if high_axis is not None and math.hypot(*wind_grid) > 0.0:
        put("plume_wind_angle_deg", _axis_angle_deg(high_axis, wind_grid))
    else:
        flag("plume_wind_angle_deg")

    # Correlation features over the full scene and the dilation ring.
    for prefix, other in (
        ("ch4_albedo_corr", albedo),
        ("ch4_aot_corr", aot),
        ("ch4_psurf_corr", psurf),
        ("ch4_chi2_corr", chi2),
    ):
        r, degen = _pearson_flagged(xch4[valid], other[valid])
        put(f"{prefix}_scene", r)
        if degen:
            flag(f"{prefix}_scene")
        r, degen = _pearson_flagged(xch4[ring_v], other[ring_v])
        put(f"{prefix}_dil", r)
        if degen:
            flag(f"{prefix}_dil")

    # Angles against cloud and coast structures.
    cloud_mask = np.zeros((GRID, GRID), dtype=bool)
    np.greater(cloud, 0.5, out=cloud_mask, where=valid)
    coast_mask = valid & (sclass == SURFACE_COAST)

    def _structure_axis(mask: np.ndarray) -> np.ndarray | None:
        if not mask.any():
            return None
        axis, lam1, _ = principal_axis(mask)
        return axis if lam1 > 0.0 else None

    cloud_axis = _structure_axis(cloud_mask)
    coast_axis = _structure_axis(coast_mask)
    low_axis = _structure_axis(low_v)

    for name, plume_ax, other_ax in (
        ("cloud_angle_high_deg", high_axis, cloud_axis),
        ("cloud_angle_low_deg", low_axis, cloud_axis),
        ("coast_angle_deg", high_axis, coast_axis),
    ):
        if plume_ax is not None and other_ax is not None:
            put(name, _axis_angle_deg(plume_ax, other_ax))
        else:
            flag(name)

    # Masked means.
    for name, field_, sel in (
        ("mean_chi2_high", chi2, high),
        ("mean_chi2_low", chi2, low_v),
        ("mean_albedo_high", albedo, high),
        ("mean_albedo_low", albedo, low_v),
        ("mean_aot_high", aot, high),
        ("mean_aot_low", aot, low_v),
        ("mean_qa_high", qa, high),
        ("mean_qa_low", qa, low_v),
    ):
        value, degen = _mean_over(field_, sel)
        put(name, value)
        if degen:
            flag(name)

    # Background statistics relative to each mask.
    for which in ("high", "low"):
        mask = high if which == "high" else low
        bg_sel = valid & ~mask
        mask_sel = mask & valid
        bg_std, mean_enh, max_enh = background_stats(patch, masks, which)
        put(f"bg_xch4_std_{which}", bg_std)
        put(f"mean_enh_above_bg_{which}", mean_enh)
        if not bg_sel.any():
            flag(f"bg_xch4_std_{which}")
            flag(f"mean_enh_above_bg_{which}")
        elif not mask_sel.any():
            flag(f"mean_enh_above_bg_{which}")
        if which == "high":
            put("max_enh_above_bg_high", max_enh)
            if not bg_sel.any() or not mask_sel.any():
                flag("max_enh_above_bg_high")

    # Surface-class fractions within the high mask.
    if n_high:
        sc_high = sclass[high]
        put("land_fraction_high", float((sc_high == SURFACE_LAND).sum()) / n_high)
        put("land_water_fraction_high", float((sc_high == SURFACE_LAND_WATER).sum()) / n_high)
        put("coast_fraction_high", float((sc_high == SURFACE_COAST).sum()) / n_high)
    else:
        flag("land_fraction_high")
        flag("land_water_fraction_high")
        flag("coast_fraction_high")

    return FeatureVector(values=out, flags=frozenset(flags))


# ---------------------------------------------------------------------------
# Feature matrix CSV + extraction log I/O


def write_feature_csv(path, ids: Sequence[str], labels: Sequence[str], X: np.ndarray) -> None:
    """Feature matrix CSV: id,label plus the 41 canonical columns."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != N_FEATURES:
        raise ValueError(f"feature matrix must have {N_FEATURES} columns")
    if not (len(ids) == len(labels) == X.shape[0]):
        raise ValueError("ids, labels and rows must align")
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["id", "label", *FEATURE_NAMES])
        for pid, label, row in zip(ids, labels, X):
            writer.writerow([pid, label, *[repr(float(v)) for v in row]])


def read_feature_csv(path) -> tuple[list[str], list[str], np.ndarray]:
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or header != ["id", "label", *FEATURE_NAMES]:
            raise ValueError(f"{path}: not a feature matrix CSV (bad header)")
        ids: list[str] = []
        labels: list[str] = []
        rows: list[list[float]] = []
        for row in reader:
            if len(row) != 2 + N_FEATURES:
                raise ValueError(f"{path}: row with {len(row)} fields")
            ids.append(row[0])
            labels.append(row[1])
            rows.append([float(v) for v in row[2:]])
    X = np.asarray(rows, dtype=np.float64) if rows else np.empty((0, N_FEATURES))
    return ids, labels, X


def labels_to_binary(labels: Sequence[str]) -> np.ndarray:
    """Map plume -> 1, artifact -> 0; rejects unlabeled rows."""
    mapping = {"plume": 1, "artifact": 0}
    try:
        return np.asarray([mapping[label] for label in labels], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"cannot train on label {exc.args[0]!r}") from None


def write_extraction_log(path, entries: Iterable[tuple[str, Sequence[str]]]) -> None:
    """JSON-lines log of per-patch degeneracy flags."""
    with open(path, "w", encoding="utf-8") as f:
        for pid, flagged in entries:
            f.write(json.dumps({"id": pid, "flags": sorted(flagged)}) + "\n")


def extract_matrix(
    patches: Sequence[ScenePatch],
) -> tuple[list[str], list[str], np.ndarray, list[tuple[str, list[str]]]]:
    """Extract features for a patch sequence; returns ids, labels, matrix, log entries."""
    from .scene import derive_masks

    ids: list[str] = []
    labels: list[str] = []
    rows: list[np.ndarray] = []
    log: list[tuple[str, list[str]]] = []
    for i, patch in enumerate(patches):
        pid = patch.patch_id or f"row-{i:06d}"
        fv = extract(patch, derive_masks(patch))
        ids.append(pid)
        labels.append(patch.label)
        rows.append(fv.values)
        log.append((pid, sorted(fv.flags)))
    X = np.vstack(rows) if rows else np.empty((0, N_FEATURES))
    return ids, labels, X, log
