import numpy as np
import pytest

from plumescreen import synthgen
from plumescreen.scene import CHANNELS, GRID, ScenePatch


def make_patch(overrides=None, valid=None, label="unlabeled", area=38.5, meta=None):
    """A minimal well-formed patch; `overrides` replaces whole channels."""
    channels = {name: np.zeros((GRID, GRID), dtype=np.float32) for name in CHANNELS}
    channels["xch4_corrected"] += 1870.0
    channels["surface_pressure"] += 101325.0
    channels["qa_value"] += 1.0
    channels["chi2"] += 1.0
    channels["albedo_swir"] += 0.2
    if overrides:
        for name, grid in overrides.items():
            channels[name] = np.asarray(grid, dtype=np.float32)
    if valid is None:
        valid = np.ones((GRID, GRID), dtype=bool)
    grids = np.stack([channels[name] for name in CHANNELS])
    grids[:, ~valid] = np.nan
    return ScenePatch(grids=grids, valid=valid, label=label, pixel_area_km2=area, meta=meta or {})


@pytest.fixture(scope="session")
def small_pack():
    """A 60-scene mixed pack reused by feature and learner tests."""
    return synthgen.generate(synthgen.GenConfig(seed=7, n_scenes=60, plume_fraction=0.5))
