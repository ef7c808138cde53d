import math

import numpy as np
import pytest
import scipy.stats

from plumescreen import featurex, synthgen
from plumescreen.featurex import (
    FEATURE_NAMES,
    FeatureVector,
    background_stats,
    dilate,
    dilation_ring,
    extract,
    ime,
    masked_pearson,
    principal_axis,
    read_feature_csv,
    write_feature_csv,
)
from plumescreen.scene import GRID, PlumeMasks, derive_masks

from conftest import make_patch


def mask_from(coords):
    m = np.zeros((GRID, GRID), dtype=bool)
    for r, c in coords:
        m[r, c] = True
    return m


class TestDilate:
    def test_zero_times_is_identity(self):
        m = mask_from([(3, 3), (10, 20)])
        assert np.array_equal(dilate(m, 0), m)

    def test_center_pixel_becomes_3x3(self):
        m = mask_from([(16, 16)])
        d = dilate(m, 1)
        assert d.sum() == 9
        assert d[15:18, 15:18].all()

    def test_corner_pixel_clipped_to_2x2(self):
        # Oracle: enumerate the in-grid neighbors of (0, 0).
        d = dilate(mask_from([(0, 0)]), 1)
        assert set(zip(*np.nonzero(d))) == {(0, 0), (0, 1), (1, 0), (1, 1)}

    def test_monotone(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            m = rng.random((GRID, GRID)) < 0.1
            assert (m <= dilate(m, 1)).all()

    def test_commutes_with_rotation_for_interior_masks(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            m = np.zeros((GRID, GRID), bool)
            m[8:24, 8:24] = rng.random((16, 16)) < 0.15
            assert np.array_equal(np.rot90(dilate(m, 1)), dilate(np.rot90(m), 1))

    def test_ring_excludes_mask(self):
        m = mask_from([(10, 10), (10, 11)])
        ring = dilation_ring(m)
        assert not (ring & m).any()
        assert np.array_equal(ring | m, dilate(m, 1))


class TestMaskedPearson:
    def _sel(self, n):
        sel = np.zeros((GRID, GRID), bool)
        sel.flat[:n] = True
        return sel

    def _field(self, values):
        f = np.zeros((GRID, GRID))
        f.flat[: len(values)] = values
        return f

    def test_identity_gives_one(self):
        a = self._field(np.arange(10.0))
        assert masked_pearson(a, a, self._sel(10)) == pytest.approx(1.0, abs=1e-12)

    def test_antisymmetry_gives_minus_one(self):
        a = self._field(np.arange(10.0))
        assert masked_pearson(a, -a, self._sel(10)) == pytest.approx(-1.0, abs=1e-12)

    def test_hand_case_matches_textbook_formula(self):
        # Oracle (textbook formula, exact rationals): r^2 = 81/95.
        a = self._field([1.0, 2.0, 3.0, 4.0])
        b = self._field([1.0, 2.0, 2.0, 4.0])
        expected = math.sqrt(81.0 / 95.0)  # = 0.9233805168766388
        assert masked_pearson(a, b, self._sel(4)) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(
            scipy.stats.pearsonr([1, 2, 3, 4], [1, 2, 2, 4]).statistic, abs=1e-12
        )

    def test_degenerate_cases_return_zero(self):
        a = self._field(np.arange(10.0))
        const = np.zeros((GRID, GRID))
        assert masked_pearson(a, const, self._sel(10)) == 0.0
        assert masked_pearson(a, a, self._sel(2)) == 0.0

    def test_matches_scipy_on_random_masked_fields(self):
        rng = np.random.default_rng(12)
        worst = 0.0
        for _ in range(300):
            n = int(rng.integers(3, 200))
            a = rng.normal(size=n)
            b = rng.normal(size=n) + rng.uniform(-1, 1) * a
            fa, fb = self._field(a), self._field(b)
            got = masked_pearson(fa, fb, self._sel(n))
            want = scipy.stats.pearsonr(a, b).statistic
            worst = max(worst, abs(got - want))
        assert worst <= 1e-9


class TestPrincipalAxis:
    def test_square_is_isotropic(self):
        axis, lam1, lam2 = principal_axis(mask_from([(r, c) for r in range(3) for c in range(3)]))
        assert lam1 == pytest.approx(lam2, abs=1e-12)

    def test_horizontal_line(self):
        axis, lam1, lam2 = principal_axis(mask_from([(5, c) for c in range(10, 15)]))
        assert axis == pytest.approx([1.0, 0.0], abs=1e-12)
        assert lam1 == pytest.approx(2.0, abs=1e-12)
        assert lam2 == pytest.approx(0.0, abs=1e-12)

    def test_l_shape_matches_closed_form(self):
        # Pixels (x, y): (0,0),(1,0),(2,0),(0,1),(0,2); cov = [[.64,-.36],[-.36,.64]].
        coords_xy = [(0, 0), (1, 0), (2, 0), (0, 1), (0, 2)]
        mask = mask_from([(y, x) for x, y in coords_xy])
        axis, lam1, lam2 = principal_axis(mask)
        assert lam1 == pytest.approx(1.0, abs=1e-12)
        assert lam2 == pytest.approx(0.28, abs=1e-12)
        assert axis == pytest.approx([1 / math.sqrt(2), -1 / math.sqrt(2)], abs=1e-12)

    def test_translation_invariance(self):
        base = [(2, 3), (3, 3), (4, 4), (5, 3)]
        a1 = principal_axis(mask_from(base))
        a2 = principal_axis(mask_from([(r + 7, c + 11) for r, c in base]))
        assert a1[0] == pytest.approx(a2[0], abs=1e-12)
        assert a1[1] == pytest.approx(a2[1], abs=1e-12)
        assert a1[2] == pytest.approx(a2[2], abs=1e-12)

    def test_empty_mask_raises(self):
        with pytest.raises(ValueError, match="empty"):
            principal_axis(np.zeros((GRID, GRID), bool))


class TestIme:
    def _patch_with_mask(self, enh_value, n_pixels=1, area=38.5, psurf=101325.0):
        enh = np.zeros((GRID, GRID))
        pm = np.zeros((GRID, GRID))
        for i in range(n_pixels):
            enh[5, 5 + i] = enh_value
            pm[5, 5 + i] = 0.8
        patch = make_patch(
            {"enhancement": enh, "plume_mask": pm,
             "surface_pressure": np.full((GRID, GRID), psurf)},
            area=area,
        )
        return patch, derive_masks(patch)

    def test_empty_mask_is_zero(self):
        patch = make_patch()
        assert ime(patch, derive_masks(patch)) == 0.0

    def test_single_pixel_closed_form(self):
        # Oracle recomputed from the ppb -> kg/m^2 conversion.
        patch, masks = self._patch_with_mask(100.0)
        expected = 100.0 * (0.01604 / 0.02896) * (101325.0 / 9.80665) * 1e-9 * 38.5e6
        got = ime(patch, masks)
        assert got == pytest.approx(expected, rel=1e-12)
        assert got == pytest.approx(2.20e4, rel=0.01)

    def test_linearity_in_enhancement(self):
        p1, m1 = self._patch_with_mask(50.0, n_pixels=3)
        p2, m2 = self._patch_with_mask(100.0, n_pixels=3)
        assert ime(p2, m2) == pytest.approx(2.0 * ime(p1, m1), rel=1e-12)


class TestBackgroundStats:
    def test_constant_field(self):
        pm = np.zeros((GRID, GRID))
        pm[4, 4] = 0.5
        patch = make_patch({"plume_mask": pm})
        bg_std, mean_enh, max_enh = background_stats(patch, derive_masks(patch), "high")
        assert (bg_std, mean_enh, max_enh) == (0.0, 0.0, 0.0)

    def test_hand_median_case(self):
        # Valid pixels: background {1900, 1900, 1900, 1910} and mask pixel 1950.
        valid = np.zeros((GRID, GRID), bool)
        coords = [(0, 0), (0, 1), (0, 2), (0, 3), (0, 4)]
        for r, c in coords:
            valid[r, c] = True
        xch4 = np.zeros((GRID, GRID))
        for (r, c), v in zip(coords, [1900.0, 1900.0, 1900.0, 1910.0, 1950.0]):
            xch4[r, c] = v
        pm = np.zeros((GRID, GRID))
        pm[0, 4] = 0.9
        patch = make_patch({"xch4_corrected": xch4, "plume_mask": pm}, valid=valid)
        masks = derive_masks(patch)
        bg_std, mean_enh, max_enh = background_stats(patch, masks, "high")
        assert max_enh == pytest.approx(50.0, abs=1e-9)
        assert mean_enh == pytest.approx(50.0, abs=1e-9)
        # Oracle: population std of {1900, 1900, 1900, 1910}.
        assert bg_std == pytest.approx(np.std([1900.0, 1900.0, 1900.0, 1910.0]), abs=1e-9)

    def test_mask_covering_everything_degenerates_to_zero(self):
        pm = np.full((GRID, GRID), 0.5)
        patch = make_patch({"plume_mask": pm})
        masks = derive_masks(patch)
        assert background_stats(patch, masks, "high") == (0.0, 0.0, 0.0)
        fv = extract(patch, masks)
        assert fv["bg_xch4_std_high"] == 0.0
        assert "bg_xch4_std_high" in fv.flags


class TestExtract:
    def test_uniform_scene_degenerates_cleanly(self):
        patch = make_patch()
        fv = extract(patch, derive_masks(patch))
        assert fv["xch4_std"] == 0.0
        assert fv["xch4_skewness"] == 0.0
        assert fv["xch4_kurtosis"] == 0.0
        for name in ("ch4_albedo_corr_scene", "ch4_aot_corr_scene",
                     "ch4_psurf_corr_scene", "ch4_chi2_corr_scene"):
            assert fv[name] == 0.0
            assert name in fv.flags

    def test_plume_length_from_four_pixels(self):
        pm = mask_from([(5, 5), (5, 6), (6, 5), (6, 6)]).astype(float) * 0.9
        patch = make_patch({"plume_mask": pm}, area=1.0)
        fv = extract(patch, derive_masks(patch))
        assert fv["plume_length_km"] == pytest.approx(2.0, abs=1e-12)
        assert fv["high_mask_pixel_count"] == 4.0

    def test_albedo_artifact_correlation_matches_naive_oracle(self):
        patches = synthgen.generate(
            synthgen.GenConfig(seed=7, n_scenes=40, plume_fraction=0.0,
                               artifact_mix={"albedo_gradient": 1.0, "coastline": 0.0,
                                             "aerosol_blob": 0.0, "elevation_gradient": 0.0})
        )
        checked = 0
        for patch in patches[:10]:
            masks = derive_masks(patch)
            fv = extract(patch, masks)
            xs = patch.channel("xch4_corrected")[patch.valid].astype(np.float64)
            al = patch.channel("albedo_swir")[patch.valid].astype(np.float64)
            want = scipy.stats.pearsonr(xs, al).statistic
            assert fv["ch4_albedo_corr_scene"] == pytest.approx(want, abs=1e-9)
            checked += 1
        assert checked == 10

    def test_deterministic_and_finite_on_generated_scenes(self, small_pack):
        for patch in small_pack:
            masks = derive_masks(patch)
            v1 = extract(patch, masks).values
            v2 = extract(patch, masks).values
            assert np.array_equal(v1, v2)
            assert np.isfinite(v1).all()

    def test_declared_ranges_hold(self, small_pack):
        for patch in small_pack:
            fv = extract(patch, derive_masks(patch))
            for name in FEATURE_NAMES:
                v = fv[name]
                if "corr" in name:
                    assert -1.0 <= v <= 1.0, name
                if name.endswith("_fraction") or name.endswith("fraction_high"):
                    assert 0.0 <= v <= 1.0, name
                if name.endswith("_deg"):
                    assert 0.0 <= v <= 90.0, name
            assert fv["high_mask_pixel_count"] >= 0
            assert fv["plume_length_km"] >= 0
            assert fv["cloud_adjacent_pixel_count"] >= 0

    def test_mask_on_invalid_pixels_rejected(self):
        high = mask_from([(0, 0)])
        valid = np.ones((GRID, GRID), bool)
        valid[0, 0] = False
        patch = make_patch(valid=valid)
        masks = PlumeMasks(high=high, low=dilate(high, 1), cnn_score=0.5)
        with pytest.raises(Exception, match="invalid"):
            extract(patch, masks)

    def test_moments_match_scipy_oracle(self, small_pack):
        for patch in small_pack[:20]:
            fv = extract(patch, derive_masks(patch))
            x = patch.channel("xch4_corrected")[patch.valid].astype(np.float64)
            assert fv["xch4_std"] == pytest.approx(np.std(x), abs=1e-9)
            assert fv["xch4_skewness"] == pytest.approx(
                scipy.stats.skew(x, bias=False), abs=1e-9
            )
            assert fv["xch4_kurtosis"] == pytest.approx(
                scipy.stats.kurtosis(x, fisher=True, bias=True), abs=1e-9
            )


class TestFeatureCsv:
    def test_roundtrip(self, tmp_path, small_pack):
        ids, labels, X, log = featurex.extract_matrix(small_pack[:10])
        path = tmp_path / "f.csv"
        write_feature_csv(path, ids, labels, X)
        ids2, labels2, X2 = read_feature_csv(path)
        assert ids2 == ids
        assert labels2 == labels
        assert np.array_equal(X, X2)

    def test_header_validated(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,label,nope\n")
        with pytest.raises(ValueError, match="header"):
            read_feature_csv(path)

    def test_feature_vector_rejects_nan(self):
        vals = np.zeros(len(FEATURE_NAMES))
        vals[3] = np.nan
        with pytest.raises(Exception, match="finite"):
            FeatureVector(values=vals)
