import numpy as np
import pytest

from plume_resnet.packio import CHANNELS, PackReadError, class_labels, read_pack

from conftest import generate_pack


class TestReadPack:
    def test_reads_generated_pack(self, mixed_pack):
        assert len(mixed_pack) == 24
        for rec in mixed_pack:
            assert rec.grids.shape == (15, 32, 32)
            assert rec.grids.dtype == np.float32
            assert rec.valid.shape == (32, 32)
            assert rec.label in ("plume", "artifact")
            assert np.isfinite(rec.grids[:, rec.valid]).all()
            assert np.isnan(rec.grids[:, ~rec.valid]).all()

    def test_channel_accessor_matches_registry(self, mixed_pack):
        rec = mixed_pack[0]
        assert np.array_equal(
            rec.channel("plume_mask"), rec.grids[CHANNELS.index("plume_mask")],
            equal_nan=True,
        )

    def test_class_labels(self, mixed_pack):
        y = class_labels(mixed_pack)
        assert set(np.unique(y)) == {0, 1}

    def test_bad_magic_rejected(self, tmp_path):
        bad = tmp_path / "bad.spk"
        bad.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(PackReadError, match="magic"):
            read_pack(bad)

    def test_truncation_rejected(self, tmp_path):
        path = generate_pack(tmp_path / "t.spk", seed=1, n=2)
        data = path.read_bytes()
        path.write_bytes(data[:-50])
        with pytest.raises(PackReadError, match="truncated"):
            read_pack(path)
