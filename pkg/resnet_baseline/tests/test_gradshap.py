import numpy as np
import pytest
import torch

from plume_resnet import NetConfig, build_net, class_labels, expected_gradients, gradient_shap
from plume_resnet.gradshap import select_references


class TestExpectedGradients:
    def test_constant_network_gives_zero_attributions(self, overfit_run):
        _result, X = overfit_run
        net = build_net(NetConfig(depth=18, seed=1))
        torch.nn.init.zeros_(net.head.weight)
        torch.nn.init.zeros_(net.head.bias)
        net.eval()
        attr, delta = expected_gradients(net, X[:3], X[10:14], steps=8)
        assert np.abs(attr).max() == 0.0
        assert np.abs(delta).max() == 0.0

    def test_completeness_within_five_percent(self, overfit_run):
        result, X = overfit_run
        samples = X[:20]
        references = X[40:42]
        attr, delta = expected_gradients(result.net, samples, references, steps=64)
        total = attr.reshape(attr.shape[0], -1).sum(axis=1)
        rel = np.abs(total - delta) / np.abs(delta)
        print(f"\ncompleteness: worst relative gap {rel.max():.3%}")
        assert rel.max() <= 0.05

    def test_deterministic_given_seed(self, overfit_run):
        result, X = overfit_run
        a = gradient_shap(result.net, X[:4], X[20:40], reference_size=5, steps=8, seed=9)
        b = gradient_shap(result.net, X[:4], X[20:40], reference_size=5, steps=8, seed=9)
        assert np.array_equal(a.per_sample_maps, b.per_sample_maps)
        assert a.reference_digest == b.reference_digest
        c = gradient_shap(result.net, X[:4], X[20:40], reference_size=5, steps=8, seed=10)
        assert c.reference_digest != a.reference_digest

    def test_reference_pool_too_small(self):
        with pytest.raises(ValueError, match="pool"):
            select_references(pool_size=10, reference_size=50, seed=0)


class TestChannelRanking:
    def test_plume_mask_in_top3_when_only_score_separates(self, overfit_run, scoreonly_pack):
        result, X = overfit_run
        y = class_labels(scoreonly_pack)
        # Explain a class-balanced subset against a reference draw.
        idx = np.concatenate([np.nonzero(y == 1)[0][:12], np.nonzero(y == 0)[0][:12]])
        samples = X[torch.from_numpy(idx)]
        att = gradient_shap(result.net, samples, X, reference_size=8, steps=16, seed=4)
        ranking = att.ranking()
        print(f"\nchannel ranking: {ranking[:5]}")
        assert "plume_mask" in ranking[:3]
        assert att.per_sample_maps.shape == (24, 15, 32, 32)

    def test_aggregation_fields_consistent(self, overfit_run):
        result, X = overfit_run
        att = gradient_shap(result.net, X[:6], X, reference_size=4, steps=8, seed=0)
        phi = att.per_sample_channel_phi
        assert np.allclose(att.mean_abs, np.abs(phi).mean(axis=0))
        assert np.allclose(att.mean_pos, np.clip(phi, 0, None).mean(axis=0))
        assert np.allclose(att.mean_neg, np.clip(phi, None, 0).mean(axis=0))
