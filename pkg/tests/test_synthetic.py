"""
Testes para o gerador de logs sintéticos.
"""

import numpy as np
import pytest

from src.core.synthetic import community_of, generate_synthetic_log, intra_community_fraction
from src.utils.exceptions import ConfigurationError


class TestSyntheticLog:
    """Testes para generate_synthetic_log."""

    def test_mostly_intra_community(self):
        log = generate_synthetic_log(200, 5000, 2, seed=0)

        assert intra_community_fraction(log, 2) >= 0.95

    def test_shape_and_order(self, synthetic_log):
        assert synthetic_log.num_nodes == 30
        assert synthetic_log.num_events == 240
        assert synthetic_log.d_v == 4
        assert synthetic_log.t[0] == 0.0
        assert np.all(np.diff(synthetic_log.t) >= 0)

    def test_deterministic_for_seed(self):
        a = generate_synthetic_log(50, 300, 3, seed=9)
        b = generate_synthetic_log(50, 300, 3, seed=9)
        c = generate_synthetic_log(50, 300, 3, seed=10)

        assert a.content_hash() == b.content_hash()
        assert a.content_hash() != c.content_hash()

    def test_no_cross_noise_is_fully_intra(self):
        log = generate_synthetic_log(40, 800, 4, seed=1, cross_noise=0.0)

        assert intra_community_fraction(log, 4) == 1.0

    def test_node_features_cluster_by_community(self):
        log = generate_synthetic_log(60, 100, 2, seed=2, node_feat_dim=6)
        community = community_of(60, 2)

        centroid_0 = log.node_feat[community == 0].mean(axis=0)
        centroid_1 = log.node_feat[community == 1].mean(axis=0)
        spread = np.linalg.norm(log.node_feat[community == 0] - centroid_0, axis=1).max()
        assert np.linalg.norm(centroid_0 - centroid_1) > spread

    def test_community_assignment(self):
        np.testing.assert_array_equal(community_of(5, 2), [0, 1, 0, 1, 0])

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"num_nodes": 1, "num_events": 10, "num_communities": 1},
            {"num_nodes": 10, "num_events": 0, "num_communities": 2},
            {"num_nodes": 10, "num_events": 10, "num_communities": 11},
            {"num_nodes": 10, "num_events": 10, "num_communities": 2, "cross_noise": 1.5},
        ],
    )
    def test_invalid_arguments(self, kwargs):
        with pytest.raises(ConfigurationError):
            generate_synthetic_log(**kwargs)
