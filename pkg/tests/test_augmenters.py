"""
Testes para DropEdge e DropNode.
"""

import numpy as np
import pytest

from src.core.augmenters import DropPolicy, apply_policy, drop_edges, drop_nodes
from src.core.temporal_graph import EventLog
from src.utils.exceptions import ConfigurationError


@pytest.fixture
def large_log():
    rng = np.random.default_rng(0)
    num_events = 10000
    return EventLog(
        rng.integers(0, 500, num_events),
        rng.integers(0, 500, num_events),
        np.arange(num_events, dtype=float),
        num_nodes=500,
    )


class TestDropPolicy:
    """Testes para a validação da política."""

    def test_invalid_kind(self):
        with pytest.raises(ConfigurationError):
            DropPolicy(kind="path", p=0.1)

    @pytest.mark.parametrize("p", [-0.1, 1.5])
    def test_invalid_probability(self, p):
        with pytest.raises(ConfigurationError):
            DropPolicy(kind="edge", p=p)

    def test_epoch_rng_is_reproducible(self):
        policy = DropPolicy(kind="edge", p=0.2, seed=3)

        assert policy.epoch_rng(4).random() == policy.epoch_rng(4).random()
        assert policy.epoch_rng(4).random() != policy.epoch_rng(5).random()


class TestDropEdges:
    """Testes para drop_edges."""

    def test_kept_fraction_within_three_sigma(self, large_log):
        view = drop_edges(large_log, DropPolicy("edge", 0.3, seed=1), epoch=0)

        kept = view.num_kept() / large_log.num_events
        assert abs(kept - 0.7) < 3.0 * np.sqrt(0.3 * 0.7 / large_log.num_events)

    def test_zero_probability_keeps_everything(self, toy_log):
        view = drop_edges(toy_log, DropPolicy("edge", 0.0), epoch=2)

        assert view.keep_mask.all()

    def test_only_training_range_affected(self, toy_log):
        view = drop_edges(toy_log, DropPolicy("edge", 1.0), epoch=0, train_range=(0, 6))

        assert not view.keep_mask[:6].any()
        assert view.keep_mask[6:].all()

    def test_log_not_modified(self, toy_log):
        before = toy_log.content_hash()

        drop_edges(toy_log, DropPolicy("edge", 0.5), epoch=0)

        assert toy_log.content_hash() == before

    def test_new_view_per_epoch(self, large_log):
        policy = DropPolicy("edge", 0.5, seed=7)

        a = drop_edges(large_log, policy, epoch=0).keep_mask
        b = drop_edges(large_log, policy, epoch=0).keep_mask
        c = drop_edges(large_log, policy, epoch=1).keep_mask

        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_dropped_events_vanish_from_histories(self, toy_log):
        view = drop_edges(toy_log, DropPolicy("edge", 1.0), epoch=0, train_range=(0, 6))

        sample = view.sampler.sample(0, 100.0, 5)

        np.testing.assert_array_equal(sample.neighbor_ids[: sample.real_count], [4, 3])

    def test_wrong_kind(self, toy_log):
        with pytest.raises(ConfigurationError):
            drop_edges(toy_log, DropPolicy("node", 0.1), epoch=0)


class TestDropNodes:
    """Testes para drop_nodes."""

    def test_incident_events_removed(self, large_log):
        policy = DropPolicy("node", 0.2, seed=5)

        view = drop_nodes(large_log, policy, epoch=3)

        dropped = policy.epoch_rng(3).random(large_log.num_nodes) < 0.2
        incident = dropped[large_log.src] | dropped[large_log.dst]
        np.testing.assert_array_equal(view.keep_mask, ~incident)
        assert 0 < dropped.sum() < large_log.num_nodes

    def test_zero_probability_keeps_everything(self, toy_log):
        view = drop_nodes(toy_log, DropPolicy("node", 0.0), epoch=0)

        assert view.keep_mask.all()

    def test_full_probability_within_range(self, toy_log):
        view = drop_nodes(toy_log, DropPolicy("node", 1.0), epoch=0, train_range=(2, 5))

        np.testing.assert_array_equal(
            view.keep_mask, [True, True, False, False, False] + [True] * 7
        )

    def test_wrong_kind(self, toy_log):
        with pytest.raises(ConfigurationError):
            drop_nodes(toy_log, DropPolicy("edge", 0.1), epoch=0)

    def test_apply_policy_dispatches(self, toy_log):
        view = apply_policy(toy_log, DropPolicy("node", 0.5, seed=2), epoch=1)

        assert view.label == "dropnode@1"
        assert apply_policy(toy_log, DropPolicy("edge", 0.5), epoch=4).label == "dropedge@4"
