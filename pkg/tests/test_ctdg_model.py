"""
Testes para o modelo CTDG (codificador, backbone mixer e preditor).
"""

import numpy as np
import pytest

from src.core import tensor as T
from src.core.ctdg_model import PREFIX, CtdgModel, TimeEncoding, ctdg_loss
from src.core.optim import ParameterStore
from src.core.temporal_graph import EventLog, NeighborBatch
from src.core.tensor import Tensor, backward, no_grad
from src.utils.exceptions import DataError, ShapeMismatchError


def _make_model(node_dim=3, edge_dim=2, model_dim=8, time_dim=4, num_neighbors=3, **kwargs):
    model = CtdgModel(
        ParameterStore(),
        node_dim=node_dim,
        edge_dim=edge_dim,
        model_dim=model_dim,
        time_dim=time_dim,
        num_neighbors=num_neighbors,
        num_blocks=kwargs.pop("num_blocks", 1),
        dropout=kwargs.pop("dropout", 0.0),
        seed=kwargs.pop("seed", 0),
    )
    model.eval()
    return model


def _zero(model, name):
    tensor = model.p(name)
    tensor.data = np.zeros_like(tensor.data)


class TestTimeEncoding:
    """Testes para a codificação temporal fixa."""

    def test_zero_delta_is_all_ones(self):
        encoding = TimeEncoding(6)

        np.testing.assert_array_equal(encoding.encode(np.array(0.0)), np.ones(6))

    def test_output_dimension_and_range(self):
        encoding = TimeEncoding(5)

        out = encoding.encode(np.array([[0.0, 3.5], [100.0, 1e6]]))

        assert out.shape == (2, 2, 5)
        assert np.all(np.abs(out) <= 1.0)

    def test_geometric_frequencies(self):
        encoding = TimeEncoding(4)

        np.testing.assert_allclose(encoding.frequencies, [1.0, 1e-3, 1e-6, 1e-9])
        assert not encoding.phase.any()

    def test_invalid_dimension(self):
        with pytest.raises(ShapeMismatchError):
            TimeEncoding(0)


class TestEncodeSequence:
    """Testes para encode_sequence."""

    def test_fully_padded_rows_are_projection_of_padding(self, toy_log):
        model = _make_model()
        isolated = EventLog(
            toy_log.src, toy_log.dst, toy_log.t, toy_log.edge_feat,
            np.vstack([toy_log.node_feat, np.ones((1, 3))]), num_nodes=6,
        )
        sample = isolated.neighbor_index.sample(5, 20.0, 3)

        sequence = model.encode_sequence(sample, isolated.node_feat)

        padding = np.concatenate([np.zeros(3), np.zeros(2), np.ones(4)])
        expected = padding @ model.p("encoder/weight").data + model.p("encoder/bias").data
        assert sequence.shape == (1, 3, 8)
        for row in sequence.values.data[0]:
            np.testing.assert_allclose(row, expected)
        assert not sequence.mask.any()

    def test_neighbor_order_permutes_rows(self, toy_log):
        model = _make_model()
        batch = toy_log.neighbor_index.sample_batch([0], [6.0], 3)
        order = [2, 0, 1]
        permuted = NeighborBatch(
            nodes=batch.nodes,
            query_times=batch.query_times,
            neighbor_ids=batch.neighbor_ids[:, order],
            neighbor_times=batch.neighbor_times[:, order],
            neighbor_edge_feats=batch.neighbor_edge_feats[:, order],
            mask=batch.mask[:, order],
            real_counts=batch.real_counts,
        )

        original = model.encode_sequence(batch, toy_log.node_feat).values.data
        shuffled = model.encode_sequence(permuted, toy_log.node_feat).values.data

        np.testing.assert_allclose(shuffled[0], original[0][order])

    def test_node_feature_width_mismatch(self, toy_log):
        model = _make_model(node_dim=2)
        sample = toy_log.neighbor_index.sample(0, 5.0, 3)

        with pytest.raises(ShapeMismatchError):
            model.encode_sequence(sample, toy_log.node_feat)

    def test_sequence_length_mismatch(self, toy_log):
        model = _make_model(num_neighbors=4)
        sample = toy_log.neighbor_index.sample(0, 5.0, 3)

        with pytest.raises(ShapeMismatchError):
            model.encode_sequence(sample, toy_log.node_feat)


class TestBackbone:
    """Testes para backbone_forward."""

    def test_constant_rows_with_zeroed_residual_branches(self):
        model = _make_model()
        for name in ("token_fc2/weight", "token_fc2/bias", "channel_fc2/weight", "channel_fc2/bias"):
            _zero(model, f"mixer/0/{name}")
        c = np.linspace(-1.0, 1.0, 8)

        out = model.backbone_forward(Tensor(np.tile(c, (2, 3, 1))))

        np.testing.assert_allclose(out.data, np.tile(c, (2, 1)))

    def test_row_permutation_changes_output(self, rng):
        model = _make_model(seed=4)
        x = rng.standard_normal((1, 3, 8))

        a = model.backbone_forward(Tensor(x)).data
        b = model.backbone_forward(Tensor(x[:, [1, 2, 0]])).data

        assert np.linalg.norm(a - b) > 0.0

    def test_single_row_is_channel_mlp(self, rng):
        model = _make_model(num_neighbors=1)
        _zero(model, "mixer/0/token_fc2/weight")
        _zero(model, "mixer/0/token_fc2/bias")
        x = Tensor(rng.standard_normal((2, 1, 8)))

        with no_grad():
            normed = T.layer_norm(
                x, model.p("mixer/0/channel_norm/gamma"), model.p("mixer/0/channel_norm/beta")
            )
            hidden = T.gelu(normed @ model.p("mixer/0/channel_fc1/weight") + model.p("mixer/0/channel_fc1/bias"))
            expected = x + (hidden @ model.p("mixer/0/channel_fc2/weight") + model.p("mixer/0/channel_fc2/bias"))

        out = model.backbone_forward(x)

        assert out.shape == (2, 8)
        np.testing.assert_allclose(out.data, expected.data[:, 0, :])

    def test_wrong_input_shape(self):
        model = _make_model()

        with pytest.raises(ShapeMismatchError):
            model.backbone_forward(Tensor(np.zeros((1, 4, 8))))

    def test_eval_forward_is_deterministic(self, rng):
        model = _make_model(dropout=0.5)
        x = rng.standard_normal((2, 3, 8))

        first = model.backbone_forward(Tensor(x)).data
        second = model.backbone_forward(Tensor(x)).data

        np.testing.assert_array_equal(first, second)


class TestPredictor:
    """Testes para predict_link e ctdg_loss."""

    def test_zero_weights_give_half_probability(self, rng):
        model = _make_model()
        for name in ("predictor/fc2/weight", "predictor/fc2/bias"):
            _zero(model, name)

        logits = model.predict_link(
            Tensor(rng.standard_normal((3, 8))), Tensor(rng.standard_normal((3, 8)))
        )

        np.testing.assert_array_equal(logits.data, np.zeros(3))
        np.testing.assert_array_equal(T.sigmoid(logits).data, np.full(3, 0.5))

    def test_symmetric_weights_are_swap_invariant(self, rng):
        model = _make_model()
        weight = model.p("predictor/fc1/weight")
        top = weight.data[:8]
        weight.data = np.vstack([top, top])
        h_u = Tensor(rng.standard_normal((2, 8)))
        h_v = Tensor(rng.standard_normal((2, 8)))

        np.testing.assert_allclose(
            model.predict_link(h_u, h_v).data, model.predict_link(h_v, h_u).data
        )

    def test_swap_changes_logit_in_general(self, rng):
        model = _make_model(seed=2)
        h_u = Tensor(rng.standard_normal((1, 8)))
        h_v = Tensor(rng.standard_normal((1, 8)))

        assert model.predict_link(h_u, h_v).item() != model.predict_link(h_v, h_u).item()

    def test_loss_at_zero_logits(self):
        loss = ctdg_loss(Tensor(np.zeros(4)), Tensor(np.zeros(4)))

        assert loss.item() == pytest.approx(np.log(2.0))

    def test_loss_example(self):
        loss = ctdg_loss(Tensor([2.0]), Tensor([-2.0]))

        assert loss.item() == pytest.approx(0.1269, abs=1e-4)

    def test_loss_vanishes_with_perfect_separation(self):
        loss = ctdg_loss(Tensor([50.0, 60.0]), Tensor([-50.0, -60.0]))

        assert loss.item() < 1e-12

    def test_empty_batch_raises(self):
        with pytest.raises(DataError):
            ctdg_loss(Tensor(np.zeros(0)), Tensor(np.zeros(0)))

    def test_unequal_counts_raise(self):
        with pytest.raises(ShapeMismatchError):
            ctdg_loss(Tensor(np.zeros(2)), Tensor(np.zeros(3)))


class TestEndToEndGradient:
    """Gradiente da perda CTDG contra diferenças finitas em um log de 4 eventos."""

    def test_matches_central_differences(self):
        rng = np.random.default_rng(21)
        log = EventLog(
            [0, 1, 2, 0],
            [1, 2, 0, 2],
            [0.0, 1.0, 2.0, 3.0],
            edge_feat=rng.standard_normal((4, 2)),
            node_feat=rng.standard_normal((3, 2)),
        )
        model = _make_model(node_dim=2, edge_dim=2, model_dim=4, time_dim=2, num_neighbors=2, seed=5)
        # Perturba os pesos iniciais (vieses zerados)
        for param in model.params.parameters(PREFIX):
            param.tensor.data = param.tensor.data + 0.1 * rng.standard_normal(param.shape)

        src, dst, neg = np.array([1, 2, 0]), np.array([2, 0, 2]), np.array([0, 1, 1])
        times = np.array([1.0, 2.0, 3.0])

        def loss_fn():
            sampler = log.neighbor_index
            h_src = model.embed_nodes(sampler, log, src, times)
            pos = model.link_logits(h_src, model.embed_nodes(sampler, log, dst, times))
            negative = model.link_logits(h_src, model.embed_nodes(sampler, log, neg, times))
            return ctdg_loss(pos, negative)

        backward(loss_fn())

        h = 1e-5
        for param in model.params.parameters(PREFIX):
            analytic = param.tensor.grad
            assert analytic is not None, param.name
            flat = param.tensor.data.reshape(-1)
            for position in range(min(flat.size, 4)):
                values = []
                for step in (h, -h):
                    shifted = flat.copy()
                    shifted[position] += step
                    original = param.tensor.data
                    param.tensor.data = shifted.reshape(original.shape)
                    with no_grad():
                        values.append(loss_fn().item())
                    param.tensor.data = original
                numeric = (values[0] - values[1]) / (2.0 * h)
                assert analytic.reshape(-1)[position] == pytest.approx(
                    numeric, rel=1e-4, abs=1e-6
                ), param.name
