"""
Modelo CTDG: codificador da sequência de vizinhos históricos, backbone no estilo
GraphMixer (MLP-Mixer + mean-pooling) e preditor de links com perda BCE.
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from src.core import tensor as T
from src.core.optim import ParameterStore, glorot_uniform
from src.core.temporal_graph import EventLog, NeighborBatch, NeighborSample, NeighborSampler
from src.core.tensor import Tensor
from src.utils.exceptions import DataError, ShapeMismatchError
from src.utils.logger import get_logger

PREFIX = "ctdg/"


class TimeEncoding:
    """Codificação temporal fixa z(Δt) = cos(Δt·w + b), sem parâmetros treináveis."""

    def __init__(self, dimension: int):
        if dimension < 1:
            raise ShapeMismatchError("time-encoding", (dimension,), (1,))
        self.dimension = dimension
        exponents = np.arange(dimension) * 9.0 / max(dimension - 1, 1)
        self.frequencies = 1.0 / 10.0**exponents
        self.phase = np.zeros(dimension)

    def encode(self, delta_t: np.ndarray) -> np.ndarray:
        delta_t = np.asarray(delta_t, dtype=np.float64)
        return np.cos(delta_t[..., None] * self.frequencies + self.phase)


@dataclass
class SequenceEmbedding:
    """Sequências s_u^t empilhadas: valores B x L x D, máscara B x L e donos."""

    values: Tensor
    mask: np.ndarray
    nodes: np.ndarray
    query_times: np.ndarray

    @property
    def shape(self):
        return self.values.shape


class CtdgModel:
    """
    Modelo de predição de links sobre sequências de vizinhos recentes.

    Todos os pesos ficam no ParameterStore sob "ctdg/...": codificador,
    blocos mixer (token e canal) e preditor.
    """

    def __init__(
        self,
        params: ParameterStore,
        node_dim: int,
        edge_dim: int,
        model_dim: int = 64,
        time_dim: int = 32,
        num_neighbors: int = 16,
        num_blocks: int = 2,
        dropout: float = 0.1,
        seed: int = 0,
    ):
        """
        Registra os parâmetros do modelo.

        Args:
            params: Armazenamento compartilhado de parâmetros
            node_dim: d_v
            edge_dim: d_e
            model_dim: D
            time_dim: d_t
            num_neighbors: L
            num_blocks: Número de blocos mixer
            dropout: Probabilidade de dropout em treino
            seed: Semente de inicialização
        """
        self.logger = get_logger(__name__)
        self.params = params
        self.node_dim = node_dim
        self.edge_dim = edge_dim
        self.model_dim = model_dim
        self.num_neighbors = num_neighbors
        self.num_blocks = num_blocks
        self.dropout = dropout
        self.time_encoding = TimeEncoding(time_dim)
        self.training = True
        self.dropout_rng = np.random.default_rng(seed + 1)

        rng = np.random.default_rng(seed)
        input_dim = node_dim + edge_dim + time_dim
        self._linear(rng, "encoder", input_dim, model_dim)

        L, D = num_neighbors, model_dim
        for block in range(num_blocks):
            base = f"mixer/{block}"
            self._norm(f"{base}/token_norm", D)
            # Mistura de tokens: W (L_h x L) multiplica a sequência pela esquerda
            self._register(f"{base}/token_fc1/weight", glorot_uniform(rng, L, L, (L, L)))
            self._register(f"{base}/token_fc1/bias", np.zeros((L, 1)))
            self._register(f"{base}/token_fc2/weight", glorot_uniform(rng, L, L, (L, L)))
            self._register(f"{base}/token_fc2/bias", np.zeros((L, 1)))
            self._norm(f"{base}/channel_norm", D)
            self._linear(rng, f"{base}/channel_fc1", D, 4 * D)
            self._linear(rng, f"{base}/channel_fc2", 4 * D, D)

        self._linear(rng, "predictor/fc1", 2 * D, D)
        self._linear(rng, "predictor/fc2", D, 1)
        self.logger.debug(
            f"CtdgModel criado: D={D}, L={L}, d_t={time_dim}, blocos={num_blocks}, "
            f"{len(self.params.names(PREFIX))} tensores"
        )

    def _register(self, name: str, value: np.ndarray) -> None:
        self.params.register(PREFIX + name, value)

    def _linear(self, rng: np.random.Generator, name: str, fan_in: int, fan_out: int) -> None:
        self._register(f"{name}/weight", glorot_uniform(rng, fan_in, fan_out, (fan_in, fan_out)))
        self._register(f"{name}/bias", np.zeros(fan_out))

    def _norm(self, name: str, width: int) -> None:
        self._register(f"{name}/gamma", np.ones(width))
        self._register(f"{name}/beta", np.zeros(width))

    def p(self, name: str) -> Tensor:
        return self.params.get(PREFIX + name)

    def train(self) -> None:
        self.training = True

    def eval(self) -> None:
        self.training = False

    def _apply_linear(self, x: Tensor, name: str) -> Tensor:
        return x @ self.p(f"{name}/weight") + self.p(f"{name}/bias")

    def _dropout(self, x: Tensor) -> Tensor:
        return T.dropout(x, self.dropout, rng=self.dropout_rng, training=self.training)

    def encode_sequence(
        self,
        sample: Union[NeighborSample, NeighborBatch],
        node_feat: np.ndarray,
    ) -> SequenceEmbedding:
        """
        Projeta [feat_nó(w_l) ‖ feat_aresta ‖ z(Δt_l)] de cada linha para D.

        Args:
            sample: Amostra (ou lote) de vizinhos
            node_feat: Matriz |V| x d_v de features de nó

        Returns:
            SequenceEmbedding B x L x D (B = 1 para amostra única)
        """
        batch = NeighborBatch.from_samples([sample]) if isinstance(sample, NeighborSample) else sample
        if batch.neighbor_ids.shape[1] != self.num_neighbors:
            raise ShapeMismatchError(
                "encode", batch.neighbor_ids.shape, (len(batch), self.num_neighbors)
            )
        if node_feat.shape[1] != self.node_dim:
            raise ShapeMismatchError("encode", node_feat.shape, (node_feat.shape[0], self.node_dim))
        if batch.neighbor_edge_feats.shape[-1] != self.edge_dim:
            raise ShapeMismatchError(
                "encode", batch.neighbor_edge_feats.shape, (len(batch), self.num_neighbors, self.edge_dim)
            )

        mask = batch.mask
        node_rows = node_feat[batch.neighbor_ids] * mask[..., None]
        edge_rows = batch.neighbor_edge_feats * mask[..., None]
        delta_t = np.where(mask, batch.query_times[:, None] - batch.neighbor_times, 0.0)
        time_rows = self.time_encoding.encode(delta_t)

        rows = Tensor(np.concatenate([node_rows, edge_rows, time_rows], axis=-1))
        values = self._dropout(self._apply_linear(rows, "encoder"))
        return SequenceEmbedding(
            values=values, mask=mask, nodes=batch.nodes, query_times=batch.query_times
        )

    def backbone_forward(self, sequence: Union[SequenceEmbedding, Tensor]) -> Tensor:
        """
        Blocos mixer (tokens ao longo de L, canais ao longo de D) seguidos de
        mean-pooling sobre L.

        Args:
            sequence: SequenceEmbedding ou tensor B x L x D

        Returns:
            Representações de nó h_u^t (B x D)
        """
        x = sequence.values if isinstance(sequence, SequenceEmbedding) else sequence
        if x.ndim != 3 or x.shape[1:] != (self.num_neighbors, self.model_dim):
            raise ShapeMismatchError(
                "backbone", x.shape, (x.shape[0], self.num_neighbors, self.model_dim)
            )
        for block in range(self.num_blocks):
            base = f"mixer/{block}"
            normed = T.layer_norm(x, self.p(f"{base}/token_norm/gamma"), self.p(f"{base}/token_norm/beta"))
            mixed = self.p(f"{base}/token_fc1/weight") @ normed + self.p(f"{base}/token_fc1/bias")
            mixed = self._dropout(T.gelu(mixed))
            mixed = self.p(f"{base}/token_fc2/weight") @ mixed + self.p(f"{base}/token_fc2/bias")
            x = x + mixed

            normed = T.layer_norm(x, self.p(f"{base}/channel_norm/gamma"), self.p(f"{base}/channel_norm/beta"))
            hidden = self._dropout(T.gelu(self._apply_linear(normed, f"{base}/channel_fc1")))
            x = x + self._apply_linear(hidden, f"{base}/channel_fc2")
        return x.mean(axis=1)

    def predict_link(self, h_u: Tensor, h_v: Tensor) -> Tensor:
        """Logits MLP([h_u ‖ h_v]) (B,); probabilidade = sigmoid(logit)."""
        hidden = T.relu(self._apply_linear(T.concat([h_u, h_v]), "predictor/fc1"))
        hidden = self._dropout(hidden)
        logits = self._apply_linear(hidden, "predictor/fc2")
        return logits.reshape(-1)

    def link_logits(
        self,
        src: Union[SequenceEmbedding, Tensor],
        dst: Union[SequenceEmbedding, Tensor],
    ) -> Tensor:
        return self.predict_link(self.backbone_forward(src), self.backbone_forward(dst))

    def embed_nodes(
        self,
        sampler: NeighborSampler,
        log: EventLog,
        nodes: np.ndarray,
        times: np.ndarray,
        visible_end: Optional[int] = None,
    ) -> SequenceEmbedding:
        batch = sampler.sample_batch(nodes, times, self.num_neighbors, visible_end)
        return self.encode_sequence(batch, log.node_feat)


def ctdg_loss(pos_logits: Tensor, neg_logits: Tensor) -> Tensor:
    """
    BCE médio sobre pares positivos (rótulo 1) e negativos (rótulo 0).

    Args:
        pos_logits: Logits dos eventos observados
        neg_logits: Logits dos negativos (mesma quantidade)

    Returns:
        Loss escalar
    """
    if pos_logits.data.size == 0:
        raise DataError("Lote vazio na perda de predição de links")
    if pos_logits.shape != neg_logits.shape:
        raise ShapeMismatchError("bce-with-logits", pos_logits.shape, neg_logits.shape)
    logits = T.concat([pos_logits.reshape(-1, 1), neg_logits.reshape(-1, 1)]).reshape(-1)
    labels = np.tile(np.array([1.0, 0.0]), pos_logits.data.size)
    return T.bce_with_logits(logits, Tensor(labels))
