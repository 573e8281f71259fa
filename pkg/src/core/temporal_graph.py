"""
Grafo dinâmico em tempo contínuo: armazenamento cronológico de eventos, divisão
cronológica, amostragem de vizinhos recentes com zero-padding, amostragem de
negativos e ingestão de datasets.
"""

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.core.checkpoint import read_event_arrays, write_event_arrays
from src.utils.exceptions import (
    DataError,
    DataFormatError,
    EmptyDatasetError,
    SplitError,
)
from src.utils.logger import get_logger

logger = get_logger(__name__)

INGEST_FORMATS = ("jodie", "edgelist")
MIN_SPLIT_EVENTS = 3
SPLIT_PRESETS: Dict[str, Tuple[float, float, float]] = {
    "0.1": (0.1, 0.1, 0.8),
    "0.3": (0.3, 0.2, 0.5),
}


@dataclass(frozen=True)
class Event:
    """Uma interação (u, v, t) com features de aresta."""

    src: int
    dst: int
    t: float
    edge_feat: Tuple[float, ...]
    idx: int


class EventLog:
    """Log imutável de eventos em ordem cronológica não decrescente."""

    def __init__(
        self,
        src: Sequence[int],
        dst: Sequence[int],
        t: Sequence[float],
        edge_feat: Optional[np.ndarray] = None,
        node_feat: Optional[np.ndarray] = None,
        num_nodes: Optional[int] = None,
        name: str = "log",
    ):
        """
        Inicializa e valida o log.

        Args:
            src: Nós de origem
            dst: Nós de destino
            t: Timestamps (>= 0, não decrescentes)
            edge_feat: Matriz |E| x d_e (opcional)
            node_feat: Matriz |V| x d_v (opcional; zeros quando ausente)
            num_nodes: |V|; inferido dos ids quando omitido
            name: Identificação do dataset
        """
        src = np.asarray(src, dtype=np.int64).reshape(-1)
        dst = np.asarray(dst, dtype=np.int64).reshape(-1)
        t = np.asarray(t, dtype=np.float64).reshape(-1)
        if not (len(src) == len(dst) == len(t)):
            raise DataError("src, dst e t devem ter o mesmo comprimento")

        if num_nodes is None:
            num_nodes = int(max(src.max(initial=-1), dst.max(initial=-1)) + 1)
        if edge_feat is None:
            edge_feat = np.zeros((len(src), 0))
        edge_feat = np.asarray(edge_feat, dtype=np.float64).reshape(len(src), -1)
        if node_feat is None:
            node_feat = np.zeros((num_nodes, 0))
        node_feat = np.asarray(node_feat, dtype=np.float64).reshape(num_nodes, -1)

        if len(t) and (t.min() < 0 or not np.all(np.isfinite(t))):
            raise DataError("Timestamps devem ser finitos e não negativos")
        if len(t) > 1 and np.any(np.diff(t) < 0):
            raise DataError("Timestamps devem estar em ordem não decrescente")
        if len(src) and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= num_nodes):
            raise DataError(f"Ids de nó fora do intervalo [0, {num_nodes})")

        for array in (src, dst, t, edge_feat, node_feat):
            array.flags.writeable = False

        self.src = src
        self.dst = dst
        self.t = t
        self.edge_feat = edge_feat
        self.node_feat = node_feat
        self.num_nodes = int(num_nodes)
        self.name = name
        self._index: Optional["NeighborSampler"] = None

    def __len__(self) -> int:
        return len(self.src)

    def __repr__(self) -> str:
        return (
            f"<EventLog '{self.name}' |V|={self.num_nodes} |E|={self.num_events} "
            f"d_e={self.d_e} d_v={self.d_v}>"
        )

    @property
    def num_events(self) -> int:
        return len(self.src)

    @property
    def d_e(self) -> int:
        return self.edge_feat.shape[1]

    @property
    def d_v(self) -> int:
        return self.node_feat.shape[1]

    def event(self, idx: int) -> Event:
        return Event(
            src=int(self.src[idx]),
            dst=int(self.dst[idx]),
            t=float(self.t[idx]),
            edge_feat=tuple(self.edge_feat[idx].tolist()),
            idx=int(idx),
        )

    @property
    def events(self) -> List[Event]:
        return [self.event(i) for i in range(self.num_events)]

    def iter_events(self, start: int = 0, end: Optional[int] = None) -> Iterator[Event]:
        end = self.num_events if end is None else end
        for i in range(start, end):
            yield self.event(i)

    def unique_edges(self) -> int:
        if not self.num_events:
            return 0
        pairs = np.stack([self.src, self.dst], axis=1)
        return int(np.unique(pairs, axis=0).shape[0])

    def content_hash(self) -> str:
        """SHA-256 do conteúdo (ids, tempos e features)."""
        digest = hashlib.sha256()
        digest.update(str((self.num_nodes, self.d_e, self.d_v)).encode("utf-8"))
        for array in (self.src, self.dst, self.t, self.edge_feat, self.node_feat):
            digest.update(np.ascontiguousarray(array).tobytes())
        return digest.hexdigest()

    @property
    def neighbor_index(self) -> "NeighborSampler":
        """Índice de vizinhança sobre o log completo (construído sob demanda)."""
        if self._index is None:
            self._index = NeighborSampler(self)
        return self._index


@dataclass(frozen=True)
class ChronoSplit:
    """Faixas cronológicas [início, fim) de treino, validação e teste."""

    train: Tuple[int, int]
    val: Tuple[int, int]
    test: Tuple[int, int]
    ratios: Tuple[float, float, float]
    unseen_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def range(self, name: str) -> Tuple[int, int]:
        return {"train": self.train, "val": self.val, "test": self.test}[name]

    def sizes(self) -> Dict[str, int]:
        return {name: end - start for name, (start, end) in self.as_dict().items()}

    def as_dict(self) -> Dict[str, Tuple[int, int]]:
        return {"train": self.train, "val": self.val, "test": self.test}


@dataclass
class NeighborSample:
    """Os L vizinhos mais recentes de um nó antes do instante de consulta."""

    node: int
    query_time: float
    neighbor_ids: np.ndarray
    neighbor_times: np.ndarray
    neighbor_edge_feats: np.ndarray
    real_count: int
    mask: np.ndarray

    @property
    def length(self) -> int:
        return len(self.neighbor_ids)


@dataclass
class NeighborBatch:
    """Lote de amostras de vizinhança empilhadas (B x L)."""

    nodes: np.ndarray
    query_times: np.ndarray
    neighbor_ids: np.ndarray
    neighbor_times: np.ndarray
    neighbor_edge_feats: np.ndarray
    mask: np.ndarray
    real_counts: np.ndarray

    def __len__(self) -> int:
        return len(self.nodes)

    @classmethod
    def from_samples(cls, samples: Sequence[NeighborSample]) -> "NeighborBatch":
        return cls(
            nodes=np.array([s.node for s in samples], dtype=np.int64),
            query_times=np.array([s.query_time for s in samples], dtype=np.float64),
            neighbor_ids=np.stack([s.neighbor_ids for s in samples]),
            neighbor_times=np.stack([s.neighbor_times for s in samples]),
            neighbor_edge_feats=np.stack([s.neighbor_edge_feats for s in samples]),
            mask=np.stack([s.mask for s in samples]),
            real_counts=np.array([s.real_count for s in samples], dtype=np.int64),
        )

    def sample(self, i: int) -> NeighborSample:
        return NeighborSample(
            node=int(self.nodes[i]),
            query_time=float(self.query_times[i]),
            neighbor_ids=self.neighbor_ids[i],
            neighbor_times=self.neighbor_times[i],
            neighbor_edge_feats=self.neighbor_edge_feats[i],
            real_count=int(self.real_counts[i]),
            mask=self.mask[i],
        )


class NeighborSampler:
    """
    Índice de vizinhança não direcionado por nó.

    Cada interação é registrada nas duas pontas (uma vez só em auto-laços). As
    entradas de cada nó ficam ordenadas pelo índice do evento, o que equivale à
    ordem (t, idx) porque o log é cronológico.
    """

    def __init__(self, log: EventLog, event_mask: Optional[np.ndarray] = None):
        """
        Constrói o índice.

        Args:
            log: Log de eventos
            event_mask: Booleanos |E|; eventos com False ficam fora do histórico
        """
        self.log = log
        event_ids = np.arange(log.num_events, dtype=np.int64)
        not_loop = log.src != log.dst
        owners = np.concatenate([log.src, log.dst[not_loop]])
        partners = np.concatenate([log.dst, log.src[not_loop]])
        eids = np.concatenate([event_ids, event_ids[not_loop]])

        if event_mask is not None:
            keep = np.asarray(event_mask, dtype=bool)[eids]
            owners, partners, eids = owners[keep], partners[keep], eids[keep]

        order = np.lexsort((eids, owners))
        self._owners = owners[order]
        self._partners = partners[order]
        self._eids = eids[order]
        self._times = log.t[self._eids]
        self._pointers = np.searchsorted(
            self._owners, np.arange(log.num_nodes + 1), side="left"
        )

    def degree(self, node: int) -> int:
        return int(self._pointers[node + 1] - self._pointers[node])

    def sample(
        self,
        node: int,
        t: float,
        num_neighbors: int,
        visible_end: Optional[int] = None,
    ) -> NeighborSample:
        """
        Retorna os min(L, disponíveis) parceiros mais recentes com t_e < t.

        Args:
            node: Nó consultado
            t: Instante de consulta
            num_neighbors: L
            visible_end: Só eventos com índice < visible_end são elegíveis

        Returns:
            NeighborSample ordenado do mais recente ao mais antigo, com padding no fim
        """
        if not 0 <= node < self.log.num_nodes:
            raise DataError(f"Nó {node} fora do intervalo [0, {self.log.num_nodes})")
        L = int(num_neighbors)
        lo, hi = self._pointers[node], self._pointers[node + 1]
        times = self._times[lo:hi]
        stop = int(np.searchsorted(times, t, side="left"))
        if visible_end is not None:
            stop = min(stop, int(np.searchsorted(self._eids[lo:hi], visible_end, side="left")))
        start = max(0, stop - L)
        chosen = np.arange(lo + start, lo + stop)[::-1]
        count = len(chosen)

        ids = np.zeros(L, dtype=np.int64)
        nbr_times = np.zeros(L, dtype=np.float64)
        feats = np.zeros((L, self.log.d_e), dtype=np.float64)
        mask = np.zeros(L, dtype=bool)
        if count:
            ids[:count] = self._partners[chosen]
            nbr_times[:count] = self._times[chosen]
            feats[:count] = self.log.edge_feat[self._eids[chosen]]
            mask[:count] = True
        return NeighborSample(
            node=int(node),
            query_time=float(t),
            neighbor_ids=ids,
            neighbor_times=nbr_times,
            neighbor_edge_feats=feats,
            real_count=count,
            mask=mask,
        )

    def sample_batch(
        self,
        nodes: Sequence[int],
        times: Sequence[float],
        num_neighbors: int,
        visible_end: Optional[int] = None,
    ) -> NeighborBatch:
        samples = [
            self.sample(int(n), float(t), num_neighbors, visible_end)
            for n, t in zip(nodes, times)
        ]
        return NeighborBatch.from_samples(samples)


@dataclass
class EventLogView:
    """Visão de um log com máscara de eventos mantidos (o log nunca é alterado)."""

    log: EventLog
    keep_mask: np.ndarray
    label: str = "identity"
    _sampler: Optional[NeighborSampler] = field(default=None, repr=False)

    @classmethod
    def identity(cls, log: EventLog) -> "EventLogView":
        return cls(log=log, keep_mask=np.ones(log.num_events, dtype=bool))

    def kept_indices(self, start: int, end: int) -> np.ndarray:
        return start + np.flatnonzero(self.keep_mask[start:end])

    def num_kept(self, start: int = 0, end: Optional[int] = None) -> int:
        end = self.log.num_events if end is None else end
        return int(self.keep_mask[start:end].sum())

    @property
    def sampler(self) -> NeighborSampler:
        if self._sampler is None:
            if self.keep_mask.all():
                self._sampler = self.log.neighbor_index
            else:
                self._sampler = NeighborSampler(self.log, event_mask=self.keep_mask)
        return self._sampler


@dataclass
class NegativeSamples:
    """Negativos (src, dst_neg, t), um por positivo por padrão."""

    src: np.ndarray
    dst: np.ndarray
    t: np.ndarray

    def __len__(self) -> int:
        return len(self.src)

    def __iter__(self) -> Iterator[Tuple[int, int, float]]:
        for s, d, t in zip(self.src, self.dst, self.t):
            yield int(s), int(d), float(t)

    def subset(self, positions: np.ndarray) -> "NegativeSamples":
        return NegativeSamples(self.src[positions], self.dst[positions], self.t[positions])


def sample_neighbors(
    log: EventLog,
    node: int,
    t: float,
    num_neighbors: int,
    visible_end: Optional[int] = None,
) -> NeighborSample:
    """Amostra os vizinhos recentes de `node` antes de `t` no log completo."""
    return log.neighbor_index.sample(node, t, num_neighbors, visible_end)


def sample_negatives(
    log: EventLog,
    split_range: Tuple[int, int],
    count: int = 1,
    seed: int = 0,
) -> NegativeSamples:
    """
    Sorteia destinos negativos uniformes (sem rejeição de colisões).

    Args:
        log: Log de eventos
        split_range: Faixa [início, fim) de eventos positivos
        count: Negativos por positivo
        seed: Semente (determinística)

    Returns:
        NegativeSamples alinhados aos positivos da faixa
    """
    start, end = split_range
    rng = np.random.default_rng(seed)
    src = np.repeat(log.src[start:end], count)
    t = np.repeat(log.t[start:end], count)
    dst = rng.integers(0, log.num_nodes, size=len(src), dtype=np.int64)
    return NegativeSamples(src=src.copy(), dst=dst, t=t.copy())


def chrono_split(
    log: EventLog,
    ratios: Union[Sequence[float], str] = (0.1, 0.1, 0.8),
) -> ChronoSplit:
    """
    Divide o log em faixas cronológicas contíguas.

    Args:
        log: Log de eventos
        ratios: (treino, validação, teste) ou nome de preset ("0.1", "0.3")

    Returns:
        ChronoSplit com fronteiras floor(razão acumulada x |E|)
    """
    if isinstance(ratios, str):
        if ratios not in SPLIT_PRESETS:
            raise SplitError(f"Preset de divisão desconhecido: {ratios}")
        ratios = SPLIT_PRESETS[ratios]
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise SplitError(f"Razões devem ser três valores positivos: {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise SplitError(f"Razões devem somar 1: {ratios}")
    total = log.num_events
    if total < MIN_SPLIT_EVENTS:
        raise SplitError(f"Log com {total} eventos é curto demais para dividir")

    # Tolerância evita que 0.29*100 = 28.999... caia para 28
    train_end = int(math.floor(ratios[0] * total + 1e-9))
    val_end = int(math.floor((ratios[0] + ratios[1]) * total + 1e-9))
    if train_end == 0 or val_end == train_end or val_end == total:
        logger.warning(
            f"Divisão com faixa vazia: |E|={total}, fronteiras {train_end}/{val_end}"
        )

    seen = np.zeros(log.num_nodes, dtype=bool)
    seen[log.src[:train_end]] = True
    seen[log.dst[:train_end]] = True
    later = np.zeros(log.num_nodes, dtype=bool)
    later[log.src[train_end:]] = True
    later[log.dst[train_end:]] = True
    unseen = np.flatnonzero(later & ~seen)

    split = ChronoSplit(
        train=(0, train_end),
        val=(train_end, val_end),
        test=(val_end, total),
        ratios=ratios,
        unseen_nodes=unseen,
    )
    logger.info(
        f"Divisão cronológica de '{log.name}': {split.sizes()} "
        f"({len(unseen)} nós inéditos após o treino)"
    )
    return split


def density(log: EventLog, split_range: Optional[Tuple[int, int]] = None) -> float:
    """Densidade 2|E| / (|V|(|V|-1)) dos links na faixa."""
    if log.num_nodes < 2:
        raise DataError("Densidade exige |V| >= 2")
    start, end = split_range if split_range is not None else (0, log.num_events)
    num_links = end - start
    return 2.0 * num_links / (log.num_nodes * (log.num_nodes - 1))


def ingest_csv(
    path: Union[str, Path],
    fmt: str = "edgelist",
    node_feat_dim: int = 0,
) -> EventLog:
    """
    Lê um dataset CSV e produz um EventLog ordenado (ordenação estável por t).

    Args:
        path: Arquivo CSV
        fmt: "jodie" (cabeçalho + user,item,t,label,f_1..f_de) ou "edgelist" (src,dst,t)
        node_feat_dim: d_v das features de nó (zeros; datasets sem atributos)

    Returns:
        EventLog com timestamps deslocados para começar em zero
    """
    path = Path(path)
    if fmt not in INGEST_FORMATS:
        raise DataFormatError(f"Formato desconhecido: {fmt} (use {INGEST_FORMATS})")
    if not path.exists():
        raise DataError(f"Arquivo de dataset não encontrado: {path}")
    if path.stat().st_size == 0:
        raise EmptyDatasetError(f"Arquivo vazio: {path}")

    header_rows = 1 if fmt == "jodie" else 0
    try:
        frame = pd.read_csv(
            path,
            header=None,
            skiprows=header_rows,
            dtype=str,
            encoding="utf-8",
            skip_blank_lines=False,
        )
    except pd.errors.EmptyDataError:
        raise EmptyDatasetError(f"Nenhum evento em {path}") from None
    except pd.errors.ParserError as e:
        raise DataFormatError(f"Linha mal formatada em {path}: {e}") from None
    except UnicodeDecodeError as e:
        raise DataFormatError(f"Codificação inválida em {path} (esperado UTF-8): {e}") from None
    except ValueError as e:
        raise DataFormatError(f"Arquivo ilegível {path}: {e}") from None

    # Linhas em branco saem do log, mas o índice preserva a numeração do arquivo
    frame = frame[~frame.isna().all(axis=1)]
    if frame.empty:
        raise EmptyDatasetError(f"Nenhum evento em {path}")
    line_numbers = frame.index.to_numpy() + 1 + header_rows
    frame = frame.reset_index(drop=True)

    expected = 3 if fmt == "edgelist" else None
    if (expected and frame.shape[1] != expected) or frame.shape[1] < 3 or (
        fmt == "jodie" and frame.shape[1] < 4
    ):
        raise DataFormatError(
            f"Linha {line_numbers[0]} mal formatada em {path}: {frame.shape[1]} campos"
        )

    numeric = frame.apply(lambda column: pd.to_numeric(column.str.strip(), errors="coerce"))
    ids = numeric.iloc[:, :2]
    bad = numeric.isna().any(axis=1) | (ids < 0).any(axis=1) | (ids % 1 != 0).any(axis=1)
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        line = int(line_numbers[row])
        raise DataFormatError(
            f"Linha {line} mal formatada em {path}: {','.join(frame.iloc[row].astype(str))}"
        )

    values = numeric.to_numpy(dtype=np.float64)
    src = values[:, 0].astype(np.int64)
    dst = values[:, 1].astype(np.int64)
    t = values[:, 2]

    if fmt == "jodie":
        num_users = int(src.max()) + 1
        dst = dst + num_users
        num_nodes = num_users + int(values[:, 1].max()) + 1
        edge_feat = values[:, 4:]
    else:
        # Ids de lista de arestas viram um espaço contíguo 0..|V|-1
        unique_ids, inverse = np.unique(np.concatenate([src, dst]), return_inverse=True)
        src, dst = inverse[: len(src)], inverse[len(src):]
        num_nodes = len(unique_ids)
        edge_feat = np.zeros((len(src), 0))

    order = np.argsort(t, kind="stable")
    t = t[order] - t.min()
    log = EventLog(
        src=src[order],
        dst=dst[order],
        t=t,
        edge_feat=edge_feat[order],
        node_feat=np.zeros((num_nodes, node_feat_dim)),
        num_nodes=num_nodes,
        name=path.stem,
    )
    logger.info(
        f"Dataset ingerido: {path.name} |V|={log.num_nodes} |E|={log.num_events} "
        f"arestas únicas={log.unique_edges()} d_e={log.d_e}"
    )
    return log


def save_event_log(log: EventLog, path: Union[str, Path]) -> Path:
    """Grava o log no formato binário canônico CNDE."""
    path = write_event_arrays(
        path, log.num_nodes, log.src, log.dst, log.t, log.edge_feat, log.node_feat
    )
    logger.info(f"Arquivo de eventos gravado: {path}")
    return path


def load_event_log(
    path: Union[str, Path], fmt: Optional[str] = None, node_feat_dim: int = 0
) -> EventLog:
    """
    Carrega um log de arquivo CNDE ou CSV.

    Args:
        path: Caminho do arquivo
        fmt: Formato CSV ("jodie"/"edgelist"); ignorado para arquivos CNDE
        node_feat_dim: d_v para CSVs sem features de nó

    Returns:
        EventLog carregado
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"Arquivo de dataset não encontrado: {path}")
    if path.suffix.lower() == ".csv":
        return ingest_csv(path, fmt or "edgelist", node_feat_dim=node_feat_dim)

    arrays = read_event_arrays(path)
    return EventLog(
        src=arrays["src"],
        dst=arrays["dst"],
        t=arrays["t"],
        edge_feat=arrays["edge_feat"],
        node_feat=arrays["node_feat"],
        num_nodes=int(arrays["num_nodes"]),
        name=path.stem,
    )


def dataset_stats(log: EventLog, split: Optional[ChronoSplit] = None) -> Dict:
    """Registro de estatísticas {dataset, num_nodes, num_events, unique_edges, d_e, density_train}."""
    train_range = split.train if split is not None else (0, log.num_events)
    return {
        "dataset": log.name,
        "num_nodes": log.num_nodes,
        "num_events": log.num_events,
        "unique_edges": log.unique_edges(),
        "d_e": log.d_e,
        "density_train": density(log, train_range) if log.num_nodes >= 2 else None,
    }
