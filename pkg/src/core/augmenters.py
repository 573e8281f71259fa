"""
Augmentações estruturais de referência: DropEdge e DropNode.

Cada época sorteia uma nova visão do log a partir de (seed, época). Só a faixa de
treino é afetada; o log original nunca é alterado.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.core.temporal_graph import EventLog, EventLogView
from src.utils.exceptions import ConfigurationError
from src.utils.logger import get_logger

logger = get_logger(__name__)

POLICY_KINDS = ("edge", "node")


@dataclass(frozen=True)
class DropPolicy:
    """Política de descarte: tipo, probabilidade p e semente."""

    kind: str
    p: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ConfigurationError(f"Tipo de descarte desconhecido: {self.kind}")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigurationError(f"drop_p deve estar em [0, 1], recebido {self.p}")

    def epoch_rng(self, epoch: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, epoch])


def _resolve_range(log: EventLog, train_range: Optional[Tuple[int, int]]) -> Tuple[int, int]:
    return train_range if train_range is not None else (0, log.num_events)


def drop_edges(
    log: EventLog,
    policy: DropPolicy,
    epoch: int,
    train_range: Optional[Tuple[int, int]] = None,
) -> EventLogView:
    """
    Exclui cada evento de treino, de forma independente, com probabilidade p.

    Args:
        log: Log de eventos
        policy: Política (kind = "edge")
        epoch: Época corrente (define o sorteio junto com a semente)
        train_range: Faixa de treino (padrão: log inteiro)

    Returns:
        EventLogView com a máscara de eventos mantidos
    """
    if policy.kind != "edge":
        raise ConfigurationError(f"drop_edges exige kind='edge', recebido {policy.kind}")
    start, end = _resolve_range(log, train_range)
    keep = np.ones(log.num_events, dtype=bool)
    rng = policy.epoch_rng(epoch)
    keep[start:end] = rng.random(end - start) >= policy.p

    view = EventLogView(log=log, keep_mask=keep, label=f"dropedge@{epoch}")
    logger.debug(f"DropEdge época {epoch}: {view.num_kept(start, end)}/{end - start} eventos")
    return view


def drop_nodes(
    log: EventLog,
    policy: DropPolicy,
    epoch: int,
    train_range: Optional[Tuple[int, int]] = None,
) -> EventLogView:
    """
    Marca cada nó como descartado com probabilidade p e remove os eventos de
    treino incidentes a algum nó descartado.

    Args:
        log: Log de eventos
        policy: Política (kind = "node")
        epoch: Época corrente
        train_range: Faixa de treino (padrão: log inteiro)

    Returns:
        EventLogView com a máscara de eventos mantidos
    """
    if policy.kind != "node":
        raise ConfigurationError(f"drop_nodes exige kind='node', recebido {policy.kind}")
    start, end = _resolve_range(log, train_range)
    rng = policy.epoch_rng(epoch)
    dropped = rng.random(log.num_nodes) < policy.p

    keep = np.ones(log.num_events, dtype=bool)
    src, dst = log.src[start:end], log.dst[start:end]
    keep[start:end] = ~(dropped[src] | dropped[dst])

    view = EventLogView(log=log, keep_mask=keep, label=f"dropnode@{epoch}")
    logger.debug(
        f"DropNode época {epoch}: {int(dropped.sum())} nós descartados, "
        f"{view.num_kept(start, end)}/{end - start} eventos mantidos"
    )
    return view


def apply_policy(
    log: EventLog,
    policy: DropPolicy,
    epoch: int,
    train_range: Optional[Tuple[int, int]] = None,
) -> EventLogView:
    if policy.kind == "edge":
        return drop_edges(log, policy, epoch, train_range)
    return drop_nodes(log, policy, epoch, train_range)
