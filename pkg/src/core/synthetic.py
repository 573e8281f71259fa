"""
Gerador de logs sintéticos com comunidades plantadas.
"""

from typing import Dict, List

import numpy as np

from src.core.temporal_graph import EventLog
from src.utils.exceptions import ConfigurationError
from src.utils.logger import get_logger

logger = get_logger(__name__)


def community_of(num_nodes: int, num_communities: int) -> np.ndarray:
    """Nó i pertence à comunidade i mod C."""
    return np.arange(num_nodes) % num_communities


def generate_synthetic_log(
    num_nodes: int,
    num_events: int,
    num_communities: int,
    seed: int = 0,
    node_feat_dim: int = 8,
    cross_noise: float = 0.05,
    recurrence: float = 0.5,
    mean_gap: float = 1.0,
) -> EventLog:
    """
    Gera interações recorrentes intra-comunidade com tempos entre eventos
    exponenciais e uma fração de destinos uniformes (ruído entre comunidades).

    Args:
        num_nodes: |V| (>= 2)
        num_events: |E| (>= 1)
        num_communities: C (1 <= C <= |V|)
        seed: Semente
        node_feat_dim: d_v; features = centróide da comunidade + ruído
        cross_noise: Probabilidade de destino uniforme sobre todos os nós
        recurrence: Probabilidade de repetir um parceiro anterior da mesma comunidade
        mean_gap: Média dos intervalos entre eventos

    Returns:
        EventLog determinístico para a semente
    """
    if num_nodes < 2:
        raise ConfigurationError(f"nodes deve ser >= 2, recebido {num_nodes}")
    if num_events < 1:
        raise ConfigurationError(f"events deve ser >= 1, recebido {num_events}")
    if not 1 <= num_communities <= num_nodes:
        raise ConfigurationError(
            f"communities deve estar em [1, {num_nodes}], recebido {num_communities}"
        )
    if not 0.0 <= cross_noise <= 1.0 or not 0.0 <= recurrence <= 1.0:
        raise ConfigurationError("cross_noise e recurrence devem estar em [0, 1]")

    rng = np.random.default_rng(seed)
    community = community_of(num_nodes, num_communities)
    members = [np.flatnonzero(community == c) for c in range(num_communities)]
    partners: Dict[int, List[int]] = {}

    src = rng.integers(0, num_nodes, size=num_events)
    dst = np.empty(num_events, dtype=np.int64)
    for i, u in enumerate(src):
        u = int(u)
        if rng.random() < cross_noise:
            dst[i] = rng.integers(0, num_nodes)
            continue
        history = partners.get(u)
        if history and rng.random() < recurrence:
            v = history[rng.integers(0, len(history))]
        else:
            pool = members[community[u]]
            v = int(pool[rng.integers(0, len(pool))])
            if v == u and len(pool) > 1:
                v = int(pool[(np.flatnonzero(pool == u)[0] + 1) % len(pool)])
        dst[i] = v
        partners.setdefault(u, []).append(v)
        partners.setdefault(v, []).append(u)

    gaps = rng.exponential(mean_gap, size=num_events)
    t = np.cumsum(gaps)
    t -= t[0]

    centroids = rng.standard_normal((num_communities, node_feat_dim))
    node_feat = centroids[community] + 0.1 * rng.standard_normal((num_nodes, node_feat_dim))

    log = EventLog(
        src=src,
        dst=dst,
        t=t,
        node_feat=node_feat,
        num_nodes=num_nodes,
        name=f"synthetic_c{num_communities}_s{seed}",
    )
    logger.info(
        f"Log sintético gerado: |V|={num_nodes} |E|={num_events} C={num_communities} "
        f"intra={intra_community_fraction(log, num_communities):.3f}"
    )
    return log


def intra_community_fraction(log: EventLog, num_communities: int) -> float:
    community = community_of(log.num_nodes, num_communities)
    return float(np.mean(community[log.src] == community[log.dst]))
