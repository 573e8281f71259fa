"""
Configuração de fixtures globais para testes
"""

import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))
import tempfile
from dataclasses import replace
from pathlib import Path
from unittest.mock import Mock, patch

import numpy as np
import pytest

from src.core.optim import ParameterStore
from src.core.synthetic import generate_synthetic_log
from src.core.temporal_graph import EventLog
from src.core.tensor import reset_tape
from src.utils.config_loader import TrainConfig


@pytest.fixture(autouse=True)
def fresh_tape():
    """Cada teste começa com uma fita de gradientes vazia."""
    reset_tape()
    yield
    reset_tape()


@pytest.fixture
def temp_output_dir():
    """Cria diretório temporário para relatórios e arquivos gerados"""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield Path(temp_dir)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def param_store_factory():
    """Factory de ParameterStore a partir de um dicionário nome -> valor."""

    def _make(values):
        params = ParameterStore()
        for name, value in values.items():
            params.register(name, np.asarray(value, dtype=np.float64))
        return params

    return _make


@pytest.fixture
def toy_log():
    """Log pequeno com features de aresta (d_e = 2) e de nó (d_v = 3)."""
    src = [0, 1, 0, 2, 3, 1, 0, 2, 4, 3, 1, 4]
    dst = [1, 2, 2, 3, 4, 0, 3, 4, 0, 1, 3, 2]
    t = [0.0, 1.0, 1.0, 2.0, 3.0, 4.0, 5.0, 5.0, 6.0, 7.0, 8.0, 9.0]
    edge_feat = np.arange(24, dtype=np.float64).reshape(12, 2) / 10.0
    node_feat = np.linspace(-1.0, 1.0, 15).reshape(5, 3)
    return EventLog(src, dst, t, edge_feat=edge_feat, node_feat=node_feat, name="toy")


@pytest.fixture
def synthetic_log():
    """Log sintético de duas comunidades para testes do protocolo de treino."""
    return generate_synthetic_log(
        num_nodes=30, num_events=240, num_communities=2, seed=3, node_feat_dim=4
    )


@pytest.fixture
def tiny_config():
    """TrainConfig mínimo: poucas épocas e modelo estreito."""
    return TrainConfig(
        ctdg_epochs=2,
        conda_epochs=1,
        cycles=1,
        batch_size=32,
        lr=1e-3,
        dropout=0.1,
        num_neighbors=4,
        diff_len=1,
        num_steps=5,
        k=0.01,
        model_dim=16,
        time_dim=4,
        num_blocks=1,
        patience=5,
        seed=0,
    )


@pytest.fixture
def config_factory(tiny_config):
    """Factory para variações do TrainConfig mínimo"""

    def _make(**overrides):
        return replace(tiny_config, **overrides)

    return _make


@pytest.fixture
def write_csv(temp_output_dir):
    """Factory para criar arquivos CSV de teste"""

    def _write(name: str, content: str) -> Path:
        path = temp_output_dir / name
        path.write_text(content, encoding="utf-8")
        return path

    return _write


@pytest.fixture
def mock_logger():
    """Mock para logger"""
    with patch("src.core.report_manager.get_logger") as mock_get_logger:
        mock_logger_instance = Mock()
        mock_get_logger.return_value = mock_logger_instance
        yield mock_logger_instance
