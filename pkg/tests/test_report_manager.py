"""
Testes para ReportManager.
"""

import json

import numpy as np
import pandas as pd
import pytest

from src.core.report_manager import ReportManager, dumps_record
from src.utils.exceptions import DataError


class TestReportManager:
    """Testes para a classe ReportManager."""

    @pytest.fixture
    def manager(self, temp_output_dir, mock_logger):
        """Fixture que cria um ReportManager numa execução "run-1"."""
        return ReportManager(output_dir=str(temp_output_dir), run_id="run-1")

    def test_init_creates_run_dir(self, temp_output_dir, mock_logger):
        """Testa se o diretório da execução é criado."""
        manager = ReportManager(output_dir=str(temp_output_dir), run_id="abc")

        assert manager.run_dir == temp_output_dir / "abc"
        assert manager.run_dir.is_dir()
        mock_logger.debug.assert_called_with(
            f"ReportManager inicializado em {temp_output_dir / 'abc'}"
        )

    def test_without_run_id_uses_base_dir(self, temp_output_dir, mock_logger):
        manager = ReportManager(output_dir=str(temp_output_dir))

        assert manager.run_dir == temp_output_dir

    def test_write_records_one_json_per_line(self, manager, mock_logger):
        """Testa a gravação do relatório JSON-lines com chaves ordenadas."""
        # Arranjo
        records = [
            {"phase": "ctdg", "epoch": 0, "train_loss": 0.69},
            {"test_ap": np.float64(0.8), "seed": np.int64(2)},
        ]

        # Ação
        path = manager.write_records(records)

        # Assert
        lines = path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 2
        assert lines[0] == '{"epoch": 0, "phase": "ctdg", "train_loss": 0.69}'
        assert json.loads(lines[1]) == {"seed": 2, "test_ap": 0.8}
        mock_logger.info.assert_any_call(f"Relatório gravado: {path} (2 registros)")

    def test_write_records_replaces_previous_report(self, manager):
        manager.write_records([{"a": 1}, {"a": 2}])

        manager.write_records([{"a": 3}])

        assert manager.report_file.read_text(encoding="utf-8").splitlines() == ['{"a": 3}']

    def test_load_report(self, manager):
        manager.write_records([{"epoch": 0, "val_ap": 0.5}, {"epoch": 1, "val_ap": 0.75}])

        frame = manager.load_report()

        assert list(frame["val_ap"]) == [0.5, 0.75]

    def test_load_missing_report_raises(self, manager):
        with pytest.raises(DataError):
            manager.load_report()

    def test_write_manifest(self, manager, mock_logger):
        path = manager.write_manifest({"seed": 1, "dataset": "toy", "output": manager.run_dir})

        payload = json.loads(path.read_text(encoding="utf-8"))
        assert path.name == "manifest.json"
        assert payload == {"dataset": "toy", "output": str(manager.run_dir), "seed": 1}
        mock_logger.info.assert_any_call(f"Arquivo gravado: {path}")

    def test_save_table(self, manager, mock_logger):
        table = pd.DataFrame({"param": ["k", "k"], "value": ["1e-4", "1e-2"]})

        path = manager.save_table(table)

        assert path.name == "sweep.csv"
        assert pd.read_csv(path, dtype=str).equals(table)
        mock_logger.info.assert_any_call(f"Tabela gravada em {path} (2 linhas).")

    def test_checkpoint_path(self, manager):
        assert manager.checkpoint_path() == manager.run_dir / "best.cnda"


class TestDumpsRecord:
    """Testes para a serialização canônica de registros."""

    def test_numpy_values(self):
        assert dumps_record({"b": np.array([1.0, 2.0]), "a": np.float32(0.5)}) == (
            '{"a": 0.5, "b": [1.0, 2.0]}'
        )

    def test_unsupported_type_raises(self):
        with pytest.raises(TypeError):
            dumps_record({"x": object()})
