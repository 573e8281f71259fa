"""
Módulo responsável pela gravação dos artefatos de uma execução: manifesto,
relatório JSON-lines por época, estatísticas de dataset, tabelas de sweep e checkpoints.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from src.utils.exceptions import DataError
from src.utils.logger import get_logger

REPORT_FILENAME = "report.jsonl"
MANIFEST_FILENAME = "manifest.json"


def _to_builtin(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Tipo não serializável: {type(value).__name__}")


def dumps_record(record: Dict[str, Any]) -> str:
    """JSON canônico (chaves ordenadas) de um registro."""
    return json.dumps(record, sort_keys=True, default=_to_builtin, ensure_ascii=False)


class ReportManager:
    """Gerenciador do diretório de saída de uma execução."""

    def __init__(self, output_dir: str = "./runs", run_id: Optional[str] = None):
        """
        Inicializa o ReportManager.

        Args:
            output_dir: Diretório base das execuções.
            run_id: Subdiretório da execução (opcional).
        """
        self.base_dir = Path(output_dir)
        self.run_dir = self.base_dir / run_id if run_id else self.base_dir
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self.report_file = self.run_dir / REPORT_FILENAME
        self.logger = get_logger(__name__)
        self.logger.debug(f"ReportManager inicializado em {self.run_dir}")

    def reset_report(self) -> None:
        """Remove o relatório anterior para que a execução o reescreva do zero."""
        if self.report_file.exists():
            self.report_file.unlink()

    def append_record(self, record: Dict[str, Any]) -> None:
        with open(self.report_file, "a", encoding="utf-8") as f:
            f.write(dumps_record(record) + "\n")

    def write_records(self, records: List[Dict[str, Any]]) -> Path:
        """Grava o relatório completo (registros por época + registro final)."""
        self.reset_report()
        for record in records:
            self.append_record(record)
        self.logger.info(f"Relatório gravado: {self.report_file} ({len(records)} registros)")
        return self.report_file

    def write_json(self, filename: str, payload: Dict[str, Any]) -> Path:
        path = self.run_dir / filename
        with open(path, "w", encoding="utf-8") as f:
            f.write(json.dumps(payload, sort_keys=True, indent=2, default=_to_builtin, ensure_ascii=False))
            f.write("\n")
        self.logger.info(f"Arquivo gravado: {path}")
        return path

    def write_manifest(self, manifest: Dict[str, Any]) -> Path:
        return self.write_json(MANIFEST_FILENAME, manifest)

    def load_report(self, path: Optional[str] = None) -> pd.DataFrame:
        """
        Carrega um relatório JSON-lines em DataFrame.

        Args:
            path: Caminho do relatório (padrão: o desta execução)

        Returns:
            DataFrame com um registro por linha
        """
        report = Path(path) if path else self.report_file
        if not report.exists():
            raise DataError(f"Relatório não encontrado: {report}")
        return pd.read_json(report, lines=True)

    def save_table(self, table: pd.DataFrame, filename: str = "sweep.csv") -> Path:
        path = self.run_dir / filename
        table.to_csv(path, index=False)
        self.logger.info(f"Tabela gravada em {path} ({table.shape[0]} linhas).")
        return path

    def checkpoint_path(self, name: str = "best.cnda") -> Path:
        return self.run_dir / name
