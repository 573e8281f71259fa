"""
Módulo responsável pelos sweeps de sensibilidade (diff_len e k): uma execução por
(valor, semente), tabela agregada na ordem de entrada e linha de referência sem
augmentação.
"""

import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.core.report_manager import ReportManager
from src.core.temporal_graph import ChronoSplit, EventLog
from src.core.trainer import run_experiment
from src.utils.config_loader import TrainConfig
from src.utils.exceptions import ConfigurationError
from src.utils.logger import get_logger

SWEEP_PARAMS = ("diff_len", "k")
BASELINE_LABEL = "baseline"


@dataclass
class SweepJob:
    """Uma execução do sweep."""

    position: int
    label: str
    seed: int
    config: TrainConfig


@dataclass
class SweepResult:
    """Resultado de uma execução do sweep."""

    position: int
    label: str
    seed: int
    status: str
    test_ap: Optional[float] = None
    test_auc: Optional[float] = None
    processing_time_seconds: float = 0.0
    error_message: Optional[str] = None


def resolve_diff_len(value: Union[str, float, int], num_neighbors: int) -> int:
    """
    Converte "L/8", "1/8", 0.125 ou 2 em um diff_len inteiro (mínimo 1).

    Args:
        value: Valor absoluto ou fração de L
        num_neighbors: L

    Returns:
        floor(L·fração) ou o inteiro dado
    """
    text = str(value).strip().replace(" ", "")
    try:
        if text.upper().startswith("L/"):
            fraction = Fraction(1, int(text[2:]))
        elif "/" in text:
            fraction = Fraction(text)
        else:
            number = float(text)
            if number >= 1.0:
                if not number.is_integer():
                    raise ValueError(text)
                return int(number)
            fraction = Fraction(number).limit_denominator(1024)
    except (ValueError, ZeroDivisionError):
        raise ConfigurationError(f"Valor de diff_len inválido: {value}") from None
    if fraction <= 0:
        raise ConfigurationError(f"diff_len deve ser positivo: {value}")
    return max(1, math.floor(num_neighbors * fraction))


def _run_sweep_job(job: SweepJob, log: EventLog, split: ChronoSplit) -> SweepResult:
    start_time = time.time()
    try:
        report = run_experiment(job.config, log, split)
        return SweepResult(
            position=job.position,
            label=job.label,
            seed=job.seed,
            status="SUCESSO",
            test_ap=report.test_ap,
            test_auc=report.test_auc,
            processing_time_seconds=time.time() - start_time,
        )
    except Exception as e:
        return SweepResult(
            position=job.position,
            label=job.label,
            seed=job.seed,
            status="ERRO",
            processing_time_seconds=time.time() - start_time,
            error_message=str(e),
        )


class SweepProcessor:
    """Executor de sweeps sobre um parâmetro do TrainConfig."""

    def __init__(
        self,
        config: TrainConfig,
        log: EventLog,
        split: ChronoSplit,
        report_manager: Optional[ReportManager] = None,
        max_workers: Optional[int] = None,
    ):
        """
        Inicializa o processador de sweeps.

        Args:
            config: Configuração base (sementes seed .. seed + num_seeds - 1)
            log: Log compartilhado por todas as execuções
            split: Divisão compartilhada
            report_manager: Destino da tabela e do resumo
            max_workers: Processos paralelos (None ou 1 = sequencial)
        """
        self.config = config
        self.log = log
        self.split = split
        self.report_manager = report_manager
        self.max_workers = max_workers
        self.logger = get_logger(__name__)

    @property
    def seeds(self) -> List[int]:
        return [self.config.seed + offset for offset in range(self.config.num_seeds)]

    def config_for(self, param: str, value: str) -> TrainConfig:
        """TrainConfig de um valor do sweep (k = 0 equivale ao baseline)."""
        if param == "k":
            try:
                k = float(value)
            except ValueError:
                raise ConfigurationError(f"Valor de k inválido: {value}") from None
            if k == 0.0:
                return replace(self.config, augmenter="none")
            return replace(self.config, k=k, augmenter="conda")
        diff_len = resolve_diff_len(value, self.config.num_neighbors)
        if diff_len >= self.config.num_neighbors:
            raise ConfigurationError(
                f"diff_len {diff_len} (de {value}) deve ser menor que L={self.config.num_neighbors}"
            )
        return replace(self.config, diff_len=diff_len, augmenter="conda")

    def build_jobs(self, param: str, values: Sequence[str]) -> List[SweepJob]:
        if param not in SWEEP_PARAMS:
            raise ConfigurationError(f"Parâmetro de sweep desconhecido: {param}")
        if not values:
            raise ConfigurationError("Lista de valores do sweep vazia")

        # Pré-voo: todos os valores são validados antes de qualquer execução
        configs = [(str(value), self.config_for(param, str(value))) for value in values]
        configs.append((BASELINE_LABEL, replace(self.config, augmenter="none")))

        jobs = []
        for position, (label, config) in enumerate(configs):
            for seed in self.seeds:
                jobs.append(SweepJob(position, label, seed, replace(config, seed=seed)))
        return jobs

    def run(
        self,
        param: str,
        values: Sequence[str],
        progress_callback: Optional[Callable[[int, int], None]] = None,
    ) -> List[SweepResult]:
        """
        Executa todas as (valor, semente) do sweep.

        Args:
            param: "diff_len" ou "k"
            values: Valores na ordem desejada para a tabela
            progress_callback: Função de callback para progresso (atual, total)

        Returns:
            Lista de SweepResult ordenada por (posição do valor, semente)
        """
        jobs = self.build_jobs(param, values)
        total = len(jobs)
        self.logger.info(
            f"Sweep de {param}: {len(values)} valores x {len(self.seeds)} sementes "
            f"(+ baseline) = {total} execuções"
        )

        results: List[SweepResult] = []
        if not self.max_workers or self.max_workers == 1:
            for count, job in enumerate(jobs, start=1):
                results.append(self._log_result(_run_sweep_job(job, self.log, self.split), count, total))
                if progress_callback:
                    progress_callback(count, total)
        else:
            with ProcessPoolExecutor(max_workers=self.max_workers) as executor:
                future_to_job = {
                    executor.submit(_run_sweep_job, job, self.log, self.split): job for job in jobs
                }
                for count, future in enumerate(as_completed(future_to_job), start=1):
                    job = future_to_job[future]
                    try:
                        result = future.result()
                    except Exception as e:
                        result = SweepResult(
                            position=job.position,
                            label=job.label,
                            seed=job.seed,
                            status="ERRO",
                            error_message=str(e),
                        )
                    results.append(self._log_result(result, count, total))
                    if progress_callback:
                        progress_callback(count, total)

        return sorted(results, key=lambda r: (r.position, r.seed))

    def _log_result(self, result: SweepResult, count: int, total: int) -> SweepResult:
        if result.status == "ERRO":
            self.logger.error(
                f"[{count}/{total}] Falha em {result.label} (seed {result.seed}): {result.error_message}"
            )
        else:
            self.logger.info(
                f"[{count}/{total}] {result.label} seed={result.seed} "
                f"test_ap={result.test_ap:.4f} ({result.processing_time_seconds:.1f}s)"
            )
        return result

    def build_table(self, param: str, results: List[SweepResult]) -> pd.DataFrame:
        """
        Agrega média ± desvio de AP e AUC de teste por valor, na ordem de entrada,
        com a linha de baseline por último.

        Args:
            param: Parâmetro varrido
            results: Resultados de `run`

        Returns:
            DataFrame (param, value, n, test_ap_mean, test_ap_std, test_auc_mean, test_auc_std)
        """
        frame = pd.DataFrame([r.__dict__ for r in results])
        rows = []
        for (position, label), group in frame.groupby(["position", "label"], sort=True):
            done = group[group["status"] == "SUCESSO"]
            ap = done["test_ap"].to_numpy(dtype=np.float64)
            auc = done["test_auc"].to_numpy(dtype=np.float64)
            rows.append(
                {
                    "param": param,
                    "value": label,
                    "n": len(done),
                    "test_ap_mean": float(ap.mean()) if len(ap) else None,
                    "test_ap_std": float(ap.std()) if len(ap) else None,
                    "test_auc_mean": float(auc.mean()) if len(auc) else None,
                    "test_auc_std": float(auc.std()) if len(auc) else None,
                }
            )
        table = pd.DataFrame(rows)
        if self.report_manager is not None:
            self.report_manager.save_table(table)
        return table

    def get_sweep_summary(self, results: List[SweepResult]) -> Dict:
        """
        Gera resumo das execuções do sweep.

        Args:
            results: Lista de resultados

        Returns:
            Dicionário com resumo
        """
        if not results:
            return {"total_runs": 0}
        failed = [r for r in results if r.status == "ERRO"]
        total_time = sum(r.processing_time_seconds for r in results)
        summary = {
            "total_runs": len(results),
            "successful": len(results) - len(failed),
            "failed": len(failed),
            "total_processing_time_seconds": total_time,
            "average_processing_time_per_run": total_time / len(results),
        }
        self.logger.info(f"Resumo do sweep: {summary}")
        return summary
