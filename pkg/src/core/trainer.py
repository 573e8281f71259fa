"""
Orquestração do treino alternado: fases CTDG (Conda congelado, em inferência) e
fases Conda (modelo CTDG congelado), early stopping por AP de validação,
checkpoints e avaliação final.
"""

import math
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from src.core import tensor as T
from src.core.augmenters import DropPolicy, apply_policy
from src.core.checkpoint import load_checkpoint, save_checkpoint
from src.core.conda import CondaAugmenter, build_schedule
from src.core.ctdg_model import CtdgModel, ctdg_loss
from src.core.metrics import link_prediction_metrics
from src.core.optim import AdamState, ParameterStore, adam_step
from src.core.report_manager import ReportManager
from src.core.temporal_graph import (
    ChronoSplit,
    EventLog,
    EventLogView,
    NegativeSamples,
    NeighborSampler,
    chrono_split,
    sample_negatives,
)
from src.core.tensor import Tensor, backward, no_grad, reset_tape
from src.utils.config_loader import TrainConfig
from src.utils.exceptions import FreezeContractError, NumericFaultError
from src.utils.logger import get_logger

CTDG_PREFIX = "ctdg/"
CONDA_PREFIX = "conda/"

# Fluxos de números aleatórios por finalidade, derivados da semente mestre
STREAMS = {
    "init": 0,
    "negatives": 1,
    "diffusion": 2,
    "dropout": 3,
    "augmentation": 4,
    "aug_dropout": 5,
    "eval_negatives": 6,
    "drop": 7,
}


def stream_seed(seed: int, purpose: str, *extra: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, STREAMS[purpose], *extra])


def stream_rng(seed: int, purpose: str, *extra: int) -> np.random.Generator:
    return np.random.default_rng(stream_seed(seed, purpose, *extra))


def stream_int(seed: int, purpose: str, *extra: int) -> int:
    return int(stream_seed(seed, purpose, *extra).generate_state(1)[0])


@dataclass
class EpochRecord:
    """Registro de uma época do relatório JSON-lines."""

    cycle: int
    phase: str
    epoch: int
    train_loss: Optional[float]
    val_ap: Optional[float] = None
    val_auc: Optional[float] = None
    wall_ms: Optional[float] = None

    def to_dict(self, include_timing: bool = False) -> Dict:
        record = asdict(self)
        if not include_timing:
            record.pop("wall_ms")
        return record


@dataclass
class PhaseReport:
    """Resumo de uma fase: perdas por época e checksums do grupo congelado."""

    phase: str
    cycle: int
    records: List[EpochRecord] = field(default_factory=list)
    frozen_prefix: Optional[str] = None
    frozen_checksum_start: Optional[str] = None
    frozen_checksum_end: Optional[str] = None
    stopped_early: bool = False

    @property
    def losses(self) -> List[Optional[float]]:
        return [r.train_loss for r in self.records]

    @property
    def epochs_run(self) -> int:
        return len(self.records)


@dataclass
class PhaseState:
    """Estado corrente do protocolo alternado."""

    phase: str = "ctdg"
    cycle: int = 0
    frozen_checksums: Dict[str, str] = field(default_factory=dict)
    best_val_ap: float = -math.inf
    epochs_since_best: int = 0
    best_epoch: Optional[int] = None
    ctdg_epoch: int = 0


@dataclass
class ExperimentReport:
    """Relatório final de uma execução."""

    phases: List[PhaseReport]
    test_ap: float
    test_auc: float
    test_loss: float
    best_val_ap: float
    best_epoch: Optional[int]
    config: Dict
    dataset: str
    seed: int
    wall_ms: float = 0.0
    conda_magnitudes: Optional[Dict[str, float]] = None

    @property
    def records(self) -> List[EpochRecord]:
        return [record for phase in self.phases for record in phase.records]

    @property
    def phase_sequence(self) -> List[str]:
        return [phase.phase for phase in self.phases]

    def final_record(self, include_timing: bool = False) -> Dict:
        record = {
            "test_ap": self.test_ap,
            "test_auc": self.test_auc,
            "test_loss": self.test_loss,
            "best_val_ap": self.best_val_ap,
            "best_epoch": self.best_epoch,
            "dataset": self.dataset,
            "seed": self.seed,
            "config": self.config,
        }
        if include_timing:
            record["wall_ms"] = self.wall_ms
        return record

    def to_records(self, include_timing: bool = False) -> List[Dict]:
        return [r.to_dict(include_timing) for r in self.records] + [
            self.final_record(include_timing)
        ]


class Trainer:
    """Executa o protocolo alternado CTDG / Conda sobre um log e uma divisão."""

    def __init__(
        self,
        config: TrainConfig,
        log: EventLog,
        split: ChronoSplit,
        report_manager: Optional[ReportManager] = None,
        report_timing: bool = False,
        save_checkpoints: bool = False,
    ):
        """
        Inicializa modelos, otimizadores e negativos fixos de avaliação.

        Args:
            config: Configuração de treino
            log: Log de eventos
            split: Divisão cronológica
            report_manager: Destino dos relatórios e checkpoints (opcional)
            report_timing: Inclui wall_ms nos registros
            save_checkpoints: Grava checkpoint a cada melhora de validação
        """
        self.logger = get_logger(__name__)
        self.config = config
        self.log = log
        self.split = split
        self.report_manager = report_manager
        self.report_timing = report_timing
        self.save_checkpoints = save_checkpoints and report_manager is not None
        seed = config.seed

        self.params = ParameterStore()
        self.model = CtdgModel(
            self.params,
            node_dim=log.d_v,
            edge_dim=log.d_e,
            model_dim=config.model_dim,
            time_dim=config.time_dim,
            num_neighbors=config.num_neighbors,
            num_blocks=config.num_blocks,
            dropout=config.dropout,
            seed=stream_int(seed, "init", 0),
        )
        self.model.dropout_rng = stream_rng(seed, "dropout")
        self.aug_dropout_rng = stream_rng(seed, "aug_dropout")
        self.aug_rng = stream_rng(seed, "augmentation")
        self.diffusion_rng = stream_rng(seed, "diffusion")

        self.conda: Optional[CondaAugmenter] = None
        if config.uses_conda:
            schedule = build_schedule(config.num_steps, config.k, config.alpha_min, config.alpha_max)
            self.conda = CondaAugmenter(
                self.params,
                model_dim=config.model_dim,
                num_neighbors=config.num_neighbors,
                diff_len=config.diff_len,
                schedule=schedule,
                latent_dim=config.latent_dim,
                vae_weight=config.vae_weight,
                variant=config.variant,
                orientation=config.orientation,
                target_step=config.target_step,
                seed=stream_int(seed, "init", 1),
            )

        self.drop_policy: Optional[DropPolicy] = None
        if config.augmenter in ("dropedge", "dropnode"):
            kind = "edge" if config.augmenter == "dropedge" else "node"
            self.drop_policy = DropPolicy(kind=kind, p=config.drop_p, seed=stream_int(seed, "drop"))

        self.ctdg_optimizer = AdamState(lr=config.lr)
        self.conda_optimizer = AdamState(lr=config.conda_lr or config.lr)
        self.state = PhaseState()
        self.best_state: Optional[Dict[str, np.ndarray]] = None
        self.conda_magnitudes: Optional[Dict[str, float]] = None

        self.val_negatives = sample_negatives(
            log, split.val, 1, seed=stream_int(seed, "eval_negatives", 0)
        )
        self.test_negatives = sample_negatives(
            log, split.test, 1, seed=stream_int(seed, "eval_negatives", 1)
        )

    # Utilidades

    @contextmanager
    def _dropout_stream(self, rng: np.random.Generator) -> Iterator[None]:
        previous = self.model.dropout_rng
        self.model.dropout_rng = rng
        try:
            yield
        finally:
            self.model.dropout_rng = previous

    def _batches(self, indices: np.ndarray) -> Iterator[np.ndarray]:
        for start in range(0, len(indices), self.config.batch_size):
            yield indices[start : start + self.config.batch_size]

    def _check_loss(self, loss: Tensor, phase: str, epoch: int, batch: int) -> None:
        if loss.has_fault():
            self.logger.error(
                f"Loss não finita na fase {phase}, época {epoch}, lote {batch}: {loss.data}"
            )
            reset_tape()
            raise NumericFaultError(
                f"Loss não finita (fase={phase}, época={epoch}, lote={batch})"
            )

    def _training_view(self, epoch: int) -> EventLogView:
        if self.drop_policy is None:
            return EventLogView.identity(self.log)
        return apply_policy(self.log, self.drop_policy, epoch, self.split.train)

    def _pair_logits(
        self,
        sampler: NeighborSampler,
        src: np.ndarray,
        dst: np.ndarray,
        neg: np.ndarray,
        times: np.ndarray,
        conda: Optional[CondaAugmenter] = None,
    ) -> Tuple[Tensor, Tensor, Optional[Tuple[Tensor, Tensor]], Dict]:
        sequences = {
            name: self.model.embed_nodes(sampler, self.log, nodes, times)
            for name, nodes in (("src", src), ("dst", dst), ("neg", neg))
        }
        pos_logits = self.model.link_logits(sequences["src"], sequences["dst"])
        neg_logits = self.model.link_logits(sequences["src"], sequences["neg"])
        augmented = None
        if conda is not None:
            inputs = self._augmentation_inputs(sampler, src, dst, neg, times)
            regenerated = {
                name: conda.augment(seq, self.aug_rng) for name, seq in inputs.items()
            }
            with self._dropout_stream(self.aug_dropout_rng):
                augmented = (
                    self.model.link_logits(regenerated["src"], regenerated["dst"]),
                    self.model.link_logits(regenerated["src"], regenerated["neg"]),
                )
        return pos_logits, neg_logits, augmented, sequences

    def _augmentation_inputs(
        self,
        sampler: NeighborSampler,
        src: np.ndarray,
        dst: np.ndarray,
        neg: np.ndarray,
        times: np.ndarray,
    ) -> Dict:
        """Sequências de entrada do Conda, codificadas sem dropout como no treino do Conda."""
        was_training = self.model.training
        self.model.eval()
        try:
            with no_grad():
                return {
                    name: self.model.embed_nodes(sampler, self.log, nodes, times)
                    for name, nodes in (("src", src), ("dst", dst), ("neg", neg))
                }
        finally:
            if was_training:
                self.model.train()

    def _batch_loss(
        self,
        sampler: NeighborSampler,
        batch: np.ndarray,
        negatives: np.ndarray,
        conda: Optional[CondaAugmenter],
    ) -> Tuple[Tensor, Dict]:
        src, dst, times = self.log.src[batch], self.log.dst[batch], self.log.t[batch]
        pos, neg, augmented, sequences = self._pair_logits(
            sampler, src, dst, negatives, times, conda
        )
        base = ctdg_loss(pos, neg)
        if augmented is None:
            return base, sequences
        aug_loss = ctdg_loss(*augmented)
        if self.config.aug_mode == "replace":
            return aug_loss, sequences
        return base + aug_loss * self.config.aug_weight, sequences

    # Fases

    def _check_conda_ready(self, conda: Optional[CondaAugmenter]) -> None:
        if conda is None:
            return
        if not conda.trained:
            raise FreezeContractError("Augmentação solicitada sem Conda treinado")
        if not conda.is_frozen:
            raise FreezeContractError("Fase CTDG exige Conda congelado (modo inferência)")

    def run_ctdg_phase(
        self, cycle: int, conda: Optional[CondaAugmenter] = None
    ) -> PhaseReport:
        """
        Treina o modelo CTDG por até ctdg_epochs épocas, com Conda congelado
        gerando sequências aumentadas quando fornecido.

        Args:
            cycle: Índice do ciclo
            conda: Conda treinado e congelado (None desliga a augmentação)

        Returns:
            PhaseReport da fase
        """
        self.state.phase, self.state.cycle = "ctdg", cycle
        self.params.unfreeze(CTDG_PREFIX)
        if self.conda is not None:
            self.conda.freeze()
        self._check_conda_ready(conda)
        use_aug = conda is not None and self.config.aug_mode != "off"
        report = PhaseReport(phase="ctdg", cycle=cycle)
        if self.conda is not None:
            report.frozen_prefix = CONDA_PREFIX
            report.frozen_checksum_start = self.params.checksum(CONDA_PREFIX)
            self.state.frozen_checksums = {CONDA_PREFIX: report.frozen_checksum_start}

        self.logger.info(
            f"Fase CTDG (ciclo {cycle}): {self.config.ctdg_epochs} épocas, "
            f"augmentação={'on' if use_aug else 'off'}"
        )
        self.state.epochs_since_best = 0
        for epoch in range(self.config.ctdg_epochs):
            started = time.perf_counter()
            global_epoch = self.state.ctdg_epoch
            self.state.ctdg_epoch += 1

            self.model.train()
            view = self._training_view(global_epoch)
            sampler = view.sampler
            indices = view.kept_indices(*self.split.train)
            neg_rng = stream_rng(self.config.seed, "negatives", global_epoch)
            negatives = neg_rng.integers(0, self.log.num_nodes, size=len(indices))

            losses = []
            for b, batch in enumerate(self._batches(indices)):
                loss, _ = self._batch_loss(
                    sampler, batch, negatives[b * self.config.batch_size :][: len(batch)],
                    conda if use_aug else None,
                )
                self._check_loss(loss, "ctdg", epoch, b)
                backward(loss)
                adam_step(
                    self.params,
                    self.ctdg_optimizer,
                    prefix=CTDG_PREFIX,
                    skip_missing=self.config.aug_mode == "replace" and use_aug,
                )
                losses.append(loss.item())

            metrics = self.evaluate(self.split.val, self.val_negatives)
            record = EpochRecord(
                cycle=cycle,
                phase="ctdg",
                epoch=epoch,
                train_loss=float(np.mean(losses)) if losses else None,
                val_ap=metrics["ap"],
                val_auc=metrics["auc"],
                wall_ms=(time.perf_counter() - started) * 1000.0,
            )
            report.records.append(record)
            self.logger.info(
                f"[ciclo {cycle} | ctdg {epoch}] loss={record.train_loss} "
                f"val_ap={record.val_ap:.4f} val_auc={record.val_auc:.4f}"
            )

            if self._track_best(metrics["ap"]):
                continue
            if self.state.epochs_since_best >= self.config.patience:
                report.stopped_early = True
                self.logger.info(
                    f"Early stopping após {self.state.epochs_since_best} épocas sem melhora"
                )
                break

        self._close_phase(report)
        return report

    def run_conda_phase(self, cycle: int) -> PhaseReport:
        """
        Treina (φ, θ, ψ) por conda_epochs épocas com o modelo CTDG congelado.

        Args:
            cycle: Índice do ciclo

        Returns:
            PhaseReport da fase
        """
        if self.conda is None:
            raise FreezeContractError("Fase Conda sem aumentador configurado")
        self.state.phase, self.state.cycle = "conda", cycle
        self.params.freeze(CTDG_PREFIX)
        self.conda.unfreeze()
        if not self.params.is_frozen(CTDG_PREFIX):
            raise FreezeContractError("Fase Conda exige o modelo CTDG congelado")

        report = PhaseReport(
            phase="conda",
            cycle=cycle,
            frozen_prefix=CTDG_PREFIX,
            frozen_checksum_start=self.params.checksum(CTDG_PREFIX),
        )
        self.state.frozen_checksums = {CTDG_PREFIX: report.frozen_checksum_start}
        self.logger.info(f"Fase Conda (ciclo {cycle}): {self.config.conda_epochs} épocas")

        self.model.eval()
        sampler = self.log.neighbor_index
        indices = np.arange(*self.split.train)
        for epoch in range(self.config.conda_epochs):
            started = time.perf_counter()
            losses = []
            for b, batch in enumerate(self._batches(indices)):
                s = self._frozen_sequences(sampler, batch)
                if epoch == 0 and b == 0 and cycle == 0:
                    magnitudes = self.conda.magnitude_report(s, np.random.default_rng(0))
                    self.conda_magnitudes = magnitudes
                    self.logger.info(f"Magnitude dos termos do Conda na inicialização: {magnitudes}")
                loss = self.conda.conda_loss(s, self.diffusion_rng)
                self._check_loss(loss, "conda", epoch, b)
                backward(loss)
                adam_step(self.params, self.conda_optimizer, prefix=CONDA_PREFIX)
                losses.append(loss.item())

            record = EpochRecord(
                cycle=cycle,
                phase="conda",
                epoch=epoch,
                train_loss=float(np.mean(losses)) if losses else None,
                wall_ms=(time.perf_counter() - started) * 1000.0,
            )
            report.records.append(record)
            self.logger.info(f"[ciclo {cycle} | conda {epoch}] loss={record.train_loss}")

        if self.config.conda_epochs > 0:
            self.conda.trained = True
        self.conda.freeze()
        self._close_phase(report)
        return report

    def run_joint_phase(self, cycle: int) -> PhaseReport:
        """
        Ablação ponta a ponta: CTDG e Conda treinados juntos em cada lote, sem
        congelamento.

        Args:
            cycle: Índice do ciclo

        Returns:
            PhaseReport da fase
        """
        self.state.phase, self.state.cycle = "joint", cycle
        self.params.unfreeze("")
        report = PhaseReport(phase="joint", cycle=cycle)
        self.conda.trained = True
        self.state.epochs_since_best = 0

        for epoch in range(self.config.ctdg_epochs):
            started = time.perf_counter()
            global_epoch = self.state.ctdg_epoch
            self.state.ctdg_epoch += 1
            self.model.train()
            sampler = self.log.neighbor_index
            indices = np.arange(*self.split.train)
            neg_rng = stream_rng(self.config.seed, "negatives", global_epoch)
            negatives = neg_rng.integers(0, self.log.num_nodes, size=len(indices))

            losses = []
            for b, batch in enumerate(self._batches(indices)):
                loss, sequences = self._batch_loss(
                    sampler, batch, negatives[b * self.config.batch_size :][: len(batch)], self.conda
                )
                s = _stack_sequences([sequences["src"].values, sequences["dst"].values])
                loss = loss + self.conda.conda_loss(s, self.diffusion_rng, enforce_freeze=False)
                self._check_loss(loss, "joint", epoch, b)
                backward(loss)
                adam_step(self.params, self.ctdg_optimizer, skip_missing=True)
                losses.append(loss.item())

            metrics = self.evaluate(self.split.val, self.val_negatives)
            record = EpochRecord(
                cycle=cycle,
                phase="joint",
                epoch=epoch,
                train_loss=float(np.mean(losses)) if losses else None,
                val_ap=metrics["ap"],
                val_auc=metrics["auc"],
                wall_ms=(time.perf_counter() - started) * 1000.0,
            )
            report.records.append(record)
            self.logger.info(
                f"[ciclo {cycle} | joint {epoch}] loss={record.train_loss} val_ap={record.val_ap:.4f}"
            )
            if not self._track_best(metrics["ap"]) and (
                self.state.epochs_since_best >= self.config.patience
            ):
                report.stopped_early = True
                break
        return report

    def _frozen_sequences(self, sampler: NeighborSampler, batch: np.ndarray) -> Tensor:
        """Sequências de src e dst do codificador congelado, sem dropout."""
        times = self.log.t[batch]
        with no_grad():
            src = self.model.embed_nodes(sampler, self.log, self.log.src[batch], times)
            dst = self.model.embed_nodes(sampler, self.log, self.log.dst[batch], times)
        return _stack_sequences([src.values, dst.values])

    def _close_phase(self, report: PhaseReport) -> None:
        if report.frozen_prefix is None:
            return
        report.frozen_checksum_end = self.params.checksum(report.frozen_prefix)
        if report.frozen_checksum_end != report.frozen_checksum_start:
            self.logger.error(f"Parâmetros congelados '{report.frozen_prefix}' alterados na fase")
            raise FreezeContractError(
                f"Checksum de '{report.frozen_prefix}' mudou durante a fase {report.phase}"
            )

    def _track_best(self, val_ap: float) -> bool:
        """Atualiza o melhor AP de validação; True quando houve melhora."""
        if val_ap > self.state.best_val_ap:
            self.state.best_val_ap = val_ap
            self.state.best_epoch = self.state.ctdg_epoch - 1
            self.state.epochs_since_best = 0
            self.best_state = self.params.state_dict()
            if self.save_checkpoints:
                self.save_checkpoint(self.report_manager.checkpoint_path())
            return True
        self.state.epochs_since_best += 1
        return False

    # Avaliação

    def evaluate(
        self, split_range: Tuple[int, int], negatives: NegativeSamples
    ) -> Dict[str, float]:
        """
        Avalia AP, AUC e loss na faixa, com histórico do log completo.

        Args:
            split_range: Faixa [início, fim) de positivos
            negatives: Negativos fixos alinhados à faixa

        Returns:
            {"ap", "auc", "loss"}
        """
        start, end = split_range
        if end <= start:
            return {"ap": float("nan"), "auc": float("nan"), "loss": float("nan")}
        was_training = self.model.training
        self.model.eval()
        sampler = self.log.neighbor_index
        pos_scores, neg_scores = [], []
        with no_grad():
            for batch in self._batches(np.arange(start, end)):
                offset = batch - start
                pos, neg, _, _ = self._pair_logits(
                    sampler,
                    self.log.src[batch],
                    self.log.dst[batch],
                    negatives.dst[offset],
                    self.log.t[batch],
                )
                pos_scores.append(pos.data)
                neg_scores.append(neg.data)
        if was_training:
            self.model.train()

        pos_scores = np.concatenate(pos_scores)
        neg_scores = np.concatenate(neg_scores)
        with no_grad():
            loss = ctdg_loss(Tensor(pos_scores), Tensor(neg_scores)).item()
        metrics = link_prediction_metrics(pos_scores, neg_scores)
        metrics["loss"] = loss
        return metrics

    # Checkpoints

    def save_checkpoint(self, path: Path) -> Path:
        """Grava parâmetros e hiperparâmetros do Conda (como tensores "meta/...")."""
        tensors = self.params.state_dict()
        if self.conda is not None:
            for name, value in self.conda.hyperparameters().items():
                tensors[f"meta/conda/{name}"] = np.asarray(float(value))
        return save_checkpoint(path, tensors)

    def load_checkpoint(self, path: Path) -> None:
        tensors = load_checkpoint(path)
        state = {name: value for name, value in tensors.items() if not name.startswith("meta/")}
        self.params.load_state_dict(state)
        self.logger.info(f"Checkpoint restaurado: {path}")

    # Protocolo completo

    def run(self) -> ExperimentReport:
        """
        Executa (ctdg, conda) x ciclos e a fase CTDG final, restaura o melhor
        estado de validação e avalia no teste.

        Returns:
            ExperimentReport
        """
        started = time.perf_counter()
        config = self.config
        phases: List[PhaseReport] = []

        if config.end_to_end and self.conda is not None:
            self.logger.warning("Treino ponta a ponta ativo: modo apenas de ablação")
            for cycle in range(config.cycles):
                phases.append(self.run_joint_phase(cycle))
        else:
            for cycle in range(config.cycles):
                active = self.conda if self.conda is not None and self.conda.trained else None
                phases.append(self.run_ctdg_phase(cycle, active))
                if self.conda is not None:
                    phases.append(self.run_conda_phase(cycle))
            if config.final_ctdg_phase:
                active = self.conda if self.conda is not None and self.conda.trained else None
                phases.append(self.run_ctdg_phase(config.cycles, active))

        if self.best_state is not None:
            self.params.load_state_dict(self.best_state)
        test = self.evaluate(self.split.test, self.test_negatives)
        wall_ms = (time.perf_counter() - started) * 1000.0

        report = ExperimentReport(
            phases=phases,
            test_ap=test["ap"],
            test_auc=test["auc"],
            test_loss=test["loss"],
            best_val_ap=self.state.best_val_ap,
            best_epoch=self.state.best_epoch,
            config=asdict(config),
            dataset=self.log.name,
            seed=config.seed,
            wall_ms=wall_ms,
            conda_magnitudes=self.conda_magnitudes,
        )
        self.logger.info(
            f"Execução concluída: test_ap={report.test_ap:.4f} test_auc={report.test_auc:.4f} "
            f"melhor val_ap={report.best_val_ap:.4f} ({wall_ms / 1000.0:.1f}s)"
        )
        if self.report_manager is not None:
            self.report_manager.write_records(report.to_records(self.report_timing))
        return report


def _stack_sequences(values: List[Tensor]) -> Tensor:
    """Empilha sequências B x L x D ao longo do lote (preserva o gradiente)."""
    shape = values[0].shape[1:]
    return T.concat([v.reshape(1, -1) for v in values]).reshape(-1, *shape)


def run_experiment(
    config: TrainConfig,
    log: EventLog,
    split: Optional[ChronoSplit] = None,
    ratios=(0.1, 0.1, 0.8),
    report_manager: Optional[ReportManager] = None,
    report_timing: bool = False,
    save_checkpoints: bool = False,
) -> ExperimentReport:
    """
    Executa uma experiência completa.

    Args:
        config: Configuração de treino
        log: Log de eventos
        split: Divisão cronológica (construída de `ratios` quando omitida)
        ratios: Razões ou preset da divisão
        report_manager: Destino dos relatórios
        report_timing: Inclui tempos no relatório
        save_checkpoints: Grava checkpoints do melhor estado

    Returns:
        ExperimentReport
    """
    split = split if split is not None else chrono_split(log, ratios)
    trainer = Trainer(
        config,
        log,
        split,
        report_manager=report_manager,
        report_timing=report_timing,
        save_checkpoints=save_checkpoints,
    )
    return trainer.run()


def aggregate_reports(reports: List[ExperimentReport]) -> Dict[str, float]:
    """Média e desvio padrão de AP/AUC de teste entre sementes."""
    ap = np.array([r.test_ap for r in reports])
    auc = np.array([r.test_auc for r in reports])
    return {
        "num_seeds": len(reports),
        "test_ap_mean": float(ap.mean()),
        "test_ap_std": float(ap.std()),
        "test_auc_mean": float(auc.mean()),
        "test_auc_std": float(auc.std()),
    }


def run_seeds(
    config: TrainConfig,
    log: EventLog,
    split: ChronoSplit,
) -> List[ExperimentReport]:
    """Uma execução por semente seed .. seed + num_seeds - 1."""
    return [
        run_experiment(replace(config, seed=config.seed + offset), log, split)
        for offset in range(config.num_seeds)
    ]
