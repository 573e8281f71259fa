"""
Interface de linha de comando: ingest, synth, train e sweep.
"""

import argparse
import hashlib
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

from src.core.report_manager import ReportManager, dumps_record
from src.core.sweep_processor import SWEEP_PARAMS, SweepProcessor
from src.core.synthetic import generate_synthetic_log, intra_community_fraction
from src.core.temporal_graph import (
    MIN_SPLIT_EVENTS,
    EventLog,
    chrono_split,
    dataset_stats,
    ingest_csv,
    load_event_log,
    save_event_log,
)
from src.core.trainer import aggregate_reports, run_experiment
from src.utils.config_loader import AppConfig, ConfigLoader
from src.utils.exceptions import CondaTGLError, ConfigurationError
from src.utils.logger import get_logger, setup_logging

AUGMENTER_CHOICES = ("none", "conda", "dropedge", "dropnode")


class CondaArgumentParser(argparse.ArgumentParser):
    """ArgumentParser cujos erros de uso viram ConfigurationError (código 1)."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise ConfigurationError(f"Uso inválido: {message}")


@dataclass
class RunManifest:
    """Rastreabilidade de uma execução."""

    command: str
    config_path: Optional[str]
    config: Dict[str, Any]
    dataset_path: str
    dataset_hash: str
    output_dir: str
    run_id: str = ""

    def __post_init__(self):
        if not self.run_id:
            payload = asdict(self)
            payload.pop("run_id")
            self.run_id = hashlib.sha1(dumps_record(payload).encode("utf-8")).hexdigest()[:12]


def build_parser() -> argparse.ArgumentParser:
    parser = CondaArgumentParser(
        prog="conda-tgl",
        description="Augmentação de grafos temporais com Conda",
    )
    parser.add_argument("--log-level", default=None, help="Sobrescreve o nível de log")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=CondaArgumentParser)

    ingest = commands.add_parser("ingest", help="Ingerir um dataset CSV")
    ingest.add_argument("--input", required=True, help="Arquivo CSV de entrada")
    ingest.add_argument("--format", choices=("jodie", "edgelist"), default="edgelist")
    ingest.add_argument("--out", required=True, help="Arquivo de eventos canônico (.cnde)")
    ingest.add_argument("--split", default="0.1", help="Preset de divisão para as estatísticas")
    ingest.add_argument("--node-feat-dim", type=int, default=0)

    synth = commands.add_parser("synth", help="Gerar um log sintético com comunidades")
    synth.add_argument("--nodes", type=int, required=True)
    synth.add_argument("--events", type=int, required=True)
    synth.add_argument("--communities", type=int, required=True)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--node-feat-dim", type=int, default=8)
    synth.add_argument("--out", required=True, help="Arquivo de eventos canônico (.cnde)")

    train = commands.add_parser("train", help="Executar uma experiência")
    train.add_argument("--config", required=True, help="Arquivo YAML de configuração")
    train.add_argument("--augmenter", choices=AUGMENTER_CHOICES, default=None)
    train.add_argument(
        "--set", dest="overrides", action="append", default=[],
        help="Sobrescrita secao.campo=valor (repetível)",
    )

    sweep = commands.add_parser("sweep", help="Sweep de sensibilidade em diff_len ou k")
    sweep.add_argument("--config", required=True, help="Arquivo YAML de configuração")
    sweep.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    sweep.add_argument("--values", nargs="+", required=True, help="Valores (espaço ou vírgula)")
    sweep.add_argument("--set", dest="overrides", action="append", default=[])
    return parser


def _load_config(path: str, overrides: List[str]) -> AppConfig:
    config = ConfigLoader.load_from_yaml(path)
    config = ConfigLoader.apply_overrides(config, overrides)
    ConfigLoader.validate_config(config)
    return config


def _setup_logging(config: Optional[AppConfig], level_override: Optional[str]) -> None:
    if config is None:
        setup_logging(log_level=level_override or "INFO")
        return
    setup_logging(
        log_level=level_override or config.logging.level,
        log_file=config.logging.file,
        json_format=config.logging.json,
    )


def _load_dataset(config: AppConfig) -> EventLog:
    return load_event_log(
        config.data.path, fmt=config.data.format, node_feat_dim=config.data.node_feat_dim
    )


def _split_values(values: List[str]) -> List[str]:
    return [item for value in values for item in value.split(",") if item.strip()]


def cmd_ingest(args: argparse.Namespace) -> Dict[str, Any]:
    """Ingere o CSV, grava o arquivo canônico e o registro de estatísticas."""
    logger = get_logger(__name__)
    log = ingest_csv(args.input, args.format, node_feat_dim=args.node_feat_dim)
    split = None
    if log.num_events >= MIN_SPLIT_EVENTS:
        split = chrono_split(log, args.split)
    else:
        logger.warning(
            f"Log com {log.num_events} eventos: estatísticas gravadas sem divisão cronológica"
        )
    out = save_event_log(log, args.out)

    stats = dataset_stats(log, split)
    stats["content_hash"] = log.content_hash()
    if split is None:
        stats["density_train"] = None
        stats["unseen_nodes"] = None
    else:
        stats["unseen_nodes"] = int(len(split.unseen_nodes))
    stats_path = Path(out).with_suffix(".stats.json")
    stats_path.write_text(dumps_record(stats) + "\n", encoding="utf-8")
    logger.info(f"Estatísticas gravadas em {stats_path}")
    print(dumps_record(stats))
    return stats


def cmd_synth(args: argparse.Namespace) -> EventLog:
    """Gera e grava um log sintético determinístico."""
    log = generate_synthetic_log(
        num_nodes=args.nodes,
        num_events=args.events,
        num_communities=args.communities,
        seed=args.seed,
        node_feat_dim=args.node_feat_dim,
    )
    save_event_log(log, args.out)
    print(
        dumps_record(
            {
                "dataset": log.name,
                "num_nodes": log.num_nodes,
                "num_events": log.num_events,
                "intra_fraction": intra_community_fraction(log, args.communities),
                "content_hash": log.content_hash(),
            }
        )
    )
    return log


def cmd_train(args: argparse.Namespace, config: AppConfig) -> Dict[str, Any]:
    """Executa a experiência (uma ou várias sementes) e grava relatórios."""
    logger = get_logger(__name__)
    log = _load_dataset(config)
    split = chrono_split(log, config.data.split)

    manifest = RunManifest(
        command="train",
        config_path=args.config,
        config=ConfigLoader.to_dict(config),
        dataset_path=config.data.path,
        dataset_hash=log.content_hash(),
        output_dir=config.processing.output_dir,
    )
    manager = ReportManager(config.processing.output_dir, manifest.run_id)
    manager.write_manifest(asdict(manifest))
    logger.info(f"Execução {manifest.run_id}: augmenter={config.train.augmenter}")

    train = config.train
    reports = []
    for offset in range(train.num_seeds):
        seed = train.seed + offset
        seed_manager = (
            manager
            if train.num_seeds == 1
            else ReportManager(str(manager.run_dir), f"seed_{seed}")
        )
        reports.append(
            run_experiment(
                replace(train, seed=seed),
                log,
                split,
                report_manager=seed_manager,
                report_timing=config.processing.report_timing,
                save_checkpoints=config.processing.save_checkpoints,
            )
        )

    summary = aggregate_reports(reports)
    summary["run_id"] = manifest.run_id
    manager.write_json("summary.json", summary)
    print(dumps_record(summary))
    return summary


def cmd_sweep(args: argparse.Namespace, config: AppConfig):
    """Executa o sweep e grava a tabela (valor, média ± desvio de AP e AUC)."""
    values = _split_values(args.values)
    if not values:
        raise ConfigurationError("Lista de valores do sweep vazia")
    log = _load_dataset(config)
    split = chrono_split(log, config.data.split)

    manifest = RunManifest(
        command=f"sweep:{args.param}={','.join(values)}",
        config_path=args.config,
        config=ConfigLoader.to_dict(config),
        dataset_path=config.data.path,
        dataset_hash=log.content_hash(),
        output_dir=config.processing.output_dir,
    )
    manager = ReportManager(config.processing.output_dir, manifest.run_id)
    manager.write_manifest(asdict(manifest))

    processor = SweepProcessor(
        config.train,
        log,
        split,
        report_manager=manager,
        max_workers=config.processing.max_workers,
    )
    results = processor.run(args.param, values)
    table = processor.build_table(args.param, results)
    manager.write_json("summary.json", processor.get_sweep_summary(results))
    print(table.to_string(index=False))
    return table


def main(argv: Optional[List[str]] = None) -> int:
    """
    Executa a CLI e converte exceções em códigos de saída.

    Returns:
        0 sucesso, 1 uso/configuração, 2 dados, 3 falha numérica
    """
    try:
        args = build_parser().parse_args(argv)
        if args.command in ("train", "sweep"):
            overrides = list(args.overrides)
            if getattr(args, "augmenter", None):
                overrides.append(f"train.augmenter={args.augmenter}")
            config = _load_config(args.config, overrides)
            _setup_logging(config, args.log_level)
            if args.command == "train":
                cmd_train(args, config)
            else:
                cmd_sweep(args, config)
        else:
            _setup_logging(None, args.log_level)
            if args.command == "ingest":
                cmd_ingest(args)
            else:
                cmd_synth(args)
        return 0
    except CondaTGLError as e:
        get_logger(__name__).error(f"{type(e).__name__}: {e}")
        print(f"Erro: {e}", file=sys.stderr)
        return e.exit_code
