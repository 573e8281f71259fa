"""
Módulo de validadores.
"""

from pathlib import Path
from typing import List

from src.utils.config_loader import AppConfig, DataConfig, TrainConfig
from src.utils.exceptions import ConfigurationError

AUG_MODES = ("off", "supplement", "replace")
AUGMENTERS = ("none", "conda", "dropedge", "dropnode")
VARIANTS = ("full", "no_vae", "no_diffusion")
ORIENTATIONS = ("diff_prefix", "diff_suffix")
DATA_FORMATS = ("jodie", "edgelist")
SPLIT_PRESETS = ("0.1", "0.3")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class FileValidator:
    """Validador de arquivos."""

    @staticmethod
    def validate_dataset_filename(filename: str) -> bool:
        """
        Valida o nome de um arquivo de dataset (.csv ou arquivo canônico .cnde).

        Args:
            filename: O nome do arquivo a ser validado.

        Returns:
            True se a extensão for aceita, False caso contrário.
        """
        file_name_only = Path(filename).name
        if not file_name_only:
            return False
        return file_name_only.lower().endswith((".csv", ".cnde"))


class ConfigValidator:
    """Validador das regras da configuração de experimento."""

    @staticmethod
    def collect_errors(config: AppConfig) -> List[str]:
        """
        Lista todas as violações encontradas.

        Args:
            config: Configuração carregada

        Returns:
            Mensagens de erro (vazia quando válida)
        """
        errors = ConfigValidator._data_errors(config.data)
        errors += ConfigValidator._train_errors(config.train)

        processing = config.processing
        if processing.max_workers is not None and processing.max_workers <= 0:
            errors.append("max_workers deve ser maior que zero")
        if config.logging.level.upper() not in LOG_LEVELS:
            errors.append(f"Nível de log inválido: {config.logging.level}")
        return errors

    @staticmethod
    def validate(config: AppConfig) -> None:
        errors = ConfigValidator.collect_errors(config)
        if errors:
            raise ConfigurationError("Configuração inválida: " + "; ".join(errors))

    @staticmethod
    def _data_errors(data: DataConfig) -> List[str]:
        errors = []
        if not data.path:
            errors.append("data.path é obrigatório")
        elif not FileValidator.validate_dataset_filename(data.path):
            errors.append(f"Extensão de dataset não suportada: {data.path}")
        if data.format not in DATA_FORMATS:
            errors.append(f"data.format deve ser um de {DATA_FORMATS}")
        if data.node_feat_dim < 0:
            errors.append("data.node_feat_dim não pode ser negativo")
        if isinstance(data.split, str):
            if data.split not in SPLIT_PRESETS:
                errors.append(f"Preset de divisão desconhecido: {data.split}")
        elif len(data.split) != 3 or any(r <= 0 for r in data.split):
            errors.append("data.split deve ter três razões positivas")
        elif abs(sum(data.split) - 1.0) > 1e-9:
            errors.append("data.split deve somar 1")
        return errors

    @staticmethod
    def _train_errors(train: TrainConfig) -> List[str]:
        errors = []
        for name in ("ctdg_epochs", "cycles", "batch_size", "patience", "num_seeds",
                     "model_dim", "time_dim", "num_blocks"):
            if getattr(train, name) < 1:
                errors.append(f"{name} deve ser positivo")
        if train.conda_epochs < 0:
            errors.append("conda_epochs não pode ser negativo")
        if train.lr <= 0 or (train.conda_lr is not None and train.conda_lr <= 0):
            errors.append("Taxas de aprendizado devem ser positivas")
        if not 0.0 <= train.dropout < 1.0:
            errors.append("dropout deve estar em [0, 1)")
        if train.num_neighbors < 2:
            errors.append("num_neighbors deve ser >= 2")
        if train.augmenter not in AUGMENTERS:
            errors.append(f"augmenter deve ser um de {AUGMENTERS}")
        if train.aug_mode not in AUG_MODES:
            errors.append(f"aug_mode deve ser um de {AUG_MODES}")
        if train.aug_weight < 0:
            errors.append("aug_weight não pode ser negativo")
        if not 0.0 <= train.drop_p <= 1.0:
            errors.append("drop_p deve estar em [0, 1]")
        if train.variant not in VARIANTS:
            errors.append(f"variant deve ser um de {VARIANTS}")
        if train.orientation not in ORIENTATIONS:
            errors.append(f"orientation deve ser um de {ORIENTATIONS}")

        if train.augmenter == "conda":
            if not 1 <= train.diff_len < train.num_neighbors:
                errors.append(
                    f"diff_len deve estar em [1, {train.num_neighbors}), recebido {train.diff_len}"
                )
            if train.num_steps < 2:
                errors.append("num_steps deve ser >= 2")
            if not 0.0 < train.alpha_min < train.alpha_max < 1.0:
                errors.append("Exige 0 < alpha_min < alpha_max < 1")
            if not 0.0 < train.k <= 1.0 or train.k * train.alpha_max >= 1.0:
                errors.append(f"k inválido: {train.k}")
            if train.vae_weight < 0:
                errors.append("vae_weight não pode ser negativo")
            if train.target_step is not None and not 1 <= train.target_step <= train.num_steps:
                errors.append(f"target_step deve estar em [1, {train.num_steps}]")
            if train.latent_dim is not None and not 1 <= train.latent_dim < train.model_dim:
                errors.append("latent_dim deve estar em [1, model_dim)")
        return errors
