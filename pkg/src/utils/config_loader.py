"""
Módulo para carregamento de configurações.
"""

import dataclasses
import os
import re
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml

from src.utils.exceptions import ConfigurationError


@dataclass
class DataConfig:
    """Configuração do dataset."""

    path: str
    format: str = "edgelist"
    # Preset ("0.1", "0.3") ou lista [treino, validação, teste]
    split: Union[str, List[float]] = "0.1"
    node_feat_dim: int = 0


@dataclass
class TrainConfig:
    """Configuração do protocolo de treino alternado."""

    ctdg_epochs: int = 10
    conda_epochs: int = 10
    cycles: int = 3
    final_ctdg_phase: bool = True
    batch_size: int = 200
    lr: float = 1e-3
    conda_lr: Optional[float] = None
    dropout: float = 0.1
    num_neighbors: int = 16
    diff_len: int = 2
    num_steps: int = 50
    k: float = 1e-4
    alpha_min: float = 0.1
    alpha_max: float = 0.9
    vae_weight: float = 1.0
    aug_mode: str = "supplement"
    aug_weight: float = 0.5
    seed: int = 0
    num_seeds: int = 1
    patience: int = 5
    model_dim: int = 64
    time_dim: int = 32
    num_blocks: int = 2
    latent_dim: Optional[int] = None
    variant: str = "full"
    orientation: str = "diff_prefix"
    target_step: Optional[int] = None
    end_to_end: bool = False
    augmenter: str = "conda"
    drop_p: float = 0.3

    @property
    def uses_conda(self) -> bool:
        return self.augmenter == "conda" and self.aug_mode != "off"


@dataclass
class ProcessingConfig:
    """Configuração para processamento."""

    output_dir: str = "runs"
    max_workers: Optional[int] = None
    report_timing: bool = False
    save_checkpoints: bool = True


@dataclass
class LoggingConfig:
    """Configuração de logging."""

    level: str = "INFO"
    file: Optional[str] = None
    json: bool = False


@dataclass
class AppConfig:
    """Configuração principal da aplicação."""

    data: DataConfig
    train: TrainConfig = field(default_factory=TrainConfig)
    processing: ProcessingConfig = field(default_factory=ProcessingConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)


_SECTIONS = {
    "data": DataConfig,
    "train": TrainConfig,
    "processing": ProcessingConfig,
    "logging": LoggingConfig,
}
_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}
_ENV_PATTERN = re.compile(r"\$\{([^}:]+)(?::-([^}]*))?\}")


def _coerce(value: Any, field_type: Any, name: str) -> Any:
    """Converte um valor (texto de YAML, env ou CLI) para o tipo do campo."""
    origin = typing.get_origin(field_type)
    if origin is Union:
        options = [t for t in typing.get_args(field_type) if t is not type(None)]
        if value is None or (isinstance(value, str) and value.lower() in ("null", "none", "")):
            if len(options) < len(typing.get_args(field_type)):
                return None
        if len(options) == 1:
            return _coerce(value, options[0], name)
        if isinstance(value, str):
            parsed = yaml.safe_load(value)
            value = parsed if isinstance(parsed, list) else value
        if isinstance(value, (list, tuple)):
            try:
                return [float(v) for v in value]
            except (TypeError, ValueError):
                raise ConfigurationError(f"Valor inválido para '{name}': {value!r}") from None
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return str(value)
        return value

    try:
        if field_type is bool:
            if isinstance(value, bool):
                return value
            text = str(value).strip().lower()
            if text in _TRUE:
                return True
            if text in _FALSE:
                return False
            raise ValueError(value)
        if field_type is int:
            number = float(value)
            if not number.is_integer():
                raise ValueError(value)
            return int(number)
        if field_type is float:
            return float(value)
        if field_type is str:
            return str(value)
    except (TypeError, ValueError):
        raise ConfigurationError(
            f"Valor inválido para '{name}': {value!r} (esperado {field_type.__name__})"
        ) from None
    return value


def _build(cls, data: Optional[Dict[str, Any]], section: str):
    data = dict(data or {})
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigurationError(f"Chaves desconhecidas em '{section}': {sorted(unknown)}")
    hints = typing.get_type_hints(cls)
    values = {key: _coerce(value, hints[key], f"{section}.{key}") for key, value in data.items()}
    try:
        return cls(**values)
    except TypeError as e:
        raise ConfigurationError(f"Seção '{section}' incompleta: {e}") from None


class ConfigLoader:
    """Carregador de configurações."""

    @staticmethod
    def load_from_yaml(config_path: str) -> AppConfig:
        """
        Carrega configuração de arquivo YAML.

        Args:
            config_path: Caminho do arquivo de configuração

        Returns:
            AppConfig com configurações carregadas
        """
        config_file = Path(config_path)
        if not config_file.exists():
            raise ConfigurationError(f"Arquivo de configuração não encontrado: {config_path}")

        try:
            with open(config_file, "r", encoding="utf-8") as f:
                config_data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Erro ao carregar configuração: {str(e)}") from None

        if not isinstance(config_data, dict):
            raise ConfigurationError(f"Configuração vazia ou inválida: {config_path}")

        # Expandir variáveis de ambiente
        config_data = ConfigLoader._expand_env_variables(config_data)
        return ConfigLoader.load_from_dict(config_data)

    @staticmethod
    def load_from_dict(config_data: Dict[str, Any]) -> AppConfig:
        """Constrói o AppConfig a partir de um dicionário já expandido."""
        unknown = set(config_data) - set(_SECTIONS)
        if unknown:
            raise ConfigurationError(f"Seções desconhecidas: {sorted(unknown)}")
        if "data" not in config_data:
            raise ConfigurationError("Seção 'data' é obrigatória")
        sections = {
            name: _build(cls, config_data.get(name), name) for name, cls in _SECTIONS.items()
        }
        return AppConfig(**sections)

    @staticmethod
    def apply_overrides(config: AppConfig, overrides: List[str]) -> AppConfig:
        """
        Aplica sobrescritas "secao.campo=valor" (flags da CLI prevalecem sobre o arquivo).

        Args:
            config: Configuração base
            overrides: Lista de atribuições

        Returns:
            Nova AppConfig com os valores sobrescritos
        """
        for item in overrides:
            if "=" not in item or "." not in item.split("=", 1)[0]:
                raise ConfigurationError(f"Sobrescrita inválida (use secao.campo=valor): {item}")
            key, raw = item.split("=", 1)
            section, name = key.strip().split(".", 1)
            if section not in _SECTIONS:
                raise ConfigurationError(f"Seção desconhecida na sobrescrita: {section}")
            current = getattr(config, section)
            hints = typing.get_type_hints(type(current))
            if name not in hints:
                raise ConfigurationError(f"Campo desconhecido na sobrescrita: {key}")
            value = _coerce(raw.strip(), hints[name], key)
            config = dataclasses.replace(
                config, **{section: dataclasses.replace(current, **{name: value})}
            )
        return config

    @staticmethod
    def to_dict(config: AppConfig) -> Dict[str, Any]:
        return dataclasses.asdict(config)

    @staticmethod
    def _expand_env_variables(config_data: Dict[str, Any]) -> Dict[str, Any]:
        """
        Expande variáveis de ambiente nas configurações.
        Suporta os formatos:
        - ${VAR_NAME}
        - ${VAR_NAME:-padrão} (padrão quando a variável está ausente ou vazia)
        - $VAR_NAME
        - "caminho/${VAR}/subdir"
        Variáveis ausentes sem padrão ficam como estão.
        """

        def substitute(match):
            name, default = match.group(1), match.group(2)
            value = os.getenv(name)
            if default is not None and not value:
                return default
            return match.group(0) if value is None else value

        def expand_value(value):
            if isinstance(value, str):
                if value.startswith("$") and not value.startswith("${"):
                    return os.getenv(value[1:], value)
                return _ENV_PATTERN.sub(substitute, value)
            elif isinstance(value, dict):
                return {k: expand_value(v) for k, v in value.items()}
            elif isinstance(value, list):
                return [expand_value(item) for item in value]
            return value

        return expand_value(config_data)

    @staticmethod
    def validate_config(config: AppConfig) -> None:
        """
        Valida configurações carregadas (pré-voo, antes de qualquer cálculo).

        Args:
            config: Configuração a ser validada
        """
        from src.utils.validators import ConfigValidator

        ConfigValidator.validate(config)
