"""
Armazenamento de parâmetros treináveis e otimizador Adam.
"""

import hashlib
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from src.core.tensor import Tensor
from src.utils.exceptions import NumericFaultError, OptimizerError
from src.utils.logger import get_logger


@dataclass
class Parameter:
    """Parâmetro nomeado com flag de congelamento."""

    name: str
    tensor: Tensor
    frozen: bool = False

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.tensor.shape


class ParameterStore:
    """Registro de parâmetros por nome estável ("ctdg/...", "conda/phi/...")."""

    def __init__(self):
        self._params: Dict[str, Parameter] = {}
        self.logger = get_logger(__name__)

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def register(self, name: str, value: np.ndarray, frozen: bool = False) -> Tensor:
        """
        Registra um novo parâmetro.

        Args:
            name: Nome único do parâmetro
            value: Valor inicial (copiado)
            frozen: Cria o parâmetro já congelado

        Returns:
            Tensor do parâmetro
        """
        if name in self._params:
            raise OptimizerError(f"Parâmetro já registrado: {name}")
        tensor = Tensor(np.array(value, dtype=np.float64), requires_grad=not frozen)
        tensor.name = name
        self._params[name] = Parameter(name=name, tensor=tensor, frozen=frozen)
        return tensor

    def get(self, name: str) -> Tensor:
        return self._params[name].tensor

    def parameters(self, prefix: str = "") -> Iterator[Parameter]:
        for name in sorted(self._params):
            if name.startswith(prefix):
                yield self._params[name]

    def names(self, prefix: str = "") -> List[str]:
        return [p.name for p in self.parameters(prefix)]

    def set_frozen(self, prefix: str, frozen: bool) -> None:
        """Congela ou descongela todos os parâmetros com o prefixo dado."""
        count = 0
        for param in self.parameters(prefix):
            param.frozen = frozen
            param.tensor.requires_grad = not frozen
            param.tensor.grad = None
            count += 1
        self.logger.debug(
            f"{'Congelados' if frozen else 'Liberados'} {count} parâmetros '{prefix}'"
        )

    def freeze(self, prefix: str) -> None:
        self.set_frozen(prefix, True)

    def unfreeze(self, prefix: str) -> None:
        self.set_frozen(prefix, False)

    def is_frozen(self, prefix: str) -> bool:
        """True quando todos os parâmetros do prefixo estão congelados."""
        params = list(self.parameters(prefix))
        return bool(params) and all(p.frozen for p in params)

    def zero_grad(self, prefix: str = "") -> None:
        for param in self.parameters(prefix):
            param.tensor.grad = None

    def checksum(self, prefix: str = "") -> str:
        """SHA-256 sobre nomes, formas e bytes dos valores do prefixo."""
        digest = hashlib.sha256()
        for param in self.parameters(prefix):
            digest.update(param.name.encode("utf-8"))
            digest.update(str(param.shape).encode("utf-8"))
            digest.update(np.ascontiguousarray(param.tensor.data).tobytes())
        return digest.hexdigest()

    def state_dict(self, prefix: str = "") -> Dict[str, np.ndarray]:
        return {p.name: p.tensor.data.copy() for p in self.parameters(prefix)}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """Restaura valores in-place; nomes e formas devem coincidir."""
        for name, value in state.items():
            if name not in self._params:
                raise OptimizerError(f"Parâmetro desconhecido no estado: {name}")
            param = self._params[name]
            value = np.asarray(value, dtype=np.float64)
            if value.shape != param.shape:
                raise OptimizerError(
                    f"Forma divergente para {name}: {value.shape} != {param.shape}"
                )
            param.tensor.data = value.copy()
            param.tensor.fault = False


def glorot_uniform(
    rng: np.random.Generator, fan_in: int, fan_out: int, shape: Tuple[int, ...]
) -> np.ndarray:
    """Inicialização uniforme em ±sqrt(6/(fan_in+fan_out))."""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


@dataclass
class AdamState:
    """Momentos por parâmetro, contador de passos e hiperparâmetros do Adam."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: ParameterStore,
    state: AdamState,
    prefix: str = "",
    skip_missing: bool = False,
) -> None:
    """
    Aplica um passo de Adam com correção de viés aos parâmetros não congelados.

    Args:
        params: Armazenamento de parâmetros
        state: Estado do otimizador (atualizado in-place)
        prefix: Restringe o passo aos parâmetros com este prefixo
        skip_missing: Ignora parâmetros sem gradiente em vez de falhar
    """
    trainable = [p for p in params.parameters(prefix) if not p.frozen]
    if skip_missing:
        trainable = [p for p in trainable if p.tensor.grad is not None]
    for param in trainable:
        if param.tensor.grad is None:
            raise OptimizerError(f"Gradiente ausente para parâmetro livre: {param.name}")
        if not np.all(np.isfinite(param.tensor.grad)):
            raise NumericFaultError(f"Gradiente não finito em {param.name}")

    state.step += 1
    bias1 = 1.0 - state.beta1**state.step
    bias2 = 1.0 - state.beta2**state.step

    for param in trainable:
        grad = param.tensor.grad
        m = state.first_moment.get(param.name)
        v = state.second_moment.get(param.name)
        if m is None:
            m = np.zeros_like(param.tensor.data)
            v = np.zeros_like(param.tensor.data)
        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        state.first_moment[param.name] = m
        state.second_moment[param.name] = v

        m_hat = m / bias1
        v_hat = v / bias2
        param.tensor.data = param.tensor.data - state.lr * m_hat / (
            np.sqrt(v_hat) + state.epsilon
        )
        param.tensor.grad = None
