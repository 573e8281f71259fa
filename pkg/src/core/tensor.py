"""
Núcleo numérico: tensores densos com diferenciação automática em modo reverso.

Toda a matemática de treino roda em float64; float32 só aparece na serialização
(ver `src.core.checkpoint`). Cada operação executada com alguma entrada que exige
gradiente é registrada na fita (`Tape`) da thread corrente; `backward` percorre a
fita em ordem reversa exata de gravação e acumula gradientes de forma aditiva.
"""

import threading
from contextlib import contextmanager
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.utils.exceptions import ShapeMismatchError, TapeError
from src.utils.logger import get_logger

logger = get_logger(__name__)

LOG_CLAMP = 1e-12
LAYER_NORM_EPS = 1e-5
_GELU_C = np.sqrt(2.0 / np.pi)

ArrayLike = Union[np.ndarray, float, int, Sequence]
BackwardFn = Callable[[np.ndarray], List[Optional[np.ndarray]]]


class OpKind(str, Enum):
    """Tipos de operação suportados por `forward_op`."""

    MATMUL = "matmul"
    ADD = "add"
    SUB = "sub"
    MUL = "elementwise-mul"
    SCALAR_MUL = "scalar-mul"
    CONCAT = "concat-last-axis"
    SLICE = "slice"
    RESHAPE = "reshape"
    MEAN = "mean"
    SUM = "sum"
    RELU = "relu"
    GELU = "gelu"
    SIGMOID = "sigmoid"
    TANH = "tanh"
    EXP = "exp"
    LOG = "log"
    COS = "cos"
    SQUARE = "square"
    LAYER_NORM = "layer-norm"
    DROPOUT = "dropout"
    MSE = "mse"
    BCE_WITH_LOGITS = "bce-with-logits"


_state = threading.local()


def _grad_enabled() -> bool:
    return getattr(_state, "grad_enabled", True)


@contextmanager
def no_grad():
    """Desativa a gravação na fita dentro do bloco (modo inferência)."""
    previous = _grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


class Tensor:
    """Array denso float64 com gradiente opcional."""

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        name: Optional[str] = None,
    ):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self.is_leaf = True
        self.fault = not bool(np.all(np.isfinite(self.data)))
        self._tape: Optional["Tape"] = None

    def __repr__(self) -> str:
        label = f" '{self.name}'" if self.name else ""
        return (
            f"<Tensor{label} shape={self.shape}, requires_grad={self.requires_grad}>"
        )

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def has_fault(self) -> bool:
        """Indica NaN/Inf nos dados ou no gradiente."""
        if self.fault or not np.all(np.isfinite(self.data)):
            return True
        return self.grad is not None and not bool(np.all(np.isfinite(self.grad)))

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    # Operadores
    def __add__(self, other) -> "Tensor":
        return add(self, _as_tensor(other))

    def __radd__(self, other) -> "Tensor":
        return add(_as_tensor(other), self)

    def __sub__(self, other) -> "Tensor":
        return sub(self, _as_tensor(other))

    def __rsub__(self, other) -> "Tensor":
        return sub(_as_tensor(other), self)

    def __mul__(self, other) -> "Tensor":
        if isinstance(other, (int, float)):
            return scalar_mul(self, float(other))
        return mul(self, _as_tensor(other))

    def __rmul__(self, other) -> "Tensor":
        return self.__mul__(other)

    def __neg__(self) -> "Tensor":
        return scalar_mul(self, -1.0)

    def __matmul__(self, other) -> "Tensor":
        return matmul(self, _as_tensor(other))

    def __getitem__(self, index) -> "Tensor":
        return slice_(self, index)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def sum(self, axis=None) -> "Tensor":
        return sum_(self, axis=axis)

    def mean(self, axis=None) -> "Tensor":
        return mean(self, axis=axis)


def _as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


@dataclass
class TapeRecord:
    """Operação gravada: nó de saída, nós de entrada e regra reversa."""

    op_kind: str
    output: Tensor
    inputs: Tuple[Tensor, ...]
    backward: BackwardFn


class Tape:
    """Fita de operações em ordem topológica de gravação."""

    def __init__(self):
        self.records: List[TapeRecord] = []
        self.consumed = False

    def __len__(self) -> int:
        return len(self.records)

    def record(self, record: TapeRecord) -> None:
        if self.consumed:
            raise TapeError("Gravação em fita já consumida")
        self.records.append(record)

    def backward(self, loss: Tensor) -> None:
        """
        Propaga d(loss)/d(folha) para todas as folhas que exigem gradiente.

        Args:
            loss: Tensor escalar gravado nesta fita
        """
        if self.consumed:
            raise TapeError("backward repetido sobre fita já consumida")
        if loss.data.size != 1:
            raise TapeError(f"loss deve ser escalar, recebido shape {loss.shape}")
        if not self.records:
            raise TapeError("Fita vazia: nenhuma operação gravada")

        grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        for record in reversed(self.records):
            grad_out = grads.pop(id(record.output), None)
            if grad_out is None:
                continue
            input_grads = record.backward(grad_out)
            for tensor, grad in zip(record.inputs, input_grads):
                if grad is None or not tensor.requires_grad:
                    continue
                grad = _unbroadcast(grad, tensor.shape)
                if tensor.is_leaf:
                    tensor.grad = grad if tensor.grad is None else tensor.grad + grad
                else:
                    key = id(tensor)
                    grads[key] = grad if key not in grads else grads[key] + grad

        self.consumed = True
        self.records.clear()


def get_tape() -> Tape:
    """Retorna a fita ativa da thread corrente (cria uma nova se consumida)."""
    tape = getattr(_state, "tape", None)
    if tape is None or tape.consumed:
        tape = Tape()
        _state.tape = tape
    return tape


def reset_tape() -> Tape:
    """Descarta registros pendentes e inicia uma fita nova."""
    _state.tape = Tape()
    return _state.tape


def backward(loss: Tensor) -> None:
    """
    Executa o passo reverso a partir de um loss escalar.

    Args:
        loss: Tensor escalar resultante de operações gravadas
    """
    if loss.data.size != 1:
        raise TapeError(f"loss deve ser escalar, recebido shape {loss.shape}")
    if loss._tape is None:
        raise TapeError("loss não está associado a nenhuma fita (nada a derivar)")
    loss._tape.backward(loss)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(kind: str, a: np.ndarray, b: np.ndarray) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeMismatchError(kind, a.shape, b.shape) from None


def _normalize_axes(axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


def _expand_reduced(grad: np.ndarray, shape: Tuple[int, ...], axes) -> np.ndarray:
    grad = np.asarray(grad)
    for axis in sorted(axes):
        if grad.ndim < len(shape):
            grad = np.expand_dims(grad, axis)
    return np.broadcast_to(grad, shape)


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


# Regras diretas e reversas. Cada função recebe os arrays de entrada e devolve
# (saída, regra_reversa).


def _matmul(arrays, **_):
    a, b = arrays
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeMismatchError(OpKind.MATMUL.value, a.shape, b.shape)
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise ShapeMismatchError(OpKind.MATMUL.value, a.shape, b.shape) from None
    out = np.matmul(a, b)

    def rule(g):
        return [np.matmul(g, np.swapaxes(b, -1, -2)), np.matmul(np.swapaxes(a, -1, -2), g)]

    return out, rule


def _add(arrays, **_):
    a, b = arrays
    _check_broadcast(OpKind.ADD.value, a, b)
    return a + b, lambda g: [g, g]


def _sub(arrays, **_):
    a, b = arrays
    _check_broadcast(OpKind.SUB.value, a, b)
    return a - b, lambda g: [g, -g]


def _mul(arrays, **_):
    a, b = arrays
    _check_broadcast(OpKind.MUL.value, a, b)
    return a * b, lambda g: [g * b, g * a]


def _scalar_mul(arrays, scalar: float = 1.0, **_):
    (x,) = arrays
    return x * scalar, lambda g: [g * scalar]


def _concat(arrays, **_):
    first = arrays[0]
    for other in arrays[1:]:
        if other.shape[:-1] != first.shape[:-1]:
            raise ShapeMismatchError(OpKind.CONCAT.value, first.shape, other.shape)
    out = np.concatenate(arrays, axis=-1)
    splits = np.cumsum([a.shape[-1] for a in arrays])[:-1]

    def rule(g):
        return list(np.split(g, splits, axis=-1))

    return out, rule


def _slice(arrays, index=None, **_):
    (x,) = arrays
    out = x[index]

    def rule(g):
        full = np.zeros_like(x)
        np.add.at(full, index, g)
        return [full]

    return out, rule


def _reshape(arrays, shape=None, **_):
    (x,) = arrays
    target = tuple(shape)
    if -1 not in target and int(np.prod(target)) != x.size:
        raise ShapeMismatchError(OpKind.RESHAPE.value, x.shape, target)
    try:
        out = x.reshape(target)
    except ValueError:
        raise ShapeMismatchError(OpKind.RESHAPE.value, x.shape, target) from None
    return out, lambda g: [g.reshape(x.shape)]


def _mean(arrays, axis=None, **_):
    (x,) = arrays
    axes = _normalize_axes(axis, x.ndim)
    count = int(np.prod([x.shape[a] for a in axes])) if axes else 1
    out = x.mean(axis=axes) if axes else x.copy()

    def rule(g):
        return [_expand_reduced(g, x.shape, axes) / count]

    return out, rule


def _sum(arrays, axis=None, **_):
    (x,) = arrays
    axes = _normalize_axes(axis, x.ndim)
    out = x.sum(axis=axes) if axes else x.copy()

    def rule(g):
        return [np.array(_expand_reduced(g, x.shape, axes))]

    return out, rule


def _relu(arrays, **_):
    (x,) = arrays
    return np.maximum(x, 0.0), lambda g: [g * (x > 0.0)]


def _gelu(arrays, **_):
    (x,) = arrays
    inner = _GELU_C * (x + 0.044715 * x**3)
    t = np.tanh(inner)
    out = 0.5 * x * (1.0 + t)

    def rule(g):
        d_inner = _GELU_C * (1.0 + 3.0 * 0.044715 * x**2)
        return [g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t**2) * d_inner)]

    return out, rule


def _sigmoid(arrays, **_):
    (x,) = arrays
    s = _stable_sigmoid(x)
    return s, lambda g: [g * s * (1.0 - s)]


def _tanh(arrays, **_):
    (x,) = arrays
    t = np.tanh(x)
    return t, lambda g: [g * (1.0 - t**2)]


def _exp(arrays, **_):
    (x,) = arrays
    out = np.exp(x)
    return out, lambda g: [g * out]


def _log(arrays, **_):
    (x,) = arrays
    clamped = np.maximum(x, LOG_CLAMP)
    return np.log(clamped), lambda g: [g * (x >= LOG_CLAMP) / clamped]


def _cos(arrays, **_):
    (x,) = arrays
    return np.cos(x), lambda g: [-g * np.sin(x)]


def _square(arrays, **_):
    (x,) = arrays
    return x * x, lambda g: [2.0 * x * g]


def _layer_norm(arrays, **_):
    x, gamma, beta = arrays
    if gamma.shape != x.shape[-1:] or beta.shape != x.shape[-1:]:
        raise ShapeMismatchError(OpKind.LAYER_NORM.value, x.shape, gamma.shape)
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + LAYER_NORM_EPS)
    x_hat = (x - mu) * inv_std
    out = x_hat * gamma + beta
    width = x.shape[-1]

    def rule(g):
        d_hat = g * gamma
        dx = (
            inv_std
            / width
            * (
                width * d_hat
                - d_hat.sum(axis=-1, keepdims=True)
                - x_hat * (d_hat * x_hat).sum(axis=-1, keepdims=True)
            )
        )
        reduce_axes = tuple(range(x.ndim - 1))
        return [dx, (g * x_hat).sum(axis=reduce_axes), g.sum(axis=reduce_axes)]

    return out, rule


def _dropout(arrays, p: float = 0.0, rng=None, training: bool = True, **_):
    (x,) = arrays
    if not training or p <= 0.0:
        return x.copy(), lambda g: [g]
    if p >= 1.0:
        mask = np.zeros_like(x)
    else:
        generator = rng if rng is not None else np.random.default_rng()
        mask = (generator.random(x.shape) >= p) / (1.0 - p)
    return x * mask, lambda g: [g * mask]


def _mse(arrays, **_):
    a, b = arrays
    if a.shape != b.shape:
        raise ShapeMismatchError(OpKind.MSE.value, a.shape, b.shape)
    diff = a - b
    count = max(diff.size, 1)

    def rule(g):
        grad = 2.0 * diff / count * g
        return [grad, -grad]

    return np.asarray(np.mean(diff * diff)), rule


def _bce_with_logits(arrays, **_):
    z, y = arrays
    if z.shape != y.shape:
        raise ShapeMismatchError(OpKind.BCE_WITH_LOGITS.value, z.shape, y.shape)
    count = max(z.size, 1)
    # Forma estável: max(z, 0) - z*y + log(1 + exp(-|z|))
    losses = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))

    def rule(g):
        return [(_stable_sigmoid(z) - y) / count * g, -z / count * g]

    return np.asarray(losses.mean()), rule


_OPS: Dict[OpKind, Callable] = {
    OpKind.MATMUL: _matmul,
    OpKind.ADD: _add,
    OpKind.SUB: _sub,
    OpKind.MUL: _mul,
    OpKind.SCALAR_MUL: _scalar_mul,
    OpKind.CONCAT: _concat,
    OpKind.SLICE: _slice,
    OpKind.RESHAPE: _reshape,
    OpKind.MEAN: _mean,
    OpKind.SUM: _sum,
    OpKind.RELU: _relu,
    OpKind.GELU: _gelu,
    OpKind.SIGMOID: _sigmoid,
    OpKind.TANH: _tanh,
    OpKind.EXP: _exp,
    OpKind.LOG: _log,
    OpKind.COS: _cos,
    OpKind.SQUARE: _square,
    OpKind.LAYER_NORM: _layer_norm,
    OpKind.DROPOUT: _dropout,
    OpKind.MSE: _mse,
    OpKind.BCE_WITH_LOGITS: _bce_with_logits,
}


def forward_op(kind: Union[OpKind, str], inputs: Sequence[Tensor], **attrs) -> Tensor:
    """
    Executa uma operação e a grava na fita quando alguma entrada exige gradiente.

    Args:
        kind: Tipo da operação (OpKind ou seu valor textual)
        inputs: Tensores de entrada
        **attrs: Atributos da operação (axis, index, shape, scalar, p, rng, training)

    Returns:
        Tensor de saída; `fault` indica saída não finita
    """
    kind = OpKind(kind)
    inputs = tuple(inputs)
    out_data, rule = _OPS[kind]([t.data for t in inputs], **attrs)
    out = Tensor(out_data)
    if out.fault:
        logger.debug(f"Saída não finita em '{kind.value}' (shape {out.shape})")

    if _grad_enabled() and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out.is_leaf = False
        tape = get_tape()
        tape.record(TapeRecord(kind.value, out, inputs, rule))
        out._tape = tape
    return out


# Atalhos funcionais


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return forward_op(OpKind.MATMUL, [a, b])


def add(a: Tensor, b: Tensor) -> Tensor:
    return forward_op(OpKind.ADD, [a, b])


def sub(a: Tensor, b: Tensor) -> Tensor:
    return forward_op(OpKind.SUB, [a, b])


def mul(a: Tensor, b: Tensor) -> Tensor:
    return forward_op(OpKind.MUL, [a, b])


def scalar_mul(x: Tensor, scalar: float) -> Tensor:
    return forward_op(OpKind.SCALAR_MUL, [x], scalar=float(scalar))


def concat(tensors: Sequence[Tensor]) -> Tensor:
    return forward_op(OpKind.CONCAT, tensors)


def slice_(x: Tensor, index) -> Tensor:
    return forward_op(OpKind.SLICE, [x], index=index)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    return forward_op(OpKind.RESHAPE, [x], shape=tuple(shape))


def mean(x: Tensor, axis=None) -> Tensor:
    return forward_op(OpKind.MEAN, [x], axis=axis)


def sum_(x: Tensor, axis=None) -> Tensor:
    return forward_op(OpKind.SUM, [x], axis=axis)


def relu(x: Tensor) -> Tensor:
    return forward_op(OpKind.RELU, [x])


def gelu(x: Tensor) -> Tensor:
    return forward_op(OpKind.GELU, [x])


def sigmoid(x: Tensor) -> Tensor:
    return forward_op(OpKind.SIGMOID, [x])


def tanh(x: Tensor) -> Tensor:
    return forward_op(OpKind.TANH, [x])


def exp(x: Tensor) -> Tensor:
    return forward_op(OpKind.EXP, [x])


def log(x: Tensor) -> Tensor:
    return forward_op(OpKind.LOG, [x])


def cos(x: Tensor) -> Tensor:
    return forward_op(OpKind.COS, [x])


def square(x: Tensor) -> Tensor:
    return forward_op(OpKind.SQUARE, [x])


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor) -> Tensor:
    return forward_op(OpKind.LAYER_NORM, [x, gamma, beta])


def dropout(
    x: Tensor,
    p: float,
    rng: Optional[np.random.Generator] = None,
    training: bool = True,
) -> Tensor:
    if not training or p <= 0.0:
        return x
    return forward_op(OpKind.DROPOUT, [x], p=p, rng=rng, training=training)


def mse(a: Tensor, b: Tensor) -> Tensor:
    return forward_op(OpKind.MSE, [a, b])


def bce_with_logits(logits: Tensor, labels: Tensor) -> Tensor:
    return forward_op(OpKind.BCE_WITH_LOGITS, [logits, _as_tensor(labels)])
