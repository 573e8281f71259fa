"""
Exceções customizadas do projeto.

Cada classe carrega o código de saída usado pela CLI (0 sucesso, 1 uso/configuração,
2 dados, 3 falha numérica).
"""


class CondaTGLError(Exception):
    """Exceção base para erros do toolkit."""

    exit_code = 1


class ConfigurationError(CondaTGLError):
    """Erro de configuração."""

    exit_code = 1


class ScheduleError(ConfigurationError):
    """Parâmetros inválidos para o cronograma de ruído."""

    pass


class DataError(CondaTGLError):
    """Erro nos dados de entrada."""

    exit_code = 2


class DataFormatError(DataError):
    """Linha mal formatada em arquivo de eventos."""

    pass


class EmptyDatasetError(DataError):
    """Arquivo ou log de eventos vazio."""

    pass


class SplitError(DataError):
    """Erro na divisão cronológica."""

    pass


class CheckpointError(DataError):
    """Arquivo de checkpoint inválido ou truncado."""

    pass


class NumericFaultError(CondaTGLError):
    """Valor não finito (NaN/Inf) detectado."""

    exit_code = 3


class ShapeMismatchError(NumericFaultError):
    """Formas incompatíveis em uma operação de tensor."""

    def __init__(self, op_kind: str, shape_a: tuple, shape_b: tuple):
        self.op_kind = op_kind
        self.shape_a = tuple(shape_a)
        self.shape_b = tuple(shape_b)
        super().__init__(
            f"Formas incompatíveis em '{op_kind}': {self.shape_a} e {self.shape_b}"
        )


class TapeError(NumericFaultError):
    """Uso inválido da fita de gradientes."""

    pass


class OptimizerError(NumericFaultError):
    """Erro no passo do otimizador."""

    pass


class FreezeContractError(NumericFaultError):
    """Violação do contrato de congelamento entre fases."""

    pass
