"""
Formatos binários do projeto.

Checkpoint ("CNDA"):
    magic b"CNDA" | versão u16 | nº de tensores u32 | por tensor:
    tamanho do nome u16 + nome UTF-8 | rank u8 | dims u64 LE | dados float32 LE

Arquivo canônico de eventos ("CNDE"):
    magic b"CNDE" | versão u16 | nº de nós u64 | nº de eventos u64 | d_e u16 | d_v u16 |
    src u64[E] | dst u64[E] | t float64[E] | edge_feat float32[E*d_e] | node_feat float32[V*d_v]
"""

import struct
from pathlib import Path
from typing import BinaryIO, Dict, Union

import numpy as np

from src.utils.exceptions import CheckpointError
from src.utils.logger import get_logger

CHECKPOINT_MAGIC = b"CNDA"
CHECKPOINT_VERSION = 1
EVENT_FILE_MAGIC = b"CNDE"
EVENT_FILE_VERSION = 1

logger = get_logger(__name__)

PathLike = Union[str, Path]


def _read_exact(handle: BinaryIO, size: int, what: str) -> bytes:
    chunk = handle.read(size)
    if len(chunk) != size:
        raise CheckpointError(f"Arquivo truncado ao ler {what}")
    return chunk


def save_checkpoint(path: PathLike, tensors: Dict[str, np.ndarray]) -> Path:
    """
    Grava tensores nomeados no formato CNDA (valores em float32).

    Args:
        path: Caminho de destino
        tensors: Mapa nome -> array

    Returns:
        Caminho gravado
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<HI", CHECKPOINT_VERSION, len(tensors)))
        for name in sorted(tensors):
            array = np.asarray(tensors[name])
            encoded = name.encode("utf-8")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<B", array.ndim))
            if array.ndim:
                f.write(struct.pack(f"<{array.ndim}Q", *array.shape))
            f.write(np.ascontiguousarray(array, dtype="<f4").tobytes())
    logger.info(f"Checkpoint gravado: {path} ({len(tensors)} tensores)")
    return path


def load_checkpoint(path: PathLike) -> Dict[str, np.ndarray]:
    """
    Lê um checkpoint CNDA.

    Args:
        path: Caminho do arquivo

    Returns:
        Mapa nome -> array float64 com as formas originais
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Checkpoint não encontrado: {path}")

    tensors: Dict[str, np.ndarray] = {}
    with open(path, "rb") as f:
        if _read_exact(f, 4, "magic") != CHECKPOINT_MAGIC:
            raise CheckpointError(f"Magic inválido em {path}")
        version, count = struct.unpack("<HI", _read_exact(f, 6, "cabeçalho"))
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(f"Versão de checkpoint não suportada: {version}")
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read_exact(f, 2, "nome"))
            name = _read_exact(f, name_len, "nome").decode("utf-8")
            (rank,) = struct.unpack("<B", _read_exact(f, 1, "rank"))
            shape = struct.unpack(f"<{rank}Q", _read_exact(f, 8 * rank, "dims"))
            size = int(np.prod(shape)) if rank else 1
            raw = _read_exact(f, 4 * size, f"dados de {name}")
            tensors[name] = (
                np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(shape)
            )
    logger.debug(f"Checkpoint lido: {path} ({len(tensors)} tensores)")
    return tensors


def write_event_arrays(
    path: PathLike,
    num_nodes: int,
    src: np.ndarray,
    dst: np.ndarray,
    t: np.ndarray,
    edge_feat: np.ndarray,
    node_feat: np.ndarray,
) -> Path:
    """Grava os arrays de um log de eventos no formato CNDE."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    num_events = len(src)
    d_e = edge_feat.shape[1] if edge_feat.ndim == 2 else 0
    d_v = node_feat.shape[1] if node_feat.ndim == 2 else 0
    with open(path, "wb") as f:
        f.write(EVENT_FILE_MAGIC)
        f.write(struct.pack("<HQQHH", EVENT_FILE_VERSION, num_nodes, num_events, d_e, d_v))
        f.write(np.ascontiguousarray(src, dtype="<u8").tobytes())
        f.write(np.ascontiguousarray(dst, dtype="<u8").tobytes())
        f.write(np.ascontiguousarray(t, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(edge_feat, dtype="<f4").tobytes())
        f.write(np.ascontiguousarray(node_feat, dtype="<f4").tobytes())
    return path


def read_event_arrays(path: PathLike) -> Dict[str, np.ndarray]:
    """Lê um arquivo CNDE e devolve seus arrays."""
    path = Path(path)
    with open(path, "rb") as f:
        if _read_exact(f, 4, "magic") != EVENT_FILE_MAGIC:
            raise CheckpointError(f"Arquivo de eventos inválido: {path}")
        version, num_nodes, num_events, d_e, d_v = struct.unpack(
            "<HQQHH", _read_exact(f, 22, "cabeçalho")
        )
        if version != EVENT_FILE_VERSION:
            raise CheckpointError(f"Versão de arquivo de eventos não suportada: {version}")

        def take(dtype: str, count: int, what: str) -> np.ndarray:
            width = np.dtype(dtype).itemsize
            return np.frombuffer(_read_exact(f, width * count, what), dtype=dtype)

        src = take("<u8", num_events, "src").astype(np.int64)
        dst = take("<u8", num_events, "dst").astype(np.int64)
        t = take("<f8", num_events, "t").astype(np.float64)
        edge_feat = take("<f4", num_events * d_e, "edge_feat").astype(np.float64)
        node_feat = take("<f4", num_nodes * d_v, "node_feat").astype(np.float64)

    return {
        "num_nodes": np.int64(num_nodes),
        "src": src,
        "dst": dst,
        "t": t,
        "edge_feat": edge_feat.reshape(num_events, d_e),
        "node_feat": node_feat.reshape(num_nodes, d_v),
    }
