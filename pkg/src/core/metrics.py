"""
Métricas de predição de links: Average Precision (AP) e ROC-AUC.
"""

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
from sklearn.metrics import average_precision_score, roc_auc_score

from src.utils.exceptions import DataError


@dataclass(frozen=True)
class ScoredPrediction:
    score: float
    label: int


Predictions = Union[Sequence[ScoredPrediction], Sequence[float], np.ndarray]


def _as_arrays(
    scores: Predictions, labels: Optional[Sequence[int]]
) -> Tuple[np.ndarray, np.ndarray]:
    if labels is None:
        preds = list(scores)
        scores = [p.score for p in preds]
        labels = [p.label for p in preds]
    y_score = np.asarray(scores, dtype=np.float64).ravel()
    y_true = np.asarray(labels, dtype=np.float64).ravel()
    if y_score.shape != y_true.shape:
        raise DataError(f"scores e labels com tamanhos distintos: {y_score.shape} != {y_true.shape}")
    if y_score.size == 0:
        raise DataError("Nenhuma predição para avaliar")
    return y_score, (y_true > 0.5).astype(np.float64)


def average_precision(scores: Predictions, labels: Optional[Sequence[int]] = None) -> float:
    """
    AP = Σ_k (R_k - R_{k-1})·P_k sobre limiares distintos (empates tratados em bloco).

    Args:
        scores: Scores (ou lista de ScoredPrediction quando labels é omitido)
        labels: Rótulos {0, 1}

    Returns:
        AP em [0, 1]
    """
    y_score, y_true = _as_arrays(scores, labels)
    if y_true.sum() == 0:
        raise DataError("AP indefinido sem exemplos positivos")
    return float(average_precision_score(y_true, y_score))


def roc_auc(scores: Predictions, labels: Optional[Sequence[int]] = None) -> float:
    """
    Estatística de Mann-Whitney P(s_pos > s_neg) + 0.5·P(empate).

    Args:
        scores: Scores (ou lista de ScoredPrediction quando labels é omitido)
        labels: Rótulos {0, 1}

    Returns:
        AUC em [0, 1]
    """
    y_score, y_true = _as_arrays(scores, labels)
    num_pos = y_true.sum()
    if num_pos == 0 or num_pos == y_true.size:
        raise DataError("AUC exige ao menos um positivo e um negativo")
    return float(roc_auc_score(y_true, y_score))


def link_prediction_metrics(pos_scores: np.ndarray, neg_scores: np.ndarray) -> Dict[str, float]:
    """AP e AUC de positivos contra negativos."""
    scores = np.concatenate([np.ravel(pos_scores), np.ravel(neg_scores)])
    labels = np.concatenate([np.ones(np.size(pos_scores)), np.zeros(np.size(neg_scores))])
    return {"ap": average_precision(scores, labels), "auc": roc_auc(scores, labels)}
