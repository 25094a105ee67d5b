# app/metrics/auc.py
"""
AUC exacta en forma de Mann–Whitney.

AUC = P(score positivo > score negativo), empates a 0.5. Se calcula con la
suma de rangos promediados (O(N log N)), sin integrar una curva ROC.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from app.errors import LabelError, ShapeError, UndefinedMetricError

logger = logging.getLogger(__name__)


def auc(scores, labels) -> float:
    """AUC de un vector de scores contra etiquetas binarias."""
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if scores.shape != labels.shape:
        raise ShapeError("auc", scores.shape, labels.shape)
    invalid = ~np.isin(labels, (0, 1))
    if invalid.any():
        raise LabelError(f"etiquetas fuera de {{0, 1}} en AUC: {np.unique(labels[invalid]).tolist()}")
    positive = labels == 1
    n_pos = int(positive.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(f"AUC indefinida: {n_pos} positivos y {n_neg} negativos")
    ranks = rankdata(scores)  # rangos promedio: los empates cuentan 0.5
    u_statistic = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u_statistic / (n_pos * n_neg))


@dataclass
class MeanAUC:
    """AUC media y desglose por etiqueta (None = indefinida)."""

    mean: float
    per_label: List[Optional[float]]
    label_names: List[str]
    excluded: List[str]

    def as_dict(self) -> dict:
        return dict(zip(self.label_names, self.per_label))


def mean_auc(logits, labels, label_names: Optional[Sequence[str]] = None) -> MeanAUC:
    """
    AUC por etiqueta y media sobre las etiquetas definidas.

    Se ordena por logits: la sigmoide es estrictamente creciente, así que las
    AUC coinciden con las de sigmoid(logits) sin empates por saturación.
    """
    logits = np.asarray(getattr(logits, "data", logits), dtype=np.float64)
    labels = np.asarray(getattr(labels, "data", labels))
    if logits.ndim != 2 or logits.shape != labels.shape:
        raise ShapeError("mean_auc", logits.shape, labels.shape)
    names = list(label_names) if label_names is not None else [f"label_{i}" for i in range(logits.shape[1])]

    per_label: List[Optional[float]] = []
    excluded: List[str] = []
    for column, name in enumerate(names):
        try:
            per_label.append(auc(logits[:, column], labels[:, column]))
        except UndefinedMetricError:
            per_label.append(None)
            excluded.append(name)
    defined = [value for value in per_label if value is not None]
    if not defined:
        raise UndefinedMetricError("todas las etiquetas tienen una sola clase")
    if excluded:
        logger.info("⚠️ Etiquetas excluidas de la AUC media (una sola clase): %s", excluded)
    return MeanAUC(mean=float(np.mean(defined)), per_label=per_label, label_names=names, excluded=excluded)
