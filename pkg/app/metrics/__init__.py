"""Métricas: AUC exacta por etiqueta, distancia L2 y serialización de reportes."""

from app.metrics.auc import MeanAUC, auc, mean_auc
from app.metrics.distance import l2_distance

__all__ = ['MeanAUC', 'auc', 'mean_auc', 'l2_distance']
