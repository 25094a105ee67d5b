"""Clasificadores multi-etiqueta pequeños, ensemble en logits y entrenamiento."""

from app.classifiers.architectures import ARCHITECTURES, Classifier, build_model, forward_logits
from app.classifiers.checkpoint import load_model, save_model
from app.classifiers.ensemble import EnsembleModel, ensemble_logits
from app.classifiers.training import TrainHistory, TrainResult, fit, predict_logits, train

__all__ = [
    'ARCHITECTURES', 'Classifier', 'build_model', 'forward_logits',
    'load_model', 'save_model',
    'EnsembleModel', 'ensemble_logits',
    'TrainHistory', 'TrainResult', 'fit', 'predict_logits', 'train',
]
