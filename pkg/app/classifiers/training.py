# app/classifiers/training.py
"""
Entrenamiento por mini-lotes con Adam minimizando la BCE media.

El mismo bucle sirve al entrenamiento adversarial: `fit` recibe una función
que construye la pérdida de cada mini-lote.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from app.classifiers.architectures import Classifier
from app.core.losses import bce_loss
from app.core.tensor import Tape, Tensor
from app.data.dataset import Dataset
from app.errors import TrainingError, UndefinedMetricError
from app.metrics.auc import mean_auc
from app.models.schemas import TrainConfig

logger = logging.getLogger(__name__)

# (modelo, imágenes, etiquetas, época, índices del lote) -> pérdida escalar
BatchLoss = Callable[[Classifier, np.ndarray, np.ndarray, int, np.ndarray], Tensor]


@dataclass
class TrainHistory:
    """Historial por época."""

    loss: List[float] = field(default_factory=list)
    val_auc: List[Optional[float]] = field(default_factory=list)
    best_epoch: Optional[int] = None
    stopped_early: bool = False


@dataclass
class TrainResult:
    model: Classifier
    history: TrainHistory


class Adam:
    """Adam con corrección de sesgo sobre una lista de tensores."""

    def __init__(self, params: List[Tensor], lr: float, beta1: float, beta2: float, eps: float):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]
        self.t = 0

    def step(self) -> None:
        self.t += 1
        bias1 = 1.0 - self.beta1 ** self.t
        bias2 = 1.0 - self.beta2 ** self.t
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            update = self.lr * (self.m[i] / bias1) / (np.sqrt(self.v[i] / bias2) + self.eps)
            # Los datos del tensor se reemplazan, nunca se mutan in situ
            p.data = p.data - update


def clean_batch_loss(model: Classifier, images: np.ndarray, labels: np.ndarray, epoch: int, rows: np.ndarray) -> Tensor:
    return bce_loss(model.forward(Tensor(images)), labels)


def evaluate_auc(model: Classifier, dataset: Dataset, batch_size: int = 256) -> float:
    """AUC media del modelo sobre un dataset resuelto."""
    logits = predict_logits(model, dataset.images, batch_size)
    return mean_auc(logits, dataset.binary_labels(), dataset.label_names).mean


def predict_logits(model, images: np.ndarray, batch_size: int = 256) -> np.ndarray:
    chunks = [
        model.forward(Tensor(images[i:i + batch_size]), grad_params=False).data
        for i in range(0, images.shape[0], batch_size)
    ]
    return np.concatenate(chunks, axis=0)


def fit(
    model: Classifier,
    dataset: Dataset,
    config: TrainConfig,
    batch_loss: BatchLoss,
    validation: Optional[Dataset] = None,
    label: str = "train",
) -> TrainResult:
    """Bucle genérico de Adam con early stop sobre la AUC de validación."""
    if dataset.size == 0:
        raise TrainingError("dataset de entrenamiento vacío")
    labels = dataset.binary_labels()
    rng = np.random.default_rng(config.seed)
    optimizer = Adam(model.parameters(), config.learning_rate, config.beta1, config.beta2, config.adam_eps)
    history = TrainHistory()
    best_auc = -np.inf
    best_params: Optional[Dict[str, np.ndarray]] = None
    stale = 0

    for epoch in range(config.epochs):
        order = rng.permutation(dataset.size)
        epoch_loss = 0.0
        for start in range(0, dataset.size, config.batch_size):
            rows = order[start:start + config.batch_size]
            model.zero_grad()
            with Tape() as tape:
                loss = batch_loss(model, dataset.images[rows], labels[rows], epoch, dataset.indices[rows])
                value = loss.item()
                if not np.isfinite(value):
                    raise TrainingError(f"❌ pérdida no finita ({value}) en época {epoch}, lote {start // config.batch_size}")
                tape.backward(loss)
            optimizer.step()
            epoch_loss += value * rows.size
        history.loss.append(epoch_loss / dataset.size)

        val_auc = None
        if validation is not None:
            try:
                val_auc = evaluate_auc(model, validation)
            except UndefinedMetricError:
                logger.warning("⚠️ AUC de validación indefinida en época %d", epoch)
        history.val_auc.append(val_auc)
        logger.info("[%s] época %d: loss=%.5f val_auc=%s", label, epoch, history.loss[-1], val_auc)

        if val_auc is None or config.patience is None:
            continue
        if val_auc > best_auc:
            best_auc, stale = val_auc, 0
            history.best_epoch = epoch
            best_params = {name: p.data.copy() for name, p in model.params.items()}
        else:
            stale += 1
            if stale >= config.patience:
                history.stopped_early = True
                logger.info("✅ Early stop en época %d (mejor época %d)", epoch, history.best_epoch)
                break

    if best_params is not None:
        for name, p in model.params.items():
            p.data = best_params[name]
    model.zero_grad()
    return TrainResult(model=model, history=history)


def train(
    model: Classifier,
    dataset: Dataset,
    config: TrainConfig = TrainConfig(),
    validation: Optional[Dataset] = None,
) -> TrainResult:
    """Entrenamiento estándar sobre imágenes limpias."""
    logger.info("🔄 Entrenando %s (%d parámetros)", model.architecture, model.parameter_count)
    return fit(model, dataset, config, clean_batch_loss, validation, label=model.architecture)
