# app/defenses/adversarial_training.py
"""
Entrenamiento adversarial con PGD:

    L = λ · J(θ, x, y) + (1 − λ) · J(θ, x*, y)

x* se genera de nuevo en cada mini-lote contra los parámetros actuales. Las
primeras `pretrain_epochs` épocas usan solo imágenes limpias.
"""

from __future__ import annotations

import logging
from typing import Optional, Union

import numpy as np

from app.attacks.runner import run_attack
from app.classifiers.architectures import Classifier
from app.classifiers.training import TrainResult, clean_batch_loss, fit
from app.core import ops
from app.core.losses import bce_loss
from app.core.tensor import Tensor, as_tensor
from app.data.dataset import Dataset
from app.models.schemas import AttackSpec, DefenseSpec, TrainConfig

logger = logging.getLogger(__name__)


def combined_loss(j_clean: Union[Tensor, float], j_adv: Union[Tensor, float], lam: float) -> Tensor:
    """λ·J_clean + (1 − λ)·J_adv."""
    return ops.add(ops.mul(as_tensor(j_clean), np.float64(lam)), ops.mul(as_tensor(j_adv), np.float64(1.0 - lam)))


def epoch_attack_spec(inner: AttackSpec, epoch: int) -> AttackSpec:
    """Spec del ataque interno con semilla propia por época."""
    seed = int(np.random.SeedSequence([inner.seed, epoch]).generate_state(1)[0])
    return inner.model_copy(update={"seed": seed})


def adversarial_train(
    model: Classifier,
    dataset: Dataset,
    spec: DefenseSpec = DefenseSpec(),
    config: TrainConfig = TrainConfig(),
    validation: Optional[Dataset] = None,
    workers: Optional[int] = None,
) -> TrainResult:
    """
    Pre-entrenamiento limpio seguido de entrenamiento con pérdida combinada.

    Con λ = 1 el ataque interno no se ejecuta y el resultado es idéntico al de
    `train` con la misma configuración.
    """
    logger.info(
        "🔄 Entrenamiento adversarial de %s: λ=%s, ataque interno %s ε=%.5f T=%d, %d épocas limpias",
        model.architecture, spec.lam, spec.inner_attack.method.value,
        spec.inner_attack.epsilon, spec.inner_attack.iterations, spec.pretrain_epochs,
    )
    epoch_specs = {}

    def batch_loss(model: Classifier, images: np.ndarray, labels: np.ndarray, epoch: int, rows: np.ndarray) -> Tensor:
        if epoch < spec.pretrain_epochs or spec.lam == 1.0:
            return clean_batch_loss(model, images, labels, epoch, rows)
        if epoch not in epoch_specs:
            epoch_specs[epoch] = epoch_attack_spec(spec.inner_attack, epoch)
        adversarial = run_attack(model, images, labels, epoch_specs[epoch], indices=rows, workers=workers)
        j_clean = bce_loss(model.forward(Tensor(images)), labels)
        j_adv = bce_loss(model.forward(Tensor(adversarial)), labels)
        return combined_loss(j_clean, j_adv, spec.lam)

    return fit(model, dataset, config, batch_loss, validation, label=f"{model.architecture}-adv")
