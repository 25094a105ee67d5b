# app/attacks/methods.py
"""Los cinco métodos concretos: FGSM, PGD, MIFGSM, DAA y DII-FGSM."""

from __future__ import annotations

import logging
from typing import Dict, Sequence, Type

import numpy as np

from app.attacks.base import AttackState, SignStepAttack, clip_ball, loss_gradient
from app.attacks.transforms import draw_transform, stack_matrices
from app.classifiers.architectures import LogitModel
from app.core.ops import l1_normalize
from app.models.schemas import AttackMethod, AttackSpec

logger = logging.getLogger(__name__)

BANDWIDTH_FLOOR = 1e-6


class FGSMAttack(SignStepAttack):
    """Un solo paso de tamaño ε en la dirección del signo del gradiente."""

    method = AttackMethod.FGSM

    def direction(self, model, state, x, y):
        return loss_gradient(model, state.x_adv, y)


class PGDAttack(SignStepAttack):
    """
    Iteraciones de signo desde un inicio aleatorio U(-ε, ε).

    Con `random_start=False` es el FGSM iterativo básico.
    """

    method = AttackMethod.PGD

    def initial_point(self, x, rngs):
        if not self.spec.random_start:
            return x.copy()
        eps = self.spec.epsilon
        noise = np.stack([rng.uniform(-eps, eps, size=x.shape[1:]) for rng in rngs])
        return clip_ball(x + noise, x, eps)

    def direction(self, model, state, x, y):
        return loss_gradient(model, state.x_adv, y)


class MIFGSMAttack(SignStepAttack):
    """Momento sobre gradientes normalizados en L1: G_{t+1} = μ·G_t + g_t."""

    method = AttackMethod.MIFGSM

    def direction(self, model, state, x, y):
        grad = loss_gradient(model, state.x_adv, y)
        normalized, degenerate = l1_normalize(grad, per_example=True)
        state.degenerate_steps += int(np.count_nonzero(degenerate))
        if state.momentum is None:
            state.momentum = normalized.data
        else:
            state.momentum = self.spec.momentum * state.momentum + normalized.data
        return state.momentum


def median_bandwidth(flat: np.ndarray) -> float:
    """Mediana de las distancias entre pares distintos, con piso 1e-6."""
    count = flat.shape[0]
    if count < 2:
        return BANDWIDTH_FLOOR
    sq = np.sum((flat[:, None, :] - flat[None, :, :]) ** 2, axis=-1)
    upper = np.sqrt(sq[np.triu_indices(count, k=1)])
    return max(float(np.median(upper)), BANDWIDTH_FLOOR)


def daa_direction(grads: np.ndarray, iterates: np.ndarray, c: float, bandwidth) -> np.ndarray:
    """
    G_i = ∇J_i + (c/M)·Σ_j [K(x_i, x_j)·∇J_j + ∇_{x_j} K(x_i, x_j)] con kernel RBF.

    ∇_{x_j} K(x_i, x_j) = K(x_i, x_j)·(x_i − x_j)/h².
    """
    count = grads.shape[0]
    flat_x = iterates.reshape(count, -1)
    flat_g = grads.reshape(count, -1)
    h = median_bandwidth(flat_x) if bandwidth is None else float(bandwidth)
    sq = np.sum((flat_x[:, None, :] - flat_x[None, :, :]) ** 2, axis=-1)
    kernel = np.exp(-sq / (2.0 * h * h))
    kernel_term = kernel @ flat_g
    repulsion = (kernel.sum(axis=1)[:, None] * flat_x - kernel @ flat_x) / (h * h)
    coupled = flat_g + (c / count) * (kernel_term + repulsion)
    return coupled.reshape(grads.shape)


class DAAAttack(SignStepAttack):
    """Acoplamiento por kernel entre los ejemplos del mismo minibatch, sin inicio aleatorio."""

    method = AttackMethod.DAA

    def direction(self, model, state, x, y):
        grads = loss_gradient(model, state.x_adv, y)
        if self.spec.daa_c == 0:
            return grads
        return daa_direction(grads, state.x_adv, self.spec.daa_c, self.spec.bandwidth)


class DIIFGSMAttack(SignStepAttack):
    """Gradiente a través de una transformación aleatoria de entrada con probabilidad p."""

    method = AttackMethod.DII_FGSM

    def direction(self, model, state, x, y):
        side = x.shape[-1]
        transforms = [draw_transform(rng, side, self.spec) for rng in state.rngs]
        if all(t is None for t in transforms):
            return loss_gradient(model, state.x_adv, y)
        rows, cols = stack_matrices(transforms, side)
        return loss_gradient(model, state.x_adv, y, rows, cols)


ATTACKS: Dict[AttackMethod, Type[SignStepAttack]] = {
    AttackMethod.FGSM: FGSMAttack,
    AttackMethod.PGD: PGDAttack,
    AttackMethod.MIFGSM: MIFGSMAttack,
    AttackMethod.DAA: DAAAttack,
    AttackMethod.DII_FGSM: DIIFGSMAttack,
}


def get_attack(spec: AttackSpec) -> SignStepAttack:
    """Instancia el ataque que corresponde al método del spec."""
    return ATTACKS[AttackMethod(spec.method)](spec)
