# app/attacks/base.py
"""
Marco común de los ataques L∞ por paso de signo:

    x*_{t+1} = Clip_x^ε { x*_t + α · sign(G_{t+1}(θ, x*_t, y)) }

Cada método concreto define el punto inicial y la dirección G. La pérdida
de ataque es la BCE media por etiqueta sumada sobre el minibatch, de modo
que el gradiente de cada ejemplo es ∇J_i y no depende del tamaño del lote.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from app.classifiers.architectures import LogitModel
from app.core import ops
from app.core.losses import bce_loss
from app.core.tensor import Tape, Tensor
from app.errors import AttackError, GradientError, ShapeError
from app.models.schemas import AttackMethod, AttackSpec

logger = logging.getLogger(__name__)

# callback(t, iterado) con t = 0 para el punto inicial
IterateCallback = Callable[[int, np.ndarray], None]


def clip_ball(candidate, origin, epsilon: float) -> np.ndarray:
    """Proyección a la bola L∞ de radio ε alrededor de origin, intersectada con [0, 1]."""
    candidate = np.asarray(getattr(candidate, "data", candidate), dtype=np.float64)
    origin = np.asarray(getattr(origin, "data", origin), dtype=np.float64)
    if candidate.shape != origin.shape:
        raise ShapeError("clip_ball", candidate.shape, origin.shape)
    projected = np.minimum(np.maximum(candidate, origin - epsilon), origin + epsilon)
    return np.clip(projected, 0.0, 1.0)


def example_rng(seed: int, index: int) -> np.random.Generator:
    """Stream aleatorio propio de un ejemplo, derivado de (semilla, índice)."""
    return np.random.default_rng([int(seed), int(index)])


def loss_gradient(
    model: LogitModel,
    x: np.ndarray,
    y: np.ndarray,
    rows: Optional[np.ndarray] = None,
    cols: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    ∇x J(θ, T(x), y) por ejemplo, con T opcional dado por matrices de remuestreo.

    Los parámetros entran desacoplados: el ataque nunca toca θ ni sus gradientes.
    """
    try:
        with Tape() as tape:
            xt = Tensor(x, requires_grad=True)
            inputs = ops.resample(xt, rows, cols) if rows is not None else xt
            loss = bce_loss(model.forward(inputs, grad_params=False), y, reduction="sum")
            tape.backward(loss)
    except GradientError as e:
        raise AttackError(f"❌ gradiente no finito respecto a la entrada: {e}") from e
    grad = xt.grad
    if grad is None or not np.all(np.isfinite(grad)):
        raise AttackError("❌ gradiente no finito respecto a la entrada")
    return grad


@dataclass
class AttackState:
    """Iterado actual, dirección acumulada (MIFGSM), contador y streams por ejemplo."""

    x_adv: np.ndarray
    rngs: List[np.random.Generator]
    momentum: Optional[np.ndarray] = None
    t: int = 0
    degenerate_steps: int = field(default=0)


class SignStepAttack(ABC):
    """Ataque L∞ genérico; las subclases definen el inicio y la dirección."""

    method: AttackMethod

    def __init__(self, spec: AttackSpec):
        self.spec = spec

    def initial_point(self, x: np.ndarray, rngs: Sequence[np.random.Generator]) -> np.ndarray:
        return x.copy()

    @abstractmethod
    def direction(self, model: LogitModel, state: AttackState, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Dirección G_{t+1} para el iterado actual."""

    def run_chunk(
        self,
        model: LogitModel,
        x: np.ndarray,
        y: np.ndarray,
        indices: Sequence[int],
        callback: Optional[IterateCallback] = None,
    ) -> np.ndarray:
        """Ejecuta el ataque sobre un minibatch fijo."""
        spec = self.spec
        rngs = [example_rng(spec.seed, i) for i in indices]
        state = AttackState(x_adv=self.initial_point(x, rngs), rngs=rngs)
        if callback is not None:
            callback(0, state.x_adv)
        alpha = spec.alpha
        for t in range(spec.effective_iterations):
            g = self.direction(model, state, x, y)
            step = ops.sign(g).data
            state.x_adv = clip_ball(state.x_adv + alpha * step, x, spec.epsilon)
            state.t = t + 1
            if callback is not None:
                callback(state.t, state.x_adv)
        if state.degenerate_steps:
            logger.debug("Pasos con gradiente degenerado: %d", state.degenerate_steps)
        return state.x_adv
