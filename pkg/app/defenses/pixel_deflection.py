# app/defenses/pixel_deflection.py
"""Deflexión de píxeles sin mapa de activación: K copias vecino -> objetivo."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from app.attacks.base import example_rng
from app.models.schemas import DefenseSpec


def deflect_image(image: np.ndarray, rng: np.random.Generator, deflections: int, window: int) -> np.ndarray:
    """
    Deflexión de una imagen [.., H, W].

    Cada paso elige un píxel objetivo uniforme y copia sobre él un píxel fuente
    uniforme de la ventana (2r+1)² centrada en el objetivo, recortada al borde.
    """
    out = np.array(image, dtype=np.float64, copy=True)
    if deflections == 0 or window == 0:
        return out
    height, width = out.shape[-2:]
    target_y = rng.integers(0, height, size=deflections)
    target_x = rng.integers(0, width, size=deflections)
    source_y = rng.integers(np.maximum(target_y - window, 0), np.minimum(target_y + window, height - 1) + 1)
    source_x = rng.integers(np.maximum(target_x - window, 0), np.minimum(target_x + window, width - 1) + 1)
    for ty, tx, sy, sx in zip(target_y, target_x, source_y, source_x):
        out[..., ty, tx] = out[..., sy, sx]
    return out


def pixel_deflect(images: np.ndarray, spec: DefenseSpec, indices: Optional[Sequence[int]] = None) -> np.ndarray:
    """Deflexión de un lote [N, 1, S, S] con un stream por ejemplo."""
    images = np.asarray(getattr(images, "data", images), dtype=np.float64)
    if images.ndim == 2:
        return deflect_image(images, example_rng(spec.seed, 0 if indices is None else indices[0]), spec.deflections, spec.window)
    indices = range(images.shape[0]) if indices is None else indices
    return np.stack([
        deflect_image(image, example_rng(spec.seed, index), spec.deflections, spec.window)
        for image, index in zip(images, indices)
    ])
