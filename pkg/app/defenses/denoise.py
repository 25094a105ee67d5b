# app/defenses/denoise.py
"""
Non-local means vectorizado sobre los desplazamientos de la ventana de búsqueda:

    out(p) = Σ_q w(p, q) · I(q) / Σ_q w(p, q),   w = exp(−||P(p) − P(q)||² / h²)

La distancia entre parches es la suma de diferencias al cuadrado sobre el
parche, calculada con un filtro de media. Los bordes se rellenan por reflexión.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.ndimage import uniform_filter

from app.models.schemas import DefenseSpec

logger = logging.getLogger(__name__)


def nlm_filter(images: np.ndarray, h: float, patch: int = 3, search: int = 11) -> np.ndarray:
    """NLM sobre los dos últimos ejes de un array [..., H, W]."""
    images = np.asarray(images, dtype=np.float64)
    if h == 0:
        return images.copy()
    height, width = images.shape[-2:]
    half_patch, half_search = patch // 2, search // 2
    lead = [(0, 0)] * (images.ndim - 2)

    def pad(amount: int) -> np.ndarray:
        return np.pad(images, lead + [(amount, amount)] * 2, mode="reflect")

    base = pad(half_patch)
    shifted_source = pad(half_patch + half_search)
    window = (1,) * (images.ndim - 2) + (patch, patch)
    area = patch * patch
    inner = (..., slice(half_patch, half_patch + height), slice(half_patch, half_patch + width))

    numerator = np.zeros_like(images)
    weights = np.zeros_like(images)
    for dy in range(search):
        for dx in range(search):
            shifted = shifted_source[..., dy:dy + height + 2 * half_patch, dx:dx + width + 2 * half_patch]
            distance = uniform_filter((base - shifted) ** 2, size=window, mode="constant")[inner] * area
            distance = np.maximum(distance, 0.0)
            weight = np.exp(-distance / (h * h))
            numerator += weight * shifted[inner]
            weights += weight
    return numerator / weights


def denoise_nlm(images: np.ndarray, spec: DefenseSpec) -> np.ndarray:
    """Denoise NLM con los parámetros del spec; `nlm_h = 0` es la identidad."""
    images = np.asarray(getattr(images, "data", images), dtype=np.float64)
    return nlm_filter(images, spec.nlm_h, spec.nlm_patch, spec.nlm_search)
