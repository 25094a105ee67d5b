# app/data/synthetic.py
"""
Generador sintético multi-etiqueta (sustituto de radiografías a escala de escritorio).

Cada etiqueta tiene una plantilla visual propia: una elipse gaussiana con
posición y orientación distintas. La imagen es un fondo constante más la suma
de las plantillas de sus etiquetas positivas y ruido gaussiano. Las etiquetas
salen de un latente gaussiano con correlación común, así que la tarea es
genuinamente multi-etiqueta.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.stats import norm

from app.data.dataset import UNCERTAIN, Dataset
from app.models.schemas import SyntheticConfig

logger = logging.getLogger(__name__)

BACKGROUND = 0.15


def label_templates(side: int, num_labels: int) -> np.ndarray:
    """Plantillas [L, S, S] con pico 1."""
    coords = np.arange(side, dtype=np.float64) + 0.5
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    center = side / 2.0
    radius = 0.28 * side
    major, minor = 0.14 * side, 0.07 * side
    templates = np.empty((num_labels, side, side))
    for label in range(num_labels):
        angle = 2.0 * np.pi * label / num_labels
        cy, cx = center + radius * np.sin(angle), center + radius * np.cos(angle)
        tilt = np.pi * label / num_labels
        dy, dx = yy - cy, xx - cx
        u = dx * np.cos(tilt) + dy * np.sin(tilt)
        v = -dx * np.sin(tilt) + dy * np.cos(tilt)
        templates[label] = np.exp(-0.5 * ((u / major) ** 2 + (v / minor) ** 2))
    return templates


def sample_labels(rng: np.random.Generator, n: int, num_labels: int, correlation: float, prevalence: float) -> np.ndarray:
    """Etiquetas binarias con correlación latente común."""
    common = rng.standard_normal((n, 1))
    own = rng.standard_normal((n, num_labels))
    latent = np.sqrt(correlation) * common + np.sqrt(1.0 - correlation) * own
    threshold = norm.ppf(1.0 - prevalence)
    return (latent > threshold).astype(np.uint8)


def generate_synthetic(config: SyntheticConfig) -> Dataset:
    """Dataset determinista dada la semilla."""
    rng = np.random.default_rng(config.seed)
    n, side, num_labels = config.n, config.side, config.num_labels

    labels = sample_labels(rng, n, num_labels, config.correlation, config.prevalence)
    templates = label_templates(side, num_labels)
    clean = BACKGROUND + config.signal * np.tensordot(labels.astype(np.float64), templates, axes=(1, 0))
    noisy = clean + config.noise * rng.standard_normal((n, side, side))
    # Valores exactamente representables en f32 (formato de archivo)
    images = np.clip(noisy, 0.0, 1.0).astype(np.float32).astype(np.float64)[:, None, :, :]

    raw = labels.copy()
    if config.uncertainty_rate > 0:
        uncertain = rng.random((n, num_labels)) < config.uncertainty_rate
        raw[uncertain] = UNCERTAIN

    logger.info(
        "✅ Dataset sintético: N=%d, S=%d, L=%d, inciertas=%d",
        n, side, num_labels, int((raw == UNCERTAIN).sum()),
    )
    return Dataset(images=images, labels=raw, label_names=tuple(config.resolved_label_names()), split="all")
