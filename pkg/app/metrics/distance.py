# app/metrics/distance.py
"""Distancia L2 media entre lotes limpios y adversariales."""

import numpy as np

from app.errors import ShapeError


def l2_distance(clean, adv) -> float:
    """Media sobre ejemplos de ||adv_i - clean_i||₂."""
    clean = np.asarray(getattr(clean, "data", clean), dtype=np.float64)
    adv = np.asarray(getattr(adv, "data", adv), dtype=np.float64)
    if clean.shape != adv.shape:
        raise ShapeError("l2_distance", clean.shape, adv.shape)
    if clean.ndim == 1:
        clean, adv = clean[None, :], adv[None, :]
    diff = (adv - clean).reshape(clean.shape[0], -1)
    return float(np.linalg.norm(diff, axis=1).mean())
