# app/attacks/transforms.py
"""
Transformación diversa de entrada de DII-FGSM: redimensionado bilineal a una
escala en [resize_min, resize_max) seguido de relleno con ceros hasta el
tamaño original en un desplazamiento uniforme.

La transformación es lineal, así que se expresa como `A_y @ x @ A_xᵀ` y el
gradiente fluye por `ops.resample`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.models.schemas import AttackSpec


def bilinear_matrix(out_size: int, in_size: int) -> np.ndarray:
    """Interpolación bilineal 1-D [out, in] con centros de píxel alineados."""
    if out_size == in_size:
        return np.eye(in_size)
    src = (np.arange(out_size) + 0.5) * (in_size / out_size) - 0.5
    src = np.clip(src, 0.0, in_size - 1)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, in_size - 1)
    frac = src - lo
    matrix = np.zeros((out_size, in_size))
    rows = np.arange(out_size)
    np.add.at(matrix, (rows, lo), 1.0 - frac)
    np.add.at(matrix, (rows, hi), frac)
    return matrix


def pad_matrix(side: int, size: int, offset: int) -> np.ndarray:
    """Coloca un eje de `size` en uno de `side` a partir de `offset`."""
    matrix = np.zeros((side, size))
    matrix[offset + np.arange(size), np.arange(size)] = 1.0
    return matrix


@dataclass(frozen=True)
class DiverseTransform:
    side: int
    size: int
    offset_y: int
    offset_x: int

    def matrices(self):
        resize = bilinear_matrix(self.size, self.side)
        rows = pad_matrix(self.side, self.size, self.offset_y) @ resize
        cols = pad_matrix(self.side, self.size, self.offset_x) @ resize
        return rows, cols


def draw_transform(rng: np.random.Generator, side: int, spec: AttackSpec) -> Optional[DiverseTransform]:
    """Con probabilidad p devuelve una transformación; si no, None (identidad)."""
    if not rng.random() < spec.transform_prob:
        return None
    scale = rng.uniform(spec.resize_min, spec.resize_max)
    size = int(min(side, max(1, round(scale * side))))
    offset_y = int(rng.integers(0, side - size + 1))
    offset_x = int(rng.integers(0, side - size + 1))
    return DiverseTransform(side, size, offset_y, offset_x)


def stack_matrices(transforms, side: int):
    """Matrices por ejemplo [M, 1, S, S]; identidad donde no hay transformación."""
    count = len(transforms)
    rows = np.broadcast_to(np.eye(side), (count, 1, side, side)).copy()
    cols = rows.copy()
    for i, transform in enumerate(transforms):
        if transform is not None:
            rows[i, 0], cols[i, 0] = transform.matrices()
    return rows, cols
