# app/data/dataset.py
"""
Dataset multi-etiqueta y política de etiquetas inciertas.

Las etiquetas crudas toman valores {0, 1, u}; `u` se codifica como 2.
Antes de entrenar o calcular la pérdida, `resolve_labels` reemplaza cada `u`
según la política por etiqueta.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from app.errors import LabelError, LabelPolicyError

logger = logging.getLogger(__name__)

UNCERTAIN = 2

# u -> 1 para Atelectasis y Edema, u -> 0 para el resto
POSITIVE_WHEN_UNCERTAIN = ("Atelectasis", "Edema")


@dataclass(frozen=True)
class Dataset:
    """Imágenes [N, 1, S, S] en [0, 1] con etiquetas [N, L] en {0, 1, 2}."""

    images: np.ndarray
    labels: np.ndarray
    label_names: Tuple[str, ...]
    split: str = "all"
    indices: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        images = np.asarray(self.images, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.uint8)
        if images.ndim != 4 or images.shape[1] != 1 or images.shape[2] != images.shape[3]:
            raise ValueError(f"imágenes con forma inválida {images.shape}; se espera [N, 1, S, S]")
        if images.shape[0] == 0:
            raise ValueError("dataset vacío")
        if labels.shape != (images.shape[0], len(self.label_names)) or len(self.label_names) < 2:
            raise ValueError(f"etiquetas con forma inválida {labels.shape}")
        if np.any(labels > UNCERTAIN):
            raise LabelError("etiquetas crudas fuera de {0, 1, u}")
        if images.min() < 0.0 or images.max() > 1.0:
            raise ValueError("píxeles fuera de [0, 1]")
        indices = np.arange(images.shape[0]) if self.indices is None else np.asarray(self.indices, dtype=np.int64)
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "label_names", tuple(self.label_names))
        object.__setattr__(self, "indices", indices)

    @property
    def size(self) -> int:
        return int(self.images.shape[0])

    @property
    def side(self) -> int:
        return int(self.images.shape[2])

    @property
    def num_labels(self) -> int:
        return len(self.label_names)

    @property
    def is_resolved(self) -> bool:
        return not np.any(self.labels == UNCERTAIN)

    def binary_labels(self) -> np.ndarray:
        """Etiquetas como float64; exige dataset resuelto."""
        if not self.is_resolved:
            raise LabelError("el dataset contiene etiquetas inciertas sin resolver")
        return self.labels.astype(np.float64)

    def subset(self, rows: np.ndarray, split: Optional[str] = None) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(
            images=self.images[rows],
            labels=self.labels[rows],
            label_names=self.label_names,
            split=split or self.split,
            indices=self.indices[rows],
        )

    def head(self, n: Optional[int]) -> "Dataset":
        if n is None or n >= self.size:
            return self
        return self.subset(np.arange(n))

    def equals(self, other: "Dataset") -> bool:
        """Igualdad bit a bit de contenido."""
        return (
            self.label_names == other.label_names
            and self.images.shape == other.images.shape
            and np.array_equal(self.images, other.images)
            and np.array_equal(self.labels, other.labels)
        )


@dataclass(frozen=True)
class LabelPolicy:
    """Mapeo total u -> {0, 1} por nombre de etiqueta."""

    mapping: Mapping[str, int]

    def __post_init__(self):
        bad = {k: v for k, v in self.mapping.items() if v not in (0, 1)}
        if bad:
            raise LabelPolicyError(f"valores de política fuera de {{0, 1}}: {bad}")

    @classmethod
    def default(cls, label_names: Sequence[str]) -> "LabelPolicy":
        return cls({name: int(name in POSITIVE_WHEN_UNCERTAIN) for name in label_names})


def resolve_labels(dataset: Dataset, policy: Optional[LabelPolicy] = None) -> Dataset:
    """Reemplaza cada `u` según la política; 0/1 quedan intactos."""
    policy = policy or LabelPolicy.default(dataset.label_names)
    missing = [name for name in dataset.label_names if name not in policy.mapping]
    if missing:
        raise LabelPolicyError(f"la política no cubre las etiquetas {missing}")

    targets = np.array([policy.mapping[name] for name in dataset.label_names], dtype=np.uint8)
    uncertain = dataset.labels == UNCERTAIN
    resolved = np.where(uncertain, targets[None, :], dataset.labels).astype(np.uint8)
    logger.debug("Etiquetas inciertas resueltas: %d", int(uncertain.sum()))
    return replace(dataset, labels=resolved)


def split_dataset(
    dataset: Dataset,
    fractions: Tuple[float, float, float] = (0.7, 0.15, 0.15),
    seed: int = 0,
) -> Dict[str, Dataset]:
    """Partición train/val/test por permutación con semilla."""
    if len(fractions) != 3 or any(f <= 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fracciones inválidas {fractions}")
    order = np.random.default_rng(seed).permutation(dataset.size)
    n_train = int(round(fractions[0] * dataset.size))
    n_val = int(round(fractions[1] * dataset.size))
    bounds = {"train": (0, n_train), "val": (n_train, n_train + n_val), "test": (n_train + n_val, dataset.size)}
    splits = {}
    for name, (lo, hi) in bounds.items():
        if hi <= lo:
            raise ValueError(f"la partición '{name}' queda vacía con N={dataset.size}")
        splits[name] = dataset.subset(np.sort(order[lo:hi]), split=name)
    return splits
