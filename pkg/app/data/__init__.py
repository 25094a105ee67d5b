"""Datos sintéticos, política de etiquetas inciertas y formato de archivo."""

from app.data.dataset import UNCERTAIN, Dataset, LabelPolicy, resolve_labels, split_dataset
from app.data.dataset_io import read_dataset, write_dataset
from app.data.synthetic import generate_synthetic

__all__ = [
    'UNCERTAIN', 'Dataset', 'LabelPolicy', 'resolve_labels', 'split_dataset',
    'read_dataset', 'write_dataset', 'generate_synthetic',
]
