# app/experiments/context.py
"""Carga y validación de todo lo que un plan referencia, antes de generar nada."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from app.classifiers.architectures import Classifier
from app.classifiers.checkpoint import load_model
from app.data.dataset import Dataset, resolve_labels
from app.data.dataset_io import read_dataset
from app.errors import DatasetFormatError, PlanValidationError
from app.models.schemas import ExperimentPlan

logger = logging.getLogger(__name__)


@dataclass
class ExperimentContext:
    """Dataset de evaluación resuelto y modelos cargados de un plan."""

    plan: ExperimentPlan
    dataset: Dataset
    models: Dict[str, Classifier]
    adv_model: Optional[Classifier] = None

    @property
    def images(self) -> np.ndarray:
        return self.dataset.images

    @property
    def labels(self) -> np.ndarray:
        return self.dataset.binary_labels()

    @property
    def indices(self) -> np.ndarray:
        return self.dataset.indices


def missing_files(plan: ExperimentPlan) -> List[str]:
    paths = [plan.dataset, *plan.models.values()]
    if plan.adv_model is not None:
        paths.append(plan.adv_model)
    return [p for p in paths if not Path(p).is_file()]


def load_context(plan: ExperimentPlan) -> ExperimentContext:
    """
    Valida el plan y carga sus artefactos.

    Raises:
        PlanValidationError: archivos ausentes, ilegibles o incompatibles entre sí
    """
    missing = missing_files(plan)
    if missing:
        raise PlanValidationError(f"❌ archivos del plan no encontrados: {', '.join(missing)}")

    try:
        dataset = read_dataset(plan.dataset, split="test")
        models = {name: load_model(path) for name, path in sorted(plan.models.items())}
        adv_model = load_model(plan.adv_model) if plan.adv_model is not None else None
    except DatasetFormatError as e:
        raise PlanValidationError(f"❌ artefacto ilegible: {e}") from e

    if not dataset.is_resolved:
        dataset = resolve_labels(dataset)
    dataset = dataset.head(plan.max_examples)

    everything = dict(models)
    if adv_model is not None:
        everything["adv_model"] = adv_model
    for name, model in everything.items():
        if model.side != dataset.side or model.num_labels != dataset.num_labels:
            raise PlanValidationError(
                f"❌ {name}: entrada {model.side}x{model.side} con {model.num_labels} etiquetas "
                f"no coincide con el dataset ({dataset.side}x{dataset.side}, {dataset.num_labels})"
            )

    logger.info(
        "✅ Plan %s: %d ejemplos, modelos %s%s",
        plan.kind.value, dataset.size, ", ".join(models), " + adv_model" if adv_model is not None else "",
    )
    return ExperimentContext(plan=plan, dataset=dataset, models=models, adv_model=adv_model)
