# app/defenses/pipeline.py
"""
Defensas en inferencia y bundles de modelo defendido.

Un bundle es el par (checkpoint, `<checkpoint>.defense.json`): basta para
reproducir una evaluación defendida.
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from app.classifiers.architectures import Classifier, LogitModel
from app.classifiers.checkpoint import load_model, save_model
from app.classifiers.training import predict_logits
from app.defenses.denoise import denoise_nlm
from app.defenses.pixel_deflection import pixel_deflect
from app.errors import CheckpointFormatError
from app.models.schemas import DefenseSpec

logger = logging.getLogger(__name__)

SIDECAR_SUFFIX = ".defense.json"


def pdt_transform(images: np.ndarray, spec: DefenseSpec, indices: Optional[Sequence[int]] = None) -> np.ndarray:
    """denoise_nlm(pixel_deflect(x))."""
    return denoise_nlm(pixel_deflect(images, spec, indices), spec)


def defend_pdt(
    model: LogitModel,
    images: np.ndarray,
    spec: DefenseSpec = DefenseSpec(),
    indices: Optional[Sequence[int]] = None,
    batch_size: int = 256,
) -> np.ndarray:
    """Logits del modelo sobre las imágenes transformadas por PDT. No entrena nada."""
    logger.debug(
        "PDT: K=%d r=%d, NLM h=%s parche=%d búsqueda=%d",
        spec.deflections, spec.window, spec.nlm_h, spec.nlm_patch, spec.nlm_search,
    )
    return predict_logits(model, pdt_transform(images, spec, indices), batch_size)


def defend_combined(
    adv_trained_model: LogitModel,
    images: np.ndarray,
    spec: DefenseSpec = DefenseSpec(),
    indices: Optional[Sequence[int]] = None,
    batch_size: int = 256,
) -> np.ndarray:
    """PDT sobre un modelo con entrenamiento adversarial."""
    return defend_pdt(adv_trained_model, images, spec, indices, batch_size)


def sidecar_path(checkpoint: Union[str, Path]) -> Path:
    checkpoint = Path(checkpoint)
    return checkpoint.with_name(checkpoint.name + SIDECAR_SUFFIX)


def save_bundle(model: Classifier, spec: DefenseSpec, checkpoint: Union[str, Path]) -> Tuple[Path, Path]:
    checkpoint = Path(checkpoint)
    save_model(model, checkpoint)
    sidecar = sidecar_path(checkpoint)
    tmp = sidecar.with_name(sidecar.name + ".tmp")
    tmp.write_text(json.dumps(spec.model_dump(mode="json"), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    os.replace(tmp, sidecar)
    logger.info("✅ Bundle defendido guardado en %s", checkpoint)
    return checkpoint, sidecar


def load_bundle(checkpoint: Union[str, Path]) -> Tuple[Classifier, DefenseSpec]:
    sidecar = sidecar_path(checkpoint)
    if not sidecar.exists():
        raise CheckpointFormatError(f"bundle sin spec de defensa: falta {sidecar}")
    try:
        spec = DefenseSpec.model_validate_json(sidecar.read_text(encoding="utf-8"))
    except ValueError as e:
        raise CheckpointFormatError(f"{sidecar}: DefenseSpec inválido ({e})") from e
    return load_model(checkpoint), spec
