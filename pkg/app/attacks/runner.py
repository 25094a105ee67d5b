# app/attacks/runner.py
"""
Generación de lotes adversariales.

El lote se parte en chunks fijos de `spec.minibatch` ejemplos en orden; los
workers solo reparten chunks, así que el resultado no depende de su número.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

import numpy as np

from app.attacks.base import IterateCallback
from app.attacks.methods import get_attack
from app.classifiers.architectures import LogitModel
from app.config import settings
from app.errors import AttackError, ShapeError
from app.models.schemas import AttackMethod, AttackSpec

logger = logging.getLogger(__name__)


def _chunks(count: int, size: int) -> List[slice]:
    return [slice(start, min(start + size, count)) for start in range(0, count, size)]


def run_attack(
    model: LogitModel,
    images: np.ndarray,
    labels: np.ndarray,
    spec: AttackSpec,
    indices: Optional[Sequence[int]] = None,
    workers: Optional[int] = None,
    callback: Optional[IterateCallback] = None,
) -> np.ndarray:
    """
    Devuelve x* con la misma forma que `images`.

    `indices` identifica cada ejemplo para derivar su stream aleatorio (por
    defecto 0..N-1). Con más de un worker el callback puede llamarse desde
    varios hilos.
    """
    images = np.asarray(getattr(images, "data", images), dtype=np.float64)
    labels = np.asarray(getattr(labels, "data", labels))
    if images.ndim != 4 or images.shape[0] == 0:
        raise AttackError(f"❌ lote vacío o con forma inválida: {images.shape}")
    if labels.shape[0] != images.shape[0]:
        raise ShapeError(f"attack_{spec.method.value}", images.shape, labels.shape)
    indices = np.arange(images.shape[0]) if indices is None else np.asarray(indices, dtype=np.int64)
    if indices.shape[0] != images.shape[0]:
        raise ShapeError("indices", images.shape, indices.shape)

    attack = get_attack(spec)
    if spec.method == AttackMethod.DAA:
        logger.info("DAA: c=%s, ancho de banda=%s, M=%d", spec.daa_c, spec.bandwidth_rule, spec.minibatch)

    slices = _chunks(images.shape[0], spec.minibatch)
    workers = max(1, min(workers or settings.AXRX_WORKERS, len(slices)))

    def run(part: slice) -> np.ndarray:
        return attack.run_chunk(model, images[part], labels[part], indices[part], callback)

    started = time.perf_counter()
    if workers == 1:
        results = [run(part) for part in slices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, slices))
    logger.debug(
        "%s: %d ejemplos en %d chunks (%d workers), %.2fs",
        spec.method.value, images.shape[0], len(slices), workers, time.perf_counter() - started,
    )
    return np.concatenate(results, axis=0)


def _with_method(spec: Optional[AttackSpec], method: AttackMethod) -> AttackSpec:
    if spec is None:
        return AttackSpec(method=method)
    return spec if spec.method == method else spec.model_copy(update={"method": method})


def attack_fgsm(model, x, y, spec: Optional[AttackSpec] = None, **kwargs) -> np.ndarray:
    return run_attack(model, x, y, _with_method(spec, AttackMethod.FGSM), **kwargs)


def attack_pgd(model, x, y, spec: Optional[AttackSpec] = None, **kwargs) -> np.ndarray:
    return run_attack(model, x, y, _with_method(spec, AttackMethod.PGD), **kwargs)


def attack_mifgsm(model, x, y, spec: Optional[AttackSpec] = None, **kwargs) -> np.ndarray:
    return run_attack(model, x, y, _with_method(spec, AttackMethod.MIFGSM), **kwargs)


def attack_daa(model, xs, ys, spec: Optional[AttackSpec] = None, **kwargs) -> np.ndarray:
    return run_attack(model, xs, ys, _with_method(spec, AttackMethod.DAA), **kwargs)


def attack_diifgsm(model, x, y, spec: Optional[AttackSpec] = None, **kwargs) -> np.ndarray:
    return run_attack(model, x, y, _with_method(spec, AttackMethod.DII_FGSM), **kwargs)
