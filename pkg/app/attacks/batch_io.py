# app/attacks/batch_io.py
"""
Lotes adversariales en disco (little-endian):

    magic "AXAD" | version u16 | método u8 | longitud u32 + AttackSpec JSON canónico
    | N u32 | rango u8 + extensiones u32 de una imagen
    | N × (índice limpio u32, píxeles f64)
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from app.data.dataset_io import _Reader
from app.errors import CheckpointFormatError
from app.models.schemas import METHOD_TAGS, AttackSpec

MAGIC = b"AXAD"
VERSION = 1


@dataclass(frozen=True)
class AdversarialBatch:
    spec: AttackSpec
    indices: np.ndarray  # u32 [N]
    images: np.ndarray   # f64 [N, ...]

    @property
    def size(self) -> int:
        return int(self.images.shape[0])


def canonical_spec_json(spec: AttackSpec) -> bytes:
    return json.dumps(spec.model_dump(mode="json"), sort_keys=True, separators=(",", ":")).encode("utf-8")


def write_adversarial_batch(batch: AdversarialBatch, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    images = np.ascontiguousarray(batch.images, dtype="<f8")
    indices = np.asarray(batch.indices, dtype=np.int64)
    if indices.shape[0] != images.shape[0]:
        raise ValueError("un índice limpio por imagen adversarial")
    spec_blob = canonical_spec_json(batch.spec)
    dims = images.shape[1:]
    parts = [
        MAGIC,
        struct.pack("<HB", VERSION, METHOD_TAGS[batch.spec.method]),
        struct.pack("<I", len(spec_blob)),
        spec_blob,
        struct.pack("<IB", images.shape[0], len(dims)),
        struct.pack(f"<{len(dims)}I", *dims),
    ]
    for index, image in zip(indices, images):
        parts.append(struct.pack("<I", int(index)))
        parts.append(image.tobytes())
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(b"".join(parts))
    os.replace(tmp, path)


def read_adversarial_batch(path: Union[str, Path]) -> AdversarialBatch:
    reader = _Reader(Path(path).read_bytes(), "lote adversarial")
    reader.check_magic(MAGIC)
    reader.take(len(MAGIC))
    reader.check_version(VERSION)
    (tag,) = reader.unpack("<B")
    (length,) = reader.unpack("<I")
    try:
        spec = AttackSpec.model_validate_json(reader.take(length))
    except ValueError as e:
        raise CheckpointFormatError(f"lote adversarial: AttackSpec inválido ({e})") from e
    if METHOD_TAGS[spec.method] != tag:
        raise CheckpointFormatError(f"lote adversarial: etiqueta de método {tag} no coincide con {spec.method.value}")
    count, rank = reader.unpack("<IB")
    dims = tuple(reader.unpack(f"<{rank}I")) if rank else ()
    pixels = int(np.prod(dims)) if dims else 1

    indices = np.empty(count, dtype=np.int64)
    images = np.empty((count, *dims), dtype=np.float64)
    for i in range(count):
        (indices[i],) = reader.unpack("<I")
        images[i] = np.frombuffer(reader.take(8 * pixels), dtype="<f8").reshape(dims)
    return AdversarialBatch(spec=spec, indices=indices, images=images)
