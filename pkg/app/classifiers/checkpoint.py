# app/classifiers/checkpoint.py
"""
Checkpoints de modelos (little-endian):

    magic "AXMD" | version u16 | arquitectura u8 | num_labels u16 | lado u16
    | por parámetro: rango u8, extensiones u32..., datos f64

El orden de los parámetros lo fija la arquitectura.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path
from typing import Union

import numpy as np

from app.classifiers.architectures import ARCHITECTURE_BY_CODE, ARCHITECTURES, Classifier, parameter_shapes
from app.core.tensor import Tensor
from app.data.dataset_io import _Reader
from app.errors import CheckpointFormatError

MAGIC = b"AXMD"
VERSION = 1


def save_model(model: Classifier, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    parts = [
        MAGIC,
        struct.pack("<HBHH", VERSION, model.spec.code, model.num_labels, model.side),
    ]
    for tensor in model.params.values():
        parts.append(struct.pack("<B", tensor.ndim))
        parts.append(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
        parts.append(np.ascontiguousarray(tensor.data, dtype="<f8").tobytes())
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(b"".join(parts))
    os.replace(tmp, path)


def load_model(path: Union[str, Path]) -> Classifier:
    reader = _Reader(Path(path).read_bytes(), "checkpoint")
    reader.check_magic(MAGIC)
    reader.take(len(MAGIC))
    reader.check_version(VERSION)
    code, num_labels, side = reader.unpack("<BHH")
    if code not in ARCHITECTURE_BY_CODE:
        raise CheckpointFormatError(f"checkpoint: código de arquitectura desconocido {code}")
    spec = ARCHITECTURE_BY_CODE[code]

    params = {}
    for name, expected in parameter_shapes(ARCHITECTURES[spec.tag], side, num_labels):
        (rank,) = reader.unpack("<B")
        shape = reader.unpack(f"<{rank}I") if rank else ()
        if tuple(shape) != expected:
            raise CheckpointFormatError(f"checkpoint: {name} con forma {shape}, se esperaba {expected}")
        count = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(reader.take(8 * count), dtype="<f8").astype(np.float64).reshape(shape)
        params[name] = Tensor(data, requires_grad=True)
    return Classifier(spec.tag, params, side, num_labels)
