# app/data/dataset_io.py
"""
Formato binario de datasets (little-endian):

    magic "AXDS" | version u16 | N u32 | L u16 | S u16
    | L × (longitud u16 + nombre UTF-8)
    | N × (S·S píxeles f32, L bytes de etiqueta en {0, 1, 2})
"""

from __future__ import annotations

import os
import struct
from pathlib import Path
from typing import Union

import numpy as np

from app.data.dataset import Dataset
from app.errors import BadMagicError, TruncatedFileError, VersionMismatchError

MAGIC = b"AXDS"
VERSION = 1
_HEADER = struct.Struct("<4sHIHH")


class _Reader:
    """Cursor sobre bytes que falla con TruncatedFileError."""

    def __init__(self, blob: bytes, what: str):
        self.blob = blob
        self.pos = 0
        self.what = what

    def take(self, count: int) -> bytes:
        if count < 0 or self.pos + count > len(self.blob):
            raise TruncatedFileError(
                f"{self.what}: archivo truncado (se pedían {count} bytes en offset {self.pos}, total {len(self.blob)})"
            )
        chunk = self.blob[self.pos:self.pos + count]
        self.pos += count
        return chunk

    def unpack(self, fmt: str):
        size = struct.calcsize(fmt)
        return struct.unpack(fmt, self.take(size))

    def check_magic(self, magic: bytes) -> None:
        found = self.blob[:len(magic)]
        if len(found) < len(magic):
            raise TruncatedFileError(f"{self.what}: archivo truncado ({len(self.blob)} bytes)")
        if found != magic:
            raise BadMagicError(f"{self.what}: bad magic {found!r}, se esperaba {magic!r}")

    def check_version(self, expected: int) -> None:
        (version,) = self.unpack("<H")
        if version != expected:
            raise VersionMismatchError(f"{self.what}: versión {version} no soportada (esperada {expected})")


def write_dataset(dataset: Dataset, path: Union[str, Path]) -> None:
    """Escribe el dataset de forma atómica (archivo temporal + rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n, side, num_labels = dataset.size, dataset.side, dataset.num_labels

    parts = [_HEADER.pack(MAGIC, VERSION, n, num_labels, side)]
    for name in dataset.label_names:
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)) + encoded)

    pixels = dataset.images.reshape(n, side * side).astype("<f4")
    labels = dataset.labels.astype(np.uint8)
    records = np.empty(n, dtype=[("pixels", "<f4", (side * side,)), ("labels", "u1", (num_labels,))])
    records["pixels"] = pixels
    records["labels"] = labels
    parts.append(records.tobytes())

    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(b"".join(parts))
    os.replace(tmp, path)


def read_dataset(path: Union[str, Path], split: str = "all") -> Dataset:
    """Lee un dataset; distingue magic inválido, truncamiento y versión."""
    reader = _Reader(Path(path).read_bytes(), "dataset")
    reader.check_magic(MAGIC)
    reader.take(len(MAGIC))
    reader.check_version(VERSION)
    n, num_labels, side = reader.unpack("<IHH")

    names = []
    for _ in range(num_labels):
        (length,) = reader.unpack("<H")
        names.append(reader.take(length).decode("utf-8"))

    record = np.dtype([("pixels", "<f4", (side * side,)), ("labels", "u1", (num_labels,))])
    body = reader.take(n * record.itemsize)
    records = np.frombuffer(body, dtype=record, count=n)
    images = records["pixels"].astype(np.float64).reshape(n, 1, side, side)
    labels = records["labels"].copy()
    return Dataset(images=images, labels=labels, label_names=tuple(names), split=split)
