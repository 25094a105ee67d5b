# app/errors.py
"""
Jerarquía de errores del toolkit.

Cada error lleva el código de salida que la CLI devuelve al abortar:
2 para fallos de validación del plan, 3 para abortos en ejecución.
"""


class AxrxError(Exception):
    """Error base del toolkit."""

    exit_code = 3


class ShapeError(AxrxError, ValueError):
    """Formas incompatibles en una primitiva."""

    def __init__(self, primitive: str, *shapes: tuple):
        self.primitive = primitive
        self.shapes = shapes
        shown = " y ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{primitive}: formas incompatibles {shown}")


class GradientError(AxrxError):
    """Uso inválido de backward o gradiente no finito."""


class LabelError(AxrxError, ValueError):
    """Etiqueta fuera de {0, 1} donde se requiere binaria."""


class LabelPolicyError(AxrxError, KeyError):
    """La política de etiquetas inciertas no cubre alguna etiqueta."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class DatasetFormatError(AxrxError):
    """Archivo de dataset ilegible."""


class BadMagicError(DatasetFormatError):
    """Los bytes mágicos no coinciden (bad magic)."""


class TruncatedFileError(DatasetFormatError):
    """El archivo termina antes de lo que declara su cabecera."""


class VersionMismatchError(DatasetFormatError):
    """Versión de formato no soportada."""


class CheckpointFormatError(DatasetFormatError):
    """Checkpoint de modelo o lote adversarial inválido."""


class AttackError(AxrxError):
    """Fallo durante la generación de ejemplos adversariales."""


class TrainingError(AxrxError):
    """Fallo durante el entrenamiento (p. ej. pérdida no finita)."""


class UndefinedMetricError(AxrxError):
    """AUC indefinida: la etiqueta tiene una sola clase."""


class PlanValidationError(AxrxError):
    """Plan de experimento inválido (checkpoint ausente, rejilla vacía...)."""

    exit_code = 2
