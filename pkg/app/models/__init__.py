# app/models/__init__.py
"""Módulo de esquemas: specs de ataque, defensa, entrenamiento, planes y reportes."""

from app.models.schemas import (
    AttackMethod,
    AttackSpec,
    DefenseSpec,
    EvalReport,
    ExperimentKind,
    ExperimentPlan,
    SyntheticConfig,
    TrainConfig,
)

__all__ = [
    'AttackMethod', 'AttackSpec', 'DefenseSpec', 'EvalReport',
    'ExperimentKind', 'ExperimentPlan', 'SyntheticConfig', 'TrainConfig',
]
