# app/api/experiment_routes.py
"""
Endpoints de experimentos.

Ejecutan planes de evaluación de robustez y exponen el cálculo de AUC media.
"""

import logging
from pathlib import Path

import numpy as np
import scipy
from fastapi import APIRouter, HTTPException, status
from pydantic import ValidationError

from app.config import settings
from app.errors import AxrxError, LabelError, PlanValidationError, UndefinedMetricError
from app.experiments.protocols import run_plan
from app.experiments.runner import output_paths, resolve_output
from app.metrics.auc import mean_auc
from app.models.schemas import (
    AUCRequest,
    AUCResponse,
    ErrorResponse,
    ExperimentPlan,
    ExperimentResponse,
    HealthResponse,
)

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/api/v1/experiments", tags=["Experiments"])


@router.get(
    "/health",
    response_model=HealthResponse,
    summary="Estado del servicio",
    description="Verifica el estado del servicio y las versiones de la pila numérica",
)
async def health_check() -> HealthResponse:
    return HealthResponse(
        status="healthy",
        service=settings.SERVICE_NAME,
        version="1.0.0",
        dependencies={
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "workers": settings.AXRX_WORKERS,
        },
    )


@router.post(
    "/run",
    response_model=ExperimentResponse,
    responses={
        422: {"model": ErrorResponse, "description": "Plan inválido"},
        500: {"model": ErrorResponse, "description": "Error durante la ejecución"},
    },
    summary="Ejecutar un plan de experimento",
    description="""
    Valida el plan, carga dataset y checkpoints, ejecuta las celdas y escribe
    el CSV y el JSON de resultados. `output` es relativo a OUTPUT_DIR; se
    rechazan rutas absolutas y `..`. Los reportes devueltos no incluyen tiempos.
    """,
)
def run_experiment(plan: ExperimentPlan) -> ExperimentResponse:
    # La salida HTTP siempre queda bajo OUTPUT_DIR
    requested = plan.output if "output" in plan.model_fields_set else "report.csv"
    try:
        output = resolve_output(requested, Path(settings.OUTPUT_DIR))
        plan = plan.model_copy(update={"output": str(output)})
        reports = run_plan(plan)
    except (PlanValidationError, ValidationError) as e:
        logger.warning("⚠️ Plan rechazado: %s", e)
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))
    except AxrxError as e:
        logger.error("❌ Error ejecutando el plan: %s", e)
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail=f"Error ejecutando el experimento: {e}",
        )
    csv_path, json_path = output_paths(plan.output)
    return ExperimentResponse(
        kind=plan.kind,
        reports=[r.model_copy(update={"wall_clock_seconds": None}) for r in reports],
        csv_path=str(csv_path),
        json_path=str(json_path),
    )


@router.post(
    "/auc",
    response_model=AUCResponse,
    responses={422: {"model": ErrorResponse, "description": "Entrada inválida o AUC indefinida"}},
    summary="AUC media multi-etiqueta",
)
async def compute_auc(request: AUCRequest) -> AUCResponse:
    """AUC por etiqueta (Mann–Whitney) y media sobre las etiquetas definidas."""
    logits = np.asarray(request.logits, dtype=np.float64)
    labels = np.asarray(request.labels)
    if logits.shape != labels.shape or logits.ndim != 2:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail=f"logits {logits.shape} y labels {labels.shape} deben tener la misma forma [N, L]",
        )
    if request.label_names is not None and len(request.label_names) != logits.shape[1]:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail="un nombre por etiqueta")
    try:
        scores = mean_auc(logits, labels, request.label_names)
    except (UndefinedMetricError, LabelError) as e:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))
    return AUCResponse(mean_auc=scores.mean, per_label_auc=scores.as_dict(), excluded_labels=scores.excluded)
