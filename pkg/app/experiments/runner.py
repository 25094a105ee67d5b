# app/experiments/runner.py
"""
Ejecución de las celdas de un plan.

Cada celda escribe sus reportes en un archivo temporal propio; el CSV y el
JSON finales solo se escriben, de forma atómica, cuando todas las celdas
terminan. Un fallo deja intactos los resultados de una ejecución anterior.
"""

from __future__ import annotations

import json
import logging
import os
import shutil
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

from app.config import settings
from app.errors import PlanValidationError
from app.metrics.report import report_to_dict, reports_to_csv, reports_to_json
from app.models.schemas import EvalReport

logger = logging.getLogger(__name__)


@dataclass
class Cell:
    """Unidad de trabajo independiente; devuelve uno o más reportes."""

    key: str
    run: Callable[[], List[EvalReport]]


def output_paths(output: str) -> Tuple[Path, Path]:
    """(csv, json) a partir de la ruta de salida del plan."""
    csv_path = Path(output)
    if csv_path.suffix != ".csv":
        csv_path = csv_path.with_suffix(".csv")
    return csv_path, csv_path.with_suffix(".json")


def resolve_output(output: str, root: Path) -> Path:
    """Ruta de salida relativa, confinada bajo `root`."""
    candidate = Path(output)
    if candidate.is_absolute() or ".." in candidate.parts:
        raise PlanValidationError(f"la salida debe ser relativa a {root} y sin '..': {output}")
    base = Path(root).resolve()
    resolved = (base / candidate).resolve()
    if not resolved.is_relative_to(base):
        raise PlanValidationError(f"la salida escapa de {root}: {output}")
    return resolved


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _run_cell(cell: Cell, scratch: Optional[Path]) -> List[EvalReport]:
    started = time.perf_counter()
    reports = cell.run()
    elapsed = time.perf_counter() - started
    reports = [r.model_copy(update={"wall_clock_seconds": elapsed}) for r in reports]
    if scratch is not None:
        payload = json.dumps([report_to_dict(r, include_timing=True) for r in reports], sort_keys=True)
        _atomic_write(scratch / f"{cell.key}.json", payload)
    logger.info("✅ Celda %s (%.2fs)", cell.key, elapsed)
    return reports


def execute_cells(cells: Sequence[Cell], output: Optional[str], workers: Optional[int] = None) -> List[EvalReport]:
    """
    Ejecuta las celdas en paralelo y fusiona los reportes en el orden de las celdas.

    Con `output=None` no se escribe nada en disco.
    """
    workers = max(1, min(workers or settings.AXRX_WORKERS, len(cells) or 1))
    scratch = None
    if output is not None:
        csv_path, _ = output_paths(output)
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        scratch = csv_path.with_name(csv_path.name + ".cells")
        scratch.mkdir(exist_ok=True)

    logger.info("🔄 Ejecutando %d celdas con %d workers", len(cells), workers)
    if workers == 1:
        results = [_run_cell(cell, scratch) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda cell: _run_cell(cell, scratch), cells))
    reports = [report for chunk in results for report in chunk]

    if output is not None:
        write_reports(reports, output)
        shutil.rmtree(scratch, ignore_errors=True)
    return reports


def write_reports(reports: Sequence[EvalReport], output: str) -> Tuple[Path, Path]:
    """Escribe el CSV y el JSON (sin tiempos de reloj) de forma atómica."""
    csv_path, json_path = output_paths(output)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    _atomic_write(csv_path, reports_to_csv(reports))
    _atomic_write(json_path, reports_to_json(reports))
    logger.info("✅ Resultados en %s y %s", csv_path, json_path)
    return csv_path, json_path
