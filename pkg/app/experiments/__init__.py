"""Protocolos de experimento, carga de planes y ejecución por celdas."""

from app.experiments.context import ExperimentContext, load_context
from app.experiments.protocols import (
    PROTOCOLS,
    run_advtrain_transfer,
    run_defense_sweep,
    run_ensemble_holdout,
    run_eps_sweep,
    run_iter_sweep,
    run_pdt_transfer,
    run_plan,
    run_transfer_matrix,
)
from app.experiments.runner import Cell, execute_cells, output_paths, write_reports

__all__ = [
    'ExperimentContext', 'load_context',
    'PROTOCOLS', 'run_advtrain_transfer', 'run_defense_sweep', 'run_ensemble_holdout',
    'run_eps_sweep', 'run_iter_sweep', 'run_pdt_transfer', 'run_plan', 'run_transfer_matrix',
    'Cell', 'execute_cells', 'output_paths', 'write_reports',
]
