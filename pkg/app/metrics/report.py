# app/metrics/report.py
"""
Serialización de `EvalReport`: JSON canónico (claves ordenadas) y filas CSV
planas para agregar barridos.

El tiempo de reloj no se serializa salvo `include_timing=True`: así un plan
re-ejecutado produce bytes idénticos.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Iterable, List, Optional, Sequence

from app.metrics.auc import MeanAUC
from app.models.schemas import AttackSpec, DefenseSpec, EvalReport

SPEC_COLUMNS = [
    "experiment", "source", "target", "setting", "defense_mode", "sweep_value",
    "method", "epsilon", "alpha", "iterations", "momentum", "transform_prob",
    "resize_min", "resize_max", "daa_c", "bandwidth_rule", "random_start", "minibatch", "attack_seed",
    "lambda", "inner_method", "inner_epsilon", "inner_iterations", "pretrain_epochs",
    "deflections", "window", "nlm_h", "nlm_patch", "nlm_search", "defense_seed",
    "seed", "ensemble_weights",
]
METRIC_COLUMNS = ["n_examples", "mean_auc", "mean_l2", "excluded_labels"]


def make_report(
    experiment: str,
    scores: MeanAUC,
    n_examples: int,
    seed: int,
    setting: str,
    source: Optional[str] = None,
    target: Optional[str] = None,
    attack: Optional[AttackSpec] = None,
    defense: Optional[DefenseSpec] = None,
    defense_mode: Optional[str] = None,
    sweep_value: Optional[float] = None,
    mean_l2: Optional[float] = None,
    ensemble_weights: Optional[Sequence[float]] = None,
    wall_clock_seconds: Optional[float] = None,
) -> EvalReport:
    return EvalReport(
        experiment=experiment,
        source=source,
        target=target,
        setting=setting,
        defense_mode=defense_mode,
        attack=attack,
        defense=defense,
        sweep_value=sweep_value,
        label_names=scores.label_names,
        per_label_auc=scores.per_label,
        mean_auc=scores.mean,
        excluded_labels=scores.excluded,
        mean_l2=mean_l2,
        n_examples=n_examples,
        seed=seed,
        ensemble_weights=list(ensemble_weights) if ensemble_weights is not None else None,
        wall_clock_seconds=wall_clock_seconds,
    )


def report_to_dict(report: EvalReport, include_timing: bool = False) -> dict:
    exclude = None if include_timing else {"wall_clock_seconds"}
    return report.model_dump(mode="json", exclude=exclude)


def report_to_json(report: EvalReport, include_timing: bool = False) -> str:
    return json.dumps(report_to_dict(report, include_timing), sort_keys=True, indent=2, ensure_ascii=False)


def reports_to_json(reports: Iterable[EvalReport], include_timing: bool = False) -> str:
    payload = [report_to_dict(r, include_timing) for r in reports]
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ";".join(_fmt(v) for v in value)
    return str(getattr(value, "value", value))


def report_row(report: EvalReport) -> dict:
    """Fila plana: eco completo de la especificación + métricas."""
    attack, defense = report.attack, report.defense
    inner = defense.inner_attack if defense is not None else None
    row = {
        "experiment": report.experiment,
        "source": report.source,
        "target": report.target,
        "setting": report.setting,
        "defense_mode": report.defense_mode,
        "sweep_value": report.sweep_value,
        "method": attack.method if attack else None,
        "epsilon": attack.epsilon if attack else None,
        "alpha": attack.alpha if attack else None,
        "iterations": attack.effective_iterations if attack else None,
        "momentum": attack.momentum if attack else None,
        "transform_prob": attack.transform_prob if attack else None,
        "resize_min": attack.resize_min if attack else None,
        "resize_max": attack.resize_max if attack else None,
        "daa_c": attack.daa_c if attack else None,
        "bandwidth_rule": attack.bandwidth_rule if attack else None,
        "random_start": attack.random_start if attack else None,
        "minibatch": attack.minibatch if attack else None,
        "attack_seed": attack.seed if attack else None,
        "lambda": defense.lam if defense else None,
        "inner_method": inner.method if inner else None,
        "inner_epsilon": inner.epsilon if inner else None,
        "inner_iterations": inner.iterations if inner else None,
        "pretrain_epochs": defense.pretrain_epochs if defense else None,
        "deflections": defense.deflections if defense else None,
        "window": defense.window if defense else None,
        "nlm_h": defense.nlm_h if defense else None,
        "nlm_patch": defense.nlm_patch if defense else None,
        "nlm_search": defense.nlm_search if defense else None,
        "defense_seed": defense.seed if defense else None,
        "seed": report.seed,
        "ensemble_weights": report.ensemble_weights,
        "n_examples": report.n_examples,
        "mean_auc": report.mean_auc,
        "mean_l2": report.mean_l2,
        "excluded_labels": report.excluded_labels,
    }
    for name, value in zip(report.label_names, report.per_label_auc):
        row[f"auc_{name}"] = value
    return {key: _fmt(value) for key, value in row.items()}


def reports_to_csv(reports: Sequence[EvalReport]) -> str:
    """CSV con cabecera: columnas de especificación, métricas y AUC por etiqueta."""
    label_columns: List[str] = []
    for report in reports:
        for name in report.label_names:
            column = f"auc_{name}"
            if column not in label_columns:
                label_columns.append(column)
    header = SPEC_COLUMNS + METRIC_COLUMNS + label_columns
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=header, lineterminator="\n")
    writer.writeheader()
    for report in reports:
        writer.writerow({column: report_row(report).get(column, "") for column in header})
    return buffer.getvalue()
