# app/experiments/protocols.py
"""
Protocolos de evaluación de robustez.

    transfer_matrix    fuente × método × objetivo (diagonal = caja blanca)
    ensemble_holdout   ensemble en logits de K-1 modelos contra el modelo excluido
    iter_sweep         AUC contra número de iteraciones T
    eps_sweep          AUC y distancia L2 contra ε con T fijo
    defense_sweep      AdvTrain, PDT y combinada contra ε
    advtrain_transfer  ataques sobre el modelo con entrenamiento adversarial
    pdt_transfer       ataques transferidos contra modelos con PDT

Cada ejemplo adversarial se genera una sola vez por (fuente, ataque, semilla)
y se evalúa en todos los objetivos de la celda.
"""

from __future__ import annotations

import logging
import re
from typing import Callable, Dict, List, Optional

import numpy as np

from app.attacks import runner as attack_runner
from app.classifiers.architectures import LogitModel
from app.classifiers.ensemble import EnsembleModel
from app.classifiers.training import predict_logits
from app.defenses.pipeline import defend_combined, defend_pdt
from app.experiments.context import ExperimentContext, load_context
from app.experiments.runner import Cell, execute_cells
from app.metrics.auc import MeanAUC, mean_auc
from app.metrics.distance import l2_distance
from app.metrics.report import make_report
from app.models.schemas import AttackSpec, DefenseSpec, EvalReport, ExperimentKind, ExperimentPlan

logger = logging.getLogger(__name__)

ADV_NAME = "adv_model"


def _slug(*parts) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", "-".join(str(p) for p in parts))


def _keyed(cells: List[tuple]) -> List[Cell]:
    return [Cell(key=f"{i:04d}-{_slug(*label)}", run=run) for i, (label, run) in enumerate(cells)]


def _craft(ctx: ExperimentContext, model: LogitModel, spec: AttackSpec) -> np.ndarray:
    # Resuelto vía el módulo en cada llamada
    return attack_runner.run_attack(model, ctx.images, ctx.labels, spec, indices=ctx.indices, workers=1)


def _score(ctx: ExperimentContext, logits: np.ndarray) -> MeanAUC:
    return mean_auc(logits, ctx.labels, ctx.dataset.label_names)


def _evaluate(ctx: ExperimentContext, model: LogitModel, images: np.ndarray) -> MeanAUC:
    return _score(ctx, predict_logits(model, images))


def _box(source: str, target: str) -> str:
    return "white_box" if source == target else "black_box"


def _seeded_attack(spec: AttackSpec, seed: int, **updates) -> AttackSpec:
    return spec.model_copy(update={"seed": seed, **updates})


def _seeded_defense(spec: DefenseSpec, seed: int) -> DefenseSpec:
    return spec.model_copy(update={"seed": seed})


def _clean_cell(ctx: ExperimentContext, experiment: str, name: str, model: LogitModel, **extra):
    def run() -> List[EvalReport]:
        scores = _evaluate(ctx, model, ctx.images)
        return [make_report(experiment, scores, ctx.dataset.size, ctx.plan.seeds[0], "clean", target=name, **extra)]

    return ("clean", name), run


def _finish(ctx: ExperimentContext, cells: List[tuple]) -> List[EvalReport]:
    return execute_cells(_keyed(cells), ctx.plan.output, ctx.plan.workers)


# =============================================================================
# Matrices de transferencia
# =============================================================================

def run_transfer_matrix(plan: ExperimentPlan, context: Optional[ExperimentContext] = None) -> List[EvalReport]:
    """Genera en cada fuente y evalúa en todos los objetivos."""
    ctx = context or load_context(plan)
    experiment = ExperimentKind.TRANSFER_MATRIX.value
    targets = plan.target_names()
    cells = []
    if plan.include_clean:
        cells += [_clean_cell(ctx, experiment, t, ctx.models[t]) for t in targets]

    for source in plan.source_names():
        for attack in plan.attacks:
            for seed in plan.seeds:
                spec = _seeded_attack(attack, seed)

                def run(source=source, spec=spec, seed=seed) -> List[EvalReport]:
                    adversarial = _craft(ctx, ctx.models[source], spec)
                    distance = l2_distance(ctx.images, adversarial)
                    return [
                        make_report(
                            experiment, _evaluate(ctx, ctx.models[t], adversarial), ctx.dataset.size, seed,
                            _box(source, t), source=source, target=t, attack=spec, mean_l2=distance,
                        )
                        for t in targets
                    ]

                cells.append(((source, spec.method.value, seed), run))
    return _finish(ctx, cells)


def run_ensemble_holdout(plan: ExperimentPlan, context: Optional[ExperimentContext] = None) -> List[EvalReport]:
    """Para cada modelo excluido: ataque sobre el ensemble uniforme del resto."""
    ctx = context or load_context(plan)
    experiment = ExperimentKind.ENSEMBLE_HOLDOUT.value
    pool = plan.source_names()
    cells = []
    for holdout in pool:
        members = [name for name in pool if name != holdout]
        ensemble = EnsembleModel([ctx.models[name] for name in members])
        ensemble_name = "ensemble:" + "+".join(members)
        weights = ensemble.weights
        if plan.include_clean:
            cells.append(_clean_cell(ctx, experiment, ensemble_name, ensemble, ensemble_weights=weights))
            cells.append(_clean_cell(ctx, experiment, holdout, ctx.models[holdout]))

        for attack in plan.attacks:
            for seed in plan.seeds:
                spec = _seeded_attack(attack, seed)

                def run(holdout=holdout, ensemble=ensemble, ensemble_name=ensemble_name, spec=spec, seed=seed):
                    adversarial = _craft(ctx, ensemble, spec)
                    distance = l2_distance(ctx.images, adversarial)
                    common = dict(source=ensemble_name, attack=spec, mean_l2=distance, ensemble_weights=ensemble.weights)
                    return [
                        make_report(experiment, _evaluate(ctx, ensemble, adversarial), ctx.dataset.size, seed,
                                    "ensemble", target=ensemble_name, **common),
                        make_report(experiment, _evaluate(ctx, ctx.models[holdout], adversarial), ctx.dataset.size, seed,
                                    "holdout", target=holdout, **common),
                    ]

                cells.append(((holdout, spec.method.value, seed), run))
    return _finish(ctx, cells)


# =============================================================================
# Barridos
# =============================================================================

def run_iter_sweep(plan: ExperimentPlan, context: Optional[ExperimentContext] = None) -> List[EvalReport]:
    """AUC de caja blanca y negra para cada T de la rejilla."""
    ctx = context or load_context(plan)
    experiment = ExperimentKind.ITER_SWEEP.value
    targets = plan.target_names()
    cells = []
    for source in plan.source_names():
        for iterations in plan.iterations:
            for attack in plan.attacks:
                for seed in plan.seeds:
                    spec = _seeded_attack(attack, seed, iterations=iterations)

                    def run(source=source, spec=spec, seed=seed, iterations=iterations):
                        adversarial = _craft(ctx, ctx.models[source], spec)
                        distance = l2_distance(ctx.images, adversarial)
                        return [
                            make_report(
                                experiment, _evaluate(ctx, ctx.models[t], adversarial), ctx.dataset.size, seed,
                                _box(source, t), source=source, target=t, attack=spec,
                                sweep_value=float(iterations), mean_l2=distance,
                            )
                            for t in targets
                        ]

                    cells.append(((source, f"T{iterations}", spec.method.value, seed), run))
    return _finish(ctx, cells)


def run_eps_sweep(plan: ExperimentPlan, context: Optional[ExperimentContext] = None) -> List[EvalReport]:
    """AUC de caja blanca y distancia L2 media para cada ε, con T fijo."""
    ctx = context or load_context(plan)
    experiment = ExperimentKind.EPS_SWEEP.value
    cells = []
    for source in plan.source_names():
        for epsilon in plan.epsilons:
            for attack in plan.attacks:
                for seed in plan.seeds:
                    spec = _seeded_attack(attack, seed, epsilon=epsilon, iterations=plan.eps_sweep_iterations)

                    def run(source=source, spec=spec, seed=seed, epsilon=epsilon):
                        adversarial = _craft(ctx, ctx.models[source], spec)
                        return [
                            make_report(
                                experiment, _evaluate(ctx, ctx.models[source], adversarial), ctx.dataset.size, seed,
                                "white_box", source=source, target=source, attack=spec,
                                sweep_value=float(epsilon), mean_l2=l2_distance(ctx.images, adversarial),
                            )
                        ]

                    cells.append(((source, f"eps{epsilon}", spec.method.value, seed), run))
    return _finish(ctx, cells)


def run_defense_sweep(plan: ExperimentPlan, context: Optional[ExperimentContext] = None) -> List[EvalReport]:
    """
    Tres series contra ε:

        advtrain  caja blanca sobre el modelo con entrenamiento adversarial
        pdt       generado y evaluado en el modelo estándar con PDT
        combined  generado en el modelo estándar, evaluado en el adversarial con PDT
    """
    ctx = context or load_context(plan)
    experiment = ExperimentKind.DEFENSE_SWEEP.value
    standard_name = plan.source_names()[0]
    standard, adv = ctx.models[standard_name], ctx.adv_model
    cells = []

    if plan.include_clean:
        defense = _seeded_defense(plan.defense, plan.seeds[0])

        def clean() -> List[EvalReport]:
            n, seed = ctx.dataset.size, plan.seeds[0]
            return [
                make_report(experiment, _evaluate(ctx, adv, ctx.images), n, seed, "clean",
                            target=ADV_NAME, defense=plan.defense, defense_mode="advtrain"),
                make_report(experiment, _score(ctx, defend_pdt(standard, ctx.images, defense, ctx.indices)), n, seed,
                            "clean", target=standard_name, defense=defense, defense_mode="pdt"),
                make_report(experiment, _score(ctx, defend_combined(adv, ctx.images, defense, ctx.indices)), n, seed,
                            "clean", target=ADV_NAME, defense=defense, defense_mode="combined"),
            ]

        cells.append((("clean", "defenses"), clean))

    for epsilon in plan.epsilons:
        for attack in plan.attacks:
            for seed in plan.seeds:
                spec = _seeded_attack(attack, seed, epsilon=epsilon)
                defense = _seeded_defense(plan.defense, seed)

                def run(spec=spec, defense=defense, seed=seed, epsilon=epsilon):
                    n = ctx.dataset.size
                    on_adv = _craft(ctx, adv, spec)
                    on_standard = _craft(ctx, standard, spec)
                    common = dict(attack=spec, sweep_value=float(epsilon))
                    return [
                        make_report(experiment, _evaluate(ctx, adv, on_adv), n, seed, "defended",
                                    source=ADV_NAME, target=ADV_NAME, defense=plan.defense, defense_mode="advtrain",
                                    mean_l2=l2_distance(ctx.images, on_adv), **common),
                        make_report(experiment, _score(ctx, defend_pdt(standard, on_standard, defense, ctx.indices)),
                                    n, seed, "defended", source=standard_name, target=standard_name,
                                    defense=defense, defense_mode="pdt",
                                    mean_l2=l2_distance(ctx.images, on_standard), **common),
                        make_report(experiment, _score(ctx, defend_combined(adv, on_standard, defense, ctx.indices)),
                                    n, seed, "defended", source=standard_name, target=ADV_NAME,
                                    defense=defense, defense_mode="combined",
                                    mean_l2=l2_distance(ctx.images, on_standard), **common),
                    ]

                cells.append(((f"eps{epsilon}", spec.method.value, seed), run))
    return _finish(ctx, cells)


# =============================================================================
# Transferencia contra modelos defendidos
# =============================================================================

def _defense_budget(plan: ExperimentPlan, attack: AttackSpec, seed: int) -> AttackSpec:
    inner = plan.defense.inner_attack
    return _seeded_attack(attack, seed, epsilon=inner.epsilon, iterations=inner.iterations)


def run_advtrain_transfer(plan: ExperimentPlan, context: Optional[ExperimentContext] = None) -> List[EvalReport]:
    """Objetivo: el modelo adversarial; fuentes: él mismo y los modelos estándar."""
    ctx = context or load_context(plan)
    experiment = ExperimentKind.ADVTRAIN_TRANSFER.value
    adv = ctx.adv_model
    sources = {ADV_NAME: adv, **{name: ctx.models[name] for name in plan.source_names()}}
    cells = []
    if plan.include_clean:
        cells.append(_clean_cell(ctx, experiment, ADV_NAME, adv, defense=plan.defense, defense_mode="advtrain"))

    for source, model in sources.items():
        for attack in plan.attacks:
            for seed in plan.seeds:
                spec = _defense_budget(plan, attack, seed)

                def run(source=source, model=model, spec=spec, seed=seed):
                    adversarial = _craft(ctx, model, spec)
                    return [
                        make_report(
                            experiment, _evaluate(ctx, adv, adversarial), ctx.dataset.size, seed,
                            _box(source, ADV_NAME), source=source, target=ADV_NAME, attack=spec,
                            defense=plan.defense, defense_mode="advtrain",
                            mean_l2=l2_distance(ctx.images, adversarial),
                        )
                    ]

                cells.append(((source, spec.method.value, seed), run))
    return _finish(ctx, cells)


def run_pdt_transfer(plan: ExperimentPlan, context: Optional[ExperimentContext] = None) -> List[EvalReport]:
    """Genera en cada fuente estándar y evalúa cada objetivo bajo PDT."""
    ctx = context or load_context(plan)
    experiment = ExperimentKind.PDT_TRANSFER.value
    targets = plan.target_names()
    cells = []
    if plan.include_clean:
        defense = _seeded_defense(plan.defense, plan.seeds[0])
        for target in targets:
            def clean(target=target) -> List[EvalReport]:
                scores = _score(ctx, defend_pdt(ctx.models[target], ctx.images, defense, ctx.indices))
                return [make_report(experiment, scores, ctx.dataset.size, plan.seeds[0], "clean",
                                    target=target, defense=defense, defense_mode="pdt")]

            cells.append((("clean", target), clean))

    for source in plan.source_names():
        for attack in plan.attacks:
            for seed in plan.seeds:
                spec = _defense_budget(plan, attack, seed)
                defense = _seeded_defense(plan.defense, seed)

                def run(source=source, spec=spec, defense=defense, seed=seed):
                    adversarial = _craft(ctx, ctx.models[source], spec)
                    distance = l2_distance(ctx.images, adversarial)
                    return [
                        make_report(
                            experiment, _score(ctx, defend_pdt(ctx.models[t], adversarial, defense, ctx.indices)),
                            ctx.dataset.size, seed, _box(source, t), source=source, target=t, attack=spec,
                            defense=defense, defense_mode="pdt", mean_l2=distance,
                        )
                        for t in targets
                    ]

                cells.append(((source, spec.method.value, seed), run))
    return _finish(ctx, cells)


PROTOCOLS: Dict[ExperimentKind, Callable[[ExperimentPlan, Optional[ExperimentContext]], List[EvalReport]]] = {
    ExperimentKind.TRANSFER_MATRIX: run_transfer_matrix,
    ExperimentKind.ENSEMBLE_HOLDOUT: run_ensemble_holdout,
    ExperimentKind.ITER_SWEEP: run_iter_sweep,
    ExperimentKind.EPS_SWEEP: run_eps_sweep,
    ExperimentKind.DEFENSE_SWEEP: run_defense_sweep,
    ExperimentKind.ADVTRAIN_TRANSFER: run_advtrain_transfer,
    ExperimentKind.PDT_TRANSFER: run_pdt_transfer,
}


def run_plan(plan: ExperimentPlan) -> List[EvalReport]:
    """Valida, carga y ejecuta un plan completo."""
    context = load_context(plan)
    logger.info("🔄 Experimento %s con semillas %s", plan.kind.value, plan.seeds)
    return PROTOCOLS[plan.kind](plan, context)
