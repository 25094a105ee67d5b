# app/cli.py
"""
CLI del toolkit de robustez.

    python -m app generate-data --out data/synth
    python -m app train --data data/synth.train.axds --val data/synth.val.axds --arch cnn_small --out ckpt/cnn_small.axmd
    python -m app advtrain --data ... --arch cnn_small --out ckpt/cnn_small_adv.axmd
    python -m app attack --model ckpt/cnn_small.axmd --data data/synth.test.axds --attack pgd --eps 0.3
    python -m app defend-eval --model ckpt/cnn_small.axmd --data data/synth.test.axds --mode pdt
    python -m app matrix --data data/synth.test.axds --model cnn_small=ckpt/cnn_small.axmd ...
    python -m app ensemble | sweep {iters|eps|defense} | transfer {advtrain|pdt}

`--config` recibe un JSON con secciones opcionales `synthetic`, `train`,
`attack`, `defense` y `plan`; sus valores tienen prioridad sobre los flags.

Códigos de salida: 0 éxito, 2 plan inválido, 3 aborto en ejecución.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from dotenv import load_dotenv
from pydantic import ValidationError

from app.attacks.batch_io import AdversarialBatch, read_adversarial_batch, write_adversarial_batch
from app.attacks.runner import run_attack
from app.classifiers.architectures import ARCHITECTURES, build_model
from app.classifiers.checkpoint import load_model, save_model
from app.classifiers.training import predict_logits, train
from app.config import settings
from app.data.dataset import Dataset, resolve_labels, split_dataset
from app.data.dataset_io import read_dataset, write_dataset
from app.data.synthetic import generate_synthetic
from app.defenses.adversarial_training import adversarial_train
from app.defenses.pipeline import defend_combined, defend_pdt, load_bundle, save_bundle, sidecar_path
from app.errors import AxrxError, PlanValidationError
from app.experiments.protocols import run_plan
from app.metrics.auc import mean_auc
from app.metrics.distance import l2_distance
from app.metrics.report import make_report, report_to_json
from app.models.schemas import (
    AttackMethod,
    AttackSpec,
    DefenseSpec,
    ExperimentKind,
    ExperimentPlan,
    SyntheticConfig,
    TrainConfig,
    default_attack_methods,
)

logger = logging.getLogger("app.cli")

SWEEP_KINDS = {"iters": ExperimentKind.ITER_SWEEP, "eps": ExperimentKind.EPS_SWEEP, "defense": ExperimentKind.DEFENSE_SWEEP}
TRANSFER_KINDS = {"advtrain": ExperimentKind.ADVTRAIN_TRANSFER, "pdt": ExperimentKind.PDT_TRANSFER}


def configure_logging(level: Optional[str] = None) -> None:
    logging.basicConfig(
        level=(level or settings.LOG_LEVEL).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


# =============================================================================
# Construcción de specs: flags + overlay JSON
# =============================================================================

def _load_config(path: Optional[str]) -> Dict[str, Any]:
    if path is None:
        return {}
    config_path = Path(path)
    if not config_path.is_file():
        raise PlanValidationError(f"❌ archivo de configuración no encontrado: {path}")
    try:
        return json.loads(config_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise PlanValidationError(f"❌ configuración JSON inválida: {e}") from e


def _overlay(flags: Dict[str, Any], config: Dict[str, Any], section: str) -> Dict[str, Any]:
    values = {key: value for key, value in flags.items() if value is not None}
    values.update(config.get(section, {}))
    return values


def attack_from_args(args, config: Dict[str, Any], method: Optional[str] = None) -> AttackSpec:
    flags = {
        "method": method or getattr(args, "attack", None),
        "epsilon": args.eps,
        "iterations": args.iters,
        "step_size": args.step_size,
        "momentum": args.momentum,
        "transform_prob": args.p,
        "resize_min": args.resize_min,
        "resize_max": args.resize_max,
        "daa_c": args.daa_c,
        "bandwidth": args.bandwidth,
        "minibatch": args.minibatch,
        "random_start": False if args.no_random_start else None,
        "seed": args.seed,
    }
    return AttackSpec.model_validate(_overlay(flags, config, "attack"))


def defense_from_args(args, config: Dict[str, Any], inner: Optional[AttackSpec] = None) -> DefenseSpec:
    flags = {
        "lam": args.lam,
        "pretrain_epochs": args.pretrain_epochs,
        "deflections": args.deflections,
        "window": args.window,
        "nlm_h": args.nlm_h,
        "nlm_patch": args.nlm_patch,
        "nlm_search": args.nlm_search,
        "seed": args.defense_seed,
        "inner_attack": inner,
    }
    return DefenseSpec.model_validate(_overlay(flags, config, "defense"))


def train_from_args(args, config: Dict[str, Any]) -> TrainConfig:
    flags = {
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "learning_rate": args.lr,
        "patience": args.patience,
        "seed": args.seed,
    }
    values = _overlay(flags, config, "train")
    if args.no_early_stop:
        values["patience"] = None
    return TrainConfig.model_validate(values)


def _read_resolved(path: str, split: str) -> Dataset:
    if not Path(path).is_file():
        raise PlanValidationError(f"❌ dataset no encontrado: {path}")
    dataset = read_dataset(path, split=split)
    return dataset if dataset.is_resolved else resolve_labels(dataset)


def _load_checkpoint(path: str):
    if not Path(path).is_file():
        raise PlanValidationError(f"❌ checkpoint no encontrado: {path}")
    return load_model(path)


def _parse_models(pairs: Sequence[str]) -> Dict[str, str]:
    models = {}
    for pair in pairs or []:
        name, sep, path = pair.partition("=")
        if not sep:
            name, path = Path(pair).stem, pair
        models[name] = path
    return models


# =============================================================================
# Verbos
# =============================================================================

def cmd_generate_data(args) -> int:
    config = _load_config(args.config)
    flags = {
        "n": args.n, "side": args.side, "num_labels": args.labels, "seed": args.seed,
        "uncertainty_rate": args.uncertainty_rate, "noise": args.noise,
    }
    synthetic = SyntheticConfig.model_validate(_overlay(flags, config, "synthetic"))
    dataset = generate_synthetic(synthetic)
    for name, part in split_dataset(dataset, seed=synthetic.seed).items():
        path = Path(f"{args.out}.{name}.axds")
        write_dataset(part, path)
        logger.info("✅ %s: %d ejemplos -> %s", name, part.size, path)
    return 0


def cmd_train(args) -> int:
    config = _load_config(args.config)
    train_config = train_from_args(args, config)
    dataset = _read_resolved(args.data, "train")
    validation = _read_resolved(args.val, "val") if args.val else None
    model = build_model(args.arch, dataset.side, dataset.num_labels, seed=train_config.seed)
    result = train(model, dataset, train_config, validation)
    out = args.out or f"{settings.CHECKPOINT_DIR}/{args.arch}.axmd"
    save_model(result.model, out)
    logger.info("✅ Modelo guardado en %s (mejor época %s)", out, result.history.best_epoch)
    return 0


def cmd_advtrain(args) -> int:
    config = _load_config(args.config)
    train_config = train_from_args(args, config)
    inner = attack_from_args(args, config, method=args.attack or AttackMethod.PGD.value) if _has_attack_flags(args) else None
    defense = defense_from_args(args, config, inner)
    dataset = _read_resolved(args.data, "train")
    validation = _read_resolved(args.val, "val") if args.val else None
    model = build_model(args.arch, dataset.side, dataset.num_labels, seed=train_config.seed)
    result = adversarial_train(model, dataset, defense, train_config, validation)
    save_bundle(result.model, defense, args.out or f"{settings.CHECKPOINT_DIR}/{args.arch}_adv.axmd")
    return 0


def _has_attack_flags(args) -> bool:
    return any(getattr(args, name) is not None for name in ("attack", "eps", "iters", "step_size"))


def cmd_attack(args) -> int:
    config = _load_config(args.config)
    spec = attack_from_args(args, config)
    model = _load_checkpoint(args.model)
    dataset = _read_resolved(args.data, "test").head(args.max_examples)
    labels = dataset.binary_labels()
    adversarial = run_attack(model, dataset.images, labels, spec, indices=dataset.indices, workers=args.workers)
    if args.out:
        write_adversarial_batch(AdversarialBatch(spec, dataset.indices, adversarial), args.out)
        logger.info("✅ Lote adversarial guardado en %s", args.out)
    scores = mean_auc(predict_logits(model, adversarial), labels, dataset.label_names)
    report = make_report(
        "attack", scores, dataset.size, spec.seed, "white_box",
        source=args.model, target=args.model, attack=spec, mean_l2=l2_distance(dataset.images, adversarial),
    )
    print(report_to_json(report))
    return 0


def cmd_defend_eval(args) -> int:
    config = _load_config(args.config)
    model_path = args.model
    if sidecar_path(model_path).exists() and not _has_defense_flags(args) and "defense" not in config:
        model, defense = load_bundle(model_path)
    else:
        model, defense = _load_checkpoint(model_path), defense_from_args(args, config)
    dataset = _read_resolved(args.data, "test").head(args.max_examples)
    labels = dataset.binary_labels()

    images, indices, attack, setting = dataset.images, dataset.indices, None, "clean"
    if args.adv_batch:
        batch = read_adversarial_batch(args.adv_batch)
        rows = {int(index): row for row, index in enumerate(dataset.indices)}
        missing = [int(i) for i in batch.indices if int(i) not in rows]
        if missing:
            raise PlanValidationError(f"❌ el lote adversarial referencia ejemplos ausentes: {missing[:5]}")
        order = [rows[int(i)] for i in batch.indices]
        labels, indices = labels[order], dataset.indices[order]
        images, attack, setting = batch.images, batch.spec, "defended"

    if args.mode == "advtrain":
        logits = predict_logits(model, images)
    elif args.mode == "combined":
        logits = defend_combined(model, images, defense, indices)
    else:
        logits = defend_pdt(model, images, defense, indices)
    scores = mean_auc(logits, labels, dataset.label_names)
    report = make_report(
        "defend_eval", scores, int(labels.shape[0]), defense.seed, setting,
        target=model_path, attack=attack, defense=defense, defense_mode=args.mode,
    )
    print(report_to_json(report))
    return 0


def _has_defense_flags(args) -> bool:
    names = ("lam", "pretrain_epochs", "deflections", "window", "nlm_h", "nlm_patch", "nlm_search", "defense_seed")
    return any(getattr(args, name) is not None for name in names)


def plan_from_args(args, kind: ExperimentKind) -> ExperimentPlan:
    config = _load_config(args.config)
    methods: List[str] = args.attacks or [method.value for method in default_attack_methods(kind)]
    attacks = [attack_from_args(args, config, method=method) for method in methods]
    flags = {
        "kind": kind,
        "dataset": args.data,
        "models": _parse_models(args.model),
        "adv_model": args.adv_model,
        "sources": args.sources,
        "targets": args.targets,
        "attacks": attacks,
        "iterations": args.iterations,
        "epsilons": args.epsilons,
        "defense": defense_from_args(args, config),
        "seeds": args.seeds,
        "max_examples": args.max_examples,
        "output": args.out,
        "workers": args.workers,
        "eps_sweep_iterations": args.eps_sweep_iters,
        "include_clean": False if args.no_clean else None,
    }
    return ExperimentPlan.model_validate(_overlay(flags, config, "plan"))


def cmd_plan(kind: ExperimentKind):
    def run(args) -> int:
        plan = plan_from_args(args, kind)
        reports = run_plan(plan)
        logger.info("✅ %s: %d reportes", kind.value, len(reports))
        return 0

    return run


# =============================================================================
# Parser
# =============================================================================

def _attack_flags(parser: argparse.ArgumentParser, multi: bool = False) -> None:
    methods = [m.value for m in AttackMethod]
    if multi:
        parser.add_argument("--attack", dest="attacks", action="append", choices=methods,
                            help="Método de ataque (repetible)")
    else:
        parser.add_argument("--attack", choices=methods, help="Método de ataque")
    parser.add_argument("--eps", type=float, help="Radio L∞ ε")
    parser.add_argument("--iters", type=int, help="Iteraciones T")
    parser.add_argument("--step-size", type=float, help="Paso α (por defecto 2.5·ε/T)")
    parser.add_argument("--momentum", type=float, help="μ de MIFGSM")
    parser.add_argument("--p", type=float, help="Probabilidad de transformación de DII-FGSM")
    parser.add_argument("--resize-min", type=float)
    parser.add_argument("--resize-max", type=float)
    parser.add_argument("--daa-c", type=float, help="Coeficiente c de DAA")
    parser.add_argument("--bandwidth", type=float, help="Ancho fijo del kernel DAA")
    parser.add_argument("--minibatch", type=int, help="Tamaño M del minibatch de ataque")
    parser.add_argument("--no-random-start", action="store_true", help="PGD sin inicio aleatorio (FGSM iterativo)")


def _defense_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lam", type=float, help="Peso λ de la pérdida limpia")
    parser.add_argument("--pretrain-epochs", type=int)
    parser.add_argument("--deflections", type=int, help="Deflexiones K de PDT")
    parser.add_argument("--window", type=int, help="Radio r de la ventana de deflexión")
    parser.add_argument("--nlm-h", type=float)
    parser.add_argument("--nlm-patch", type=int)
    parser.add_argument("--nlm-search", type=int)
    parser.add_argument("--defense-seed", type=int)


def _train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True, help="Dataset de entrenamiento (.axds)")
    parser.add_argument("--val", help="Dataset de validación para early stop")
    parser.add_argument("--arch", required=True, choices=sorted(ARCHITECTURES))
    parser.add_argument("--out", help="Ruta del checkpoint (por defecto CHECKPOINT_DIR/<arch>.axmd)")
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--patience", type=int)
    parser.add_argument("--no-early-stop", action="store_true")


def _plan_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", help="Dataset de evaluación (.axds)")
    parser.add_argument("--model", action="append", help="nombre=ruta de checkpoint (repetible)")
    parser.add_argument("--adv-model", help="Checkpoint con entrenamiento adversarial")
    parser.add_argument("--sources", nargs="+")
    parser.add_argument("--targets", nargs="+")
    parser.add_argument("--iterations", type=int, nargs="+", help="Rejilla de T")
    parser.add_argument("--epsilons", type=float, nargs="+", help="Rejilla de ε")
    parser.add_argument("--eps-sweep-iters", type=int, help="T fijo del barrido de ε")
    parser.add_argument("--seeds", type=int, nargs="+")
    parser.add_argument("--out", help="CSV de salida; el JSON se escribe al lado")
    parser.add_argument("--no-clean", action="store_true", help="Omite las filas de AUC limpia")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="axrx", description="Ataques adversariales y defensas multi-etiqueta")
    parser.add_argument("--log-level", help="Nivel de logging (por defecto LOG_LEVEL)")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON con secciones synthetic/train/attack/defense/plan")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int, help="Workers (por defecto AXRX_WORKERS)")
    common.add_argument("--max-examples", type=int)
    verbs = parser.add_subparsers(dest="verb", required=True)

    p = verbs.add_parser("generate-data", parents=[common], help="Genera el dataset sintético en tres particiones")
    p.add_argument("--out", required=True, help="Prefijo: escribe <out>.{train,val,test}.axds")
    p.add_argument("--n", type=int)
    p.add_argument("--side", type=int)
    p.add_argument("--labels", type=int)
    p.add_argument("--uncertainty-rate", type=float)
    p.add_argument("--noise", type=float)
    p.set_defaults(handler=cmd_generate_data)

    p = verbs.add_parser("train", parents=[common], help="Entrenamiento estándar")
    _train_flags(p)
    p.set_defaults(handler=cmd_train)

    p = verbs.add_parser("advtrain", parents=[common], help="Entrenamiento adversarial (guarda bundle)")
    _train_flags(p)
    _attack_flags(p)
    _defense_flags(p)
    p.set_defaults(handler=cmd_advtrain)

    p = verbs.add_parser("attack", parents=[common], help="Genera un lote adversarial")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="Archivo .axad de salida")
    _attack_flags(p)
    p.set_defaults(handler=cmd_attack)

    p = verbs.add_parser("defend-eval", parents=[common], help="Evalúa un modelo defendido")
    p.add_argument("--model", required=True, help="Checkpoint o bundle")
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=["pdt", "combined", "advtrain"], default="pdt")
    p.add_argument("--adv-batch", help="Lote .axad a evaluar en lugar de las imágenes limpias")
    _defense_flags(p)
    p.set_defaults(handler=cmd_defend_eval)

    def plan_verb(name: str, kind: ExperimentKind, help_text: str, target=verbs):
        sub = target.add_parser(name, parents=[common], help=help_text)
        _plan_flags(sub)
        _attack_flags(sub, multi=True)
        _defense_flags(sub)
        sub.set_defaults(handler=cmd_plan(kind))
        return sub

    plan_verb("matrix", ExperimentKind.TRANSFER_MATRIX, "Matriz de transferencia fuente × objetivo")
    plan_verb("ensemble", ExperimentKind.ENSEMBLE_HOLDOUT, "Ensemble en logits contra modelo excluido")

    sweep = verbs.add_parser("sweep", help="Barridos de T, ε o defensas").add_subparsers(dest="sweep", required=True)
    for name, kind in SWEEP_KINDS.items():
        plan_verb(name, kind, f"Barrido {name}", target=sweep)

    transfer = verbs.add_parser("transfer", help="Transferencia contra modelos defendidos").add_subparsers(
        dest="transfer", required=True
    )
    for name, kind in TRANSFER_KINDS.items():
        plan_verb(name, kind, f"Transferencia contra {name}", target=transfer)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except ValidationError as e:
        logger.error("❌ Configuración inválida:\n%s", e)
        return 2
    except AxrxError as e:
        logger.error("%s", e)
        return e.exit_code
    except FileNotFoundError as e:
        logger.error("❌ Archivo no encontrado: %s", e)
        return 2


if __name__ == "__main__":
    sys.exit(main())
