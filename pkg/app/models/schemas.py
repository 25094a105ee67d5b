# app/models/schemas.py
"""
Esquemas Pydantic: hiperparámetros de ataques, defensas, entrenamiento,
datos sintéticos, planes de experimento, reportes y request/response HTTP.
"""

from __future__ import annotations

from datetime import datetime
from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.config import settings


# =============================================================================
# Ataques
# =============================================================================

class AttackMethod(str, Enum):
    """Métodos de ataque L∞ por paso de signo."""

    FGSM = "fgsm"
    PGD = "pgd"
    MIFGSM = "mifgsm"
    DAA = "daa"
    DII_FGSM = "dii-fgsm"


# Byte del método en el formato de lote adversarial
METHOD_TAGS: Dict[AttackMethod, int] = {
    AttackMethod.FGSM: 0,
    AttackMethod.PGD: 1,
    AttackMethod.MIFGSM: 2,
    AttackMethod.DAA: 3,
    AttackMethod.DII_FGSM: 4,
}


class AttackSpec(BaseModel):
    """Todos los hiperparámetros de un ataque."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    method: AttackMethod = Field(AttackMethod.PGD, description="Método de ataque")
    epsilon: float = Field(0.3, ge=0, description="Radio L∞ en unidades de píxel")
    iterations: int = Field(10, ge=1, description="Iteraciones T (FGSM fuerza T=1)")
    step_size: Optional[float] = Field(
        None, gt=0, description="Paso α; por defecto 2.5·ε/T (FGSM usa ε)"
    )
    momentum: float = Field(1.0, ge=0, description="μ de MIFGSM")
    transform_prob: float = Field(0.5, ge=0, le=1, description="p de DII-FGSM")
    resize_min: float = Field(0.9, gt=0, le=1, description="Escala mínima de DII-FGSM")
    resize_max: float = Field(1.0, gt=0, le=1, description="Escala máxima (exclusiva salvo min=max)")
    daa_c: float = Field(0.1, ge=0, description="Coeficiente c del acoplamiento DAA")
    bandwidth: Optional[float] = Field(
        None, gt=0, description="Ancho h del kernel RBF; None = heurística de la mediana"
    )
    minibatch: int = Field(
        default_factory=lambda: settings.ATTACK_MINIBATCH, ge=1,
        description="Tamaño M del minibatch (acoplamiento DAA y chunking)",
    )
    random_start: bool = Field(True, description="Inicio aleatorio uniforme de PGD")
    seed: int = Field(0, ge=0, description="Semilla de los streams por ejemplo")

    @model_validator(mode="after")
    def _check_resize_range(self) -> "AttackSpec":
        if self.resize_min > self.resize_max:
            raise ValueError("resize_min debe ser <= resize_max")
        return self

    @property
    def effective_iterations(self) -> int:
        return 1 if self.method == AttackMethod.FGSM else self.iterations

    @property
    def alpha(self) -> float:
        """Paso efectivo α."""
        if self.method == AttackMethod.FGSM:
            return self.epsilon
        if self.step_size is not None:
            return self.step_size
        return 2.5 * self.epsilon / self.iterations

    @property
    def bandwidth_rule(self) -> str:
        return "median" if self.bandwidth is None else f"fixed:{self.bandwidth!r}"


# =============================================================================
# Entrenamiento y defensas
# =============================================================================

class TrainConfig(BaseModel):
    """Configuración del bucle de entrenamiento con Adam."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    epochs: int = Field(30, ge=0, description="Épocas totales (incluye pre-entrenamiento limpio)")
    batch_size: int = Field(64, ge=1)
    learning_rate: float = Field(1e-4, ge=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    adam_eps: float = Field(1e-8, gt=0)
    patience: Optional[int] = Field(5, ge=1, description="Paciencia del early stop; None lo desactiva")
    seed: int = Field(0, ge=0)


def _default_inner_attack() -> AttackSpec:
    return AttackSpec(method=AttackMethod.PGD, epsilon=4 / 255, iterations=10)


class DefenseSpec(BaseModel):
    """Configuración de entrenamiento adversarial y de PDT."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    lam: float = Field(0.6, ge=0, le=1, description="Peso λ de la pérdida limpia")
    inner_attack: AttackSpec = Field(default_factory=_default_inner_attack)
    pretrain_epochs: int = Field(6, ge=0, description="Épocas de pre-entrenamiento limpio")
    deflections: int = Field(100, ge=0, description="Número de deflexiones K")
    window: int = Field(10, ge=0, description="Radio r de la ventana de deflexión")
    nlm_h: float = Field(0.1, ge=0, description="Fuerza h del NLM; 0 desactiva el denoise")
    nlm_patch: int = Field(3, ge=1, description="Lado del parche NLM (impar)")
    nlm_search: int = Field(11, ge=1, description="Lado de la ventana de búsqueda NLM (impar)")
    seed: int = Field(0, ge=0, description="Semilla de los streams de deflexión")

    @field_validator("nlm_patch", "nlm_search")
    @classmethod
    def _odd(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError("el tamaño debe ser impar")
        return value


# =============================================================================
# Datos
# =============================================================================

DEFAULT_LABEL_NAMES: List[str] = [
    "No Finding",
    "Atelectasis",
    "Cardiomegaly",
    "Consolidation",
    "Edema",
    "Pleural Effusion",
]


class SyntheticConfig(BaseModel):
    """Parámetros del generador sintético multi-etiqueta."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(4000, ge=1)
    side: int = Field(default_factory=lambda: settings.IMAGE_SIDE, ge=4)
    num_labels: int = Field(default_factory=lambda: settings.NUM_LABELS, ge=2)
    seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED, ge=0)
    uncertainty_rate: float = Field(0.1, ge=0, le=1)
    noise: float = Field(0.05, ge=0)
    correlation: float = Field(0.3, ge=0, lt=1, description="Correlación latente entre etiquetas")
    prevalence: float = Field(0.4, gt=0, lt=1)
    signal: float = Field(0.35, gt=0, description="Amplitud de cada plantilla")
    label_names: Optional[List[str]] = None

    @model_validator(mode="after")
    def _check_names(self) -> "SyntheticConfig":
        if self.label_names is not None and len(self.label_names) != self.num_labels:
            raise ValueError("label_names debe tener num_labels elementos")
        return self

    def resolved_label_names(self) -> List[str]:
        if self.label_names is not None:
            return list(self.label_names)
        if self.num_labels == len(DEFAULT_LABEL_NAMES):
            return list(DEFAULT_LABEL_NAMES)
        return [f"label_{i}" for i in range(self.num_labels)]


# =============================================================================
# Experimentos y reportes
# =============================================================================

class ExperimentKind(str, Enum):
    TRANSFER_MATRIX = "transfer_matrix"
    ENSEMBLE_HOLDOUT = "ensemble_holdout"
    ITER_SWEEP = "iter_sweep"
    EPS_SWEEP = "eps_sweep"
    DEFENSE_SWEEP = "defense_sweep"
    ADVTRAIN_TRANSFER = "advtrain_transfer"
    PDT_TRANSFER = "pdt_transfer"


def default_attack_methods(kind: ExperimentKind) -> List[AttackMethod]:
    """Rejilla de ataques por defecto: PGD en el barrido de defensas, los cinco métodos en el resto."""
    if kind == ExperimentKind.DEFENSE_SWEEP:
        return [AttackMethod.PGD]
    return list(AttackMethod)


class ExperimentPlan(BaseModel):
    """Plan de experimento reproducible."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ExperimentKind
    dataset: str = Field(..., description="Ruta del dataset de evaluación (.axds)")
    models: Dict[str, str] = Field(..., description="Nombre -> ruta de checkpoint estándar")
    adv_model: Optional[str] = Field(None, description="Checkpoint del modelo con entrenamiento adversarial")
    sources: List[str] = Field(default_factory=list, description="Modelos fuente; vacío = todos")
    targets: List[str] = Field(default_factory=list, description="Modelos objetivo; vacío = todos")
    attacks: List[AttackSpec] = Field(default_factory=list, description="Vacío u omitido = rejilla por defecto del tipo")
    iterations: List[int] = Field(default_factory=lambda: [1, 2, 5, 10, 20, 40, 80])
    epsilons: List[float] = Field(default_factory=lambda: [0.01, 0.05, 0.1, 0.2, 0.3, 0.4])
    defense: DefenseSpec = Field(default_factory=DefenseSpec)
    seeds: List[int] = Field(default_factory=lambda: [settings.DEFAULT_SEED])
    max_examples: Optional[int] = Field(None, ge=1)
    output: str = Field(default_factory=lambda: f"{settings.OUTPUT_DIR}/report.csv", description="Ruta del CSV; el JSON se escribe al lado")
    workers: Optional[int] = Field(None, ge=1)
    eps_sweep_iterations: int = Field(40, ge=1, description="T fijo del barrido de ε")
    include_clean: bool = Field(True, description="Añade las filas de AUC limpia de cada objetivo")

    @model_validator(mode="before")
    @classmethod
    def _default_attacks(cls, data):
        if not isinstance(data, dict) or data.get("attacks") is not None:
            return data
        try:
            kind = ExperimentKind(data.get("kind"))
        except ValueError:
            return data
        return {**data, "attacks": [AttackSpec(method=m) for m in default_attack_methods(kind)]}

    @model_validator(mode="after")
    def _check_grids(self) -> "ExperimentPlan":
        if not self.models:
            raise ValueError("el plan no referencia modelos")
        if self.kind == ExperimentKind.ENSEMBLE_HOLDOUT and len(self.models) < 2:
            raise ValueError("el hold-out necesita al menos dos modelos")
        needs_adv = (ExperimentKind.DEFENSE_SWEEP, ExperimentKind.ADVTRAIN_TRANSFER)
        if self.kind in needs_adv and self.adv_model is None:
            raise ValueError(f"{self.kind.value} requiere adv_model")
        if not self.attacks:
            raise ValueError("rejilla de ataques vacía")
        if not self.seeds:
            raise ValueError("lista de semillas vacía")
        if self.kind == ExperimentKind.ITER_SWEEP and not self.iterations:
            raise ValueError("rejilla de iteraciones vacía")
        if self.kind in (ExperimentKind.EPS_SWEEP, ExperimentKind.DEFENSE_SWEEP) and not self.epsilons:
            raise ValueError("rejilla de ε vacía")
        if any(t < 1 for t in self.iterations) or any(e < 0 for e in self.epsilons):
            raise ValueError("valores de rejilla fuera de rango")
        unknown = [m for m in (*self.sources, *self.targets) if m not in self.models]
        if unknown:
            raise ValueError(f"modelos no declarados: {unknown}")
        return self

    def source_names(self) -> List[str]:
        return list(self.sources) if self.sources else sorted(self.models)

    def target_names(self) -> List[str]:
        return list(self.targets) if self.targets else sorted(self.models)


AUC_DEFINITION = "AUC Mann-Whitney por etiqueta; media aritmética sobre etiquetas definidas"


class EvalReport(BaseModel):
    """Resultado estructurado de una celda de experimento."""

    model_config = ConfigDict(extra="forbid")

    experiment: str
    source: Optional[str] = None
    target: Optional[str] = None
    setting: str = Field(..., description="clean | white_box | black_box | ensemble | holdout | defended")
    defense_mode: Optional[str] = Field(None, description="advtrain | pdt | combined")
    attack: Optional[AttackSpec] = None
    defense: Optional[DefenseSpec] = None
    sweep_value: Optional[float] = None
    label_names: List[str]
    per_label_auc: List[Optional[float]]
    mean_auc: float
    excluded_labels: List[str] = Field(default_factory=list)
    mean_l2: Optional[float] = None
    n_examples: int
    seed: int
    ensemble_weights: Optional[List[float]] = None
    auc_definition: str = AUC_DEFINITION
    wall_clock_seconds: Optional[float] = None


# =============================================================================
# HTTP
# =============================================================================

class AUCRequest(BaseModel):
    """Request para calcular la AUC media de logits multi-etiqueta."""

    logits: List[List[float]] = Field(..., min_length=1)
    labels: List[List[int]] = Field(..., min_length=1)
    label_names: Optional[List[str]] = None

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "logits": [[2.0, -1.0], [-0.5, 1.5], [0.3, 0.2]],
                "labels": [[1, 0], [0, 1], [1, 0]],
                "label_names": ["Atelectasis", "Edema"],
            }
        }
    )


class AUCResponse(BaseModel):
    mean_auc: float
    per_label_auc: Dict[str, Optional[float]]
    excluded_labels: List[str]


class ExperimentResponse(BaseModel):
    """Response de la ejecución de un plan."""

    kind: ExperimentKind
    reports: List[EvalReport]
    csv_path: str
    json_path: str
    timestamp: datetime = Field(default_factory=datetime.utcnow)


class HealthResponse(BaseModel):
    """Response del health check."""

    status: str
    service: str
    version: str
    dependencies: dict


class ErrorResponse(BaseModel):
    """Response de error."""

    error: str
    detail: Optional[str] = None
    timestamp: datetime = Field(default_factory=datetime.utcnow)
