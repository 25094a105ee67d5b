"""Ataques L∞ por paso de signo y su ejecución por lotes."""

from app.attacks.base import AttackState, SignStepAttack, clip_ball, example_rng, loss_gradient
from app.attacks.batch_io import AdversarialBatch, read_adversarial_batch, write_adversarial_batch
from app.attacks.methods import (
    ATTACKS,
    DAAAttack,
    DIIFGSMAttack,
    FGSMAttack,
    MIFGSMAttack,
    PGDAttack,
    get_attack,
)
from app.attacks.runner import (
    attack_daa,
    attack_diifgsm,
    attack_fgsm,
    attack_mifgsm,
    attack_pgd,
    run_attack,
)

__all__ = [
    'AttackState', 'SignStepAttack', 'clip_ball', 'example_rng', 'loss_gradient',
    'AdversarialBatch', 'read_adversarial_batch', 'write_adversarial_batch',
    'ATTACKS', 'DAAAttack', 'DIIFGSMAttack', 'FGSMAttack', 'MIFGSMAttack', 'PGDAttack', 'get_attack',
    'attack_daa', 'attack_diifgsm', 'attack_fgsm', 'attack_mifgsm', 'attack_pgd', 'run_attack',
]
