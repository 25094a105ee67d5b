"""Defensas: entrenamiento adversarial, PDT y su combinación."""

from app.defenses.adversarial_training import adversarial_train, combined_loss
from app.defenses.denoise import denoise_nlm, nlm_filter
from app.defenses.pipeline import defend_combined, defend_pdt, load_bundle, pdt_transform, save_bundle
from app.defenses.pixel_deflection import pixel_deflect

__all__ = [
    'adversarial_train', 'combined_loss', 'denoise_nlm', 'nlm_filter',
    'defend_combined', 'defend_pdt', 'load_bundle', 'pdt_transform', 'save_bundle',
    'pixel_deflect',
]
