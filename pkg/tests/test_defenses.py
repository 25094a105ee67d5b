"""Pruebas de las defensas: pérdida combinada, entrenamiento adversarial, PDT y bundles."""

import numpy as np
import pytest

from app.classifiers.architectures import build_model
from app.classifiers.training import predict_logits, train
from app.defenses.adversarial_training import adversarial_train, combined_loss, epoch_attack_spec
from app.defenses.denoise import denoise_nlm, nlm_filter
from app.defenses.pipeline import defend_combined, defend_pdt, load_bundle, save_bundle, sidecar_path
from app.defenses.pixel_deflection import deflect_image, pixel_deflect
from app.errors import CheckpointFormatError
from app.models.schemas import AttackMethod, AttackSpec, DefenseSpec, TrainConfig

NEUTRAL = DefenseSpec(deflections=0, nlm_h=0.0)


def _total_variation(images: np.ndarray) -> float:
    return float(np.abs(np.diff(images, axis=-1)).sum() + np.abs(np.diff(images, axis=-2)).sum())


# =============================================================================
# Entrenamiento adversarial
# =============================================================================

class TestAdversarialTraining:

    def test_combined_loss_example(self):
        assert combined_loss(0.5, 1.0, 0.6).item() == pytest.approx(0.7)

    @pytest.mark.parametrize("lam", [0.0, 0.25, 1.0])
    def test_combined_loss_is_affine(self, lam):
        assert combined_loss(2.0, 6.0, lam).item() == pytest.approx(6.0 - 4.0 * lam)

    def test_lambda_one_equals_standard_training(self, tiny_dataset):
        config = TrainConfig(epochs=3, batch_size=16, learning_rate=1e-2, seed=6)
        spec = DefenseSpec(lam=1.0, pretrain_epochs=1)
        standard = train(build_model("cnn_small", side=8, num_labels=3, seed=2), tiny_dataset, config).model
        defended = adversarial_train(build_model("cnn_small", side=8, num_labels=3, seed=2), tiny_dataset, spec, config).model
        for name in standard.params:
            np.testing.assert_array_equal(defended.params[name].data, standard.params[name].data)

    def test_adversarial_epochs_change_the_model(self, tiny_dataset):
        config = TrainConfig(epochs=2, batch_size=16, learning_rate=1e-2, seed=6, patience=None)
        inner = AttackSpec(method=AttackMethod.PGD, epsilon=0.1, iterations=2, minibatch=16)
        clean = adversarial_train(
            build_model("linear", side=8, num_labels=3, seed=2), tiny_dataset, DefenseSpec(lam=1.0), config
        ).model
        defended = adversarial_train(
            build_model("linear", side=8, num_labels=3, seed=2), tiny_dataset,
            DefenseSpec(lam=0.5, inner_attack=inner, pretrain_epochs=1), config, workers=1,
        ).model
        assert not np.array_equal(clean.params["out.weight"].data, defended.params["out.weight"].data)

    def test_adversarial_training_is_deterministic(self, tiny_dataset):
        config = TrainConfig(epochs=2, batch_size=24, learning_rate=1e-2, seed=1, patience=None)
        spec = DefenseSpec(
            lam=0.6, pretrain_epochs=0,
            inner_attack=AttackSpec(method=AttackMethod.PGD, epsilon=0.05, iterations=2, minibatch=8),
        )
        first = adversarial_train(build_model("linear", side=8, num_labels=3, seed=3), tiny_dataset, spec, config, workers=1)
        second = adversarial_train(build_model("linear", side=8, num_labels=3, seed=3), tiny_dataset, spec, config, workers=3)
        np.testing.assert_array_equal(first.model.params["out.weight"].data, second.model.params["out.weight"].data)

    def test_epoch_seeds_differ(self):
        inner = AttackSpec(seed=4)
        assert epoch_attack_spec(inner, 0).seed != epoch_attack_spec(inner, 1).seed
        assert epoch_attack_spec(inner, 2) == epoch_attack_spec(inner, 2)


# =============================================================================
# Deflexión de píxeles
# =============================================================================

class TestPixelDeflection:

    def test_zero_deflections_is_identity(self, tiny_dataset):
        out = pixel_deflect(tiny_dataset.images, DefenseSpec(deflections=0))
        np.testing.assert_array_equal(out, tiny_dataset.images)

    def test_zero_window_is_identity(self, tiny_dataset):
        out = pixel_deflect(tiny_dataset.images, DefenseSpec(deflections=50, window=0))
        np.testing.assert_array_equal(out, tiny_dataset.images)

    def test_output_values_come_from_input(self, rng):
        image = rng.random((1, 8, 8))
        out = deflect_image(image, np.random.default_rng(0), deflections=40, window=2)
        assert np.isin(out, image).all()
        assert not np.array_equal(out, image)

    def test_input_is_not_mutated(self, rng):
        image = rng.random((1, 6, 6))
        before = image.copy()
        deflect_image(image, np.random.default_rng(1), deflections=10, window=1)
        np.testing.assert_array_equal(image, before)

    def test_streams_follow_example_index(self, tiny_dataset):
        spec = DefenseSpec(deflections=20, window=2, seed=3)
        full = pixel_deflect(tiny_dataset.images, spec, tiny_dataset.indices)
        rows = np.array([4, 9])
        part = pixel_deflect(tiny_dataset.images[rows], spec, rows)
        np.testing.assert_array_equal(part, full[rows])


# =============================================================================
# Non-local means
# =============================================================================

class TestNonLocalMeans:

    def test_constant_image_is_fixed(self):
        image = np.full((1, 1, 9, 9), 0.4)
        np.testing.assert_allclose(nlm_filter(image, h=0.2, patch=3, search=5), image)

    def test_output_stays_in_input_range(self, rng):
        image = rng.random((2, 1, 10, 10))
        out = nlm_filter(image, h=0.3, patch=3, search=5)
        assert out.min() >= image.min() - 1e-12 and out.max() <= image.max() + 1e-12

    def test_tiny_h_is_near_identity(self, rng):
        image = rng.random((1, 1, 8, 8))
        np.testing.assert_allclose(nlm_filter(image, h=1e-6, patch=3, search=5), image, atol=1e-9)

    def test_zero_h_is_identity(self, tiny_dataset):
        np.testing.assert_array_equal(denoise_nlm(tiny_dataset.images, DefenseSpec(nlm_h=0.0)), tiny_dataset.images)

    def test_smooths_noise(self, rng):
        clean = np.full((1, 1, 12, 12), 0.5)
        noisy = np.clip(clean + rng.normal(0, 0.1, clean.shape), 0, 1)
        out = nlm_filter(noisy, h=0.5, patch=3, search=7)
        assert _total_variation(out) < _total_variation(noisy)

    def test_even_sizes_rejected(self):
        with pytest.raises(ValueError):
            DefenseSpec(nlm_patch=4)


# =============================================================================
# PDT y bundles
# =============================================================================

class TestPipeline:

    def test_neutral_pdt_matches_plain_logits(self, tiny_cnn, tiny_dataset):
        np.testing.assert_array_equal(
            defend_pdt(tiny_cnn, tiny_dataset.images, NEUTRAL),
            predict_logits(tiny_cnn, tiny_dataset.images),
        )

    def test_pdt_is_deterministic(self, tiny_cnn, tiny_dataset):
        spec = DefenseSpec(deflections=10, window=2, nlm_h=0.1, nlm_search=5)
        first = defend_pdt(tiny_cnn, tiny_dataset.images, spec, tiny_dataset.indices)
        second = defend_pdt(tiny_cnn, tiny_dataset.images, spec, tiny_dataset.indices)
        np.testing.assert_array_equal(first, second)
        assert first.shape == (tiny_dataset.size, 3)

    def test_combined_is_pdt_on_given_model(self, tiny_cnn, tiny_dataset):
        spec = DefenseSpec(deflections=5, window=1, nlm_h=0.05, nlm_search=3)
        np.testing.assert_array_equal(
            defend_combined(tiny_cnn, tiny_dataset.images, spec),
            defend_pdt(tiny_cnn, tiny_dataset.images, spec),
        )

    def test_bundle_round_trip(self, tmp_path, tiny_cnn, tiny_dataset):
        spec = DefenseSpec(lam=0.4, deflections=7, window=3, nlm_h=0.2, seed=9)
        checkpoint, sidecar = save_bundle(tiny_cnn, spec, tmp_path / "adv.axmd")
        assert sidecar == sidecar_path(checkpoint) and sidecar.exists()
        model, loaded_spec = load_bundle(checkpoint)
        assert loaded_spec == spec
        np.testing.assert_array_equal(predict_logits(model, tiny_dataset.images), predict_logits(tiny_cnn, tiny_dataset.images))

    def test_bundle_without_sidecar(self, tmp_path, tiny_cnn):
        checkpoint, sidecar = save_bundle(tiny_cnn, DefenseSpec(), tmp_path / "adv.axmd")
        sidecar.unlink()
        with pytest.raises(CheckpointFormatError):
            load_bundle(checkpoint)

    def test_bundle_with_bad_sidecar(self, tmp_path, tiny_cnn):
        checkpoint, sidecar = save_bundle(tiny_cnn, DefenseSpec(), tmp_path / "adv.axmd")
        sidecar.write_text('{"lam": 3}', encoding="utf-8")
        with pytest.raises(CheckpointFormatError):
            load_bundle(checkpoint)
