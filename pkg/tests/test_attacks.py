"""
Pruebas de los ataques L∞: proyección, identidades de reducción entre métodos,
contención en la bola y determinismo respecto al número de workers.
"""

import numpy as np
import pytest

from app.attacks.base import clip_ball, example_rng
from app.attacks.batch_io import AdversarialBatch, read_adversarial_batch, write_adversarial_batch
from app.attacks.methods import daa_direction, median_bandwidth
from app.attacks.runner import attack_daa, attack_fgsm, attack_pgd, run_attack
from app.attacks.transforms import bilinear_matrix, draw_transform
from app.errors import AttackError, BadMagicError, CheckpointFormatError, ShapeError
from app.models.schemas import AttackMethod, AttackSpec

ALL_METHODS = list(AttackMethod)


def _spec(method, **kwargs):
    kwargs.setdefault("minibatch", 8)
    return AttackSpec(method=method, **kwargs)


def _attack(model, dataset, spec, **kwargs):
    return run_attack(model, dataset.images, dataset.binary_labels(), spec, indices=dataset.indices, workers=1, **kwargs)


# =============================================================================
# Proyección
# =============================================================================

class TestClipBall:

    def test_examples(self):
        np.testing.assert_allclose(clip_ball([0.9], [0.5], 0.1), [0.6])
        np.testing.assert_allclose(clip_ball([-0.2], [0.05], 0.3), [0.0])
        np.testing.assert_allclose(clip_ball([0.55], [0.5], 0.1), [0.55])

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            clip_ball(np.zeros((2, 2)), np.zeros((2, 3)), 0.1)

    def test_idempotent(self, rng):
        origin = rng.random((4, 1, 5, 5))
        once = clip_ball(origin + rng.normal(0, 0.5, origin.shape), origin, 0.2)
        np.testing.assert_array_equal(clip_ball(once, origin, 0.2), once)


# =============================================================================
# Casos analíticos
# =============================================================================

class TestAnalytic:

    def test_fgsm_on_pixel_model(self, pixel_model):
        x = np.full((1, 1, 1, 1), 0.5)
        adv = attack_fgsm(pixel_model, x, np.array([[1.0]]), AttackSpec(epsilon=0.1))
        assert adv.reshape(-1)[0] == pytest.approx(0.4, abs=1e-12)

    @pytest.mark.parametrize("method", ALL_METHODS)
    def test_zero_epsilon_is_identity(self, method, tiny_cnn, tiny_dataset):
        adv = _attack(tiny_cnn, tiny_dataset, _spec(method, epsilon=0.0, iterations=3))
        np.testing.assert_array_equal(adv, tiny_dataset.images)

    def test_zero_gradient_leaves_image(self, pixel_model):
        pixel_model.w.data = np.zeros((1, 1))
        x = np.full((2, 1, 1, 1), 0.3)
        adv = attack_pgd(pixel_model, x, np.ones((2, 1)), AttackSpec(epsilon=0.1, iterations=4, random_start=False))
        np.testing.assert_array_equal(adv, x)

    def test_fgsm_forces_single_step(self):
        spec = AttackSpec(method=AttackMethod.FGSM, epsilon=0.2, iterations=10, step_size=0.01)
        assert spec.effective_iterations == 1 and spec.alpha == 0.2

    def test_default_step_size(self):
        assert AttackSpec(method=AttackMethod.PGD, epsilon=0.2, iterations=5).alpha == pytest.approx(0.1)


# =============================================================================
# Identidades entre métodos
# =============================================================================

class TestReductions:

    def test_pgd_single_step_without_start_is_fgsm(self, tiny_cnn, tiny_dataset):
        fgsm = _attack(tiny_cnn, tiny_dataset, _spec(AttackMethod.FGSM, epsilon=0.1))
        pgd = _attack(
            tiny_cnn, tiny_dataset,
            _spec(AttackMethod.PGD, epsilon=0.1, iterations=1, step_size=0.1, random_start=False),
        )
        np.testing.assert_array_equal(pgd, fgsm)

    @pytest.mark.parametrize("method, extra", [
        (AttackMethod.MIFGSM, {"momentum": 0.0}),
        (AttackMethod.DII_FGSM, {"transform_prob": 0.0}),
        (AttackMethod.DII_FGSM, {"transform_prob": 1.0, "resize_min": 1.0, "resize_max": 1.0}),
        (AttackMethod.DAA, {"daa_c": 0.0}),
        (AttackMethod.DAA, {"daa_c": 0.5, "minibatch": 1}),
    ])
    def test_reduces_to_iterative_fgsm(self, method, extra, tiny_cnn, tiny_dataset):
        common = dict(epsilon=0.1, iterations=4)
        reference = _attack(tiny_cnn, tiny_dataset, _spec(AttackMethod.PGD, random_start=False, **common))
        adv = _attack(tiny_cnn, tiny_dataset, _spec(method, **common, **extra))
        np.testing.assert_array_equal(adv, reference)

    def test_momentum_changes_later_steps(self, tiny_cnn, tiny_dataset):
        common = dict(epsilon=0.1, iterations=6)
        plain = _attack(tiny_cnn, tiny_dataset, _spec(AttackMethod.MIFGSM, momentum=0.0, **common))
        momentum = _attack(tiny_cnn, tiny_dataset, _spec(AttackMethod.MIFGSM, momentum=1.0, **common))
        assert not np.array_equal(plain, momentum)


# =============================================================================
# Contención en la bola
# =============================================================================

class TestBallContainment:

    @pytest.mark.parametrize("method", ALL_METHODS)
    def test_every_iterate_stays_in_ball(self, method, tiny_models, tiny_dataset):
        subset = tiny_dataset.head(12)
        for trial, model in enumerate(tiny_models.values()):
            draw = np.random.default_rng(trial)
            epsilon = float(draw.uniform(0.01, 0.4))
            spec = _spec(method, epsilon=epsilon, iterations=int(draw.integers(1, 5)), seed=trial, minibatch=5)
            seen = []

            def check(t, iterate):
                seen.append(t)
                assert iterate.min() >= 0.0 and iterate.max() <= 1.0

            adv = _attack(model, subset, spec, callback=check)
            assert np.max(np.abs(adv - subset.images)) <= epsilon + 1e-12
            assert adv.min() >= 0.0 and adv.max() <= 1.0
            assert 0 in seen and spec.effective_iterations in seen

    @pytest.mark.slow
    def test_randomized_runs_stay_in_ball(self, tiny_models, tiny_dataset):
        draw = np.random.default_rng(2024)
        models = list(tiny_models.values())
        labels = tiny_dataset.binary_labels()
        for run in range(10_000):
            method = ALL_METHODS[int(draw.integers(len(ALL_METHODS)))]
            model = models[int(draw.integers(len(models)))]
            rows = draw.choice(tiny_dataset.size, size=3, replace=False)
            images = tiny_dataset.images[rows]
            epsilon = float(draw.uniform(0.0, 0.5))
            # a veces un paso mayor que ε, para forzar la proyección
            step = float(draw.uniform(0.01, 1.0)) if draw.random() < 0.5 else None
            spec = AttackSpec(
                method=method, epsilon=epsilon, iterations=int(draw.integers(1, 41)), step_size=step,
                random_start=bool(draw.integers(2)), seed=run, minibatch=3,
            )

            def check(t, iterate):
                assert iterate.min() >= 0.0 and iterate.max() <= 1.0, (run, spec, t)
                assert np.max(np.abs(iterate - images)) <= epsilon + 1e-12, (run, spec, t)

            adv = run_attack(model, images, labels[rows], spec, indices=rows, workers=1, callback=check)
            assert np.max(np.abs(adv - images)) <= epsilon + 1e-12

    def test_callback_iterates_are_within_chunk_ball(self, tiny_cnn, tiny_dataset):
        spec = _spec(AttackMethod.PGD, epsilon=0.05, iterations=3, minibatch=48)
        images = tiny_dataset.images

        def check(t, iterate):
            assert np.max(np.abs(iterate - images)) <= 0.05 + 1e-12

        _attack(tiny_cnn, tiny_dataset, spec, callback=check)


# =============================================================================
# Determinismo
# =============================================================================

class TestDeterminism:

    @pytest.mark.parametrize("method", ALL_METHODS)
    def test_worker_count_does_not_change_result(self, method, tiny_cnn, tiny_dataset):
        spec = _spec(method, epsilon=0.1, iterations=3, minibatch=7, seed=2)
        labels = tiny_dataset.binary_labels()
        serial = run_attack(tiny_cnn, tiny_dataset.images, labels, spec, workers=1)
        parallel = run_attack(tiny_cnn, tiny_dataset.images, labels, spec, workers=4)
        np.testing.assert_array_equal(serial, parallel)

    def test_repeated_runs_are_identical(self, tiny_cnn, tiny_dataset):
        spec = _spec(AttackMethod.DII_FGSM, epsilon=0.1, iterations=3, transform_prob=0.7, seed=5)
        np.testing.assert_array_equal(_attack(tiny_cnn, tiny_dataset, spec), _attack(tiny_cnn, tiny_dataset, spec))

    def test_independent_methods_do_not_depend_on_batch_composition(self, tiny_cnn, tiny_dataset):
        spec = _spec(AttackMethod.PGD, epsilon=0.1, iterations=3, seed=3)
        full = _attack(tiny_cnn, tiny_dataset, spec)
        rows = np.array([5, 17, 30])
        part = run_attack(tiny_cnn, tiny_dataset.images[rows], tiny_dataset.binary_labels()[rows], spec, indices=rows)
        np.testing.assert_array_equal(part, full[rows])

    def test_seed_changes_random_start(self, tiny_cnn, tiny_dataset):
        a = _attack(tiny_cnn, tiny_dataset, _spec(AttackMethod.PGD, epsilon=0.1, iterations=1, seed=1))
        b = _attack(tiny_cnn, tiny_dataset, _spec(AttackMethod.PGD, epsilon=0.1, iterations=1, seed=2))
        assert not np.array_equal(a, b)

    def test_example_streams(self):
        assert example_rng(3, 7).random() == example_rng(3, 7).random()
        assert example_rng(3, 7).random() != example_rng(3, 8).random()


# =============================================================================
# DAA y DII
# =============================================================================

class TestCouplingAndTransforms:

    def test_bandwidth_floor(self):
        assert median_bandwidth(np.zeros((3, 4))) == 1e-6
        assert median_bandwidth(np.zeros((1, 4))) == 1e-6

    def test_median_bandwidth(self):
        flat = np.array([[0.0], [3.0], [4.0]])
        # distancias 3, 4, 1
        assert median_bandwidth(flat) == pytest.approx(3.0)

    def test_single_example_coupling_scales_gradient(self, rng):
        grads = rng.standard_normal((1, 1, 3, 3))
        iterates = rng.random((1, 1, 3, 3))
        np.testing.assert_allclose(daa_direction(grads, iterates, 0.5, None), 1.5 * grads)

    def test_repulsion_pushes_examples_apart(self):
        iterates = np.array([[0.0], [1.0]]).reshape(2, 1, 1, 1)
        grads = np.zeros_like(iterates)
        direction = daa_direction(grads, iterates, 1.0, 1.0).reshape(-1)
        assert direction[0] < 0 < direction[1]

    def test_daa_runs_on_partial_chunk(self, tiny_cnn, tiny_dataset):
        spec = _spec(AttackMethod.DAA, epsilon=0.1, iterations=2, minibatch=20)
        adv = attack_daa(tiny_cnn, tiny_dataset.images, tiny_dataset.binary_labels(), spec, workers=1)
        assert adv.shape == tiny_dataset.images.shape

    def test_bilinear_identity(self):
        np.testing.assert_array_equal(bilinear_matrix(5, 5), np.eye(5))

    def test_bilinear_rows_sum_to_one(self):
        np.testing.assert_allclose(bilinear_matrix(7, 8).sum(axis=1), np.ones(7))

    def test_transform_probability_zero(self):
        draws = [draw_transform(np.random.default_rng(i), 8, AttackSpec(transform_prob=0.0)) for i in range(20)]
        assert all(d is None for d in draws)

    def test_transform_stays_inside_image(self):
        spec = AttackSpec(transform_prob=1.0, resize_min=0.5, resize_max=0.9)
        for i in range(30):
            t = draw_transform(np.random.default_rng(i), 10, spec)
            assert 1 <= t.size <= 10
            assert 0 <= t.offset_y <= 10 - t.size and 0 <= t.offset_x <= 10 - t.size


# =============================================================================
# Errores y formato de lote
# =============================================================================

class TestErrorsAndBatchFile:

    def test_empty_batch(self, tiny_cnn):
        with pytest.raises(AttackError):
            run_attack(tiny_cnn, np.zeros((0, 1, 8, 8)), np.zeros((0, 3)), AttackSpec())

    def test_label_count_mismatch(self, tiny_cnn):
        with pytest.raises(ShapeError):
            run_attack(tiny_cnn, np.zeros((2, 1, 8, 8)), np.zeros((3, 3)), AttackSpec())

    def test_non_finite_gradient(self, pixel_model):
        pixel_model.w.data = np.full((1, 1), np.inf)
        x = np.full((1, 1, 1, 1), 0.5)
        with pytest.raises(AttackError, match="no finito"):
            attack_fgsm(pixel_model, x, np.zeros((1, 1)), AttackSpec(epsilon=0.1))

    def test_negative_daa_coefficient_rejected(self):
        with pytest.raises(ValueError):
            AttackSpec(method=AttackMethod.DAA, daa_c=-0.1)

    def test_batch_round_trip(self, tmp_path, tiny_cnn, tiny_dataset):
        spec = _spec(AttackMethod.MIFGSM, epsilon=0.05, iterations=2, seed=4)
        adv = _attack(tiny_cnn, tiny_dataset, spec)
        path = tmp_path / "adv.axad"
        write_adversarial_batch(AdversarialBatch(spec, tiny_dataset.indices, adv), path)
        loaded = read_adversarial_batch(path)
        assert loaded.spec == spec
        np.testing.assert_array_equal(loaded.indices, tiny_dataset.indices)
        np.testing.assert_array_equal(loaded.images, adv)

    def test_batch_bad_magic(self, tmp_path):
        path = tmp_path / "adv.axad"
        path.write_bytes(b"AXDS" + bytes(16))
        with pytest.raises(BadMagicError):
            read_adversarial_batch(path)

    def test_batch_method_tag_mismatch(self, tmp_path):
        spec = AttackSpec(method=AttackMethod.FGSM)
        path = tmp_path / "adv.axad"
        write_adversarial_batch(AdversarialBatch(spec, np.arange(1), np.zeros((1, 1, 2, 2))), path)
        blob = bytearray(path.read_bytes())
        blob[6] = (blob[6] + 1) % len(AttackMethod)
        path.write_bytes(bytes(blob))
        with pytest.raises(CheckpointFormatError):
            read_adversarial_batch(path)
