import numpy as np
import pytest

from vsnsim.sensing import centralized_ls, generate_estimation_task, mse


class TestGenerateTask:
    def test_noiseless_readings_are_exact(self):
        task = generate_estimation_task(4, 6, 3, sigma=0.0, seed=2)
        for model in task.models:
            assert np.allclose(model.readings, model.matrix @ task.truth, atol=0)

    def test_seed_determinism(self):
        a = generate_estimation_task(3, 5, 4, sigma=0.2, seed=17)
        b = generate_estimation_task(3, 5, 4, sigma=0.2, seed=17)
        assert np.array_equal(a.truth, b.truth)
        for ma, mb in zip(a.models, b.models):
            assert np.array_equal(ma.matrix, mb.matrix)
            assert np.array_equal(ma.readings, mb.readings)

    def test_empirical_noise_variance(self):
        task = generate_estimation_task(3, 100, 5, sigma=0.1, seed=23)
        residuals = np.concatenate([m.readings - m.matrix @ task.truth for m in task.models])
        assert np.var(residuals) == pytest.approx(0.01, rel=0.2)

    @pytest.mark.parametrize("n,m,v", [(0, 5, 2), (3, 0, 2), (3, 5, 0)])
    def test_invalid_dimensions(self, n, m, v):
        with pytest.raises(ValueError):
            generate_estimation_task(n, m, v, sigma=0.1, seed=0)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            generate_estimation_task(3, 5, 2, sigma=-0.1, seed=0)


class TestCentralizedLs:
    def test_noiseless_recovers_truth(self):
        task = generate_estimation_task(4, 10, 3, sigma=0.0, seed=5)
        assert np.allclose(centralized_ls(task), task.truth, atol=1e-10)

    def test_single_square_invertible_model(self):
        task = generate_estimation_task(4, 4, 1, sigma=0.0, seed=8)
        expected = np.linalg.solve(task.models[0].matrix, task.models[0].readings)
        assert np.allclose(centralized_ls(task), expected, atol=1e-9)

    def test_normal_equations_residual(self):
        task = generate_estimation_task(5, 30, 4, sigma=0.3, seed=12)
        estimate = centralized_ls(task)
        stacked = np.vstack([m.matrix for m in task.models])
        rhs = np.concatenate([m.readings for m in task.models])
        residual = stacked.T @ (rhs - stacked @ estimate)
        assert np.linalg.norm(residual) <= 1e-8 * np.linalg.norm(stacked.T @ rhs)

    def test_rank_deficient_raises(self):
        task = generate_estimation_task(3, 4, 2, sigma=0.0, seed=3)
        degenerate = task.models[0]
        flat = type(degenerate)(sensor_id=0, matrix=np.zeros((4, 3)),
                                readings=np.zeros(4), noise_std=0.0)
        broken = type(task)(truth=task.truth, models=(flat, flat))
        with pytest.raises(np.linalg.LinAlgError):
            centralized_ls(broken)

    def test_estimate_minimizes_stacked_objective(self):
        task = generate_estimation_task(4, 20, 3, sigma=0.2, seed=31)
        estimate = centralized_ls(task)
        stacked = np.vstack([m.matrix for m in task.models])
        rhs = np.concatenate([m.readings for m in task.models])

        def objective(theta):
            r = rhs - stacked @ theta
            return 0.5 * float(r @ r)

        base = objective(estimate)
        rng = np.random.default_rng(0)
        for _ in range(100):
            delta = rng.standard_normal(4)
            delta *= 1e-3 / np.linalg.norm(delta)
            assert objective(estimate + delta) >= base


class TestMse:
    def test_zero_for_equal_vectors(self):
        v = np.array([1.0, -2.0, 3.0])
        assert mse(v, v) == 0.0

    def test_known_value(self):
        assert mse(np.array([3.0, 4.0]), np.array([0.0, 0.0])) == 12.5

    def test_permutation_symmetry(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal(6)
        b = rng.standard_normal(6)
        perm = rng.permutation(6)
        assert mse(a, b) == pytest.approx(mse(a[perm], b[perm]), rel=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mse(np.zeros(3), np.zeros(4))
