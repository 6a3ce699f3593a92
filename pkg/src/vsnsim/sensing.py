"""Linear measurement model, synthetic task generation, centralized least squares."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Relative pivot threshold below which the stacked normal equations are
# treated as singular.
RANK_TOLERANCE = 1e-10


@dataclass(frozen=True)
class MeasurementModel:
    """One sensor's linear sensing model and its noisy readings."""

    sensor_id: int
    matrix: np.ndarray      # m x n, maps parameters to noiseless readings
    readings: np.ndarray    # length m
    noise_std: float

    def __post_init__(self) -> None:
        if self.matrix.ndim != 2:
            raise ValueError("model matrix must be 2-D")
        if self.readings.shape != (self.matrix.shape[0],):
            raise ValueError("readings length must match the matrix row count")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("model matrix must be finite")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")


@dataclass(frozen=True)
class EstimationTask:
    """Ground truth parameters plus the per-sensor measurement models."""

    truth: np.ndarray
    models: tuple[MeasurementModel, ...]

    @property
    def param_dim(self) -> int:
        return len(self.truth)

    @property
    def readings_per_sensor(self) -> int:
        return self.models[0].matrix.shape[0]


def generate_estimation_task(n: int, m: int, v_count: int, sigma: float,
                             seed: int) -> EstimationTask:
    """Seeded synthetic task: standard-normal truth and models, Gaussian noise."""
    if n < 1 or m < 1 or v_count < 1:
        raise ValueError(f"dimensions must be >= 1, got n={n} m={m} v_count={v_count}")
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    rng = np.random.default_rng(seed)
    truth = rng.standard_normal(n)
    models = []
    for i in range(v_count):
        mat = rng.standard_normal((m, n))
        noise = rng.normal(0.0, sigma, m) if sigma > 0 else np.zeros(m)
        models.append(MeasurementModel(sensor_id=i, matrix=mat,
                                       readings=mat @ truth + noise, noise_std=sigma))
    return EstimationTask(truth=truth, models=tuple(models))


def centralized_ls(task: EstimationTask) -> np.ndarray:
    """Normal-equations solution of the stacked system; raises on rank deficiency."""
    stacked = np.vstack([mo.matrix for mo in task.models])
    rhs = np.concatenate([mo.readings for mo in task.models])
    gram = stacked.T @ stacked
    pivots = np.linalg.svd(gram, compute_uv=False)
    if pivots[-1] <= RANK_TOLERANCE * pivots[0]:
        raise np.linalg.LinAlgError("stacked model matrix is rank deficient")
    return np.linalg.solve(gram, stacked.T @ rhs)


def mse(estimate: np.ndarray, truth: np.ndarray) -> float:
    """Mean squared error between two equal-length vectors."""
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimate.shape != truth.shape:
        raise ValueError(f"length mismatch: {estimate.shape} vs {truth.shape}")
    diff = estimate - truth
    return float(diff @ diff) / len(truth)
