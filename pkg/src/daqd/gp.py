"""Exact Gaussian-process regression over skill descriptors.

Used by the skill planner to learn the residual between a skill's outcome in
the intact simulator and its realized outcome in the execution environment.
One independent zero-mean GP per output dimension, all sharing the same
inputs, squared-exponential kernel and noise level, so a single Cholesky
factorization serves every output column.

Parameters
----------
The kernel is k(x, x') = signal^2 * exp(-||x - x'||^2 / (2 * lengthscale^2))
with observation noise variance noise^2. With no training data the posterior
reverts to the prior: zero mean, signal^2 variance.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .core import NumericError

_JITTERS = (0.0, 1e-12, 1e-10, 1e-8, 1e-6)


class SkillOutcomeGP:
    def __init__(
        self,
        input_dim: int,
        output_dim: int = 3,
        lengthscale: float = 0.15,
        signal: float = 0.1,
        noise: float = 0.01,
    ):
        if min(lengthscale, signal, noise) <= 0.0:
            raise ValueError("lengthscale, signal and noise must be > 0")
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.lengthscale = lengthscale
        self.signal = signal
        self.noise = noise
        self.X = np.empty((0, input_dim))
        self.Y = np.empty((0, output_dim))
        self._chol = None
        self._alpha = None

    def __len__(self) -> int:
        return self.X.shape[0]

    def kernel(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Squared-exponential Gram matrix between two point sets."""
        sq = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
        return self.signal**2 * np.exp(-0.5 * sq / self.lengthscale**2)

    def fit(self, X: np.ndarray, Y: np.ndarray) -> None:
        """Replace the training set and refactor.

        Raises :class:`NumericError` if the kernel matrix stays non-positive-
        definite after jitter escalation.
        """
        X = np.asarray(X, dtype=np.float64).reshape(-1, self.input_dim)
        Y = np.asarray(Y, dtype=np.float64).reshape(-1, self.output_dim)
        if X.shape[0] != Y.shape[0]:
            raise ValueError("inputs and targets must have the same length")
        self.X, self.Y = X, Y
        if X.shape[0] == 0:
            self._chol = None
            self._alpha = None
            return
        K = self.kernel(X, X) + self.noise**2 * np.eye(X.shape[0])
        for jitter in _JITTERS:
            try:
                self._chol = cho_factor(
                    K + jitter * self.signal**2 * np.eye(X.shape[0]), lower=True
                )
                break
            except np.linalg.LinAlgError:
                continue
        else:
            raise NumericError("kernel matrix not positive definite after jitter")
        self._alpha = cho_solve(self._chol, Y)

    def add(self, x, y) -> None:
        """Append one observation and refit."""
        x = np.asarray(x, dtype=np.float64).reshape(1, self.input_dim)
        y = np.asarray(y, dtype=np.float64).reshape(1, self.output_dim)
        self.fit(np.vstack([self.X, x]), np.vstack([self.Y, y]))

    def predict(self, Xq) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and (latent) variance at query points.

        Returns ``(mean, var)`` with shapes (m, output_dim) each; the variance
        is identical across output dimensions (shared kernel) and floored at
        1e-12. Far from all data the variance reverts to signal^2.
        """
        Xq = np.asarray(Xq, dtype=np.float64).reshape(-1, self.input_dim)
        m = Xq.shape[0]
        if len(self) == 0:
            return (
                np.zeros((m, self.output_dim)),
                np.full((m, self.output_dim), self.signal**2),
            )
        Ks = self.kernel(self.X, Xq)
        mean = Ks.T @ self._alpha
        L = self._chol[0]
        v = solve_triangular(L, Ks, lower=True)
        var = self.signal**2 - (v * v).sum(axis=0)
        var = np.maximum(var, 1e-12)
        return mean, np.tile(var[:, None], (1, self.output_dim))
