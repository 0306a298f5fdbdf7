"""Small fully-connected networks with hand-rolled backprop and Adam.

Everything is float64 numpy. The networks here are deliberately tiny (two
ReLU hidden layers); batches are (N, dim) matrices and gradients are computed
analytically, which keeps single-run determinism trivial and lets tests check
the backward pass against finite differences.
"""

from __future__ import annotations

import numpy as np


class Normalizer:
    """Per-dimension affine whitening, refreshed from data in one shot."""

    def __init__(self, dim: int):
        self.mean = np.zeros(dim)
        self.std = np.ones(dim)

    def refresh(self, X: np.ndarray) -> None:
        self.mean = X.mean(axis=0)
        std = X.std(axis=0)
        std[std < 1e-8] = 1.0  # constant columns pass through unscaled
        self.std = std

    def normalize(self, X):
        return (X - self.mean) / self.std

    def denormalize(self, Xn):
        return Xn * self.std + self.mean

    def state(self):
        return {"mean": self.mean.copy(), "std": self.std.copy()}

    def load_state(self, state):
        self.mean = np.asarray(state["mean"], dtype=np.float64).copy()
        self.std = np.asarray(state["std"], dtype=np.float64).copy()


class Mlp:
    """input -> H -> H -> output, ReLU hidden activations, linear output."""

    def __init__(self, in_dim: int, hidden: int, out_dim: int, rng: np.random.Generator):
        def he(n_in, n_out, scale=1.0):
            return rng.standard_normal((n_in, n_out)) * scale * np.sqrt(2.0 / n_in)

        self.weights = [
            he(in_dim, hidden),
            he(hidden, hidden),
            he(hidden, out_dim, scale=0.01),  # outputs start near zero
        ]
        self.biases = [np.zeros(hidden), np.zeros(hidden), np.zeros(out_dim)]
        self._m = [np.zeros_like(w) for w in self.weights + self.biases]
        self._v = [np.zeros_like(w) for w in self.weights + self.biases]
        self._t = 0

    def forward(self, X: np.ndarray):
        h1 = np.maximum(X @ self.weights[0] + self.biases[0], 0.0)
        h2 = np.maximum(h1 @ self.weights[1] + self.biases[1], 0.0)
        out = h2 @ self.weights[2] + self.biases[2]
        return out, (X, h1, h2)

    def backward(self, cache, d_out: np.ndarray):
        """Gradients of a scalar loss given d(loss)/d(output)."""
        X, h1, h2 = cache
        dW3 = h2.T @ d_out
        db3 = d_out.sum(axis=0)
        dh2 = (d_out @ self.weights[2].T) * (h2 > 0.0)
        dW2 = h1.T @ dh2
        db2 = dh2.sum(axis=0)
        dh1 = (dh2 @ self.weights[1].T) * (h1 > 0.0)
        dW1 = X.T @ dh1
        db1 = dh1.sum(axis=0)
        return [dW1, dW2, dW3, db1, db2, db3]

    def adam_step(self, grads, lr: float, beta1: float, beta2: float, eps: float = 1e-8):
        self._t += 1
        params = self.weights + self.biases
        for i, (p, g) in enumerate(zip(params, grads)):
            self._m[i] = beta1 * self._m[i] + (1.0 - beta1) * g
            self._v[i] = beta2 * self._v[i] + (1.0 - beta2) * g * g
            m_hat = self._m[i] / (1.0 - beta1**self._t)
            v_hat = self._v[i] / (1.0 - beta2**self._t)
            p -= lr * m_hat / (np.sqrt(v_hat) + eps)

    # -- parameter access (checkpointing, tests) ---------------------------

    def tensors(self) -> dict[str, np.ndarray]:
        return {
            "W1": self.weights[0], "W2": self.weights[1], "W3": self.weights[2],
            "b1": self.biases[0], "b2": self.biases[1], "b3": self.biases[2],
        }

    def load_tensors(self, tensors) -> None:
        for i, key in enumerate(("W1", "W2", "W3")):
            self.weights[i] = np.asarray(tensors[key], dtype=np.float64).copy()
        for i, key in enumerate(("b1", "b2", "b3")):
            self.biases[i] = np.asarray(tensors[key], dtype=np.float64).copy()
        self._m = [np.zeros_like(w) for w in self.weights + self.biases]
        self._v = [np.zeros_like(w) for w in self.weights + self.biases]
        self._t = 0


def gaussian_nll(mu, sigma, target) -> float:
    """Mean over samples of the per-sample Gaussian NLL (constant dropped).

    Per sample the loss is sum_d [ (target_d - mu_d)^2 / (2 sigma_d^2)
    + log sigma_d ]; a perfect mean with unit sigma scores exactly zero.
    """
    mu = np.atleast_2d(np.asarray(mu, dtype=np.float64))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=np.float64))
    target = np.atleast_2d(np.asarray(target, dtype=np.float64))
    if np.any(sigma <= 0.0):
        raise ValueError("sigma must be positive")
    z = (target - mu) / sigma
    per_sample = (0.5 * z * z + np.log(sigma)).sum(axis=1)
    return float(per_sample.mean())
