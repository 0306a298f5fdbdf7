import numpy as np
import pytest

from daqd.core import rng_from
from daqd.gp import SkillOutcomeGP


def dense_oracle(X, Y, Xq, lengthscale, signal, noise):
    """Textbook GP posterior via a direct dense solve (no Cholesky reuse)."""

    def k(A, B):
        sq = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
        return signal**2 * np.exp(-0.5 * sq / lengthscale**2)

    K = k(X, X) + noise**2 * np.eye(X.shape[0])
    Kinv = np.linalg.inv(K)
    Ks = k(X, Xq)
    mean = Ks.T @ Kinv @ Y
    var = signal**2 - np.einsum("ij,ik,kj->j", Ks, Kinv, Ks)
    return mean, var


def test_zero_data_prior():
    gp = SkillOutcomeGP(input_dim=2, signal=0.1)
    mean, var = gp.predict(np.array([[0.5, 0.5], [0.1, 0.9]]))
    assert np.array_equal(mean, np.zeros((2, 3)))
    assert np.allclose(var, 0.1**2)


def test_single_datum_interpolation():
    gp = SkillOutcomeGP(input_dim=2, noise=0.01, signal=0.1)
    x0 = np.array([0.4, 0.6])
    y0 = np.array([0.05, -0.02, 0.3])
    gp.add(x0, y0)
    mean, var = gp.predict(x0)
    assert np.all(np.abs(mean[0] - y0) <= 0.01 * 1.1)
    assert np.all(var[0] < 0.1**2)


@pytest.mark.parametrize("n", [5, 50, 200])
def test_posterior_matches_dense_oracle(n):
    rng = rng_from(42, "gp", n)
    ls, sf, sn = 0.15, 0.1, 0.01
    X = rng.random((n, 2))
    Y = rng.normal(scale=0.1, size=(n, 3))
    gp = SkillOutcomeGP(input_dim=2, lengthscale=ls, signal=sf, noise=sn)
    gp.fit(X, Y)
    Xq = rng.random((5, 2))
    mean, var = gp.predict(Xq)
    o_mean, o_var = dense_oracle(X, Y, Xq, ls, sf, sn)
    assert np.allclose(mean, o_mean, atol=1e-8)
    assert np.allclose(var[:, 0], o_var, atol=1e-8)


def test_training_targets_reproduced_within_noise():
    # targets drawn from a smooth function (consistent with the prior):
    # the posterior mean reproduces them to within a couple of noise sigmas
    rng = rng_from(3, "gp")
    X = rng.random((40, 2))
    Y = np.stack(
        [0.08 * np.sin(4 * X[:, 0]), 0.05 * X[:, 1] ** 2, -0.06 * X[:, 0] * X[:, 1]],
        axis=1,
    )
    gp = SkillOutcomeGP(input_dim=2, noise=0.01)
    gp.fit(X, Y)
    mean, _ = gp.predict(X)
    assert np.max(np.abs(mean - Y)) <= 2 * 0.01


def test_far_query_reverts_to_prior_variance():
    rng = rng_from(5, "gp")
    gp = SkillOutcomeGP(input_dim=2, lengthscale=0.15, signal=0.1)
    gp.fit(rng.random((30, 2)), rng.normal(size=(30, 3)) * 0.05)
    _, var = gp.predict(np.array([[25.0, 25.0]]))
    assert var[0, 0] == pytest.approx(0.1**2, rel=0.01)
    mean, _ = gp.predict(np.array([[25.0, 25.0]]))
    assert np.allclose(mean, 0.0, atol=1e-12)


def test_duplicate_inputs_still_fit():
    gp = SkillOutcomeGP(input_dim=2, noise=0.01)
    X = np.tile(np.array([[0.3, 0.3]]), (50, 1))
    Y = np.tile(np.array([[0.1, 0.0, -0.1]]), (50, 1))
    gp.fit(X, Y)
    mean, var = gp.predict(np.array([[0.3, 0.3]]))
    assert np.all(np.isfinite(mean)) and np.all(var > 0)


def test_mismatched_lengths_rejected():
    gp = SkillOutcomeGP(input_dim=2)
    with pytest.raises(ValueError):
        gp.fit(np.zeros((3, 2)), np.zeros((2, 3)))


def test_gp_learns_residual_function():
    # residuals that vary smoothly over descriptor space: the fitted GP must
    # beat the zero predictor everywhere near the data
    rng = rng_from(8, "gp")
    X = rng.random((60, 2))

    def f(P):
        return np.stack(
            [0.2 * np.sin(3 * P[:, 0]), -0.1 * P[:, 1], 0.05 * P.sum(axis=1)],
            axis=1,
        )

    gp = SkillOutcomeGP(input_dim=2, lengthscale=0.25, signal=0.2, noise=0.01)
    gp.fit(X, f(X))
    Xq = rng.random((100, 2))
    mean, _ = gp.predict(Xq)
    err_gp = np.linalg.norm(mean - f(Xq), axis=1).mean()
    err_zero = np.linalg.norm(f(Xq), axis=1).mean()
    assert err_gp < 0.3 * err_zero
