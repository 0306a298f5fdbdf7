"""Replay buffer and the probabilistic ensemble forward-dynamics model.

The model is an ensemble of small feed-forward networks, each predicting a
diagonal Gaussian over the next-state *delta* given the current state and
action. Inputs and targets are whitened with normalizers refreshed from the
replay buffer before every training update; members share the normalizers and
differ only in weight initialization and minibatch shuffling.

Imagined rollouts propagate the mean of the per-member mean predictions
(deterministic by default) and accumulate the across-member variance of those
means as the model-disagreement score used for skill selection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .core import ModelNotTrainedError, rng_from
from .env import (
    STATE_DIM,
    EnvConfig,
    TaskKind,
    controller_actions,
    descriptors_for,
    step_states,
)
from .nets import Mlp, Normalizer, gaussian_nll

LOGSIG_MIN, LOGSIG_MAX = -5.0, 2.0

CHECKPOINT_VERSION = "daqd-dynamics-v1"


class ReplayBuffer:
    """Fixed-capacity ring of (state, action, next_state) transitions."""

    def __init__(self, state_dim: int, action_dim: int, capacity: int = 100_000):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._s = np.zeros((capacity, state_dim))
        self._a = np.zeros((capacity, action_dim))
        self._s2 = np.zeros((capacity, state_dim))
        self._size = 0
        self._pos = 0

    def __len__(self) -> int:
        return self._size

    def add(self, s, a, s2) -> None:
        self._s[self._pos] = s
        self._a[self._pos] = a
        self._s2[self._pos] = s2
        self._pos = (self._pos + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def add_batch(self, S, A, S2) -> None:
        n = S.shape[0]
        if n >= self.capacity:
            self._s[:] = S[-self.capacity:]
            self._a[:] = A[-self.capacity:]
            self._s2[:] = S2[-self.capacity:]
            self._pos = 0
            self._size = self.capacity
            return
        first = min(n, self.capacity - self._pos)
        sl = slice(self._pos, self._pos + first)
        self._s[sl], self._a[sl], self._s2[sl] = S[:first], A[:first], S2[:first]
        rest = n - first
        if rest:
            self._s[:rest], self._a[:rest], self._s2[:rest] = (
                S[first:], A[first:], S2[first:],
            )
        self._pos = (self._pos + n) % self.capacity
        self._size = min(self._size + n, self.capacity)

    def arrays(self):
        """(S, A, S2) copies in chronological order, oldest first."""
        if self._size < self.capacity:
            idx = slice(0, self._size)
            return self._s[idx].copy(), self._a[idx].copy(), self._s2[idx].copy()
        order = np.r_[self._pos : self.capacity, 0 : self._pos]
        return self._s[order], self._a[order], self._s2[order]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    batch: int = 256              # desk-scale minibatch (512 upstream-scale)
    epochs_per_update: int = 8
    train_every_n_evals: int = 500
    holdout_fraction: float = 0.1


@dataclass(frozen=True)
class TrainReport:
    mean_nll_before: float | None
    mean_nll_after: float | None
    n_train: int = 0
    n_holdout: int = 0
    skipped: bool = False
    reason: str | None = None


class ProbNet:
    """One ensemble member: predicts (mu, sigma) in normalized-delta space.

    The raw log-std head is squashed into (LOGSIG_MIN, LOGSIG_MAX) with a
    scaled sigmoid, which keeps sigma inside the clamp bounds while staying
    differentiable everywhere.
    """

    def __init__(self, in_dim: int, hidden: int, out_dim: int, rng: np.random.Generator):
        self.out_dim = out_dim
        self.mlp = Mlp(in_dim, hidden, 2 * out_dim, rng)

    def _squash(self, raw):
        s = expit(raw)
        return LOGSIG_MIN + (LOGSIG_MAX - LOGSIG_MIN) * s, s

    def forward(self, X: np.ndarray):
        out, cache = self.mlp.forward(X)
        mu = out[:, : self.out_dim]
        logsig, s = self._squash(out[:, self.out_dim :])
        return mu, np.exp(logsig), (cache, s)

    def loss_and_grads(self, X: np.ndarray, Y: np.ndarray):
        """Mean per-sample Gaussian NLL and gradients for all tensors."""
        n = X.shape[0]
        mu, sigma, (cache, s) = self.forward(X)
        z = (mu - Y) / sigma
        loss = gaussian_nll(mu, sigma, Y)
        d_mu = z / sigma / n
        d_logsig = (1.0 - z * z) / n
        d_raw = d_logsig * (LOGSIG_MAX - LOGSIG_MIN) * s * (1.0 - s)
        d_out = np.concatenate([d_mu, d_raw], axis=1)
        return loss, self.mlp.backward(cache, d_out)


class EnsembleDynamicsModel:
    """Ensemble of ProbNets over shared input/target normalizers."""

    def __init__(
        self,
        state_dim: int,
        action_dim: int,
        hidden: int = 64,
        members: int = 4,
        seed: int = 0,
    ):
        if members < 2:
            raise ValueError("need >= 2 members for a disagreement signal")
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.hidden = hidden
        self.in_norm = Normalizer(state_dim + action_dim)
        self.target_norm = Normalizer(state_dim)
        self.members = [
            ProbNet(state_dim + action_dim, hidden, state_dim, rng_from(seed, "member", m))
            for m in range(members)
        ]
        self.trained = False
        self.updates = 0

    @property
    def n_members(self) -> int:
        return len(self.members)

    # -- prediction ---------------------------------------------------------

    def _forward_raw(self, net: ProbNet, S: np.ndarray, A: np.ndarray):
        X = self.in_norm.normalize(np.concatenate([S, A], axis=1))
        mu_n, sigma_n, _ = net.forward(X)
        mu = mu_n * self.target_norm.std + self.target_norm.mean
        sigma = sigma_n * self.target_norm.std
        return mu, sigma

    def predict(self, s, a, member: int):
        """(mu, sigma) of the predicted state delta, in raw state units."""
        if not 0 <= member < len(self.members):
            raise IndexError(f"member {member} out of range 0..{len(self.members) - 1}")
        s = np.asarray(s, dtype=np.float64)[None, :]
        a = np.asarray(a, dtype=np.float64)[None, :]
        mu, sigma = self._forward_raw(self.members[member], s, a)
        return mu[0], sigma[0]

    def predict_members_batch(self, S: np.ndarray, A: np.ndarray):
        """Stacked (M, B, D_s) per-member delta means and sigmas, raw units."""
        mus, sigmas = [], []
        for net in self.members:
            mu, sigma = self._forward_raw(net, S, A)
            mus.append(mu)
            sigmas.append(sigma)
        return np.stack(mus), np.stack(sigmas)

    # -- training -------------------------------------------------------------

    def _heldout_nll(self, Xn, Yn, log_tstd_sum: float) -> float:
        vals = []
        for net in self.members:
            mu, sigma, _ = net.forward(Xn)
            vals.append(gaussian_nll(mu, sigma, Yn))
        # shift normalized-space NLL into raw state units
        return float(np.mean(vals) + log_tstd_sum)

    def train(
        self, buffer: ReplayBuffer, cfg: TrainConfig, rng: np.random.Generator
    ) -> TrainReport:
        """One training update: refresh normalizers, fit every member.

        A fresh 90/10 train/held-out split is drawn per update; the report
        carries the held-out NLL (raw units, averaged over members) before
        and after the member updates.
        """
        n = len(buffer)
        if n < cfg.batch:
            return TrainReport(None, None, skipped=True,
                               reason=f"buffer has {n} < batch {cfg.batch} transitions")
        S, A, S2 = buffer.arrays()
        X_raw = np.concatenate([S, A], axis=1)
        Y_raw = S2 - S
        self.in_norm.refresh(X_raw)
        self.target_norm.refresh(Y_raw)
        Xn = self.in_norm.normalize(X_raw)
        Yn = self.target_norm.normalize(Y_raw)
        log_tstd_sum = float(np.log(self.target_norm.std).sum())

        perm = rng.permutation(n)
        n_hold = max(1, int(round(cfg.holdout_fraction * n)))
        hold, train_idx = perm[:n_hold], perm[n_hold:]
        nll_before = self._heldout_nll(Xn[hold], Yn[hold], log_tstd_sum)

        member_rngs = rng.spawn(len(self.members))
        for net, mrng in zip(self.members, member_rngs):
            for _ in range(cfg.epochs_per_update):
                order = train_idx[mrng.permutation(train_idx.shape[0])]
                for start in range(0, order.shape[0], cfg.batch):
                    idx = order[start : start + cfg.batch]
                    _, grads = net.loss_and_grads(Xn[idx], Yn[idx])
                    net.mlp.adam_step(grads, cfg.learning_rate, cfg.beta1, cfg.beta2)

        nll_after = self._heldout_nll(Xn[hold], Yn[hold], log_tstd_sum)
        self.trained = True
        self.updates += 1
        return TrainReport(nll_before, nll_after, n_train=train_idx.shape[0],
                           n_holdout=n_hold)

    # -- persistence --------------------------------------------------------

    def save(self, path) -> None:
        meta = {
            "version": CHECKPOINT_VERSION,
            "state_dim": self.state_dim,
            "action_dim": self.action_dim,
            "hidden": self.hidden,
            "members": len(self.members),
            "trained": self.trained,
            "updates": self.updates,
        }
        arrays = {
            "in_mean": self.in_norm.mean, "in_std": self.in_norm.std,
            "t_mean": self.target_norm.mean, "t_std": self.target_norm.std,
        }
        for i, net in enumerate(self.members):
            for key, tensor in net.mlp.tensors().items():
                arrays[f"m{i}_{key}"] = tensor
        np.savez(path, meta=json.dumps(meta), **arrays)

    @classmethod
    def load(cls, path) -> "EnsembleDynamicsModel":
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            if meta.get("version") != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {meta.get('version')!r}")
            model = cls(
                meta["state_dim"], meta["action_dim"],
                hidden=meta["hidden"], members=meta["members"],
            )
            model.in_norm.load_state({"mean": data["in_mean"], "std": data["in_std"]})
            model.target_norm.load_state({"mean": data["t_mean"], "std": data["t_std"]})
            for i, net in enumerate(model.members):
                net.mlp.load_tensors({k: data[f"m{i}_{k}"] for k in
                                      ("W1", "W2", "W3", "b1", "b2", "b3")})
            model.trained = bool(meta["trained"])
            model.updates = int(meta["updates"])
        return model


class OracleDynamicsModel:
    """Perfect-dynamics stand-in whose members all output the true delta.

    Used by tests and the oracle-equivalence harness: imagined rollouts
    through this model reproduce real rollouts exactly and disagree by zero.
    """

    def __init__(self, env_cfg: EnvConfig, members: int = 2):
        self.env_cfg = env_cfg
        self.n_members = members
        self.state_dim = STATE_DIM
        self.trained = True

    def predict_members_batch(self, S: np.ndarray, A: np.ndarray):
        delta = step_states(S, A, self.env_cfg) - S
        mus = np.broadcast_to(delta, (self.n_members, *delta.shape)).copy()
        sigmas = np.full_like(mus, 1e-8)
        return mus, sigmas

    def train(self, buffer, cfg, rng) -> TrainReport:
        return TrainReport(None, None, skipped=True, reason="oracle model")

    def save(self, path) -> None:
        raise NotImplementedError("oracle model has nothing to checkpoint")


# -- imagined rollouts -----------------------------------------------------


@dataclass
class ImaginedBatch:
    states: np.ndarray         # (B, T+1, D_s)
    descriptors: np.ndarray    # (B, D_sd)
    returns: np.ndarray        # (B,)
    disagreements: np.ndarray  # (B,)

    def __len__(self) -> int:
        return self.states.shape[0]


@dataclass(frozen=True)
class ImaginedOutcome:
    descriptor: np.ndarray
    ret: float
    disagreement: float
    states: np.ndarray


def imagine_batch(
    model,
    params: np.ndarray,
    cfg: EnvConfig,
    task: TaskKind,
    sample: bool = False,
    rng: np.random.Generator | None = None,
) -> ImaginedBatch:
    """Roll out (B, 36) genotypes through the learned dynamics.

    Actions come from the analytic controller (only the dynamics are
    learned). Mean propagation applies the across-member average delta; with
    ``sample=True`` a Gaussian perturbation with the member-averaged sigma is
    added instead. Disagreement is the across-member variance of the member
    mean deltas, averaged over state dimensions and time steps.
    """
    if not getattr(model, "trained", False):
        raise ModelNotTrainedError("dynamics model must be trained before imagining")
    if sample and rng is None:
        raise ValueError("sampling rollouts require an rng")
    params = np.asarray(params, dtype=np.float64)
    B, T = params.shape[0], cfg.episode_steps
    states = np.zeros((B, T + 1, model.state_dim))
    s = states[:, 0, :]
    disagreement = np.zeros(B)
    for t in range(T):
        a = controller_actions(params, t * cfg.dt, cfg)
        mus, sigmas = model.predict_members_batch(s, a)
        mean_mu = mus.mean(axis=0)
        disagreement += mus.var(axis=0).mean(axis=1)
        delta = mean_mu
        if sample:
            delta = mean_mu + rng.standard_normal(mean_mu.shape) * sigmas.mean(axis=0)
        s = s + delta
        states[:, t + 1, :] = s
    disagreement /= T
    sd, ret = descriptors_for(task, states, cfg)
    return ImaginedBatch(states=states, descriptors=sd, returns=ret,
                         disagreements=disagreement)


def rollout_imagined(
    model, phi, cfg: EnvConfig, task: TaskKind,
    sample: bool = False, rng: np.random.Generator | None = None,
) -> ImaginedOutcome:
    """Single-genotype form of :func:`imagine_batch`."""
    phi = np.asarray(phi, dtype=np.float64)
    batch = imagine_batch(model, phi[None, :], cfg, task, sample=sample, rng=rng)
    return ImaginedOutcome(
        descriptor=batch.descriptors[0],
        ret=float(batch.returns[0]),
        disagreement=float(batch.disagreements[0]),
        states=batch.states[0],
    )


def disagreement_score(outcome: ImaginedOutcome) -> float:
    """Ranking key for skill selection; zero iff members agreed exactly."""
    return outcome.disagreement
