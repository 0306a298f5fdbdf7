"""Deterministic planar toy environment driven by a periodic gait controller.

The robot is a planar rigid body with state (x, y, yaw, vx, vy, yawrate),
where the linear velocities are expressed in the body frame. A genotype of
36 parameters describes 12 virtual joints, three parameters each (amplitude,
phase, duty cycle) of a duty-warped sine wave. The 12 joint signals are folded
into 3 command channels (forward, lateral, yaw-rate) by a fixed +/-1 mixing
matrix and clamped to [-1, 1]; the body's velocities relax toward the
commands with a first-order lag and the pose integrates the body-frame
velocities rotated by the current yaw.

Everything here is pure and vectorized over a leading batch axis; single-item
wrappers build the dataclass-shaped outputs used elsewhere.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import DimensionMismatchError, Trajectory, Transition, wrap_angle

N_JOINTS = 12
GENOTYPE_DIM = 3 * N_JOINTS  # amplitude, phase, duty per joint
STATE_DIM = 6                # x, y, yaw, vx, vy, yawrate
ACTION_DIM = 3               # forward, lateral, yaw-rate commands

DUTY_MIN, DUTY_MAX = 0.1, 0.9
VELOCITY_LAG = 0.2  # per-step relaxation factor toward the commanded velocity

# Fixed +/-1 fold of the 12 joint signals into the 3 command channels. Each
# row sums to zero, so a gait with identical joints produces no net command
# and diversity comes from asymmetries between joints.
#   forward : alternating sign by joint index
#   lateral : sign alternating every pair of joints
#   yaw     : first six joints against the last six
MIXING = np.array(
    [
        [1 if j % 2 == 0 else -1 for j in range(N_JOINTS)],
        [1 if (j // 2) % 2 == 0 else -1 for j in range(N_JOINTS)],
        [1 if j < N_JOINTS // 2 else -1 for j in range(N_JOINTS)],
    ],
    dtype=np.float64,
)


class TaskKind(enum.Enum):
    OMNI = "omni"  # reach diverse (x, y) endpoints, returns reward circular arcs
    UNI = "uni"    # diverse velocity-duty signatures, return is forward progress


@dataclass(frozen=True)
class EnvConfig:
    episode_steps: int = 60
    dt: float = 0.05
    damage_mask: tuple = tuple([False] * N_JOINTS)  # True disables a joint
    gait_gain: float = 1.0
    controller_period: float = 1.0
    reach_bound: float = 2.0        # omni descriptor half-range L (meters)
    uni_threshold_scale: float = 1.0
    uni_interval_steps: int = 1
    # velocity samples per step (linear interpolation between states); the
    # duty fractions must be measured finer than the container's distance
    # threshold or every distinct gait lands on its own lattice point
    uni_supersample: int = 4

    def __post_init__(self):
        if self.episode_steps < 1 or self.dt <= 0.0:
            raise ValueError("episode_steps must be >= 1 and dt > 0")
        if len(self.damage_mask) != N_JOINTS:
            raise DimensionMismatchError(
                f"damage_mask must have {N_JOINTS} entries"
            )
        if self.uni_interval_steps < 1 or self.uni_interval_steps > self.episode_steps:
            raise ValueError("uni_interval_steps must be in [1, episode_steps]")
        if self.uni_supersample < 1:
            raise ValueError("uni_supersample must be >= 1")

    @property
    def episode_seconds(self) -> float:
        return self.episode_steps * self.dt

    def active_joints(self) -> np.ndarray:
        return ~np.asarray(self.damage_mask, dtype=bool)


def descriptor_dim(task: TaskKind) -> int:
    return 2 if task is TaskKind.OMNI else 6


@dataclass(frozen=True)
class PeriodicController:
    params: np.ndarray          # genotype, length GENOTYPE_DIM
    period: float = 1.0

    def __post_init__(self):
        if self.params.shape != (GENOTYPE_DIM,):
            raise DimensionMismatchError(
                f"controller needs {GENOTYPE_DIM} parameters, got {self.params.shape}"
            )


def joint_waves(params: np.ndarray, t: float, period: float) -> np.ndarray:
    """Duty-warped sine signal of every joint at time ``t``.

    ``params`` has shape (B, 36). For one joint with amplitude a, phase p and
    raw duty u the signal is

        a * sin(2*pi*w(theta)),  theta = frac(t / period + p)

    where duty = 0.1 + 0.8 * u and w maps [0, duty) linearly onto the positive
    half-cycle [0, 0.5) and [duty, 1) onto the negative half-cycle, so the
    signal stays positive for exactly the duty fraction of each period.
    """
    p = params.reshape(params.shape[0], N_JOINTS, 3)
    amp = p[:, :, 0]
    phase = p[:, :, 1]
    duty = DUTY_MIN + (DUTY_MAX - DUTY_MIN) * p[:, :, 2]
    theta = np.mod(t / period + phase, 1.0)
    pos = theta < duty
    warped = np.where(
        pos,
        theta / (2.0 * duty),
        0.5 + (theta - duty) / (2.0 * (1.0 - duty)),
    )
    return amp * np.sin(2.0 * np.pi * warped)


def controller_actions(params: np.ndarray, t: float, cfg: EnvConfig) -> np.ndarray:
    """(B, 3) command channels at time ``t``; damaged joints contribute zero."""
    waves = joint_waves(params, t, cfg.controller_period)
    waves = waves * cfg.active_joints()[None, :]
    # accumulate joints in a fixed order: BLAS matmul reductions depend on
    # the batch size in the last ulp, which would make a genotype's outcome
    # depend on what it was batched with
    channels = np.zeros((waves.shape[0], ACTION_DIM))
    for j in range(N_JOINTS):
        channels += waves[:, j : j + 1] * MIXING[:, j][None, :]
    return np.clip(channels, -1.0, 1.0)


def controller_action(ctrl: PeriodicController, t: float, cfg: EnvConfig) -> np.ndarray:
    """Single-controller form of :func:`controller_actions`."""
    if t < 0:
        raise ValueError("t must be >= 0")
    cfg = _with_period(cfg, ctrl.period)
    return controller_actions(ctrl.params[None, :], t, cfg)[0]


def _with_period(cfg: EnvConfig, period: float) -> EnvConfig:
    if period == cfg.controller_period:
        return cfg
    return EnvConfig(
        episode_steps=cfg.episode_steps,
        dt=cfg.dt,
        damage_mask=cfg.damage_mask,
        gait_gain=cfg.gait_gain,
        controller_period=period,
        reach_bound=cfg.reach_bound,
        uni_threshold_scale=cfg.uni_threshold_scale,
        uni_interval_steps=cfg.uni_interval_steps,
    )


def step_states(states: np.ndarray, actions: np.ndarray, cfg: EnvConfig) -> np.ndarray:
    """One dynamics step for a (B, 6) state batch under (B, 3) commands.

    Velocities relax toward gain * command with factor VELOCITY_LAG, then the
    pose integrates the new body-frame velocities over ``dt``.
    """
    s = np.asarray(states, dtype=np.float64)
    a = np.asarray(actions, dtype=np.float64)
    v = s[:, 3:6]
    v_new = v + VELOCITY_LAG * (cfg.gait_gain * a - v)
    yaw = s[:, 2]
    cos_y, sin_y = np.cos(yaw), np.sin(yaw)
    out = np.empty_like(s)
    out[:, 0] = s[:, 0] + cfg.dt * (v_new[:, 0] * cos_y - v_new[:, 1] * sin_y)
    out[:, 1] = s[:, 1] + cfg.dt * (v_new[:, 0] * sin_y + v_new[:, 1] * cos_y)
    out[:, 2] = wrap_angle(yaw + cfg.dt * v_new[:, 2])
    out[:, 3:6] = v_new
    return out


def step(s: np.ndarray, a: np.ndarray, cfg: EnvConfig) -> np.ndarray:
    """Single-state form of :func:`step_states`."""
    s = np.asarray(s, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    if s.shape != (STATE_DIM,) or a.shape != (ACTION_DIM,):
        raise DimensionMismatchError("expected state (6,), action (3,)")
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(a))):
        raise ValueError("state and action must be finite")
    return step_states(s[None, :], a[None, :], cfg)[0]


# -- descriptors and returns ---------------------------------------------


def descriptors_omni(states: np.ndarray, cfg: EnvConfig):
    """Omni-directional descriptor and return for (B, T+1, 6) state batches.

    descriptor: final (x, y) displacement clipped to [-L, L] and mapped to
    [0, 1]^2. return: negative absolute difference between the final yaw and
    the heading of the circular arc through start and endpoint (that arc's
    tangent at the endpoint has heading 2 * atan2(y, x)); zero is a perfect
    arc, more negative is worse.
    """
    final = states[:, -1, :]
    xy = final[:, 0:2]
    L = cfg.reach_bound
    sd = (np.clip(xy, -L, L) + L) / (2.0 * L)
    alpha_d = 2.0 * np.arctan2(xy[:, 1], xy[:, 0])
    ret = -np.abs(wrap_angle(final[:, 2] - alpha_d))
    return sd, ret


def descriptors_uni(states: np.ndarray, cfg: EnvConfig):
    """Uni-directional descriptor and return for (B, T+1, 6) state batches.

    The descriptor is six duty fractions: the fraction of sampled intervals
    in which each signed velocity channel (vx, vy, yawrate; positive and
    negative) exceeds the threshold c = 0.005 * pi * scale. Velocities are
    sampled ``uni_supersample`` times per interval with linear interpolation
    between states. The return is the final forward displacement x_T.
    """
    T = states.shape[1] - 1
    vel = states[:, :, 3:6]
    # sampling grid over (0, T] in steps: interval k widens it, supersampling
    # refines it by linear interpolation between states
    spacing = cfg.uni_interval_steps / cfg.uni_supersample
    ts = np.arange(1, int(T / spacing) + 1) * spacing
    ts = ts[ts <= T + 1e-12]
    lo = np.minimum(np.floor(ts - 1e-12), T - 1).astype(int)
    frac = (ts - lo)[None, :, None]
    samples = vel[:, lo, :] * (1.0 - frac) + vel[:, lo + 1, :] * frac
    c = 0.005 * np.pi * cfg.uni_threshold_scale
    above = samples > c
    below = samples < -c
    frac_above = above.mean(axis=1)
    frac_below = below.mean(axis=1)
    sd = np.stack(
        [
            frac_above[:, 0], frac_below[:, 0],
            frac_above[:, 1], frac_below[:, 1],
            frac_above[:, 2], frac_below[:, 2],
        ],
        axis=1,
    )
    return sd, states[:, -1, 0].copy()


def descriptors_for(task: TaskKind, states: np.ndarray, cfg: EnvConfig):
    if task is TaskKind.OMNI:
        return descriptors_omni(states, cfg)
    return descriptors_uni(states, cfg)


def descriptor_omni(traj: Trajectory, cfg: EnvConfig):
    sd, ret = descriptors_omni(traj.states[None, :, :], cfg)
    return sd[0], float(ret[0])


def descriptor_uni(traj: Trajectory, cfg: EnvConfig):
    sd, ret = descriptors_uni(traj.states[None, :, :], cfg)
    return sd[0], float(ret[0])


# -- rollouts ---------------------------------------------------------------


@dataclass
class BatchRollout:
    """Array-backed result of rolling out a genotype batch."""

    states: np.ndarray       # (B, T+1, 6)
    actions: np.ndarray      # (B, T, 3)
    descriptors: np.ndarray  # (B, D_sd)
    returns: np.ndarray      # (B,)

    def __len__(self) -> int:
        return self.states.shape[0]

    def flat_transitions(self):
        """(s, a, s') arrays flattened over batch and time, for the buffer."""
        B, Tp1, Ds = self.states.shape
        s = self.states[:, :-1, :].reshape(-1, Ds)
        a = self.actions.reshape(-1, self.actions.shape[2])
        s_next = self.states[:, 1:, :].reshape(-1, Ds)
        return s, a, s_next


@dataclass(frozen=True)
class EpisodeOutcome:
    trajectory: Trajectory
    descriptor: np.ndarray
    ret: float
    transitions: list = field(default_factory=list)


def rollout_batch(params: np.ndarray, cfg: EnvConfig, task: TaskKind) -> BatchRollout:
    """Roll out (B, 36) genotypes from rest at the origin for T steps."""
    params = np.asarray(params, dtype=np.float64)
    if params.ndim != 2 or params.shape[1] != GENOTYPE_DIM:
        raise DimensionMismatchError(
            f"expected (B, {GENOTYPE_DIM}) genotypes, got {params.shape}"
        )
    B, T = params.shape[0], cfg.episode_steps
    states = np.zeros((B, T + 1, STATE_DIM))
    actions = np.zeros((B, T, ACTION_DIM))
    s = states[:, 0, :]
    for t in range(T):
        a = controller_actions(params, t * cfg.dt, cfg)
        s = step_states(s, a, cfg)
        actions[:, t, :] = a
        states[:, t + 1, :] = s
    sd, ret = descriptors_for(task, states, cfg)
    return BatchRollout(states=states, actions=actions, descriptors=sd, returns=ret)


def rollout_env(phi, cfg: EnvConfig, task: TaskKind) -> EpisodeOutcome:
    """Single-genotype rollout materializing trajectory and transitions."""
    phi = np.asarray(phi, dtype=np.float64)
    batch = rollout_batch(phi[None, :], cfg, task)
    states, actions = batch.states[0], batch.actions[0]
    ret = float(batch.returns[0])
    rewards = np.zeros(cfg.episode_steps)
    rewards[-1] = ret  # terminal return; sum of rewards equals the return
    traj = Trajectory(states=states, actions=actions, rewards=rewards)
    transitions = [
        Transition(states[t], actions[t], states[t + 1])
        for t in range(cfg.episode_steps)
    ]
    return EpisodeOutcome(
        trajectory=traj,
        descriptor=batch.descriptors[0],
        ret=ret,
        transitions=transitions,
    )


class ToyEnv:
    """Environment handle that meters every rollout it performs.

    Loops report evaluation counts from ``evals_used``, which makes the
    accounting auditable: nothing else in the package rolls a genotype
    through the true dynamics.
    """

    def __init__(self, cfg: EnvConfig, task: TaskKind):
        self.cfg = cfg
        self.task = task
        self.evals_used = 0

    @property
    def descriptor_dim(self) -> int:
        return descriptor_dim(self.task)

    def evaluate_batch(self, params: np.ndarray) -> BatchRollout:
        out = rollout_batch(params, self.cfg, self.task)
        self.evals_used += len(out)
        return out

    def evaluate(self, phi) -> EpisodeOutcome:
        out = rollout_env(phi, self.cfg, self.task)
        self.evals_used += 1
        return out
