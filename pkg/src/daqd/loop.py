"""QD loop orchestration.

Three loop flavors share one candidate pipeline (uniform parent selection +
directional variation, deterministic per-batch RNG streams):

* ``run_vanilla_qd``          every candidate is evaluated in the environment
* ``run_direct_surrogate_qd`` candidates are screened by a net mapping the
                              genotype straight to (descriptor, return)
* ``run_daqd``                candidates are screened by rolling them out
                              through the learned dynamics ensemble into an
                              imagined repertoire; accepted ones are executed,
                              added to the real repertoire, and the imagined
                              repertoire is re-synced to the real one

Environment evaluations are counted by the env handle itself; imagined
rollouts never touch that counter.
"""

from __future__ import annotations

import enum
import time
import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError, derive_seed, rng_from
from .dynamics import (
    EnsembleDynamicsModel,
    ReplayBuffer,
    TrainConfig,
    imagine_batch,
)
from .env import ACTION_DIM, GENOTYPE_DIM, STATE_DIM, ToyEnv, descriptor_dim
from .nets import Mlp, Normalizer
from .repertoire import ContainerParams, Repertoire, RepertoireEntry
from .variation import (
    VariationConfig,
    random_genotypes,
    uniform_select,
    variation_batch,
)


class Mode(enum.Enum):
    VANILLA_QD = "vanilla_qd"
    DIRECT_SURROGATE_QD = "direct_surrogate_qd"
    DAQD = "daqd"


# -- selection strategies ----------------------------------------------------


@dataclass(frozen=True)
class AllImagined:
    """Evaluate every imagined entry that has not been executed yet."""


@dataclass(frozen=True)
class LowDisagreementTopN:
    """Pool the lowest-disagreement imagined entries, take the best returns."""

    pool: int = 20
    take: int = 20

    def __post_init__(self):
        if not self.pool >= self.take >= 1:
            raise ValueError("need pool >= take >= 1")


def select_imagined(strategy, fresh):
    """Pick entries to execute from ``fresh`` [(slot, entry), ...] pairs.

    Slot order breaks all ties so selection is deterministic.
    """
    if isinstance(strategy, AllImagined):
        return [e for _, e in fresh]
    if not isinstance(strategy, LowDisagreementTopN):
        raise ConfigError(f"unknown selection strategy {strategy!r}")
    if any(e.disagreement is None for _, e in fresh):
        raise ConfigError("low-disagreement selection needs disagreement scores")
    if len(fresh) < strategy.pool:
        warnings.warn(
            f"selection pool shrunk to {len(fresh)} (< {strategy.pool}) entries"
        )
    pool = sorted(fresh, key=lambda se: (se[1].disagreement, se[0]))[: strategy.pool]
    ranked = sorted(pool, key=lambda se: (-se[1].ret, se[0]))
    return [e for _, e in ranked[: strategy.take]]


# -- stop rules ----------------------------------------------------------------


@dataclass(frozen=True)
class BudgetExhausted:
    """Run until the environment-evaluation budget is spent."""


@dataclass(frozen=True)
class ImaginedAdditionsBelow:
    """Stop once imagined additions per iteration drop below a threshold."""

    threshold: float = 1.0
    window: int = 10

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")


@dataclass(frozen=True)
class Both:
    threshold: float = 1.0
    window: int = 10


def additions_stop_triggered(window_counts, rule) -> bool:
    """True iff the windowed mean of per-iteration additions is below the rule."""
    if isinstance(rule, BudgetExhausted):
        return False
    if len(window_counts) < rule.window:
        return False
    return float(np.mean(window_counts)) < rule.threshold


def _stop_window(rule) -> int:
    return rule.window if not isinstance(rule, BudgetExhausted) else 1


# -- configuration and results ---------------------------------------------------


@dataclass(frozen=True)
class LoopConfig:
    eval_budget: int
    imagination_iters_per_cycle: int = 10
    selection: object = field(default_factory=AllImagined)
    stop_rule: object = field(default_factory=BudgetExhausted)
    metrics_every: int = 500
    max_cycles: int | None = None     # loop-control knob for tests/harnesses
    max_idle_cycles: int = 50         # consecutive zero-selection cycles allowed

    def __post_init__(self):
        if self.eval_budget <= 0:
            raise ConfigError("eval_budget must be > 0")
        if self.imagination_iters_per_cycle < 1:
            raise ConfigError("imagination_iters_per_cycle must be >= 1")
        if self.metrics_every < 1:
            raise ConfigError("metrics_every must be >= 1")


@dataclass
class MetricsRow:
    evals_used: int
    repertoire_size: int
    qd_score: float
    imagined_size: int
    imagined_rollouts: int
    model_nll_heldout: float | None
    wall_time_s: float


# Columns written to metrics CSVs. Wall time is kept on the in-memory row and
# in the run log only: timing is inherently nondeterministic and the CSV
# outputs must reproduce bit-exactly from a manifest.
METRICS_COLUMNS = (
    "evals_used",
    "repertoire_size",
    "qd_score",
    "imagined_size",
    "imagined_rollouts",
    "model_nll_heldout",
)


def _fmt_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % value


class MetricsLogger:
    """Append-only CSV writer: header on first row, flushed per row."""

    def __init__(self, path):
        self._fh = open(path, "w", encoding="utf-8")  # fail at startup, not mid-run
        self._wrote_header = False

    def append(self, row: MetricsRow) -> None:
        if not self._wrote_header:
            self._fh.write(",".join(METRICS_COLUMNS) + "\n")
            self._wrote_header = True
        values = [getattr(row, col) for col in METRICS_COLUMNS]
        self._fh.write(",".join(_fmt_cell(v) for v in values) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


@dataclass
class LoopResult:
    repertoire: Repertoire
    imagined: Repertoire | None
    model: object | None
    buffer: ReplayBuffer | None
    metrics: list
    decisions: list          # candidate-screening decisions, in order
    decisions_real: list     # real-container decisions for executed skills
    imagined_rollouts: int = 0
    train_reports: list = field(default_factory=list)
    stop_reason: str = "budget_exhausted"


class _MetricsTracker:
    def __init__(self, cfg: LoopConfig, logger: MetricsLogger | None):
        self.cfg = cfg
        self.logger = logger
        self.rows: list[MetricsRow] = []
        self._t0 = time.perf_counter()
        self._last_bucket = -1

    def maybe_emit(self, env, rep, rep_im, imagined_rollouts, nll, force=False):
        bucket = env.evals_used // self.cfg.metrics_every
        if not force and bucket <= self._last_bucket:
            return
        if force and self.rows and self.rows[-1].evals_used == env.evals_used:
            return
        self._last_bucket = bucket
        row = MetricsRow(
            evals_used=env.evals_used,
            repertoire_size=len(rep),
            qd_score=rep.qd_score(),
            imagined_size=len(rep_im) if rep_im is not None else 0,
            imagined_rollouts=imagined_rollouts,
            model_nll_heldout=nll,
            wall_time_s=time.perf_counter() - self._t0,
        )
        self.rows.append(row)
        if self.logger is not None:
            self.logger.append(row)


def _real_entry(policy, sd, ret) -> RepertoireEntry:
    return RepertoireEntry(
        policy=np.array(policy), descriptor=np.array(sd), ret=float(ret),
        disagreement=None, evaluated_in_env=True,
    )


def _imagined_entry(policy, sd, ret, disagreement) -> RepertoireEntry:
    return RepertoireEntry(
        policy=np.array(policy), descriptor=np.array(sd), ret=float(ret),
        disagreement=float(disagreement) if disagreement is not None else None,
        evaluated_in_env=False,
    )


def _make_candidates(rep, n, var_cfg, rng) -> np.ndarray:
    parents = uniform_select(rep, 2 * n, rng)
    return variation_batch(parents[:n], parents[n:], var_cfg, rng)


def _bootstrap(env, rep, cfg, var_cfg, seed, decisions):
    n0 = min(var_cfg.init_random_count, cfg.eval_budget)
    phis = random_genotypes(n0, GENOTYPE_DIM, rng_from(seed, "init"))
    out = env.evaluate_batch(phis)
    for i in range(len(out)):
        o = rep.try_add(_real_entry(phis[i], out.descriptors[i], out.returns[i]))
        decisions.append(o.code())
    return phis, out


# -- vanilla QD ------------------------------------------------------------------


def run_vanilla_qd(
    env: ToyEnv,
    cfg: LoopConfig,
    container: ContainerParams,
    var_cfg: VariationConfig,
    seed: int,
    metrics_logger: MetricsLogger | None = None,
) -> LoopResult:
    """Plain select-vary-evaluate-add QD against the environment."""
    rep = Repertoire(env.descriptor_dim, container)
    decisions: list[str] = []
    tracker = _MetricsTracker(cfg, metrics_logger)
    _bootstrap(env, rep, cfg, var_cfg, seed, decisions)
    tracker.maybe_emit(env, rep, None, 0, None)  # post-init snapshot
    b = 0
    while env.evals_used < cfg.eval_budget:
        n = min(var_cfg.batch_size, cfg.eval_budget - env.evals_used)
        rng_b = rng_from(seed, "batch", b)
        b += 1
        cands = _make_candidates(rep, n, var_cfg, rng_b)
        out = env.evaluate_batch(cands)
        for i in range(len(out)):
            o = rep.try_add(_real_entry(cands[i], out.descriptors[i], out.returns[i]))
            decisions.append(o.code())
        tracker.maybe_emit(env, rep, None, 0, None)
    tracker.maybe_emit(env, rep, None, 0, None, force=True)
    return LoopResult(
        repertoire=rep, imagined=None, model=None, buffer=None,
        metrics=tracker.rows, decisions=decisions, decisions_real=decisions,
    )


# -- model-based QD -----------------------------------------------------------------


def run_daqd(
    env: ToyEnv,
    cfg: LoopConfig,
    container: ContainerParams,
    var_cfg: VariationConfig,
    train_cfg: TrainConfig,
    seed: int,
    model=None,
    buffer: ReplayBuffer | None = None,
    buffer_capacity: int = 100_000,
    model_hidden: int = 64,
    model_members: int = 4,
    metrics_logger: MetricsLogger | None = None,
) -> LoopResult:
    """Dynamics-model QD with an imagined repertoire.

    Cycle: imagine candidate batches and screen them into the imagined
    repertoire; select fresh imagined entries; execute them in the
    environment and add the outcomes to the real repertoire; sync the
    imagined repertoire back to the real one; retrain the model on the
    replay-buffer cadence.
    """
    if model is None:
        model = EnsembleDynamicsModel(
            STATE_DIM, ACTION_DIM, hidden=model_hidden, members=model_members,
            seed=derive_seed(seed, "model"),
        )
    if buffer is None:
        buffer = ReplayBuffer(STATE_DIM, ACTION_DIM, capacity=buffer_capacity)

    rep = Repertoire(env.descriptor_dim, container)
    rep_im = Repertoire(env.descriptor_dim, container)
    decisions: list[str] = []
    decisions_real: list[str] = []
    train_reports = []
    tracker = _MetricsTracker(cfg, metrics_logger)
    last_nll = None
    train_count = 0

    def train_now():
        nonlocal last_nll, train_count
        report = model.train(buffer, train_cfg, rng_from(seed, "train", train_count))
        train_count += 1
        train_reports.append(report)
        if not report.skipped:
            last_nll = report.mean_nll_after

    imagined_rollouts = 0
    if not model.trained:
        _, out = _bootstrap(env, rep, cfg, var_cfg, seed, decisions)
        buffer.add_batch(*out.flat_transitions())
        train_now()
        rep_im.sync_from(rep)
    else:
        # pretrained model: seed the imagined container by screening the
        # random initialization in imagination, at zero env cost
        phis = random_genotypes(var_cfg.init_random_count, GENOTYPE_DIM,
                                rng_from(seed, "init"))
        im = imagine_batch(model, phis, env.cfg, env.task)
        imagined_rollouts += len(im)
        for i in range(len(im)):
            o = rep_im.try_add(_imagined_entry(
                phis[i], im.descriptors[i], im.returns[i], im.disagreements[i]
            ))
            decisions.append(o.code())
    tracker.maybe_emit(env, rep, rep_im, imagined_rollouts, last_nll)
    evals_since_train = 0
    idle_cycles = 0
    stop_reason = "budget_exhausted"
    additions_window = deque(maxlen=_stop_window(cfg.stop_rule))
    b = 0
    cycle = 0
    stop = False
    while not stop and env.evals_used < cfg.eval_budget:
        if cfg.max_cycles is not None and cycle >= cfg.max_cycles:
            stop_reason = "max_cycles"
            break
        for _ in range(cfg.imagination_iters_per_cycle):
            rng_b = rng_from(seed, "batch", b)
            b += 1
            cands = _make_candidates(rep_im, var_cfg.batch_size, var_cfg, rng_b)
            im = imagine_batch(model, cands, env.cfg, env.task)
            imagined_rollouts += len(im)
            adds = 0
            for i in range(len(im)):
                o = rep_im.try_add(_imagined_entry(
                    cands[i], im.descriptors[i], im.returns[i], im.disagreements[i]
                ))
                decisions.append(o.code())
                adds += int(o.accepted)
            additions_window.append(adds)
            if additions_stop_triggered(additions_window, cfg.stop_rule):
                stop = True
                stop_reason = "imagined_additions_below"
                break

        fresh = [(s, e) for s, e in enumerate(rep_im.entries) if not e.evaluated_in_env]
        selected = select_imagined(cfg.selection, fresh)
        selected = selected[: cfg.eval_budget - env.evals_used]
        if selected:
            idle_cycles = 0
            phis = np.stack([e.policy for e in selected])
            out = env.evaluate_batch(phis)
            buffer.add_batch(*out.flat_transitions())
            for i in range(len(out)):
                o = rep.try_add(_real_entry(phis[i], out.descriptors[i], out.returns[i]))
                decisions_real.append(o.code())
            evals_since_train += len(selected)
        else:
            idle_cycles += 1
            if idle_cycles >= cfg.max_idle_cycles:
                stop = True
                stop_reason = "idle_cycles"
        rep_im.sync_from(rep)
        if evals_since_train >= train_cfg.train_every_n_evals:
            train_now()
            evals_since_train = 0
        tracker.maybe_emit(env, rep, rep_im, imagined_rollouts, last_nll)
        cycle += 1

    tracker.maybe_emit(env, rep, rep_im, imagined_rollouts, last_nll, force=True)
    return LoopResult(
        repertoire=rep, imagined=rep_im, model=model, buffer=buffer,
        metrics=tracker.rows, decisions=decisions, decisions_real=decisions_real,
        imagined_rollouts=imagined_rollouts, train_reports=train_reports,
        stop_reason=stop_reason,
    )


# -- direct-surrogate QD ------------------------------------------------------------


@dataclass(frozen=True)
class DirectTrainReport:
    mse_before: float | None
    mse_after: float | None
    n_train: int = 0
    skipped: bool = False


class DirectSurrogateModel:
    """Deterministic net from genotype straight to (descriptor, return).

    Task-specific by construction: unlike the dynamics ensemble it cannot be
    reused for a different descriptor definition, which is exactly the
    trade-off the baseline is meant to expose.
    """

    def __init__(self, genotype_dim: int, out_dim: int, hidden: int = 64, seed: int = 0):
        self.genotype_dim = genotype_dim
        self.out_dim = out_dim  # descriptor_dim + 1 (return)
        self.mlp = Mlp(genotype_dim, hidden, out_dim, rng_from(seed, "direct"))
        self.in_norm = Normalizer(genotype_dim)
        self.out_norm = Normalizer(out_dim)
        self.trained = False

    def predict_batch(self, params: np.ndarray):
        """Predicted (descriptor, return); descriptors clipped into [0, 1]."""
        Xn = self.in_norm.normalize(params)
        out, _ = self.mlp.forward(Xn)
        raw = self.out_norm.denormalize(out)
        sd = np.clip(raw[:, :-1], 0.0, 1.0)
        return sd, raw[:, -1]

    def _mse(self, Xn, Yn) -> float:
        out, _ = self.mlp.forward(Xn)
        return float(((out - Yn) ** 2).sum(axis=1).mean())

    def train(self, X: np.ndarray, Y: np.ndarray, cfg: TrainConfig,
              rng: np.random.Generator) -> DirectTrainReport:
        n = X.shape[0]
        if n < cfg.batch:
            return DirectTrainReport(None, None, skipped=True)
        self.in_norm.refresh(X)
        self.out_norm.refresh(Y)
        Xn = self.in_norm.normalize(X)
        Yn = self.out_norm.normalize(Y)
        perm = rng.permutation(n)
        n_hold = max(1, int(round(cfg.holdout_fraction * n)))
        hold, train_idx = perm[:n_hold], perm[n_hold:]
        mse_before = self._mse(Xn[hold], Yn[hold])
        for _ in range(cfg.epochs_per_update):
            order = train_idx[rng.permutation(train_idx.shape[0])]
            for start in range(0, order.shape[0], cfg.batch):
                idx = order[start : start + cfg.batch]
                out, cache = self.mlp.forward(Xn[idx])
                d_out = 2.0 * (out - Yn[idx]) / idx.shape[0]
                grads = self.mlp.backward(cache, d_out)
                self.mlp.adam_step(grads, cfg.learning_rate, cfg.beta1, cfg.beta2)
        mse_after = self._mse(Xn[hold], Yn[hold])
        self.trained = True
        return DirectTrainReport(mse_before, mse_after, n_train=train_idx.shape[0])


def run_direct_surrogate_qd(
    env: ToyEnv,
    cfg: LoopConfig,
    container: ContainerParams,
    var_cfg: VariationConfig,
    train_cfg: TrainConfig,
    seed: int,
    surrogate_hidden: int = 64,
    metrics_logger: MetricsLogger | None = None,
) -> LoopResult:
    """QD screened by the direct genotype->(descriptor, return) surrogate.

    While the surrogate has no training yet (fewer evaluated pairs than one
    minibatch) screening is disabled and batches run exactly like vanilla QD.
    """
    if not isinstance(cfg.selection, AllImagined):
        raise ConfigError("the direct-surrogate loop supports AllImagined selection only")
    surrogate = DirectSurrogateModel(
        GENOTYPE_DIM, env.descriptor_dim + 1, hidden=surrogate_hidden,
        seed=derive_seed(seed, "surrogate"),
    )
    rep = Repertoire(env.descriptor_dim, container)
    rep_im = Repertoire(env.descriptor_dim, container)
    decisions: list[str] = []
    decisions_real: list[str] = []
    train_reports = []
    tracker = _MetricsTracker(cfg, metrics_logger)
    X_rows: list[np.ndarray] = []
    Y_rows: list[np.ndarray] = []
    train_count = 0

    def record_pairs(phis, out):
        for i in range(len(out)):
            X_rows.append(phis[i].copy())
            Y_rows.append(np.append(out.descriptors[i], out.returns[i]))

    def train_now():
        nonlocal train_count
        report = surrogate.train(
            np.stack(X_rows), np.stack(Y_rows), train_cfg,
            rng_from(seed, "train", train_count),
        )
        train_count += 1
        train_reports.append(report)

    phis0, out = _bootstrap(env, rep, cfg, var_cfg, seed, decisions)
    record_pairs(phis0, out)
    train_now()
    rep_im.sync_from(rep)
    tracker.maybe_emit(env, rep, rep_im, 0, None)

    screened = 0
    evals_since_train = 0
    idle_cycles = 0
    stop_reason = "budget_exhausted"
    b = 0
    cycle = 0
    while env.evals_used < cfg.eval_budget:
        if cfg.max_cycles is not None and cycle >= cfg.max_cycles:
            stop_reason = "max_cycles"
            break
        if not surrogate.trained:
            # cold start: no screening, behave exactly like vanilla QD
            n = min(var_cfg.batch_size, cfg.eval_budget - env.evals_used)
            rng_b = rng_from(seed, "batch", b)
            b += 1
            cands = _make_candidates(rep, n, var_cfg, rng_b)
            out = env.evaluate_batch(cands)
            record_pairs(cands, out)
            for i in range(len(out)):
                o = rep.try_add(_real_entry(cands[i], out.descriptors[i], out.returns[i]))
                decisions.append(o.code())
                decisions_real.append(o.code())
            evals_since_train += n
            rep_im.sync_from(rep)
        else:
            for _ in range(cfg.imagination_iters_per_cycle):
                rng_b = rng_from(seed, "batch", b)
                b += 1
                cands = _make_candidates(rep_im, var_cfg.batch_size, var_cfg, rng_b)
                sd_pred, ret_pred = surrogate.predict_batch(cands)
                screened += cands.shape[0]
                for i in range(cands.shape[0]):
                    o = rep_im.try_add(_imagined_entry(cands[i], sd_pred[i], ret_pred[i], None))
                    decisions.append(o.code())
            fresh = [(s, e) for s, e in enumerate(rep_im.entries) if not e.evaluated_in_env]
            selected = select_imagined(cfg.selection, fresh)
            selected = selected[: cfg.eval_budget - env.evals_used]
            if selected:
                idle_cycles = 0
                phis = np.stack([e.policy for e in selected])
                out = env.evaluate_batch(phis)
                record_pairs(phis, out)
                for i in range(len(out)):
                    o = rep.try_add(_real_entry(phis[i], out.descriptors[i], out.returns[i]))
                    decisions_real.append(o.code())
                evals_since_train += len(selected)
            else:
                idle_cycles += 1
                if idle_cycles >= cfg.max_idle_cycles:
                    stop_reason = "idle_cycles"
                    break
            rep_im.sync_from(rep)
        if evals_since_train >= train_cfg.train_every_n_evals:
            train_now()
            evals_since_train = 0
        tracker.maybe_emit(env, rep, rep_im, screened, None)
        cycle += 1

    tracker.maybe_emit(env, rep, rep_im, screened, None, force=True)
    return LoopResult(
        repertoire=rep, imagined=rep_im, model=surrogate, buffer=None,
        metrics=tracker.rows, decisions=decisions, decisions_real=decisions_real,
        imagined_rollouts=screened, train_reports=train_reports,
        stop_reason=stop_reason,
    )


# -- imagination-only runs ------------------------------------------------------------


def run_imagination_only(
    model,
    env_cfg,
    task,
    rollout_budget: int,
    container: ContainerParams,
    var_cfg: VariationConfig,
    seed: int,
) -> tuple[Repertoire, int]:
    """Build an imagined repertoire for ``task`` with zero env evaluations.

    Every imagined rollout (including the random initialization screen)
    counts against ``rollout_budget``. Typically used to re-target a dynamics
    model trained on one task at a new descriptor definition.
    """
    rep_im = Repertoire(descriptor_dim(task), container)
    used = 0
    if rollout_budget <= 0:
        return rep_im, used
    n0 = min(var_cfg.init_random_count, rollout_budget)
    if n0 > 0:
        phis = random_genotypes(n0, GENOTYPE_DIM, rng_from(seed, "init"))
        im = imagine_batch(model, phis, env_cfg, task)
        used += n0
        for i in range(len(im)):
            rep_im.try_add(_imagined_entry(
                phis[i], im.descriptors[i], im.returns[i], im.disagreements[i]
            ))
    b = 0
    while used < rollout_budget:
        n = min(var_cfg.batch_size, rollout_budget - used)
        rng_b = rng_from(seed, "batch", b)
        b += 1
        cands = _make_candidates(rep_im, n, var_cfg, rng_b)
        im = imagine_batch(model, cands, env_cfg, task)
        used += n
        for i in range(len(im)):
            rep_im.try_add(_imagined_entry(
                cands[i], im.descriptors[i], im.returns[i], im.disagreements[i]
            ))
    return rep_im, used


# -- zero/few-shot skill acquisition ---------------------------------------------------


@dataclass(frozen=True)
class FewShotRow:
    imagined_ret: float
    disagreement: float
    realized_ret: float


@dataclass(frozen=True)
class FewShotReport:
    shots: int
    realized_best: float
    realized_mean: float
    rows: tuple


def zero_few_shot_eval(
    imagined: Repertoire, env: ToyEnv, n: int, pool: int = 20
) -> FewShotReport:
    """Execute the n most promising low-disagreement imagined skills.

    The pool is the ``pool`` lowest-disagreement imagined entries; within it,
    entries are ranked by imagined return (descending) and the top ``n`` are
    evaluated in the environment (exactly n evaluations). ``n=1`` is the
    zero-shot protocol.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    scored = [
        (slot, e) for slot, e in enumerate(imagined.entries)
        if e.disagreement is not None
    ]
    if not scored:
        raise ConfigError("imagined repertoire carries no disagreement scores")
    if len(scored) < pool:
        warnings.warn(f"few-shot pool shrunk to {len(scored)} (< {pool}) entries")
    pool_entries = sorted(scored, key=lambda se: (se[1].disagreement, se[0]))[:pool]
    ranked = sorted(pool_entries, key=lambda se: (-se[1].ret, se[0]))
    top = [e for _, e in ranked[: min(n, len(ranked))]]
    phis = np.stack([e.policy for e in top])
    out = env.evaluate_batch(phis)
    rows = tuple(
        FewShotRow(
            imagined_ret=e.ret,
            disagreement=e.disagreement,
            realized_ret=float(out.returns[i]),
        )
        for i, e in enumerate(top)
    )
    realized = out.returns
    return FewShotReport(
        shots=len(top),
        realized_best=float(realized.max()),
        realized_mean=float(realized.mean()),
        rows=rows,
    )
