"""Skill-space planning on a grid maze with online outcome correction.

A repertoire entry is treated as a macro-action: executing it from rest
displaces the robot by a body-frame (dx, dy, dyaw) outcome. Planning composes
these outcomes over a pose lattice:

* the *prior* outcome of each skill comes from rolling its genotype out in
  the intact simulator once at episode start,
* a GP over skill descriptors learns the residual between prior and realized
  outcomes as skills get executed (damage shows up here),
* a UCB1 tree search picks the next skill against the GP-corrected outcomes,
  pruning branches whose motion segment crosses a wall.

Walls constrain planning only; execution applies the realized displacement
wherever it leads and the planner recovers by re-planning from there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import rng_from, wrap_angle
from .gp import SkillOutcomeGP
from .env import EnvConfig, rollout_batch, TaskKind
from .repertoire import Repertoire

NEG_INF = -1e18


# -- pose composition ---------------------------------------------------------


def compose_pose(pose, outcome):
    """Apply a body-frame (dx, dy, dyaw) outcome to a world pose."""
    x, y, yaw = pose
    dx, dy, dyaw = outcome
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([
        x + dx * c - dy * s,
        y + dx * s + dy * c,
        float(wrap_angle(yaw + dyaw)),
    ])


def compose_poses(pose, outcomes: np.ndarray) -> np.ndarray:
    """Vectorized :func:`compose_pose` for (n, 3) outcome batches."""
    c, s = np.cos(pose[2]), np.sin(pose[2])
    out = np.empty_like(outcomes)
    out[:, 0] = pose[0] + outcomes[:, 0] * c - outcomes[:, 1] * s
    out[:, 1] = pose[1] + outcomes[:, 0] * s + outcomes[:, 1] * c
    out[:, 2] = wrap_angle(pose[2] + outcomes[:, 2])
    return out


# -- maze --------------------------------------------------------------------


class MazeFormatError(ValueError):
    pass


@dataclass
class MazeTask:
    """Occupancy grid in world coordinates (row 0 of the text is the top)."""

    walls: np.ndarray          # (rows, cols) bool, True = wall
    cell_size: float
    start: np.ndarray          # (x, y, yaw)
    goal: np.ndarray           # (x, y)
    goal_radius: float = 0.3

    @property
    def width(self) -> float:
        return self.walls.shape[1] * self.cell_size

    @property
    def height(self) -> float:
        return self.walls.shape[0] * self.cell_size

    def free(self, points: np.ndarray) -> np.ndarray:
        """True for points inside the grid and not in a wall cell."""
        p = np.atleast_2d(points)
        inside = (
            (p[:, 0] >= 0.0) & (p[:, 0] < self.width)
            & (p[:, 1] >= 0.0) & (p[:, 1] < self.height)
        )
        cols = np.clip((p[:, 0] / self.cell_size).astype(int), 0, self.walls.shape[1] - 1)
        rows = np.clip(
            self.walls.shape[0] - 1 - (p[:, 1] / self.cell_size).astype(int),
            0, self.walls.shape[0] - 1,
        )
        return inside & ~self.walls[rows, cols]

    def _sample_ts(self, n: int = 9) -> np.ndarray:
        return np.linspace(0.0, 1.0, n)

    def segment_free(self, p0, p1) -> bool:
        """Collision test for the straight segment p0 -> p1 (xy only)."""
        p0 = np.asarray(p0[:2], dtype=np.float64)
        p1 = np.asarray(p1[:2], dtype=np.float64)
        ts = self._sample_ts()
        pts = p0[None, :] + ts[:, None] * (p1 - p0)[None, :]
        return bool(self.free(pts).all())

    def segments_free(self, p0, P1: np.ndarray) -> np.ndarray:
        """Vectorized segment test from one origin to (n, >=2) endpoints."""
        p0 = np.asarray(p0[:2], dtype=np.float64)
        ends = P1[:, :2]
        ts = self._sample_ts()
        pts = p0[None, None, :] + ts[None, :, None] * (ends - p0)[:, None, :]
        flat = pts.reshape(-1, 2)
        return self.free(flat).reshape(ends.shape[0], ts.shape[0]).all(axis=1)

    def segments_free_pairwise(self, P0: np.ndarray, P1: np.ndarray) -> np.ndarray:
        """Vectorized segment test for matched (n, >=2) start/end arrays."""
        a = P0[:, :2]
        b = P1[:, :2]
        ts = self._sample_ts()
        pts = a[:, None, :] + ts[None, :, None] * (b - a)[:, None, :]
        return self.free(pts.reshape(-1, 2)).reshape(a.shape[0], ts.shape[0]).all(axis=1)

    def at_goal(self, pose) -> bool:
        return float(np.hypot(pose[0] - self.goal[0], pose[1] - self.goal[1])) <= self.goal_radius

    def distance_field(self) -> np.ndarray:
        """Dijkstra distance-to-goal (meters) over free cells, cached.

        8-connected with exact diagonal costs; diagonal moves require both
        orthogonal neighbors free so the field never cuts wall corners.
        Straight-line distance is blind to walls, which strands planners in
        pockets where every distance-reducing move collides; planning quality
        is therefore measured against this field instead.
        """
        if getattr(self, "_field", None) is not None:
            return self._field
        import heapq

        rows, cols = self.walls.shape
        field = np.full((rows, cols), np.inf)
        gc = min(int(self.goal[0] / self.cell_size), cols - 1)
        gr = min(rows - 1 - int(self.goal[1] / self.cell_size), rows - 1)
        field[gr, gc] = 0.0
        heap = [(0.0, gr, gc)]
        while heap:
            d, r, c = heapq.heappop(heap)
            if d > field[r, c]:
                continue
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    if dr == 0 and dc == 0:
                        continue
                    rr, cc = r + dr, c + dc
                    if not (0 <= rr < rows and 0 <= cc < cols) or self.walls[rr, cc]:
                        continue
                    if dr != 0 and dc != 0 and (self.walls[r, cc] or self.walls[rr, c]):
                        continue
                    nd = d + self.cell_size * (1.4142135623730951 if dr and dc else 1.0)
                    if nd < field[rr, cc]:
                        field[rr, cc] = nd
                        heapq.heappush(heap, (nd, rr, cc))
        self._field = field
        return field

    def goal_distance(self, points: np.ndarray) -> np.ndarray:
        """Geodesic distance to the goal for (n, >=2) points; inf off-grid."""
        field = self.distance_field()
        p = np.atleast_2d(points)
        out = np.full(p.shape[0], np.inf)
        inside = (
            (p[:, 0] >= 0.0) & (p[:, 0] < self.width)
            & (p[:, 1] >= 0.0) & (p[:, 1] < self.height)
        )
        cols = np.clip((p[inside, 0] / self.cell_size).astype(int), 0, self.walls.shape[1] - 1)
        rows = np.clip(
            self.walls.shape[0] - 1 - (p[inside, 1] / self.cell_size).astype(int),
            0, self.walls.shape[0] - 1,
        )
        out[inside] = field[rows, cols]
        return out

    @classmethod
    def parse(cls, text: str, goal_radius: float = 0.3) -> "MazeTask":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("cell_size"):
            raise MazeFormatError("first line must be 'cell_size <meters>'")
        try:
            cell = float(lines[0].split()[1])
        except (IndexError, ValueError) as exc:
            raise MazeFormatError(f"bad cell_size line: {lines[0]!r}") from exc
        rows = lines[1:]
        if not rows:
            raise MazeFormatError("no grid rows")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise MazeFormatError("grid rows have unequal lengths")
        walls = np.zeros((len(rows), width), dtype=bool)
        start = goal = None
        for ri, row in enumerate(rows):
            for ci, ch in enumerate(row):
                if ch == "#":
                    walls[ri, ci] = True
                elif ch == "S":
                    start = (ri, ci)
                elif ch == "G":
                    goal = (ri, ci)
                elif ch != ".":
                    raise MazeFormatError(f"unknown cell {ch!r} at row {ri}")
        if start is None or goal is None:
            raise MazeFormatError("maze needs exactly one S and one G")

        def center(rc):
            ri, ci = rc
            return np.array([
                (ci + 0.5) * cell,
                (len(rows) - ri - 0.5) * cell,
            ])

        sx, sy = center(start)
        gx, gy = center(goal)
        return cls(
            walls=walls, cell_size=cell,
            start=np.array([sx, sy, 0.0]), goal=np.array([gx, gy]),
            goal_radius=goal_radius,
        )

    @classmethod
    def load(cls, path, goal_radius: float = 0.3) -> "MazeTask":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.parse(fh.read(), goal_radius=goal_radius)


# -- skill set ----------------------------------------------------------------


@dataclass
class SkillSet:
    """Repertoire entries plus their intact-sim (dx, dy, dyaw) outcomes."""

    policies: np.ndarray      # (n, 36)
    descriptors: np.ndarray   # (n, D_sd)
    sim_outcomes: np.ndarray  # (n, 3)

    def __len__(self) -> int:
        return self.policies.shape[0]


def build_skill_set(rep: Repertoire, sim_cfg: EnvConfig) -> SkillSet:
    """Roll every entry out once in the intact simulator to get its prior."""
    policies = np.stack([e.policy for e in rep.entries])
    out = rollout_batch(policies, sim_cfg, TaskKind.OMNI)
    final = out.states[:, -1, 0:3]
    return SkillSet(
        policies=policies,
        descriptors=rep.descriptors.copy(),
        sim_outcomes=final.copy(),
    )


# -- MCTS ---------------------------------------------------------------------


@dataclass(frozen=True)
class PlannerConfig:
    mcts_iterations: int = 500
    rollout_depth: int = 12
    ucb_c: float = 1.0
    # skills considered per node; 0 = the whole repertoire. Progressive
    # widening already bounds effective branching, and subsampled candidate
    # sets starve the deep spines it builds, so full branching is the default
    action_set_size: int = 0
    max_skills: int = 100
    # per-skill cost charged to goal-reaching simulations; a pure
    # terminal-distance reward cannot distinguish a 2-skill completion from a
    # 6-skill one, so this is what makes the planner prefer short plans
    step_cost: float = 0.25

    def __post_init__(self):
        for name in ("mcts_iterations", "rollout_depth", "ucb_c", "max_skills"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.action_set_size < 0:
            raise ValueError("action_set_size must be >= 0 (0 = full repertoire)")
        if self.step_cost < 0:
            raise ValueError("step_cost must be >= 0")


class _Node:
    __slots__ = ("pose", "actions", "next_action", "children", "visits",
                 "value_sum", "pruned", "terminal")

    def __init__(self, pose, actions):
        self.pose = pose
        self.actions = actions          # candidate skill indices at this node
        self.next_action = 0            # cursor into unexpanded actions
        self.children = {}              # action index -> _Node
        self.visits = 0
        self.value_sum = 0.0
        self.pruned = False             # transition into this node collides
        self.terminal = False           # pose already at goal

    def mean_value(self) -> float:
        return self.value_sum / self.visits if self.visits else 0.0


@dataclass
class PlanInfo:
    blocked: bool
    root_visits: dict
    iterations: int


def _action_set(n_skills: int, cfg: PlannerConfig, rng, executed=None) -> np.ndarray:
    """Candidate skills at a node: executed skills plus a random subsample.

    With ``action_set_size == 0`` every skill is a candidate. Otherwise
    skills that were already executed are always kept (their corrected
    outcomes are measured, which makes plans through them reliable) and the
    rest of the set is sampled randomly.
    """
    if cfg.action_set_size == 0 or n_skills <= cfg.action_set_size:
        return np.arange(n_skills)
    keep = np.empty(0, dtype=np.int64)
    if executed is not None and executed.size:
        keep = executed[: cfg.action_set_size]
    n_fill = cfg.action_set_size - keep.size
    pool = np.setdiff1d(np.arange(n_skills), keep, assume_unique=False)
    fill = rng.choice(pool, size=min(n_fill, pool.size), replace=False)
    return np.sort(np.concatenate([keep, fill]))


def mcts_plan(
    pose,
    skills: SkillSet,
    gp: SkillOutcomeGP,
    maze: MazeTask,
    cfg: PlannerConfig,
    rng: np.random.Generator,
    executed_ids=None,
):
    """Pick the skill to execute next from ``pose``.

    Runs UCB1 select/expand/simulate/backup over skill sequences using the
    GP-corrected outcome table; the reward of a simulation is the negative
    remaining distance to the goal at the horizon (plus a per-skill cost for
    completions) and colliding branches are pruned. Children expand best-
    first by predicted remaining distance. Returns ``(skill_index,
    PlanInfo)``; when every root action collides the least-bad action
    (closest predicted pose to goal) is returned with ``blocked=True``.
    """
    if len(skills) == 0:
        raise ValueError("empty skill set")
    if executed_ids is not None:
        executed_ids = np.unique(np.asarray(executed_ids, dtype=np.int64))
    corrected = skills.sim_outcomes + gp.predict(skills.descriptors)[0]
    goal = maze.goal

    def leaf_value(p, steps, reached) -> float:
        # completions pay per skill used; everything else pays the full
        # horizon so that crashing early never beats making progress
        cost = cfg.step_cost * (steps if reached else cfg.rollout_depth)
        return -float(maze.goal_distance(p[None, :2])[0]) - cost

    def make_node(p) -> _Node:
        ids = _action_set(len(skills), cfg, rng, executed=executed_ids)
        ends = compose_poses(p, corrected[ids])
        order = np.argsort(maze.goal_distance(ends), kind="stable")
        return _Node(p, ids[order])  # expand most promising children first

    def may_widen(node: _Node) -> bool:
        # progressive widening: deepen along the promising spine instead of
        # expanding every sibling first, which matters when the action set is
        # larger than the iteration budget
        if node.next_action >= len(node.actions):
            return False
        return len(node.children) < 2.0 * math.sqrt(node.visits + 1)

    root = make_node(np.asarray(pose, dtype=np.float64))
    for _ in range(cfg.mcts_iterations):
        node = root
        path = [root]
        depth = 0
        # select
        while not node.terminal and not may_widen(node) and node.children:
            log_n = math.log(max(node.visits, 1))
            best, best_score = None, -math.inf
            for child in node.children.values():
                if child.pruned:
                    continue
                score = child.mean_value() + cfg.ucb_c * math.sqrt(log_n / child.visits)
                if score > best_score:
                    best, best_score = child, score
            if best is None:  # every child pruned
                break
            node = best
            path.append(node)
            depth += 1
        # expand
        if not node.terminal and may_widen(node):
            aid = int(node.actions[node.next_action])
            node.next_action += 1
            child_pose = compose_pose(node.pose, corrected[aid])
            child = make_node(child_pose)
            child.pruned = not maze.segment_free(node.pose, child_pose)
            child.terminal = (not child.pruned) and maze.at_goal(child_pose)
            node.children[aid] = child
            if child.pruned:
                # dead branch: the sentinel keeps UCB away from the child,
                # while the ancestors see a finite crashed-here value so the
                # -inf cannot poison their statistics
                child.visits = 1
                child.value_sum = NEG_INF
                value = leaf_value(node.pose, depth, False)
                for n in path:
                    n.visits += 1
                    n.value_sum += value
                continue
            node = child
            path.append(node)
            depth += 1
        # simulate: walk with the best of a few random skills per step, which
        # gives a far less noisy value signal than a uniform random walk
        p = node.pose
        steps = depth
        reached = maze.at_goal(p)
        for _ in range(max(cfg.rollout_depth - depth, 0)):
            if reached:
                break
            aids = rng.integers(0, len(skills), size=16)
            nxts = compose_poses(p, corrected[aids])
            ok = maze.segments_free(p, nxts)
            if not ok.any():
                break  # stop the walk at the wall
            dists = maze.goal_distance(nxts)
            dists[~ok] = np.inf
            p = nxts[int(np.argmin(dists))]
            steps += 1
            reached = maze.at_goal(p)
        value = leaf_value(p, steps, reached)
        # backup
        for n in path:
            n.visits += 1
            n.value_sum += value

    live = {a: c for a, c in root.children.items() if not c.pruned}
    root_visits = {a: c.visits for a, c in root.children.items()}
    if not live:
        # no collision-free root action: fall back to the predicted pose
        # closest to the goal (straight-line distance breaks ties where the
        # endpoint leaves the grid and the field is undefined)
        endpoints = compose_poses(root.pose, corrected[root.actions])
        dists = maze.goal_distance(endpoints)
        euclid = np.hypot(endpoints[:, 0] - goal[0], endpoints[:, 1] - goal[1])
        dists = np.where(np.isfinite(dists), dists, 1e6 + euclid)
        choice = int(root.actions[int(np.argmin(dists))])
        return choice, PlanInfo(blocked=True, root_visits=root_visits,
                                iterations=cfg.mcts_iterations)
    # argmax visits, ties by mean value then by action index order
    choice = min(
        live.items(),
        key=lambda ac: (-ac[1].visits, -ac[1].mean_value(), ac[0]),
    )[0]
    return int(choice), PlanInfo(blocked=False, root_visits=root_visits,
                                 iterations=cfg.mcts_iterations)


# -- episode loop -----------------------------------------------------------------


@dataclass
class SkillExecution:
    step: int
    skill_index: int
    descriptor: np.ndarray
    sim_pred_pose: np.ndarray   # pose predicted by the raw simulator prior
    gp_pred_pose: np.ndarray    # pose predicted with the GP correction
    realized_pose: np.ndarray
    residual: np.ndarray        # realized - sim outcome, body frame
    blocked: bool


@dataclass
class RteReport:
    reached: bool
    skills_executed: int
    poses: list
    executions: list

    def save_csv(self, path) -> None:
        d = self.executions[0].descriptor.shape[0] if self.executions else 0
        header = (
            ["step", "skill_index"]
            + [f"sd_{i}" for i in range(d)]
            + ["pred_x", "pred_y", "pred_yaw", "real_x", "real_y", "real_yaw",
               "res_dx", "res_dy", "res_dyaw", "blocked"]
        )
        lines = [",".join(header)]
        for e in self.executions:
            cells = [str(e.step), str(e.skill_index)]
            cells += ["%.17g" % v for v in e.descriptor]
            cells += ["%.17g" % v for v in e.gp_pred_pose]
            cells += ["%.17g" % v for v in e.realized_pose]
            cells += ["%.17g" % v for v in e.residual]
            cells.append(str(int(e.blocked)))
            lines.append(",".join(cells))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


def rte_episode(
    maze: MazeTask,
    rep: Repertoire,
    sim_cfg: EnvConfig,
    exec_cfg: EnvConfig,
    cfg: PlannerConfig,
    seed: int,
    gp_lengthscale: float = 0.005,
    gp_signal: float = 0.6,
    gp_noise: float = 0.001,
    skills: SkillSet | None = None,
) -> RteReport:
    """Plan-execute-measure-refit until the goal or the skill cap.

    ``sim_cfg`` provides the intact prior outcomes; ``exec_cfg`` is the
    environment actually executed (possibly damaged; the planner never sees
    its damage mask). Every executed skill appends its outcome residual to
    the GP, so re-planning uses progressively corrected predictions.

    The default GP hyperparameters put the kernel in a near-lookup regime
    (tiny lengthscale, wide signal prior): in this environment the damage
    response of a gait depends on how it uses the disabled joints, which the
    descriptor does not encode, so residuals of neighboring descriptors are
    uncorrelated and a wide kernel would smear one gait's residual onto
    unrelated skills.
    """
    if skills is None:
        skills = build_skill_set(rep, sim_cfg)
    gp = SkillOutcomeGP(
        input_dim=skills.descriptors.shape[1],
        lengthscale=gp_lengthscale, signal=gp_signal, noise=gp_noise,
    )
    pose = maze.start.copy()
    poses = [pose.copy()]
    executions: list[SkillExecution] = []
    executed_ids: list[int] = []
    reached = maze.at_goal(pose)
    k = 0
    while not reached and k < cfg.max_skills:
        idx, info = mcts_plan(
            pose, skills, gp, maze, cfg, rng_from(seed, "plan", k),
            executed_ids=np.array(executed_ids, dtype=np.int64),
        )
        gp_mean, _ = gp.predict(skills.descriptors[idx : idx + 1])
        sim_outcome = skills.sim_outcomes[idx]
        sim_pred = compose_pose(pose, sim_outcome)
        gp_pred = compose_pose(pose, sim_outcome + gp_mean[0])
        out = rollout_batch(skills.policies[idx : idx + 1], exec_cfg, TaskKind.OMNI)
        realized_outcome = out.states[0, -1, 0:3]
        realized_pose = compose_pose(pose, realized_outcome)
        residual = realized_outcome - sim_outcome
        gp.add(skills.descriptors[idx], residual)
        executed_ids.append(idx)
        executions.append(SkillExecution(
            step=k, skill_index=idx, descriptor=skills.descriptors[idx].copy(),
            sim_pred_pose=sim_pred, gp_pred_pose=gp_pred,
            realized_pose=realized_pose.copy(), residual=residual.copy(),
            blocked=info.blocked,
        ))
        pose = realized_pose
        poses.append(pose.copy())
        reached = maze.at_goal(pose)
        k += 1
    return RteReport(reached=reached, skills_executed=k, poses=poses,
                     executions=executions)


# -- offline lower bound --------------------------------------------------------------


def min_skills_lower_bound(
    maze: MazeTask,
    outcomes: np.ndarray,
    max_depth: int = 20,
    yaw_bins: int = 16,
    pos_bin: float | None = None,
    chunk: int = 2048,
) -> int | None:
    """Fewest skills to reach the goal, by breadth-first lattice search.

    Expands every pose on the frontier with every outcome (``outcomes`` are
    the true body-frame skill displacements in the execution environment),
    prunes colliding segments, and deduplicates poses on a (pos_bin,
    yaw_bins) lattice. Independent of the MCTS planner; used as the offline
    reference for planner quality. Returns None if the goal is unreachable
    within ``max_depth``.
    """
    if pos_bin is None:
        pos_bin = maze.cell_size / 2.0
    key_mul = np.array([1, 10_000, 10_000 * 10_000], dtype=np.int64)

    def keys(poses: np.ndarray) -> np.ndarray:
        xi = np.floor(poses[:, 0] / pos_bin).astype(np.int64)
        yi = np.floor(poses[:, 1] / pos_bin).astype(np.int64)
        wi = np.floor((poses[:, 2] + np.pi) / (2 * np.pi) * yaw_bins).astype(np.int64)
        wi = np.clip(wi, 0, yaw_bins - 1)
        return xi * key_mul[2] + yi * key_mul[1] + wi

    start = maze.start[None, :].copy()
    if maze.at_goal(maze.start):
        return 0
    frontier = start
    visited = keys(start)
    for depth in range(1, max_depth + 1):
        next_chunks = []
        for lo in range(0, frontier.shape[0], chunk):
            block = frontier[lo : lo + chunk]
            n, m = block.shape[0], outcomes.shape[0]
            c = np.cos(block[:, 2])[:, None]
            s = np.sin(block[:, 2])[:, None]
            nx = block[:, 0:1] + outcomes[None, :, 0] * c - outcomes[None, :, 1] * s
            ny = block[:, 1:2] + outcomes[None, :, 0] * s + outcomes[None, :, 1] * c
            nw = wrap_angle(block[:, 2:3] + outcomes[None, :, 2])
            starts = np.repeat(block[:, :2], m, axis=0)
            ends = np.stack([nx.ravel(), ny.ravel()], axis=1)
            ok = maze.segments_free_pairwise(
                np.concatenate([starts, np.zeros((starts.shape[0], 1))], axis=1),
                np.concatenate([ends, np.zeros((ends.shape[0], 1))], axis=1),
            )
            poses = np.stack([nx.ravel(), ny.ravel(), nw.ravel()], axis=1)[ok]
            if poses.size == 0:
                continue
            hit = np.hypot(poses[:, 0] - maze.goal[0], poses[:, 1] - maze.goal[1])
            if (hit <= maze.goal_radius).any():
                return depth
            next_chunks.append(poses)
        if not next_chunks:
            return None
        cand = np.concatenate(next_chunks, axis=0)
        k = keys(cand)
        uniq, first = np.unique(k, return_index=True)
        new_mask = ~np.isin(uniq, visited)
        frontier = cand[first[new_mask]]
        if frontier.shape[0] == 0:
            return None
        visited = np.concatenate([visited, uniq[new_mask]])
    return None
