"""Unstructured skill container.

The container keeps every accepted policy together with its skill descriptor
and return. It enforces a minimum inter-entry descriptor distance ``l``:
candidates farther than ``l`` from everything are appended, candidates inside
the ``l``-ball of their nearest neighbor may replace it under a four-condition
local-competition rule, everything else is discarded.

Novelty of a descriptor is the mean Euclidean distance to its k nearest
descriptors in the container (averaged over all entries when fewer than k are
present). Queries are linear scans over a contiguous descriptor matrix, which
is exact and fast enough for a few thousand entries.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import DimensionMismatchError, RepertoireFormatError

FLOAT_FMT = "%.17g"  # round-trips float64 exactly


@dataclass(frozen=True)
class ContainerParams:
    """Addition-rule constants, fixed for a whole run."""

    l: float = 0.015        # minimum descriptor distance between entries
    epsilon: float = 0.1    # replacement slack in [0, 1)
    k: int = 15             # neighbors used by the novelty score

    def __post_init__(self):
        if self.l <= 0.0:
            raise ValueError("l must be > 0")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must be in [0, 1)")
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class RepertoireEntry:
    policy: np.ndarray
    descriptor: np.ndarray
    ret: float
    disagreement: float | None = None  # only set for model-evaluated entries
    evaluated_in_env: bool = True


class AdditionKind(enum.Enum):
    ADDED_NEW = "added_new"
    REPLACED = "replaced"
    DISCARDED = "discarded"


# Discard reasons, in the order the replacement conditions are checked.
REASON_SECOND_NEIGHBOR = "second_neighbor_too_close"
REASON_NOVELTY = "novelty_not_competitive"
REASON_RETURN = "return_not_competitive"
REASON_TRADEOFF = "novelty_return_tradeoff"


@dataclass(frozen=True)
class AdditionOutcome:
    kind: AdditionKind
    index: int | None = None               # slot of the (new) entry, if any
    replaced: RepertoireEntry | None = None
    reason: str | None = None              # first failing condition if discarded

    @property
    def accepted(self) -> bool:
        return self.kind is not AdditionKind.DISCARDED

    def code(self) -> str:
        """Compact decision code used by loop-level decision logs."""
        if self.kind is AdditionKind.DISCARDED:
            return f"D:{self.reason}"
        if self.kind is AdditionKind.REPLACED:
            return f"R:{self.index}"
        return f"A:{self.index}"


class Repertoire:
    """Unstructured container with k-NN novelty and slot-reuse replacement.

    Entries live in a list; replacement overwrites the replaced entry's slot,
    so list position doubles as insertion order for all tie-breaking.
    """

    def __init__(self, descriptor_dim: int, params: ContainerParams | None = None):
        self.descriptor_dim = int(descriptor_dim)
        self.params = params if params is not None else ContainerParams()
        self.entries: list[RepertoireEntry] = []
        self._desc = np.empty((64, self.descriptor_dim), dtype=np.float64)

    # -- basic queries ---------------------------------------------------

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def descriptors(self) -> np.ndarray:
        """(n, D) view of all descriptors, in slot order."""
        return self._desc[: len(self.entries)]

    def returns(self) -> np.ndarray:
        return np.array([e.ret for e in self.entries], dtype=np.float64)

    def qd_score(self) -> float:
        """Sum of returns over all entries (0 for an empty container)."""
        return float(sum(e.ret for e in self.entries))

    def _distances(self, sd: np.ndarray) -> np.ndarray:
        return np.linalg.norm(self.descriptors - sd[None, :], axis=1)

    def _check_descriptor(self, sd) -> np.ndarray:
        sd = np.asarray(sd, dtype=np.float64)
        if sd.shape != (self.descriptor_dim,):
            raise DimensionMismatchError(
                f"descriptor must have shape ({self.descriptor_dim},), got {sd.shape}"
            )
        return sd

    def novelty(self, sd, exclude: int | None = None) -> float:
        """Mean distance from ``sd`` to its k nearest descriptors.

        ``exclude`` drops one slot from the reference set, which is how the
        novelty of an entry already in the container is computed (the entry
        must not count itself as its own neighbor). Returns ``inf`` when the
        reference set is empty: an empty container makes everything maximally
        novel.
        """
        sd = self._check_descriptor(sd)
        n = len(self.entries)
        n_ref = n - (1 if exclude is not None else 0)
        if n_ref <= 0:
            return math.inf
        d = self._distances(sd)
        if exclude is not None:
            d = np.delete(d, exclude)
        kk = min(self.params.k, n_ref)
        if kk == n_ref:
            return float(d.mean())
        return float(np.partition(d, kk - 1)[:kk].mean())

    def nearest_two(self, sd):
        """Indices and distances of the two nearest entries.

        Returns ``((i1, d1), (i2, d2))`` with ``d1 <= d2``; the second pair is
        ``None`` when the container holds a single entry, and both are ``None``
        when it is empty. Ties go to the older slot (argmin returns the first
        minimum).
        """
        sd = self._check_descriptor(sd)
        n = len(self.entries)
        if n == 0:
            return None, None
        d = self._distances(sd)
        i1 = int(np.argmin(d))
        first = (i1, float(d[i1]))
        if n == 1:
            return first, None
        d1 = d[i1]
        d[i1] = np.inf
        i2 = int(np.argmin(d))
        d[i1] = d1
        return first, (i2, float(d[i2]))

    # -- mutation ----------------------------------------------------------

    def _append(self, entry: RepertoireEntry) -> int:
        n = len(self.entries)
        if n == self._desc.shape[0]:
            grown = np.empty((2 * n, self.descriptor_dim), dtype=np.float64)
            grown[:n] = self._desc[:n]
            self._desc = grown
        self._desc[n] = entry.descriptor
        self.entries.append(entry)
        return n

    def try_add(self, entry: RepertoireEntry) -> AdditionOutcome:
        """Apply the distance-threshold addition rule to one candidate.

        A candidate whose nearest neighbor is at least ``l`` away (or an empty
        container) is appended. Otherwise it may replace that neighbor when
        all four of the following hold, with ``nov`` computed against the
        container minus the nearest neighbor for both sides:

        1. the second nearest neighbor is at least ``l`` away,
        2. nov(new) >= (1 - eps) * nov(old),
        3. ret(new) >= (1 - eps) * ret(old),
        4. (nov(new) - nov(old)) * |ret(old)|
               >= -(ret(new) - ret(old)) * |nov(old)|.

        Discards record the first failing condition.
        """
        sd = self._check_descriptor(entry.descriptor)
        first, second = self.nearest_two(sd)
        if first is None:
            return AdditionOutcome(AdditionKind.ADDED_NEW, index=self._append(entry))
        i1, d1 = first
        if d1 >= self.params.l:
            return AdditionOutcome(AdditionKind.ADDED_NEW, index=self._append(entry))

        old = self.entries[i1]
        eps = self.params.epsilon

        d2 = second[1] if second is not None else math.inf
        if d2 < self.params.l:
            return AdditionOutcome(AdditionKind.DISCARDED, reason=REASON_SECOND_NEIGHBOR)

        if len(self.entries) == 1:
            # The reference set (container minus the nearest neighbor) is
            # empty; both novelty scores are defined as equal (zero) and the
            # decision reduces to the return conditions.
            nov_new = nov_old = 0.0
        else:
            nov_new = self.novelty(sd, exclude=i1)
            nov_old = self.novelty(old.descriptor, exclude=i1)

        if nov_new < (1.0 - eps) * nov_old:
            return AdditionOutcome(AdditionKind.DISCARDED, reason=REASON_NOVELTY)
        if entry.ret < (1.0 - eps) * old.ret:
            return AdditionOutcome(AdditionKind.DISCARDED, reason=REASON_RETURN)
        if (nov_new - nov_old) * abs(old.ret) < -(entry.ret - old.ret) * abs(nov_old):
            return AdditionOutcome(AdditionKind.DISCARDED, reason=REASON_TRADEOFF)

        self.entries[i1] = entry
        self._desc[i1] = sd
        return AdditionOutcome(AdditionKind.REPLACED, index=i1, replaced=old)

    def sync_from(self, other: "Repertoire") -> None:
        """Replace this container's contents with another's (same params)."""
        if other.descriptor_dim != self.descriptor_dim:
            raise DimensionMismatchError("descriptor dimensions differ")
        self.entries = list(other.entries)
        self._desc = other.descriptors.copy()
        if self._desc.shape[0] == 0:
            self._desc = np.empty((64, self.descriptor_dim), dtype=np.float64)

    # -- persistence -------------------------------------------------------

    def header(self) -> list[str]:
        d, p = self.descriptor_dim, self._policy_dim()
        return (
            ["entry_id"]
            + [f"sd_{i}" for i in range(d)]
            + ["return", "disagreement"]
            + [f"phi_{i}" for i in range(p)]
        )

    def _policy_dim(self) -> int:
        return int(self.entries[0].policy.shape[0]) if self.entries else 0

    def save(self, path) -> None:
        """Write the container as CSV (17 significant digits per float)."""
        lines = [",".join(self.header())]
        for i, e in enumerate(self.entries):
            cells = [str(i)]
            cells += [FLOAT_FMT % v for v in e.descriptor]
            cells.append(FLOAT_FMT % e.ret)
            cells.append("" if e.disagreement is None else FLOAT_FMT % e.disagreement)
            cells += [FLOAT_FMT % v for v in e.policy]
            lines.append(",".join(cells))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path, params: ContainerParams | None = None) -> "Repertoire":
        """Read a container CSV written by :meth:`save`.

        Malformed files raise :class:`RepertoireFormatError` naming the line.
        """
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        if not lines:
            raise RepertoireFormatError("line 1: empty file")
        header = lines[0].split(",")
        sd_cols = [c for c in header if c.startswith("sd_")]
        phi_cols = [c for c in header if c.startswith("phi_")]
        d = len(sd_cols)
        expected = ["entry_id"] + [f"sd_{i}" for i in range(d)] + ["return", "disagreement"]
        expected += [f"phi_{i}" for i in range(len(phi_cols))]
        if header != expected or d == 0:
            raise RepertoireFormatError(f"line 1: bad header {lines[0]!r}")
        rep = cls(d, params)
        width = len(header)
        for lineno, raw in enumerate(lines[1:], start=2):
            if not raw:
                continue
            cells = raw.split(",")
            if len(cells) != width:
                raise RepertoireFormatError(
                    f"line {lineno}: expected {width} fields, got {len(cells)}"
                )
            try:
                descriptor = np.array([float(c) for c in cells[1 : 1 + d]])
                ret = float(cells[1 + d])
                dis_cell = cells[2 + d]
                disagreement = None if dis_cell == "" else float(dis_cell)
                policy = np.array([float(c) for c in cells[3 + d :]])
            except ValueError as exc:
                raise RepertoireFormatError(f"line {lineno}: {exc}") from exc
            rep._append(
                RepertoireEntry(
                    policy=policy,
                    descriptor=descriptor,
                    ret=ret,
                    disagreement=disagreement,
                )
            )
        return rep


def min_pairwise_distance(rep: Repertoire) -> float:
    """Smallest descriptor distance over all entry pairs (inf if < 2 entries).

    O(n^2) scan; intended for invariant checks on containers up to a few
    thousand entries.
    """
    n = len(rep)
    if n < 2:
        return math.inf
    d = rep.descriptors
    diff = d[:, None, :] - d[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    dist[np.diag_indices(n)] = np.inf
    return float(dist.min())
