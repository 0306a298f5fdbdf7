"""Shared domain types, deterministic RNG derivation, and small vector math.

Conventions used across the package:

* genotypes are float64 vectors with every component in [0, 1]
* skill descriptors are float64 vectors normalized to [0, 1] per dimension
* states/actions are float64 vectors; batches carry a leading axis
* every stochastic operation takes an explicit ``numpy.random.Generator``
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np


class DaqdError(Exception):
    """Base class for errors raised by this package."""


class DimensionMismatchError(DaqdError, ValueError):
    """Vector lengths do not agree."""


class NumericError(DaqdError, ValueError):
    """Non-finite values where finite ones are required."""


class EmptyRepertoireError(DaqdError, ValueError):
    """Operation needs a non-empty repertoire."""


class RepertoireFormatError(DaqdError, ValueError):
    """A repertoire file could not be parsed."""


class ModelNotTrainedError(DaqdError, RuntimeError):
    """A trained dynamics model is required."""


class ConfigError(DaqdError, ValueError):
    """Invalid run configuration."""


def as_vector(x, name: str = "vector") -> np.ndarray:
    """Coerce to a 1-D float64 array without copying when possible."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatchError(f"{name} must be 1-D, got shape {v.shape}")
    return v


def euclidean_distance(a, b) -> float:
    """L2 distance between two equal-length vectors."""
    va = as_vector(a, "a")
    vb = as_vector(b, "b")
    if va.shape != vb.shape:
        raise DimensionMismatchError(
            f"length mismatch: {va.shape[0]} vs {vb.shape[0]}"
        )
    return float(np.linalg.norm(va - vb))


def clamp_genotype(p) -> np.ndarray:
    """Clip every component of a genotype into [0, 1].

    Raises :class:`NumericError` on non-finite input; components already in
    range are returned unchanged.
    """
    v = as_vector(p, "genotype")
    if not np.all(np.isfinite(v)):
        raise NumericError("genotype contains non-finite components")
    return np.clip(v, 0.0, 1.0)


def wrap_angle(theta):
    """Wrap angle(s) into (-pi, pi]."""
    return -((np.pi - np.asarray(theta, dtype=np.float64)) % (2.0 * np.pi) - np.pi)


def _tag_to_int(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag) & 0xFFFFFFFF
    if isinstance(tag, str):
        # crc32 is stable across processes, unlike the builtin str hash
        return zlib.crc32(tag.encode("utf-8"))
    raise TypeError(f"rng tag must be int or str, got {type(tag)!r}")


def derive_seed_sequence(seed: int, *tags) -> np.random.SeedSequence:
    """Deterministically derive a child seed sequence from a run seed.

    All stochastic subsystems draw from streams derived this way so that one
    64-bit run seed reproduces a whole run bit-exactly regardless of how work
    is batched across subsystems.
    """
    return np.random.SeedSequence(
        entropy=int(seed), spawn_key=tuple(_tag_to_int(t) for t in tags)
    )


def rng_from(seed: int, *tags) -> np.random.Generator:
    """A counter-based (Philox) generator for the stream named by ``tags``."""
    return np.random.Generator(np.random.Philox(derive_seed_sequence(seed, *tags)))


def derive_seed(seed: int, *tags) -> int:
    """A derived 63-bit integer seed (manifest-friendly) for sub-runs."""
    state = derive_seed_sequence(seed, *tags).generate_state(1, np.uint64)[0]
    return int(state) & 0x7FFFFFFFFFFFFFFF


@dataclass(frozen=True)
class Transition:
    """One environment step: (state, action, next_state)."""

    state: np.ndarray
    action: np.ndarray
    next_state: np.ndarray

    def __post_init__(self):
        if self.state.shape != self.next_state.shape:
            raise DimensionMismatchError(
                "state and next_state must have the same shape"
            )


@dataclass(frozen=True)
class Trajectory:
    """A rollout: T+1 states, T actions, T rewards."""

    states: np.ndarray   # (T+1, D_s)
    actions: np.ndarray  # (T, D_a)
    rewards: np.ndarray  # (T,)

    def __post_init__(self):
        if self.states.shape[0] != self.actions.shape[0] + 1:
            raise DimensionMismatchError(
                f"states ({self.states.shape[0]}) must be exactly one longer "
                f"than actions ({self.actions.shape[0]})"
            )
        if self.rewards.shape[0] != self.actions.shape[0]:
            raise DimensionMismatchError("rewards must have one entry per action")

    @property
    def length(self) -> int:
        return self.actions.shape[0]
