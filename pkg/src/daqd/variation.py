"""Parent selection and the directional variation operator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionMismatchError, EmptyRepertoireError
from .repertoire import Repertoire


@dataclass(frozen=True)
class VariationConfig:
    sigma1: float = 0.01          # isotropic noise scale
    sigma2: float = 0.2           # parent-line noise scale
    batch_size: int = 64          # offspring per QD iteration
    init_random_count: int = 128  # random genotypes before the loop starts

    def __post_init__(self):
        if self.sigma1 < 0.0 or self.sigma2 < 0.0:
            raise ValueError("sigma1 and sigma2 must be >= 0")
        if self.batch_size < 1 or self.init_random_count < 0:
            raise ValueError("batch_size must be >= 1, init_random_count >= 0")


def random_genotypes(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """(n, d) genotypes drawn uniformly from [0, 1]^d."""
    if n < 0 or d < 1:
        raise ValueError("need n >= 0 and d >= 1")
    return rng.random((n, d))


def uniform_select(rep: Repertoire, n: int, rng: np.random.Generator) -> np.ndarray:
    """Sample ``n`` genotypes uniformly with replacement from the container."""
    if len(rep) == 0:
        raise EmptyRepertoireError(
            "cannot select parents from an empty repertoire; "
            "seed it with random genotypes first"
        )
    idx = rng.integers(0, len(rep), size=n)
    return np.stack([rep.entries[i].policy for i in idx])


def variation_batch(
    parents1: np.ndarray,
    parents2: np.ndarray,
    cfg: VariationConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Directional variation over a batch of parent pairs.

    offspring = p1 + sigma1 * N(0, I) + sigma2 * g * (p2 - p1)

    where the isotropic term is drawn per component and ``g`` is a single
    scalar normal draw per offspring, so the line term moves every component
    by the same multiple of the parent difference. Offspring are clipped into
    [0, 1].
    """
    p1 = np.asarray(parents1, dtype=np.float64)
    p2 = np.asarray(parents2, dtype=np.float64)
    if p1.shape != p2.shape:
        raise DimensionMismatchError(f"parent shapes differ: {p1.shape} vs {p2.shape}")
    iso = rng.standard_normal(p1.shape)
    line = rng.standard_normal((p1.shape[0], 1))
    off = p1 + cfg.sigma1 * iso + cfg.sigma2 * line * (p2 - p1)
    return np.clip(off, 0.0, 1.0)


def directional_variation(
    phi1, phi2, cfg: VariationConfig, rng: np.random.Generator
) -> np.ndarray:
    """Single-offspring form of :func:`variation_batch`."""
    p1 = np.asarray(phi1, dtype=np.float64)
    p2 = np.asarray(phi2, dtype=np.float64)
    return variation_batch(p1[None, :], p2[None, :], cfg, rng)[0]
