"""Seeded, splittable random streams shared by all modules.

Every randomized routine in the package takes a ``numpy.random.Generator``.
Experiments derive independent per-trial child streams from one root seed so
sweeps are reproducible regardless of execution order or parallelism.
"""

from __future__ import annotations

import numpy as np

RngLike = "int | np.random.Generator | np.random.SeedSequence"


def make_rng(seed: int | np.random.Generator | np.random.SeedSequence) -> np.random.Generator:
    """Return a Generator from a 64-bit seed (pass-through for Generators)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def split_rng(seed: int | np.random.SeedSequence, n: int) -> list[np.random.Generator]:
    """Split a root seed into ``n`` independent generators.

    Children are derived with ``SeedSequence.spawn``, so stream ``k`` is the
    same no matter how many siblings are consumed or in what order.
    """
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        ss = np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in ss.spawn(n)]
