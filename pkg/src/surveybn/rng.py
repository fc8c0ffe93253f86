"""Deterministic random-stream derivation.

All randomness in the package flows through these helpers so that any
sub-computation (a bootstrap replicate, a tree in a forest, a restart of the
hill climber) draws from a stream determined solely by the master seed and its
own integer coordinates. numpy's SeedSequence guarantees the mixing is stable
across platforms and releases, which is what makes byte-identical reruns and
order-independent parallelism possible.
"""

from __future__ import annotations

import numpy as np


def derive_seed(*keys: int) -> int:
    """Collapse integer coordinates into a single reproducible 32-bit seed."""
    return int(np.random.SeedSequence(list(keys)).generate_state(1)[0])


def derive_rng(*keys: int) -> np.random.Generator:
    """Generator seeded purely by the given integer coordinates."""
    return np.random.default_rng(np.random.SeedSequence(list(keys)))
