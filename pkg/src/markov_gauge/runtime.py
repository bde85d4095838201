"""Seed derivation and worker-count resolution."""

from __future__ import annotations

import hashlib
import os

import numpy as np

THREADS_ENV = "MARKOV_GAUGE_THREADS"


def derive_seed(seed: int, *keys) -> int:
    """Stable 63-bit seed from a base seed and a purpose path.

    Uses SHA-256 rather than ``hash()`` so values survive interpreter restarts.
    """
    text = "/".join([str(int(seed)), *(str(k) for k in keys)])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big") >> 1


def rng_for(seed: int, *keys) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *keys))


def task_seed(base_seed: int, round_: int, index: int) -> int:
    """Seed for one CI test, a pure function of (base seed, round, fact index)."""
    state = np.random.SeedSequence([int(base_seed) & 0xFFFFFFFFFFFFFFFF, round_, index]).generate_state(2)
    return (int(state[0]) << 31) ^ int(state[1])


def resolve_workers(workers: int | None = None) -> int:
    if workers is not None and workers > 0:
        return workers
    env = os.environ.get(THREADS_ENV, "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1
