"""Counter-based Gaussian noise keyed by (seed, path, step).

Standard normals for step ``n`` of path ``p`` live in block ``n // BLOCK_STEPS``
at row ``n % BLOCK_STEPS``. Each block is drawn from its own Philox generator
seeded with ``SeedSequence(seed, spawn_key=(p, block))``, so any step's noise
can be regenerated without touching other paths or earlier blocks, and the
stream does not depend on the horizon, the thinning stride or scheduling.
"""

from __future__ import annotations

import numpy as np

BLOCK_STEPS = 1 << 16


def _check_key(seed: int, path_index: int) -> None:
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    if path_index < 0:
        raise ValueError("path_index must be non-negative")


def noise_block(seed: int, path_index: int, block_index: int, dim: int = 2) -> np.ndarray:
    """Full block of ``BLOCK_STEPS x dim`` standard normals."""
    _check_key(seed, path_index)
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(path_index), int(block_index)))
    gen = np.random.Generator(np.random.Philox(ss))
    return gen.standard_normal((BLOCK_STEPS, dim))


def noise_steps(seed: int, path_index: int, start: int, stop: int, dim: int = 2) -> np.ndarray:
    """Standard normals for steps ``start <= n < stop`` of one path."""
    if stop < start:
        raise ValueError("stop must not precede start")
    out = np.empty((stop - start, dim))
    n = start
    while n < stop:
        b, off = divmod(n, BLOCK_STEPS)
        take = min(BLOCK_STEPS - off, stop - n)
        out[n - start:n - start + take] = noise_block(seed, path_index, b, dim)[off:off + take]
        n += take
    return out


def iter_blocks(seed: int, path_index: int, n_steps: int, dim: int = 2):
    """Yield ``(first_step, normals)`` chunks covering steps ``0..n_steps-1``."""
    for b in range((n_steps + BLOCK_STEPS - 1) // BLOCK_STEPS):
        first = b * BLOCK_STEPS
        z = noise_block(seed, path_index, b, dim)
        yield first, z[: min(BLOCK_STEPS, n_steps - first)]
