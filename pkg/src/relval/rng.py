"""Seed derivation shared by every stochastic step.

All randomness flows from a base seed through ``derive_seed``, which hashes
an ordered key tuple with numpy's ``SeedSequence``. Streams are PCG64. The
blob generator is the one exception: it uses the legacy MT19937
``RandomState`` so that synthetic datasets match the draw order of the
common ML toolkits.
"""

from __future__ import annotations

import numpy as np

RNG_FAMILY = "pcg64"
BLOBS_RNG_FAMILY = "mt19937-legacy"

# key tags so independent purposes never share a stream
TAG_SPLIT = 1
TAG_FOLDS = 2
TAG_CELL = 3
TAG_EVAL = 4
TAG_SWEEP = 5


def derive_seed(base_seed: int, *keys: int) -> int:
    """Return a 63-bit seed that is a pure function of ``(base_seed, *keys)``."""
    if base_seed < 0 or any(k < 0 for k in keys):
        raise ValueError("seeds and stream keys must be non-negative")
    ss = np.random.SeedSequence([int(base_seed), *(int(k) for k in keys)])
    hi, lo = ss.generate_state(2, dtype=np.uint32)
    return ((int(hi) << 32) | int(lo)) >> 1


def generator(seed: int, *keys: int) -> np.random.Generator:
    if keys:
        seed = derive_seed(seed, *keys)
    return np.random.Generator(np.random.PCG64(int(seed)))
