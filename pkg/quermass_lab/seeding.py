"""
Counter-based seed derivation.

Every random stream in the toolkit is keyed by (base seed, counters...) so
results depend on the keys only, never on which worker drew them or in what
order.
"""

import numpy as np


def derive_seed(base_seed: int, *keys: int) -> int:
    """Deterministic 63-bit seed for the stream (base_seed, *keys)"""
    state = np.random.SeedSequence([int(base_seed) & 0xFFFFFFFFFFFFFFFF, *[int(k) for k in keys]])
    return int(state.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def stream(base_seed: int, *keys: int) -> np.random.Generator:
    """Generator for the stream (base_seed, *keys)"""
    return np.random.default_rng(np.random.SeedSequence([int(base_seed) & 0xFFFFFFFFFFFFFFFF, *[int(k) for k in keys]]))
