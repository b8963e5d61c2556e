import numpy as np

# Recorded in every serialized artifact; a different generator means different instances.
RNG_ID = "numpy-pcg64"


def make_rng(seed: int) -> np.random.Generator:
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(int(seed)))
