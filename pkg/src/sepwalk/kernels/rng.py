"""SplitMix64 constants and the pure-numpy hash used by the numpy backend."""

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
COIN_SALT = np.uint64(0xD1B54A32D192ED03)
LEVEL_SHIFT = np.uint64(32)
TO_UNIT = 2.0 ** -53


def mix64(z):
    """SplitMix64 finalizer on uint64 scalars or arrays (wrapping arithmetic)."""
    with np.errstate(over="ignore"):
        z = np.asarray(z, dtype=np.uint64)
        z = z ^ (z >> np.uint64(30))
        z = z * MIX1
        z = z ^ (z >> np.uint64(27))
        z = z * MIX2
        return z ^ (z >> np.uint64(31))


def path_keys(seed: int, paths: int) -> np.ndarray:
    base = mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    with np.errstate(over="ignore"):
        idx = np.arange(1, paths + 1, dtype=np.uint64)
        return mix64(base + idx * GAMMA)


def uniform(keys, counters):
    with np.errstate(over="ignore"):
        z = mix64(keys + (np.asarray(counters, dtype=np.uint64) + np.uint64(1)) * GAMMA)
    return (z >> np.uint64(11)).astype(np.float64) * TO_UNIT
