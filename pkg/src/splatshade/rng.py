"""Counter-based random streams.

Every random draw in the renderer is a pure function of (seed, stream key,
dimension), so results never depend on evaluation order, batching, or thread
count. The compiled kernels implement the identical bit-level construction.
"""

from __future__ import annotations

import numpy as np

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_DIM = np.uint64(0xD1B54A32D192ED03)
_INV53 = float(2.0**-53)


def _mix(z: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer
    z = z ^ (z >> np.uint64(30))
    z = z * _M1
    z = z ^ (z >> np.uint64(27))
    z = z * _M2
    return z ^ (z >> np.uint64(31))


def hash_u64(seed: int, key, dim: int = 0) -> np.ndarray:
    """64-bit hash of (seed, key, dim); key may be a uint64 array."""
    key = np.asarray(key, dtype=np.uint64)
    with np.errstate(over="ignore"):  # modular arithmetic is the point
        z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + _GOLDEN * key
        return _mix(_mix(z) + _DIM * np.uint64((dim + 1) & 0xFFFFFFFFFFFFFFFF))


def uniform(seed: int, key, dim: int = 0) -> np.ndarray:
    """Deterministic uniform draw in [0, 1) for each stream key."""
    return (hash_u64(seed, key, dim) >> np.uint64(11)).astype(np.float64) * _INV53
