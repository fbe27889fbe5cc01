"""Per-station random streams.

Every draw is a pure function of ``(run seed, station id, round, purpose)``,
so a station's decisions never depend on how many draws other stations made
or in which order stations are visited. Internally a SplitMix64 finaliser
hashes the key into 53 uniform bits.
"""
from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MASK = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def _u64(x) -> np.ndarray:
    # int64 -> uint64 wraps negatives, which is all the hash needs
    return np.asarray(x, dtype=np.int64).astype(np.uint64)


def station_uniform(seed: int, station_ids, rnd: int, purpose: int = 0) -> np.ndarray:
    """Uniforms in ``[0, 1)``, one per station id, for the given round and purpose."""
    ids = _u64(station_ids)
    with np.errstate(over="ignore"):
        h = _mix(np.uint64(int(seed) & _MASK) + _GOLDEN)
        h = _mix(h ^ ids)
        h = _mix(h ^ (np.uint64(int(rnd) & _MASK) * _GOLDEN))
        h = _mix(h ^ (np.uint64(int(purpose) & _MASK) + _GOLDEN))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def derive_seed(*parts: int) -> int:
    """Deterministic 63-bit seed from integer parts."""
    return int(np.random.SeedSequence([int(p) & _MASK for p in parts]).generate_state(1, np.uint64)[0]
               & np.uint64(0x7FFFFFFFFFFFFFFF))
