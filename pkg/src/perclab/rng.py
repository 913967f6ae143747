"""Counter-based random numbers.

Every draw is a pure function of ``(key, counter)``, where the key is derived
from the user seed and a path of integers (bond stream, replicate index, ...).
Results therefore do not depend on iteration order, chunking or thread count.

The mixing function is the SplitMix64 finalizer; a draw is
``mix(key ^ mix(counter * GOLDEN + 1))`` so that distinct keys never walk the
same Weyl sequence.
"""
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)
_NM1 = np.uint64(_M1)
_NM2 = np.uint64(_M2)
_NG = np.uint64(GOLDEN)
_ONE = np.uint64(1)


def mix64(z: int) -> int:
    """Scalar SplitMix64 finalizer on Python ints."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = np.array(z, dtype=np.uint64, copy=True, ndmin=1)
    with np.errstate(over="ignore"):
        z ^= z >> _U30
        z *= _NM1
        z ^= z >> _U27
        z *= _NM2
        z ^= z >> _U31
    return z


def derive_key(seed: int, *path: int) -> int:
    """Fold a seed and a path of non-negative integers into one 64-bit key."""
    key = mix64(int(seed) + GOLDEN)
    for p in path:
        key = mix64(key ^ mix64(int(p) * GOLDEN + 1))
    return key


def stream_keys(key: int, streams) -> np.ndarray:
    """Vectorized ``derive_key(.., stream)`` extension for many streams at once."""
    s = np.asarray(streams, dtype=np.uint64)
    with np.errstate(over="ignore"):
        sub = mix64_array(s * _NG + _ONE)
    return mix64_array(np.uint64(key) ^ sub)


def _counter_word(counter) -> np.ndarray:
    c = np.asarray(counter, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64_array(c * _NG + _ONE)


def random_bits(keys, counter) -> np.ndarray:
    """Raw 64-bit words for ``(keys, counter)``; arguments broadcast."""
    k = np.asarray(keys, dtype=np.uint64)
    return mix64_array(k ^ _counter_word(counter))


def uniforms(keys, counter) -> np.ndarray:
    """Uniform doubles in [0, 1) with 53 random bits."""
    return (random_bits(keys, counter) >> _U11).astype(np.float64) * (2.0 ** -53)


def integers(keys, counter, n) -> np.ndarray:
    """Uniform integers in ``[0, n)``; ``n`` may be an array (must be >= 1)."""
    u = uniforms(keys, counter)
    out = (u * np.asarray(n)).astype(np.int64)
    # guard against u*n rounding up to n
    return np.minimum(out, np.asarray(n) - 1)


def exponentials(keys, counter) -> np.ndarray:
    u = uniforms(keys, counter)
    return -np.log1p(-u)
