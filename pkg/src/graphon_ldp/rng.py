"""Counter-based uniform draws keyed by (seed, i, j).

The generator is Philox4x64-10 (Salmon et al., "Parallel random numbers:
as easy as 1, 2, 3", SC'11), the same construction numpy ships as
``numpy.random.Philox``.  It is reimplemented here in vectorized form so a
whole upper triangle of edge draws is produced in one pass, independent of
iteration order or thread count.

Counter layout: ``(i, j, 0, 0)``.  Key: ``(seed, 0)``.  The first 64-bit
output word is reduced to a double in [0, 1) from its top 53 bits.
"""

import numpy as np

_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)

PHILOX_M0 = np.uint64(0xD2E7470EE14C6C93)
PHILOX_M1 = np.uint64(0xCA5A826395121157)
PHILOX_W0 = np.uint64(0x9E3779B97F4A7C15)
PHILOX_W1 = np.uint64(0xBB67AE8584CAA73B)
ROUNDS = 10


def _mulhilo(a, b):
    """Full 64x64 -> 128 bit product, returned as (hi, lo) uint64 arrays."""
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    al, ah = a & _MASK32, a >> _SHIFT32
    bl, bh = b & _MASK32, b >> _SHIFT32
    p0 = al * bl
    p1 = al * bh
    p2 = ah * bl
    p3 = ah * bh
    mid = (p0 >> _SHIFT32) + (p1 & _MASK32) + (p2 & _MASK32)
    hi = p3 + (p1 >> _SHIFT32) + (p2 >> _SHIFT32) + (mid >> _SHIFT32)
    lo = a * b
    return hi, lo


def philox4x64(counter, key):
    """Philox4x64-10 block function.

    ``counter`` is a sequence of four uint64 arrays (broadcastable), ``key``
    a pair of uint64 scalars or arrays.  Returns the four output words.
    """
    with np.errstate(over="ignore"):
        c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) for c in counter)
        k0, k1 = (np.asarray(k, dtype=np.uint64) for k in key)
        for r in range(ROUNDS):
            if r:
                k0 = k0 + PHILOX_W0
                k1 = k1 + PHILOX_W1
            hi0, lo0 = _mulhilo(PHILOX_M0, c0)
            hi1, lo1 = _mulhilo(PHILOX_M1, c2)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


def _check_seed(seed):
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.uint64(seed)


def uniform_pairs(seed, i, j):
    """Uniform doubles in [0, 1) for the counters ``(i, j)`` under ``seed``."""
    key = (_check_seed(seed), np.uint64(0))
    i = np.asarray(i, dtype=np.uint64)
    j = np.asarray(j, dtype=np.uint64)
    zero = np.zeros(np.broadcast(i, j).shape, dtype=np.uint64)
    x0, _, _, _ = philox4x64((i, j, zero, zero), key)
    return (x0 >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
