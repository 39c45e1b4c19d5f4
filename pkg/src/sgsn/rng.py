"""Deterministic pseudo-random generator with a pinned bit stream.

xoshiro256** seeded through splitmix64, uniforms from the top 53 bits,
normals through Box-Muller. The stream is part of the artifact contract:
generated datasets and fold assignments must reproduce bit-for-bit across
platforms and releases, which rules out generators whose streams are
allowed to change between library versions.
"""

import numpy as np

from ._backend import kernels
from ._kernels_py import box_muller

_MASK = (1 << 64) - 1


def _splitmix64(seed):
    """Yield successive splitmix64 outputs starting from ``seed``."""
    x = seed & _MASK
    while True:
        x = (x + 0x9E3779B97F4A7C15) & _MASK
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        yield z ^ (z >> 31)


class Rng:
    """Stream of uniforms/normals with reproducible cross-platform output.

    The stream is flat: draws consume the same underlying 64-bit words
    regardless of how calls are chunked.
    """

    def __init__(self, seed):
        if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
            raise TypeError(f"seed must be an integer, got {seed!r}")
        sm = _splitmix64(int(seed))
        self._state = np.array([next(sm) for _ in range(4)], dtype=np.uint64)
        self._normal_cache = None

    def bits(self, n):
        """Next ``n`` raw 64-bit words as a uint64 array."""
        out = np.empty(int(n), dtype=np.uint64)
        kernels.xoshiro_fill(self._state, out)
        return out

    def random(self, n):
        """``n`` doubles uniform on [0, 1), 53-bit resolution."""
        return (self.bits(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def uniform(self, lo, hi, n):
        """``n`` doubles uniform on [lo, hi)."""
        return lo + (hi - lo) * self.random(n)

    def normal(self, n):
        """``n`` standard normal doubles (Box-Muller, cached odd tail)."""
        n = int(n)
        out = np.empty(n, dtype=np.float64)
        have = 0
        if self._normal_cache is not None and n > 0:
            out[0] = self._normal_cache
            self._normal_cache = None
            have = 1
        need = n - have
        if need > 0:
            pairs = (need + 1) // 2
            a, b = box_muller(self.bits(pairs), self.bits(pairs))
            inter = np.empty(2 * pairs, dtype=np.float64)
            inter[0::2] = a
            inter[1::2] = b
            out[have:] = inter[:need]
            if 2 * pairs > need:
                self._normal_cache = float(inter[need])
        return out

    def folded_normal(self, n):
        """``n`` draws of ``|N(0, 1)|``."""
        return np.abs(self.normal(n))

    def below(self, bound):
        """One integer uniform on [0, bound), by rejection (no modulo bias)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            x = int(self.bits(1)[0])
            if x < limit:
                return x % bound

    def permutation(self, n):
        """Fisher-Yates permutation of range(n) as an int64 array."""
        perm = np.arange(n, dtype=np.int64)
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm
