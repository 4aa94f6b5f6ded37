"""Counter-based pseudo-random numbers for reproducible experiments.

Everything random in this library (dataset entries, sample points,
coordinate choices, start vectors) flows through SplitMix64 so that a
64-bit seed regenerates identical bits on any platform, independent of
numpy's generator internals.
"""

import math

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """splitmix64 stream with Box-Muller normal sampling.

    The state advances by the golden-ratio increment and the output is
    the standard two-round xor-multiply finalizer, so each draw is a
    pure function of (seed, counter).
    """

    def __init__(self, seed):
        self._state = int(seed) & _MASK
        self._spare = None

    def next_uint64(self):
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def uniform(self):
        """One double in [0, 1) with 53 random bits."""
        return (self.next_uint64() >> 11) * 2.0**-53

    def below(self, n):
        """Unbiased integer in [0, n) by rejection sampling."""
        if n <= 0:
            raise ValueError("below() needs a positive bound")
        limit = ((1 << 64) // n) * n
        while True:
            r = self.next_uint64()
            if r < limit:
                return r % n

    def normal(self):
        """One standard normal draw (Box-Muller, spare cached)."""
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        # u1 is shifted into (0, 1] so log() never sees zero.
        u1 = ((self.next_uint64() >> 11) + 1) * 2.0**-53
        u2 = (self.next_uint64() >> 11) * 2.0**-53
        radius = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._spare = radius * math.sin(theta)
        return radius * math.cos(theta)

    def normals(self, shape):
        """Array of standard normals with the given shape."""
        flat = np.array([self.normal() for _ in range(int(np.prod(shape, dtype=int)))])
        return flat.reshape(shape)
