"""Seeded PRNG used by the clustering initializer.

splitmix64 expands a 64-bit seed into the 256-bit state of xoshiro256**
(Blackman/Vigna). Both are implemented here rather than taken from numpy so
that streams are bit-identical across platforms and numpy versions.

Stream-consumption order is part of the determinism contract:

* ``next_uint64`` draws one raw 64-bit word.
* ``next_double`` draws one word and maps its top 53 bits to [0, 1).
* ``next_below(n)`` draws exactly one double and floors ``double * n``.
* ``weighted_index`` draws exactly one double; if total weight is not
  positive it falls back to one additional ``next_below`` draw.
"""

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF


def _splitmix64(state):
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, (z ^ (z >> 31)) & _MASK


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & _MASK


class Xoshiro256StarStar:
    """xoshiro256** seeded through splitmix64 from a single 64-bit integer."""

    def __init__(self, seed: int):
        sm = seed & _MASK
        state = []
        for _ in range(4):
            sm, word = _splitmix64(sm)
            state.append(word)
        self._s = state

    def next_uint64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & _MASK, 7) * 9) & _MASK
        t = (s[1] << 17) & _MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def next_double(self) -> float:
        # Top 53 bits scaled by 2^-53, the conventional uint64->double map.
        return (self.next_uint64() >> 11) * (1.0 / 9007199254740992.0)

    def next_below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        return int(self.next_double() * n)

    def weighted_index(self, weights: np.ndarray) -> int:
        """Pick an index with probability proportional to ``weights``.

        Consumes one double; the cumulative sum is accumulated left to
        right, so the chosen index is deterministic for identical inputs.
        Falls back to a uniform draw when all weights are zero.
        """
        cumulative = np.cumsum(np.asarray(weights, dtype=np.float64))
        total = float(cumulative[-1]) if cumulative.size else 0.0
        if not total > 0.0:
            return self.next_below(len(weights))
        r = self.next_double() * total
        idx = int(np.searchsorted(cumulative, r, side="right"))
        if idx >= len(weights):
            idx = int(np.max(np.nonzero(np.asarray(weights) > 0)[0]))
        return idx
