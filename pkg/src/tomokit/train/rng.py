"""Named 64-bit PRNG for reproducible shuffles and seeded sampling.

xoshiro256** (Blackman & Vigna) seeded through splitmix64, with unbiased
bounded draws by rejection sampling.  The point of carrying our own
generator instead of numpy's is that every step is specified exactly in
integer arithmetic, so shuffles and subsampling reproduce bit-for-bit in
any implementation language.
"""

from __future__ import annotations

from typing import Sequence

_MASK = (1 << 64) - 1


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


class Xoshiro256:
    """xoshiro256** stream; construct with any 64-bit seed."""

    def __init__(self, seed: int):
        sm = seed & _MASK
        state = []
        for _ in range(4):
            sm, word = _splitmix64(sm)
            state.append(word)
        self._s = state

    def next_u64(self) -> int:
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

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) without modulo bias."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = ((1 << 64) // n) * n
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def uniform(self) -> float:
        """Uniform float in [0, 1) with 53 bits of randomness."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def log_uniform(self, lo: float, hi: float) -> float:
        import math

        return math.exp(math.log(lo) + self.uniform() * (math.log(hi) - math.log(lo)))

    def shuffle(self, items: list) -> list:
        """In-place Fisher-Yates shuffle; returns the same list."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items

    def sample_without_replacement(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), via partial Fisher-Yates.

        Only min(k, n-1) draws are consumed, so sampling a few items from
        a large range is cheap.
        """
        idx = list(range(n))
        for i in range(min(k, n - 1)):
            j = i + self.below(n - i)
            idx[i], idx[j] = idx[j], idx[i]
        return idx[:k]


def derive_seed(seed: int, *streams: int) -> int:
    """Stable sub-stream seed from a base seed and stream indices."""
    sm = seed & _MASK
    for s in streams:
        sm, _ = _splitmix64((sm ^ (s & _MASK)) & _MASK)
        _, sm = _splitmix64(sm)
    return sm


def epoch_permutation(seed: int, epoch: int, n: int) -> list[int]:
    """Per-epoch data order used by the training loops."""
    rng = Xoshiro256(derive_seed(seed, 0xE70C, epoch))
    return rng.shuffle(list(range(n)))


def log_uniform_grid(seed: int, trials: int, lo: float, hi: float) -> list[float]:
    """Seeded log-uniform candidates for learning-rate search."""
    rng = Xoshiro256(derive_seed(seed, 0x5EA2C4))
    return [rng.log_uniform(lo, hi) for _ in range(trials)]


def split_indices(
    seed: int, n: int, fractions: Sequence[float]
) -> list[list[int]]:
    """Disjoint shuffled index groups with sizes proportional to fractions."""
    rng = Xoshiro256(derive_seed(seed, 0x59711))
    idx = rng.shuffle(list(range(n)))
    out = []
    start = 0
    for i, f in enumerate(fractions):
        size = round(n * f) if i < len(fractions) - 1 else n - start
        out.append(sorted(idx[start : start + size]))
        start += size
    return out
