"""Deterministic pseudorandom numbers for reproducible runs.

xorshift64* with the classic parameters: state update x ^= x >> 12,
x ^= x << 25, x ^= x >> 27 (all on 64 bits), output = state * 0x2545F4914F6CDD1D
mod 2^64.  The generator is tiny, has no platform- or version-dependent
behaviour, and is trivial to port, which is what basis perturbation and the
selfcheck instance generator need.  State must be nonzero; callers reserve
seed 0 to mean "no randomness requested".
"""

MULTIPLIER = 0x2545F4914F6CDD1D
_MASK = (1 << 64) - 1


class XorShift64Star:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        if seed == 0:
            raise ValueError("seed 0 is reserved; the xorshift state must be nonzero")
        self.state = seed & _MASK
        if self.state == 0:  # seed was a multiple of 2^64
            raise ValueError("seed reduces to zero state")

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK
        x ^= x >> 27
        self.state = x
        return (x * MULTIPLIER) & _MASK

    def randrange(self, n: int) -> int:
        """Integer in [0, n). Plain modulo: the tiny bias is irrelevant here
        and keeping the mapping trivial keeps it portable."""
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        return self.next_u64() % n

    def randint(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi] inclusive."""
        return lo + self.randrange(hi - lo + 1)

    def choice(self, seq):
        if not seq:
            raise ValueError("choice from empty sequence")
        return seq[self.randrange(len(seq))]
