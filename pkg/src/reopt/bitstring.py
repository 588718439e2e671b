"""Bit-string genomes, Hamming geometry and standard bit mutation.

A :class:`Genome` packs its bits into a Python ``int`` (position ``i`` lives in
bit ``1 << i``), but every public accessor is position-indexed and the text
form always lists position 0 first.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Iterable, Optional

__all__ = [
    "ContractViolation",
    "Genome",
    "MutationConfig",
    "make_rng",
    "hamming_distance",
    "flip_bits",
    "flip_mask",
    "standard_bit_mutation",
]

SEED_MASK = (1 << 64) - 1


class ContractViolation(ValueError):
    """Raised when an operation is called outside its precondition."""


class Genome:
    """Immutable fixed-length bit string."""

    __slots__ = ("n", "bits")

    def __init__(self, n: int, bits: int = 0):
        if n < 1:
            raise ContractViolation(f"genome length must be >= 1, got {n}")
        if bits < 0 or bits >> n:
            raise ContractViolation(f"bit pattern does not fit in {n} positions")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def _make(cls, n: int, bits: int) -> "Genome":
        # unchecked constructor for the inner loops
        g = object.__new__(cls)
        object.__setattr__(g, "n", n)
        object.__setattr__(g, "bits", bits)
        return g

    @classmethod
    def zeros(cls, n: int) -> "Genome":
        return cls(n, 0)

    @classmethod
    def ones(cls, n: int) -> "Genome":
        return cls(n, (1 << n) - 1)

    @classmethod
    def from_string(cls, text: str) -> "Genome":
        """Parse ``'0110'`` (position 0 leftmost)."""
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise ContractViolation(f"not a bit string: {text!r}")
        return cls(len(text), int(text[::-1], 2))

    @classmethod
    def from_bits(cls, values: Iterable[int]) -> "Genome":
        values = list(values)
        bits = 0
        for i, v in enumerate(values):
            if v not in (0, 1, True, False):
                raise ContractViolation(f"bit {i} is {v!r}, expected 0 or 1")
            if v:
                bits |= 1 << i
        return cls(len(values), bits)

    def __setattr__(self, name, value):
        raise AttributeError("Genome is immutable")

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> int:
        if i < 0:
            i += self.n
        if not 0 <= i < self.n:
            raise IndexError(i)
        return (self.bits >> i) & 1

    def __iter__(self):
        bits = self.bits
        for i in range(self.n):
            yield (bits >> i) & 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, Genome):
            return NotImplemented
        return self.n == other.n and self.bits == other.bits

    def __hash__(self) -> int:
        return hash((self.n, self.bits))

    def __str__(self) -> str:
        return format(self.bits, f"0{self.n}b")[::-1]

    def __repr__(self) -> str:
        return f"Genome('{self}')"

    def __reduce__(self):
        return (Genome, (self.n, self.bits))

    def count_ones(self) -> int:
        return self.bits.bit_count()

    def ones_positions(self) -> list[int]:
        out = []
        bits = self.bits
        while bits:
            low = bits & -bits
            out.append(low.bit_length() - 1)
            bits ^= low
        return out

    def to_list(self) -> list[int]:
        return list(self)


@dataclass(frozen=True)
class MutationConfig:
    """Per-bit flip probability; ``rate=None`` means ``1/n``."""

    rate: Optional[float] = None

    def __post_init__(self):
        if self.rate is not None and not 0 <= self.rate <= 1:
            raise ContractViolation(f"mutation rate must lie in [0, 1], got {self.rate}")

    def rate_for(self, n: int) -> float:
        return 1.0 / n if self.rate is None else self.rate


def make_rng(seed: int) -> random.Random:
    """Dedicated random stream for one run; the seed is reduced to 64 bits."""
    return random.Random(int(seed) & SEED_MASK)


def hamming_distance(a: Genome, b: Genome) -> int:
    if a.n != b.n:
        raise ContractViolation(f"length mismatch: {a.n} vs {b.n}")
    return (a.bits ^ b.bits).bit_count()


def flip_bits(x: Genome, positions: Iterable[int]) -> Genome:
    mask = 0
    for p in positions:
        if not 0 <= p < x.n:
            raise ContractViolation(f"position {p} out of range for length {x.n}")
        mask |= 1 << p
    return Genome._make(x.n, x.bits ^ mask)


def flip_mask(n: int, rate: float, rng: random.Random) -> int:
    """Mask with each of ``n`` bits set independently with probability ``rate``.

    Skips straight to the next set bit with a geometric jump, so the cost is
    proportional to the number of flips rather than to ``n``.
    """
    if rate <= 0.0:
        return 0
    if rate >= 1.0:
        return (1 << n) - 1
    log_keep = math.log1p(-rate)
    mask = 0
    pos = -1
    rand = rng.random
    log = math.log
    while True:
        # failures before next success ~ Geometric(rate) on {0, 1, ...}
        jump = log(1.0 - rand()) / log_keep
        if jump >= n - pos:  # also catches inf from denormal rates
            return mask
        pos += 1 + int(jump)
        if pos >= n:
            return mask
        mask |= 1 << pos


def standard_bit_mutation(x: Genome, cfg: MutationConfig, rng: random.Random) -> Genome:
    n = x.n
    rate = 1.0 / n if cfg.rate is None else cfg.rate
    return Genome._make(n, x.bits ^ flip_mask(n, rate, rng))
