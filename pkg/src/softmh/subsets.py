"""Bit-mask subsets of {0, ..., p-1} and exhaustive state enumeration.

A chain state is a subset of column indices, stored as a machine-word bit
mask.  Dimensions are capped at 64 so every state fits in one word; the
exact oracle enumerates all 2^p states anyway, so larger p would be out of
reach regardless of representation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

from .errors import DimensionMismatch, StateSpaceTooLarge

MAX_DIMENSION = 64

# Full enumeration is refused above this many states (2^24).
FULL_ENUMERATION_CAP = 1 << 24


@dataclass(frozen=True)
class Subset:
    """Immutable subset of {0, ..., p-1} as an integer bit mask."""

    bits: int
    p: int

    def __post_init__(self):
        if not 1 <= self.p <= MAX_DIMENSION:
            raise ValueError(f"dimension p={self.p} outside [1, {MAX_DIMENSION}]")
        if not 0 <= self.bits < (1 << self.p):
            raise ValueError(f"bits {self.bits:#x} out of range for p={self.p}")

    @classmethod
    def empty(cls, p: int) -> "Subset":
        return cls(0, p)

    @classmethod
    def full(cls, p: int) -> "Subset":
        return cls((1 << p) - 1, p)

    @classmethod
    def from_indices(cls, p: int, indices) -> "Subset":
        bits = 0
        for j in indices:
            if not 0 <= j < p:
                raise ValueError(f"index {j} out of range for p={p}")
            bits |= 1 << j
        return cls(bits, p)

    @property
    def size(self) -> int:
        return self.bits.bit_count()

    def __contains__(self, j: int) -> bool:
        return bool((self.bits >> j) & 1)

    def __iter__(self) -> Iterator[int]:
        m = self.bits
        while m:
            lsb = m & -m
            yield lsb.bit_length() - 1
            m ^= lsb

    def members(self) -> tuple[int, ...]:
        return tuple(self)

    def add(self, j: int) -> "Subset":
        self._check_index(j)
        return Subset(self.bits | (1 << j), self.p)

    def remove(self, j: int) -> "Subset":
        self._check_index(j)
        return Subset(self.bits & ~(1 << j), self.p)

    def flip(self, j: int) -> "Subset":
        self._check_index(j)
        return Subset(self.bits ^ (1 << j), self.p)

    def union(self, other: "Subset") -> "Subset":
        self._check_peer(other)
        return Subset(self.bits | other.bits, self.p)

    def intersection(self, other: "Subset") -> "Subset":
        self._check_peer(other)
        return Subset(self.bits & other.bits, self.p)

    def difference(self, other: "Subset") -> "Subset":
        self._check_peer(other)
        return Subset(self.bits & ~other.bits, self.p)

    def issubset(self, other: "Subset") -> bool:
        self._check_peer(other)
        return (self.bits & ~other.bits) == 0

    def issuperset(self, other: "Subset") -> bool:
        self._check_peer(other)
        return (other.bits & ~self.bits) == 0

    def hamming(self, other: "Subset") -> int:
        self._check_peer(other)
        return (self.bits ^ other.bits).bit_count()

    def hex(self) -> str:
        return f"0x{self.bits:x}"

    def _check_index(self, j: int) -> None:
        if not 0 <= j < self.p:
            raise ValueError(f"index {j} out of range for p={self.p}")

    def _check_peer(self, other: "Subset") -> None:
        if other.p != self.p:
            raise DimensionMismatch(f"subset dimensions differ: {self.p} vs {other.p}")

    def __repr__(self) -> str:
        return f"Subset(p={self.p}, {{{', '.join(map(str, self))}}})"


def neighbors(S: Subset) -> list[Subset]:
    """All p states at Hamming distance 1 from S, by flipped index ascending."""
    return [S.flip(j) for j in range(S.p)]


def enumerate_states(
    p: int,
    max_size: int | None = None,
    cap: int = FULL_ENUMERATION_CAP,
) -> Iterator[Subset]:
    """Yield each subset of {0,...,p-1} once, bit pattern ascending.

    With ``max_size`` only subsets of at most that size are produced, still
    in ascending bit-pattern order.  Raises :class:`StateSpaceTooLarge` when
    the number of states to visit exceeds ``cap``.
    """
    if not 1 <= p <= MAX_DIMENSION:
        raise ValueError(f"dimension p={p} outside [1, {MAX_DIMENSION}]")
    if max_size is None or (1 << p) <= cap:
        if (1 << p) > cap:
            raise StateSpaceTooLarge(f"2^{p} states exceed cap {cap}")
        for bits in range(1 << p):
            if max_size is None or bits.bit_count() <= max_size:
                yield Subset(bits, p)
        return
    # p too large for a full scan: generate the small sizes and merge-sort
    # by bit pattern.
    total = sum(_binom(p, k) for k in range(min(max_size, p) + 1))
    if total > cap:
        raise StateSpaceTooLarge(f"{total} states of size <= {max_size} exceed cap {cap}")
    patterns = sorted(
        sum(1 << j for j in combo)
        for k in range(min(max_size, p) + 1)
        for combo in itertools.combinations(range(p), k)
    )
    for bits in patterns:
        yield Subset(bits, p)


def _binom(n: int, k: int) -> int:
    import math

    return math.comb(n, k)
