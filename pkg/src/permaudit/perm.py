"""Permutation values: validity, composition, cycle structure, parity, and
the lift onto ordered k-tuples of distinct indices.

Indices are zero-based throughout.  A permutation of size N maps position i
to ``mapping[i]``; N is capped at 255 so one entry always fits a byte in the
on-disk format.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations as _ktuples
from typing import Iterable, Iterator

from .errors import DimensionMismatch, DuplicateIndex, OutOfRange, TupleSpaceTooLarge

MIN_N = 2
MAX_N = 255

# Largest number of k-tuples a lift may address.
MAX_TUPLE_SPACE = 10_000_000


@dataclass(frozen=True)
class Permutation:
    """A bijection on {0,...,n-1}, stored as the image tuple."""

    mapping: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.mapping)

    def __call__(self, i: int) -> int:
        return self.mapping[i]

    def __iter__(self) -> Iterator[int]:
        return iter(self.mapping)

    def compose(self, other: "Permutation") -> "Permutation":
        """self after other: (self.compose(other))(i) == self(other(i))."""
        if other.n != self.n:
            raise DimensionMismatch(f"cannot compose sizes {self.n} and {other.n}")
        return Permutation(tuple(self.mapping[v] for v in other.mapping))

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, v in enumerate(self.mapping):
            inv[v] = i
        return Permutation(tuple(inv))


def validate(mapping: Iterable[int]) -> Permutation:
    """Check that a sequence is a bijection on {0,...,N-1} and wrap it.

    Raises OutOfRange for a bad length or out-of-range value, DuplicateIndex
    for a repeated value.
    """
    values = tuple(int(v) for v in mapping)
    n = len(values)
    if not MIN_N <= n <= MAX_N:
        raise OutOfRange(f"permutation length {n} outside [{MIN_N}, {MAX_N}]")
    seen = bytearray(n)
    for v in values:
        if not 0 <= v < n:
            raise OutOfRange(f"value {v} outside [0, {n})")
        if seen[v]:
            raise DuplicateIndex(f"value {v} appears more than once")
        seen[v] = 1
    return Permutation(values)


def is_cyclic(p: Permutation) -> bool:
    """True iff p is a single cycle covering all n positions."""
    steps = 0
    i = 0
    while True:
        i = p.mapping[i]
        steps += 1
        if i == 0:
            break
        if steps > p.n:  # unreachable for a bijection; defensive
            return False
    return steps == p.n


def parity(p: Permutation) -> str:
    """'even' or 'odd': the transposition-count parity of p."""
    seen = bytearray(p.n)
    cycles = 0
    for start in range(p.n):
        if seen[start]:
            continue
        cycles += 1
        i = start
        while not seen[i]:
            seen[i] = 1
            i = p.mapping[i]
    return "even" if (p.n - cycles) % 2 == 0 else "odd"


@dataclass(frozen=True)
class LiftedPermutation:
    """A permutation of the ordered k-tuples of distinct indices.

    Tuples are indexed lexicographically (first differing coordinate
    decides); diagonal tuples (repeated coordinates) are excluded.
    ``mapping[i]`` is the tuple index of the image of tuple number i.
    """

    base_n: int
    k: int
    mapping: tuple[int, ...] = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.mapping)

    def compose(self, other: "LiftedPermutation") -> "LiftedPermutation":
        if (other.base_n, other.k) != (self.base_n, self.k):
            raise DimensionMismatch("lift shapes differ")
        return LiftedPermutation(
            self.base_n, self.k, tuple(self.mapping[v] for v in other.mapping)
        )

    def as_permutation(self) -> Permutation:
        """Reinterpret as a plain Permutation of the tuple index space."""
        if self.size > MAX_N:
            raise OutOfRange(f"lifted size {self.size} exceeds {MAX_N}")
        return Permutation(self.mapping)


def tuple_space(n: int, k: int) -> list[tuple[int, ...]]:
    """All ordered k-tuples of distinct indices from {0,...,n-1}, in
    lexicographic order."""
    return list(_ktuples(range(n), k))


def lift(p: Permutation, k: int) -> LiftedPermutation:
    """The embedding of p into the permutation of ordered k-tuples:
    tuple (a1,...,ak) maps to (p(a1),...,p(ak))."""
    if not 1 <= k <= p.n:
        raise OutOfRange(f"k={k} outside [1, {p.n}]")
    space = math.perm(p.n, k)
    if space > MAX_TUPLE_SPACE:
        raise TupleSpaceTooLarge(f"{space} tuples exceed cap {MAX_TUPLE_SPACE}")
    tuples = tuple_space(p.n, k)
    index = {t: i for i, t in enumerate(tuples)}
    images = tuple(index[tuple(p.mapping[a] for a in t)] for t in tuples)
    return LiftedPermutation(p.n, k, images)


class PermMultiset:
    """A multiset of same-size permutations with integer multiplicities."""

    def __init__(self, n: int):
        if not MIN_N <= n <= MAX_N:
            raise OutOfRange(f"n={n} outside [{MIN_N}, {MAX_N}]")
        self.n = n
        self.counts: dict[Permutation, int] = {}
        self.total = 0

    def add(self, p: Permutation, multiplicity: int = 1) -> None:
        if p.n != self.n:
            raise DimensionMismatch(f"permutation size {p.n}, multiset size {self.n}")
        if multiplicity < 0:
            raise ValueError("multiplicity must be nonnegative")
        if multiplicity:
            self.counts[p] = self.counts.get(p, 0) + multiplicity
            self.total += multiplicity

    @classmethod
    def from_perms(cls, perms: Iterable[Permutation]) -> "PermMultiset":
        it = iter(perms)
        first = next(it)
        ms = cls(first.n)
        ms.add(first)
        for p in it:
            ms.add(p)
        return ms

    def __len__(self) -> int:
        return len(self.counts)
