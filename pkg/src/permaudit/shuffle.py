"""The shuffle algorithms under test.

Six variants, all walking j = N down to 2 and exchanging positions k and
j-1; they differ only in how the swap index k is drawn:

* ``fy-ideal``  — k uniform in [0, j) by rejection sampling (needs an
  ideal-kind source); the reference correct shuffle.
* ``fy-mod``    — k = r mod j for a b-bit draw r (reduction).
* ``fy-float``  — k = floor(j * r / 2^b): the floating-point formulation,
  computed in exact integer arithmetic so results are bit-exact across
  platforms.
* ``fy-muldiv`` — k = floor(r * j / rfn) with rfn = 2^b (multiply/shift).
* ``naive``     — k = r mod N, the same bound every iteration; biased by
  construction (N^(N-1) draw sequences cannot split evenly over N!).
* ``sattolo``   — k = r mod (j-1), so k != j-1 and every output is one
  N-cycle.

Every non-ideal variant consumes exactly one b-bit draw per loop step,
N-1 draws per permutation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .errors import IncompatibleSource
from .perm import MAX_N, MIN_N, Permutation
from .rng import BitSource, draw_in_range_ideal

ALGORITHMS = ("fy-ideal", "fy-mod", "fy-float", "fy-muldiv", "naive", "sattolo")


@dataclass(frozen=True)
class ShuffleSpec:
    """Algorithm + size + per-draw bit width; identifies a select function."""

    algo: str
    n: int
    bits: int = 0

    def __post_init__(self) -> None:
        if self.algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algo!r}")
        if not MIN_N <= self.n <= MAX_N:
            raise ValueError(f"n={self.n} outside [{MIN_N}, {MAX_N}]")
        if self.algo == "fy-ideal":
            object.__setattr__(self, "bits", 0)  # width is per-step, not fixed
        elif not 1 <= self.bits <= 32:
            raise ValueError(f"bits={self.bits} outside [1, 32]")

    @property
    def rfn(self) -> int:
        """The power-of-two refiner used by fy-muldiv (and fy-float)."""
        return 1 << self.bits

    @property
    def draws_per_shuffle(self) -> int:
        """Draws consumed per permutation (fy-ideal rejections excluded)."""
        return self.n - 1


def _check_compatible(spec: ShuffleSpec, src: BitSource) -> None:
    if spec.algo == "fy-ideal":
        if src.kind != "ideal":
            raise IncompatibleSource("fy-ideal needs an ideal-kind source")
    elif src.kind == "tape" and src.tape.bit_width != spec.bits:
        raise IncompatibleSource(
            f"tape is {src.tape.bit_width}-bit, spec wants {spec.bits}-bit draws"
        )


def shuffle(spec: ShuffleSpec, src: BitSource) -> Permutation:
    """One permutation of Z_N drawn from the configured algorithm."""
    _check_compatible(spec, src)
    algo, n, bits = spec.algo, spec.n, spec.bits
    x = list(range(n))
    for j in range(n, 1, -1):
        if algo == "fy-ideal":
            k = draw_in_range_ideal(src, j)
        else:
            r = src.draw_bits(bits)
            if algo == "fy-mod":
                k = r % j
            elif algo == "fy-float":
                k = (j * r) // (1 << bits)
            elif algo == "fy-muldiv":
                k = (r * j) >> bits
            elif algo == "naive":
                k = r % n
            else:  # sattolo
                k = r % (j - 1)
        x[k], x[j - 1] = x[j - 1], x[k]
    return Permutation(tuple(x))


def generate_stream(spec: ShuffleSpec, src: BitSource, count: int) -> Iterator[Permutation]:
    """count permutations from repeated shuffles on the same evolving source."""
    if count < 1:
        raise ValueError("count must be >= 1")

    def _gen() -> Iterator[Permutation]:
        for _ in range(count):
            yield shuffle(spec, src)

    return _gen()
