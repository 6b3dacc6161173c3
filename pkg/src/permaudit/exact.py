"""Ground-truth analysis for small N, in exact rational arithmetic.

Everything here is an oracle: probabilities are Fractions, equality checks
are exact, and floating point appears only at the final chi-square tail
lookup (which is a report value, not a verdict input).

Exact distributions
-------------------
For every non-ideal algorithm, loop step j consumes exactly one b-bit draw
and the swap index k_j is a function of that draw alone.  Averaging over
all 2^(b(N-1)) equally likely tapes therefore factorizes into independent
per-step histograms of k_j over the 2^b draw values, which this module
computes in closed form.  The result is identical to literally enumerating
every tape (the test suite cross-checks the two routes on small spaces);
the factorized form just makes N=4, b=8 instantaneous.

Pairwise reduction of the approximate criterion
-----------------------------------------------
The approximate (top-order) criterion conditions on the event that
"{f(a), f(b)} = {c, d}" joined over all arrangements of the other N-2
assignments.  Those arrangement events are pairwise disjoint and each one,
under the criterion, gives the same conditional probability 1/2; hence
conditioning on their union gives 1/2 as well (if P(A|B_i) = k for
disjoint B_i then P(A | U B_i) = (sum k P(B_i)) / (sum P(B_i)) = k).
Conversely the union event is exactly {f(a), f(b)} = {c, d}.  So the
check below tests P(f(a)=c | {f(a),f(b)}={c,d}) = 1/2 for every input
pair a<b and output pair c<d, which in joint form is
P(f(a)=c, f(b)=d) = P(f(a)=d, f(b)=c).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import (
    EnumerationTooLarge,
    FactorialTooLarge,
    SpaceTooLarge,
    TooFewSamples,
)
from .perm import PermMultiset, Permutation, tuple_space
from .shuffle import ShuffleSpec
from .stats import TailProbability, chi2_upper_tail

#: Tape-space bound for exact distributions: 2^(b*(N-1)) must stay within this.
MAX_TAPE_SPACE = 1 << 26

#: Paths actually walked by the factorized enumeration.
MAX_ENUMERATION_PATHS = 4_000_000

#: Step budget for the k-th order check.
MAX_ORDER_CHECK_STEPS = 100_000_000

#: N! analyses stop here.
MAX_FACTORIAL_N = 8

Distribution = Union["ExactDistribution", PermMultiset]


@dataclass(frozen=True)
class ExactDistribution:
    """An exact probability map over permutations of Z_n."""

    n: int
    probs: dict[Permutation, Fraction]

    def __post_init__(self) -> None:
        if sum(self.probs.values()) != 1:
            raise ValueError("probabilities must sum exactly to 1")
        if any(p.n != self.n for p in self.probs):
            raise ValueError("mixed permutation sizes")

    @property
    def support_size(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class OrderCheckResult:
    """Outcome of a k-th order conditional-probability check.

    witness is (input k-tuple, output k-tuple, offending conditional) and is
    present exactly when the check failed on a positive-probability
    condition (holds=False, degenerate=False).
    """

    k: int
    holds: bool
    witness: tuple[tuple[int, ...], tuple[int, ...], Fraction] | None
    degenerate: bool


def _as_items(dist: Distribution) -> tuple[int, list[tuple[Permutation, Fraction]]]:
    """Normalize either input to (n, [(perm, probability)])."""
    if isinstance(dist, ExactDistribution):
        return dist.n, list(dist.probs.items())
    if isinstance(dist, PermMultiset):
        if dist.total == 0:
            raise ValueError("empty multiset")
        return dist.n, [
            (p, Fraction(c, dist.total)) for p, c in dist.counts.items()
        ]
    raise TypeError(f"unsupported distribution type {type(dist)!r}")


# ---------------------------------------------------------------------------
# Exact output distributions
# ---------------------------------------------------------------------------

def _residue_histogram(modulus: int, space: int) -> dict[int, int]:
    """Counts of r mod modulus over r in [0, space)."""
    hist: dict[int, int] = {}
    for k in range(min(modulus, space)):
        # r = k, k+modulus, ... below space
        hist[k] = (space - 1 - k) // modulus + 1
    return hist


def _muldiv_histogram(j: int, space: int) -> dict[int, int]:
    """Counts of floor(r*j/space) over r in [0, space)."""
    hist: dict[int, int] = {}
    for k in range(j):
        lo = -(-(k * space) // j)        # ceil(k*space/j)
        hi = min(-(-((k + 1) * space) // j), space)
        if hi > lo:
            hist[k] = hi - lo
    return hist


def _step_histogram(spec: ShuffleSpec, j: int) -> dict[int, int]:
    space = 1 << spec.bits
    if spec.algo == "fy-mod":
        return _residue_histogram(j, space)
    if spec.algo in ("fy-float", "fy-muldiv"):
        return _muldiv_histogram(j, space)
    if spec.algo == "naive":
        return _residue_histogram(spec.n, space)
    if spec.algo == "sattolo":
        return _residue_histogram(j - 1, space)
    raise ValueError(f"no tape histogram for {spec.algo}")


def exact_distribution(spec: ShuffleSpec) -> ExactDistribution:
    """The exact output distribution of the shuffle, averaged over all
    equally likely draw tapes (or, for fy-ideal, over its choice tree)."""
    n = spec.n
    probs: dict[Permutation, Fraction] = {}
    x = list(range(n))

    if spec.algo == "fy-ideal":
        if n > 6:
            raise SpaceTooLarge(f"fy-ideal choice tree limited to n<=6, got {n}")
        steps: list[list[tuple[int, Fraction]]] = [
            [(k, Fraction(1, j)) for k in range(j)] for j in range(n, 1, -1)
        ]
    else:
        if (1 << (spec.bits * (n - 1))) > MAX_TAPE_SPACE:
            raise SpaceTooLarge(
                f"2^({spec.bits}*{n - 1}) tapes exceed 2^26"
            )
        space = 1 << spec.bits
        steps = [
            [(k, Fraction(c, space)) for k, c in sorted(_step_histogram(spec, j).items())]
            for j in range(n, 1, -1)
        ]

    paths = math.prod(len(s) for s in steps)
    if paths > MAX_ENUMERATION_PATHS:
        raise SpaceTooLarge(f"{paths} enumeration paths exceed {MAX_ENUMERATION_PATHS}")

    def walk(depth: int, weight: Fraction) -> None:
        if depth == len(steps):
            key = Permutation(tuple(x))
            probs[key] = probs.get(key, Fraction(0)) + weight
            return
        j = n - depth
        for k, pk in steps[depth]:
            x[k], x[j - 1] = x[j - 1], x[k]
            walk(depth + 1, weight * pk)
            x[k], x[j - 1] = x[j - 1], x[k]

    walk(0, Fraction(1))
    return ExactDistribution(n, probs)


# ---------------------------------------------------------------------------
# Order checks
# ---------------------------------------------------------------------------

def check_order_k(dist: Distribution, k: int) -> OrderCheckResult:
    """Does every ordered k-tuple pair with a positive-probability
    condition have conditional probability exactly 1/(N-k+1)?

    The condition for pair (a, b) is the joint event on the first k-1
    coordinates; k=1 conditions on nothing.  Zero-probability conditions
    set the degenerate flag and are excluded from the quantifier.
    """
    n, items = _as_items(dist)
    if not 1 <= k <= n - 1:
        raise ValueError(f"k={k} outside [1, {n - 1}]")
    budget = math.perm(n, k + 1) * math.perm(n, k)
    if budget > MAX_ORDER_CHECK_STEPS:
        raise EnumerationTooLarge(f"order check budget {budget} exceeds 1e8")

    tuples = tuple_space(n, k)
    index = {t: i for i, t in enumerate(tuples)}
    joint: dict[tuple[int, int], Fraction] = {}
    for f, pr in items:
        m = f.mapping
        for ti, t in enumerate(tuples):
            image = tuple(m[a] for a in t)
            key = (ti, index[image])
            joint[key] = joint.get(key, Fraction(0)) + pr

    if k > 1:
        prefixes = tuple_space(n, k - 1)
        pindex = {t: i for i, t in enumerate(prefixes)}
        pjoint: dict[tuple[int, int], Fraction] = {}
        for f, pr in items:
            m = f.mapping
            for ti, t in enumerate(prefixes):
                image = tuple(m[a] for a in t)
                key = (ti, pindex[image])
                pjoint[key] = pjoint.get(key, Fraction(0)) + pr

    target = Fraction(1, n - k + 1)
    zero = Fraction(0)
    holds = True
    degenerate = False
    first_violation: tuple[tuple[int, ...], tuple[int, ...], Fraction] | None = None

    for ai, a in enumerate(tuples):
        for bi, b in enumerate(tuples):
            if k == 1:
                condition = Fraction(1)
            else:
                condition = pjoint.get((pindex[a[:-1]], pindex[b[:-1]]), zero)
            if condition == 0:
                degenerate = True
                continue
            conditional = joint.get((ai, bi), zero) / condition
            if conditional != target and holds:
                holds = False
                first_violation = (a, b, conditional)

    witness = first_violation if (not holds and not degenerate) else None
    return OrderCheckResult(k=k, holds=holds, witness=witness, degenerate=degenerate)


def check_perfect(dist: Distribution) -> bool:
    """True iff the support is all N! permutations with equal probability."""
    n, items = _as_items(dist)
    if n > MAX_FACTORIAL_N:
        raise FactorialTooLarge(f"n={n} needs {n}! enumeration, cap is {MAX_FACTORIAL_N}")
    if len(items) != math.factorial(n):
        return False
    probabilities = {pr for _, pr in items}
    return len(probabilities) == 1


def check_approx_order(dist: Distribution) -> bool:
    """The pairwise relaxation of the top-order criterion (see module doc):
    P(f(a)=c, f(b)=d) = P(f(a)=d, f(b)=c) for all a<b, c<d, with every
    single-point probability P(f(x)=y) positive.

    Pairs whose union event has probability zero fail the check (the
    conditional the definition needs is undefined there).
    """
    n, items = _as_items(dist)
    if n > MAX_FACTORIAL_N:
        raise FactorialTooLarge(f"n={n} needs {n}! enumeration, cap is {MAX_FACTORIAL_N}")

    marginal = [[Fraction(0)] * n for _ in range(n)]
    pair_joint: dict[tuple[int, int, int, int], Fraction] = {}
    for f, pr in items:
        m = f.mapping
        for a in range(n):
            marginal[a][m[a]] += pr
            for b in range(a + 1, n):
                key = (a, b, m[a], m[b])
                pair_joint[key] = pair_joint.get(key, Fraction(0)) + pr

    if any(marginal[x][y] == 0 for x in range(n) for y in range(n)):
        return False

    zero = Fraction(0)
    for a in range(n):
        for b in range(a + 1, n):
            for c in range(n):
                for d in range(c + 1, n):
                    cd = pair_joint.get((a, b, c, d), zero)
                    dc = pair_joint.get((a, b, d, c), zero)
                    if cd + dc == 0:
                        return False
                    if cd != dc:
                        return False
    return True


def brute_force_chi2(samples: PermMultiset) -> TailProbability:
    """Chi-square goodness of fit against uniform over all N! cells."""
    n = samples.n
    if n > MAX_FACTORIAL_N:
        raise FactorialTooLarge(f"n={n} needs {n}! cells, cap is {MAX_FACTORIAL_N}")
    cells = math.factorial(n)
    if samples.total < 5 * cells:
        raise TooFewSamples(
            f"{samples.total} samples < 5*{cells} (need expected count >= 5)"
        )
    expected = Fraction(samples.total, cells)
    q = Fraction(0)
    for count in samples.counts.values():
        q += (count - expected) ** 2 / expected
    q += (cells - len(samples.counts)) * expected  # empty cells: (0-E)^2/E = E
    return TailProbability(chi2_upper_tail(float(q), cells - 1), "chi2-gamma")
