"""Streaming pairwise-case estimator.

For a permutation stream over Z_N, every unordered input pair {a, b} (a<b)
and unordered output pair {c, d} (c<d) forms a *case*.  A permutation f is
a trial for case ((a,b),(c,d)) when {f(a), f(b)} = {c, d}, and a success
when f(a) = c — i.e. the smaller input position took the smaller output
value.  Under a uniform permutation distribution each case's success count
is Binomial(n_trials, 1/2); the reports quantify deviation from that null:

* ratio report — for each confidence level alpha, the number of cases
  whose two-sided normal tail is significant at alpha (ON), against the
  expectation EN = 2(1-alpha) * (usable case count), as log2(ON/EN);
* chi-square report — Q = sum of z^2 over usable cases, dof = their count,
  upper-tail probability.

Case tables are dense arrays over all C = (N(N-1)/2)^2 flat case indices
(input-pair index * P + output-pair index, pairs in lexicographic order).
C is about 2 MB of counters at N=32; the dense layout is what makes the
accumulation kernels cache-friendly.  N is capped at 64 here (C would be
~66M cases at N=128, which this layout does not target).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.special import ndtr

from .errors import (
    BelowMinimumTrials,
    DimensionMismatch,
    NoUsableCases,
    SubsetTooSmall,
)
from .perm import Permutation
from .rng import BitSource, draw_in_range_ideal
from .stats import TailProbability, chi2_upper_tail, format_probability, normal_cdf

#: Default minimum trials for the normal approximation.
DEFAULT_N_MIN = 30

#: Chi-square tail probability below which a run is flagged as biased.
VERDICT_THRESHOLD = 0.05

#: The 16 standard confidence levels (0.55 ... 1-1e-11).
DEFAULT_ALPHAS: tuple[float, ...] = (
    0.55, 0.60, 0.70, 0.80, 0.90, 0.95, 0.99,
    1 - 1e-3, 1 - 1e-4, 1 - 1e-5, 1 - 1e-6, 1 - 1e-7,
    1 - 1e-8, 1 - 1e-9, 1 - 1e-10, 1 - 1e-11,
)

MAX_ESTIMATOR_N = 64

#: Streams longer than this could overflow the 32-bit per-case counters.
MAX_STREAM = 1 << 31


class CaseKey(NamedTuple):
    """Input pair (a<b) and output pair (c<d); all in [0, n)."""

    a: int
    b: int
    c: int
    d: int


class CaseCounters(NamedTuple):
    """Trials and successes of one case."""

    n: int
    x: int


def pair_count(n: int) -> int:
    return n * (n - 1) // 2


def total_cases(n: int) -> int:
    """C = N^2 (N-1)^2 / 4: all (input pair, output pair) combinations."""
    return pair_count(n) ** 2


def pair_list(n: int) -> list[tuple[int, int]]:
    """All a<b pairs in lexicographic order; index i is the pair number."""
    return [(a, b) for a in range(n) for b in range(a + 1, n)]


def pair_index_table(n: int) -> np.ndarray:
    """(n, n) symmetric lookup from {a, b} to its pair number."""
    table = np.zeros((n, n), dtype=np.int32)
    for i, (a, b) in enumerate(pair_list(n)):
        table[a, b] = i
        table[b, a] = i
    return table


def case_index(n: int, key: CaseKey) -> int:
    """Flat index of a case: input-pair number * P + output-pair number."""
    pairs = pair_index_table(n)
    return int(pairs[key.a, key.b]) * pair_count(n) + int(pairs[key.c, key.d])


def case_key_of(n: int, flat: int) -> CaseKey:
    pairs = pair_list(n)
    p = pair_count(n)
    a, b = pairs[flat // p]
    c, d = pairs[flat % p]
    return CaseKey(a, b, c, d)


class CaseTable:
    """Dense (trials, successes) counters for every case, with an optional
    tracked subset used by reduced runs.

    Counters are unsigned 64-bit here (merge target); per-shard kernel
    tables are 32-bit and stream lengths are capped so they cannot wrap.
    """

    def __init__(self, n: int, tracked: np.ndarray | None = None):
        if not 2 <= n <= MAX_ESTIMATOR_N:
            raise ValueError(f"n={n} outside [2, {MAX_ESTIMATOR_N}]")
        self.n = n
        self.pairs = pair_list(n)
        self.pair_table = pair_index_table(n)
        c = total_cases(n)
        self.n_arr = np.zeros(c, dtype=np.uint64)
        self.x_arr = np.zeros(c, dtype=np.uint64)
        if tracked is not None:
            tracked = np.asarray(tracked, dtype=np.int64)
            if tracked.size and (tracked.min() < 0 or tracked.max() >= c):
                raise ValueError("tracked indices out of range")
            tracked = np.unique(tracked)
        self.tracked = tracked

    @property
    def total(self) -> int:
        return self.n_arr.shape[0]

    @property
    def tracked_indices(self) -> np.ndarray:
        if self.tracked is None:
            return np.arange(self.total, dtype=np.int64)
        return self.tracked

    def counters(self, key: CaseKey) -> CaseCounters:
        flat = int(self.pair_table[key.a, key.b]) * pair_count(self.n) + int(
            self.pair_table[key.c, key.d]
        )
        return CaseCounters(int(self.n_arr[flat]), int(self.x_arr[flat]))

    def accumulate(self, p: Permutation | Sequence[int]) -> None:
        """Scalar per-permutation update: one trial per input pair."""
        mapping = p.mapping if isinstance(p, Permutation) else tuple(p)
        if len(mapping) != self.n:
            raise DimensionMismatch(
                f"permutation size {len(mapping)} vs table size {self.n}"
            )
        pt = self.pair_table
        p_count = pair_count(self.n)
        for i, (a, b) in enumerate(self.pairs):
            fa, fb = mapping[a], mapping[b]
            flat = i * p_count + int(pt[fa, fb])
            self.n_arr[flat] += 1
            if fa < fb:
                self.x_arr[flat] += 1

    def merge_ordered_counts(self, ordered: np.ndarray) -> None:
        """Fold a kernel block table cnt[pair, fa, fb] into (n, x).

        For an output pair c<d of input pair number i, the trials are
        cnt[i, c, d] + cnt[i, d, c] and the successes are cnt[i, c, d].
        """
        n = self.n
        cnt = ordered.reshape(pair_count(n), n, n).astype(np.uint64)
        # triu_indices enumerates c<d pairs in the same lexicographic order
        # as pair_list, so column k below is output-pair number k.
        cu, du = np.triu_indices(n, k=1)
        cd = cnt[:, cu, du]
        dc = cnt[:, du, cu]
        self.x_arr += cd.reshape(-1)
        self.n_arr += (cd + dc).reshape(-1)

    def merge(self, other: "CaseTable") -> None:
        if other.n != self.n:
            raise DimensionMismatch("table sizes differ")
        self.n_arr += other.n_arr
        self.x_arr += other.x_arr

    def grand_total_trials(self) -> int:
        return int(self.n_arr.sum())


def accumulate(table: CaseTable, p: Permutation) -> CaseTable:
    """Functional-style alias for CaseTable.accumulate."""
    table.accumulate(p)
    return table


def case_tail_probability(c: CaseCounters, n_min: int = DEFAULT_N_MIN) -> float:
    """Phi((x - n/2) / sqrt(n/4)): the normal approximation to the
    Binomial(n, 1/2) lower tail, no continuity correction."""
    if c.n < n_min:
        raise BelowMinimumTrials(f"{c.n} trials < minimum {n_min}")
    z = (c.x - c.n / 2.0) / ((c.n / 4.0) ** 0.5)
    return normal_cdf(z)


class RatioRow(NamedTuple):
    index: int          # 1-based level index
    alpha: float
    expected: float     # EN = 2 (1-alpha) * usable cases
    observed: int       # ON = significant cases at this level
    log2_ratio: float | None  # None encodes the -inf sentinel (ON = 0)


def _validate_thresholds(alphas: Sequence[float]) -> tuple[float, ...]:
    alphas = tuple(float(a) for a in alphas)
    if not alphas:
        raise ValueError("no thresholds")
    if any(not 0.5 < a < 1.0 for a in alphas):
        raise ValueError("thresholds must lie strictly inside (0.5, 1)")
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("thresholds must be strictly increasing")
    return alphas


def _usable(table: CaseTable, n_min: int) -> tuple[np.ndarray, np.ndarray, int]:
    idx = table.tracked_indices
    nn = table.n_arr[idx].astype(np.float64)
    xx = table.x_arr[idx].astype(np.float64)
    mask = nn >= n_min
    return nn[mask], xx[mask], int(idx.size - mask.sum())


def ratio_report(
    table: CaseTable,
    thresholds: Sequence[float] = DEFAULT_ALPHAS,
    n_min: int = DEFAULT_N_MIN,
) -> list[RatioRow]:
    """Observed-vs-expected significant-case counts at each level.

    A case is significant at alpha when its two-sided deviation is, i.e.
    its lower tail is > alpha or < 1-alpha; computed as
    min(Phi(z), Phi(-z)) < 1-alpha so precision survives alpha near 1.
    """
    alphas = _validate_thresholds(thresholds)
    nn, xx, _ = _usable(table, n_min)
    usable = nn.size
    z = np.abs(2.0 * xx - nn) / np.sqrt(nn) if usable else np.empty(0)
    small_tail = ndtr(-z)  # = min(Phi(z), Phi(-z)) since z >= 0
    rows = []
    for i, alpha in enumerate(alphas, start=1):
        observed = int((small_tail < (1.0 - alpha)).sum())
        expected = 2.0 * (1.0 - alpha) * usable
        ratio = float(np.log2(observed / expected)) if observed else None
        rows.append(RatioRow(i, alpha, expected, observed, ratio))
    return rows


def chi2_report(
    table: CaseTable, n_min: int = DEFAULT_N_MIN
) -> tuple[float, int, TailProbability]:
    """(Q, dof, upper-tail probability) over usable cases."""
    nn, xx, _ = _usable(table, n_min)
    if nn.size == 0:
        raise NoUsableCases(f"no case reached {n_min} trials")
    z2 = (2.0 * xx - nn) ** 2 / nn
    q = float(z2.sum())
    dof = int(nn.size)
    return q, dof, TailProbability(chi2_upper_tail(q, dof), "chi2-gamma")


def reduce_cases(
    keys: Sequence[CaseKey] | int, factor: int, seed: int
) -> list[CaseKey]:
    """A deterministic pseudo-random subset of ceil(C/factor) cases.

    Selection is a partial Fisher-Yates over the key list driven by
    rejection-sampled draws from an aes-backed source seeded with `seed`,
    then sorted back to canonical order.  factor must be a power of two;
    factor 1 returns every key.
    """
    if isinstance(keys, int):
        n = keys
        key_list = [case_key_of(n, i) for i in range(total_cases(n))]
    else:
        key_list = list(keys)
    if factor < 1 or factor & (factor - 1):
        raise ValueError(f"factor must be a power of two, got {factor}")
    if factor == 1:
        return key_list
    c = len(key_list)
    m = -(-c // factor)  # ceil
    if m < 100:
        raise SubsetTooSmall(f"{m} cases after /{factor} reduction; minimum is 100")
    src = BitSource.ideal(seed)
    order = list(range(c))
    for i in range(m):
        j = i + draw_in_range_ideal(src, c - i)
        order[i], order[j] = order[j], order[i]
    return [key_list[i] for i in sorted(order[:m])]


@dataclass
class EstimatorReport:
    """Everything one estimation run reports.

    Generator provenance (algo/bits/rng/seed) is optional: a run that
    analyzed an anonymous permutation file doesn't know it, and reports
    must match byte-for-byte between fused and file-fed runs of the same
    stream, so provenance lives in a separate optional block.
    """

    n: int
    count: int
    reduce_factor: int
    total_cases: int
    tracked_cases: int
    used_cases: int
    skipped_cases: int
    n_min: int
    rows: list[RatioRow]
    q: float
    dof: int
    tail: TailProbability
    generator: dict[str, object] | None = field(default=None)

    @property
    def biased(self) -> bool:
        return self.tail < VERDICT_THRESHOLD

    @property
    def verdict(self) -> str:
        return "biased" if self.biased else "uniform"

    # -- rendering -----------------------------------------------------

    @staticmethod
    def _alpha_label(alpha: float) -> str:
        return f"{alpha:.11f}".rstrip("0")

    def to_csv(self) -> str:
        lines = ["alpha_index,alpha,EN,ON,log2_ratio"]
        for row in self.rows:
            ratio = "-inf" if row.log2_ratio is None else f"{row.log2_ratio:.4g}"
            lines.append(
                f"{row.index},{self._alpha_label(row.alpha)},"
                f"{row.expected:.6g},{row.observed},{ratio}"
            )
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict[str, object]:
        payload: dict[str, object] = {
            "n": self.n,
            "count": self.count,
            "reduce_factor": self.reduce_factor,
            "total_cases": self.total_cases,
            "tracked_cases": self.tracked_cases,
            "used_cases": self.used_cases,
            "skipped_cases": self.skipped_cases,
            "n_min": self.n_min,
            "levels": [
                {
                    "alpha_index": row.index,
                    "alpha": self._alpha_label(row.alpha),
                    "EN": f"{row.expected:.6g}",
                    "ON": row.observed,
                    "log2_ratio": (
                        "-inf" if row.log2_ratio is None else f"{row.log2_ratio:.4g}"
                    ),
                }
                for row in self.rows
            ],
            "chi_square": {
                "Q": f"{self.q:.6g}",
                "dof": self.dof,
                "tail_probability": format_probability(self.tail),
            },
            "verdict": self.verdict,
        }
        if self.generator is not None:
            payload["generator"] = self.generator
        return payload

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"


def build_report(
    table: CaseTable,
    count: int,
    reduce_factor: int = 1,
    thresholds: Sequence[float] = DEFAULT_ALPHAS,
    n_min: int = DEFAULT_N_MIN,
    generator: dict[str, object] | None = None,
) -> EstimatorReport:
    """Assemble the full report from a merged case table."""
    rows = ratio_report(table, thresholds, n_min)
    q, dof, tail = chi2_report(table, n_min)
    _, _, skipped = _usable(table, n_min)
    return EstimatorReport(
        n=table.n,
        count=count,
        reduce_factor=reduce_factor,
        total_cases=table.total,
        tracked_cases=int(table.tracked_indices.size),
        used_cases=dof,
        skipped_cases=skipped,
        n_min=n_min,
        rows=rows,
        q=q,
        dof=dof,
        tail=tail,
        generator=generator,
    )
