"""Numerical primitives: normal CDF, chi-square upper tail, exact binomial
tail, and the probability formatting rule shared by all reports."""
from __future__ import annotations

import math

from scipy.special import gammaincc

#: Probabilities below this are rendered as a sentinel so "< 1e-5"-style
#: verdict bands never collapse to a printed 0.
TINY_PROBABILITY = 1e-300


class TailProbability(float):
    """A float in [0, 1] tagged with the method that produced it."""

    method: str

    def __new__(cls, value: float, method: str) -> "TailProbability":
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"probability {value} outside [0, 1]")
        obj = super().__new__(cls, value)
        obj.method = method
        return obj


def normal_cdf(z: float) -> float:
    """Phi(z), the standard normal lower tail, via the complementary error
    function (absolute error well under 1e-10 for |z| <= 8)."""
    if not math.isfinite(z):
        raise ValueError("z must be finite")
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def chi2_upper_tail(q: float, dof: int) -> float:
    """P(Chi2_dof >= q) through the regularized upper incomplete gamma
    function; stable from dof = 1 up to 1e7."""
    if q < 0:
        raise ValueError("statistic must be >= 0")
    if dof < 1:
        raise ValueError("dof must be >= 1")
    return float(gammaincc(dof / 2.0, q / 2.0))


def exact_binomial_tail(x: int, n: int) -> float:
    """Exact P(X <= x) for X ~ Binomial(n, 1/2), n <= 1e4, by summed
    log-binomial coefficients."""
    if n < 1 or n > 10_000:
        raise ValueError("n outside [1, 1e4]")
    if x < 0:
        return 0.0
    if x >= n:
        return 1.0
    log_half_n = -n * math.log(2.0)
    logs = [
        math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1) + log_half_n
        for i in range(x + 1)
    ]
    peak = max(logs)
    total = math.fsum(math.exp(v - peak) for v in logs)
    return math.exp(peak) * total


def format_probability(p: float) -> str:
    """Six significant digits, or the '<1e-300' sentinel below range."""
    if p < TINY_PROBABILITY:
        return "<1e-300"
    return f"{p:.6g}"
