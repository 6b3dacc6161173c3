"""Exact rational oracles: output distributions against literal tape
enumeration, order/perfect/approximate checks, and the N!-cell chi-square."""

import math
from fractions import Fraction
from itertools import permutations as itertools_permutations

import pytest

from permaudit.errors import (
    EnumerationTooLarge,
    FactorialTooLarge,
    SpaceTooLarge,
    TooFewSamples,
)
from permaudit.exact import (
    ExactDistribution,
    _muldiv_histogram,
    _residue_histogram,
    brute_force_chi2,
    check_approx_order,
    check_order_k,
    check_perfect,
    exact_distribution,
)
from permaudit.perm import PermMultiset, Permutation, is_cyclic, lift, parity
from permaudit.rng import BitSource, Tape
from permaudit.shuffle import ShuffleSpec, shuffle


def uniform_over(mappings):
    ms = PermMultiset(len(next(iter(mappings))))
    for m in mappings:
        ms.add(Permutation(tuple(m)))
    return ms


def uniform_sn(n):
    return uniform_over(list(itertools_permutations(range(n))))


def alternating(n):
    return uniform_over(
        [m for m in itertools_permutations(range(n))
         if parity(Permutation(m)) == "even"]
    )


def rotations(n):
    return uniform_over(
        [tuple((i + s) % n for i in range(n)) for s in range(n)]
    )


def literal_tape_distribution(spec):
    """The brute-force oracle: run the shuffle on every possible tape."""
    tape = Tape(spec.bits, spec.n - 1)
    src = BitSource.from_tape(tape)
    total = tape.total_assignments
    probs = {}
    while True:
        p = shuffle(spec, src)
        probs[p] = probs.get(p, Fraction(0)) + Fraction(1, total)
        if not tape.advance():
            break
    return probs


# -- per-step histograms -------------------------------------------------------

def test_residue_histogram_closed_form():
    assert _residue_histogram(3, 256) == {0: 86, 1: 85, 2: 85}
    assert _residue_histogram(4, 16) == {0: 4, 1: 4, 2: 4, 3: 4}
    assert _residue_histogram(5, 3) == {0: 1, 1: 1, 2: 1}


def test_muldiv_histogram_closed_form():
    assert _muldiv_histogram(3, 8) == {0: 3, 1: 3, 2: 2}
    assert _muldiv_histogram(4, 16) == {0: 4, 1: 4, 2: 4, 3: 4}


def test_step_histograms_match_literal_counting():
    for modulus in (1, 2, 3, 5, 7):
        for bits in (1, 2, 4, 7):
            space = 1 << bits
            want = {}
            for r in range(space):
                want[r % modulus] = want.get(r % modulus, 0) + 1
            assert _residue_histogram(modulus, space) == want
    for j in (1, 2, 3, 5, 7):
        for bits in (1, 2, 4, 7):
            space = 1 << bits
            want = {}
            for r in range(space):
                k = (r * j) >> bits
                want[k] = want.get(k, 0) + 1
            assert _muldiv_histogram(j, space) == want


# -- exact distributions ---------------------------------------------------------

def test_exact_distribution_fy_ideal_is_uniform():
    for n in (2, 3, 4, 5):
        dist = exact_distribution(ShuffleSpec("fy-ideal", n))
        assert dist.support_size == math.factorial(n)
        assert set(dist.probs.values()) == {Fraction(1, math.factorial(n))}


def test_exact_distribution_sattolo_n3_b1():
    dist = exact_distribution(ShuffleSpec("sattolo", 3, 1))
    assert dist.probs == {
        Permutation((1, 2, 0)): Fraction(1, 2),
        Permutation((2, 0, 1)): Fraction(1, 2),
    }


def test_exact_distribution_naive_n4_b2_nonuniform_full_support():
    dist = exact_distribution(ShuffleSpec("naive", 4, 2))
    assert dist.support_size == 24
    assert all(pr.denominator in (64, 32, 16, 8) for pr in dist.probs.values())
    assert len(set(dist.probs.values())) > 1  # not uniform
    assert min(dist.probs.values()) >= Fraction(1, 64)
    assert max(dist.probs.values()) <= Fraction(5, 64)


def test_exact_distribution_sattolo_n4_supports_only_cycles():
    dist = exact_distribution(ShuffleSpec("sattolo", 4, 8))
    assert dist.support_size == 6
    assert all(is_cyclic(p) for p in dist.probs)


def test_exact_distribution_matches_literal_tape_enumeration():
    cases = [
        ("fy-mod", 3, 2), ("fy-mod", 4, 2), ("fy-mod", 5, 2),
        ("fy-float", 3, 4), ("fy-float", 4, 3),
        ("fy-muldiv", 4, 3), ("fy-muldiv", 3, 6),
        ("naive", 4, 2), ("naive", 3, 3),
        ("sattolo", 3, 3), ("sattolo", 4, 2),
    ]
    for algo, n, bits in cases:
        spec = ShuffleSpec(algo, n, bits)
        fast = exact_distribution(spec)
        slow = literal_tape_distribution(spec)
        assert fast.probs == slow, (algo, n, bits)


def test_exact_distribution_space_bounds():
    with pytest.raises(SpaceTooLarge):
        exact_distribution(ShuffleSpec("fy-mod", 6, 8))  # 2^40 tapes
    with pytest.raises(SpaceTooLarge):
        exact_distribution(ShuffleSpec("fy-ideal", 7))


def test_exact_distribution_probabilities_sum_to_one():
    for algo, n, bits in [("fy-mod", 5, 4), ("fy-muldiv", 6, 4), ("naive", 5, 3)]:
        dist = exact_distribution(ShuffleSpec(algo, n, bits))
        assert sum(dist.probs.values()) == 1
        assert dist.support_size <= math.factorial(n)


def test_exact_distribution_type_rejects_bad_sums():
    with pytest.raises(ValueError):
        ExactDistribution(2, {Permutation((0, 1)): Fraction(1, 2)})


# -- order checks ------------------------------------------------------------------

def test_uniform_sn_holds_every_order():
    for n in (3, 4):
        ms = uniform_sn(n)
        for k in range(1, n):
            res = check_order_k(ms, k)
            assert res.holds and not res.degenerate and res.witness is None


def test_alternating_group_n4_orders():
    a4 = alternating(4)
    assert check_order_k(a4, 1).holds
    assert check_order_k(a4, 2).holds
    res3 = check_order_k(a4, 3)
    assert not res3.holds
    assert not res3.degenerate
    a, b, conditional = res3.witness
    assert len(a) == len(b) == 3
    assert conditional != Fraction(1, 2)


def test_rotation_group_fails_order_2_with_witness():
    z3 = rotations(3)
    assert check_order_k(z3, 1).holds
    res = check_order_k(z3, 2)
    assert not res.holds and not res.degenerate
    a, b, conditional = res.witness
    # A rotation is pinned by one point: conditionals collapse to 0 or 1.
    assert conditional in (Fraction(0), Fraction(1))


def test_single_permutation_is_degenerate_at_k2():
    ms = PermMultiset(3)
    ms.add(Permutation((0, 1, 2)), 5)
    res = check_order_k(ms, 2)
    assert not res.holds
    assert res.degenerate
    assert res.witness is None  # witness only for clean failures


def test_order_check_k_bounds():
    ms = uniform_sn(3)
    with pytest.raises(ValueError):
        check_order_k(ms, 0)
    with pytest.raises(ValueError):
        check_order_k(ms, 3)


def test_order_check_budget():
    ms = PermMultiset(8)
    ms.add(Permutation(tuple(range(8))))
    with pytest.raises(EnumerationTooLarge):
        check_order_k(ms, 5)  # P(8,6)*P(8,5) > 1e8


def test_order_hierarchy_on_small_fixtures():
    fixtures = [uniform_sn(3), uniform_sn(4), alternating(4),
                rotations(4), rotations(5), alternating(5)]
    for ms in fixtures:
        held = None
        for k in range(1, ms.n):
            res = check_order_k(ms, k)
            ok = res.holds and not res.degenerate
            if held is False:
                assert not ok, f"order {k} held after {k-1} failed"
            held = ok


def test_order2_equals_lifted_order1():
    # Order 2 on the base space is order 1 on the ordered-pair lift.
    for ms in (uniform_sn(4), alternating(4), rotations(4), uniform_sn(3)):
        lifted = PermMultiset(ms.n * (ms.n - 1))
        for p, c in ms.counts.items():
            lifted.add(lift(p, 2).as_permutation(), c)
        base = check_order_k(ms, 2)
        top = check_order_k(lifted, 1)
        assert base.holds == top.holds


# -- perfect / approximate ----------------------------------------------------------

def test_check_perfect():
    assert check_perfect(exact_distribution(ShuffleSpec("fy-ideal", 4)))
    assert check_perfect(uniform_sn(4))
    assert not check_perfect(alternating(4))
    assert not check_perfect(exact_distribution(ShuffleSpec("sattolo", 4, 8)))
    # Full support but unequal weights is not perfect either.
    ms = uniform_sn(3)
    ms.add(Permutation((0, 1, 2)))
    assert not check_perfect(ms)


def test_check_perfect_factorial_cap():
    with pytest.raises(FactorialTooLarge):
        check_perfect(PermMultiset.from_perms([Permutation(tuple(range(9)))]))


def test_check_approx_order():
    assert check_approx_order(uniform_sn(4))
    assert check_approx_order(alternating(4))          # the documented gap
    assert not check_perfect(alternating(4))
    assert not check_approx_order(exact_distribution(ShuffleSpec("sattolo", 4, 8)))
    assert not check_approx_order(rotations(4))


def test_top_order_implies_approx_order():
    for ms in (uniform_sn(3), uniform_sn(4), alternating(4), rotations(4)):
        res = check_order_k(ms, ms.n - 1)
        if res.holds and not res.degenerate:
            assert check_approx_order(ms)


def test_theorem_equivalence_top_order_iff_perfect():
    fixtures = [uniform_sn(3), uniform_sn(4), alternating(4), rotations(4),
                exact_distribution(ShuffleSpec("sattolo", 4, 4)),
                exact_distribution(ShuffleSpec("naive", 4, 2)),
                exact_distribution(ShuffleSpec("fy-ideal", 4))]
    for dist in fixtures:
        n = dist.n if isinstance(dist, PermMultiset) else dist.n
        res = check_order_k(dist, n - 1)
        assert (res.holds and not res.degenerate) == check_perfect(dist)


# -- brute-force chi-square -----------------------------------------------------------

def test_brute_uniform_counts_give_tail_one():
    ms = PermMultiset(3)
    for m in itertools_permutations(range(3)):
        ms.add(Permutation(m), 10)
    tail = brute_force_chi2(ms)
    assert float(tail) == 1.0


def test_brute_all_mass_on_one_cell():
    ms = PermMultiset(3)
    ms.add(Permutation((0, 1, 2)), 600)
    tail = brute_force_chi2(ms)
    # Q = (600-100)^2/100 + 5*(0-100)^2/100 = 3000 on 5 dof.
    assert float(tail) < 1e-5


def test_brute_minimum_sample_floor():
    ms = PermMultiset(3)
    ms.add(Permutation((0, 1, 2)), 29)
    with pytest.raises(TooFewSamples):
        brute_force_chi2(ms)
    ms.add(Permutation((0, 1, 2)), 1)
    brute_force_chi2(ms)  # exactly 5 * 3! is allowed


def test_brute_factorial_cap():
    ms = PermMultiset(9)
    ms.add(Permutation(tuple(range(9))), 5 * math.factorial(9))
    with pytest.raises(FactorialTooLarge):
        brute_force_chi2(ms)
