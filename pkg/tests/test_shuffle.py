"""Shuffle algorithms: branch semantics against hand-computed draws, draw
accounting, output validity, and the cyclic-output structure."""

import pytest

from permaudit.errors import IncompatibleSource
from permaudit.perm import is_cyclic, validate
from permaudit.rng import BitSource, Tape
from permaudit.shuffle import ALGORITHMS, ShuffleSpec, generate_stream, shuffle


def tape_source(bits, draws):
    tape = Tape(bits, len(draws))
    tape.assignment = list(draws)
    return BitSource.from_tape(tape)


# -- spec validation -----------------------------------------------------------

def test_spec_validation():
    with pytest.raises(ValueError):
        ShuffleSpec("quicksort", 8, 8)
    with pytest.raises(ValueError):
        ShuffleSpec("fy-mod", 1, 8)
    with pytest.raises(ValueError):
        ShuffleSpec("fy-mod", 256, 8)
    with pytest.raises(ValueError):
        ShuffleSpec("fy-mod", 8, 0)
    with pytest.raises(ValueError):
        ShuffleSpec("fy-mod", 8, 33)


def test_spec_fields_and_derived_values():
    spec = ShuffleSpec("fy-muldiv", 32, 16)
    assert spec.rfn == 65536
    assert spec.draws_per_shuffle == 31


def test_fy_ideal_ignores_bits():
    spec = ShuffleSpec("fy-ideal", 8, 13)
    assert spec.bits == 0


# -- branch semantics against hand-worked draws ---------------------------------

def test_swap_index_branches_n4_b2():
    # Tape draws (1, 2, 1) consumed at j = 4, 3, 2; swaps hit x[k], x[j-1].
    expected = {
        "fy-mod": (0, 3, 2, 1),     # k = 1, 2, 1  (mod j)
        "fy-float": (2, 0, 3, 1),   # k = floor(j*r/4) = 1, 1, 0
        "fy-muldiv": (2, 0, 3, 1),  # k = (r*j) >> 2 = 1, 1, 0
        "naive": (0, 3, 2, 1),      # k = r mod 4  = 1, 2, 1
        "sattolo": (3, 2, 0, 1),    # k = r mod (j-1) = 1, 0, 0
    }
    for algo, want in expected.items():
        got = shuffle(ShuffleSpec(algo, 4, 2), tape_source(2, [1, 2, 1]))
        assert got.mapping == want, algo


def test_zero_draws_turn_sattolo_into_a_rotation():
    # All-zero draws: each step swaps x[0] with x[j-1], composing to the
    # cyclic left rotation.
    got = shuffle(ShuffleSpec("sattolo", 4, 2), tape_source(2, [0, 0, 0]))
    assert got.mapping == (1, 2, 3, 0)
    assert is_cyclic(got)


def test_fy_ideal_n2_maps_single_bit_to_swap():
    # j=2 draws one bit, never rejects: bit 0 swaps, bit 1 holds.
    bits_src = BitSource.ideal(77)
    raw = [bits_src.draw_bits(1) for _ in range(100)]

    spec = ShuffleSpec("fy-ideal", 2)
    src = BitSource.ideal(77)
    perms = [shuffle(spec, src) for _ in range(100)]
    for bit, perm in zip(raw, perms):
        assert perm.mapping == ((0, 1) if bit else (1, 0))
    seen = {p.mapping for p in perms}
    assert seen == {(0, 1), (1, 0)}


# -- draw accounting -------------------------------------------------------------

def test_non_ideal_algorithms_consume_exactly_n_minus_1_draws():
    for algo in ("fy-mod", "fy-float", "fy-muldiv", "naive", "sattolo"):
        spec = ShuffleSpec(algo, 7, 5)
        src = BitSource.aes128(3)
        probe = BitSource.aes128(3)
        shuffle(spec, src)
        for _ in range(spec.draws_per_shuffle):
            probe.draw_bits(5)
        # Both sources must now be in identical positions.
        assert src.draw_bits(32) == probe.draw_bits(32)


def test_generate_stream_is_sequential_shuffling():
    spec = ShuffleSpec("fy-mod", 6, 8)
    src_a = BitSource.aes128(11)
    src_b = BitSource.aes128(11)
    stream = list(generate_stream(spec, src_a, 50))
    singles = [shuffle(spec, src_b) for _ in range(50)]
    assert stream == singles


def test_generate_stream_count_validation():
    spec = ShuffleSpec("fy-mod", 6, 8)
    with pytest.raises(ValueError):
        generate_stream(spec, BitSource.aes128(0), 0)


# -- output validity --------------------------------------------------------------

def test_all_algorithms_emit_valid_permutations():
    for algo in ALGORITHMS:
        for n in (2, 3, 5, 16, 33):
            if algo == "fy-ideal":
                spec = ShuffleSpec(algo, n)
                src = BitSource.ideal(5)
            else:
                spec = ShuffleSpec(algo, n, 9)
                src = BitSource.aes128(5)
            for _ in range(40):
                p = shuffle(spec, src)
                validate(p.mapping)
                assert p.n == n


def test_sattolo_outputs_are_full_cycles():
    for n in (3, 4, 8, 32, 64):
        spec = ShuffleSpec("sattolo", n, 10)
        src = BitSource.aes128(n)
        for _ in range(400 // n + 20):
            assert is_cyclic(shuffle(spec, src))


def test_fy_float_equals_fy_muldiv_streams():
    # Two spellings of floor(r * j / 2^b); kept as separate code paths and
    # pinned equal here.
    for n, bits in [(2, 1), (5, 3), (8, 8), (16, 12), (32, 16), (13, 32)]:
        fl = generate_stream(ShuffleSpec("fy-float", n, bits), BitSource.aes128(8), 64)
        md = generate_stream(ShuffleSpec("fy-muldiv", n, bits), BitSource.aes128(8), 64)
        assert list(fl) == list(md)


def test_fy_ideal_small_n_covers_whole_group():
    spec = ShuffleSpec("fy-ideal", 3)
    src = BitSource.ideal(0)
    seen = {shuffle(spec, src).mapping for _ in range(500)}
    assert len(seen) == 6


# -- source compatibility ----------------------------------------------------------

def test_fy_ideal_requires_ideal_source():
    spec = ShuffleSpec("fy-ideal", 4)
    with pytest.raises(IncompatibleSource):
        shuffle(spec, BitSource.aes128(0))
    with pytest.raises(IncompatibleSource):
        shuffle(spec, BitSource.lcg_msvc(0))


def test_tape_width_must_match_spec_bits():
    spec = ShuffleSpec("fy-mod", 4, 3)
    with pytest.raises(IncompatibleSource):
        shuffle(spec, tape_source(2, [0, 0, 0]))
    # Matching width works.
    p = shuffle(spec, tape_source(3, [0, 0, 0]))
    validate(p.mapping)


def test_ideal_source_may_drive_non_ideal_algorithms():
    # An ideal-kind source is a superset: raw draws work the same way.
    a = shuffle(ShuffleSpec("fy-mod", 6, 8), BitSource.ideal(4))
    b = shuffle(ShuffleSpec("fy-mod", 6, 8), BitSource.aes128(4))
    assert a == b
