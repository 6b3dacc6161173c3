"""Deterministic bit sources.

Four kinds, selected by name:

* ``lcg-msvc`` — the MSVC-compatible linear congruential generator
  (state <- state*214013 + 2531011 mod 2^32, emitted word =
  (state >> 16) & 0x7FFF, 15 bits per word).  The deliberately weak source.
* ``aes128``  — AES-128 in a chained-state construction: a fixed key,
  state_{i+1} = Encrypt(key, state_i), each new state emitted as a 128-bit
  word.  This is exactly the AES-OFB keystream with IV = seed, which the
  bulk pipeline exploits.
* ``ideal``   — same generator as aes128, but additionally permitted to
  serve rejection-sampled range draws (draw_in_range_ideal).
* ``tape``    — a finite enumeration tape: L draws of b bits each, with
  lexicographic enumeration over all 2^(b*L) assignments.  The substrate
  for exact-distribution oracles.

All kinds feed a big-endian bit queue; draw_bits(b) removes exactly b bits
from the front.  Equal (kind, seed) means an identical stream everywhere.
"""
from __future__ import annotations

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .errors import ForkUnsupported, TapeExhausted

LCG_MULTIPLIER = 214013
LCG_INCREMENT = 2531011
LCG_WORD_BITS = 15

AES_FIXED_KEY = bytes(range(16))

KINDS = ("lcg-msvc", "aes128", "ideal", "tape")


class Tape:
    """All 2^(bit_width*length) draw assignments, enumerated lexicographically.

    The current assignment is a sequence of ``length`` values, each below
    2^bit_width; draws consume it left to right.  advance() steps to the
    next assignment (and rewinds the draw position); it returns False once
    the enumeration wraps, after which the tape is exhausted.
    """

    def __init__(self, bit_width: int, length: int):
        if not 1 <= bit_width <= 32:
            raise ValueError(f"bit width {bit_width} outside [1, 32]")
        if length < 1:
            raise ValueError("tape length must be >= 1")
        self.bit_width = bit_width
        self.length = length
        self.assignment = [0] * length
        self.position = 0
        self.exhausted = False

    @property
    def total_assignments(self) -> int:
        return 1 << (self.bit_width * self.length)

    def next_draw(self) -> int:
        if self.exhausted or self.position >= self.length:
            raise TapeExhausted("no draws left on the current assignment")
        value = self.assignment[self.position]
        self.position += 1
        return value

    def rewind(self) -> None:
        """Restart draws on the current assignment."""
        self.position = 0

    def advance(self) -> bool:
        """Move to the next assignment (lexicographic order); False when done."""
        if self.exhausted:
            return False
        self.position = 0
        limit = 1 << self.bit_width
        for i in range(self.length - 1, -1, -1):
            self.assignment[i] += 1
            if self.assignment[i] < limit:
                return True
            self.assignment[i] = 0
        self.exhausted = True
        return False


class BitSource:
    """A deterministic stream of b-bit unsigned integers.

    Single-owner mutable state: do not share one instance across workers;
    fork() children instead.
    """

    def __init__(self, kind: str, seed: int = 0, *, key: bytes | None = None,
                 tape: Tape | None = None):
        if kind not in KINDS:
            raise ValueError(f"unknown kind {kind!r}")
        if kind == "tape":
            if tape is None:
                raise ValueError("tape kind needs a Tape")
        elif not 0 <= seed < (1 << 128):
            raise ValueError("seed must fit 128 bits")
        self.kind = kind
        self.seed = seed
        self.tape = tape
        self._queue = 0
        self._queued_bits = 0
        if kind == "lcg-msvc":
            self._state = seed & 0xFFFFFFFF
        elif kind in ("aes128", "ideal"):
            self.key = AES_FIXED_KEY if key is None else bytes(key)
            if len(self.key) != 16:
                raise ValueError("AES key must be 16 bytes")
            self._encryptor = Cipher(algorithms.AES(self.key), modes.ECB()).encryptor()
            self._state = seed.to_bytes(16, "big")

    # -- factories ---------------------------------------------------------

    @classmethod
    def lcg_msvc(cls, seed: int) -> "BitSource":
        return cls("lcg-msvc", seed)

    @classmethod
    def aes128(cls, seed: int, key: bytes | None = None) -> "BitSource":
        return cls("aes128", seed, key=key)

    @classmethod
    def ideal(cls, seed: int, key: bytes | None = None) -> "BitSource":
        return cls("ideal", seed, key=key)

    @classmethod
    def from_tape(cls, tape: Tape) -> "BitSource":
        return cls("tape", 0, tape=tape)

    # -- raw words ---------------------------------------------------------

    def _next_word(self) -> tuple[int, int]:
        """(value, width in bits) of the next raw generator word."""
        if self.kind == "lcg-msvc":
            self._state = (self._state * LCG_MULTIPLIER + LCG_INCREMENT) & 0xFFFFFFFF
            return (self._state >> 16) & 0x7FFF, LCG_WORD_BITS
        if self.kind in ("aes128", "ideal"):
            self._state = self._encryptor.update(self._state)
            return int.from_bytes(self._state, "big"), 128
        # tape: one b-bit word per recorded draw
        assert self.tape is not None
        return self.tape.next_draw(), self.tape.bit_width

    # -- public API --------------------------------------------------------

    def draw_bits(self, b: int) -> int:
        """The next b bits of the stream as an unsigned integer < 2^b."""
        if not 1 <= b <= 32:
            raise ValueError(f"bit width {b} outside [1, 32]")
        if self.kind == "tape" and b != self.tape.bit_width:
            raise ValueError(
                f"tape draws are fixed at {self.tape.bit_width} bits, requested {b}"
            )
        while self._queued_bits < b:
            word, width = self._next_word()
            self._queue = (self._queue << width) | word
            self._queued_bits += width
        self._queued_bits -= b
        value = self._queue >> self._queued_bits
        self._queue &= (1 << self._queued_bits) - 1
        return value

    def fork(self, stream_id: int) -> "BitSource":
        """A child source with seed = AES-128-Encrypt(parent seed as key,
        stream-id block); distinct ids give independent streams."""
        if self.kind == "tape":
            raise ForkUnsupported("tapes cannot fork")
        if not 0 <= stream_id < (1 << 128):
            raise ValueError("stream id must fit 128 bits")
        enc = Cipher(
            algorithms.AES(self.seed.to_bytes(16, "big")), modes.ECB()
        ).encryptor()
        child_seed = int.from_bytes(enc.update(stream_id.to_bytes(16, "big")), "big")
        if self.kind == "lcg-msvc":
            return BitSource(self.kind, child_seed)
        return BitSource(self.kind, child_seed, key=self.key)


def draw_in_range_ideal(src: BitSource, j: int) -> int:
    """An unbiased value in [0, j) by rejection sampling on ceil(log2 j)-bit
    draws; requires an ideal-kind source."""
    if src.kind != "ideal":
        raise ValueError("range draws require an ideal-kind source")
    if j < 1:
        raise ValueError("range bound must be >= 1")
    if j == 1:
        return 0
    width = (j - 1).bit_length()
    while True:
        value = src.draw_bits(width)
        if value < j:
            return value


def make_source(kind: str, seed: int, *, bits: int | None = None,
                length: int | None = None) -> BitSource:
    """Construct a source by kind name (the CLI entry point).

    Tape sources need the draw width and tape length instead of a seed.
    """
    if kind == "tape":
        if bits is None or length is None:
            raise ValueError("tape kind needs bits and length")
        return BitSource.from_tape(Tape(bits, length))
    return BitSource(kind, seed)
