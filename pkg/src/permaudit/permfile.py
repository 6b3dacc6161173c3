"""The on-disk permutation stream format and the shipped fixture sets.

Layout: magic ``PRMV`` | version byte (=1) | n (1 byte) | 2 reserved zero
bytes | record count as 8-byte little-endian | count*n payload bytes, each
record one permutation as n index bytes.  File length is exactly
16 + count*n.
"""
from __future__ import annotations

import struct
from importlib import resources
from typing import BinaryIO, Iterable, Iterator

import numpy as np

from .perm import MAX_N, MIN_N, PermMultiset, Permutation, validate

MAGIC = b"PRMV"
VERSION = 1
HEADER = struct.Struct("<4sBBxxQ")  # magic, version, n, reserved, count
HEADER_SIZE = 16

DEFAULT_BLOCK = 65536


def pack_header(n: int, count: int) -> bytes:
    if not MIN_N <= n <= MAX_N:
        raise ValueError(f"n={n} outside [{MIN_N}, {MAX_N}]")
    if count < 0:
        raise ValueError("negative count")
    return HEADER.pack(MAGIC, VERSION, n, count)


def unpack_header(raw: bytes) -> tuple[int, int]:
    if len(raw) != HEADER_SIZE:
        raise ValueError("truncated header")
    magic, version, n, count = HEADER.unpack(raw)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"unsupported version {version}")
    if not MIN_N <= n <= MAX_N:
        raise ValueError(f"header n={n} outside [{MIN_N}, {MAX_N}]")
    return n, count


class PermFileWriter:
    """Streaming writer; the caller must deliver exactly `count` records."""

    def __init__(self, fp: BinaryIO, n: int, count: int):
        self.fp = fp
        self.n = n
        self.count = count
        self.written = 0
        fp.write(pack_header(n, count))

    def write_block(self, block: np.ndarray) -> None:
        block = np.ascontiguousarray(block, dtype=np.uint8)
        records = block.size // self.n
        if block.size % self.n:
            raise ValueError("block size not a multiple of n")
        if self.written + records > self.count:
            raise ValueError("more records than the header promised")
        self.fp.write(block.tobytes())
        self.written += records

    def close(self) -> None:
        if self.written != self.count:
            raise ValueError(
                f"wrote {self.written} records, header promised {self.count}"
            )


def write_perm_file(fp: BinaryIO, perms: Iterable[Permutation]) -> int:
    """Write a fully materialized permutation list; returns the count."""
    perms = list(perms)
    if not perms:
        raise ValueError("nothing to write")
    writer = PermFileWriter(fp, perms[0].n, len(perms))
    block = np.array([p.mapping for p in perms], dtype=np.uint8)
    writer.write_block(block)
    writer.close()
    return len(perms)


class PermFileReader:
    """Streaming reader with per-block bijection validation."""

    def __init__(self, fp: BinaryIO, validate_records: bool = True):
        self.fp = fp
        self.n, self.count = unpack_header(fp.read(HEADER_SIZE))
        self.validate_records = validate_records

    def blocks(self, block_records: int = DEFAULT_BLOCK) -> Iterator[np.ndarray]:
        """Yield (records, n)-shaped uint8 arrays."""
        remaining = self.count
        ref = np.arange(self.n, dtype=np.uint8)
        while remaining:
            take = min(block_records, remaining)
            raw = self.fp.read(take * self.n)
            if len(raw) != take * self.n:
                raise ValueError("file shorter than its header promises")
            block = np.frombuffer(raw, dtype=np.uint8).reshape(take, self.n)
            if self.validate_records:
                if not (np.sort(block, axis=1) == ref).all():
                    bad = int(
                        np.nonzero(~(np.sort(block, axis=1) == ref).all(axis=1))[0][0]
                    )
                    raise ValueError(
                        f"record {self.count - remaining + bad} is not a permutation"
                    )
            yield block
            remaining -= take

    def permutations(self) -> Iterator[Permutation]:
        for block in self.blocks():
            for row in block:
                yield validate(row.tolist())


def read_multiset(fp: BinaryIO) -> PermMultiset:
    """Load a whole file into a multiset (fixture-scale inputs)."""
    reader = PermFileReader(fp)
    ms = PermMultiset(reader.n)
    for p in reader.permutations():
        ms.add(p)
    return ms


# -- shipped fixtures -------------------------------------------------------

FIXTURE_NAMES = ("alternating_n4", "second_order_n5")


def fixture_path(name: str):
    if name not in FIXTURE_NAMES:
        raise KeyError(f"unknown fixture {name!r}; have {FIXTURE_NAMES}")
    return resources.files("permaudit").joinpath(f"fixtures/{name}.prmv")


def load_fixture(name: str) -> PermMultiset:
    with fixture_path(name).open("rb") as fp:
        return read_multiset(fp)
