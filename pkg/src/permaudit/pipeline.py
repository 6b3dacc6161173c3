"""Bulk generation and estimation: sharded, deterministic, parallel.

The permutation stream for (spec, root seed) is defined in fixed shards of
65536 permutations; shard s is produced by the child source fork(root, s).
That makes the stream independent of the worker count: reports are
byte-identical for 1 or 8 threads, and a stream written to a file and
re-analyzed equals the fused run.  Changing SHARD_SIZE would change every
stream, so it is part of the output contract.

Workers hold private 32-bit ordered-outcome tables (one per in-flight
shard, ~2 MB at N=32) merged into 64-bit master counters by commutative
integer sums; merge order cannot affect results.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import BinaryIO, Sequence

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms

try:  # OFB moved in cryptography 49
    from cryptography.hazmat.decrepit.ciphers.modes import OFB
except ImportError:  # pragma: no cover - older cryptography
    from cryptography.hazmat.primitives.ciphers.modes import OFB

from . import _kernels
from .errors import FactorialTooLarge
from .estimator import (
    DEFAULT_ALPHAS,
    DEFAULT_N_MIN,
    MAX_STREAM,
    CaseTable,
    EstimatorReport,
    build_report,
    case_index,
    pair_list,
    reduce_cases,
)
from .exact import MAX_FACTORIAL_N, brute_force_chi2
from .perm import PermMultiset, Permutation
from .permfile import PermFileReader, PermFileWriter
from .rng import BitSource
from .shuffle import ShuffleSpec, _check_compatible, shuffle
from .stats import TailProbability

SHARD_SIZE = 65536

#: Sub-block for the case-accumulation kernel (see _kernels docstring).
ACCUM_CHUNK = 8192


def _shards(count: int) -> list[tuple[int, int]]:
    """(stream id, record count) for each shard of a count-long stream."""
    out = []
    sid = 0
    while count > 0:
        take = min(SHARD_SIZE, count)
        out.append((sid, take))
        sid += 1
        count -= take
    return out


def _ofb_keystream(source: BitSource, nbytes: int) -> np.ndarray:
    """The source's raw AES stream as bytes: OFB(fixed key, IV=seed) on a
    zero plaintext equals the chained-state generator block for block."""
    enc = Cipher(
        algorithms.AES(source.key), OFB(source.seed.to_bytes(16, "big"))
    ).encryptor()
    return np.frombuffer(enc.update(bytes(nbytes)), dtype=np.uint8)


def _fill_shard(spec: ShuffleSpec, child: BitSource, count: int) -> np.ndarray:
    """Generate `count` permutations from the child source as a flat uint8
    array, via the block kernels."""
    n = spec.n
    out = np.empty(count * n, dtype=np.uint8)

    if spec.algo == "fy-ideal":
        widths = np.zeros(n + 1, dtype=np.uint8)
        for j in range(2, n + 1):
            widths[j] = (j - 1).bit_length()
        per_perm_bits = int(widths[2 : n + 1].sum())
        nbytes = (count * per_perm_bits * 2) // 8 + 4096
        while True:
            stream = _ofb_keystream(child, nbytes)
            done, _ = _kernels.fill_perms_ideal(stream, n, count, widths, out)
            if done == count:
                return out
            nbytes *= 2  # prefix-extension: the longer stream replays the same draws

    total_bits = count * (n - 1) * spec.bits
    if child.kind == "lcg-msvc":
        nwords = total_bits // 15 + 2
        words = np.empty(nwords, dtype=np.uint16)
        _kernels.lcg_words(np.uint64(child.seed & 0xFFFFFFFF), words)
        word_bits = 15
    else:  # aes128 / ideal driving a non-ideal algorithm
        words = _ofb_keystream(child, total_bits // 8 + 16)
        word_bits = 8
    _kernels.fill_perms(
        words, word_bits, spec.bits, n, count, _kernels.ALGO_IDS[spec.algo], out
    )
    return out


def _accumulate_perms(cnt: np.ndarray, perms: np.ndarray, count: int, n: int,
                      pair_a: np.ndarray, pair_b: np.ndarray) -> None:
    offset = 0
    while offset < count:
        take = min(ACCUM_CHUNK, count - offset)
        _kernels.accumulate_block(
            perms[offset * n : (offset + take) * n], take, n, pair_a, pair_b, cnt
        )
        offset += take


def _pair_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    pairs = pair_list(n)
    return (
        np.array([a for a, _ in pairs], dtype=np.int64),
        np.array([b for _, b in pairs], dtype=np.int64),
    )


def _generator_block(spec: ShuffleSpec, src: BitSource,
                     count: int) -> dict[str, object]:
    return {
        "algo": spec.algo,
        "n": spec.n,
        "bits": spec.bits,
        "rng": src.kind,
        "seed": f"{src.seed:032x}",
        "count": count,
    }


def _check_stream_args(spec: ShuffleSpec, src: BitSource, count: int,
                       threads: int) -> None:
    _check_compatible(spec, src)
    if not 1 <= count <= MAX_STREAM:
        raise ValueError(f"count {count} outside [1, {MAX_STREAM}]")
    if threads < 1:
        raise ValueError("threads must be >= 1")


def _tracked_indices(n: int, reduce_factor: int, seed: int) -> np.ndarray | None:
    if reduce_factor == 1:
        return None
    keys = reduce_cases(n, reduce_factor, seed)
    return np.array([case_index(n, k) for k in keys], dtype=np.int64)


def _tape_stream(spec: ShuffleSpec, src: BitSource, count: int):
    """One permutation per tape assignment, in enumeration order.

    Unlike generate_stream (raw sequential draws), the bulk pipelines treat
    a tape as the enumeration itself: each permutation consumes one
    assignment, then the tape advances.  Raises TapeExhausted when count
    exceeds the assignment space.
    """
    for _ in range(count):
        p = shuffle(spec, src)
        yield p
        src.tape.advance()


def run_pipeline(
    spec: ShuffleSpec,
    src: BitSource,
    count: int,
    thresholds: Sequence[float] = DEFAULT_ALPHAS,
    reduce_factor: int = 1,
    *,
    threads: int = 1,
    n_min: int = DEFAULT_N_MIN,
    reduce_seed: int | None = None,
) -> EstimatorReport:
    """Fused generate + count + report, never storing the stream."""
    _check_stream_args(spec, src, count, threads)
    n = spec.n
    tracked = _tracked_indices(
        n, reduce_factor, src.seed if reduce_seed is None else reduce_seed
    )
    table = CaseTable(n, tracked)
    generator = _generator_block(spec, src, count)

    if src.kind == "tape":
        for p in _tape_stream(spec, src, count):
            table.accumulate(p)
        return build_report(table, count, reduce_factor, thresholds, n_min, generator)

    pair_a, pair_b = _pair_arrays(n)
    cells = len(pair_a) * n * n

    def work(shard: tuple[int, int]) -> np.ndarray:
        sid, records = shard
        cnt = np.zeros(cells, dtype=np.uint32)
        perms = _fill_shard(spec, src.fork(sid), records)
        _accumulate_perms(cnt, perms, records, n, pair_a, pair_b)
        return cnt

    with ThreadPoolExecutor(max_workers=threads) as pool:
        for cnt in pool.map(work, _shards(count)):
            table.merge_ordered_counts(cnt)

    return build_report(table, count, reduce_factor, thresholds, n_min, generator)


def estimate_file(
    fp: BinaryIO,
    thresholds: Sequence[float] = DEFAULT_ALPHAS,
    reduce_factor: int = 1,
    *,
    n_min: int = DEFAULT_N_MIN,
    reduce_seed: int = 0,
) -> EstimatorReport:
    """The estimator over an existing permutation file (or stdin stream)."""
    reader = PermFileReader(fp)
    n = reader.n
    if not 1 <= reader.count <= MAX_STREAM:
        raise ValueError(f"file holds {reader.count} records, cap is {MAX_STREAM}")
    tracked = _tracked_indices(n, reduce_factor, reduce_seed)
    table = CaseTable(n, tracked)
    pair_a, pair_b = _pair_arrays(n)
    cnt = np.zeros(len(pair_a) * n * n, dtype=np.uint32)
    for block in reader.blocks(SHARD_SIZE):
        _accumulate_perms(cnt, block.reshape(-1), block.shape[0], n, pair_a, pair_b)
    table.merge_ordered_counts(cnt)
    return build_report(table, reader.count, reduce_factor, thresholds, n_min, None)


def generate_file(
    spec: ShuffleSpec,
    src: BitSource,
    count: int,
    fp: BinaryIO,
    *,
    threads: int = 1,
) -> None:
    """Write the canonical (sharded) stream, shards in stream-id order."""
    _check_stream_args(spec, src, count, threads)
    writer = PermFileWriter(fp, spec.n, count)

    if src.kind == "tape":
        for p in _tape_stream(spec, src, count):
            writer.write_block(np.array(p.mapping, dtype=np.uint8))
        writer.close()
        return

    shards = _shards(count)

    def work(shard: tuple[int, int]) -> np.ndarray:
        sid, records = shard
        return _fill_shard(spec, src.fork(sid), records)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        for block in pool.map(work, shards):
            writer.write_block(block)
    writer.close()


def _unrank(rank: int, n: int) -> Permutation:
    remaining = list(range(n))
    mapping = []
    for a in range(n):
        f = math.factorial(n - 1 - a)
        d, rank = divmod(rank, f)
        mapping.append(remaining.pop(d))
    return Permutation(tuple(mapping))


def _hist_to_multiset(hist: np.ndarray, n: int) -> PermMultiset:
    ms = PermMultiset(n)
    for rank in np.nonzero(hist)[0]:
        ms.add(_unrank(int(rank), n), int(hist[rank]))
    return ms


def _brute_guard(n: int) -> np.ndarray:
    if n > MAX_FACTORIAL_N:
        raise FactorialTooLarge(f"n={n} needs {n}! cells, cap is {MAX_FACTORIAL_N}")
    return np.array([math.factorial(i) for i in range(n)], dtype=np.int64)


def run_brute(
    spec: ShuffleSpec,
    src: BitSource,
    count: int,
    *,
    threads: int = 1,
) -> tuple[PermMultiset, TailProbability]:
    """Generate a stream and chi-square it over all N! cells."""
    _check_stream_args(spec, src, count, threads)
    n = spec.n
    factorials = _brute_guard(n)
    hist = np.zeros(math.factorial(n), dtype=np.uint64)

    if src.kind == "tape":
        ms = PermMultiset(n)
        for p in _tape_stream(spec, src, count):
            ms.add(p)
        return ms, brute_force_chi2(ms)

    def work(shard: tuple[int, int]) -> np.ndarray:
        sid, records = shard
        local = np.zeros(hist.shape[0], dtype=np.uint32)
        perms = _fill_shard(spec, src.fork(sid), records)
        _kernels.rank_histogram(perms, records, n, factorials, local)
        return local

    with ThreadPoolExecutor(max_workers=threads) as pool:
        for local in pool.map(work, _shards(count)):
            hist += local

    ms = _hist_to_multiset(hist, n)
    return ms, brute_force_chi2(ms)


def brute_file(fp: BinaryIO) -> tuple[PermMultiset, TailProbability]:
    reader = PermFileReader(fp)
    n = reader.n
    factorials = _brute_guard(n)
    hist = np.zeros(math.factorial(n), dtype=np.uint64)
    local = np.zeros(hist.shape[0], dtype=np.uint32)
    for block in reader.blocks(SHARD_SIZE):
        local[:] = 0
        _kernels.rank_histogram(block.reshape(-1), block.shape[0], n, factorials, local)
        hist += local
    ms = _hist_to_multiset(hist, n)
    return ms, brute_force_chi2(ms)
