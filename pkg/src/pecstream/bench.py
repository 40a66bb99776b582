"""Benchmark reproductions: termination overhead, index redundancy, W curves.

The termination experiment codes pseudo-random binary streams and accumulates
the share ratio and mean extra bits per stream.  Its default engine is a
numpy lockstep replay of the coder's (low, range) state transitions, which
is bit-identical to running the real encoder (asserted by tests against the
exact engine on the same seed) and fast enough for 10**5 stream pairs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .bitio import REVERSED_BYTES, BitWriter
from .rangecoder import MASK32, PROB_ONE, TOP, BinaryModel, Encoder
from .sizeindex import bic_encode, gamma_encode_sizes, i32_encode_sizes, rtc_encode
from .termination import (
    TerminationStats,
    joint_terminate,
    terminate_single,
)

#: published termination overhead (mean extra bits per stream)
TBAR_TABLE = {"uni": 4.56, "fb": 2.77, "fr": 1.78}
#: published share ratios for bidirectional modes
SHARE_TABLE = {"fb": 0.45, "fr": 0.69}

_LN2 = math.log(2.0)
#: exclusive value bound used when benchmarking the range-tree codec; wide
#: enough that unclamped heavy-tail samples always fit.
BENCH_RTC_BOUND = 1 << 32


# ---------------------------------------------------------------------------
# log2-normal source


@dataclass(frozen=True)
class Log2NormalSource:
    """Integer sizes b = round(2**Z), Z ~ Normal(mu, sigma**2).

    Parameterized by the mean size instead of mu: mean = 2**(mu + ln2*s**2/2).
    """

    mean_size: float
    sigma: float

    def __post_init__(self) -> None:
        if self.mean_size <= 0 or self.sigma <= 0:
            raise ValueError("mean_size and sigma must be positive")

    @property
    def mu(self) -> float:
        return math.log2(self.mean_size) - _LN2 * self.sigma ** 2 / 2.0

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        z = rng.normal(self.mu, self.sigma, count)
        return np.maximum(np.rint(np.exp2(z)), 1.0).astype(np.int64)


def log2_normal_entropy(mean_size: float, sigma: float) -> float:
    """Closed-form source entropy of the log2-normal size distribution."""
    if mean_size <= 0 or sigma <= 0:
        raise ValueError("mean_size and sigma must be positive")
    return (math.log2(mean_size * sigma * _LN2 * math.sqrt(2.0 * math.e * math.pi))
            - _LN2 * sigma ** 2 / 2.0)


@dataclass(frozen=True)
class FitResult:
    mean_size: float
    sigma: float
    entropy: float
    degenerate: bool


def fit_log2_normal(sizes: Sequence[int]) -> FitResult:
    """Fit (mean size, sigma) by moments of log2(b) and evaluate the entropy."""
    arr = np.asarray(sizes, dtype=np.float64)
    if arr.size < 2:
        raise ValueError("need at least two samples")
    if np.any(arr <= 0):
        raise ValueError("samples must be positive")
    logs = np.log2(arr)
    mu = float(logs.mean())
    sigma = float(logs.std(ddof=1))
    if sigma == 0.0:
        return FitResult(mean_size=float(2.0 ** mu), sigma=0.0,
                         entropy=0.0, degenerate=True)
    mean_size = float(2.0 ** (mu + _LN2 * sigma ** 2 / 2.0))
    return FitResult(mean_size=mean_size, sigma=sigma,
                     entropy=log2_normal_entropy(mean_size, sigma),
                     degenerate=False)


# ---------------------------------------------------------------------------
# overhead model


@dataclass(frozen=True)
class OverheadModel:
    """Relative overhead W = (alpha*log2(b) + beta)/b, b = bytes per stream."""

    alpha: float
    beta: float

    def relative_overhead(self, mean_stream_bytes: float) -> float:
        b = mean_stream_bytes
        if b < 1:
            raise ValueError("mean stream size must be >= 1 byte")
        return (self.alpha * math.log2(b) + self.beta) / b

    def relative_overhead_for(self, data_bytes: float, n_streams: int) -> float:
        """The (D, N_s) form; equals relative_overhead(D / N_s) exactly."""
        if n_streams < 1 or data_bytes <= 0:
            raise ValueError("need positive D and N_s")
        return n_streams * (self.alpha * math.log2(data_bytes / n_streams)
                            + self.beta) / data_bytes


#: per-entry index rate model (a, c): ~ a*log2(segment mean) + c bits/entry
_INDEX_RATE = {"i32": (0.0, 32.0), "rtc": (1.0, 2.0),
               "bic": (1.0, 2.0), "gamma": (2.0, 1.0)}


def overhead_factors(mode: str, index_codec: str, tbar: float) -> OverheadModel:
    """(alpha, beta) for the published mode/index combinations."""
    if mode == "uni" and index_codec == "i32":
        return OverheadModel(0.0, (32.0 + tbar) / 8.0)
    if mode == "uni" and index_codec == "rtc":
        return OverheadModel(1.0 / 8.0, (2.0 + tbar) / 8.0)
    if mode in ("fb", "fr") and index_codec == "rtc":
        return OverheadModel(1.0 / 16.0, (3.0 + 2.0 * tbar) / 16.0)
    raise ValueError(f"unsupported combination: {mode}/{index_codec}")


def overhead_factors_any(mode: str, index_codec: str, tbar: float) -> OverheadModel:
    """(alpha, beta) for any mode/index pair, from the per-entry rate model."""
    try:
        a, c = _INDEX_RATE[index_codec]
    except KeyError:
        raise ValueError(f"unknown index codec: {index_codec!r}") from None
    if mode == "uni":
        return OverheadModel(a / 8.0, (c + tbar) / 8.0)
    if mode in ("fb", "fr"):
        return OverheadModel(a / 16.0, (a + c + 2.0 * tbar) / 16.0)
    raise ValueError(f"unknown mode: {mode!r}")


def overhead_curve(model: OverheadModel,
                   stream_bytes: Iterable[float]) -> list[tuple[float, float]]:
    return [(b, model.relative_overhead(b)) for b in stream_bytes]


def overhead_grid(model: OverheadModel, data_bytes: Sequence[float],
                  n_streams: Sequence[int]) -> list[tuple[float, int, float]]:
    """W over a (D, N_s) grid; skips cells with less than one byte per stream."""
    rows = []
    for d in data_bytes:
        for n in n_streams:
            if d / n < 1.0:
                continue
            rows.append((d, n, model.relative_overhead_for(d, n)))
    return rows


# ---------------------------------------------------------------------------
# termination experiment


@dataclass
class TerminationPopulation:
    """Final-state arrays for a simulated stream population.

    Streams are laid out as consecutive pairs: even indices are the forward
    halves, odd indices the backward halves.
    """

    low: np.ndarray        # final low, after any termination renormalization
    range_: np.ndarray     # final range, same
    pending: np.ndarray    # -log2(v - u) of the state as finalized
    appended: np.ndarray   # termination bytes per stream (1, or 2 if renormed)
    set_lo: np.ndarray     # U per stream
    set_hi: np.ndarray     # V per stream
    p0: np.ndarray
    lengths: np.ndarray

    @property
    def n_streams(self) -> int:
        return int(self.low.shape[0])


def _draw_stream_params(rng: np.random.Generator, n_streams: int,
                        min_symbols: int, max_symbols: int):
    p = rng.uniform(0.05, 0.95, n_streams)
    p0 = np.clip(np.rint(p * PROB_ONE), 1, PROB_ONE - 1).astype(np.int64)
    lengths = rng.integers(min_symbols, max_symbols + 1, n_streams)
    return p0, lengths


def _terminal_sets(low: np.ndarray, rng_: np.ndarray):
    """Vectorized valid_byte_set: (U, V, appended, low', range')."""
    set_lo = (low + (TOP - 1)) >> 24
    set_hi = ((low + rng_) >> 24) - 1
    renorm = set_hi < set_lo
    low2 = np.where(renorm, (low << 8) & MASK32, low)
    rng2 = np.where(renorm, np.minimum(rng_ << 8, MASK32), rng_)
    set_lo = np.where(renorm, (low2 + (TOP - 1)) >> 24, set_lo)
    set_hi = np.where(renorm, ((low2 + rng2) >> 24) - 1, set_hi)
    appended = 1 + renorm.astype(np.int64)
    return set_lo, set_hi, appended, low2, rng2


def simulate_termination_population(pairs: int, seed: int,
                                    min_symbols: int = 64,
                                    max_symbols: int = 4096) -> TerminationPopulation:
    """Lockstep replay of the coder state for 2*pairs Bernoulli streams."""
    if pairs < 1:
        raise ValueError("need at least one pair")
    n = 2 * pairs
    rng = np.random.default_rng(seed)
    p0, lengths = _draw_stream_params(rng, n, min_symbols, max_symbols)
    threshold = p0 / PROB_ONE

    low = np.zeros(n, dtype=np.int64)
    rng_ = np.full(n, MASK32, dtype=np.int64)
    for t in range(int(lengths.max())):
        active = lengths > t
        draw = rng.random(n)
        one = draw >= threshold
        r0 = (rng_ >> 16) * p0
        low = np.where(active, low + np.where(one, r0, 0), low)
        rng_ = np.where(active, np.where(one, rng_ - r0, r0), rng_)
        low &= MASK32  # the carry is absorbed by the byte chain
        need = active & (rng_ < TOP)
        while need.any():
            low[need] = (low[need] << 8) & MASK32
            rng_[need] <<= 8
            need &= rng_ < TOP
    pending = 32.0 - np.log2(rng_.astype(np.float64))
    set_lo, set_hi, appended, low, rng_ = _terminal_sets(low, rng_)
    return TerminationPopulation(low=low, range_=rng_, pending=pending,
                                 appended=appended, set_lo=set_lo,
                                 set_hi=set_hi, p0=p0, lengths=lengths)


def exact_termination_population(pairs: int, seed: int,
                                 min_symbols: int = 64,
                                 max_symbols: int = 4096):
    """Drive the real encoder over the same draws as the lockstep engine.

    Returns (population, final_states); final states are pristine (their
    termination sets not yet computed), for feeding the termination module.
    """
    n = 2 * pairs
    rng = np.random.default_rng(seed)
    p0, lengths = _draw_stream_params(rng, n, min_symbols, max_symbols)
    draws = rng.random((int(lengths.max()), n))
    bits = (draws >= (p0 / PROB_ONE)).astype(np.uint8)

    states = []
    for i in range(n):
        enc = Encoder()
        enc.encode_bits(BinaryModel(int(p0[i])), bits[:int(lengths[i]), i])
        direction = "forward" if i % 2 == 0 else "backward"
        states.append(enc.finalize(direction=direction))

    low = np.array([s.low for s in states], dtype=np.int64)
    rng_ = np.array([s.range for s in states], dtype=np.int64)
    pending = np.array([s.pending_info for s in states])
    set_lo, set_hi, appended, low2, rng2 = _terminal_sets(low, rng_)
    pop = TerminationPopulation(low=low2, range_=rng2, pending=pending,
                                appended=appended, set_lo=set_lo,
                                set_hi=set_hi, p0=p0, lengths=lengths)
    return pop, states


_ARC_MASKS: dict[bool, np.ndarray] = {}


def _arc_mask_table(reversed_bits: bool) -> np.ndarray:
    """256x256x4 uint64 bitmask of stored-byte arcs.

    Entry [start, length] is the 256-bit membership mask of the stored bytes
    {perm((start + i) mod 256) : i < length} with perm = identity or the
    bit-reversal table.
    """
    table = _ARC_MASKS.get(reversed_bits)
    if table is not None:
        return table
    perm = REVERSED_BYTES if reversed_bits else bytes(range(256))
    masks = np.zeros((256, 256, 4), dtype=np.uint64)
    for start in range(256):
        acc = 0
        row = masks[start]
        for length in range(1, 256):
            acc |= 1 << perm[(start + length - 1) & 0xFF]
            row[length, 0] = acc & 0xFFFFFFFFFFFFFFFF
            row[length, 1] = (acc >> 64) & 0xFFFFFFFFFFFFFFFF
            row[length, 2] = (acc >> 128) & 0xFFFFFFFFFFFFFFFF
            row[length, 3] = (acc >> 192) & 0xFFFFFFFFFFFFFFFF
    _ARC_MASKS[reversed_bits] = masks
    return masks


def _shared_mask(pop: TerminationPopulation, reversed_bits: bool) -> np.ndarray:
    """Whether each pair's stored termination sets intersect."""
    f_lo, f_hi = pop.set_lo[0::2], pop.set_hi[0::2]
    b_lo, b_hi = pop.set_lo[1::2], pop.set_hi[1::2]
    f_len = f_hi - f_lo + 1
    b_len = b_hi - b_lo + 1
    if int(f_len.max()) > 255 or int(b_len.max()) > 255:
        raise AssertionError("termination set wider than one byte period")
    fwd_masks = _arc_mask_table(False)[f_lo & 0xFF, f_len]
    bwd_masks = _arc_mask_table(reversed_bits)[b_lo & 0xFF, b_len]
    return ((fwd_masks & bwd_masks) != 0).any(axis=1)


def population_stats(pop: TerminationPopulation, mode: str) -> TerminationStats:
    """Termination-module accounting applied to a simulated population."""
    extra_single = 8.0 * pop.appended - pop.pending
    if mode == "uni":
        return TerminationStats(
            streams=pop.n_streams,
            extra_bits_total=float(extra_single.sum()),
        )
    if mode not in ("fb", "fr"):
        raise ValueError(f"unknown mode: {mode!r}")
    shared = _shared_mask(pop, reversed_bits=(mode == "fr"))
    pair_total = extra_single[0::2] + extra_single[1::2] - 8.0 * shared
    return TerminationStats(
        streams=pop.n_streams,
        pair_events=len(shared),
        shared_events=int(shared.sum()),
        extra_bits_total=float(pair_total.sum()),
    )


def termination_experiment(mode: str, pairs: int, seed: int,
                           exact: bool = False,
                           min_symbols: int = 64,
                           max_symbols: int = 4096) -> TerminationStats:
    """Measure share ratio and mean extra bits for one packing mode.

    `exact=True` runs the real encoder and termination module instead of the
    lockstep engine (identical results, far slower; for cross-validation).
    """
    if not exact:
        pop = simulate_termination_population(pairs, seed, min_symbols, max_symbols)
        return population_stats(pop, mode)

    _, states = exact_termination_population(pairs, seed, min_symbols, max_symbols)
    stats = TerminationStats()
    if mode == "uni":
        for state in states:
            stats.add_single(terminate_single(state))
        return stats
    for j in range(0, len(states), 2):
        bwd = states[j + 1]
        bwd.bit_reversed = mode == "fr"
        stats.add_pair(joint_terminate(states[j], bwd, mode))
    return stats


# ---------------------------------------------------------------------------
# index redundancy experiment


@dataclass(frozen=True)
class RedundancyCell:
    codec: str
    sigma: float
    log2_mean: float
    bits_per_entry: float
    entropy: float
    redundancy: float
    estimator_gap: float   # log2(mean) + 2 - entropy

    def as_row(self) -> dict:
        return {
            "codec": self.codec,
            "sigma": f"{self.sigma:g}",
            "log2_mean": f"{self.log2_mean:g}",
            "bits_per_entry": f"{self.bits_per_entry:.4f}",
            "entropy": f"{self.entropy:.4f}",
            "redundancy": f"{self.redundancy:.4f}",
            "estimator_gap": f"{self.estimator_gap:.4f}",
        }


def _index_bits(codec: str, sizes: list[int]) -> int:
    sink = BitWriter()
    if codec == "rtc":
        return rtc_encode(sizes, BENCH_RTC_BOUND, sink)
    if codec == "bic":
        return bic_encode(sizes, sum(sizes), sink)
    if codec == "gamma":
        return gamma_encode_sizes(sizes, sink)
    if codec == "i32":
        return i32_encode_sizes(sizes, sink)
    raise ValueError(f"unknown index codec: {codec!r}")


def redundancy_experiment(codecs: Sequence[str], sigmas: Sequence[float],
                          log2_means: Sequence[float], trials: int, seed: int,
                          entries: int = 128) -> list[RedundancyCell]:
    """Average bits/entry minus source entropy per (codec, sigma, mean) cell."""
    if not sigmas or not log2_means:
        raise ValueError("grids must be nonempty")
    cells = []
    for ci, codec in enumerate(codecs):
        for si, sigma in enumerate(sigmas):
            for mi, lm in enumerate(log2_means):
                source = Log2NormalSource(2.0 ** lm, sigma)
                rng = np.random.default_rng([seed, ci, si, mi])
                total_bits = 0
                for _ in range(trials):
                    sizes = source.sample(rng, entries).tolist()
                    total_bits += _index_bits(codec, sizes)
                rate = total_bits / (trials * entries)
                entropy = log2_normal_entropy(2.0 ** lm, sigma)
                cells.append(RedundancyCell(
                    codec=codec, sigma=sigma, log2_mean=lm,
                    bits_per_entry=rate, entropy=entropy,
                    redundancy=rate - entropy,
                    estimator_gap=lm + 2.0 - entropy,
                ))
    return cells


def average_redundancy(cells: Sequence[RedundancyCell]) -> dict[tuple[str, float], float]:
    """Mean redundancy per (codec, sigma) across the mean-size grid."""
    sums: dict[tuple[str, float], list[float]] = {}
    for cell in cells:
        sums.setdefault((cell.codec, cell.sigma), []).append(cell.redundancy)
    return {key: sum(vals) / len(vals) for key, vals in sums.items()}


# ---------------------------------------------------------------------------
# CSV output


def write_csv(path: str, fieldnames: Sequence[str], rows: Iterable[dict],
              metadata: dict | None = None) -> None:
    """Write rows with leading '# key=value' metadata comment lines."""
    with open(path, "w", newline="") as handle:
        if metadata:
            for key, value in metadata.items():
                handle.write(f"# {key}={value}\n")
        writer = csv.DictWriter(handle, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def csv_metadata(seed: int | None = None, **extra) -> dict:
    meta = {"generator": "numpy.random.Generator(PCG64)"}
    if seed is not None:
        meta["seed"] = seed
    meta.update(extra)
    return meta
