"""Per-segment color histogram features and the similarity kernels.

Two measures are provided for weighting segment-graph edges:

* ``pssi`` — harmonic mean of three per-channel inter-histogram scores,
  each sqrt(P.Q + lam * P.A.Q) with A the tridiagonal 1-bin-adjacency
  matrix. Evaluated in O(bins) without materializing A.
* ``bha`` — Bhattacharyya coefficient over the dense bins**3 joint color
  histogram, the O(bins**3) baseline. The dense sweep is intentional:
  this kernel exists as the complexity reference point, so it must pay
  the full cubic cost (a sparse variant would be a different kernel).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import BinMismatch, EmptySegment, MissingJointHistogram
from .imgio import Image

Measure = Literal["pssi", "bha"]


@dataclass
class SimilarityConfig:
    bins: int = 8          # per channel; quality peaks here, exposed for sweeps
    lam: float = 0.2       # neighbor-bin weight; stable in roughly [0.15, 0.25]
    measure: Measure = "pssi"

    def __post_init__(self):
        if self.bins < 2:
            raise ValueError(f"bins must be >= 2, got {self.bins}")
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.measure not in ("pssi", "bha"):
            raise ValueError(f"measure must be 'pssi' or 'bha', got {self.measure!r}")


@dataclass
class SegmentFeatures:
    """Normalized per-channel histograms for one segment.

    ``joint`` is the flattened bins**3 joint RGB histogram; it is only
    populated when the BHA measure is in use (memory contract).
    """

    hist_r: np.ndarray
    hist_g: np.ndarray
    hist_b: np.ndarray
    area: int
    joint: np.ndarray | None = None

    @property
    def bins(self) -> int:
        return len(self.hist_r)


def channel_histogram(values: Sequence[int] | np.ndarray, bins: int) -> np.ndarray:
    """Normalized histogram of 8-bit values; bin index = v * bins // 256."""
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    arr = np.asarray(values, dtype=np.int64)
    if arr.size == 0:
        raise EmptySegment("cannot build a histogram from zero pixels")
    idx = (arr * bins) >> 8
    counts = np.bincount(idx, minlength=bins)
    return counts / arr.size


def ihsi(p: np.ndarray, q: np.ndarray, lam: float) -> float:
    """Inter-histogram similarity: sqrt(p.q + lam * sum_i p_i*(q_{i-1}+q_{i+1})).

    The neighbor term is the tridiagonal quadratic form evaluated with two
    shifted dot products, so the whole kernel is O(bins).
    """
    if len(p) != len(q):
        raise BinMismatch(f"histograms have {len(p)} vs {len(q)} bins")
    core = float(p @ q) + lam * (float(p[:-1] @ q[1:]) + float(p[1:] @ q[:-1]))
    return float(np.sqrt(core))


def ihsi_matrix_oracle(p: np.ndarray, q: np.ndarray, lam: float) -> float:
    """Reference evaluation with the adjacency matrix materialized (O(bins^2))."""
    if len(p) != len(q):
        raise BinMismatch(f"histograms have {len(p)} vs {len(q)} bins")
    n = len(p)
    a = np.zeros((n, n))
    idx = np.arange(n - 1)
    a[idx, idx + 1] = 1.0
    a[idx + 1, idx] = 1.0
    return float(np.sqrt(p @ q + lam * (p @ a @ q)))


def _harmonic_mean3(a: float, b: float, c: float) -> float:
    # Limit of the harmonic mean as any argument -> 0+ is 0: one fully
    # dissimilar channel zeroes the score.
    if a == 0.0 or b == 0.0 or c == 0.0:
        return 0.0
    return 3.0 / (1.0 / a + 1.0 / b + 1.0 / c)


def pssi(p: SegmentFeatures, q: SegmentFeatures, lam: float) -> float:
    """Pixel-segment similarity: harmonic mean of the three channel scores."""
    if p.bins != q.bins:
        raise BinMismatch(f"features have {p.bins} vs {q.bins} bins")
    return _harmonic_mean3(
        ihsi(p.hist_r, q.hist_r, lam),
        ihsi(p.hist_g, q.hist_g, lam),
        ihsi(p.hist_b, q.hist_b, lam),
    )


def bha(p: SegmentFeatures, q: SegmentFeatures) -> float:
    """Bhattacharyya coefficient over the full dense joint histogram."""
    if p.joint is None or q.joint is None:
        raise MissingJointHistogram("bha requires joint histograms on both features")
    if len(p.joint) != len(q.joint):
        raise BinMismatch(f"joint histograms have {len(p.joint)} vs {len(q.joint)} bins")
    return float(np.sqrt(p.joint * q.joint).sum())


def segment_features(image: Image, segmap, config: SimilarityConfig) -> list[SegmentFeatures]:
    """Per-segment histogram features, one entry per segment id.

    Uses a single bincount pass per channel over the label raster; joint
    histograms are built only for the BHA measure.
    """
    labels = segmap.labels.ravel().astype(np.int64)
    n = segmap.n_segments
    bins = config.bins
    areas = np.bincount(labels, minlength=n)

    chans = [image.pixels[:, :, c].ravel().astype(np.int64) for c in range(3)]
    bin_idx = [(c * bins) >> 8 for c in chans]
    hists = [
        np.bincount(labels * bins + bi, minlength=n * bins).reshape(n, bins) / areas[:, None]
        for bi in bin_idx
    ]

    joints = None
    if config.measure == "bha":
        b3 = bins ** 3
        joint_idx = (bin_idx[0] * bins + bin_idx[1]) * bins + bin_idx[2]
        joints = (
            np.bincount(labels * b3 + joint_idx, minlength=n * b3).reshape(n, b3)
            / areas[:, None]
        )

    return [
        SegmentFeatures(
            hist_r=hists[0][i],
            hist_g=hists[1][i],
            hist_b=hists[2][i],
            area=int(areas[i]),
            joint=None if joints is None else joints[i],
        )
        for i in range(n)
    ]


def similarity_weight(p: SegmentFeatures, q: SegmentFeatures, config: SimilarityConfig) -> float:
    if config.measure == "bha":
        return bha(p, q)
    return pssi(p, q, config.lam)


# ---------------------------------------------------------------------------
# Batch kernels. These exist so the complexity benchmark measures the
# algorithmic cost of the kernels rather than Python call overhead: each
# batched call does the per-evaluation work for every row. Cross-checked
# against the scalar kernels in the test suite.
# ---------------------------------------------------------------------------

def ihsi_many(ps: np.ndarray, qs: np.ndarray, lam: float) -> np.ndarray:
    """Row-wise ihsi over (n, bins) histogram stacks."""
    core = np.einsum("ij,ij->i", ps, qs)
    core = core + lam * (
        np.einsum("ij,ij->i", ps[:, :-1], qs[:, 1:])
        + np.einsum("ij,ij->i", ps[:, 1:], qs[:, :-1])
    )
    return np.sqrt(core)


def pssi_many(
    pr: np.ndarray, qr: np.ndarray,
    pg: np.ndarray, qg: np.ndarray,
    pb: np.ndarray, qb: np.ndarray,
    lam: float,
) -> np.ndarray:
    """Row-wise pssi over per-channel (n, bins) histogram stacks."""
    a = ihsi_many(pr, qr, lam)
    b = ihsi_many(pg, qg, lam)
    c = ihsi_many(pb, qb, lam)
    any_zero = (a == 0.0) | (b == 0.0) | (c == 0.0)
    with np.errstate(divide="ignore"):
        hm = 3.0 / (1.0 / a + 1.0 / b + 1.0 / c)
    return np.where(any_zero, 0.0, hm)


def bha_many(ps: np.ndarray, qs: np.ndarray, work: np.ndarray | None = None) -> np.ndarray:
    """Row-wise Bhattacharyya over (n, bins**3) joint histogram stacks.

    ``work`` lets hot callers reuse a scratch buffer of ps.shape instead of
    allocating tens of megabytes per call.
    """
    if work is None:
        work = np.empty_like(ps)
    np.multiply(ps, qs, out=work)
    np.sqrt(work, out=work)
    return work.sum(axis=1)


def _random_histograms(rng: np.random.Generator, n: int, size: int) -> np.ndarray:
    h = rng.random((n, size))
    return h / h.sum(axis=1, keepdims=True)


@dataclass
class BenchmarkResult:
    bins: list[int]
    pssi_seconds: list[float]   # total wall time for `evaluations` kernel runs
    bha_seconds: list[float]
    evaluations: int
    pssi_slope: float | None = None
    bha_slope: float | None = None


def _loglog_slope(bins: Iterable[int], seconds: Iterable[float]) -> float:
    x = np.log(np.asarray(list(bins), dtype=float))
    y = np.log(np.asarray(list(seconds), dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def benchmark_kernels(
    bins_list: Sequence[int],
    evaluations: int = 10_000,
    seed: int = 0,
    pool_pairs: int = 8,
    chunk_elements: int = 131_072,   # keep chunk working sets cache-resident
) -> BenchmarkResult:
    """Time `evaluations` pssi and bha kernel runs for each bin count.

    Random normalized histograms are drawn from a small pool and evaluated
    in memory-bounded chunks through preallocated workspaces (per-chunk
    allocation would otherwise dominate and distort the scaling). The
    reported time is the total wall time for the batch at each bin count;
    slopes come from a log-log least-squares fit when more than one bin
    count is given.
    """
    rng = np.random.default_rng(seed)
    pssi_times: list[float] = []
    bha_times: list[float] = []
    idx_all = np.arange(evaluations) % pool_pairs

    for bins in bins_list:
        if bins < 2:
            raise ValueError(f"bins must be >= 2, got {bins}")

        # pssi: three channel pools of shape (pool, bins)
        chan_pool = [
            (_random_histograms(rng, pool_pairs, bins), _random_histograms(rng, pool_pairs, bins))
            for _ in range(3)
        ]
        chunk = max(1, min(evaluations, chunk_elements // bins))
        gathers = [np.empty((chunk, bins)) for _ in range(6)]

        def run_pssi() -> None:
            for start in range(0, evaluations, chunk):
                idx = idx_all[start:start + chunk]
                n = len(idx)
                flat = [h for pair in chan_pool for h in pair]
                for buf, src in zip(gathers, flat):
                    np.take(src, idx, axis=0, out=buf[:n])
                pssi_many(*(buf[:n] for buf in gathers), lam=0.2)

        run_pssi()   # warmup: fault in buffers outside the timed region
        t0 = time.perf_counter()
        run_pssi()
        pssi_times.append(time.perf_counter() - t0)

        # bha: joint pool of shape (pool, bins**3)
        b3 = bins ** 3
        jp = _random_histograms(rng, pool_pairs, b3)
        jq = _random_histograms(rng, pool_pairs, b3)
        chunk = max(1, min(evaluations, chunk_elements // b3))
        g1 = np.empty((chunk, b3))
        g2 = np.empty((chunk, b3))
        work = np.empty((chunk, b3))

        def run_bha() -> None:
            for start in range(0, evaluations, chunk):
                idx = idx_all[start:start + chunk]
                n = len(idx)
                np.take(jp, idx, axis=0, out=g1[:n])
                np.take(jq, idx, axis=0, out=g2[:n])
                bha_many(g1[:n], g2[:n], work=work[:n])

        # warmup restricted to one chunk: a full warmup pass would double
        # the dominant cubic cost for nothing
        np.take(jp, idx_all[:chunk], axis=0, out=g1)
        np.take(jq, idx_all[:chunk], axis=0, out=g2)
        bha_many(g1, g2, work=work)
        t0 = time.perf_counter()
        run_bha()
        bha_times.append(time.perf_counter() - t0)

    result = BenchmarkResult(
        bins=list(bins_list),
        pssi_seconds=pssi_times,
        bha_seconds=bha_times,
        evaluations=evaluations,
    )
    if len(bins_list) > 1:
        result.pssi_slope = _loglog_slope(bins_list, pssi_times)
        result.bha_slope = _loglog_slope(bins_list, bha_times)
    return result
