"""Data cleaning: gap detection, gap-size-dependent imputation, and
change-point segmentation of event streams.

Imputation fills gaps up to ``small_gap_s`` by linear interpolation on the
device's expected sample grid; larger gaps stay as explicitly-missing slots.
Segmentation bins an event stream into fixed-width counts and applies
recursive binary segmentation under a piecewise-constant Poisson
log-likelihood cost with penalty ``beta`` per accepted split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import PERIODIC_KINDS, DeviceSpec

MASK_ORIGINAL = 0
MASK_IMPUTED = 1
MASK_MISSING = 2

SMALL_GAP_S = 1800.0  # gaps at most this long are interpolated


@dataclass(frozen=True)
class Gap:
    device_id: str
    start: float  # ts of last sample before the gap
    end: float  # ts of first sample after it
    expected_missed: int

    def __post_init__(self) -> None:
        if self.end <= self.start:
            raise ValueError("gap end must be after start")


@dataclass(frozen=True)
class Segment:
    start: float
    end: float
    mean_rate: float  # events per bin
    first_bin: int
    n_bins: int


def detect_gaps(ts: np.ndarray, device: DeviceSpec) -> list[Gap]:
    """Maximal inter-sample gaps wider than 2x the reporting interval.

    Event-driven devices yield no gaps: their silence is legal.
    """
    if device.kind not in PERIODIC_KINDS or len(ts) < 2:
        return []
    interval = float(device.interval_s)
    deltas = np.diff(ts)
    gaps = []
    for i in np.nonzero(deltas > 2 * interval)[0]:
        missed = int(round(deltas[i] / interval)) - 1
        gaps.append(Gap(device.device_id, float(ts[i]), float(ts[i + 1]), missed))
    return gaps


def impute(
    ts: np.ndarray,
    values: np.ndarray,
    gaps: list[Gap],
    interval_s: float,
    small_gap_s: float = SMALL_GAP_S,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fill small gaps by linear interpolation on the expected grid.

    Returns (ts', values', mask) where mask is MASK_ORIGINAL / MASK_IMPUTED /
    MASK_MISSING per slot; missing slots carry NaN. Original samples are
    never modified.
    """
    gap_at = {g.start: g for g in gaps}
    out_ts: list[float] = []
    out_vals: list[float] = []
    out_mask: list[int] = []
    for i in range(len(ts)):
        out_ts.append(float(ts[i]))
        out_vals.append(float(values[i]))
        out_mask.append(MASK_ORIGINAL)
        g = gap_at.get(float(ts[i]))
        if g is None:
            continue
        span = g.end - g.start
        fill = span <= small_gap_s
        v0, v1 = float(values[i]), float(values[i + 1])
        for k in range(1, g.expected_missed + 1):
            t = g.start + k * interval_s
            out_ts.append(t)
            if fill:
                out_vals.append(v0 + (v1 - v0) * (t - g.start) / span)
                out_mask.append(MASK_IMPUTED)
            else:
                out_vals.append(math.nan)
                out_mask.append(MASK_MISSING)
    return (
        np.asarray(out_ts, dtype=np.float64),
        np.asarray(out_vals, dtype=np.float64),
        np.asarray(out_mask, dtype=np.int8),
    )


def default_beta(n_bins: int) -> float:
    return 3.0 * math.log(n_bins)


def segment_counts(counts: np.ndarray, beta: float | None = None) -> list[tuple[int, int]]:
    """Binary segmentation over per-bin counts; returns [lo, hi) bin ranges."""
    counts = np.asarray(counts, dtype=np.float64)
    n = len(counts)
    if n < 2:
        raise ValueError("need at least 2 bins")
    if beta is None:
        beta = default_beta(n)
    prefix = np.concatenate(([0.0], np.cumsum(counts)))
    boundaries = [0, n]

    def recurse(lo: int, hi: int) -> None:
        if hi - lo < 2:
            return
        k, gain = kernels.binseg_best_split(prefix, lo, hi)
        if k < 0 or gain <= beta:
            return
        boundaries.append(int(k))
        recurse(lo, int(k))
        recurse(int(k), hi)

    recurse(0, n)
    boundaries.sort()
    return list(zip(boundaries[:-1], boundaries[1:]))


def segmentation_objective(counts: np.ndarray, ranges: list[tuple[int, int]], beta: float) -> float:
    """Total cost + penalty for a given segmentation (binseg's own accounting)."""
    counts = np.asarray(counts, dtype=np.float64)
    prefix = np.concatenate(([0.0], np.cumsum(counts)))
    cost = sum(kernels.poisson_seg_cost(prefix, lo, hi) for lo, hi in ranges)
    return float(cost) + beta * (len(ranges) - 1)


def segment(
    event_ts: np.ndarray,
    bin_width_s: float = 300.0,
    start: float | None = None,
    end: float | None = None,
    beta: float | None = None,
) -> list[Segment]:
    """Segment an event stream into constant-rate stretches."""
    event_ts = np.asarray(event_ts, dtype=np.float64)
    if start is None:
        start = float(event_ts.min()) if len(event_ts) else 0.0
    if end is None:
        end = float(event_ts.max()) + bin_width_s if len(event_ts) else start + 2 * bin_width_s
    n_bins = int(math.ceil((end - start) / bin_width_s))
    if n_bins < 2:
        raise ValueError("need at least 2 bins")
    idx = np.floor((event_ts - start) / bin_width_s).astype(np.int64)
    idx = idx[(idx >= 0) & (idx < n_bins)]
    counts = np.bincount(idx, minlength=n_bins).astype(np.float64)
    segs = []
    for lo, hi in segment_counts(counts, beta):
        segs.append(
            Segment(
                start=start + lo * bin_width_s,
                end=start + hi * bin_width_s,
                mean_rate=float(counts[lo:hi].mean()),
                first_bin=lo,
                n_bins=hi - lo,
            )
        )
    return segs
