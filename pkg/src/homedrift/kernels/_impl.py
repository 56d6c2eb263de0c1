"""Hot numeric loops, written nopython-compatible.

The same source is executed either jitted (default) or as plain Python
(``HOMEDRIFT_NO_NUMBA=1``), so both backends produce identical results;
``benchmarks/bench_kernels.py`` compares their speed.
"""

import math

import numpy as np


def markov_walk(cum_rows, start, u):
    """Map uniforms to a room-index sequence via cumulative transition rows."""
    n = u.shape[0]
    out = np.empty(n, dtype=np.int64)
    r = start
    for i in range(n):
        row = cum_rows[r]
        x = u[i]
        nxt = 0
        while nxt < row.shape[0] - 1 and x >= row[nxt]:
            nxt += 1
        r = nxt
        out[i] = r
    return out


def trailing_median(ts, values, window_s):
    """Median of the samples strictly before t_i within [t_i - window_s, t_i).

    Empty window falls back to the sample's own value.
    """
    n = ts.shape[0]
    out = np.empty(n, dtype=np.float64)
    lo = 0
    for i in range(n):
        while lo < i and ts[lo] < ts[i] - window_s:
            lo += 1
        if lo == i:
            out[i] = values[i]
        else:
            out[i] = np.median(values[lo:i])
    return out


def poisson_seg_cost(prefix, lo, hi):
    """Negative log-likelihood (up to data-only constants) of one constant-rate segment."""
    total = prefix[hi] - prefix[lo]
    if total <= 0.0:
        return 0.0
    length = hi - lo
    return total - total * np.log(total / length)


def binseg_best_split(prefix, lo, hi):
    """Best interior split of [lo, hi); returns (k, gain) with gain = cost drop.

    Self-contained (the segment cost is inlined) so it jits as one unit.
    """
    total = prefix[hi] - prefix[lo]
    base = 0.0 if total <= 0.0 else total - total * np.log(total / (hi - lo))
    best_k = -1
    best_cost = np.inf
    for k in range(lo + 1, hi):
        t1 = prefix[k] - prefix[lo]
        t2 = prefix[hi] - prefix[k]
        c1 = 0.0 if t1 <= 0.0 else t1 - t1 * np.log(t1 / (k - lo))
        c2 = 0.0 if t2 <= 0.0 else t2 - t2 * np.log(t2 / (hi - k))
        c = c1 + c2
        if c < best_cost:
            best_cost = c
            best_k = k
    return best_k, base - best_cost


def cooking_contribution(rel_t, dur_s, delta_c, tau_s):
    """Temperature added by one cooking block at times relative to its start.

    Linear rise to delta_c over the block, exponential decay afterwards;
    monotone non-increasing once the block ends. math.exp (libm) keeps the
    jitted and plain paths bit-identical.
    """
    n = rel_t.shape[0]
    out = np.zeros(n, dtype=np.float64)
    for i in range(n):
        t = rel_t[i]
        if t < 0.0:
            continue
        if t <= dur_s:
            out[i] = delta_c * (t / dur_s)
        else:
            out[i] = delta_c * math.exp(-(t - dur_s) / tau_s)
    return out
