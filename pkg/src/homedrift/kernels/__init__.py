"""Kernel dispatch: numba-jitted by default, plain Python with HOMEDRIFT_NO_NUMBA=1."""

import os

from . import _impl

USING_NUMBA = not os.environ.get("HOMEDRIFT_NO_NUMBA")

if USING_NUMBA:
    from numba import njit

    markov_walk = njit(cache=True)(_impl.markov_walk)
    trailing_median = njit(cache=True)(_impl.trailing_median)
    poisson_seg_cost = njit(cache=True)(_impl.poisson_seg_cost)
    binseg_best_split = njit(cache=True)(_impl.binseg_best_split)
    cooking_contribution = njit(cache=True)(_impl.cooking_contribution)
else:
    markov_walk = _impl.markov_walk
    trailing_median = _impl.trailing_median
    poisson_seg_cost = _impl.poisson_seg_cost
    binseg_best_split = _impl.binseg_best_split
    cooking_contribution = _impl.cooking_contribution

__all__ = [
    "USING_NUMBA",
    "markov_walk",
    "trailing_median",
    "poisson_seg_cost",
    "binseg_best_split",
    "cooking_contribution",
]
