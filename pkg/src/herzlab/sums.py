"""Stable power-sum reductions used by every quasi-norm in the package.

All reductions factor out the largest term before exponentiating, so
exponents as large as 1e7 (used to probe the sup-limit of ell_beta) neither
overflow nor underflow, and accumulate terms in descending magnitude so a
result is reproducible bit-for-bit for a given input multiset.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["lp_norm", "weighted_power_integral"]


def lp_norm(values, p: float) -> float:
    """(sum v_i^p)^(1/p) over non-negative values; max(v_i) when p = inf."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return 0.0
    top = float(v.max(initial=0.0))
    if top == 0.0:
        return 0.0
    if math.isinf(p):
        return top
    with np.errstate(under="ignore"):
        terms = (v / top) ** p
    terms = np.sort(terms)[::-1]
    return top * float(np.sum(terms)) ** (1.0 / p)


def weighted_power_integral(values, weights, q: float) -> float:
    """(sum w_i v_i^q)^(1/q) for non-negative values and weights, finite q > 0.

    This is the exact L^q norm of a function taking value v_i on a cell of
    measure w_i.
    """
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if v.size == 0:
        return 0.0
    top = float(v.max(initial=0.0))
    if top == 0.0:
        return 0.0
    with np.errstate(under="ignore"):
        terms = w * (v / top) ** q
    terms = np.sort(terms)[::-1]
    return top * float(np.sum(terms)) ** (1.0 / q)
