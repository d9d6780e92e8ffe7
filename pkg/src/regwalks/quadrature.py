"""Globally adaptive Gauss-Legendre quadrature.

Each panel is integrated with an n-point rule and with two n-point rules on
its halves; the difference is the panel's error estimate.  The panel with
the largest estimate is split until the total estimate drops below the
tolerance.
"""
from __future__ import annotations

import heapq
from functools import lru_cache

import numpy as np

from .errors import QuadratureError

__all__ = ["adaptive_gauss_legendre"]


@lru_cache(maxsize=16)
def _rule(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _gl(f, a: float, b: float, n: int) -> float:
    x, w = _rule(n)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return half * float(np.dot(w, f(mid + half * x)))


def _panel(f, a, b, n):
    coarse = _gl(f, a, b, n)
    m = 0.5 * (a + b)
    fine = _gl(f, a, m, n) + _gl(f, m, b, n)
    return fine, abs(fine - coarse)


def adaptive_gauss_legendre(
    f, a: float, b: float, *, tol: float = 1e-10, n: int = 10,
    breakpoints=(), max_panels: int = 20_000,
) -> tuple[float, float]:
    """Integrate vectorized ``f`` over ``[a, b]``; returns ``(value, error_estimate)``.

    ``breakpoints`` inside ``(a, b)`` seed the initial panels so kinks in the
    integrand fall on panel boundaries.
    """
    cuts = sorted({a, b, *(p for p in breakpoints if a < p < b)})
    heap = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        val, err = _panel(f, lo, hi, n)
        heap.append((-err, lo, hi, val))
    heapq.heapify(heap)
    total_err = sum(-e for e, *_ in heap)
    while total_err > tol:
        if len(heap) >= max_panels:
            raise QuadratureError(
                f"no convergence to tol={tol:g} within {max_panels} panels "
                f"(error estimate {total_err:.3g})"
            )
        neg_err, lo, hi, _ = heapq.heappop(heap)
        total_err += neg_err
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            raise QuadratureError("panel width reached machine precision")
        for x0, x1 in ((lo, mid), (mid, hi)):
            val, err = _panel(f, x0, x1, n)
            heapq.heappush(heap, (-err, x0, x1, val))
            total_err += err
    # sum in position order so the result does not depend on heap history
    pieces = sorted((lo, val) for _, lo, _, val in heap)
    value = float(sum(v for _, v in pieces))
    return value, float(sum(-e for e, *_ in heap))
