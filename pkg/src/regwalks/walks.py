"""Hashimoto (non-backtracking) operator and exact periodic-walk counts.

Directed edges are numbered from the canonical undirected edge list: edge
``b = (i, j)`` with ``i < j`` yields ``2b = i -> j`` and ``2b + 1 = j -> i``,
so the reversal of ``e`` is ``e ^ 1``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .errors import BudgetExceededError
from .graphs import RegularGraph

__all__ = [
    "HashimotoOperator",
    "WalkCounts",
    "build_hashimoto",
    "count_periodic_exact",
    "brute_force_count",
    "trace_power_spectral",
    "verify_bass_identity",
    "walk_counts_csv",
    "BRUTE_FORCE_BUDGET",
    "BASS_MAX_V",
]

BRUTE_FORCE_BUDGET = 10**9
BRUTE_FORCE_MAX_T = 14
BASS_MAX_V = 50
_INT64_LIMIT = 2**62


@dataclass(frozen=True, eq=False)
class HashimotoOperator:
    origin: np.ndarray
    terminus: np.ndarray
    reversal: np.ndarray
    successors: np.ndarray  # (2E, d-1): e -> e' with o(e') = t(e), e' != reversal(e)
    d: int

    @property
    def n_directed(self) -> int:
        return int(self.origin.size)

    def matrix(self, dtype=np.int64) -> sp.csr_matrix:
        n, k = self.successors.shape
        rows = np.repeat(np.arange(n), k)
        data = np.ones(n * k, dtype=dtype)
        return sp.csr_matrix((data, (rows, self.successors.ravel())), shape=(n, n))


@dataclass(frozen=True)
class WalkCounts:
    t_max: int
    P: dict[int, int]

    @property
    def C(self) -> dict[int, Fraction]:
        return {t: Fraction(p, 2 * t) for t, p in self.P.items()}


def build_hashimoto(g: RegularGraph) -> HashimotoOperator:
    E = g.E
    origin = np.empty(2 * E, dtype=np.int64)
    terminus = np.empty(2 * E, dtype=np.int64)
    origin[0::2], terminus[0::2] = g.edges[:, 0], g.edges[:, 1]
    origin[1::2], terminus[1::2] = g.edges[:, 1], g.edges[:, 0]
    reversal = np.arange(2 * E, dtype=np.int64) ^ 1

    # out-edges grouped by origin vertex; regularity makes this a (V, d) table
    by_origin = np.argsort(origin, kind="stable").reshape(g.V, g.d)
    cand = by_origin[terminus]  # (2E, d)
    keep = cand != reversal[:, None]
    successors = cand[keep].reshape(2 * E, g.d - 1)
    for arr in (origin, terminus, reversal, successors):
        arr.setflags(write=False)
    return HashimotoOperator(origin, terminus, reversal, successors, g.d)


def _count_sparse(h: HashimotoOperator, t_max: int) -> dict[int, int]:
    # tr Y^t = sum((Y^a) * (Y^b)^T) with a + b = t, so only powers up to ceil(t/2)
    Y = h.matrix(np.int64)
    powers = {0: sp.identity(h.n_directed, dtype=np.int64, format="csr"), 1: Y}
    for s in range(2, (t_max + 1) // 2 + 1):
        powers[s] = (powers[s - 1] @ Y).tocsr()
    P = {}
    for t in range(1, t_max + 1):
        a = (t + 1) // 2
        b = t - a
        P[t] = int(powers[a].multiply(powers[b].T).sum())
    return P


def _count_blocks(h: HashimotoOperator, t_max: int, block: int = 256) -> dict[int, int]:
    # Python-int columns of Y^s applied to unit vectors; used past int64 range
    n = h.n_directed
    succ = h.successors
    P = {t: 0 for t in range(1, t_max + 1)}
    for start in range(0, n, block):
        cols = np.arange(start, min(start + block, n))
        X = np.zeros((n, cols.size), dtype=object)
        X[cols, np.arange(cols.size)] = 1
        for t in range(1, t_max + 1):
            nxt = X[succ[:, 0]]
            for j in range(1, succ.shape[1]):
                nxt = nxt + X[succ[:, j]]
            X = nxt
            P[t] += int(sum(X[cols, np.arange(cols.size)]))
    return P


def count_periodic_exact(h: HashimotoOperator, t_max: int) -> WalkCounts:
    """Exact ``P_t = tr Y^t`` for ``t = 1..t_max`` as Python integers."""
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    # every entry of Y^t is at most (d-1)^t and the trace at most 2E (d-1)^t
    if h.n_directed * (h.d - 1) ** t_max < _INT64_LIMIT:
        P = _count_sparse(h, t_max)
    else:
        P = _count_blocks(h, t_max)
    return WalkCounts(t_max, P)


def brute_force_count(g: RegularGraph, t: int) -> int:
    """Enumerate nb closed walks of length ``t`` directly from adjacency lists."""
    if t < 1:
        raise ValueError("t must be >= 1")
    cost = (g.d - 1) ** t * g.V * g.d
    if t > BRUTE_FORCE_MAX_T or cost > BRUTE_FORCE_BUDGET:
        raise BudgetExceededError(
            f"enumeration of t={t} on V={g.V}, d={g.d} exceeds the budget"
        )
    nbrs = g.neighbors()
    total = 0

    def extend(first: tuple[int, int], prev: int, cur: int, steps: int) -> int:
        # walk so far ends with directed edge prev -> cur after `steps` edges
        if steps == t:
            u, v = first
            return int(cur == u and v != prev)
        found = 0
        for nxt in nbrs[cur]:
            if nxt != prev:
                found += extend(first, cur, nxt, steps + 1)
        return found

    for u in range(g.V):
        for v in nbrs[u]:
            total += extend((u, v), u, v, 1)
    return total


def trace_power_spectral(s, t: int, V: int, E: int, d: int) -> float:
    """``tr Y^t`` from the adjacency spectrum (floating point)."""
    q = d - 1.0
    amp = q ** (t / 2)
    osc = float(np.sum(np.cos(t * np.asarray(s.phi))))
    # eigenvalues below -2 sqrt(d-1) pick up a sign (-1)^t
    hyp = float(np.sum(np.asarray(s.rc_sign, dtype=float) ** t * np.cosh(t * np.asarray(s.psi))))
    return q**t + 2.0 * amp * (hyp + osc) + 1.0 + (E - V) * (1 + (-1) ** t)


def verify_bass_identity(g: RegularGraph, s_values) -> float:
    """Max relative residual of ``det(I - sY) = (1-s^2)^(E-V) det((1+(d-1)s^2) I - sA)``."""
    if g.V > BASS_MAX_V:
        raise BudgetExceededError(f"Bass check limited to V <= {BASS_MAX_V}, got {g.V}")
    h = build_hashimoto(g)
    Y = h.matrix(np.float64).toarray()
    A = g.adjacency()
    I2 = np.eye(Y.shape[0])
    I1 = np.eye(g.V)
    worst = 0.0
    for s in s_values:
        s = float(s)
        lhs = np.linalg.det(I2 - s * Y)
        rhs = (1 - s * s) ** (g.E - g.V) * np.linalg.det(I1 * (1 + (g.d - 1) * s * s) - s * A)
        scale = max(abs(lhs), abs(rhs))
        if scale == 0.0:
            continue
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def walk_counts_csv(counts: WalkCounts) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "P_t", "C_t"])
    for t in sorted(counts.P):
        p = counts.P[t]
        w.writerow([t, str(p), repr(p / (2 * t))])
    return buf.getvalue()


def max_int64_safe_t(n_directed: int, d: int) -> int:
    """Largest t for which int64 arithmetic is exact in :func:`count_periodic_exact`."""
    if d <= 2:
        return 10**9
    return int(math.floor(math.log(_INT64_LIMIT / n_directed) / math.log(d - 1)))
