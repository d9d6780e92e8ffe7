"""Random d-regular simple connected graphs: sampling, validation, text I/O.

Randomness comes from ``numpy.random.default_rng(seed)`` (PCG64), so a graph
is fully determined by ``(V, d, seed)``.

Two samplers are available:

``pairing``
    Configuration model.  ``d`` stubs per vertex are matched by a uniformly
    random permutation and the whole matching is rejected if it contains a
    loop or a repeated edge.  Conditioned on acceptance the result is exactly
    uniform over simple d-regular multigraph-free graphs.  The acceptance rate
    is about ``exp(-(d*d - 1)/4)``, which is fine for small d only.

``steger_wormald``
    Sequential pairing that only ever joins suitable stub pairs, restarting
    when it gets stuck.  Asymptotically uniform for slowly growing d and fast
    for the degrees used here (d up to ~20).

``auto`` picks ``pairing`` for ``d <= 5`` and ``steger_wormald`` above.
Disconnected samples are rejected in both cases.
"""
from __future__ import annotations

import io
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    GenerationError,
    GraphInvariantError,
    GraphParseError,
    InvalidParametersError,
)

__all__ = [
    "RegularGraph",
    "generate_regular",
    "check_regular_simple_connected",
    "validate_graph",
    "load_graph",
    "serialize_graph",
    "complete_graph",
    "petersen_graph",
    "RETRY_BUDGET",
    "PAIRING_MAX_DEGREE",
]

RETRY_BUDGET = 10_000
PAIRING_MAX_DEGREE = 5


def _canonical_edges(edges) -> np.ndarray:
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    order = np.lexsort((hi, lo))
    out = np.column_stack([lo[order], hi[order]])
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class RegularGraph:
    """Undirected graph on vertices ``0..V-1`` with nominal degree ``d``.

    Construction does not enforce regularity; use
    :func:`check_regular_simple_connected` or :func:`validate_graph`.  Edges
    are stored canonically as an ``(E, 2)`` read-only array with ``i < j``,
    sorted lexicographically.
    """

    V: int
    d: int
    edges: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "edges", _canonical_edges(self.edges))

    @property
    def E(self) -> int:
        return int(self.edges.shape[0])

    def __eq__(self, other):
        if not isinstance(other, RegularGraph):
            return NotImplemented
        return (
            self.V == other.V
            and self.d == other.d
            and np.array_equal(self.edges, other.edges)
        )

    def __hash__(self):
        return hash((self.V, self.d, self.edges.tobytes()))

    def adjacency(self) -> np.ndarray:
        """Dense float64 adjacency matrix (multi-edges add up)."""
        A = np.zeros((self.V, self.V))
        np.add.at(A, (self.edges[:, 0], self.edges[:, 1]), 1.0)
        np.add.at(A, (self.edges[:, 1], self.edges[:, 0]), 1.0)
        return A

    def neighbors(self) -> list[list[int]]:
        nbrs: list[list[int]] = [[] for _ in range(self.V)]
        for i, j in self.edges.tolist():
            nbrs[i].append(j)
            nbrs[j].append(i)
        return nbrs

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.V)


def _is_connected(V: int, edges: np.ndarray) -> bool:
    if V == 0:
        return False
    m = coo_matrix(
        (np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(V, V)
    )
    n_comp, _ = connected_components(m, directed=False)
    return n_comp == 1


def _violations(g: RegularGraph) -> list[tuple[str, str]]:
    out = []
    e = g.edges
    if g.V <= 0 or g.d <= 0:
        return [("parameters", f"V={g.V}, d={g.d} must be positive")]
    if (g.V * g.d) % 2:
        out.append(("parity", f"V*d = {g.V * g.d} is odd"))
    if g.E != g.V * g.d // 2:
        out.append(("edge-count", f"E = {g.E}, expected V*d/2 = {g.V * g.d // 2}"))
    if len(e) and (e.min() < 0 or e.max() >= g.V):
        out.append(("labels", "vertex label outside 0..V-1"))
        return out
    if np.any(e[:, 0] == e[:, 1]):
        out.append(("simple", "self-loop present"))
    if len(e) > 1 and np.any(np.all(e[1:] == e[:-1], axis=1)):
        out.append(("simple", "parallel edge present"))
    deg = g.degrees()
    if np.any(deg != g.d):
        bad = int(np.flatnonzero(deg != g.d)[0])
        out.append(("degree", f"vertex {bad} has degree {int(deg[bad])}, expected {g.d}"))
    if not _is_connected(g.V, e):
        out.append(("connected", "graph has more than one component"))
    return out


def check_regular_simple_connected(g: RegularGraph) -> bool:
    return not _violations(g)


def validate_graph(g: RegularGraph) -> RegularGraph:
    """Return ``g`` unchanged or raise :class:`GraphInvariantError`."""
    bad = _violations(g)
    if bad:
        name, msg = bad[0]
        raise GraphInvariantError(name, msg)
    return g


def _check_params(V: int, d: int) -> None:
    if d < 3:
        raise InvalidParametersError(f"degree d={d} must be >= 3")
    if V <= d:
        raise InvalidParametersError(f"need V > d, got V={V}, d={d}")
    if (V * d) % 2:
        raise InvalidParametersError(f"V*d = {V * d} must be even")


def _pairing_attempt(V: int, d: int, rng: np.random.Generator) -> np.ndarray | None:
    stubs = np.repeat(np.arange(V, dtype=np.int64), d)
    pairs = rng.permutation(stubs).reshape(-1, 2)
    lo = pairs.min(axis=1)
    hi = pairs.max(axis=1)
    if np.any(lo == hi):
        return None
    key = lo * V + hi
    if np.unique(key).size != key.size:
        return None
    return np.column_stack([lo, hi])


def _steger_wormald_attempt(V: int, d: int, rng: np.random.Generator) -> np.ndarray | None:
    edges: set[tuple[int, int]] = set()
    stubs = np.repeat(np.arange(V, dtype=np.int64), d)
    while stubs.size:
        leftover: dict[int, int] = defaultdict(int)
        perm = rng.permutation(stubs).tolist()
        for s1, s2 in zip(perm[::2], perm[1::2]):
            if s1 > s2:
                s1, s2 = s2, s1
            if s1 != s2 and (s1, s2) not in edges:
                edges.add((s1, s2))
            else:
                leftover[s1] += 1
                leftover[s2] += 1
        if leftover and not _has_suitable_pair(edges, leftover):
            return None
        stubs = np.array(
            [v for v, k in sorted(leftover.items()) for _ in range(k)], dtype=np.int64
        )
    return np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)


def _has_suitable_pair(edges, leftover) -> bool:
    nodes = sorted(leftover)
    for a_idx, a in enumerate(nodes):
        for b in nodes[a_idx + 1:]:
            if (a, b) not in edges:
                return True
    return False


def generate_regular(
    V: int, d: int, seed: int, *, sampler: str = "auto", max_attempts: int = RETRY_BUDGET
) -> RegularGraph:
    """Sample a simple connected d-regular graph on V vertices.

    Each rejected matching (loop, multi-edge, stuck, or disconnected) counts
    against ``max_attempts``; exhausting it raises :class:`GenerationError`.
    """
    _check_params(V, d)
    if sampler == "auto":
        sampler = "pairing" if d <= PAIRING_MAX_DEGREE else "steger_wormald"
    if sampler == "pairing":
        attempt = _pairing_attempt
    elif sampler == "steger_wormald":
        attempt = _steger_wormald_attempt
    else:
        raise InvalidParametersError(f"unknown sampler {sampler!r}")

    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        edges = attempt(V, d, rng)
        if edges is None or not _is_connected(V, edges):
            continue
        return RegularGraph(V, d, edges)
    raise GenerationError(
        f"no simple connected {d}-regular graph on {V} vertices after "
        f"{max_attempts} attempts (sampler={sampler}, seed={seed})"
    )


def serialize_graph(g: RegularGraph) -> bytes:
    buf = io.StringIO()
    buf.write(f"{g.V} {g.d}\n")
    for i, j in g.edges.tolist():
        buf.write(f"{i} {j}\n")
    return buf.getvalue().encode("utf-8")


def load_graph(text: bytes | str) -> RegularGraph:
    """Parse the ``"V d"`` + edge-list format and validate the result."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise GraphParseError(f"not valid UTF-8: {exc}") from None

    header = None
    edges: list[tuple[int, int]] = []
    lineno = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphParseError(f"expected two integers, got {line!r}", lineno)
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphParseError(f"expected two integers, got {line!r}", lineno) from None
        if header is None:
            if a <= 0 or b <= 0:
                raise GraphParseError(f"header 'V d' must be positive, got {line!r}", lineno)
            header = (a, b)
            continue
        V = header[0]
        if not (0 <= a < V and 0 <= b < V):
            raise GraphParseError(f"vertex label outside 0..{V - 1}: {line!r}", lineno)
        edges.append((a, b))

    if header is None:
        raise GraphParseError("missing 'V d' header", lineno or 1)
    V, d = header
    if (V * d) % 2:
        raise GraphParseError(f"V*d = {V * d} is odd", 1)
    if len(edges) != V * d // 2:
        raise GraphParseError(
            f"found {len(edges)} edges, expected V*d/2 = {V * d // 2}", lineno
        )
    return validate_graph(RegularGraph(V, d, np.array(edges, dtype=np.int64).reshape(-1, 2)))


def complete_graph(n: int) -> RegularGraph:
    iu = np.triu_indices(n, k=1)
    return RegularGraph(n, n - 1, np.column_stack(iu))


def petersen_graph() -> RegularGraph:
    """Outer 5-cycle, five spokes, inner pentagram."""
    edges = []
    for i in range(5):
        edges.append((i, (i + 1) % 5))
        edges.append((i, i + 5))
        edges.append((5 + i, 5 + (i + 2) % 5))
    return RegularGraph(10, 3, edges)
