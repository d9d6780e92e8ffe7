import io
import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regwalks.errors import BudgetExceededError
from regwalks.graphs import generate_regular
from regwalks.spectral import spectral_data
from regwalks.walks import (
    _count_blocks,
    _count_sparse,
    brute_force_count,
    build_hashimoto,
    count_periodic_exact,
    trace_power_spectral,
    verify_bass_identity,
    walk_counts_csv,
)


def test_hashimoto_shapes(k4, petersen):
    for g, n in ((k4, 12), (petersen, 30)):
        h = build_hashimoto(g)
        assert h.n_directed == n
        assert h.successors.shape == (n, 2)
        assert h.successors.size == 2 * g.E * (g.d - 1)


def test_hashimoto_structure(small_random_graphs):
    for g in small_random_graphs:
        h = build_hashimoto(g)
        e = np.arange(h.n_directed)
        assert np.array_equal(h.reversal[h.reversal], e)
        assert np.array_equal(h.origin[h.reversal], h.terminus)
        # successors start where e ends and never reverse it
        assert np.all(h.origin[h.successors] == h.terminus[:, None])
        assert np.all(h.successors != h.reversal[:, None])
        assert np.all(h.matrix().sum(axis=1) == g.d - 1)


def test_exact_counts_known_graphs(k4, petersen):
    c = count_periodic_exact(build_hashimoto(k4), 4)
    assert c.P[3] == 24 and c.P[4] == 24
    c = count_periodic_exact(build_hashimoto(petersen), 5)
    assert (c.P[3], c.P[4], c.P[5]) == (0, 0, 120)


def test_brute_force_oracle(k4, petersen):
    # closed 3-walks cannot backtrack on a simple graph: P_3 = tr A^3
    assert brute_force_count(k4, 3) == 24 == round(np.trace(np.linalg.matrix_power(k4.adjacency(), 3)))
    assert brute_force_count(petersen, 4) == 0
    assert brute_force_count(k4, 2) == 0 and brute_force_count(petersen, 2) == 0


def test_brute_force_budget():
    g = generate_regular(200, 5, seed=1)
    with pytest.raises(BudgetExceededError):
        brute_force_count(g, 14)
    with pytest.raises(BudgetExceededError):
        brute_force_count(generate_regular(10, 3, seed=1), 15)


def test_oracle_equivalence(small_random_graphs):
    for g in small_random_graphs:
        if g.V > 30:
            continue
        c = count_periodic_exact(build_hashimoto(g), 10)
        for t in range(1, 11):
            assert c.P[t] == brute_force_count(g, t), (g.V, g.d, t)


@settings(max_examples=15, deadline=None)
@given(V=st.integers(5, 16), d=st.integers(3, 4), seed=st.integers(0, 10**9), t=st.integers(1, 8))
def test_oracle_equivalence_property(V, d, seed, t):
    if V <= d:
        V = d + 2
    if (V * d) % 2:
        V += 1
    g = generate_regular(V, d, seed)
    assert count_periodic_exact(build_hashimoto(g), t).P[t] == brute_force_count(g, t)


def test_bigint_path_matches_int64_path():
    g = generate_regular(12, 4, seed=5)
    h = build_hashimoto(g)
    assert _count_blocks(h, 12, block=7) == _count_sparse(h, 12)


def test_bigint_beyond_int64():
    g = generate_regular(20, 5, seed=4)
    h = build_hashimoto(g)
    c = count_periodic_exact(h, 40)
    assert c.P[40] > 2**63
    s = spectral_data(g)
    approx = trace_power_spectral(s, 40, g.V, g.E, g.d)
    assert abs(approx - c.P[40]) / c.P[40] < 1e-10


def test_small_t_and_bounds(small_random_graphs):
    for g in small_random_graphs:
        c = count_periodic_exact(build_hashimoto(g), 12)
        assert c.P[1] == 0 and c.P[2] == 0
        A = g.adjacency()
        assert c.P[3] == round(np.trace(A @ A @ A))
        for t, p in c.P.items():
            assert 0 <= p <= 2 * g.E * (g.d - 1) ** (t - 1)
        assert c.C[3] == c.P[3] / 6


def test_trace_power_spectral_known(k4, petersen):
    sk = spectral_data(k4)
    assert trace_power_spectral(sk, 4, 4, 6, 3) == pytest.approx(24.0, rel=1e-8)
    sp = spectral_data(petersen)
    assert trace_power_spectral(sp, 5, 10, 15, 3) == pytest.approx(120.0, rel=1e-8)
    for t in (3, 4):
        assert abs(trace_power_spectral(sp, t, 10, 15, 3)) < 1e-9


def test_trace_power_spectral_odd_parity_term():
    class Empty:
        phi = np.array([])
        psi = np.array([])
        rc_sign = np.array([])
    # with no nontrivial eigenvalues only (d-1)^t + 1 + (E-V)(1+(-1)^t) remains
    assert trace_power_spectral(Empty, 3, V=10, E=15, d=3) == 8 + 1
    assert trace_power_spectral(Empty, 4, V=10, E=15, d=3) == 16 + 1 + 2 * 5


def test_spectral_consistency_random():
    for k, (V, d) in enumerate([(60, 3), (100, 3), (200, 3), (50, 4), (80, 5)]):
        g = generate_regular(V, d, seed=500 + k)
        s = spectral_data(g)
        c = count_periodic_exact(build_hashimoto(g), 30)
        for t in range(3, 31):
            if c.P[t] > 2**53:
                break
            approx = trace_power_spectral(s, t, g.V, g.E, g.d)
            assert abs(approx - c.P[t]) <= 1e-8 * max(c.P[t], 1) + 1e-7


def test_rc_sign_convention():
    # find a graph with an eigenvalue below -2 sqrt(d-1); the sign^t factor matters at odd t
    for seed in range(200):
        g = generate_regular(10, 3, seed=seed)
        s = spectral_data(g)
        if np.any(s.rc_sign < 0):
            break
    else:
        pytest.skip("no graph with a large negative eigenvalue found")
    c = count_periodic_exact(build_hashimoto(g), 9)
    for t in range(3, 10):
        assert trace_power_spectral(s, t, g.V, g.E, g.d) == pytest.approx(c.P[t], abs=1e-7)


@pytest.mark.parametrize("svals", [[0.1, 0.2, 0.3]])
def test_bass_k4(k4, svals):
    assert verify_bass_identity(k4, svals) < 1e-10


def test_bass_petersen_and_zero(petersen, k4):
    assert verify_bass_identity(petersen, [0.05, 0.25]) < 1e-10
    assert verify_bass_identity(k4, [0.0]) == 0.0


def test_bass_budget():
    with pytest.raises(BudgetExceededError):
        verify_bass_identity(generate_regular(52, 3, seed=1), [0.1])


def test_walk_counts_csv(k4):
    text = walk_counts_csv(count_periodic_exact(build_hashimoto(k4), 4))
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [r["P_t"] for r in rows] == ["0", "0", "24", "24"]
    assert float(rows[2]["C_t"]) == 4.0
