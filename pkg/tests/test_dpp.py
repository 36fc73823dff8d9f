import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from dtasep.dpp import (BiorthSystem, BiorthogonalKernel, TriangularArray, arrays_over, default_lower,
                        event_thresholds, fredholm_det, fredholm_table_det, left_edge_marginal, m_matrix,
                        m_matrix_closed, make_kernel, multipoint_prob_kernel, psi_top, psi_top_convolution,
                        tabulate_kernel)
from dtasep.dynamics import Rates, multipoint_prob_oracle
from dtasep.operators import q_range, transition_kernel, transition_support
from dtasep.scalars import FLOAT
from dtasep.verify import P3, P4, Q3, Q4, Y_BY_N, random_ordered_rates

RATES = Rates(P3, Q3)


def test_triangular_array():
    arr = TriangularArray(((1,), (2, 0), (4, 1, -1)))
    assert arr.left_edge() == (1, 0, -1)
    with pytest.raises(ValueError):
        TriangularArray(((3,), (2, 0)))
    with pytest.raises(ValueError):
        TriangularArray(((1,), (2,)))
    # (b_1 - b_2) choices for the single entry above a two-element row
    assert len(arrays_over((4, 1))) == 3
    assert all(a.bottom() == (5, 2, 0) for a in arrays_over((5, 2, 0)))


def test_psi_identity_and_convolution():
    y = (3, 1, -2)
    for x in range(-6, 6):
        assert psi_top(3, x, y, RATES, 0, 0) == int(x == y[-1])
    for k in (1, 2, 3):
        for x in range(-8, 8):
            assert psi_top(k, x, y, RATES, 0, 3) == psi_top_convolution(k, x, y, RATES, 0, 3)


def test_m_matrix_small_cases():
    y = (2,)
    M = m_matrix(y, RATES.truncated(2, 1), 0, 2)
    assert M == [[Q3[0] ** 2 * (1 + P3[0] * Q3[0]) * (1 + P3[1] * Q3[0])]]
    y = Y_BY_N[3]
    M = m_matrix(y, RATES, 0, 3)
    assert M == m_matrix_closed(y, RATES, 0, 3)
    assert all(M[i][j] == 0 for i in range(3) for j in range(i))
    assert all(M[i][i] != 0 for i in range(3))


@settings(max_examples=25)
@given(st.integers(0, 2 ** 32), st.integers(1, 3), st.integers(0, 3))
def test_m_matrix_random(seed, N, t):
    rng = random.Random(seed)
    rates = random_ordered_rates(rng, N, t)
    y = tuple(sorted(rng.sample(range(-5, 6), N), reverse=True))
    assert m_matrix(y, rates, 0, t) == m_matrix_closed(y, rates, 0, t)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_biorthogonality(N):
    system = BiorthSystem(Y_BY_N[N], RATES, 2)
    for n in range(1, N + 1):
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                assert system.pairing(n, i, j) == int(i == j)


def test_biorthogonal_system_needs_ordered_rates():
    with pytest.raises(ValueError):
        BiorthSystem((1, -1), Rates(P3, (Fraction(2), Fraction(3, 2))), 1)


def test_kernel_same_level_has_no_q_term():
    system = BiorthSystem(Y_BY_N[3], RATES, 2)
    K = BiorthogonalKernel(system)
    for x, xp in [(0, 1), (2, -1), (3, 3)]:
        assert K(2, x, 2, xp) == sum(system.psi(2, i, x) * system.phi(2, i, xp) for i in (1, 2))
        assert K(1, x, 3, xp) == -q_range(2, 3, x, xp, system.rates) + sum(
            system.psi(1, i, x) * system.phi(3, i, xp) for i in (1, 2, 3))


def test_trivial_events():
    y = Y_BY_N[2]
    assert multipoint_prob_kernel(y, RATES, 2, []).value == 1
    assert multipoint_prob_kernel(y, RATES, 2, [(1, y[0]), (2, y[1] - 3)]).value == 1
    assert multipoint_prob_kernel(y, RATES, 2, [(2, y[1] + 3)]).value == 0


def test_single_particle_one_step():
    p, q = P3[0], Q3[0]
    for route in ("biorthogonal", "hitting"):
        res = multipoint_prob_kernel((4,), Rates((p,), (q,)), 1, [(1, 5)], route)
        assert res.value == p * q / (1 + p * q)


def test_step_initial_data_both_routes():
    y = (-1, -2, -3)
    rates = Rates(P3[:2], Q3)
    for query in ([(1, 0)], [(2, 0)], [(1, 1), (3, -2)], [(2, -1), (3, -2)]):
        exact = multipoint_prob_oracle(y, rates, 2, query)
        for route in ("biorthogonal", "hitting"):
            assert multipoint_prob_kernel(y, rates, 2, query, route).value == exact


def test_two_particle_float_matches_oracle():
    y = Y_BY_N[2]
    rates = Rates(P3[:2], Q3[:2], FLOAT)
    for query in ([(1, 2)], [(2, 0)], [(1, 3), (2, 0)], [(1, 2), (2, 1)]):
        val = multipoint_prob_kernel(y, rates, 2, query).value
        assert abs(val - multipoint_prob_oracle(y, rates, 2, query)) < 1e-10


def test_window_growth_and_history():
    y = Y_BY_N[3]
    kernel = make_kernel(y, RATES, 3)
    res = fredholm_det(kernel, [(1, 4), (3, -1)], y, 3)
    assert res.stabilized and res.history[-1][1] == res.history[-2][1] == res.value
    assert res.history[0][0] == default_lower(y, 3)
    assert [a - b for (a, _), (b, _) in zip(res.history, res.history[1:])] == [5] * (len(res.history) - 1)
    # a window fixed far to the left gives the same value
    assert fredholm_det(kernel, [(1, 4), (3, -1)], y, 3, lower=-20).value == res.value


@settings(max_examples=20)
@given(st.sampled_from([(1, 4), (2, 1), (3, -1)]), st.fractions(min_value=Fraction(1, 3), max_value=3))
def test_gauge_invariance(query, c):
    y = Y_BY_N[3]
    kernel = make_kernel(y, RATES, 2)
    uppers = event_thresholds([query], 3)
    table = tabulate_kernel(kernel, uppers, default_lower(y, 2), kernel.backend)
    conj = [[table.matrix[a][b] * c ** (table.points[a][1] - table.points[b][1]) for b in range(len(table.points))]
            for a in range(len(table.points))]
    assert fredholm_table_det(type(table)(table.points, conj, table.backend, table.lower, table.uppers)) \
        == fredholm_table_det(table)


@pytest.mark.parametrize("N, t", [(1, 2), (2, 1), (2, 2), (3, 1)])
def test_array_marginal_is_the_transition_kernel(N, t):
    y = Y_BY_N[N]
    rates = Rates(P4, Q4[:N]) if N == 3 else RATES
    marg = left_edge_marginal(y, rates, t)
    for yp in transition_support(y, t):
        assert marg.get(yp, 0) == transition_kernel(y, yp, rates.truncated(t, N), 0, t)
