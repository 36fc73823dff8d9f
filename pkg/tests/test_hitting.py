from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from dtasep.dpp import BiorthSystem, multipoint_prob_kernel
from dtasep.dynamics import Rates, multipoint_prob_oracle
from dtasep.hitting import (BvpSolution, HittingKernel, bvp_from_phi, bvp_hitting_rep, bvp_residuals, g_function,
                            g_paths, hitting_law, richardson_limit, s_kernel, s_kernel_convolution, sbar_epi,
                            sbar_kernel, sbar_kernel_series)
from dtasep.scalars import FLOAT, prod
from dtasep.verify import P3, P4, Q4, Y4

RATES = Rates(P4, Q4)


def test_s_kernel_examples():
    p1, q1 = P4[0], Q4[0]
    for x in (-3, 0, 4):
        assert s_kernel(1, 1, 0, 1, x, x, RATES) == p1 * q1 - 1
        assert s_kernel(1, 1, 0, 1, x, x + 1, RATES) == q1
        assert s_kernel(1, 1, 0, 1, x, x - 1, RATES) == -p1
        # outside the polynomial degree
        assert s_kernel(1, 1, 0, 1, x, x + 2, RATES) == 0
        assert s_kernel(1, 1, 0, 1, x, x - 2, RATES) == 0
    for x, y in product(range(-3, 4), repeat=2):
        assert s_kernel(1, 3, 0, 2, x, y, RATES) == s_kernel_convolution(1, 3, 0, 2, x, y, RATES)


def test_sbar_single_index():
    for k in (1, 2, 3):
        qk = Q4[k - 1]
        for x, y in product(range(-3, 4), repeat=2):
            assert sbar_kernel(k, k, 0, 0, x, y, RATES) == (qk - 1) * qk ** (y - x)


@pytest.mark.parametrize("j, k, t", [(1, 1, 1), (1, 2, 2), (2, 3, 1), (1, 3, 3)])
def test_sbar_series_matches_residues(j, k, t):
    rates = Rates((0.25, 0.2, 0.125), (1.5, 2.0, 3.0), FLOAT)
    for x, y in product(range(-3, 4), repeat=2):
        a = sbar_kernel_series(j, k, 0, t, x, y, rates)
        b = sbar_kernel(j, k, 0, t, x, y, rates)
        assert abs(a - b) <= 1e-12 * max(1.0, abs(b))


def test_sbar_series_needs_convergence():
    with pytest.raises(ValueError):
        sbar_kernel_series(1, 1, 0, 1, 0, 0, Rates((1.0,), (1.5,), FLOAT))


def test_hitting_law_basics():
    y = (2, 0, -3)
    law = hitting_law(5, y, 3, RATES)
    assert law.hits == {(0, 5): 1} and law.survival == 0
    step = (-1, -2, -3)
    for z in range(-6, 0):
        law = hitting_law(z, step, 3, RATES)
        assert not law.hits and law.survival == 1
    for z in range(-5, 3):
        assert hitting_law(z, y, 3, RATES).total() == 1


def test_step_data_epigraph_kernel():
    N = 3
    step = tuple(-i for i in range(1, N + 1))
    rates = Rates(P4[:2], Q4[:N])
    for n in (1, 2, 3):
        norm = prod(v - 1 for v in rates.q[:n])
        for x, yp in product(range(-6, 3), repeat=2):
            expected = sbar_kernel(1, n, 0, 2, x, yp, rates) / norm if x > step[0] else 0
            assert sbar_epi(n, 0, 2, x, yp, step, rates) == expected


def test_kernel_at_time_zero():
    y = (2, 0, -3)
    rates = Rates((), Q4[:3])
    for k, s in product((1, 2, 3), range(-5, 4)):
        assert multipoint_prob_kernel(y, rates, 0, [(k, s)], "hitting").value == int(y[k - 1] >= s)


def test_hitting_kernel_rejects_equal_rates():
    with pytest.raises(ValueError):
        HittingKernel((1, -1), Rates(P3[:1], (Fraction(2), Fraction(2))), 1)


def test_equal_rates_by_richardson():
    y, query = (1, -1), [(1, 2), (2, 0)]
    rates = Rates(P3[:2], (Fraction(2), Fraction(2)))
    est, spread = richardson_limit(lambda r: multipoint_prob_kernel(y, r, 2, query, "hitting").value, rates)
    exact = multipoint_prob_oracle(y, rates, 2, query)
    assert abs(est - exact) < Fraction(1, 10 ** 20)
    assert spread < Fraction(1, 10 ** 9)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_bvp_conditions(n):
    y = Y4[:n]
    for k in range(n):
        sol = BvpSolution(n, k, y, RATES)
        for kind, vals in bvp_residuals(sol, range(min(y) - 5, max(y) + 6)).items():
            assert all(v == 0 for v in vals), kind
        q, Y = sol.anchor(k)
        assert sol(k, Y + 2) == q ** 2


def test_bvp_hitting_representation():
    n, k = 2, 1
    y = Y4[:n]
    sol = BvpSolution(n, k, y, RATES)
    for level in (0, 1):
        Y = y[n - level - 1]
        for x in range(Y - 6, Y + 1):
            assert bvp_hitting_rep(n, k, level, x, y, RATES) == sol(level, x)
    # the hitting probabilities of the right-moving walk sum to at most 1
    n = 4
    y = Y4
    for x in range(y[-1] - 4, y[-1] + 1):
        total = sum(bvp_hitting_rep(n, k, 0, x, y, RATES) * prod(RATES.q[n - j - 1] - 1 for j in range(0, k))
                    for k in range(n))
        assert 0 <= total <= 1


def test_bvp_from_biorthogonal_functions():
    n = 3
    y = Y4[:n]
    rates = Rates(P4[:2], Q4[:n])
    system = BiorthSystem(y, rates, 2)
    for k in range(n):
        sol = BvpSolution(n, k, y, rates)
        for level in range(k + 1):
            for x in range(min(y) - 3, max(y) + 4):
                assert bvp_from_phi(system, n, k, level, x) == sol(level, x)


def test_g_base_case_and_paths():
    y = Y4
    for n in (2, 3, 4):
        yn = y[:n]
        for k in range(n):
            j = n - k - 1
            Y, q = yn[n - k - 1], Q4[n - k - 1]
            for z1, z2 in product(range(-5, 6), repeat=2):
                assert g_function(n, j, k, z1, z2, yn, RATES) == (q ** (z2 - z1) if z1 > Y else 0)
        for z1 in range(yn[-1] - 2, yn[0] + 4):
            for z2 in range(yn[-1] - 4, yn[-1] + 1):
                assert g_paths(n, z1, z2, yn, RATES) == g_function(n, 0, 0, z1, z2, yn, RATES, "hitting")


@settings(max_examples=40)
@given(st.integers(1, 4), st.data())
def test_g_sum_and_hitting_modes_agree(n, data):
    unordered = Rates(P4, (Fraction(5, 2), Fraction(2), Fraction(4), Fraction(3)))
    rates = data.draw(st.sampled_from([RATES, unordered]))
    y = Y4[:n]
    k = data.draw(st.integers(0, n - 1))
    j = data.draw(st.integers(0, n - k - 1))
    z1 = data.draw(st.integers(y[-1] - 5, y[0] + 5))
    z2 = data.draw(st.integers(y[-1] - 5, y[0] + 5))
    assert g_function(n, j, k, z1, z2, y, rates, "sum") == g_function(n, j, k, z1, z2, y, rates, "hitting")
