import random
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, strategies as st

from dtasep.combinatorics import schur
from dtasep.dynamics import Rates, enumerate_transition
from dtasep.operators import (AugmentedArray, Factor, OperatorSpec, det_equality_check, entry, lambda_inverse_kernel,
                              lambda_kernel, q_range, qbar_range, qdag_range, qinv_range, r_kernel,
                              r_kernel_unnormalized, transition_kernel, transition_support, virtual_q_entry)
from dtasep.paths import lambda_inverse_paths, lambda_paths, r_paths
from dtasep.verify import P3, P4, Q3, Q4, compose_pair, random_augmented_array

RATES = Rates(P3, Q3)


def test_entry_examples():
    assert entry(OperatorSpec.of(("Q", 2)), 3, 1, RATES) == Fraction(1, 4)
    p1, q1 = RATES.p[0], RATES.q[0]
    for x in (-2, 0, 5):
        assert entry(OperatorSpec.of(("Qinv", 1), ("Rstar", 1)), x, x, RATES) == p1 * q1 - 1
    r23 = Rates(P3, (Fraction(2), Fraction(3)))
    assert entry(OperatorSpec.of(("Q", 1), ("Q", 2)), 3, 0, r23) == Fraction(5, 36)
    assert q_range(1, 2, 3, 0, r23) == Fraction(5, 36)


def test_entry_rejects_mixed_directions():
    with pytest.raises(ValueError):
        entry(OperatorSpec.of(("Q", 1), ("Qdag", 2)), 0, 0, RATES)
    with pytest.raises(ValueError):
        Factor("Qbar", 1)
    with pytest.raises(ValueError):
        Factor("P", 1)


def test_range_closed_forms():
    # Qdag chains are complete symmetric polynomials, Qinv chains signed elementary ones
    q = RATES.q
    assert qdag_range(1, 2, 0, 2, RATES) == q[0] ** 2 + q[0] * q[1] + q[1] ** 2
    assert qinv_range(1, 2, 0, 2, RATES) == q[0] * q[1]
    assert qinv_range(1, 2, 0, 1, RATES) == -(q[0] + q[1])
    assert qinv_range(1, 2, 0, 0, RATES) == 1
    # Qbar on a single index is q^(y - x) everywhere
    for x, y in product(range(-3, 4), repeat=2):
        assert qbar_range(2, 2, x, y, RATES) == q[1] ** (y - x)


@given(st.sampled_from([("Q", 1), ("Qdag", 2), ("Qinv", 3), ("R", 1), ("Rstar", 2)]),
       st.sampled_from([("Q", 2), ("Qdag", 3), ("Qinv", 1), ("R", 3), ("Rstar", 1)]),
       st.integers(-4, 4), st.integers(-4, 4), st.integers(-20, 20))
def test_pairs_commute_and_shift(a, b, x, y, c):
    # Q_i and Qdag_j only share an annulus when q_i > q_j
    if {a[0], b[0]} == {"Q", "Qdag"}:
        qi = RATES.q[(a if a[0] == "Q" else b)[1] - 1]
        qj = RATES.q[(a if a[0] == "Qdag" else b)[1] - 1]
        if not qi > qj:
            return
    ab = compose_pair(a, b, x, y, RATES)
    assert ab == compose_pair(b, a, x, y, RATES)
    assert ab == compose_pair(a, b, x + c, y + c, RATES)


@pytest.mark.parametrize("i", [1, 2, 3])
def test_q_inverse(i):
    for x, y in product(range(-4, 5), repeat=2):
        s = sum(q_range(i, i, x, u, RATES) * qinv_range(i, i, u, y, RATES) for u in range(y - 2, y + 2))
        assert s == int(x == y)


def test_virtual_entry_examples():
    r = Rates(P3, (Fraction(2), Fraction(3)))
    assert virtual_q_entry(1, 2, 0, r) == 2
    assert virtual_q_entry(2, 2, 5, r) == 3 ** 5
    assert virtual_q_entry(2, 1, 0, r) == 0
    with pytest.raises(ValueError):
        virtual_q_entry(1, 2, 0, Rates(P3, (Fraction(3), Fraction(2))))
    # q_j^x Q_[j,k](x, y) approaches the virtual entry geometrically fast
    for y in (-1, 0, 2):
        x = 60
        approx = r.q[0] ** x * q_range(1, 2, x, y, r)
        assert abs(approx - virtual_q_entry(1, 2, y, r)) < Fraction(1, 10 ** 9)


def test_one_particle_kernels():
    # with a single level the ranges (1, 1] are empty, so both kernels are the identity
    for m, y in product(range(-3, 4), repeat=2):
        assert lambda_kernel((m + 3,), (y + 3,), RATES, 1) == int(m == y)
        assert lambda_inverse_kernel((y + 3,), (m + 3,), RATES, 1) == int(m == y)
    p = RATES.p[0]
    for mu, lam in product(range(0, 5), repeat=2):
        assert r_kernel_unnormalized((mu,), (lam,), RATES, 0, 1, 1) == int(lam == mu) + p * int(lam == mu + 1)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_path_representations(N):
    rng = random.Random(N)
    for _ in range(15):
        a = sorted((rng.randint(0, 4) for _ in range(N)), reverse=True)
        b = sorted((rng.randint(0, 4) for _ in range(N)), reverse=True)
        assert lambda_kernel(a, b, RATES, N) == lambda_paths(a, b, RATES, N)
        assert lambda_inverse_kernel(a, b, RATES, N) == lambda_inverse_paths(a, b, RATES, N)
        assert r_kernel_unnormalized(a, b, RATES, 0, 2, N) == r_paths(a, b, RATES, 0, 2, N)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_shape_kernel_is_stochastic(N):
    # the Schur ratio turns R into the transition kernel of the shape
    q = RATES.q[:N]
    for mu in product(range(3), repeat=N):
        if list(mu) != sorted(mu, reverse=True):
            continue
        lams = [lam for lam in product(range(6), repeat=N) if list(lam) == sorted(lam, reverse=True)]
        total = sum(schur(lam, q) / schur(mu, q) * r_kernel(mu, lam, RATES, 0, 2, N) for lam in lams)
        assert total == 1


def test_transition_kernel_matches_enumeration():
    rates = Rates(P3[:2], Q3[:2])
    y = (1, -1)
    assert transition_kernel(y, y, rates, 0, 0) == 1
    assert transition_kernel(y, (2, -1), rates, 0, 0) == 0
    law = enumerate_transition(y, rates, 2)
    support = transition_support(y, 2)
    assert set(law) <= set(support)
    for yp in support:
        assert transition_kernel(y, yp, rates, 0, 2) == law.get(yp, 0)
    one = Rates(P3[:1], Q3[:1])
    a = P3[0] * Q3[0]
    assert transition_kernel((0,), (1,), one, 0, 1) == a / (1 + a)


def test_det_equality():
    rng = random.Random(5)
    for N in (1, 2, 3):
        rates = Rates(P4, Q4[:N])
        for _ in range(5):
            res = det_equality_check(random_augmented_array(rng, N), rates)
            assert res.interlacing_ok and res.lhs == res.rhs != 0
    bad = AugmentedArray(((0,), (3, -1)), (5, 0), (-2, 4))
    res = det_equality_check(bad, Rates(P4, Q4[:2]))
    assert not res.interlacing_ok and res.violations and res.lhs == res.rhs == 0
