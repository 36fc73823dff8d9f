"""Acceptance criteria 1-12, each reported as one PASS/FAIL line."""
import functools
import random
import time
from fractions import Fraction

import numpy as np

from conftest import ACCEPTANCE_LINES
from dtasep.dpp import BiorthSystem, BiorthogonalKernel, multipoint_prob_kernel
from dtasep.drsk import BitMatrix, drsk_forward, drsk_inverse
from dtasep.dynamics import Rates, multipoint_prob_oracle, simulate_many
from dtasep.hitting import HittingKernel
from dtasep.operators import det_equality_check
from dtasep.report import Tally
from dtasep.scalars import FLOAT, RATIONAL
from dtasep.verify import (P3, P4, Q3, Q4, Y_BY_N, check_biorthogonality, check_bvp, check_dual_cauchy,
                           check_g_identity, check_intertwining, check_kernel_identity, check_lambda_inverse,
                           check_m_matrix, check_polynomiality, random_augmented_array, random_queries, rng_for)

from test_drsk import WORKED_P, WORKED_Q, WORKED_W

Q_UNORDERED = (Fraction(3), Fraction(3, 2), Fraction(2))
QUERIES_PER_INSTANCE = 20


def report(number: int, title: str, results, extra: str = "") -> bool:
    ok = all(r.passed for r in results)
    parts = []
    for r in results:
        tol = "exact" if r.tol is None else f"tol {r.tol:g}"
        part = f"{r.name}: {r.cases} cases, max |diff| {float(r.diff):.3g}, {tol}"
        if not r.passed:
            part += f" ({r.detail})"
        parts.append(part)
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}  {title}  | " + " | ".join(parts)
    if extra:
        line += f" | {extra}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


@functools.cache
def fredholm_suite(q: tuple, routes: tuple) -> tuple:
    """Every (N, t, query, route, backend) run with its oracle value and wall time."""
    start = time.perf_counter()
    runs = []
    rng = rng_for(f"acceptance-{q}")
    for N in (1, 2, 3):
        y = Y_BY_N[N]
        exact_rates = Rates(P3[:3], q[:N])
        for t in (1, 2, 3):
            for query in random_queries(N, t, y, QUERIES_PER_INSTANCE, rng):
                exact = multipoint_prob_oracle(y, exact_rates.truncated(t, N), t, query)
                for route in routes:
                    for backend in (FLOAT, RATIONAL):
                        res = multipoint_prob_kernel(y, Rates(P3, q, backend).truncated(t, N), t, query, route)
                        runs.append(((N, t, query, route, backend), exact, res))
    return tuple(runs), time.perf_counter() - start


def oracle_agreement(name: str, runs) -> list:
    floats = Tally(f"{name}.float", tol=1e-10)
    exacts = Tally(f"{name}.rational")
    for (N, t, query, route, backend), exact, res in runs:
        where = f"N={N}, t={t}, {route}, query={query}"
        if backend == FLOAT:
            floats.add(res.value, float(exact), where)
        else:
            exacts.require(res.stabilized, f"{where}: window did not stabilize")
            exacts.add(res.value, exact, where)
    return [floats.result(), exacts.result()]


def test_criterion_1_fredholm_matches_oracle():
    runs, wall = fredholm_suite(Q3, ("biorthogonal", "hitting"))
    assert report(1, "multipoint law, both routes vs enumeration", oracle_agreement("ordered", runs),
                  f"{wall:.1f} s")


def test_criterion_2_unordered_rates_hitting_route():
    runs, wall = fredholm_suite(Q_UNORDERED, ("hitting",))
    assert report(2, "unordered q, hitting route vs enumeration", oracle_agreement("unordered", runs),
                  f"{wall:.1f} s")


def test_criterion_3_drsk_bijection():
    trips = Tally("drsk.round_trip_3x4")
    for bits in range(2 ** 12):
        w = BitMatrix.from_int(bits, 3, 4)
        P, Q = drsk_forward(w)
        trips.require(drsk_inverse(P, Q, 3, 4) == w, f"bits={bits}")
    worked = Tally("drsk.worked_example")
    P, Q = drsk_forward(WORKED_W)
    worked.require(P == WORKED_P, "P")
    worked.require(Q == WORKED_Q, "Q")
    worked.require(drsk_inverse(P, Q, 3, 4) == BitMatrix(WORKED_W), "inverse")
    assert report(3, "dRSK bijection", [trips.result(), worked.result()])


def test_criterion_4_dual_cauchy():
    assert report(4, "dual Cauchy residual", [check_dual_cauchy("full")])


def test_criterion_5_lambda_inverse_and_intertwining():
    assert report(5, "Lambda inverse and intertwining, N <= 4",
                  [check_lambda_inverse("full", 4), check_intertwining("full", 4)])


def test_criterion_6_biorthogonality_and_m_matrix():
    assert report(6, "biorthogonality and triangular M", [check_biorthogonality("full"), check_m_matrix("full")])


def test_criterion_7_g_identity():
    assert report(7, "G by sums equals G by the killed walk", [check_g_identity("full")])


def test_criterion_8_bvp():
    assert report(8, "boundary value problem and polynomiality", [check_bvp("full"), check_polynomiality("full")])


def test_criterion_9_kernel_routes_agree():
    rng = rng_for("kernel-identity-float")
    floats = Tally("hitting.kernel_identity_float", tol=1e-12)
    kernels = {}
    for N in (1, 2, 3):
        y = Y_BY_N[N]
        for t in (1, 2, 3):
            rates = Rates(P3, Q3, FLOAT)
            kernels[(N, t)] = (BiorthogonalKernel(BiorthSystem(y, rates, t)), HittingKernel(y, rates, t), y)
    keys = sorted(kernels)
    for _ in range(100):
        N, t = rng.choice(keys)
        bio, hit, y = kernels[(N, t)]
        m, n = rng.randint(1, N), rng.randint(1, N)
        x, xp = (rng.randint(y[-1] - N - 3, y[0] + t + 1) for _ in range(2))
        floats.add(hit(m, x, n, xp), bio(m, x, n, xp), f"N={N}, t={t}, K({m},{x};{n},{xp})")
    assert report(9, "hitting kernel equals biorthogonal kernel", [check_kernel_identity("full"), floats.result()])


def test_criterion_10_monte_carlo():
    start = time.perf_counter()
    N, t, R = 3, 3, 100_000
    y = Y_BY_N[N]
    rates = Rates(P3, Q3)
    finals = simulate_many(y, rates, t, R, seed=20240)
    tally = Tally("simulation.within_4_se")
    for query in random_queries(N, t, y, QUERIES_PER_INSTANCE, rng_for("acceptance-mc")):
        exact = float(multipoint_prob_kernel(y, rates, t, query).value)
        hits = np.ones(R, dtype=bool)
        for k, s in query:
            hits &= finals[:, k - 1] >= s
        freq = float(hits.mean())
        se = (exact * (1 - exact) / R) ** 0.5
        tally.require(abs(freq - exact) <= 4 * se, f"query={query}: freq {freq:.5f} vs {exact:.5f}")
    wall = time.perf_counter() - start
    runtime = Tally("simulation.runtime_under_30s")
    runtime.require(wall < 30, f"{wall:.1f} s")
    assert report(10, "Monte Carlo frequencies vs Fredholm values", [tally.result(), runtime.result()],
                  f"{wall:.1f} s")


def test_criterion_11_det_equality():
    rng = random.Random(11)
    tally = Tally("operators.det_equality")
    nonzero = Tally("operators.det_equality_nonzero")
    for i in range(100):
        N = 1 + i % 4
        arr = random_augmented_array(rng, N)
        res = det_equality_check(arr, Rates(P4, Q4[:N]))
        nonzero.require(res.interlacing_ok and res.lhs != 0, f"instance {i}")
        tally.add(res.lhs, res.rhs, f"instance {i}")
    assert report(11, "determinant equality on interlacing arrays", [tally.result(), nonzero.result()])


def test_criterion_12_window_stabilization():
    tally = Tally("dpp.window_growth", tol=1e-12)
    for q, routes in ((Q3, ("biorthogonal", "hitting")), (Q_UNORDERED, ("hitting",))):
        runs, _ = fredholm_suite(q, routes)
        for key, _, res in runs:
            (_, last), (_, prev) = res.history[-1], res.history[-2]
            tally.add(float(abs(last - prev)), 0.0, str(key))
    assert report(12, "Fredholm window stabilization", [tally.result()])
