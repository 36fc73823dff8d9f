"""Identity suite: every structural invariant of the package as a runnable check.

Each manifest entry names one invariant and a function that evaluates it at
level ``"quick"`` (small, a few seconds) or ``"full"`` (the sizes quoted in
the statement). The exact backend is used wherever equality is claimed, so
those checks compare with ``==``.
"""
from __future__ import annotations

import functools
import random
import time
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iproduct
from typing import Callable

import numpy as np

from . import core
from .combinatorics import (chain_to_tableau, column_strict_tableaux, dual_cauchy_residual,
                            partitions, partitions_in_box, schur, schur_tableaux, tableau_to_chain)
from .dpp import (BiorthSystem, BiorthogonalKernel, fredholm_det, fredholm_table_det, left_edge_marginal,
                  m_matrix, m_matrix_closed, tabulate_kernel, event_thresholds, default_lower)
from .drsk import BitMatrix, drsk_forward, drsk_inverse, left_edge_update
from .dynamics import ParticleConfig, Rates, enumerate_transition, run
from .hitting import (BvpSolution, HittingKernel, bvp_residuals, g_function, sbar_epi, sbar_kernel,
                      sbar_kernel_series)
from .operators import (AugmentedArray, Factor, OperatorSpec, _decreasing_tuples, entry, lambda_inverse_kernel,
                        lambda_kernel, q_range, qdag_range, qinv_range, r_kernel_unnormalized, r_range,
                        rstar_range, transition_kernel, transition_support)
from .paths import lambda_chains, lambda_inverse_paths, lambda_paths, r_paths
from .report import CheckResult, Tally
from .scalars import FLOAT, RATIONAL, prod

LEVELS = ("quick", "full")

# Reference instances. The three-particle rates sit on the boundary p_2 q_3 = 1.
P3 = (Fraction(1, 4), Fraction(1, 3), Fraction(1, 5))
Q3 = (Fraction(3, 2), Fraction(2), Fraction(3))
Y_BY_N = {1: (1,), 2: (1, -1), 3: (2, 0, -3)}
# four particles need a fourth rate above 3, so the time rates are smaller
P4 = (Fraction(1, 5), Fraction(1, 6), Fraction(1, 7), Fraction(1, 9))
Q4 = (Fraction(3, 2), Fraction(2), Fraction(3), Fraction(4))
Y4 = (3, 1, 0, -2)


def rng_for(name: str, seed: int = 0) -> random.Random:
    return random.Random(f"{seed}:{name}")


def random_rational(rng: random.Random, lo: Fraction, hi: Fraction, den: int = 12) -> Fraction:
    a, b = int(lo * den), int(hi * den)
    return Fraction(rng.randint(a, b), den)


def random_ordered_rates(rng: random.Random, N: int, t: int) -> Rates:
    """Strictly increasing q > 1 and p with every p q < 1."""
    q, v = [], Fraction(1)
    for _ in range(N):
        v = v + Fraction(rng.randint(1, 8), 4)
        q.append(v)
    p = [Fraction(1, rng.randint(int(q[-1]) + 1, int(q[-1]) + 6)) for _ in range(t)]
    return Rates(tuple(p), tuple(q))


def random_augmented_array(rng: random.Random, N: int, spread: int = 3) -> AugmentedArray:
    """A triangular array with auxiliary entries satisfying the strict interlacing.

    Extended rows (x^(i)_0, ..., x^(i)_{i+1}) are drawn from the bottom level
    up, each entry x^(i-1)_m uniformly in (x^(i)_{m+1}, x^(i)_m].
    """
    bottom = [0]
    for _ in range(N - 1):
        bottom.append(bottom[-1] - rng.randint(1, spread))
    shift = rng.randint(-spread, spread)
    bottom = [v + shift for v in bottom]
    # level N has x_0 = +inf and x_{N+1} = -inf; the auxiliaries of level N come first
    ext = {N: [None] + bottom + [None]}
    for i in range(N, 0, -1):
        row = ext[i]
        new = []
        for m in range(0, i + 1):
            hi, lo = row[m], row[m + 1]
            if hi is None:
                new.append(lo + rng.randint(1, spread))
            elif lo is None:
                new.append(hi - rng.randint(0, spread))
            else:
                new.append(rng.randint(lo + 1, hi))
        ext[i - 1] = new
    rows = tuple(tuple(ext[k][1:k + 1]) for k in range(1, N + 1))
    left = tuple(ext[k - 1][k] for k in range(1, N + 1))
    right = tuple(ext[k - 1][0] for k in range(1, N + 1))
    return AugmentedArray(rows, left, right)


def _pick(level: str, quick, full):
    return quick if level == "quick" else full


# -- combinatorics ------------------------------------------------------------------

def check_chain_round_trip(level: str) -> CheckResult:
    tally = Tally("combinatorics.chain_round_trip")
    max_size = _pick(level, 5, 8)
    for n in range(1, 5):
        for lam in partitions_in_box(n, max_size):
            if lam.size > max_size:
                continue
            for T in column_strict_tableaux(lam, n):
                chain = tableau_to_chain(T, n)
                tally.require(chain_to_tableau(chain) == T, f"{T.rows} over 1..{n}")
    return tally.result()


def check_conjugate_involution(level: str) -> CheckResult:
    tally = Tally("combinatorics.conjugate_involution")
    for m in range(_pick(level, 8, 12) + 1):
        for lam in partitions(m):
            tally.require(lam.conjugate().conjugate() == lam, str(lam))
    return tally.result()


def check_schur_two_sums(level: str) -> CheckResult:
    tally = Tally("combinatorics.schur_two_sums")
    rng = rng_for("schur")
    for n in range(1, 4):
        for _ in range(_pick(level, 1, 3)):
            x = [random_rational(rng, Fraction(-2), Fraction(3)) for _ in range(n)]
            for m in range(_pick(level, 4, 6) + 1):
                for lam in partitions(m):
                    tally.add(schur(lam, x), schur_tableaux(lam, x), f"lambda={lam}, x={x}")
    return tally.result()


def check_dual_cauchy(level: str) -> CheckResult:
    tally = Tally("combinatorics.dual_cauchy")
    rng = rng_for("cauchy")
    top = _pick(level, 3, 4)
    for t in range(1, top + 1):
        for N in range(1, top + 1):
            for _ in range(_pick(level, 2, 10)):
                p = [random_rational(rng, Fraction(1, 12), Fraction(2)) for _ in range(t)]
                q = [random_rational(rng, Fraction(1, 12), Fraction(3)) for _ in range(N)]
                tally.add(dual_cauchy_residual(p, q), 0, f"t={t}, N={N}")
    return tally.result()


# -- drsk -----------------------------------------------------------------------------

def _exhaustive_matrices(max_n: int, max_N: int):
    for n in range(1, max_n + 1):
        for N in range(1, max_N + 1):
            for bits in range(2 ** (n * N)):
                yield BitMatrix.from_int(bits, n, N)


def _random_matrices(level: str):
    rng = rng_for("drsk-random")
    for _ in range(_pick(level, 100, 1000)):
        n, N = rng.randint(4, 7), rng.randint(4, 7)
        yield BitMatrix([[rng.randint(0, 1) for _ in range(N)] for _ in range(n)])


def check_drsk_bijectivity(level: str) -> CheckResult:
    tally = Tally("drsk.bijectivity")
    for w in list(_exhaustive_matrices(3, 4)) + list(_random_matrices(level)):
        n, N = w.shape
        P, Q = drsk_forward(w)
        tally.require(drsk_inverse(P, Q, n, N) == w, str(w))
    return tally.result()


def check_drsk_types(level: str) -> CheckResult:
    tally = Tally("drsk.type_identities")
    for w in list(_exhaustive_matrices(3, 4)) + list(_random_matrices(level)):
        n, N = w.shape
        P, Q, snaps = drsk_forward(w, history=True)
        pch = P.chain(N)
        cols = [sum(r[j] for r in w) for j in range(N)]
        ok_cols = all(cols[j - 1] == pch[j].size - pch[j - 1].size for j in range(1, N + 1))
        qch = Q.chain(n)
        ok_rows = all(sum(w[i - 1]) == qch[i].size - qch[i - 1].size for i in range(1, n + 1))
        ok_shapes = all(qch[i] == snaps[i - 1].shape for i in range(1, n + 1))
        tally.require(ok_cols and ok_rows and ok_shapes, str(w))
    return tally.result()


def check_left_edge_autonomy(level: str) -> CheckResult:
    tally = Tally("drsk.left_edge_autonomy")
    for w in list(_exhaustive_matrices(3, 4)) + list(_random_matrices(level)):
        N = w.shape[1]
        _, _, snaps = drsk_forward(w, history=True)
        edge = (0,) * N
        ok = True
        for row, P in zip(w, snaps):
            edge = left_edge_update(edge, row)
            ok = ok and edge == P.left_edge(N)
        tally.require(ok, str(w))
    return tally.result()


# -- dynamics ---------------------------------------------------------------------

def _trajectory_batches(level: str):
    rng = np.random.default_rng(7)
    for y0, t in (((0,), 5), ((1, -1), 6), ((2, 0, -3), 6), ((5, 4, 3, 2), 8)):
        N = len(y0)
        prob = rng.uniform(0.05, 0.95, size=(t, N))
        u = rng.random((_pick(level, 200, 5000), t, N))
        yield np.asarray(y0, dtype=np.int64), t, core.simulate_batch(np.asarray(y0, dtype=np.int64), prob, u)


def check_exclusion(level: str) -> CheckResult:
    tally = Tally("dynamics.exclusion")
    for y0, t, traj in _trajectory_batches(level):
        gaps = np.diff(traj, axis=2)
        for ok in (gaps < 0).all(axis=(1, 2)):
            tally.require(bool(ok), f"y0={y0.tolist()}")
    return tally.result()


def check_monotonicity(level: str) -> CheckResult:
    tally = Tally("dynamics.monotonicity")
    for y0, t, traj in _trajectory_batches(level):
        disp = traj - y0[None, None, :]
        steps = np.arange(t + 1)[None, :, None]
        ok = (disp >= 0) & (disp <= steps)
        for v in ok.all(axis=(1, 2)):
            tally.require(bool(v), f"y0={y0.tolist()}")
    return tally.result()


def check_drsk_dynamics(level: str) -> CheckResult:
    tally = Tally("dynamics.drsk_equivalence")
    for w in _exhaustive_matrices(3, 3):
        n, N = w.shape
        _, _, snaps = drsk_forward(w, history=True)
        traj = run([-k for k in range(1, N + 1)], w)
        ok = all(tuple(P.left_edge(N)[k - 1] - k for k in range(1, N + 1)) == traj[s]
                 for s, P in enumerate(snaps, 1))
        tally.require(ok, str(w))
    return tally.result()


def check_transition_consistency(level: str) -> CheckResult:
    tally = Tally("dynamics.transition_consistency")
    top = _pick(level, 2, 3)
    for N in range(1, top + 1):
        rates = Rates(P3, Q3)
        y = Y_BY_N[N]
        for t in range(0, top + 1):
            law = enumerate_transition(y, rates, t)
            for yp in transition_support(y, t):
                tally.add(transition_kernel(y, yp, rates, 0, t), law.get(yp, Fraction(0)), f"y={y}, y'={yp}, t={t}")
    return tally.result()


# -- operators --------------------------------------------------------------------

def _toeplitz_specs():
    F = Factor
    return [
        OperatorSpec.of(("Q", 2)),
        OperatorSpec.of(("Q", 1), ("Q", 2), ("Q", 3)),
        OperatorSpec.of(("Qdag", 1), ("Qdag", 3)),
        OperatorSpec.of(("Qinv", 2), ("Rstar", 1)),
        OperatorSpec.of(("Q", 1), ("R", 2), ("Qinv", 3)),
        OperatorSpec.of(("Qdag", 2), ("Rstar", 1), ("Rstar", 3)),
        OperatorSpec.of(F("Qbar", 1, 3), ("Rstar", 2)),
    ]


def check_toeplitz(level: str) -> CheckResult:
    tally = Tally("operators.toeplitz_shift")
    rates = Rates(P3, Q3)
    width = _pick(level, 4, 6)
    for spec in _toeplitz_specs():
        for x, y in iproduct(range(-width, width + 1), repeat=2):
            base = entry(spec, x, y, rates)
            for c in (-7, 3, 11):
                tally.add(entry(spec, x + c, y + c, rates), base, f"{spec} at ({x},{y})+{c}")
    return tally.result()


# elementary operators as (kind, index) with their one-sided support
_ELEMENTARY = {
    "Q": lambda i, x, y, R: q_range(i, i, x, y, R),
    "Qdag": lambda i, x, y, R: qdag_range(i, i, x, y, R),
    "Qinv": lambda i, x, y, R: qinv_range(i, i, x, y, R),
    "R": lambda i, x, y, R: r_range(i - 1, i, x, y, R),
    "Rstar": lambda i, x, y, R: rstar_range(i - 1, i, x, y, R),
}
_DIRECTION = {"Q": "left", "Qdag": "right", "Qinv": None, "R": None, "Rstar": None}
_BAND = 2  # finite operators only reach offsets in [-1, 1]


def compose_pair(a: tuple[str, int], b: tuple[str, int], x: int, y: int, rates: Rates):
    """(A B)(x, y) = sum_u A(x, u) B(u, y), summed exactly.

    With a finite factor, or two one-sided factors of the same direction, the
    sum is finite. For Q against Qdag the terms are geometric in u beyond a
    cutoff and the tail is added in closed form.
    """
    fa, fb = _ELEMENTARY[a[0]], _ELEMENTARY[b[0]]
    da, db = _DIRECTION[a[0]], _DIRECTION[b[0]]

    def term(u):
        return fa(a[1], x, u, rates) * fb(b[1], u, y, rates)

    if da is None:
        us = range(x - _BAND, x + _BAND + 1)
    elif db is None:
        us = range(y - _BAND, y + _BAND + 1)
    elif da == db:
        us = range(min(x, y) - 1, max(x, y) + 2)
    else:
        # opposite directions: terms vanish on one side of a cutoff and are geometric on the other
        lo, hi = min(x, y) - 2, max(x, y) + 2
        total = sum((term(u) for u in range(lo, hi + 1)), Fraction(0))
        if da == "left":  # u < x and u <= y: tail towards -inf
            t1, t0 = term(lo - 1), term(lo)
            ratio = t1 / t0 if t0 else 0
            tail = t1 / (1 - ratio) if t1 else 0
        else:  # u >= x and u > y: tail towards +inf
            t1, t0 = term(hi + 1), term(hi)
            ratio = t1 / t0 if t0 else 0
            tail = t1 / (1 - ratio) if t1 else 0
        if not abs(ratio) < 1:
            raise ValueError("composition diverges; symbols have no common annulus")
        return total + tail
    return sum((term(u) for u in us), Fraction(0))


def _annuli_overlap(a, b, rates: Rates) -> bool:
    """Q_i lives on |z| < q_i, Qdag_i on |z| > q_i, finite factors everywhere."""
    lo, hi = Fraction(0), None
    for kind, i in (a, b):
        if kind == "Q":
            hi = rates.q[i - 1] if hi is None else min(hi, rates.q[i - 1])
        elif kind == "Qdag":
            lo = max(lo, rates.q[i - 1])
    return hi is None or lo < hi


def check_commutativity(level: str) -> CheckResult:
    tally = Tally("operators.commutativity")
    rates = Rates(P3, Q3)
    elems = [(k, i) for k in ("Q", "Qdag", "Qinv") for i in (1, 2, 3)] + [(k, s) for k in ("R", "Rstar") for s in (1, 2, 3)]
    width = _pick(level, 3, 5)
    for a, b in iproduct(elems, repeat=2):
        if a >= b or not _annuli_overlap(a, b, rates):
            continue
        for x, y in iproduct(range(-width, width + 1), repeat=2):
            tally.add(compose_pair(a, b, x, y, rates), compose_pair(b, a, x, y, rates), f"{a} {b} at ({x},{y})")
    return tally.result()


def check_q_inverse(level: str) -> CheckResult:
    tally = Tally("operators.q_inverse")
    rates = Rates(P4, Q4)
    width = _pick(level, 4, 8)
    for i in range(1, 5):
        for x, y in iproduct(range(-width, width + 1), repeat=2):
            left = sum(q_range(i, i, x, u, rates) * qinv_range(i, i, u, y, rates) for u in range(y - 2, y + 2))
            right = sum(qinv_range(i, i, x, u, rates) * q_range(i, i, u, y, rates) for u in range(x - 1, x + 3))
            tally.add(left, int(x == y), f"Q_{i} Qinv_{i} at ({x},{y})")
            tally.add(right, int(x == y), f"Qinv_{i} Q_{i} at ({x},{y})")
    return tally.result()


def check_lgv(level: str) -> CheckResult:
    tally = Tally("operators.lgv_paths")
    rates = Rates(P3, Q3)
    top = _pick(level, 3, 5)
    for N in range(1, 4):
        parts = list(_decreasing_tuples([0] * N, [top] * N))
        for lam, yp in iproduct(parts, repeat=2):
            v = lambda_kernel(lam, yp, rates, N)
            tally.add(v, lambda_paths(lam, yp, rates, N), f"Lambda {lam} {yp}")
            if N <= 2:
                tally.add(v, lambda_chains(lam, yp, rates, N), f"Lambda chains {lam} {yp}")
        for y, mu in iproduct(parts, repeat=2):
            tally.add(lambda_inverse_kernel(y, mu, rates, N), lambda_inverse_paths(y, mu, rates, N),
                      f"Lambda^-1 {y} {mu}")
        for t in (1, 2, 3):
            for mu, lam in iproduct(parts, repeat=2):
                tally.add(r_kernel_unnormalized(mu, lam, rates, 0, t, N), r_paths(mu, lam, rates, 0, t, N),
                          f"R {mu} {lam} t={t}")
    return tally.result()


def _weak_qhat(rates: Rates, T: int, cache: dict):
    """Qhat(y, y') = prod q^{y - y'} P(y -> y') in weak coordinates, from the enumeration."""

    def qhat(y, yp):
        if y not in cache:
            law = enumerate_transition(ParticleConfig.from_weak(y), rates, T)
            cache[y] = {c.weak(): v for c, v in law.items()}
        pr = cache[y].get(tuple(yp), 0)
        if pr == 0:
            return 0
        return pr * prod(rates.q[k] ** (y[k] - yp[k]) for k in range(len(y)))

    return qhat


def check_lambda_inverse(level: str, N_max: int | None = None) -> CheckResult:
    """Lambda Lambda^{-1} = I and Lambda^{-1} Lambda = I on boxes of partitions."""
    tally = Tally("operators.lambda_inverse")
    N_max = N_max or _pick(level, 3, 4)
    for N in range(1, N_max + 1):
        rates = Rates(P4[:N], Q4[:N])
        lam_k = functools.lru_cache(maxsize=None)(lambda a, b: lambda_kernel(a, b, rates, N))
        inv_k = functools.lru_cache(maxsize=None)(lambda a, b: lambda_inverse_kernel(a, b, rates, N))
        for lam in _decreasing_tuples([0] * N, [2] * N):
            for mu in _decreasing_tuples([lam[-1] - N] * N, list(lam)):
                s = sum(lam_k(tuple(lam), tuple(y)) * inv_k(tuple(y), tuple(mu))
                        for y in _decreasing_tuples([lam[-1]] * N, list(lam)))
                tally.add(s, int(tuple(mu) == tuple(lam)), f"(Lambda Lambda^-1)({lam},{mu})")
            y = lam
            for y2 in _decreasing_tuples([y[-1] - N] * N, list(y)):
                s = sum(inv_k(tuple(y), tuple(mu)) * lam_k(tuple(mu), tuple(y2))
                        for mu in _decreasing_tuples([v - N for v in y], list(y)))
                tally.add(s, int(tuple(y2) == tuple(y)), f"(Lambda^-1 Lambda)({y},{y2})")
    return tally.result()


def check_intertwining(level: str, N_max: int | None = None) -> CheckResult:
    """R Lambda = Lambda Qhat with Qhat taken from the exhaustive enumeration."""
    tally = Tally("operators.intertwining")
    N_max = N_max or _pick(level, 3, 4)
    for N in range(1, N_max + 1):
        for T in ((1, 2) if N < 4 else (1,)):
            rates = Rates(P4[:T], Q4[:N])
            Z = rates.partition_function(0, T, N)
            qhat = _weak_qhat(rates, T, {})
            lam_cache: dict = {}

            def Lam(a, b):
                key = (a, b)
                if key not in lam_cache:
                    lam_cache[key] = lambda_kernel(a, b, rates, N)
                return lam_cache[key]

            for mu in _decreasing_tuples([0] * N, [2] * N):
                for yp in _decreasing_tuples([mu[-1]] * N, [m + T for m in mu]):
                    lhs = sum(r_kernel_unnormalized(mu, lam, rates, 0, T, N) * Lam(lam, yp)
                              for lam in _decreasing_tuples(list(mu), [m + T for m in mu])) / Z
                    rhs = sum(Lam(mu, y) * qhat(y, yp) for y in _decreasing_tuples([mu[-1]] * N, list(mu)))
                    tally.add(lhs, rhs, f"N={N}, T={T}, mu={mu}, y'={yp}")
    return tally.result()


def check_stochasticity(level: str) -> CheckResult:
    tally = Tally("operators.stochasticity")
    top = _pick(level, 2, 3)
    for N in range(1, top + 1):
        rates = Rates(P3, Q3)
        for t in range(0, top + 1):
            y = Y_BY_N[N]
            total = sum(transition_kernel(y, yp, rates, 0, t) for yp in transition_support(y, t))
            tally.add(total, 1, f"N={N}, t={t}")
    return tally.result()


# -- dpp ----------------------------------------------------------------------------

def check_biorthogonality(level: str) -> CheckResult:
    tally = Tally("dpp.biorthogonality")
    N_max = _pick(level, 3, 4)
    for N in range(1, N_max + 1):
        y = Y4[:N] if N == 4 else Y_BY_N[N]
        for t in (0, 1, 2):
            rates = Rates(P4, Q4)
            system = BiorthSystem(y, rates, t)
            for n in range(1, N + 1):
                for i in range(1, n + 1):
                    for j in range(1, n + 1):
                        tally.add(system.pairing(n, i, j), int(i == j), f"N={N}, t={t}, n={n}, ({i},{j})")
    return tally.result()


def check_m_matrix(level: str) -> CheckResult:
    tally = Tally("dpp.m_triangular")
    rng = rng_for("m-matrix")
    cases = [(Y_BY_N[3], Rates(P3, Q3), 3), (Y4, Rates(P4, Q4), 4)]
    for _ in range(_pick(level, 3, 10)):
        N = rng.randint(1, 4)
        t = rng.randint(0, 3)
        y = sorted(rng.sample(range(-6, 7), N), reverse=True)
        cases.append((tuple(y), random_ordered_rates(rng, N, t), t))
    for y, rates, t in cases:
        M = m_matrix(y, rates.truncated(t, len(y)), 0, t)
        C = m_matrix_closed(y, rates.truncated(t, len(y)), 0, t)
        for i in range(len(y)):
            for j in range(len(y)):
                tally.add(M[i][j], C[i][j], f"y={y}, t={t}, M[{i + 1}][{j + 1}]")
            tally.require(M[i][i] != 0, f"y={y}: zero diagonal")
    return tally.result()


def _instances(level: str, N_max: int = 3):
    """(N, t, y) triples with their acceptance-style random queries."""
    for N in range(1, N_max + 1):
        for t in range(1, 4):
            yield N, t, Y_BY_N[N]


def random_queries(N: int, t: int, y, count: int, rng: random.Random):
    """Queries with strictly increasing particle labels and thresholds around the reachable range."""
    out = []
    for _ in range(count):
        m = rng.randint(1, N)
        ks = sorted(rng.sample(range(1, N + 1), m))
        out.append(tuple((k, rng.randint(y[k - 1] - 1, y[k - 1] + t + 1)) for k in ks))
    return out


def check_gauge(level: str) -> CheckResult:
    tally = Tally("dpp.gauge_invariance", tol=1e-10)
    rng = rng_for("gauge")
    for N, t, y in _instances(level):
        if level == "quick" and t > 2:
            continue
        kernel = BiorthogonalKernel(BiorthSystem(y, Rates(P3, Q3, FLOAT), t))
        for query in random_queries(N, t, y, _pick(level, 2, 5), rng):
            uppers = event_thresholds(query, N)
            table = tabulate_kernel(kernel, uppers, min(default_lower(y, t), min(uppers.values())), FLOAT)
            base = fredholm_table_det(table)
            for c in (2.0, 1 / 3):
                conj = [[table.matrix[a][b] * c ** (table.points[a][1] - table.points[b][1])
                         for b in range(len(table.points))] for a in range(len(table.points))]
                table2 = type(table)(table.points, conj, FLOAT, table.lower, table.uppers)
                tally.add(fredholm_table_det(table2), base, f"N={N}, t={t}, c={c}, {query}")
    return tally.result()


def check_stabilization(level: str) -> CheckResult:
    tally = Tally("dpp.fredholm_stabilization")
    rng = rng_for("stabilization")
    for N, t, y in _instances(level):
        for backend in (FLOAT, RATIONAL):
            if level == "quick" and backend == RATIONAL and N == 3:
                continue
            kernel = BiorthogonalKernel(BiorthSystem(y, Rates(P3, Q3, backend), t))
            for query in random_queries(N, t, y, _pick(level, 2, 5), rng):
                res = fredholm_det(kernel, query, y, t)
                (_, a), (_, b) = res.history[-2:]
                tally.add(a, b, f"N={N}, t={t}, {backend}, {query}")
    return tally.result()


def check_dpp_marginal(level: str) -> CheckResult:
    tally = Tally("dpp.marginal")
    top = _pick(level, 2, 3)
    for N in range(1, top + 1):
        y = Y_BY_N[N]
        rates = Rates(P3, Q3)
        for t in range(0, 3 if N < 3 else 2):
            marg = left_edge_marginal(y, rates, t)
            alt = left_edge_marginal(y, rates, t, x0=y[-1] - 1)
            for yp in transition_support(y, t):
                exact = transition_kernel(y, yp, rates, 0, t)
                tally.add(marg.get(yp, Fraction(0)), exact, f"N={N}, t={t}, {yp}")
                tally.add(alt.get(yp, Fraction(0)), exact, f"N={N}, t={t}, {yp}, auxiliary form")
    return tally.result()


# -- hitting ----------------------------------------------------------------------

def check_bvp(level: str) -> CheckResult:
    tally = Tally("hitting.bvp_residual")
    rates = Rates(P4, Q4)
    for n in range(1, 5):
        y = Y4[:n]
        for k in range(n):
            sol = BvpSolution(n, k, y, rates)
            res = bvp_residuals(sol, range(min(y) - 6, max(y) + 7))
            for kind, vals in res.items():
                for v in vals:
                    tally.add(v, 0, f"n={n}, k={k}, {kind}")
    return tally.result()


def _difference(vals: list, order: int) -> list:
    for _ in range(order):
        vals = [b - a for a, b in zip(vals, vals[1:])]
    return vals


def check_polynomiality(level: str) -> CheckResult:
    tally = Tally("hitting.polynomiality")
    for q0 in (Fraction(3, 2), Fraction(5, 2)):
        for n in range(1, 5):
            y = Y4[:n]
            rates = Rates(P4, (q0,) * 4)
            for k in range(n):
                sol = BvpSolution(n, k, y, rates)
                for l in range(k + 1):
                    xs = range(min(y) - 8, max(y) + 9)
                    scaled = [q0 ** (-x) * sol(l, x) for x in xs]
                    for v in _difference(scaled, k - l + 1):
                        tally.add(v, 0, f"q={q0}, n={n}, k={k}, l={l}")
    return tally.result()


def check_g_identity(level: str) -> CheckResult:
    tally = Tally("hitting.g_identity")
    cases = [(Y4, Rates(P4, Q4)), ((2, 0, -3, -4), Rates(P4, (Fraction(5, 2), Fraction(2), Fraction(4), Fraction(3))))]
    pad = _pick(level, 2, 5)
    for y, rates in cases:
        for n in range(1, _pick(level, 3, 4) + 1):
            yn = y[:n]
            grid = range(yn[-1] - pad, yn[0] + pad + 1)
            for k in range(n):
                for j in range(n - k):
                    for z1, z2 in iproduct(grid, repeat=2):
                        tally.add(g_function(n, j, k, z1, z2, yn, rates, "sum"),
                                  g_function(n, j, k, z1, z2, yn, rates, "hitting"),
                                  f"y={yn}, (j,k)=({j},{k}), z=({z1},{z2})")
    return tally.result()


def check_kernel_identity(level: str) -> CheckResult:
    tally = Tally("hitting.kernel_identity")
    rng = rng_for("kernel-identity")
    kernels = {}
    for N, t, y in _instances(level):
        rates = Rates(P3, Q3)
        kernels[(N, t)] = (BiorthogonalKernel(BiorthSystem(y, rates, t)), HittingKernel(y, rates, t), y)
    keys = sorted(kernels)
    for _ in range(_pick(level, 30, 100)):
        N, t = rng.choice(keys)
        bio, hit, y = kernels[(N, t)]
        m, n = rng.randint(1, N), rng.randint(1, N)
        x = rng.randint(y[-1] - N - 3, y[0] + t + 1)
        xp = rng.randint(y[-1] - N - 3, y[0] + t + 1)
        tally.add(hit(m, x, n, xp), bio(m, x, n, xp), f"N={N}, t={t}, K({m},{x};{n},{xp})")
    return tally.result()


def check_sbar_forms(level: str) -> CheckResult:
    tally = Tally("hitting.sbar_dual", tol=1e-12, relative=True)
    rates = Rates((0.25, 0.2, 0.125), (1.5, 2.0, 3.0), FLOAT)  # all p q < 1 so the series converges
    width = _pick(level, 3, 6)
    for j in range(1, 4):
        for k in range(j, 4):
            for t in range(0, 4):
                for x, y in iproduct(range(-width, width + 1), repeat=2):
                    tally.add(sbar_kernel_series(j, k, 0, t, x, y, rates), sbar_kernel(j, k, 0, t, x, y, rates),
                              f"[{j},{k}], t={t}, ({x},{y})")
    return tally.result()


def check_step_epigraph(level: str) -> CheckResult:
    tally = Tally("hitting.epigraph_step")
    for N in range(1, _pick(level, 3, 4) + 1):
        y = tuple(-i for i in range(1, N + 1))
        rates = Rates(P4, Q4[:N])
        for n in range(1, N + 1):
            for t in range(0, 3):
                for x in range(-N - 4, 4):
                    for yp in range(-N - 4, 4):
                        closed = (sbar_kernel(1, n, 0, t, x, yp, rates) / prod(v - 1 for v in rates.q[:n])
                                  if x > y[0] else 0)
                        tally.add(sbar_epi(n, 0, t, x, yp, y, rates), closed, f"n={n}, t={t}, ({x},{yp})")
    return tally.result()


# -- harness ------------------------------------------------------------------------

def check_determinism(level: str) -> CheckResult:
    from .cli import main  # the CLI imports this module
    import contextlib
    import io

    tally = Tally("harness.determinism")
    argsets = [
        ["simulate", "--y", "2,0,-3", "--p", "1/4,1/3,1/5", "--q", "3/2,2,3", "--t", "3",
         "--seed", "11", "--replicas", str(_pick(level, 2000, 20000)), "--query", "1:3,3:-2"],
        ["fredholm", "--y", "1,-1", "--p", "1/4,1/3", "--q", "3/2,2", "--t", "2", "--query", "1:2,2:0"],
        ["enumerate", "--y", "1,-1", "--p", "1/4,1/3", "--q", "3/2,2", "--t", "2"],
    ]
    for args in argsets:
        outs = []
        for threads in ("1", "3"):
            buf = io.StringIO()
            with contextlib.redirect_stdout(buf):
                code = main(args + ["--threads", threads])
            outs.append((code, buf.getvalue()))
        tally.require(outs[0] == outs[1] and outs[0][0] == 0, " ".join(args[:1]))
    return tally.result()


def check_manifest(level: str) -> CheckResult:
    tally = Tally("harness.manifest_coverage")
    names = [c.name for c in MANIFEST]
    tally.require(len(names) == len(set(names)), "duplicate names")
    for module, count in EXPECTED_COUNTS.items():
        tally.require(sum(c.module == module for c in MANIFEST) == count, module)
    return tally.result()


@dataclass(frozen=True)
class Invariant:
    name: str
    module: str
    statement: str
    run: Callable[[str], CheckResult]


MANIFEST: tuple[Invariant, ...] = (
    Invariant("combinatorics.chain_round_trip", "combinatorics",
              "chain_to_tableau(tableau_to_chain(T)) = T for all column-strict T, alphabet <= 4, size <= 8",
              check_chain_round_trip),
    Invariant("combinatorics.conjugate_involution", "combinatorics",
              "conjugation is an involution on partitions of size <= 12", check_conjugate_involution),
    Invariant("combinatorics.schur_two_sums", "combinatorics",
              "Schur polynomial by tableaux equals the interlacing-chain sum, |lambda| <= 6, n <= 3",
              check_schur_two_sums),
    Invariant("combinatorics.dual_cauchy", "combinatorics",
              "dual Cauchy residual vanishes exactly for t, N <= 4", check_dual_cauchy),
    Invariant("drsk.bijectivity", "drsk",
              "inverse after forward is the identity on all 0/1 matrices with n <= 3, N <= 4 and random larger ones",
              check_drsk_bijectivity),
    Invariant("drsk.type_identities", "drsk",
              "column sums of w match the P chain, row sums and intermediate shapes match the Q chain",
              check_drsk_types),
    Invariant("drsk.left_edge_autonomy", "drsk",
              "the left edge of P(t) follows the sequential update driven by row t alone", check_left_edge_autonomy),
    Invariant("dynamics.exclusion", "dynamics", "every simulated configuration is strictly decreasing",
              check_exclusion),
    Invariant("dynamics.monotonicity", "dynamics", "Y_k(t) lies in [y_k, y_k + t]", check_monotonicity),
    Invariant("dynamics.drsk_equivalence", "dynamics",
              "lambda^(k)_k(t) - k from dRSK equals the particle dynamics from y_k = -k, n, N <= 3",
              check_drsk_dynamics),
    Invariant("dynamics.transition_consistency", "dynamics",
              "enumerated transition probabilities equal the operator-built kernel exactly",
              check_transition_consistency),
    Invariant("operators.toeplitz_shift", "operators", "entries are invariant under a common shift of x and y",
              check_toeplitz),
    Invariant("operators.commutativity", "operators",
              "elementary operators with overlapping annuli commute entrywise", check_commutativity),
    Invariant("operators.q_inverse", "operators", "Q_i Q_i^-1 = Q_i^-1 Q_i = I on windows", check_q_inverse),
    Invariant("operators.lgv_paths", "operators",
              "Lambda, Lambda^-1 and R determinants equal non-intersecting path sums, N <= 3", check_lgv),
    Invariant("operators.intertwining", "operators",
              "R Lambda = Lambda Qhat with Qhat from the enumeration, exact", check_intertwining),
    Invariant("operators.stochasticity", "operators", "transition kernel rows sum to 1, N, t <= 3",
              check_stochasticity),
    Invariant("dpp.biorthogonality", "dpp", "sum_x Psi^(n)_i Phi^(n)_j = delta_ij for i, j <= n <= N <= 4",
              check_biorthogonality),
    Invariant("dpp.m_triangular", "dpp", "M is upper triangular and matches its residue closed form",
              check_m_matrix),
    Invariant("dpp.gauge_invariance", "dpp", "det(I - K) is unchanged by K -> c^{x-x'} K", check_gauge),
    Invariant("dpp.fredholm_stabilization", "dpp", "growing the window by 5 sites leaves the determinant fixed",
              check_stabilization),
    Invariant("dpp.marginal", "dpp", "the array measure marginal on left edges equals the transition kernel",
              check_dpp_marginal),
    Invariant("hitting.bvp_residual", "hitting", "recursion, boundary zeros and terminal row hold, n <= 4",
              check_bvp),
    Invariant("hitting.polynomiality", "hitting",
              "with equal q, q^-x h(l, x) has vanishing differences of order k - l + 1", check_polynomiality),
    Invariant("hitting.g_identity", "hitting", "G by BVP sums equals G by the killed walk on the whole grid",
              check_g_identity),
    Invariant("hitting.kernel_identity", "hitting", "walk kernel equals biorthogonal kernel entrywise",
              check_kernel_identity),
    Invariant("hitting.sbar_dual", "hitting", "series and residue forms of Sbar agree where the series converges",
              check_sbar_forms),
    Invariant("hitting.epigraph_step", "hitting", "for step data Sbar_epi is 1{x > y_1} Sbar / prod(q - 1)",
              check_step_epigraph),
    Invariant("harness.determinism", "harness", "same config and seed give byte-identical reports",
              check_determinism),
    Invariant("harness.manifest_coverage", "harness", "the manifest lists every invariant once",
              check_manifest),
)

EXPECTED_COUNTS = {"combinatorics": 4, "drsk": 3, "dynamics": 4, "operators": 6, "dpp": 5, "hitting": 6,
                   "harness": 2}


def run_suite(level: str = "quick", only: str | None = None, timings: bool = False) -> list[CheckResult]:
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}")
    out = []
    for inv in MANIFEST:
        if only and only not in inv.name:
            continue
        start = time.perf_counter()
        try:
            res = inv.run(level)
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            res = CheckResult(inv.name, None, None, 0, None, False, 0, f"raised {type(exc).__name__}: {exc}")
        res.name = inv.name
        if timings:
            res.wall = time.perf_counter() - start
        out.append(res)
    return out
