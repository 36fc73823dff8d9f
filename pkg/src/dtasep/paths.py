"""Brute-force oracles for the determinantal kernels.

These enumerate the underlying combinatorial objects directly (families of
non-intersecting lattice paths, chains of interlacing partitions) and never
evaluate a determinant, so they are independent checks of the formulas in
:mod:`dtasep.operators`.
"""
from __future__ import annotations

from itertools import product as iproduct
from typing import Callable, Iterator, Sequence

from .combinatorics import Partition, interlacing_chains
from .dynamics import Rates
from .scalars import prod

Point = tuple[int, int]  # (x, level)
StepRule = Callable[[int, Point], list[tuple[Point, object]]]


def lattice_paths(start: Point, end: Point, steps: Callable[[Point], list[tuple[Point, object]]]
                  ) -> Iterator[tuple[tuple[Point, ...], object]]:
    """Every path from ``start`` to ``end`` with its weight.

    Steps never decrease x or the level, which bounds the search.
    """
    path = [start]

    def rec(pt, w):
        if pt == end:
            yield tuple(path), w
        if pt[0] > end[0] or pt[1] > end[1]:
            return
        for nxt, sw in steps(pt):
            if nxt[0] > end[0] or nxt[1] > end[1]:
                continue
            path.append(nxt)
            yield from rec(nxt, w * sw)
            path.pop()

    yield from rec(start, 1)


def nonintersecting_weight(starts: Sequence[Point], ends: Sequence[Point], rule: StepRule):
    """Total weight of vertex-disjoint path families joining starts[i] to ends[i]."""
    per_path = []
    for i, (a, b) in enumerate(zip(starts, ends)):
        paths = list(lattice_paths(a, b, lambda pt, i=i: rule(i, pt)))
        if not paths:
            return 0
        per_path.append(paths)
    total = 0
    for family in iproduct(*per_path):
        seen: set[Point] = set()
        ok = True
        for pts, _ in family:
            s = set(pts)
            if seen & s:
                ok = False
                break
            seen |= s
        if ok:
            total = total + prod(w for _, w in family)
    return total


def lambda_paths(lam: Sequence[int], yp: Sequence[int], rates: Rates, N: int):
    """Up/right paths from (y'_i - i, i) to (lam_i - i, N), first step up, right steps weigh q_level."""
    q = rates.q

    def rule(i, pt):
        x, lev = pt
        out = []
        if lev < N:
            out.append(((x, lev + 1), 1))
        if lev > i + 1:
            out.append(((x + 1, lev), q[lev - 1]))
        return out

    starts = [(yp[i] - (i + 1), i + 1) for i in range(N)]
    ends = [(lam[i] - (i + 1), N) for i in range(N)]
    return nonintersecting_weight(starts, ends, rule)


def lambda_inverse_paths(y: Sequence[int], mu: Sequence[int], rates: Rates, N: int):
    """Paths from (mu_i - i, 0) to (y_i - i, N - i); the diagonal step into level l weighs -q_{N-l+1}."""
    q = rates.q

    def rule(i, pt):
        x, lev = pt
        if lev >= N:
            return []
        return [((x, lev + 1), 1), ((x + 1, lev + 1), -q[N - lev - 1])]

    starts = [(mu[i] - (i + 1), 0) for i in range(N)]
    ends = [(y[i] - (i + 1), N - (i + 1)) for i in range(N)]
    return nonintersecting_weight(starts, ends, rule)


def r_paths(mu: Sequence[int], lam: Sequence[int], rates: Rates, r: int, t: int, N: int):
    """Paths from (mu_i - i, r) to (lam_i - i, t); the diagonal step into level l weighs p_l."""
    p = rates.p

    def rule(i, pt):
        x, lev = pt
        if lev >= t:
            return []
        return [((x, lev + 1), 1), ((x + 1, lev + 1), p[lev])]

    starts = [(mu[i] - (i + 1), r) for i in range(N)]
    ends = [(lam[i] - (i + 1), t) for i in range(N)]
    return nonintersecting_weight(starts, ends, rule)


def lambda_chains(lam: Sequence[int], yp: Sequence[int], rates: Rates, N: int):
    """q^{-y'} times the sum over interlacing chains ending at ``lam`` with left edge ``y'``.

    Each chain weighs prod_j q_j^{|lam^(j)| - |lam^(j-1)|}. Needs nonnegative parts.
    """
    lam = Partition(lam)
    yp = tuple(yp) + (0,) * (N - len(yp))
    total = 0
    for chain in interlacing_chains(lam, N):
        if all(chain[k].part(k) == yp[k - 1] for k in range(1, N + 1)):
            total = total + prod(rates.q[j - 1] ** (chain[j].size - chain[j - 1].size) for j in range(1, N + 1))
    return total * prod(rates.q[k] ** (-yp[k]) for k in range(N))
