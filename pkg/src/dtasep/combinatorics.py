"""Partitions, tableaux, interlacing chains and symmetric polynomials."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product as iproduct
from typing import Iterator, Sequence

from .scalars import det, prod


class Partition(tuple):
    """Weakly decreasing tuple of nonnegative ints, trailing zeros dropped."""

    def __new__(cls, parts: Sequence[int] = ()):
        parts = [int(v) for v in parts]
        for a, b in zip(parts, parts[1:]):
            if a < b:
                raise ValueError(f"parts are not weakly decreasing: {parts}")
        if parts and parts[-1] < 0:
            raise ValueError(f"negative part in {parts}")
        while parts and parts[-1] == 0:
            parts.pop()
        return super().__new__(cls, parts)

    def part(self, i: int) -> int:
        """1-based part with implicit zeros past the length."""
        return self[i - 1] if 1 <= i <= len(self) else 0

    @property
    def size(self) -> int:
        return sum(self)

    def conjugate(self) -> "Partition":
        return conjugate(self)

    def padded(self, n: int) -> tuple[int, ...]:
        if len(self) > n:
            raise ValueError(f"{self} has more than {n} parts")
        return tuple(self) + (0,) * (n - len(self))

    def contains(self, other: Sequence[int]) -> bool:
        return all(self.part(i) >= v for i, v in enumerate(other, 1))

    def __repr__(self):
        return f"Partition({tuple(self)})"


def conjugate(lam: Sequence[int]) -> Partition:
    lam = Partition(lam)
    if not lam:
        return Partition()
    return Partition([sum(1 for v in lam if v >= i) for i in range(1, lam[0] + 1)])


def _pad(a: Sequence[int], n: int) -> list[int]:
    return list(a) + [0] * (n - len(a))


def interlaces(mu: Sequence[int], lam: Sequence[int]) -> bool:
    """``mu`` precedes ``lam``: lam_i >= mu_i >= lam_{i+1} (``lam/mu`` is a horizontal strip)."""
    n = max(len(mu), len(lam)) + 1
    m, l = _pad(mu, n), _pad(lam, n)
    return all(l[i] >= m[i] >= l[i + 1] for i in range(n - 1))


def is_vertical_strip(mu: Sequence[int], lam: Sequence[int]) -> bool:
    n = max(len(mu), len(lam))
    m, l = _pad(mu, n), _pad(lam, n)
    return all(0 <= l[i] - m[i] <= 1 for i in range(n))


def horizontal_predecessors(lam: Sequence[int]) -> Iterator[Partition]:
    """All ``mu`` with ``mu`` interlacing ``lam``."""
    lam = Partition(lam)
    ranges = [range(lam.part(i + 2), lam[i] + 1) for i in range(len(lam))]
    for parts in iproduct(*ranges):
        yield Partition(parts)


def vertical_strip_extensions(mu: Sequence[int], n_parts: int) -> Iterator[Partition]:
    """All partitions with at most ``n_parts`` parts obtained by adding a vertical strip to ``mu``."""
    base = _pad(Partition(mu), n_parts)
    for bump in iproduct((0, 1), repeat=n_parts):
        parts = [b + d for b, d in zip(base, bump)]
        if all(parts[i] >= parts[i + 1] for i in range(n_parts - 1)):
            yield Partition(parts)


def interlacing_chains(lam: Sequence[int], n: int) -> Iterator[tuple[Partition, ...]]:
    """Chains empty = lam^(0) < lam^(1) < ... < lam^(n) = lam of interlacing partitions."""
    lam = Partition(lam)
    if len(lam) > n:
        return
    if n == 0:
        if not lam:
            yield (lam,)
        return
    for mu in horizontal_predecessors(lam):
        if len(mu) > n - 1:
            continue
        for chain in interlacing_chains(mu, n - 1):
            yield chain + (lam,)


def partitions_in_box(rows: int, cols: int) -> Iterator[Partition]:
    """Partitions with at most ``rows`` parts, each at most ``cols``."""

    def rec(i, cap):
        if i == rows:
            yield ()
            return
        for v in range(cap, -1, -1):
            for rest in rec(i + 1, v):
                yield (v,) + rest

    for parts in rec(0, cols):
        yield Partition(parts)


def partitions(m: int, max_part: int | None = None) -> Iterator[Partition]:
    """Partitions of ``m``, largest first part first."""
    cap = m if max_part is None else min(m, max_part)

    def rec(rest, cap):
        if rest == 0:
            yield ()
            return
        for v in range(min(rest, cap), 0, -1):
            for tail in rec(rest - v, v):
                yield (v,) + tail

    for parts in rec(m, cap):
        yield Partition(parts)


@dataclass(frozen=True)
class Tableau:
    """A filling of a Young diagram, stored row by row."""

    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in r) for r in self.rows if len(r))
        object.__setattr__(self, "rows", rows)
        Partition([len(r) for r in rows])  # validates the shape

    @property
    def shape(self) -> Partition:
        return Partition([len(r) for r in self.rows])

    def columns(self) -> list[tuple[int, ...]]:
        shape = self.shape
        if not shape:
            return []
        return [tuple(r[c] for r in self.rows if len(r) > c) for c in range(shape[0])]

    def is_column_strict(self) -> bool:
        rows_ok = all(a <= b for r in self.rows for a, b in zip(r, r[1:]))
        cols_ok = all(a < b for c in self.columns() for a, b in zip(c, c[1:]))
        return rows_ok and cols_ok

    def is_row_strict(self) -> bool:
        rows_ok = all(a < b for r in self.rows for a, b in zip(r, r[1:]))
        cols_ok = all(a <= b for c in self.columns() for a, b in zip(c, c[1:]))
        return rows_ok and cols_ok

    def max_entry(self) -> int:
        return max((v for r in self.rows for v in r), default=0)

    def restrict(self, k: int) -> "Tableau":
        """Delete every entry larger than ``k``."""
        return Tableau(tuple(tuple(v for v in r if v <= k) for r in self.rows))

    def chain(self, n: int | None = None) -> tuple[Partition, ...]:
        """Shapes lam^(0), ..., lam^(n) of the successive restrictions."""
        if n is None:
            n = self.max_entry()
        return tuple(self.restrict(k).shape for k in range(n + 1))

    def left_edge(self, n: int | None = None) -> tuple[int, ...]:
        """(lam^(1)_1, ..., lam^(n)_n), zeros included."""
        return chain_left_edge(self.chain(n))

    def transpose(self) -> "Tableau":
        return Tableau(tuple(self.columns()))


def tableau_from_chain(chain: Sequence[Sequence[int]]) -> Tableau:
    """Fill lam^(k)/lam^(k-1) with k; ``chain[0]`` is the starting (usually empty) shape."""
    chain = [Partition(c) for c in chain]
    if chain[0]:
        raise ValueError("chain must start at the empty partition")
    final = chain[-1]
    rows = [[0] * final.part(i + 1) for i in range(len(final))]
    for k in range(1, len(chain)):
        prev, cur = chain[k - 1], chain[k]
        if not cur.contains(prev):
            raise ValueError("chain is not increasing")
        for i in range(len(cur)):
            for c in range(prev.part(i + 1), cur[i]):
                rows[i][c] = k
    return Tableau(tuple(tuple(r) for r in rows))


def chain_left_edge(chain: Sequence[Sequence[int]]) -> tuple[int, ...]:
    """(lam^(1)_1, lam^(2)_2, ...) for a chain starting at lam^(0)."""
    return tuple(Partition(chain[k]).part(k) for k in range(1, len(chain)))


def left_edge(T: Tableau, n: int | None = None) -> Partition:
    """Number of k's in row k, for k = 1, 2, ...; T must be column strict."""
    if not T.is_column_strict():
        raise ValueError("left edge needs a column-strict tableau")
    return Partition(chain_left_edge(T.chain(n)))


def tableau_to_chain(T: Tableau, n: int | None = None) -> tuple[Partition, ...]:
    """(lam^(1), ..., lam^(n)), lam^(k) the shape of the entries <= k."""
    if not T.is_column_strict():
        raise ValueError("not a column-strict tableau")
    if n is not None and T.max_entry() > n:
        raise ValueError(f"entries exceed the alphabet 1..{n}")
    return T.chain(n)[1:]


def chain_to_tableau(chain: Sequence[Sequence[int]]) -> Tableau:
    """Inverse of :func:`tableau_to_chain`; consecutive shapes must interlace."""
    full = [Partition()] + [Partition(c) for c in chain]
    for a, b in zip(full, full[1:]):
        if not interlaces(a, b):
            raise ValueError(f"{a} and {b} do not interlace")
    return tableau_from_chain(full)


def column_strict_tableaux(lam: Sequence[int], n: int) -> Iterator[Tableau]:
    """Semistandard tableaux of shape ``lam`` with entries in 1..n, filled cell by cell."""
    lam = Partition(lam)
    cells = [(i, j) for i in range(len(lam)) for j in range(lam[i])]
    grid: dict[tuple[int, int], int] = {}

    def rec(idx):
        if idx == len(cells):
            yield Tableau(tuple(tuple(grid[(i, j)] for j in range(lam[i])) for i in range(len(lam))))
            return
        i, j = cells[idx]
        lo = 1
        if j > 0:
            lo = max(lo, grid[(i, j - 1)])
        if i > 0:
            lo = max(lo, grid[(i - 1, j)] + 1)
        for v in range(lo, n + 1):
            grid[(i, j)] = v
            yield from rec(idx + 1)
        grid.pop((i, j), None)

    yield from rec(0)


# -- symmetric polynomials ----------------------------------------------------

def complete_homogeneous(n: int, variables: Sequence):
    """h_n(variables); 1 for n == 0 and 0 for n < 0."""
    variables = tuple(variables)
    # the type tuple keeps float and Fraction inputs apart in the cache (0.5 == Fraction(1, 2))
    return _complete(int(n), variables, tuple(map(type, variables)))


@lru_cache(maxsize=65536)
def _complete(n, variables, _types):
    if n < 0:
        return 0
    if n == 0:
        return 1
    # h_n(x_1..x_m) via the row recursion h_n(x, rest) = sum_k x^k h_{n-k}(rest)
    row = [1] + [0] * n
    for x in variables:
        for d in range(1, n + 1):
            row[d] = row[d] + x * row[d - 1]
    return row[n]


def elementary(n: int, variables: Sequence):
    """e_n(variables); 1 for n == 0 and 0 for n < 0 or n > len(variables)."""
    variables = tuple(variables)
    return _elementary(int(n), variables, tuple(map(type, variables)))


@lru_cache(maxsize=65536)
def _elementary(n, variables, _types):
    if n < 0 or n > len(variables):
        return 0
    if n == 0:
        return 1
    row = [1] + [0] * n
    for x in variables:
        for d in range(n, 0, -1):
            row[d] = row[d] + x * row[d - 1]
    return row[n]


complete_h = complete_homogeneous
elementary_e = elementary


def schur(lam: Sequence[int], variables: Sequence):
    """Schur polynomial as a sum over interlacing chains.

    Each chain contributes prod_k x_k^{|lam^(k)| - |lam^(k-1)|}.
    """
    lam = Partition(lam)
    n = len(variables)
    if len(lam) > n:
        return 0
    total = 0
    for chain in interlacing_chains(lam, n):
        total = total + prod(variables[k - 1] ** (chain[k].size - chain[k - 1].size) for k in range(1, n + 1))
    return total


def schur_tableaux(lam: Sequence[int], variables: Sequence):
    """Schur polynomial as a sum of monomials x^T over semistandard fillings."""
    n = len(variables)
    total = 0
    for t in column_strict_tableaux(lam, n):
        term = 1
        for r in t.rows:
            for v in r:
                term = term * variables[v - 1]
        total = total + term
    return total


def schur_bialternant(lam: Sequence[int], variables: Sequence):
    """det(x_i^{lam_j + n - j}) / det(x_i^{n - j}); needs distinct variables."""
    n = len(variables)
    lam = Partition(lam)
    if len(lam) > n:
        return 0
    parts = lam.padded(n)
    num = det([[x ** (parts[j] + n - 1 - j) for j in range(n)] for x in variables])
    den = det([[x ** (n - 1 - j) for j in range(n)] for x in variables])
    return num / den


def dual_cauchy_residual(p: Sequence, q: Sequence):
    """sum_lam s_{lam'}(p) s_lam(q) - prod_{i,j} (1 + p_i q_j).

    Only partitions fitting in a len(q) x len(p) box contribute.
    """
    total = 0
    for lam in partitions_in_box(len(q), len(p)):
        total = total + schur(conjugate(lam), p) * schur(lam, q)
    rhs = prod(1 + a * b for a in p for b in q)
    return total - rhs
