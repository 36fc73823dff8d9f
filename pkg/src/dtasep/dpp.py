"""Determinantal structure of the particle positions.

All positions are strict coordinates. For an initial configuration ``y``
and rates ``p_{r+1..t}``, ``q_1..q_N`` the functions

    Psi^(N)_k(x) = [z^{x - y_k + N - k}] prod_{l=k+1..N} (q_l - z) prod_{l=r+1..t} (1 + p_l z)
    Psi^(n)_k    = Q_(n,N] Psi^(N)_k
    Phi^(n)_i(x) = sum_{j=i..n} (M^{-1})_{ij} Q_[j,n](virtual, x)

are biorthogonal, and the particle positions at time ``t`` form the left
edge of a determinantal point process on {1..N} x Z with kernel

    K(m, x; n, x') = -Q_(m,n](x, x') 1{n > m} + sum_{i=1..n} Psi^(m)_i(x) Phi^(n)_i(x').
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as iproduct
from typing import Callable, Sequence

from .dynamics import ParticleConfig, Rates, normalize_query
from .operators import (coefficient, falling_product, poly_mul, q_range, qdag_range, qinv_range,
                        rising_product, rstar_range, virtual_q_entry)
from .scalars import FLOAT, RATIONAL, det, one, prod, upper_triangular_inverse, zero


# -- triangular arrays ---------------------------------------------------------

class TriangularArray(tuple):
    """Rows x^(1), ..., x^(N) with x^(k) of length k, interlacing

        x^(k+1)_{j+1} < x^(k)_j <= x^(k+1)_j.
    """

    def __new__(cls, rows: Sequence[Sequence[int]]):
        rows = tuple(tuple(int(v) for v in r) for r in rows)
        for k, r in enumerate(rows, 1):
            if len(r) != k:
                raise ValueError(f"row {k} has length {len(r)}")
        for k in range(1, len(rows)):
            lo, hi = rows[k - 1], rows[k]
            for j in range(k):
                if not hi[j + 1] < lo[j] <= hi[j]:
                    raise ValueError(f"rows {k} and {k + 1} do not interlace at {j + 1}")
        return super().__new__(cls, rows)

    @property
    def N(self) -> int:
        return len(self)

    def left_edge(self) -> ParticleConfig:
        return ParticleConfig([self[k][k] for k in range(len(self))])

    def bottom(self) -> tuple[int, ...]:
        return self[-1]


def arrays_over(bottom: Sequence[int]) -> list[TriangularArray]:
    """Every triangular array whose last row is ``bottom``."""
    bottom = tuple(bottom)
    N = len(bottom)

    def rec(row):
        k = len(row)
        if k == 1:
            yield (row,)
            return
        ranges = [range(row[j + 1] + 1, row[j] + 1) for j in range(k - 1)]
        for cand in iproduct(*ranges):
            if all(a > b for a, b in zip(cand, cand[1:])):
                for rest in rec(cand):
                    yield rest + (row,)

    return [TriangularArray(a) for a in rec(bottom)] if N else []


# -- Psi, M, Phi -------------------------------------------------------------

def psi_top(k: int, x: int, y: Sequence[int], rates: Rates, r: int, t: int):
    """Psi^(N)_k(x) by coefficient extraction."""
    N = len(y)
    poly = _psi_poly(k, N, rates, r, t)
    return coefficient(poly, x - y[k - 1] + N - k)


_poly_cache: dict = {}


def _psi_poly(k, N, rates, r, t):
    key = (k, N, rates, r, t)
    if key not in _poly_cache:
        _poly_cache[key] = poly_mul(falling_product(rates.q[k:N]), rising_product(rates.p[r:t]))
    return _poly_cache[key]


def psi_top_support(k: int, y: Sequence[int], r: int, t: int) -> range:
    N = len(y)
    return range(y[k - 1] - (N - k), y[k - 1] + (t - r) + 1)


def psi_top_convolution(k: int, x: int, y: Sequence[int], rates: Rates, r: int, t: int):
    """Psi^(N)_k(x) as sum_u Rstar_(r,t](x, u) Q^{-1}_(k,N](u, y_k)."""
    N = len(y)
    total = 0
    for u in range(x - (t - r), x + 1):
        total = total + rstar_range(r, t, x, u, rates) * qinv_range(k + 1, N, u, y[k - 1], rates)
    return total


def psi(n: int, k: int, x: int, y: Sequence[int], rates: Rates, r: int, t: int):
    """Psi^(n)_k(x) = sum_z Q_(n,N](x, z) Psi^(N)_k(z), a finite sum."""
    N = len(y)
    if n == N:
        return psi_top(k, x, y, rates, r, t)
    total = 0
    for z in psi_top_support(k, y, r, t):
        if x - z < N - n:
            break
        total = total + q_range(n + 1, N, x, z, rates) * psi_top(k, z, y, rates, r, t)
    return total


def m_matrix(y: Sequence[int], rates: Rates, r: int, t: int) -> list[list]:
    """M_ij = sum_z Q_[i,N](virtual, z) Psi^(N)_j(z)."""
    N = len(y)
    return [[sum((virtual_q_entry(i, N, z, rates) * psi_top(j, z, y, rates, r, t)
                  for z in psi_top_support(j, y, r, t)), zero(rates.backend))
             for j in range(1, N + 1)] for i in range(1, N + 1)]


def m_matrix_closed(y: Sequence[int], rates: Rates, r: int, t: int) -> list[list]:
    """Residue evaluation: M_ij = q_i^{y_j+j-i} prod_l (1 + p_l q_i) / prod_{l=i+1..j} (q_l - q_i), i <= j."""
    N = len(y)
    ps = rates.p[r:t]
    out = [[zero(rates.backend)] * N for _ in range(N)]
    for i in range(1, N + 1):
        qi = rates.q[i - 1]
        growth = prod(1 + a * qi for a in ps)
        for j in range(i, N + 1):
            den = prod(rates.q[l - 1] - qi for l in range(i + 1, j + 1))
            out[i - 1][j - 1] = qi ** (y[j - 1] + j - i) * growth / den
    return out


class BiorthSystem:
    """Psi^(n)_k and Phi^(n)_k for one initial configuration, with memoised values."""

    def __init__(self, y: Sequence[int], rates: Rates, t: int, r: int = 0, check_regime: bool = True):
        self.y = ParticleConfig(y)
        self.N = self.y.N
        self.rates = rates.truncated(t, self.N)
        self.r, self.t = r, t
        if check_regime:
            self.rates.require_regime(t, self.N, ordered=True)
        self.M = m_matrix(self.y, self.rates, r, t)
        self.Minv = upper_triangular_inverse(self.M, rtol=1e-9 if self.backend == FLOAT else 0.0)
        self._psi: dict = {}
        self._phi: dict = {}

    @property
    def backend(self) -> str:
        return self.rates.backend

    def psi(self, n: int, k: int, x: int):
        key = (n, k, x)
        if key not in self._psi:
            self._psi[key] = psi(n, k, x, self.y, self.rates, self.r, self.t)
        return self._psi[key]

    def phi(self, n: int, i: int, x: int):
        key = (n, i, x)
        if key not in self._phi:
            self._phi[key] = sum((self.Minv[i - 1][j - 1] * virtual_q_entry(j, n, x, self.rates)
                                  for j in range(i, n + 1)), zero(self.backend))
        return self._phi[key]

    def phi_coefficients(self, n: int, i: int) -> dict[int, object]:
        """Phi^(n)_i(x) = sum_j C_j q_j^x; returns {j: C_j}."""
        out = {}
        for j in range(i, n + 1):
            out[j] = self.Minv[i - 1][j - 1] * virtual_q_entry(j, n, 0, self.rates)
        return out

    def psi_support_start(self, n: int, k: int) -> int:
        return self.y[k - 1] - (self.N - k) + (self.N - n)

    def pairing(self, n: int, i: int, j: int):
        """sum over all x of Psi^(n)_i(x) Phi^(n)_j(x), summed exactly.

        Left of the support of Psi the terms vanish. Far to the right
        Psi^(n)_i(x) = sum_l B_l q_l^{-x} over l in (n, N] (partial fractions of
        Q_(n,N]) and Phi^(n)_j(x) = sum_m C_m q_m^x over m <= n, so the tail is
        a finite sum of geometric series with ratio q_m / q_l < 1.
        """
        N, rates = self.N, self.rates
        lo = self.psi_support_start(n, i)
        sup = psi_top_support(i, self.y, self.r, self.t)
        hi = sup[-1] + (N - n) + 1
        total = zero(self.backend)
        for x in range(lo, hi):
            total += self.psi(n, i, x) * self.phi(n, j, x)
        if n == N:
            return total
        L = N - n
        B = {}
        for l in range(n + 1, N + 1):
            ql = rates.q[l - 1]
            A = one(self.backend) / prod(rates.q[m - 1] - ql for m in range(n + 1, N + 1) if m != l)
            B[l] = A * ql ** (L - 1) * sum((psi_top(i, z, self.y, rates, self.r, self.t) * ql ** z for z in sup),
                                           zero(self.backend))
        for x in (hi, hi + 1, hi + 3):
            fit = sum((b * rates.q[l - 1] ** (-x) for l, b in B.items()), zero(self.backend))
            if fit != self.psi(n, i, x) and (self.backend == RATIONAL or abs(fit - self.psi(n, i, x)) > 1e-9 * max(1.0, abs(fit))):
                raise ArithmeticError("tail expansion of Psi does not match")
        for l, b in B.items():
            for m, c in self.phi_coefficients(n, j).items():
                rho = rates.q[m - 1] / rates.q[l - 1]
                if not rho < 1:
                    raise ValueError("tail does not converge; q must be increasing")
                total += b * c * rho ** hi / (1 - rho)
        return total


# -- the correlation kernel --------------------------------------------------

class BiorthogonalKernel:
    """K(m, x; n, x') from the biorthogonal functions, memoised."""

    route = "biorthogonal"

    def __init__(self, system: BiorthSystem):
        self.system = system
        self._cache: dict = {}

    @property
    def backend(self) -> str:
        return self.system.backend

    @property
    def N(self) -> int:
        return self.system.N

    def __call__(self, m: int, x: int, n: int, xp: int):
        key = (m, x, n, xp)
        if key in self._cache:
            return self._cache[key]
        s = self.system
        val = zero(self.backend)
        if n > m:
            val -= q_range(m + 1, n, x, xp, s.rates)
        for i in range(1, n + 1):
            a = s.psi(m, i, x)
            if a != 0:
                val += a * s.phi(n, i, xp)
        self._cache[key] = val
        return val


def correlation_kernel(m: int, x: int, n: int, xp: int, system: BiorthSystem):
    return BiorthogonalKernel(system)(m, x, n, xp)


@dataclass
class CorrelationKernelTable:
    """Dense matrix of K restricted to {(k, x): x in [lower, upper_k)} over the queried levels."""

    points: list[tuple[int, int]]
    matrix: list[list]
    backend: str
    lower: int
    uppers: dict[int, int]


def event_thresholds(query, N: int) -> dict[int, int]:
    """Per particle, the largest threshold it must reach."""
    out: dict[int, int] = {}
    for k, s in normalize_query(query, N):
        out[k] = max(out.get(k, s), s)
    return dict(sorted(out.items()))


def tabulate_kernel(kernel: Callable, uppers: dict[int, int], lower: int, backend: str) -> CorrelationKernelTable:
    points = [(k, x) for k, s in uppers.items() for x in range(lower, s)]
    matrix = [[kernel(m, x, n, xp) for (n, xp) in points] for (m, x) in points]
    return CorrelationKernelTable(points, matrix, backend, lower, dict(uppers))


@dataclass
class FredholmResult:
    value: object
    lower: int
    size: int
    stabilized: bool
    history: list = field(default_factory=list)


def fredholm_table_det(table: CorrelationKernelTable):
    n = len(table.points)
    o, z = one(table.backend), zero(table.backend)
    a = [[(o if i == j else z) - table.matrix[i][j] for j in range(n)] for i in range(n)]
    return det(a, table.backend)


def default_lower(y: Sequence[int], t: int) -> int:
    return y[-1] - len(y) - t - 2


def fredholm_det(kernel: Callable, query, y: Sequence[int], t: int, lower: int | None = None,
                 grow: int = 5, tol: float = 1e-12, max_rounds: int = 20) -> FredholmResult:
    """det(I - chi K chi) with chi the indicator of {x < s_k} on the queried levels.

    The window starts at ``lower`` and moves left by ``grow`` until two
    successive determinants agree: exactly for rationals, within ``tol`` for
    floats.
    """
    backend = kernel.backend
    uppers = event_thresholds(query, len(y))
    L = default_lower(y, t) if lower is None else lower
    if not uppers:
        o = one(backend)  # determinant of the empty matrix, for every window
        return FredholmResult(o, L, 0, True, [(L, o), (L - grow, o)])
    history = []
    prev = None
    for _ in range(max_rounds):
        lo = min(L, min(uppers.values()))
        table = tabulate_kernel(kernel, uppers, lo, backend)
        val = fredholm_table_det(table)
        history.append((lo, val))
        if prev is not None:
            same = val == prev if backend == RATIONAL else abs(val - prev) < tol
            if same:
                return FredholmResult(val, lo, len(table.points), True, history)
        prev = val
        L = lo - grow
    raise ArithmeticError(f"window did not stabilise after {max_rounds} rounds: {history[-2:]}")


def multipoint_prob_kernel(y: Sequence[int], rates: Rates, t: int, query, route: str = "biorthogonal",
                           lower: int | None = None) -> FredholmResult:
    """P(Y_{k_i}(t) >= s_i for all i) as a Fredholm determinant.

    ``route="biorthogonal"`` needs strictly increasing q; ``route="hitting"``
    only needs distinct q.
    """
    y = ParticleConfig(y)
    kernel = make_kernel(y, rates, t, route)
    return fredholm_det(kernel, query, y, t, lower)


def make_kernel(y: Sequence[int], rates: Rates, t: int, route: str = "biorthogonal"):
    y = ParticleConfig(y)
    if route == "biorthogonal":
        return BiorthogonalKernel(BiorthSystem(y, rates, t))
    if route == "hitting":
        from .hitting import HittingKernel
        return HittingKernel(y, rates, t)
    raise ValueError(f"unknown route {route!r}")


# -- the measure on arrays ------------------------------------------------------

def dpp_weight(arr: TriangularArray, y: Sequence[int], rates: Rates, t: int, r: int = 0, x0: int | None = None):
    """Weight of an interlacing array under the determinantal measure.

    Without ``x0`` the Q form is used, where the first row of the level-k
    determinant is q_k^{x^(k)_j}. With ``x0`` (which must satisfy
    x0 <= y_N) the Qdag form with auxiliary entries x^(k-1)_k = x0 - k is used.
    """
    y = ParticleConfig(y)
    N = y.N
    if arr.N != N:
        raise ValueError("array depth differs from the number of particles")
    rates = rates.truncated(t, N)
    Z = rates.partition_function(r, t, N)
    q = rates.q
    bottom = arr.bottom()
    if x0 is None:
        w = one(rates.backend)
        for k in range(1, N + 1):
            above = arr[k - 2] if k > 1 else ()
            rows = [[q[k - 1] ** arr[k - 1][j] for j in range(k)]]
            for i in range(2, k + 1):
                rows.append([q_range(k, k, above[i - 2], arr[k - 1][j], rates) for j in range(k)])
            w = w * det(rows, rates.backend)
        w = w * det([[psi_top(i, bottom[j], y, rates, r, t) for j in range(N)] for i in range(1, N + 1)],
                    rates.backend)
        sign = -1 if (N * (N - 1) // 2) % 2 else 1
        zbar = sign * Z * prod(q[j] ** y[j] for j in range(N))
        return w / zbar
    if x0 > y[-1]:
        raise ValueError("x0 must not exceed the last particle")
    w = one(rates.backend)
    for k in range(1, N + 1):
        above = list(arr[k - 2]) if k > 1 else []
        above.append(x0 - k)
        rows = [[qdag_range(k, k, above[i], arr[k - 1][j], rates) for j in range(k)] for i in range(k)]
        w = w * det(rows, rates.backend)
    w = w * det([[(-1) ** (N - i) * psi_top(i, bottom[j], y, rates, r, t) for j in range(N)]
                 for i in range(1, N + 1)], rates.backend)
    zhat = Z * prod(q[i] ** (y[i] + i + 1 - x0) for i in range(N))
    return w / zhat


def bottom_rows(y: Sequence[int], r: int, t: int) -> list[tuple[int, ...]]:
    """Strictly decreasing rows inside [y_N, y_1 + t - r], a superset of the support."""
    y = ParticleConfig(y)
    lo, hi = y[-1], y[0] + (t - r)

    def rec(n, cap):
        if n == 0:
            yield ()
            return
        for v in range(cap, lo - 1, -1):
            for rest in rec(n - 1, v - 1):
                yield (v,) + rest

    return list(rec(y.N, hi))


def left_edge_marginal(y: Sequence[int], rates: Rates, t: int, r: int = 0, x0: int | None = None
                       ) -> dict[ParticleConfig, object]:
    """Law of the left edge under the array measure, by summing over all arrays."""
    out: dict[ParticleConfig, object] = {}
    for bottom in bottom_rows(y, r, t):
        for arr in arrays_over(bottom):
            w = dpp_weight(arr, y, rates, t, r, x0)
            if w != 0:
                e = arr.left_edge()
                out[e] = out.get(e, 0) + w
    return out
