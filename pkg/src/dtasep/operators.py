"""Local Toeplitz operators on Z and the determinantal kernels built from them.

Every elementary operator is translation invariant, ``T(x, y) = c(x - y)``,
and is described by its symbol ``sum_o c(o) z^o``:

==========  ==========================  =================================
operator    entry ``T(x, y)``           symbol
==========  ==========================  =================================
``Q_i``     ``q_i^(y-x)``, ``y < x``    ``z / (q_i - z)``, ``|z| < q_i``
``Qdag_i``  ``q_i^(y-x)``, ``y >= x``   ``z / (z - q_i)``, ``|z| > q_i``
``Qinv_i``  ``-1{y=x} + q_i 1{y=x+1}``  ``(q_i - z) / z``
``R_i``     ``1{y=x} + p_i 1{y=x+1}``   ``1 + p_i / z``
``Rstar_i`` ``R_i(y, x)``               ``1 + p_i z``
==========  ==========================  =================================

Ranges follow the usual conventions: ``Q_[m,n] = Q_m ... Q_n`` and
``Q_(m,n] = Q_[m+1,n]``. All entries are finite sums, so they are exact
under the rational backend.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product as iproduct
from typing import Sequence

from .combinatorics import complete_homogeneous as h, elementary as e
from .dynamics import ParticleConfig, Rates
from .scalars import det, prod, zero


def _sign(k: int) -> int:
    return -1 if k % 2 else 1


def _qs(rates: Rates, m: int, n: int) -> tuple:
    """q_m, ..., q_n (1-based, inclusive)."""
    if m < 1 or n > len(rates.q):
        raise IndexError(f"particle rates q_{m}..q_{n} not available")
    return rates.q[m - 1:n]


def _ps(rates: Rates, r: int, t: int) -> tuple:
    """p_{r+1}, ..., p_t."""
    if r < 0 or t > len(rates.p):
        raise IndexError(f"time rates p_{r + 1}..p_{t} not available")
    return rates.p[r:t]


# -- ranges of elementary operators ------------------------------------------

def q_range(m: int, n: int, x: int, y: int, rates: Rates):
    """Q_[m,n](x, y); for m > n + 1 this is the inverse Q_[n+1,m-1]^{-1}."""
    o = x - y
    if m == n + 1:
        return 1 if o == 0 else 0
    if m > n + 1:
        return qinv_range(n + 1, m - 1, x, y, rates)
    qs = _qs(rates, m, n)
    L = n - m + 1
    if o < L:
        return 0
    return _q_closed(o - L, qs)


@lru_cache(maxsize=1 << 16)
def _q_closed_cached(d, qs, _types):
    inv = tuple(1 / v for v in qs)
    return prod(inv) * h(d, inv)


def _q_closed(d, qs):
    return _q_closed_cached(d, qs, tuple(map(type, qs)))


def qdag_range(m: int, n: int, x: int, y: int, rates: Rates):
    """Qdag_[m,n](x, y) = h_{y-x}(q_m, ..., q_n)."""
    if m == n + 1:
        return 1 if x == y else 0
    return h(y - x, _qs(rates, m, n))


def qinv_range(m: int, n: int, x: int, y: int, rates: Rates):
    """Q^{-1}_[m,n](x, y) = (-1)^{n-m+1+x-y} e_{y-x}(q_m, ..., q_n)."""
    if m == n + 1:
        return 1 if x == y else 0
    L = n - m + 1
    return _sign(L + x - y) * e(y - x, _qs(rates, m, n))


def r_range(r: int, t: int, x: int, y: int, rates: Rates):
    """R_(r,t](x, y) = e_{y-x}(p_{r+1}, ..., p_t)."""
    return e(y - x, _ps(rates, r, t))


def rstar_range(r: int, t: int, x: int, y: int, rates: Rates):
    return e(x - y, _ps(rates, r, t))


def rstar_inv_range(r: int, t: int, x: int, y: int, rates: Rates):
    """Inverse of Rstar_(r,t]: (-1)^{x-y} h_{x-y}(p), supported on x >= y."""
    return _sign(x - y) * h(x - y, _ps(rates, r, t))


def qbar_range(j: int, k: int, x: int, y: int, rates: Rates):
    """Q_[j,k] strictly below the diagonal, (-1)^{k-j} Qdag_[j,k] on and above it."""
    if x > y:
        return q_range(j, k, x, y, rates)
    return _sign(k - j) * qdag_range(j, k, x, y, rates)


def qhat_range(j: int, k: int, x: int, y: int, rates: Rates):
    """prod_{l=j..k} (q_l - 1) times Qbar_[j,k](x, y)."""
    return prod(v - 1 for v in _qs(rates, j, k)) * qbar_range(j, k, x, y, rates)


def virtual_q_entry(j: int, k: int, y: int, rates: Rates):
    """Limit of q_j^x Q_[j,k](x, y) as x -> +inf.

    Equals q_j^{y+k-j} / prod_{l=j+1..k} (q_l - q_j), and 0 when k < j.
    """
    if k < j:
        return 0
    qj = rates.q[j - 1]
    if any(not rates.q[l - 1] > qj for l in range(j + 1, k + 1)):
        # otherwise q_j^x Q_[j,k](x, y) has no limit
        raise ValueError(f"virtual entry needs q_{j} < q_l for l = {j + 1}..{k}")
    den = prod(rates.q[l - 1] - qj for l in range(j + 1, k + 1))
    return qj ** (y + k - j) / den


# -- polynomial coefficients -------------------------------------------------

def poly_mul(a: Sequence, b: Sequence) -> list:
    out = [0] * (len(a) + len(b) - 1)
    for i, u in enumerate(a):
        if u == 0:
            continue
        for j, v in enumerate(b):
            out[i + j] = out[i + j] + u * v
    return out


def falling_product(roots: Sequence) -> list:
    """Coefficients of prod (r - z) in increasing powers of z."""
    out = [1]
    for r in roots:
        out = poly_mul(out, [r, -1])
    return out


def rising_product(rates_: Sequence) -> list:
    """Coefficients of prod (1 + a z)."""
    out = [1]
    for a in rates_:
        out = poly_mul(out, [1, a])
    return out


def coefficient(poly: Sequence, k: int):
    return poly[k] if 0 <= k < len(poly) else 0


# -- general compositions ----------------------------------------------------

FACTOR_KINDS = ("Q", "Qinv", "Qdag", "R", "Rstar", "Qbar")


@dataclass(frozen=True)
class Factor:
    kind: str
    index: int
    upper: int | None = None  # only for Qbar, which covers index..upper

    def __post_init__(self):
        if self.kind not in FACTOR_KINDS:
            raise ValueError(f"unknown factor {self.kind!r}")
        if (self.kind == "Qbar") != (self.upper is not None):
            raise ValueError("Qbar needs an index range, other factors a single index")


@dataclass(frozen=True)
class OperatorSpec:
    """Ordered composition of elementary factors, leftmost applied first in x."""

    factors: tuple[Factor, ...]

    @classmethod
    def of(cls, *items) -> "OperatorSpec":
        out = []
        for it in items:
            out.append(it if isinstance(it, Factor) else Factor(*it))
        return cls(tuple(out))

    def __matmul__(self, other: "OperatorSpec") -> "OperatorSpec":
        return OperatorSpec(self.factors + other.factors)


def entry(spec: OperatorSpec, x: int, y: int, rates: Rates):
    """Matrix entry of a composition by exact finite convolution.

    Finite factors (Qinv, R, Rstar) are multiplied into a Laurent
    polynomial. At most one family of one-sided infinite factors may be
    present: only Q's, only Qdag's, or a single Qbar. Mixing Q and Qdag has no
    common domain of convergence that is checked here, so it is rejected.
    """
    laurent = {0: 1}
    qs, qdags, qbar = [], [], None
    for f in spec.factors:
        if f.kind == "Q":
            qs.append(f.index)
        elif f.kind == "Qdag":
            qdags.append(f.index)
        elif f.kind == "Qbar":
            if qbar is not None:
                raise ValueError("at most one Qbar factor is supported")
            qbar = (f.index, f.upper)
        else:
            if f.kind == "Qinv":
                poly = {0: -1, -1: rates.q[f.index - 1]}
            elif f.kind == "R":
                poly = {0: 1, -1: rates.p[f.index - 1]}
            else:
                poly = {0: 1, 1: rates.p[f.index - 1]}
            nxt: dict = {}
            for a, u in laurent.items():
                for b, v in poly.items():
                    nxt[a + b] = nxt.get(a + b, 0) + u * v
            laurent = nxt
    families = sum(bool(v) for v in (qs, qdags, qbar))
    if families > 1:
        raise ValueError("composition mixes one-sided operators of opposite directions")
    o = x - y

    if qs:
        qvals = tuple(rates.q[i - 1] for i in qs)
        L = len(qvals)

        def inf(d):
            return _q_closed(d - L, qvals) if d >= L else 0
    elif qdags:
        qvals = tuple(rates.q[i - 1] for i in qdags)

        def inf(d):
            return h(-d, qvals)
    elif qbar is not None:
        j, k = qbar

        def inf(d):
            return qbar_range(j, k, d, 0, rates)
    else:
        def inf(d):
            return 1 if d == 0 else 0

    total = 0
    for a, c in laurent.items():
        if c != 0:
            total = total + c * inf(o - a)
    return total


# -- determinantal kernels ---------------------------------------------------

def _as_parts(v: Sequence[int], N: int) -> tuple[int, ...]:
    v = tuple(int(a) for a in v)
    if len(v) > N:
        raise ValueError(f"{v} has more than {N} entries")
    v = v + (0,) * (N - len(v))
    if any(a < b for a, b in zip(v, v[1:])):
        raise ValueError(f"{v} is not weakly decreasing")
    return v


def lambda_kernel(lam: Sequence[int], yp: Sequence[int], rates: Rates, N: int | None = None):
    """det( Qdag_(i,N](y'_i - i, lam_j - j) ) in weak coordinates."""
    N = len(rates.q) if N is None else N
    lam, yp = _as_parts(lam, N), _as_parts(yp, N)
    m = [[qdag_range(i + 1, N, yp[i - 1] - i, lam[j - 1] - j, rates) for j in range(1, N + 1)]
         for i in range(1, N + 1)]
    return det(m, rates.backend)


def lambda_inverse_kernel(y: Sequence[int], mu: Sequence[int], rates: Rates, N: int | None = None):
    """det( (-1)^{N-j} Q^{-1}_(j,N](mu_i - i, y_j - j) ) in weak coordinates."""
    N = len(rates.q) if N is None else N
    y, mu = _as_parts(y, N), _as_parts(mu, N)
    m = [[_sign(N - j) * qinv_range(j + 1, N, mu[i - 1] - i, y[j - 1] - j, rates) for j in range(1, N + 1)]
         for i in range(1, N + 1)]
    return det(m, rates.backend)


def r_kernel_unnormalized(mu: Sequence[int], lam: Sequence[int], rates: Rates, r: int, t: int,
                          N: int | None = None):
    """det( R_(r,t](mu_i - i, lam_j - j) )."""
    N = len(rates.q) if N is None else N
    mu, lam = _as_parts(mu, N), _as_parts(lam, N)
    m = [[r_range(r, t, mu[i - 1] - i, lam[j - 1] - j, rates) for j in range(1, N + 1)]
         for i in range(1, N + 1)]
    return det(m, rates.backend)


def r_kernel(mu: Sequence[int], lam: Sequence[int], rates: Rates, r: int, t: int, N: int | None = None):
    N = len(rates.q) if N is None else N
    return r_kernel_unnormalized(mu, lam, rates, r, t, N) / rates.partition_function(r, t, N)


def _decreasing_tuples(lows: Sequence[int], highs: Sequence[int]):
    """Weakly decreasing integer tuples v with lows[i] <= v[i] <= highs[i]."""
    n = len(lows)

    def rec(i, cap):
        if i == n:
            yield ()
            return
        top = highs[i] if cap is None else min(highs[i], cap)
        for v in range(top, lows[i] - 1, -1):
            for rest in rec(i + 1, v):
                yield (v,) + rest

    yield from rec(0, None)


def transition_kernel(y: Sequence[int], yp: Sequence[int], rates: Rates, r: int, t: int):
    """P(Y(t) = y' | Y(r) = y) as prod q^{y'-y} sum Lambda^{-1}(y, mu) R(mu, lam) Lambda(lam, y').

    ``y`` and ``y'`` are strict positions; the kernels act on the weak ones.
    The sum runs over lam with y' <= lam <= y + (t - r) and mu with
    lam - (t - r) <= mu <= min(lam, y) coordinatewise, which contains every
    nonzero term.
    """
    y, yp = ParticleConfig(y), ParticleConfig(yp)
    N, T = y.N, t - r
    yw, ypw = y.weak(), yp.weak()
    tilt = prod(rates.q[k] ** (yp[k] - y[k]) for k in range(N))
    total = 0
    lam_inv_cache: dict = {}
    for lam in _decreasing_tuples(ypw, [v + T for v in yw]):
        lk = lambda_kernel(lam, ypw, rates, N)
        if lk == 0:
            continue
        for mu in _decreasing_tuples([v - T for v in lam], [min(a, b) for a, b in zip(lam, yw)]):
            rk = r_kernel_unnormalized(mu, lam, rates, r, t, N)
            if rk == 0:
                continue
            if mu not in lam_inv_cache:
                lam_inv_cache[mu] = lambda_inverse_kernel(yw, mu, rates, N)
            total = total + lam_inv_cache[mu] * rk * lk
    return tilt * total / rates.partition_function(r, t, N)


def transition_support(y: Sequence[int], T: int) -> list[ParticleConfig]:
    """Configurations reachable from ``y`` in ``T`` steps (each particle moves 0..T)."""
    y = ParticleConfig(y)
    out = []
    for d in iproduct(range(T + 1), repeat=y.N):
        cand = [a + b for a, b in zip(y, d)]
        if all(a > b for a, b in zip(cand, cand[1:])):
            out.append(ParticleConfig(cand))
    return out


# -- two determinant forms on a triangular array --------------------------------

@dataclass(frozen=True)
class AugmentedArray:
    """Triangular array x^(k)_j (1 <= j <= k <= N) with its two auxiliary diagonals.

    ``rows[k-1]`` is (x^(k)_1, ..., x^(k)_k); ``left[k-1]`` is x^(k-1)_k and
    ``right[k-1]`` is x^(k-1)_0.
    """

    rows: tuple[tuple[int, ...], ...]
    left: tuple[int, ...]
    right: tuple[int, ...]

    @property
    def N(self) -> int:
        return len(self.rows)

    def value(self, level: int, j: int) -> int:
        if level >= 1 and 1 <= j <= level:
            return self.rows[level - 1][j - 1]
        if j == level + 1 and level + 1 <= self.N:
            return self.left[level]
        if j == 0 and level + 1 <= self.N:
            return self.right[level]
        raise KeyError((level, j))

    def get(self, level: int, j: int) -> int | None:
        try:
            return self.value(level, j)
        except (KeyError, IndexError):
            return None

    def violations(self) -> list[str]:
        """Failures of x^(i)_j < x^(i-1)_{j-1} <= x^(i)_{j-1} wherever the entries exist."""
        out = []
        for i in range(1, self.N + 1):
            for j in range(1, i + 2):
                a, b, c = self.get(i, j), self.get(i - 1, j - 1), self.get(i, j - 1)
                if a is not None and b is not None and not a < b:
                    out.append(f"x^({i})_{j} < x^({i - 1})_{j - 1}")
                if b is not None and c is not None and not b <= c:
                    out.append(f"x^({i - 1})_{j - 1} <= x^({i})_{j - 1}")
        return out


@dataclass(frozen=True)
class DetEqualityResult:
    lhs: object
    rhs: object
    interlacing_ok: bool
    violations: tuple[str, ...]

    @property
    def equal(self) -> bool:
        return self.lhs == self.rhs


def det_equality_check(arr: AugmentedArray, rates: Rates) -> DetEqualityResult:
    """Compare the Qdag form and the Q form of the weight of a triangular array.

    lhs = prod_k q_k^{x^(k-1)_k} det[ Qdag_k(x^(k-1)_i, x^(k)_j) ]_{i,j=1..k}
    rhs = prod_k q_k^{x^(k-1)_0} det[ Q_k(x^(k-1)_{i-1}, x^(k)_j) ]_{i,j=1..k}
    """
    v = tuple(arr.violations())
    if v:
        z = zero(rates.backend)
        return DetEqualityResult(z, z, False, v)
    N = arr.N
    lhs, rhs = 1, 1
    for k in range(1, N + 1):
        a = [[qdag_range(k, k, arr.value(k - 1, i), arr.value(k, j), rates) for j in range(1, k + 1)]
             for i in range(1, k + 1)]
        b = [[q_range(k, k, arr.value(k - 1, i - 1), arr.value(k, j), rates) for j in range(1, k + 1)]
             for i in range(1, k + 1)]
        qk = rates.q[k - 1]
        lhs = lhs * qk ** arr.value(k - 1, k) * det(a, rates.backend)
        rhs = rhs * qk ** arr.value(k - 1, 0) * det(b, rates.backend)
    return DetEqualityResult(lhs, rhs, True, ())
