"""Hitting-time form of the correlation kernel.

The biorthogonal functions are traded for a random walk ``S`` with strictly
negative geometric steps,

    P(S_l = x' | S_{l-1} = x) = (q_l - 1) q_l^{x' - x},   x' < x,

killed the first time it gets above the initial configuration,
``tau = min{m : S_m > y_{m+1}}``. The kernel is

    K(m, x; n, x') = -Q_(m,n](x, x') 1{n > m} + sum_z S_[1,m](x, z) Sbar_epi_n(z, x'),

with

    S_[j,k](x, y)    = [z^{x-y+k-j+1}] prod_{l=j..k} (q_l - z) prod_l (1 + p_l z)
    Sbar_[j,k](x, y) = prod_{l=j..k} (q_l - 1) sum_{i=j..k} q_i^{y-x+k-j}
                       / ( prod_{l != i} (q_l - q_i) prod_l (1 + p_l q_i) )
    Sbar_epi_n(x, y) = E_x[ Sbar_[tau+1,n](S_tau, y) 1{tau < n} ] / prod_{l=1..n} (q_l - 1).

Only distinct particle rates are needed, not an ordering.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .dynamics import ParticleConfig, Rates
from .operators import (coefficient, falling_product, poly_mul, q_range, qbar_range, qhat_range,
                        qinv_range, rising_product, rstar_inv_range, rstar_range)
from .scalars import one, prod, zero


def _check_distinct(qs: Sequence, what: str = "q") -> None:
    if len(set(qs)) < len(qs):
        raise ValueError(f"repeated values in {what}; perturb them with distinct_rates()")


# -- S and Sbar ---------------------------------------------------------------

_s_poly_cache: dict = {}


def s_kernel(j: int, k: int, r: int, t: int, x: int, y: int, rates: Rates):
    """S_[j,k],(r,t](x, y), a polynomial coefficient (equal to Q^{-1}_[j,k] Rstar_(r,t])."""
    key = (j, k, r, t, rates)
    poly = _s_poly_cache.get(key)
    if poly is None:
        poly = poly_mul(falling_product(rates.q[j - 1:k]), rising_product(rates.p[r:t]))
        _s_poly_cache[key] = poly
    return coefficient(poly, x - y + k - j + 1)


def s_kernel_convolution(j: int, k: int, r: int, t: int, x: int, y: int, rates: Rates):
    """S_[j,k],(r,t](x, y) as sum_u Q^{-1}_[j,k](x, u) Rstar_(r,t](u, y)."""
    total = 0
    for u in range(x, x + (k - j + 1) + 1):
        total = total + qinv_range(j, k, x, u, rates) * rstar_range(r, t, u, y, rates)
    return total


_sbar_coef_cache: dict = {}


def _sbar_coefficients(j, k, r, t, rates):
    """[(q_i, c_i)] with Sbar_[j,k](x, y) = sum_i c_i q_i^{y-x+k-j}."""
    key = (j, k, r, t, rates)
    out = _sbar_coef_cache.get(key)
    if out is None:
        qs = rates.q[j - 1:k]
        _check_distinct(qs)
        ps = rates.p[r:t]
        front = prod(v - 1 for v in qs)
        out = []
        for i, qi in enumerate(qs):
            den = prod(ql - qi for l, ql in enumerate(qs) if l != i) * prod(1 + a * qi for a in ps)
            out.append((qi, front / den))
        _sbar_coef_cache[key] = out
    return out


def sbar_kernel(j: int, k: int, r: int, t: int, x: int, y: int, rates: Rates):
    """Sbar_[j,k],(r,t](x, y) from the residues at q_j, ..., q_k (exact)."""
    d = y - x + k - j
    total = zero(rates.backend)
    for qi, c in _sbar_coefficients(j, k, r, t, rates):
        total += c * qi ** d
    return total


def sbar_kernel_series(j: int, k: int, r: int, t: int, x: int, y: int, rates: Rates, terms: int | None = None):
    """prod (q_l - 1) sum_{u >= y} Qbar_[j,k](x, u) Rstar^{-1}_(r,t](u, y), truncated.

    The series converges only when every p_l q_i < 1; the truncation point is
    chosen so that the neglected tail is below double precision.
    """
    qs, ps = rates.q[j - 1:k], rates.p[r:t]
    if not ps:
        terms = 1
    rho = float(max(ps, default=0)) * float(max(qs))
    if rho >= 1:
        raise ValueError(f"series form needs p q < 1, got max p q = {rho}")
    if terms is None:
        # h_m(p) q^m grows at most like m^{t} rho^m
        terms = 40
        while terms ** (len(ps) + k - j + 1) * rho ** terms > 1e-20 and terms < 5000:
            terms += 20
    total = zero(rates.backend)
    for u in range(y, y + terms):
        total += qbar_range(j, k, x, u, rates) * rstar_inv_range(r, t, u, y, rates)
    return prod(v - 1 for v in qs) * total


# -- the killed walk ---------------------------------------------------------------

@dataclass
class HittingLaw:
    """Joint law of (tau, S_tau) on {tau < horizon} and the mass of {tau >= horizon}."""

    start: int
    horizon: int
    hits: dict[tuple[int, int], object] = field(default_factory=dict)
    survival: object = 0

    def total(self):
        return sum(self.hits.values(), zero_like(self.survival)) + self.survival


def zero_like(x):
    return 0.0 if isinstance(x, float) else Fraction(0)


def _below_mass(q, x: int, c: int):
    """P(next position <= c) from x, for c < x: sum_{x' <= c} (q - 1) q^{x' - x} = q^{c - x + 1}."""
    return q ** (c - x + 1)


def hitting_law(z1: int, y: Sequence[int], horizon: int, rates: Rates, start: int = 0) -> HittingLaw:
    """Law of the walk started from S_start = z1 up to its first passage above ``y``.

    Step ``l`` uses rate ``q_l``; the walk is stopped at the first time
    ``m >= start`` with S_m > y_{m+1}. Positions at or below ``y_horizon``
    can no longer pass before ``horizon`` and are lumped into the
    survival mass with a geometric tail, so everything is a finite sum.
    """
    y = tuple(y)
    if horizon > len(y):
        raise ValueError("horizon exceeds the number of particles")
    o = one(rates.backend)
    law = HittingLaw(start, horizon, {}, zero(rates.backend))
    if start >= horizon:
        law.survival = o
        return law
    if z1 > y[start]:
        law.hits[(start, z1)] = o
        return law
    floor = y[horizon - 1]
    alive = {z1: o}  # positions at time m-1 that have not passed yet, all above ``floor``
    lumped = zero(rates.backend)
    if z1 <= floor:
        alive, lumped = {}, o
    for m in range(start + 1, horizon):
        q = rates.q[m - 1]
        barrier = y[m]  # y_{m+1}
        nxt: dict[int, object] = {}
        for x, w in alive.items():
            for xp in range(x - 1, barrier, -1):
                law.hits[(m, xp)] = law.hits.get((m, xp), 0) + w * (q - 1) * q ** (xp - x)
            top = min(x - 1, barrier)
            for xp in range(top, floor, -1):
                nxt[xp] = nxt.get(xp, 0) + w * (q - 1) * q ** (xp - x)
            lumped += w * _below_mass(q, x, min(top, floor))
        alive = nxt
    law.survival = lumped + sum(alive.values(), zero(rates.backend))
    return law


def sbar_epi(n: int, r: int, t: int, x: int, yv: int, y: Sequence[int], rates: Rates, law: HittingLaw | None = None):
    """E_x[ Sbar_[tau+1,n](S_tau, yv) 1{tau < n} ] / prod_{l=1..n} (q_l - 1)."""
    if law is None:
        law = hitting_law(x, y, n, rates)
    total = zero(rates.backend)
    for (k, w), pr in law.hits.items():
        total += sbar_kernel(k + 1, n, r, t, w, yv, rates) * pr
    return total / prod(v - 1 for v in rates.q[:n])


class HittingKernel:
    """K(m, x; n, x') through the killed walk, memoised."""

    route = "hitting"

    def __init__(self, y: Sequence[int], rates: Rates, t: int, check_regime: bool = True):
        self.y = ParticleConfig(y)
        self.N = self.y.N
        self.t = t
        self.rates = rates.truncated(t, self.N)
        if check_regime:
            self.rates.require_regime(t, self.N, ordered=False)
        _check_distinct(self.rates.q)
        self._laws: dict = {}
        self._epi: dict = {}
        self._cache: dict = {}

    @property
    def backend(self) -> str:
        return self.rates.backend

    def law(self, n: int, x: int) -> HittingLaw:
        key = (n, x)
        if key not in self._laws:
            self._laws[key] = hitting_law(x, self.y, n, self.rates)
        return self._laws[key]

    def epi(self, n: int, z: int, xp: int):
        key = (n, z, xp)
        if key not in self._epi:
            self._epi[key] = sbar_epi(n, 0, self.t, z, xp, self.y, self.rates, self.law(n, z))
        return self._epi[key]

    def __call__(self, m: int, x: int, n: int, xp: int):
        key = (m, x, n, xp)
        if key in self._cache:
            return self._cache[key]
        val = zero(self.backend)
        if n > m:
            val -= q_range(m + 1, n, x, xp, self.rates)
        for z in range(x - self.t, x + m + 1):
            s = s_kernel(1, m, 0, self.t, x, z, self.rates)
            if s != 0:
                val += s * self.epi(n, z, xp)
        self._cache[key] = val
        return val


def hitting_kernel(m: int, x: int, n: int, xp: int, y: Sequence[int], rates: Rates, t: int):
    return HittingKernel(y, rates, t)(m, x, n, xp)


def distinct_rates(rates: Rates, eps=Fraction(1, 2 ** 40)) -> Rates:
    """Separate repeated particle rates: the i-th copy of a value v becomes v (1 + i eps)."""
    seen: dict = {}
    q = []
    for v in rates.q:
        i = seen.get(v, 0)
        seen[v] = i + 1
        q.append(v * (1 + i * eps))
    return Rates(rates.p, tuple(q), rates.backend)


def richardson_limit(f, rates: Rates, eps=Fraction(1, 2 ** 40)):
    """Limit of f(perturbed rates) as the perturbation vanishes, with a first-order Richardson step.

    Returns (estimate, difference between the two perturbation sizes).
    """
    a = f(distinct_rates(rates, eps))
    b = f(distinct_rates(rates, 2 * eps))
    return 2 * a - b, abs(a - b)


# -- the boundary value problem -------------------------------------------------

class BvpSolution:
    """h^n_k(l, x) for 0 <= l <= k, defined by

        h(l+1, x) = -h(l, x) + q_{n-l} h(l, x-1)
        h(l, y_{n-l}) = 0 for l < k
        h(k, x) = q_{n-k}^{x - y_{n-k}}

    and computed level by level with the one-step summation formula.
    """

    def __init__(self, n: int, k: int, y: Sequence[int], rates: Rates):
        if not 0 <= k <= n - 1:
            raise ValueError("need 0 <= k <= n - 1")
        if n > len(y):
            raise ValueError("n exceeds the number of particles")
        self.n, self.k, self.y, self.rates = n, k, tuple(y), rates
        self._memo: dict = {}

    def anchor(self, level: int) -> tuple[object, int]:
        """(q_{n-l}, y_{n-l})."""
        idx = self.n - level
        return self.rates.q[idx - 1], self.y[idx - 1]

    def __call__(self, level: int, x: int):
        if not 0 <= level <= self.k:
            raise ValueError("level outside 0..k")
        key = (level, x)
        if key in self._memo:
            return self._memo[key]
        q, Y = self.anchor(level)
        if level == self.k:
            val = q ** (x - Y)
        elif x <= Y:
            val = zero(self.rates.backend)
            for u in range(x + 1, Y + 1):
                val += q ** (x - u) * self(level + 1, u)
        else:
            val = zero(self.rates.backend)
            for u in range(Y + 1, x + 1):
                val -= q ** (x - u) * self(level + 1, u)
        self._memo[key] = val
        return val


def bvp_solve(n: int, k: int, y: Sequence[int], rates: Rates, window: range) -> dict[tuple[int, int], object]:
    sol = BvpSolution(n, k, y, rates)
    return {(l, x): sol(l, x) for l in range(k + 1) for x in window}


def bvp_residuals(sol: BvpSolution, window: range) -> dict[str, list]:
    """Residuals of the recursion, the zeros and the terminal condition on ``window``."""
    rec, zeros, term = [], [], []
    for l in range(sol.k):
        q, Y = sol.anchor(l)
        for x in window:
            rec.append(sol(l + 1, x) - (-sol(l, x) + q * sol(l, x - 1)))
        zeros.append(sol(l, Y))
    q, Y = sol.anchor(sol.k)
    for x in window:
        term.append(sol(sol.k, x) - q ** (x - Y))
    return {"recursion": rec, "zeros": zeros, "terminal": term}


def bvp_hitting_rep(n: int, k: int, level: int, x: int, y: Sequence[int], rates: Rates):
    """P_{S*_{l-1} = x}(tau* = k) / prod_{j=l..k-1} (q_{n-j} - 1), for x <= y_{n-l}.

    S* steps to the right, P(S*_j = u | S*_{j-1} = v) = (q_{n-j} - 1) q_{n-j}^{v-u}
    for u > v, and tau* is the first j >= l with S*_j > y_{n-j}.
    """
    y = tuple(y)
    if x > y[n - level - 1]:
        raise ValueError("start must not exceed y_{n-l}")
    layer = {x: one(rates.backend)}
    for j in range(level, k):
        q, Y = rates.q[n - j - 1], y[n - j - 1]
        nxt: dict = {}
        for v, w in layer.items():
            for u in range(v + 1, Y + 1):
                nxt[u] = nxt.get(u, 0) + w * (q - 1) * q ** (v - u)
        layer = nxt
    q, Y = rates.q[n - k - 1], y[n - k - 1]
    total = zero(rates.backend)
    for v, w in layer.items():
        # P(S*_k > Y) from v: the whole tail sum_{u > max(v, Y)} (q - 1) q^{v-u}
        total += w * q ** (v - max(v, Y))
    return total / prod(rates.q[n - j - 1] - 1 for j in range(level, k))


def bvp_from_phi(system, n: int, k: int, level: int, x: int):
    """Phi^(n)_{n-k} composed with Rstar_(r,t] Q^{-1}_(n-l,n], a finite sum."""
    rates, r, t = system.rates, system.r, system.t
    poly = poly_mul(falling_product(rates.q[n - level:n]), rising_product(rates.p[r:t]))
    total = zero(system.backend)
    for u in range(x - level, x + (t - r) + 1):
        c = coefficient(poly, u - x + level)
        if c != 0:
            total += system.phi(n, n - k, u) * c
    return total


# -- the G function -----------------------------------------------------------------

def g_function(n: int, j: int, k: int, z1: int, z2: int, y: Sequence[int], rates: Rates, mode: str = "sum"):
    """G^(n)_{j,k}(z1, z2) either as a finite sum over BVP solutions or through the killed walk."""
    y = tuple(y)
    if mode == "sum":
        total = zero(rates.backend)
        for i in range(j + 1, n - k + 1):
            total += q_range(j + 1, i, z1, y[i - 1], rates) * BvpSolution(n, n - i, y, rates)(k, z2)
        return total
    if mode == "hitting":
        H = n - k
        if j >= H:
            return zero(rates.backend)
        law = hitting_law(z1, y, H, rates, start=j)
        total = zero(rates.backend)
        for (tau, w), pr in law.hits.items():
            total += qhat_range(tau + 1, H, w, z2, rates) * pr
        return total / prod(rates.q[l - 1] - 1 for l in range(j + 1, H + 1))
    raise ValueError(f"unknown mode {mode!r}")


def g_paths(n: int, z1: int, z2: int, y: Sequence[int], rates: Rates):
    """G^(n)_{0,0}(z1, z2) for z2 <= y_n from right-moving walk paths.

    Sum over z2 < s_0 < ... < s_{n-1} = z1 passing above y at some step
    (s_j > y_{n-j}) of prod_j (q_{n-j} - 1) q_{n-j}^{s_{j-1} - s_j}, divided by
    prod_j (q_{n-j} - 1).
    """
    y = tuple(y)
    if z2 > y[n - 1]:
        raise ValueError("path picture needs z2 <= y_n")
    layer = {(z2, False): one(rates.backend)}
    for j in range(n):
        q, Y = rates.q[n - j - 1], y[n - j - 1]
        nxt: dict = {}
        for (v, passed), w in layer.items():
            # the last step must land exactly on z1
            targets = [z1] if j == n - 1 else range(v + 1, z1)
            for u in targets:
                if u <= v:
                    continue
                key = (u, passed or u > Y)
                nxt[key] = nxt.get(key, 0) + w * (q - 1) * q ** (v - u)
        layer = nxt
    total = sum((w for (v, passed), w in layer.items() if passed and v == z1), zero(rates.backend))
    return total / prod(rates.q[n - j - 1] - 1 for j in range(n))
