"""Discrete-time TASEP with sequential update and its exact oracles.

Particles sit at strictly decreasing integer positions ``y_1 > y_2 > ...``.
At step ``s`` particle ``k`` tries to jump one site to the right with
probability ``p_s q_k / (1 + p_s q_k)``, independently; the update runs from
the front particle backwards, so a particle may move into the site its
predecessor has just left:

    Y_k(s) = min(Y_{k-1}(s) - 1, Y_k(s-1) + W[s, k]),   Y_0 = +inf.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct
from typing import Sequence

import numpy as np

from . import core
from .drsk import BitMatrix
from .scalars import RATIONAL, FLOAT, check_backend, one, prod, to_scalar

INF = float("inf")


class ParticleConfig(tuple):
    """Strictly decreasing particle positions (front particle first)."""

    def __new__(cls, positions: Sequence[int]):
        positions = tuple(int(v) for v in positions)
        if any(a <= b for a, b in zip(positions, positions[1:])):
            raise ValueError(f"positions must be strictly decreasing: {positions}")
        return super().__new__(cls, positions)

    @property
    def N(self) -> int:
        return len(self)

    def weak(self) -> tuple[int, ...]:
        """Shifted positions y_k + k, weakly decreasing."""
        return tuple(v + k for k, v in enumerate(self, 1))

    @classmethod
    def from_weak(cls, weak: Sequence[int]) -> "ParticleConfig":
        return cls([v - k for k, v in enumerate(weak, 1)])


@dataclass(frozen=True)
class Rates:
    """Time rates ``p`` (indexed by step, 1-based) and particle rates ``q``."""

    p: tuple
    q: tuple
    backend: str = RATIONAL

    def __post_init__(self):
        check_backend(self.backend)
        object.__setattr__(self, "p", tuple(to_scalar(v, self.backend) for v in self.p))
        object.__setattr__(self, "q", tuple(to_scalar(v, self.backend) for v in self.q))
        if any(v <= 0 for v in self.p) or any(v <= 0 for v in self.q):
            raise ValueError("rates must be positive")

    def with_backend(self, backend: str) -> "Rates":
        if backend == self.backend:
            return self
        if backend == FLOAT:
            return Rates(tuple(float(v) for v in self.p), tuple(float(v) for v in self.q), FLOAT)
        raise ValueError("cannot recover exact rates from floats")

    def truncated(self, t: int | None = None, N: int | None = None) -> "Rates":
        p = self.p if t is None else self.p[:t]
        q = self.q if N is None else self.q[:N]
        if t is not None and len(p) < t or N is not None and len(q) < N:
            raise ValueError("not enough rates")
        return Rates(p, q, self.backend)

    def odds(self, s: int, k: int):
        return self.p[s - 1] * self.q[k - 1]

    def jump_prob(self, s: int, k: int):
        a = self.odds(s, k)
        return a / (1 + a)

    def partition_function(self, r: int, t: int, N: int):
        """prod_{i=r+1..t} prod_{j=1..N} (1 + p_i q_j)."""
        return prod((1 + self.p[i - 1] * self.q[j - 1] for i in range(r + 1, t + 1) for j in range(1, N + 1)),
                    one(self.backend))

    def regime_failures(self, t: int, N: int, ordered: bool = False) -> list[str]:
        """Predicates of the determinantal formulas that these rates violate.

        The boundary ``p_i q_k = 1`` is accepted: every formula evaluated here
        is a finite rational expression that stays regular there.
        """
        fails = []
        if len(self.p) < t:
            fails.append(f"need {t} time rates, have {len(self.p)}")
        if len(self.q) < N:
            fails.append(f"need {N} particle rates, have {len(self.q)}")
        p, q = self.p[:t], self.q[:N]
        for k, v in enumerate(q, 1):
            if not v > 1:
                fails.append(f"q_{k} = {v} is not > 1")
        for i, a in enumerate(p, 1):
            for k, b in enumerate(q, 1):
                if a * b > 1:
                    fails.append(f"p_{i} q_{k} = {a * b} exceeds 1")
        if len(set(q)) < len(q):
            fails.append("particle rates q are not pairwise distinct")
        elif ordered and any(a >= b for a, b in zip(q, q[1:])):
            fails.append("particle rates q are not strictly increasing")
        return fails

    def require_regime(self, t: int, N: int, ordered: bool = False) -> None:
        fails = self.regime_failures(t, N, ordered)
        if fails:
            raise ValueError("rates outside the supported regime: " + "; ".join(fails))


def step(config: Sequence[int], jumps: Sequence[int]) -> ParticleConfig:
    """One time step driven by the 0/1 row ``jumps``, front particle first."""
    out = []
    left = INF
    for y, w in zip(config, jumps):
        cand = min(left - 1, y + int(w))
        out.append(int(cand))
        left = cand
    return ParticleConfig(out)


def run(y0: Sequence[int], w: Sequence[Sequence[int]]) -> list[ParticleConfig]:
    """Trajectory driven by the rows of ``w``."""
    traj = [ParticleConfig(y0)]
    for row in w:
        traj.append(step(traj[-1], row))
    return traj


@dataclass
class Trajectory:
    y0: ParticleConfig
    driving: BitMatrix
    positions: list[ParticleConfig] = field(default_factory=list)

    @property
    def final(self) -> ParticleConfig:
        return self.positions[-1]


def _generator(seed: int) -> np.random.Generator:
    # Philox is counter based: uniform number (replica, step, particle) sits at
    # a fixed counter offset, so every cell is its own reproducible substream.
    return np.random.Generator(np.random.Philox(key=int(seed)))


def jump_probabilities(rates: Rates, N: int, t: int, r: int = 0) -> np.ndarray:
    return np.array([[float(rates.jump_prob(s, k)) for k in range(1, N + 1)] for s in range(r + 1, t + 1)])


def simulate(y0: Sequence[int], rates: Rates, t: int, seed: int = 0, r: int = 0) -> Trajectory:
    """Single trajectory over steps r+1..t."""
    y0 = ParticleConfig(y0)
    prob = jump_probabilities(rates, y0.N, t, r)
    u = _generator(seed).random((1, t - r, y0.N))
    w = BitMatrix((u[0] < prob).astype(int).tolist()) if t > r else BitMatrix([])
    return Trajectory(y0, w, run(y0, w))


def thread_count() -> int:
    """TASEP_THREADS if set, else the number of CPUs."""
    default = os.cpu_count() or 1
    try:
        return max(1, int(os.environ.get("TASEP_THREADS", default)))
    except ValueError:
        return default


def simulate_many(y0: Sequence[int], rates: Rates, t: int, replicas: int, seed: int = 0,
                  threads: int | None = None, r: int = 0) -> np.ndarray:
    """Final positions of independent replicas, shape (replicas, N).

    The uniforms are drawn once up front, so the result does not depend on
    the number of threads.
    """
    y0 = ParticleConfig(y0)
    prob = jump_probabilities(rates, y0.N, t, r)
    u = _generator(seed).random((replicas, t - r, y0.N))
    ys = np.asarray(y0, dtype=np.int64)
    threads = thread_count() if threads is None else max(1, threads)
    if threads == 1 or replicas < 2 * threads:
        return core.simulate_batch(ys, prob, u)[:, -1, :]
    bounds = np.linspace(0, replicas, threads + 1).astype(int)
    with ThreadPoolExecutor(threads) as pool:
        parts = list(pool.map(lambda ab: core.simulate_batch(ys, prob, u[ab[0]:ab[1]])[:, -1, :],
                              zip(bounds[:-1], bounds[1:])))
    return np.concatenate(parts, axis=0)


# -- exact oracles ----------------------------------------------------------

MATRIX_BUDGET = 24  # largest t*N for which every driving matrix is visited


def _matrix_weight(rates: Rates, w: Sequence[Sequence[int]], r: int):
    out = 1
    for s, row in enumerate(w, r + 1):
        for k, bit in enumerate(row, 1):
            if bit:
                out = out * rates.odds(s, k)
    return out


def enumerate_transition(y0: Sequence[int], rates: Rates, t: int, r: int = 0,
                         method: str = "auto") -> dict[ParticleConfig, object]:
    """Law of the configuration after steps r+1..t, summed over driving matrices.

    ``method="matrices"`` visits every 0/1 matrix, ``"rows"`` sums out one row
    at a time (the same finite sum, regrouped), ``"auto"`` picks the compiled
    matrix loop for floats and the row grouping for rationals.
    """
    y0 = ParticleConfig(y0)
    N, T = y0.N, t - r
    if T < 0:
        raise ValueError("t must be >= r")
    if T * N > MATRIX_BUDGET:
        raise ValueError(f"t*N = {T * N} exceeds the enumeration budget {MATRIX_BUDGET}")
    Z = rates.partition_function(r, t, N)
    if method == "auto":
        method = "compiled" if rates.backend == FLOAT else ("matrices" if T * N <= 12 else "rows")
    out: dict[ParticleConfig, object] = {}
    if method == "compiled":
        odds = np.array([[float(rates.odds(s, k)) for k in range(1, N + 1)] for s in range(r + 1, t + 1)])
        acc = core.endpoint_weights(np.asarray(y0, dtype=np.int64), odds.reshape(T, N))
        for idx in np.nonzero(acc)[0]:
            d, rest = [], int(idx)
            for _ in range(N):
                rest, v = divmod(rest, T + 1)
                d.append(v)
            out[ParticleConfig([a + b for a, b in zip(y0, d)])] = float(acc[idx]) / float(Z)
        return out
    if method == "matrices":
        for bits in iproduct((0, 1), repeat=T * N):
            w = [bits[i * N:(i + 1) * N] for i in range(T)]
            end = run(y0, w)[-1]
            out[end] = out.get(end, 0) + _matrix_weight(rates, w, r)
    elif method == "rows":
        layer = {y0: 1}
        rows = list(iproduct((0, 1), repeat=N))
        for s in range(r + 1, t + 1):
            nxt: dict = {}
            for conf, wt in layer.items():
                for row in rows:
                    a = wt
                    for k, bit in enumerate(row, 1):
                        if bit:
                            a = a * rates.odds(s, k)
                    c = step(conf, row)
                    nxt[c] = nxt.get(c, 0) + a
            layer = nxt
        out = layer
    else:
        raise ValueError(f"unknown method {method!r}")
    return {c: v / Z for c, v in out.items()}


Query = tuple[tuple[int, int], ...]


def normalize_query(query, N: int) -> Query:
    """A query is a sequence of (particle index, threshold) pairs, index 1..N; empty means the sure event."""
    out = []
    for k, s in query:
        k, s = int(k), int(s)
        if not 1 <= k <= N:
            raise ValueError(f"particle index {k} outside 1..{N}")
        out.append((k, s))
    return tuple(out)


def event_holds(config: Sequence[int], query: Query) -> bool:
    return all(config[k - 1] >= s for k, s in query)


def multipoint_prob_oracle(y0: Sequence[int], rates: Rates, t: int, query) -> object:
    """P(Y_{k_i}(t) >= s_i for all i) by exhaustive enumeration."""
    y0 = ParticleConfig(y0)
    query = normalize_query(query, y0.N)
    law = enumerate_transition(y0, rates, t)
    total = 0.0 if rates.backend == FLOAT else Fraction(0)
    for conf, pr in law.items():
        if event_holds(conf, query):
            total += pr
    return total
