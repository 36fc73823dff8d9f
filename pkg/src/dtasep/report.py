"""Experiment configuration, check results and the JSON report format.

Reports are canonical JSON: sorted keys, fixed indentation, exact rationals
written as ``{"num": "3", "den": "2"}`` with string fields, and no wall-clock
data unless timings are requested. The same configuration and seed therefore
produce byte-identical output.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

from .dynamics import ParticleConfig, Rates
from .scalars import BACKENDS, FLOAT, RATIONAL, parse_rational

SCHEMA = "tasep-report/1"


class ConfigError(ValueError):
    """A configuration that cannot be run; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message

    def to_json(self) -> dict:
        return {"schema": SCHEMA, "error": {"type": "config", "field": self.field, "message": self.message}}


# -- serialization -----------------------------------------------------------------

def encode(value: Any) -> Any:
    """Turn library values into JSON data; rationals become {"num", "den"} strings."""
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, Fraction):
        return {"num": str(value.numerator), "den": str(value.denominator)}
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return repr(value)
        return value
    if hasattr(value, "item") and not isinstance(value, (list, tuple, dict)):
        return encode(value.item())  # numpy scalars
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    if hasattr(value, "tolist"):
        return encode(value.tolist())
    raise TypeError(f"cannot serialize {type(value).__name__}")


def decode_scalar(value: Any):
    """Inverse of :func:`encode` for scalars."""
    if isinstance(value, dict) and set(value) == {"num", "den"}:
        return Fraction(int(value["num"]), int(value["den"]))
    return value


def dumps(data: Any) -> str:
    return json.dumps(encode(data), sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def scalar_text(value) -> str:
    """Compact text for CSV cells: "a/b" for rationals, repr for floats."""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([scalar_text(v) for v in r])
    return buf.getvalue()


# -- checks -----------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    lhs: Any
    rhs: Any
    diff: Any
    tol: float | None  # None means exact equality was demanded
    passed: bool
    cases: int = 1
    detail: str = ""
    wall: float | None = None

    def to_json(self, timings: bool = False) -> dict:
        out = {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "abs_diff": self.diff,
               "tolerance": "exact" if self.tol is None else self.tol, "pass": self.passed,
               "cases": self.cases}
        if self.detail:
            out["detail"] = self.detail
        if timings and self.wall is not None:
            out["wall_seconds"] = self.wall
        return encode(out)

    def line(self) -> str:
        tol = "exact" if self.tol is None else f"tol {self.tol:g}"
        return (f"{'PASS' if self.passed else 'FAIL'}  {self.name}  "
                f"[{self.cases} cases, max |diff| {float(self.diff):.3g}, {tol}]"
                + (f"  {self.detail}" if self.detail else ""))


def _is_exact(v) -> bool:
    return isinstance(v, (int, Fraction)) and not isinstance(v, bool)


def compare(a, b, tol: float = 1e-12, name: str = "compare", relative: bool = False) -> CheckResult:
    """Exact equality when both sides are exact, otherwise |a - b| <= tol (times max(1, |b|) if relative)."""
    if _is_exact(a) and _is_exact(b):
        d = abs(Fraction(a) - Fraction(b))
        return CheckResult(name, a, b, d, None, d == 0)
    d = abs(complex(a) - complex(b))
    bound = tol * max(1.0, abs(complex(b))) if relative else tol
    return CheckResult(name, a, b, d, tol, bool(d <= bound))


class Tally:
    """Accumulates many comparisons into one result that keeps the worst case."""

    def __init__(self, name: str, tol: float = 1e-12, relative: bool = False):
        self.name, self.tol, self.relative = name, tol, relative
        self.cases = 0
        self.failures = 0
        self.worst: CheckResult | None = None
        self.first_failure: str = ""
        self.exact = True

    def add(self, a, b, where: str = "") -> bool:
        r = compare(a, b, self.tol, self.name, self.relative)
        self.cases += 1
        if r.tol is not None:
            self.exact = False
        if not r.passed:
            self.failures += 1
            if not self.first_failure:
                self.first_failure = where or f"{a!r} != {b!r}"
        if self.worst is None or (not r.passed and self.worst.passed) or (
                r.passed == self.worst.passed and float(r.diff) > float(self.worst.diff)):
            self.worst = r
        return r.passed

    def require(self, ok: bool, where: str = "") -> bool:
        """Record a boolean condition as an exact comparison of 1 with 1 or 0."""
        return self.add(1 if ok else 0, 1, where)

    def result(self, detail: str = "") -> CheckResult:
        if self.worst is None:
            return CheckResult(self.name, None, None, 0, None, False, 0, "no cases were run")
        note = detail
        if self.relative and not self.exact:
            note = "tolerance scaled by max(1, |rhs|)" + (f"; {note}" if note else "")
        if self.failures:
            note = f"{self.failures} failures, first: {self.first_failure}" + (f"; {detail}" if detail else "")
        return CheckResult(self.name, self.worst.lhs, self.worst.rhs, self.worst.diff,
                           None if self.exact else self.tol, self.failures == 0, self.cases, note)


# -- configuration ------------------------------------------------------------

DEFAULTS = {"seed": 0, "backend": RATIONAL, "replicas": 10000, "route": "biorthogonal"}
KEYS = ("N", "t", "y", "p", "q", "query", "seed", "backend", "replicas", "window", "route")


def _int(field_: str, v) -> int:
    if isinstance(v, bool):
        raise ConfigError(field_, "expected an integer")
    try:
        out = int(v)
    except (TypeError, ValueError):
        raise ConfigError(field_, f"expected an integer, got {v!r}") from None
    if isinstance(v, float) and v != out:
        raise ConfigError(field_, f"expected an integer, got {v!r}")
    return out


def _rationals(field_: str, v) -> tuple[Fraction, ...]:
    if isinstance(v, str):
        v = [s for s in v.replace(";", ",").split(",") if s.strip()]
    if not isinstance(v, (list, tuple)):
        raise ConfigError(field_, "expected a list of rationals")
    out = []
    for item in v:
        try:
            out.append(parse_rational(item))
        except (TypeError, ValueError, KeyError, ZeroDivisionError):
            raise ConfigError(field_, f"cannot read a rational from {item!r}") from None
    return tuple(out)


def parse_query(v) -> tuple[tuple[int, int], ...]:
    """"1:3,2:1" or [[1, 3], [2, 1]] into ((1, 3), (2, 1))."""
    if v is None:
        return ()
    items = []
    if isinstance(v, str):
        for part in v.split(","):
            part = part.strip()
            if not part:
                continue
            if ":" not in part:
                raise ConfigError("query", f"expected k:s, got {part!r}")
            k, s = part.split(":", 1)
            items.append((k, s))
    elif isinstance(v, (list, tuple)):
        for pair in v:
            if isinstance(pair, dict):
                pair = (pair.get("k"), pair.get("s"))
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise ConfigError("query", f"expected a (k, s) pair, got {pair!r}")
            items.append(pair)
    else:
        raise ConfigError("query", "expected a string or a list of pairs")
    return tuple((_int("query", k), _int("query", s)) for k, s in items)


@dataclass(frozen=True)
class ExperimentConfig:
    N: int
    t: int
    y: tuple[int, ...]
    p: tuple[Fraction, ...]
    q: tuple[Fraction, ...]
    query: tuple[tuple[int, int], ...] = ()
    seed: int = 0
    backend: str = RATIONAL
    replicas: int = 10000
    window: int | None = None
    route: str = "biorthogonal"

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config", "expected a JSON object")
        unknown = sorted(set(data) - set(KEYS))
        if unknown:
            raise ConfigError(unknown[0], "unknown key")
        d = {**DEFAULTS, **{k: v for k, v in data.items() if v is not None}}
        for key in ("y", "q"):
            if key not in d:
                raise ConfigError(key, "missing")
        y = d["y"]
        if isinstance(y, str):
            y = [s for s in y.split(",") if s.strip()]
        if not isinstance(y, (list, tuple)) or not y:
            raise ConfigError("y", "expected a nonempty list of positions")
        y = tuple(_int("y", v) for v in y)
        if any(a <= b for a, b in zip(y, y[1:])):
            raise ConfigError("y", "positions must be strictly decreasing")
        N = _int("N", d.get("N", len(y)))
        if N != len(y):
            raise ConfigError("N", f"N = {N} but {len(y)} positions were given")
        p = _rationals("p", d.get("p", ()))
        t = _int("t", d.get("t", len(p)))
        if t < 0:
            raise ConfigError("t", "must be nonnegative")
        if len(p) < t:
            raise ConfigError("p", f"need {t} time rates, got {len(p)}")
        q = _rationals("q", d["q"])
        if len(q) < N:
            raise ConfigError("q", f"need {N} particle rates, got {len(q)}")
        if any(v <= 0 for v in p + q):
            raise ConfigError("p" if any(v <= 0 for v in p) else "q", "rates must be positive")
        query = parse_query(d.get("query"))
        ks = [k for k, _ in query]
        if any(not 1 <= k <= N for k in ks):
            raise ConfigError("query", f"particle indices must lie in 1..{N}")
        if any(a >= b for a, b in zip(ks, ks[1:])):
            raise ConfigError("query", "particle indices must be strictly increasing")
        backend = d["backend"]
        if backend not in BACKENDS:
            raise ConfigError("backend", f"expected one of {BACKENDS}")
        seed = _int("seed", d["seed"])
        if not 0 <= seed < 2 ** 64:
            raise ConfigError("seed", "must be a 64-bit unsigned integer")
        replicas = _int("replicas", d["replicas"])
        if replicas < 1:
            raise ConfigError("replicas", "must be positive")
        window = d.get("window")
        window = None if window is None else _int("window", window)
        route = d["route"]
        if route not in ("biorthogonal", "hitting"):
            raise ConfigError("route", "expected biorthogonal or hitting")
        return cls(N, t, y, p[:t], q[:N], query, seed, backend, replicas, window, route)

    def rates(self) -> Rates:
        return Rates(self.p, self.q, self.backend)

    def initial(self) -> ParticleConfig:
        return ParticleConfig(self.y)

    def regime(self) -> dict:
        """Which hypotheses of the determinantal formulas hold, evaluated before any run."""
        r = Rates(self.p, self.q)
        theorem = r.regime_failures(self.t, self.N, ordered=False)
        ordered = all(a < b for a, b in zip(self.q, self.q[1:]))
        return {
            "theorem_regime": not theorem,
            "failures": theorem,
            "q_increasing": ordered,
            "q_distinct": len(set(self.q)) == len(self.q),
            "max_pq": max((a * b for a in self.p for b in self.q), default=Fraction(0)),
        }

    def to_json(self) -> dict:
        return encode({"N": self.N, "t": self.t, "y": list(self.y), "p": list(self.p), "q": list(self.q),
                       "query": [list(x) for x in self.query], "seed": self.seed, "backend": self.backend,
                       "replicas": self.replicas, "window": self.window, "route": self.route})


@dataclass
class RunReport:
    command: str
    config: dict | None = None
    regime: dict | None = None
    results: dict = field(default_factory=dict)
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self, timings: bool = False) -> dict:
        out = {"schema": SCHEMA, "command": self.command, "ok": self.ok,
               "checks": [c.to_json(timings) for c in self.checks], "results": encode(self.results)}
        if self.config is not None:
            out["config"] = self.config
        if self.regime is not None:
            out["regime"] = encode(self.regime)
        return out

    def dumps(self, timings: bool = False) -> str:
        return dumps(self.to_json(timings))


__all__ = ["SCHEMA", "ConfigError", "encode", "decode_scalar", "dumps", "csv_text", "CheckResult", "compare",
           "Tally", "ExperimentConfig", "RunReport", "parse_query", "FLOAT", "RATIONAL"]
