"""Command line entry point: ``dtasep <command> [flags]``.

Every command writes one canonical JSON report (to ``--out`` or stdout) and
exits 0 exactly when all checks it ran passed. A configuration that cannot
be run produces a JSON error object and exit status 2.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from .report import (ConfigError, ExperimentConfig, RunReport, Tally, compare, csv_text, dumps, KEYS)
from .scalars import RATIONAL

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("experiment")
    g.add_argument("--config", help="JSON file with any of the keys below; flags override it")
    g.add_argument("--N", help="number of particles (defaults to the length of --y)")
    g.add_argument("--t", help="number of time steps (defaults to the length of --p)")
    g.add_argument("--y", help="initial positions, strictly decreasing, e.g. 2,0,-3")
    g.add_argument("--p", help="time rates, e.g. 1/4,1/3,1/5")
    g.add_argument("--q", help="particle rates, e.g. 3/2,2,3")
    g.add_argument("--query", help="events Y_k(t) >= s as k:s pairs, e.g. 1:3,2:1")
    g.add_argument("--seed", help="64-bit seed for the simulation")
    g.add_argument("--backend", help="rational (exact) or float")
    g.add_argument("--replicas", help="number of Monte Carlo replicas")
    g.add_argument("--window", help="lower edge of the Fredholm window (default: adaptive)")
    g.add_argument("--route", help="biorthogonal or hitting")


def _add_output_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("output")
    g.add_argument("--out", help="write the JSON report here instead of stdout")
    g.add_argument("--csv", help="also write the main table as CSV")
    g.add_argument("--timings", action="store_true", help="include wall times (reports are then not reproducible)")
    g.add_argument("--threads", type=int, default=None, help="worker threads (default TASEP_THREADS or CPU count)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dtasep", description="Discrete-time TASEP: simulation, exact laws, "
                                     "correlation kernels and Fredholm determinants.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo replicas (one replica prints its trajectory)")
    _add_config_flags(p)
    p.add_argument("--compare", action="store_true",
                   help="check the event frequency against the Fredholm value (4 standard errors)")
    _add_output_flags(p)

    p = sub.add_parser("enumerate", help="exact transition law by summing over driving matrices")
    _add_config_flags(p)
    _add_output_flags(p)

    p = sub.add_parser("kernel", help="tabulate the correlation kernel on the queried levels")
    _add_config_flags(p)
    p.add_argument("--cross-check", action="store_true", help="compare the two kernel routes entrywise")
    _add_output_flags(p)

    p = sub.add_parser("fredholm", help="multipoint probability as a Fredholm determinant")
    _add_config_flags(p)
    p.add_argument("--oracle", action="store_true", help="compare with the exhaustive enumeration")
    _add_output_flags(p)

    p = sub.add_parser("verify", help="run the identity suite")
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.add_argument("--only", help="run the invariants whose name contains this text")
    _add_output_flags(p)

    p = sub.add_parser("drsk", help="dual RSK of a 0/1 matrix")
    p.add_argument("--matrix", help="file with the matrix: JSON list of rows or one row of 0/1 per line")
    p.add_argument("--w", help="inline matrix, rows separated by '/', e.g. 1011/0110/1101")
    _add_output_flags(p)
    return parser


# -- configuration ----------------------------------------------------------------

def load_config(args) -> ExperimentConfig:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc.msg} at line {exc.lineno}") from None
        if not isinstance(data, dict):
            raise ConfigError("config", "expected a JSON object")
    for key in KEYS:
        v = getattr(args, key, None)
        if v is not None:
            data[key] = v
    return ExperimentConfig.from_mapping(data)


def read_matrix(args) -> list[list[int]]:
    if args.w is not None:
        text = args.w.replace("/", "\n")
    elif args.matrix:
        try:
            text = Path(args.matrix).read_text()
        except OSError as exc:
            raise ConfigError("matrix", f"cannot read {args.matrix}: {exc.strerror}") from None
    else:
        raise ConfigError("matrix", "give --matrix FILE or --w ROWS")
    text = text.strip()
    try:
        if text.startswith("["):
            rows = json.loads(text)
        else:
            rows = []
            for line in text.splitlines():
                line = line.replace(",", " ").strip()
                if line:
                    rows.append([int(c) for c in (line.split() if " " in line else line)])
    except ValueError:
        raise ConfigError("matrix", "entries must be 0 or 1") from None
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ConfigError("matrix", "expected a nonempty list of rows")
    if len({len(r) for r in rows}) != 1 or any(v not in (0, 1) for r in rows for v in r):
        raise ConfigError("matrix", "expected a rectangular matrix of 0s and 1s")
    return rows


# -- commands ----------------------------------------------------------------------

def cmd_simulate(cfg: ExperimentConfig, args, report: RunReport) -> str | None:
    from .dynamics import simulate, simulate_many, event_holds

    rates = cfg.rates()
    if cfg.replicas == 1:
        traj = simulate(cfg.initial(), rates, cfg.t, cfg.seed)
        report.results = {"trajectory": [list(c) for c in traj.positions], "driving": [list(r) for r in traj.driving]}
        return csv_text(["s"] + [f"Y{k}" for k in range(1, cfg.N + 1)],
                        [[s] + list(c) for s, c in enumerate(traj.positions)])
    finals = simulate_many(cfg.initial(), rates, cfg.t, cfg.replicas, cfg.seed, args.threads)
    counts: dict[tuple, int] = {}
    for row in finals.tolist():
        counts[tuple(row)] = counts.get(tuple(row), 0) + 1
    table = sorted(counts.items(), reverse=True)
    report.results = {"replicas": cfg.replicas, "final_counts": [[list(c), n] for c, n in table]}
    if cfg.query:
        hits = sum(n for c, n in table if event_holds(c, cfg.query))
        freq = hits / cfg.replicas
        report.results["event_frequency"] = freq
        report.results["event_count"] = hits
        if args.compare:
            from .dpp import multipoint_prob_kernel

            exact = multipoint_prob_kernel(cfg.initial(), rates, cfg.t, cfg.query, cfg.route, cfg.window).value
            se = (float(exact) * (1 - float(exact)) / cfg.replicas) ** 0.5
            res = compare(freq, float(exact), max(4 * se, 1e-15), "simulate.frequency_vs_fredholm")
            res.detail = f"4 standard errors = {4 * se:.3g}"
            report.results["fredholm_value"] = exact
            report.checks.append(res)
    return csv_text([f"Y{k}" for k in range(1, cfg.N + 1)] + ["count"], [list(c) + [n] for c, n in table])


def cmd_enumerate(cfg: ExperimentConfig, args, report: RunReport) -> str | None:
    from .dynamics import enumerate_transition, event_holds

    law = enumerate_transition(cfg.initial(), cfg.rates(), cfg.t)
    table = sorted(law.items(), reverse=True)
    total = sum((v for _, v in table), Fraction(0) if cfg.backend == RATIONAL else 0.0)
    report.results = {"transition": [[list(c), v] for c, v in table], "total": total}
    report.checks.append(compare(total, 1, 1e-12, "enumerate.total_mass"))
    if cfg.query:
        report.results["probability"] = sum((v for c, v in table if event_holds(c, cfg.query)),
                                            Fraction(0) if cfg.backend == RATIONAL else 0.0)
    return csv_text([f"Y{k}" for k in range(1, cfg.N + 1)] + ["probability"], [list(c) + [v] for c, v in table])


def _require_query(cfg: ExperimentConfig) -> None:
    if not cfg.query:
        raise ConfigError("query", "this command needs at least one k:s pair")


def cmd_kernel(cfg: ExperimentConfig, args, report: RunReport) -> str | None:
    from .dpp import default_lower, event_thresholds, make_kernel, tabulate_kernel

    _require_query(cfg)
    uppers = event_thresholds(cfg.query, cfg.N)
    lower = cfg.window if cfg.window is not None else default_lower(cfg.y, cfg.t)
    lower = min(lower, min(uppers.values()))
    kernel = make_kernel(cfg.initial(), cfg.rates(), cfg.t, cfg.route)
    table = tabulate_kernel(kernel, uppers, lower, cfg.backend)
    report.results = {"route": cfg.route, "lower": lower, "points": [list(pt) for pt in table.points],
                      "matrix": table.matrix}
    if args.cross_check:
        other = make_kernel(cfg.initial(), cfg.rates(), cfg.t,
                            "hitting" if cfg.route == "biorthogonal" else "biorthogonal")
        tally = Tally("kernel.route_agreement", 1e-12)
        for a, (m, x) in enumerate(table.points):
            for b, (n, xp) in enumerate(table.points):
                tally.add(table.matrix[a][b], other(m, x, n, xp), f"K({m},{x};{n},{xp})")
        report.checks.append(tally.result())
    rows = [[m, x, n, xp, table.matrix[a][b]] for a, (m, x) in enumerate(table.points)
            for b, (n, xp) in enumerate(table.points)]
    return csv_text(["m", "x", "n", "x_prime", "K"], rows)


def cmd_fredholm(cfg: ExperimentConfig, args, report: RunReport) -> str | None:
    from .dpp import multipoint_prob_kernel

    res = multipoint_prob_kernel(cfg.initial(), cfg.rates(), cfg.t, cfg.query, cfg.route, cfg.window)
    report.results = {"route": cfg.route, "value": res.value, "lower": res.lower, "size": res.size,
                      "stabilized": res.stabilized, "history": [[lo, v] for lo, v in res.history]}
    (_, a), (_, b) = res.history[-2:]
    report.checks.append(compare(a, b, 1e-12, "fredholm.window_stable"))
    if args.oracle:
        from .dynamics import multipoint_prob_oracle

        exact = multipoint_prob_oracle(cfg.initial(), cfg.rates(), cfg.t, cfg.query)
        report.results["oracle"] = exact
        report.checks.append(compare(res.value, exact, 1e-10, "fredholm.vs_enumeration"))
    return csv_text(["lower", "determinant"], res.history)


def cmd_verify(args, report: RunReport) -> str | None:
    from .verify import MANIFEST, run_suite

    results = run_suite(args.level, args.only, args.timings)
    report.checks.extend(results)
    report.results = {"level": args.level,
                      "manifest": [{"name": i.name, "module": i.module, "statement": i.statement} for i in MANIFEST]}
    for r in results:
        print(r.line(), file=sys.stderr)
    return csv_text(["name", "pass", "cases", "max_abs_diff"], [[r.name, r.passed, r.cases, r.diff] for r in results])


def cmd_drsk(args, report: RunReport) -> str | None:
    from .drsk import drsk_forward, drsk_inverse

    w = read_matrix(args)
    P, Q, snaps = drsk_forward(w, history=True)
    n, N = len(w), len(w[0])
    back = drsk_inverse(P, Q, n, N)
    report.results = {"w": w, "P": [list(r) for r in P.rows], "Q": [list(r) for r in Q.rows],
                      "shape": list(P.shape), "left_edge": list(P.left_edge(N)),
                      "P_history": [[list(r) for r in s.rows] for s in snaps]}
    report.checks.append(compare(int(back == tuple(tuple(r) for r in w)), 1, 0, "drsk.round_trip"))
    rows = [["P", i + 1] + list(r) for i, r in enumerate(P.rows)] + [["Q", i + 1] + list(r) for i, r in enumerate(Q.rows)]
    return csv_text(["tableau", "row", "entries..."], rows)


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    report = RunReport(args.command)
    start = time.perf_counter()
    try:
        if args.command == "verify":
            table = cmd_verify(args, report)
        elif args.command == "drsk":
            table = cmd_drsk(args, report)
        else:
            cfg = load_config(args)
            report.config = cfg.to_json()
            report.regime = cfg.regime()
            handler = {"simulate": cmd_simulate, "enumerate": cmd_enumerate, "kernel": cmd_kernel,
                       "fredholm": cmd_fredholm}[args.command]
            table = handler(cfg, args, report)
    except ConfigError as exc:
        _emit(dumps(exc.to_json()), args.out)
        return EXIT_ERROR
    except (ValueError, ZeroDivisionError, ArithmeticError) as exc:
        # rates outside the regime, enumeration budget exceeded, and similar
        _emit(dumps({"schema": "tasep-report/1", "error": {"type": "rejected", "message": str(exc)}}), args.out)
        return EXIT_ERROR
    out = report.to_json(args.timings)
    if args.timings:
        out["wall_seconds"] = time.perf_counter() - start
    _emit(dumps(out), args.out)
    if args.csv and table is not None:
        Path(args.csv).write_text(table)
    return EXIT_OK if report.ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
