"""Command-line front end.

Exit codes: 0 success, 1 error (bad input, I/O, guard violation), 2 the
solve finished but the input is not binary.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import io, oracle
from .ikie import ikie_solve, solve_with_s2_sweep
from .model import ConfigurationError, Levels, Target
from .nuvcell import sweep_characteristic
from .scenarios import BUILDERS
from .smoother import SmootherError

log = logging.getLogger("nuvbinary")

EXIT_OK, EXIT_ERROR, EXIT_NONBINARY = 0, 1, 2
OUTPUT_ENV = "NUVBINARY_OUTPUT_DIR"


def _out_dir(value):
    path = Path(value or os.environ.get(OUTPUT_ENV) or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _stamp_csv(path, enabled):
    if not enabled:
        return
    now = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    p = Path(path)
    p.write_text(f"# created {now}\n" + p.read_text())


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def cmd_solve(args):
    sc = io.load_scenario(args.scenario)
    changes = {k: getattr(args, k) for k in ("s2", "method", "max_iters")
               if getattr(args, k) is not None}
    if changes:
        sc = sc.replace(**changes)
    if args.s2_sweep:
        report, _ = solve_with_s2_sweep(sc, factor=args.s2_sweep)
    else:
        report = ikie_solve(sc)
    out = _out_dir(args.out)
    stem = args.prefix or sc.name
    io.save_report(report, out / f"{stem}_report.json", sc, timestamp=args.timestamp)
    io.write_trajectory_csv(report, sc, out / f"{stem}_trajectory.csv")
    io.write_trace_csv(report, out / f"{stem}_trace.csv")
    for name in ("trajectory", "trace"):
        _stamp_csv(out / f"{stem}_{name}.csv", args.timestamp)
    state = "binary" if report.binary else "NONBINARY"
    print(f"{sc.name}: {state}, cost {report.cost:.6g}, {report.iterations} iterations, "
          f"binary residual {report.binary_residual:.3g}")
    return EXIT_OK if report.binary else EXIT_NONBINARY


def cmd_characteristic(args):
    if args.steps < 2:
        raise ConfigurationError("--steps must be >= 2")
    if args.mu_max < args.mu_min:
        raise ConfigurationError("--mu-max must be >= --mu-min")
    levels = Levels(args.a, args.b)
    mu = np.linspace(args.mu_min, args.mu_max, args.steps)
    points = sweep_characteristic(mu, args.s2, levels, method=args.method)
    out = Path(args.out) if args.out else _out_dir(None) / f"characteristic_{args.method}.csv"
    io.write_characteristic_csv(points, out)
    _stamp_csv(out, args.timestamp)
    flagged = sum(not p.binary for p in points)
    print(f"{len(points)} points written to {out}, {flagged} nonbinary")
    return EXIT_OK


def _instances(args):
    rng = np.random.default_rng(args.seed)
    if args.scenario:
        base = io.load_scenario(args.scenario)
        if args.K > base.horizon:
            raise ConfigurationError(f"--K {args.K} exceeds scenario horizon {base.horizon}")
        for i in range(args.trials):
            # each trial starts the window at a different step of the target
            start = int(rng.integers(0, base.horizon - args.K + 1))
            t = base.target
            w = t.weights[start:start + args.K]
            if not np.any(w > 0):
                w = np.ones_like(w)
            window = Target(t.ybreve[start:start + args.K], w)
            yield f"{base.name}-{i}@{start + 1}", base.replace(target=window)
        return
    for i in range(args.trials):
        if args.generator == "random":
            yield f"random-{i}", oracle.random_instance(rng, args.K)
        else:
            kind = "integrator" if i % 2 == 0 else "stable"
            yield f"planted-{kind}-{i}", oracle.planted_instance(rng, args.K, kind)[0]


def cmd_oracle_compare(args):
    if args.K > oracle.MAX_HORIZON:
        raise ConfigurationError(f"--K {args.K} exceeds the brute-force limit {oracle.MAX_HORIZON}")
    if args.K < 1 or args.trials < 0:
        raise ConfigurationError("--K must be >= 1 and --trials >= 0")
    rows = [(name, oracle.compare(sc)) for name, sc in _instances(args)]
    out = Path(args.out) if args.out else _out_dir(None) / "oracle_compare.csv"
    io.write_comparison_csv(rows, out)
    _stamp_csv(out, args.timestamp)
    exact = sum(c.hamming == 0 for _, c in rows)
    print(f"{len(rows)} instances written to {out}, {exact} match the optimum exactly")
    return EXIT_OK


def bench(scenario, horizons, iterations=20, repeats=3):
    """Seconds per IKIE iteration for each horizon (minimum over repeats)."""
    rows = []
    for K in horizons:
        sc = scenario.replace(target=scenario.target.resize(K), max_iters=iterations,
                              tol_convergence=1e-300)
        ikie_solve(sc.replace(max_iters=1))  # warm-up
        best = np.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            ikie_solve(sc)
            best = min(best, time.perf_counter() - t0)
        rows.append((K, best / iterations))
    return rows


def cmd_bench(args):
    if len(args.horizons) < 2:
        raise ConfigurationError("--horizons needs at least two values to assess scaling")
    if min(args.horizons) < 1:
        raise ConfigurationError("--horizons must be positive")
    sc = io.load_scenario(args.scenario)
    rows = bench(sc, args.horizons, args.iterations, args.repeats)
    out = Path(args.out) if args.out else _out_dir(None) / "bench.csv"
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["K", "seconds_per_iteration"])
        for K, sec in rows:
            w.writerow([K, repr(sec)])
    for (k0, t0), (k1, t1) in zip(rows, rows[1:]):
        print(f"K {k0} -> {k1}: time ratio {t1 / t0:.2f}")
    return EXIT_OK


def cmd_make_scenario(args):
    sc = BUILDERS[args.kind]()
    io.save_scenario(sc, args.out, header=f"generated by nuvbinary.scenarios.{args.kind}()")
    print(f"wrote {args.out}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would read as "nonbinary"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="nuvbinary",
                                description="Binary-input control of linear systems with IKIE.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--no-timestamp", dest="timestamp", action="store_false",
                        help="omit creation timestamps (byte-reproducible output)")

    s = sub.add_parser("solve", help="run IKIE on a scenario file or bundled name")
    s.add_argument("scenario")
    s.add_argument("--s2", type=float)
    s.add_argument("--method", choices=("am", "em"))
    s.add_argument("--max-iters", dest="max_iters", type=int)
    s.add_argument("--s2-sweep", type=float, metavar="FACTOR",
                   help="retry with s2 multiplied by FACTOR while nonbinary")
    s.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or .)")
    s.add_argument("--prefix", help="file name stem (default: scenario name)")
    common(s)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("characteristic", help="scalar NUV cell estimate as a function of mu")
    c.add_argument("--method", choices=("am", "em"), default="em")
    c.add_argument("--a", type=float, default=0.0)
    c.add_argument("--b", type=float, default=1.0)
    c.add_argument("--s2", type=_floats, default=[10.0], help="comma-separated list")
    c.add_argument("--mu-min", type=float, default=-1.5)
    c.add_argument("--mu-max", type=float, default=2.5)
    c.add_argument("--steps", type=int, default=201)
    c.add_argument("--out")
    common(c)
    c.set_defaults(func=cmd_characteristic)

    o = sub.add_parser("oracle-compare", help="IKIE versus exhaustive search on short horizons")
    o.add_argument("scenario", nargs="?", help="scenario to cut windows from (default: generator)")
    o.add_argument("--generator", choices=("planted", "random"), default="planted")
    o.add_argument("--K", type=int, default=12)
    o.add_argument("--trials", type=int, default=50)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--out")
    common(o)
    o.set_defaults(func=cmd_oracle_compare)

    b = sub.add_parser("bench", help="per-iteration time versus horizon")
    b.add_argument("scenario")
    b.add_argument("--horizons", type=_ints, default=[450, 900, 1800])
    b.add_argument("--iterations", type=int, default=20)
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)

    m = sub.add_parser("make-scenario", help="write a bundled scenario to a file")
    m.add_argument("kind", choices=sorted(BUILDERS))
    m.add_argument("out")
    m.set_defaults(func=cmd_make_scenario)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, SmootherError, OSError) as exc:
        print(f"nuvbinary: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
