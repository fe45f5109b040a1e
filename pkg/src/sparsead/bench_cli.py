"""Benchmark harness: one CSV row per run.

    sparsead-bench --problem chain --size 64 --method subgraph --repeat 5 --out speed.csv

Columns are ``implement,problem,coloring,optimize,setup,reverse,onepass,
n,m,nnz,visits,sec``.  ``sec`` is the fastest of ``--repeat`` timed
evaluations.  With ``--setup`` each timed evaluation also records the tape
and redoes sparsity, coloring and graph optimization; without it that work
is done once, untimed.  ``visits`` counts node updates in the derivative
sweeps of one evaluation.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from dataclasses import dataclass

from .drivers import ConfigError, MethodConfig, Work, sparse_hessian, sparse_jacobian, with_setup_cached
from .problems import PROBLEMS, get_problem

COLUMNS = ("implement", "problem", "coloring", "optimize", "setup", "reverse", "onepass",
           "n", "m", "nnz", "visits", "sec")
CLI_METHODS = ("forward-compressed", "reverse-compressed", "subgraph")


@dataclass(frozen=True)
class RunConfig:
    problem: str
    size: int
    method: str = "subgraph"
    coloring: str | None = None
    optimize: bool = False
    setup: bool = False
    onepass: bool = False
    repeat: int = 1
    out: str | None = None

    def method_config(self) -> MethodConfig:
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; expected one of {sorted(PROBLEMS)}")
        if self.size < 1:
            raise ConfigError("size must be positive")
        if self.repeat < 1:
            raise ConfigError("repeat must be positive")
        return MethodConfig(self.method, onepass=self.onepass, optimize=self.optimize,
                            setup_cached=not self.setup, coloring=self.coloring)


def _flag(b: bool) -> str:
    return "true" if b else "false"


def run(cfg: RunConfig) -> dict:
    """Time one configuration and return its CSV row (appended to ``cfg.out`` if set)."""
    mcfg = cfg.method_config()
    prob = get_problem(cfg.problem, cfg.size)
    x = prob.point()
    w = prob.weights()

    def evaluate(g, work):
        if prob.hessian:
            return sparse_hessian(g, x, w, mcfg, work=work)
        return sparse_jacobian(g, x, mcfg, work=work)

    best = float("inf")
    if cfg.setup:
        for _ in range(cfg.repeat):
            work = Work()
            t0 = time.perf_counter()
            result = evaluate(prob.graph(), work)
            best = min(best, time.perf_counter() - t0)
    else:
        g = prob.graph()
        prep = with_setup_cached(g, mcfg)
        call = (lambda: prep.hessian(x, w)) if prob.hessian else (lambda: prep.jacobian(x))
        call()
        for _ in range(cfg.repeat):
            t0 = time.perf_counter()
            result = call()
            best = min(best, time.perf_counter() - t0)
        inner = prep._hessian(w) if prob.hessian else prep._jacobian()
        work = inner.work

    row = {
        "implement": mcfg.method.replace("_", "-"),
        "problem": cfg.problem,
        "coloring": mcfg.coloring,
        "optimize": _flag(mcfg.optimize),
        "setup": _flag(cfg.setup),
        "reverse": _flag(mcfg.reverse),
        "onepass": _flag(mcfg.onepass),
        "n": prob.n,
        "m": prob.m,
        "nnz": result.pattern.nnz(),
        "visits": work.visits,
        "sec": f"{best:.6e}",
    }
    if cfg.out:
        append_row(cfg.out, row)
    return row


def append_row(path: str, row: dict):
    """Append ``row``; the header is written only when the file is new or empty."""
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
        if new:
            wr.writeheader()
        wr.writerow(row)


def scaling_report(problem: str, sizes, method: str = "subgraph", repeat: int = 1) -> list[tuple]:
    """``(n, visits, sec)`` for each size, timing evaluations with setup excluded."""
    out = []
    for size in sizes:
        row = run(RunConfig(problem, int(size), method, repeat=repeat))
        out.append((row["n"], row["visits"], float(row["sec"])))
    return out


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sparsead-bench", description="Time one sparse derivative configuration.")
    p.add_argument("--problem", required=True, choices=sorted(PROBLEMS))
    p.add_argument("--size", required=True, type=int)
    p.add_argument("--method", default="subgraph", choices=CLI_METHODS)
    p.add_argument("--coloring", default=None, choices=("greedy", "none"))
    p.add_argument("--optimize", action="store_true")
    p.add_argument("--setup", action="store_true", help="include setup in the timed region")
    p.add_argument("--onepass", action="store_true")
    p.add_argument("--repeat", type=int, default=1)
    p.add_argument("--out", default=None, help="CSV file to append to (default: print to stdout)")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    cfg = RunConfig(args.problem, args.size, args.method, args.coloring, args.optimize,
                    args.setup, args.onepass, args.repeat, args.out)
    try:
        row = run(cfg)
    except ConfigError as e:
        print(f"sparsead-bench: configuration error: {e}", file=sys.stderr)
        return 2
    if not args.out:
        wr = csv.DictWriter(sys.stdout, fieldnames=COLUMNS, lineterminator="\n")
        wr.writeheader()
        wr.writerow(row)
    return 0


def scaling_main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="sparsead-scaling",
                                description="Visit counts and times over a list of sizes.")
    p.add_argument("--problem", required=True, choices=sorted(PROBLEMS))
    p.add_argument("--sizes", required=True, help="comma separated, e.g. 64,128,256")
    p.add_argument("--method", default="subgraph", choices=CLI_METHODS)
    p.add_argument("--repeat", type=int, default=1)
    args = p.parse_args(argv)
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s]
        rows = scaling_report(args.problem, sizes, args.method, args.repeat)
    except (ConfigError, ValueError) as e:
        print(f"sparsead-scaling: {e}", file=sys.stderr)
        return 2
    print(f"{'n':>8} {'visits':>12} {'ratio':>7} {'sec':>12}")
    prev = None
    for n, visits, sec in rows:
        ratio = f"{visits / prev:7.3f}" if prev else " " * 7
        print(f"{n:>8} {visits:>12} {ratio} {sec:12.4e}")
        prev = visits
    return 0


if __name__ == "__main__":
    sys.exit(main())
