"""``chevetlab <experiment> --n 2,4 --N 8 --trials 2000 --seed 1 --out r.json``.

Exit status: 0 when every verdict passes, 1 when any fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import sys

from .harness import EXPERIMENTS, FORMATS, PAIRS, ExperimentSpec, emit, run


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _name_list(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser():
    p = argparse.ArgumentParser(prog="chevetlab", description="Run a seeded experiment and write its report.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--n", type=_int_list, default=[], help="codomain dimensions")
    p.add_argument("--N", type=_int_list, default=[], help="domain dimensions")
    p.add_argument("--k", type=_int_list, default=[])
    p.add_argument("--m", type=_int_list, default=[])
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--theta", type=float, default=0.5, help="RIP level for rip-grid")
    p.add_argument("--rotations", type=int, default=64, help="rotation sample size for rotation-gap")
    p.add_argument("--pairs", type=_name_list, default=[], help=f"subset of {','.join(PAIRS)}")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=FORMATS, default="json")
    p.add_argument("--workers", type=int, default=None, help="thread count (results do not depend on it)")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        spec = ExperimentSpec(
            name=args.experiment, n=args.n, N=args.N, k=args.k, m=args.m,
            trials=args.trials, seed=args.seed, c=args.c, theta=args.theta,
            rotations=args.rotations, pairs=args.pairs, out=args.out, format=args.format,
        )
    except ValueError as err:
        print(f"chevetlab: error: {err}", file=sys.stderr)
        return 2
    report = run(spec, workers=args.workers)
    emit(report, spec.format, spec.out)
    for name, ok in sorted(report["verdicts"].items()):
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
