"""Doubly periodic pipeline: barrier check, Plateau family, assembly.

Runs the command-line front door end to end for one model.  The leg
length defaults to 80 percent of the Douglas bound for the chosen
heights, the same regime the steep solver runs exercise.
"""

from __future__ import annotations

import argparse
import sys

from scherklab.cli import main as scherklab_main
from scherklab.config import parse_model
from scherklab.douglas import a_max_doubly


def run() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="heisenberg")
    ap.add_argument("--a", type=float, default=None,
                    help="leg length; defaults to 0.8 * a_max for c0=1, c1=2")
    ap.add_argument("--h", type=float, default=None,
                    help="mesh spacing; defaults to a/18")
    ap.add_argument("--copies", type=int, default=3,
                    help="3 and up covers both lattice directions")
    ap.add_argument("--out", default="runs/doubly")
    args = ap.parse_args()

    a = args.a
    if a is None:
        a = 0.8 * a_max_doubly(parse_model(args.model), 1.0, 2.0)
        print(f"leg length from the Douglas bound: a = {a:.6f}")
    h = args.h if args.h is not None else a / 18.0

    common = ["--model", args.model, "--kind", "doubly", "--a", str(a), "--out", args.out]
    steps = [
        ["douglas"] + common + ["--eps", "1e-4", "--c0", "1", "--c1", "2"],
        ["solve"] + common + ["--c-list", "0.5,1,2", "--h", str(h)],
        ["build"] + common + ["--c1", "1", "--h", str(h), "--copies", str(args.copies)],
    ]
    for argv in steps:
        print(f"\n== scherklab {' '.join(argv)}")
        code = scherklab_main(argv)
        if code != 0:
            print(f"step failed with exit code {code}")
            return code
    print(f"\nartifacts in {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
