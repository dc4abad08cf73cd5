"""Singly periodic pipeline: length bound, Plateau solve, assembly.

The singly barrier needs the box long enough for the two long walls to
outweigh the retained faces; the douglas step prints the bound d_min
and refuses configurations below it.
"""

from __future__ import annotations

import argparse
import sys

from scherklab.cli import main as scherklab_main


def run() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="heisenberg")
    ap.add_argument("--a", type=float, default=0.5)
    ap.add_argument("--c0", type=float, default=1.0)
    ap.add_argument("--d", type=float, default=3.0)
    ap.add_argument("--h", type=float, default=0.05)
    ap.add_argument("--copies", type=int, default=3)
    ap.add_argument("--out", default="runs/singly")
    args = ap.parse_args()

    common = [
        "--model", args.model, "--kind", "singly",
        "--a", str(args.a), "--out", args.out,
    ]
    steps = [
        ["douglas"] + common + ["--eps", "0.1", "--c0", str(args.c0), "--d", str(args.d)],
        ["solve"] + common + ["--c1", str(args.c0), "--h", str(args.h)],
        ["build"] + common + ["--c1", str(args.c0), "--h", str(args.h),
                              "--copies", str(args.copies)],
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
