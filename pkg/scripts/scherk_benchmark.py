"""Solver calibration against the classical Scherk graph.

log(cos x / cos y) is an exact minimal graph for the flat metric, so
the discrete sup error against it measures pure discretization error.
The table should show second-order convergence: the error drops by
about 4 each time h halves.
"""

from __future__ import annotations

import sys

from scherklab.cli import main as scherklab_main

OUT = "runs/benchmark"

if __name__ == "__main__":
    argv = ["solve", "--model", "euclidean", "--benchmark",
            "--tol", "1e-10", "--out", OUT]
    print(f"== scherklab {' '.join(argv)}")
    sys.exit(scherklab_main(argv))
