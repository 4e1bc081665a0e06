"""Regenerate every figure and its CSV into one directory.

    python scripts/reproduce_figures.py [out_dir]
"""
import sys
import time
from pathlib import Path

from painleve.experiments.cli import main

RUNS = {
    "e_vs_theta0": ["sweep-e", "--parameter", "theta0", "--num", "199"],
    "e_vs_delta": ["sweep-e", "--parameter", "delta"],
    "phase_map": ["phase-map"],
    "kappa1_b_positive": ["kappa1"],
    "kappa1_b_negative": ["kappa1", "--mu", "1.4", "--theta0", "1.0", "--phi0", "0.5"],
    "separatrix_layer": ["separatrix"],
    "separatrix_full": ["separatrix", "--method", "full"],
    "convergence": ["converge"],
    "two_rod": ["two-rod"],
    "inconsistent": ["simulate", "--config", "inconsistent"],
    "freefall": ["simulate", "--config", "freefall"],
}


def run(out: Path) -> int:
    for name, argv in RUNS.items():
        t0 = time.perf_counter()
        code = main(argv + ["--out-dir", str(out / name)])
        print(f"{name}: exit {code}, {time.perf_counter() - t0:.2f} s", file=sys.stderr)
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(run(Path(sys.argv[1] if len(sys.argv) > 1 else "figures")))
