"""Two nearly identical rods on either side of the grazing separatrix.

    python scripts/two_rod.py [scenario.toml]
"""
import sys

from painleve.experiments.cli import load_scenario
from painleve.experiments.studies import two_rod

scn = load_scenario(sys.argv[1] if len(sys.argv) > 1 else None, "two_rod")
_trs, summary = two_rod(scn)
for k, v in summary.items():
    print(f"{k:>24} {v:.6g}")
