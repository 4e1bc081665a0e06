"""Post-IWC error and contact duration against eps, printed as a table.

    python scripts/convergence_report.py [eps ...]
"""
import sys

from painleve.contact_model import BodyParams
from painleve.experiments.studies import convergence_study

eps = [float(a) for a in sys.argv[1:]] or [1e-2, 3e-3, 1e-3, 3e-4, 1e-4]
table, fit = convergence_study(1.0, 0.5, 1.0, 1.0, eps, BodyParams(3.0, 1.4))
print(f"{'eps':>8} {'T':>10} {'|w-e|':>10} {'|th-th0|':>10} {'|v|':>10}")
for row in zip(*(table[c] for c in ("epsilon", "duration", "err_e", "err_theta", "abs_v"))):
    print(" ".join(f"{x:10.3e}" for x in row))
print(f"T = C eps ln(1/eps): C = {fit['C']:.4f}, R^2 = {fit['r2']:.4f}")
