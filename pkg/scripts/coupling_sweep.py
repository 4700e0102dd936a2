"""Scale every dispersal weight of a scenario by s and track lambda2 and the spectral abscissa.

Prints CSV (s, lambda2, abscissa, verdict) and, when the sweep changes sign,
the bisected crossing s*.
"""

import argparse
import csv
import sys

import numpy as np

from netstab.errors import NetstabError
from netstab.graph import scale_weights
from netstab.scenario import load_scenario
from netstab.stability import abscissa_at, classify, coupling_threshold


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("scenario", nargs="?", default="example1_set2")
    ap.add_argument("--lo", type=float, default=0.05)
    ap.add_argument("--hi", type=float, default=20.0)
    ap.add_argument("--points", type=int, default=60)
    args = ap.parse_args()

    sc = load_scenario(args.scenario)
    system = sc.system()
    eq = sc.equilibrium(system)
    grid = np.geomspace(args.lo, args.hi, args.points)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["s", "lambda2", "abscissa", "verdict"])
    values = []
    for s in grid:
        lam2 = system.with_network(scale_weights(system.network, s)).laplacians.fiedler_min
        a = abscissa_at(system, eq, s)
        values.append(a)
        out.writerow([f"{s:.6g}", f"{lam2:.10g}", f"{a:.10g}", classify(a)])
    for k in range(len(grid) - 1):
        if values[k] * values[k + 1] < 0:
            try:
                res = coupling_threshold(system, eq, grid[k], grid[k + 1], tol=1e-9)
            except NetstabError as exc:
                print(f"# bisection failed: {exc}", file=sys.stderr)
                continue
            print(f"# crossing s* = {res.s_star:.9g}, lambda2(s*) = {res.lambda2:.9g}, "
                  f"abscissa(s*) = {res.abscissa:.2e}", file=sys.stderr)


if __name__ == "__main__":
    main()
