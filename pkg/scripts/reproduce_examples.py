"""Recompute both worked examples and compare with the stored reference spectra.

Writes one JSON report per bundled scenario into --out (default: results/).
"""

import argparse
from pathlib import Path

from scipy.optimize import linear_sum_assignment
import numpy as np

from netstab.scenario import BUNDLED, analyze, dump_report, load_scenario, report_document


def paired(computed, expected):
    a = np.asarray(computed, dtype=complex)
    b = np.asarray(expected, dtype=complex)
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return [(a[r], b[c], cost[r, c]) for r, c in sorted(zip(rows, cols), key=lambda rc: (a[rc[0]].real, a[rc[0]].imag))]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--simulate", action="store_true", help="also run the perturbation experiment")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    for name in BUNDLED:
        sc = load_scenario(name)
        a = analyze(sc, simulate=args.simulate)
        rep = a.report
        expected = [complex(re, im) for re, im in sc.expected.get("spectrum", [])]
        print(f"== {name}: lambda2={a.system.laplacians.fiedler_min:.6g}  "
              f"abscissa={rep.abscissa:.8g}  verdict={rep.spectral_verdict} "
              f"(reference {sc.expected.get('verdict', '-')})")
        worst = 0.0
        for z, e, d in paired(rep.spectrum, expected):
            worst = max(worst, d)
            print(f"   {z.real:+.8f} {z.imag:+.8f}j   ref {e.real:+.8f} {e.imag:+.8f}j   |diff| {d:.2e}")
        print(f"   largest gap to reference: {worst:.3e}")
        if a.simulation is not None:
            print(f"   perturbation: {a.simulation.classification} (ratio {a.simulation.ratio:.3g})")
        (args.out / f"{name}.json").write_text(dump_report(report_document(a)))


if __name__ == "__main__":
    main()
