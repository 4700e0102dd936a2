"""How the condition (b) threshold tau depends on the basis scaling c.

For each bundled scenario, plus a control with identical patches, prints
tau(c) and c * tau(c). Heterogeneous patches make c * tau(c) flat (tau ~ 1/c);
identical patches make tau itself flat.
"""

import argparse

from netstab.assembly import CoupledSystem, make_homogeneous_equilibrium
from netstab.models import RosenzweigMacArthur
from netstab.scenario import BUNDLED, load_scenario
from netstab.stability import tau_sweep

SCALES = tuple(10.0 ** -k for k in range(0, 11))


def identical_control():
    sc = load_scenario("example1_set1")
    model = RosenzweigMacArthur(3 / 13, 0.1, 1 / 6)
    system = CoupledSystem((model,) * 3, sc.network())
    return "identical RM patches", system, make_homogeneous_equilibrium(system, [0.2, 0.16])


def cases():
    for name in BUNDLED:
        sc = load_scenario(name)
        system = sc.system()
        yield name, system, sc.equilibrium(system)
    yield identical_control()


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.parse_args()
    for label, system, eq in cases():
        lam2 = system.laplacians.fiedler_min
        print(f"== {label}  (lambda2 = {lam2:.6g})")
        print(f"   {'c':>8}  {'tau':>14}  {'c*tau':>12}  (b)")
        for c, tau in tau_sweep(system, eq, SCALES):
            print(f"   {c:8.0e}  {tau:14.6g}  {c * tau:12.6g}  {'holds' if lam2 >= tau else 'fails'}")
        print(f"   min over c: {min(t for _, t in tau_sweep(system, eq, SCALES)):.6g}")


if __name__ == "__main__":
    main()
