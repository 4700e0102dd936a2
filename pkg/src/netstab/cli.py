"""Command-line front end: ``netstab <command> [scenario ...] [options]``.

Exit codes: 0 spectrally stable (or success for non-verdict commands),
2 unstable, 3 marginal, 1 execution error, 64 usage error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .errors import NetstabError
from .graph import is_connected
from .scenario import BUNDLED, analyze, bundled_path, dump_report, load_scenario, report_document
from .sim import default_horizon, integrate, perturb_and_classify, write_csv
from .stability import C_SWEEP, STABLE, UNSTABLE, coupling_threshold, spectral_verdict, tau_sweep, theorem_verdict

EXIT_OK, EXIT_ERROR, EXIT_UNSTABLE, EXIT_MARGINAL, EXIT_USAGE = 0, 1, 2, 3, 64
VERDICT_EXIT = {STABLE: EXIT_OK, UNSTABLE: EXIT_UNSTABLE}

log = logging.getLogger("netstab")


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _color(text: str, code: str) -> str:
    if os.environ.get("NO_COLOR") or not sys.stdout.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def _verdict(v: str) -> str:
    return _color(v, {"stable": "32", "unstable": "31"}.get(v, "33"))


def fmt_complex(z: complex) -> str:
    if z.imag == 0:
        return f"{z.real: .8f}"
    return f"{z.real: .8f} {'+' if z.imag > 0 else '-'} {abs(z.imag):.8f}j"


def table(rows, headers) -> str:
    cells = [headers] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[k]) for r in cells) for k in range(len(headers))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def exit_for(verdict: str) -> int:
    return VERDICT_EXIT.get(verdict, EXIT_MARGINAL)


def _run_analyze(ref, epsilon, basis_scaling, strict, seed):
    sc = load_scenario(ref)
    a = analyze(sc, epsilon, basis_scaling, strict, seed=seed)
    doc = report_document(a, epsilon, basis_scaling, strict, seed)
    rep = a.report
    cond = rep.condition
    lines = [
        f"scenario: {sc.name}  (m={a.system.m} patches, n={a.system.n} layers)",
        f"equilibrium per patch: {a.equilibrium.per_patch.tolist()}  "
        f"residuals f={a.equilibrium.residual_f:.2e} L={a.equilibrium.residual_L:.2e}",
        f"Fiedler value per layer: {[round(v, 6) for v in a.system.laplacians.fiedler_per_layer]}  "
        f"min={a.system.laplacians.fiedler_min:.6f}",
        f"condition (a): {'holds' if cond.condition_a.holds else 'fails'}  "
        f"margins={[f'{v:.4g}' for v in cond.condition_a.row_margins]}  eps={cond.condition_a.epsilon:g}",
        f"condition (b): {'holds' if cond.condition_b.holds else 'fails'}  "
        f"lambda2={cond.condition_b.lambda2:.6g}  tau={cond.condition_b.tau:.6g}  c={cond.condition_b.scaling_c:g}",
        "spectrum:",
        *("  " + fmt_complex(z) for z in rep.spectrum),
        f"spectral abscissa: {rep.abscissa:.8g}",
        f"verdicts: sufficient={cond.verdict}  spectral={_verdict(rep.spectral_verdict)}"
        + (f"  simulated={a.simulation.classification} (distance ratio {a.simulation.ratio:.3g})" if a.simulation else ""),
    ]
    lines += [f"note: {n}" for n in rep.notes]
    return "\n".join(lines), doc, exit_for(rep.spectral_verdict)


def _analyze_job(args):
    try:
        return _run_analyze(*args)
    except NetstabError as exc:
        return f"error: {args[0]}: {exc}", None, EXIT_ERROR


def cmd_analyze(args) -> int:
    if not args.scenario:
        raise UsageError("analyze needs at least one scenario")
    jobs = [(ref, args.epsilon, args.basis_scaling, args.strict or None, args.seed) for ref in args.scenario]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_analyze_job, jobs))
    else:
        results = [_analyze_job(j) for j in jobs]
    docs = []
    for i, (text, doc, code) in enumerate(results):
        if i:
            print()
        print(text, file=sys.stderr if code == EXIT_ERROR else sys.stdout)
        docs.append(doc)
    if args.json:
        payload = docs[0] if len(docs) == 1 else docs
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(dump_report(payload))
    codes = [c for _, _, c in results]
    for code in (EXIT_ERROR, EXIT_UNSTABLE, EXIT_MARGINAL):
        if code in codes:
            return code
    return EXIT_OK


def _one(args):
    if len(args.scenario) != 1:
        raise UsageError(f"{args.command} takes exactly one scenario")
    sc = load_scenario(args.scenario[0])
    system = sc.system()
    return sc, system, sc.equilibrium(system)


def cmd_fiedler(args) -> int:
    sc, system, _ = _one(args)
    lset = system.laplacians
    rows = []
    for i, lam in enumerate(lset.fiedler_per_layer, start=1):
        conn = is_connected(system.network, i)
        rows.append((i, f"{lam:.10g}", "yes" if conn else "no"))
        if not conn:
            log.warning("layer %d is disconnected: Fiedler value is 0", i)
    print(table(rows, ["layer", "lambda2", "connected"]))
    print(f"network lambda2 (min over layers): {lset.fiedler_min:.10g}")
    return EXIT_OK


def cmd_eigs(args) -> int:
    sc, system, eq = _one(args)
    rep = spectral_verdict(system, eq)
    rows = [(k, f"{z.real:.10g}", f"{z.imag:.10g}") for k, z in enumerate(rep.spectrum, start=1)]
    print(table(rows, ["#", "re", "im"]))
    print(f"spectral abscissa: {rep.abscissa:.10g}  verdict: {_verdict(rep.spectral_verdict)}")
    return EXIT_OK


def cmd_theorem(args) -> int:
    sc, system, eq = _one(args)
    eps = sc.epsilon if args.epsilon is None else args.epsilon
    c = sc.basis_scaling if args.basis_scaling is None else args.basis_scaling
    strict = args.strict or sc.strict
    rep = theorem_verdict(system, eq, eps, c, strict)
    a, b = rep.condition_a, rep.condition_b
    rows = [(p, f"{v:.10g}") for p, v in enumerate(a.row_margins, start=1)]
    print(f"condition (a) on the averaged Jacobian (epsilon={a.epsilon:g}{', strict' if strict else ''}): "
          f"{'holds' if a.holds else 'fails'}")
    print(table(rows, ["row", "margin"]))
    print(f"condition (b): lambda2={b.lambda2:.10g}  tau(c={b.scaling_c:g})={b.tau:.10g}  "
          f"{'holds' if b.holds else 'fails'}")
    sweep = tau_sweep(system, eq, C_SWEEP)
    print(table([(f"{cc:g}", f"{t:.6g}") for cc, t in sweep], ["c", "tau"]))
    print(f"minimum tau over sweep: {min(t for _, t in sweep):.6g}")
    print(f"largest transformed Gershgorin right edge: {rep.disc_right_edge:.6g}")
    print(f"sufficient condition: {rep.verdict}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc, system, eq = _one(args)
    seed = sc.sim.seed if args.seed is None else args.seed
    rep = spectral_verdict(system, eq)
    horizon = args.horizon or sc.sim.horizon or default_horizon(rep.abscissa)
    res = perturb_and_classify(system, eq, sc.sim.delta, horizon, sc.sim.trials, seed)
    print(f"perturbation delta={sc.sim.delta:g}, horizon={horizon:g}, trials={sc.sim.trials}, seed={seed}")
    print(f"classification: {res.classification}  final/initial distance: {res.ratio:.6g}")
    if args.csv:
        v = np.random.default_rng(seed).standard_normal(system.size)
        x0 = eq.stacked + sc.sim.delta * v / np.linalg.norm(v)
        traj = integrate(system, x0, horizon)
        write_csv(traj, args.csv, system.n, system.m)
        print(f"trajectory ({traj.steps} steps, {traj.rejected} rejected) written to {args.csv}")
    return EXIT_OK


def cmd_threshold(args) -> int:
    sc, system, eq = _one(args)
    if args.bracket is None:
        raise UsageError("threshold needs --bracket LO HI")
    res = coupling_threshold(system, eq, *args.bracket)
    print(f"coupling scale s* = {res.s_star:.9g}  (bracket [{res.bracket[0]:.9g}, {res.bracket[1]:.9g}], "
          f"{res.iterations} bisections)")
    print(f"spectral abscissa at s*: {res.abscissa:.3e}")
    print(f"network lambda2 at s*: {res.lambda2:.9g}")
    return EXIT_OK


def cmd_demo(args) -> int:
    if len(args.scenario) != 1 or args.scenario[0] not in ("example1", "example2"):
        raise UsageError("demo takes one of: example1, example2")
    name = f"{args.scenario[0]}_set{args.set}"
    sc = load_scenario(str(bundled_path(name)))
    system = sc.system()
    eq = sc.equilibrium(system)
    rep = spectral_verdict(system, eq)
    expected = [complex(re, im) for re, im in sc.expected.get("spectrum", [])]
    print(f"{name}: {sc.description}")
    rows = []
    for k, z in enumerate(rep.spectrum):
        e = expected[k] if k < len(expected) else None
        rows.append((fmt_complex(e) if e is not None else "-", fmt_complex(z),
                     f"{abs(z - e):.2e}" if e is not None else "-"))
    print(table(rows, ["expected", "computed", "|diff|"]))
    if "lambda2" in sc.expected:
        print(f"lambda2: expected {sc.expected['lambda2']}  computed {system.laplacians.fiedler_min:.6g}")
    print(f"spectral abscissa {rep.abscissa:.8g}: {_verdict(rep.spectral_verdict)} "
          f"(expected {sc.expected.get('verdict', '-')})")
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "fiedler": cmd_fiedler,
    "eigs": cmd_eigs,
    "theorem": cmd_theorem,
    "simulate": cmd_simulate,
    "threshold": cmd_threshold,
    "demo": cmd_demo,
}


def build_parser() -> Parser:
    p = Parser(prog="netstab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"netstab {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("scenario", nargs="*", help=f"scenario JSON path or bundled name ({', '.join(BUNDLED)})")
    p.add_argument("--epsilon", type=float, help="margin for condition (a), overrides the scenario")
    p.add_argument("--basis-scaling", type=float, help="scaling c of the non-consensus basis columns")
    p.add_argument("--strict", action="store_true", help="require a strictly positive row margin")
    p.add_argument("--json", metavar="PATH", help="write the report (analyze) as canonical JSON")
    p.add_argument("--csv", metavar="PATH", help="write one trajectory (simulate) as CSV")
    p.add_argument("--seed", type=int, help="seed for perturbation trials")
    p.add_argument("--horizon", type=float, help="simulation end time")
    p.add_argument("--bracket", nargs=2, type=float, metavar=("LO", "HI"), help="coupling-scale bracket for threshold")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for analyze")
    p.add_argument("--set", type=int, choices=(1, 2), default=1, help="dispersal set for demo")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"netstab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NetstabError as exc:
        print(f"netstab: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
