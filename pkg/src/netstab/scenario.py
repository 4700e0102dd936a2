"""Scenario documents (JSON in) and analysis reports (JSON out)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import jsonschema
import numpy as np

from . import __version__
from .assembly import CoupledSystem, HomogeneousEquilibrium, make_homogeneous_equilibrium
from .errors import NetstabError, ScenarioError
from .graph import LayerEdge, LayeredNetwork, is_connected
from .linalg import SNAP_TOL
from .models import find_equilibrium, make_model
from .sim import CONVERGED_FACTOR, DIVERGED_FACTOR, ConvergenceResult, default_horizon, perturb_and_classify
from .stability import DEFAULT_C, VERDICT_TOL, StabilityReport, stability_report

BUNDLED = ("example1_set1", "example1_set2", "example2_set1", "example2_set2")


def _schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("scenario.schema.json").read_text())


def to_float(value) -> float:
    if isinstance(value, str):
        return float(Fraction("".join(value.split())))
    return float(value)


def _pointer(parts) -> str:
    return "/" + "/".join(str(p) for p in parts) if parts else "/"


@dataclass(frozen=True)
class SimSettings:
    delta: float = 1e-3
    horizon: Optional[float] = None
    trials: int = 8
    seed: int = 0


@dataclass(frozen=True)
class Scenario:
    name: str
    patches: tuple[tuple[str, dict], ...]  # (kind, params)
    layers: tuple[tuple[tuple[int, int, float], ...], ...]  # indexed by variable - 1
    equilibrium_mode: str  # per_patch | solve_from
    equilibrium_values: tuple[float, ...]
    epsilon: float = 0.0
    basis_scaling: float = DEFAULT_C
    strict: bool = False
    simulate: bool = False
    sim: SimSettings = SimSettings()
    expected: dict = field(default_factory=dict)
    description: str = ""

    @property
    def m(self) -> int:
        return len(self.patches)

    @property
    def n(self) -> int:
        return len(self.layers)

    def network(self) -> LayeredNetwork:
        return LayeredNetwork(self.m, tuple(tuple(LayerEdge(*e) for e in layer) for layer in self.layers))

    def system(self) -> CoupledSystem:
        return CoupledSystem(tuple(make_model(k, p) for k, p in self.patches), self.network())

    def equilibrium(self, system: Optional[CoupledSystem] = None) -> HomogeneousEquilibrium:
        system = system or self.system()
        values = np.array(self.equilibrium_values)
        if self.equilibrium_mode == "solve_from":
            values = find_equilibrium(system.models[0], values)
        return make_homogeneous_equilibrium(system, values)

    def normalized(self) -> dict:
        doc = {
            "version": 1,
            "name": self.name,
            "patches": [{"model": k, "params": dict(sorted(p.items()))} for k, p in self.patches],
            "layers": [
                {"variable": i, "edges": [{"u": u, "v": v, "w": w} for u, v, w in layer]}
                for i, layer in enumerate(self.layers, start=1)
            ],
            "equilibrium": {self.equilibrium_mode: list(self.equilibrium_values)},
            "analysis": {
                "epsilon": self.epsilon,
                "basis_scaling": self.basis_scaling,
                "strict": self.strict,
                "simulate": self.simulate,
                "sim": {
                    "delta": self.sim.delta,
                    "horizon": self.sim.horizon,
                    "trials": self.sim.trials,
                    "seed": self.sim.seed,
                },
            },
        }
        return doc


def bundled_path(name: str) -> Path:
    if name not in BUNDLED:
        raise NetstabError(f"no bundled scenario {name!r}; choose from {', '.join(BUNDLED)}")
    return Path(str(resources.files(__package__).joinpath("scenarios", f"{name}.json")))


def load_scenario(ref: str) -> Scenario:
    """Parse a scenario file path, or a bundled scenario by name."""
    path = Path(ref)
    if not path.exists() and ref in BUNDLED:
        path = bundled_path(ref)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise NetstabError(f"cannot read scenario {ref}: {exc}") from exc
    return parse_scenario(text, default_name=path.stem)


def parse_scenario(source: Any, default_name: str = "scenario") -> Scenario:
    """Validate a scenario (JSON text or already-decoded dict)."""
    if isinstance(source, (str, bytes)):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid JSON: {exc}") from exc
    else:
        doc = source
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ScenarioError(err.message, _pointer(err.absolute_path))

    patches = []
    for j, p in enumerate(doc["patches"]):
        params = {k: to_float(v) for k, v in p["params"].items()}
        try:
            make_model(p["model"], params)
        except NetstabError as exc:
            raise ScenarioError(str(exc), f"/patches/{j}") from exc
        patches.append((p["model"], params))
    m = len(patches)
    n = 2  # every builtin model has two state variables
    if len(doc["layers"]) != n:
        raise ScenarioError(f"expected {n} layers (one per state variable), got {len(doc['layers'])}", "/layers")
    by_var: dict[int, tuple] = {}
    for li, layer in enumerate(doc["layers"]):
        var = layer["variable"]
        if var > n:
            raise ScenarioError(f"variable {var} outside 1..{n}", f"/layers/{li}/variable")
        if var in by_var:
            raise ScenarioError(f"variable {var} has more than one layer", f"/layers/{li}/variable")
        seen = set()
        edges = []
        for ei, e in enumerate(layer["edges"]):
            where = f"/layers/{li}/edges/{ei}"
            u, v, w = e["u"], e["v"], to_float(e["w"])
            if u > m or v > m:
                raise ScenarioError(f"patch index outside 1..{m}", where)
            if u == v:
                raise ScenarioError("self-loop", where)
            if w < 0 or not math.isfinite(w):
                raise ScenarioError(f"weight must be finite and >= 0, got {w}", where + "/w")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ScenarioError(f"duplicate edge {key[0]}-{key[1]}", where)
            seen.add(key)
            edges.append((u, v, w))
        by_var[var] = tuple(edges)
    layers = tuple(by_var[i] for i in range(1, n + 1))

    (mode, values), = doc["equilibrium"].items()
    values = tuple(to_float(v) for v in values)
    if len(values) != n:
        raise ScenarioError(f"expected {n} values, got {len(values)}", f"/equilibrium/{mode}")

    analysis = doc.get("analysis", {})
    sim = analysis.get("sim", {})
    return Scenario(
        name=doc.get("name", default_name),
        patches=tuple(patches),
        layers=layers,
        equilibrium_mode=mode,
        equilibrium_values=values,
        epsilon=float(analysis.get("epsilon", 0.0)),
        basis_scaling=float(analysis.get("basis_scaling", DEFAULT_C)),
        strict=bool(analysis.get("strict", False)),
        simulate=bool(analysis.get("simulate", False)),
        sim=SimSettings(
            delta=float(sim.get("delta", 1e-3)),
            horizon=float(sim["horizon"]) if "horizon" in sim else None,
            trials=int(sim.get("trials", 8)),
            seed=int(sim.get("seed", 0)),
        ),
        expected=doc.get("expected", {}),
        description=doc.get("description", ""),
    )


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _pairs(values) -> list[list[float]]:
    return [[_num(z.real), _num(z.imag)] for z in values]


@dataclass
class Analysis:
    scenario: Scenario
    system: CoupledSystem
    equilibrium: HomogeneousEquilibrium
    report: StabilityReport
    simulation: Optional[ConvergenceResult] = None


def analyze(scenario: Scenario, epsilon=None, basis_scaling=None, strict=None, simulate=None, seed=None) -> Analysis:
    system = scenario.system()
    eq = scenario.equilibrium(system)
    rep = stability_report(
        system,
        eq,
        scenario.epsilon if epsilon is None else epsilon,
        scenario.basis_scaling if basis_scaling is None else basis_scaling,
        scenario.strict if strict is None else strict,
    )
    sim = None
    if scenario.simulate if simulate is None else simulate:
        s = scenario.sim
        horizon = s.horizon if s.horizon is not None else default_horizon(rep.abscissa)
        sim = perturb_and_classify(system, eq, s.delta, horizon, s.trials, s.seed if seed is None else seed)
    return Analysis(scenario, system, eq, rep, sim)


def report_document(a: Analysis, epsilon=None, basis_scaling=None, strict=None, seed=None) -> dict:
    sc, rep = a.scenario, a.report
    cond = rep.condition
    lset = a.system.laplacians
    echo = sc.normalized()
    an = echo["analysis"]
    if epsilon is not None:
        an["epsilon"] = epsilon
    if basis_scaling is not None:
        an["basis_scaling"] = basis_scaling
    if strict is not None:
        an["strict"] = strict
    if seed is not None:
        an["sim"]["seed"] = seed
    doc = {
        "scenario": echo,
        "laplacian": {
            "fiedler_per_layer": [_num(v) for v in lset.fiedler_per_layer],
            "fiedler_min": _num(lset.fiedler_min),
            "connected": [is_connected(a.system.network, i) for i in range(1, a.system.n + 1)],
        },
        "equilibrium": {
            "per_patch": [_num(v) for v in a.equilibrium.per_patch],
            "residual_f": _num(a.equilibrium.residual_f),
            "residual_L": _num(a.equilibrium.residual_L),
        },
        "theorem": None,
        "spectrum": _pairs(rep.spectrum),
        "abscissa": _num(rep.abscissa),
        "verdicts": {
            "sufficient": cond.verdict if cond else None,
            "spectral": rep.spectral_verdict,
            "simulated": a.simulation.classification if a.simulation else None,
        },
        "simulation": None,
        "notes": list(rep.notes),
        "provenance": {
            "tool": "netstab",
            "version": __version__,
            "seed": an["sim"]["seed"],
            "tolerances": {
                "verdict_band": VERDICT_TOL,
                "real_snap": SNAP_TOL,
                "converged_factor": CONVERGED_FACTOR,
                "diverged_factor": DIVERGED_FACTOR,
            },
        },
    }
    if cond is not None:
        doc["theorem"] = {
            "condition_a": {
                "holds": bool(cond.condition_a.holds),
                "epsilon": _num(cond.condition_a.epsilon),
                "row_margins": [_num(v) for v in cond.condition_a.row_margins],
            },
            "condition_b": {
                "holds": bool(cond.condition_b.holds),
                "lambda2": _num(cond.condition_b.lambda2),
                "tau": _num(cond.condition_b.tau),
                "scaling_c": _num(cond.condition_b.scaling_c),
            },
            "sufficient_stable": bool(cond.sufficient_stable),
            "disc_right_edge": _num(cond.disc_right_edge),
        }
    if a.simulation is not None:
        s = a.simulation
        doc["simulation"] = {
            "classification": s.classification,
            "initial_distance": _num(s.initial_distance),
            "final_distance": _num(s.final_distance),
            "horizon": _num(s.horizon),
            "trials": len(s.trials),
            "delta": sc.sim.delta,
        }
    return doc


def dump_report(doc) -> str:
    """Canonical JSON text: sorted keys, shortest round-trip floats."""
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"
