"""Time integration of coupled systems and perturbation experiments."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .assembly import CoupledSystem, HomogeneousEquilibrium, eval_coupled_f
from .errors import DomainError, NetstabError

MAX_STEPS = 10**6
MIN_DT = 1e-14
ESCAPE_NORM = 1e12
CONVERGED_FACTOR = 0.01
DIVERGED_FACTOR = 100.0
HORIZON_CAP = 1e4
ZERO_DELTA_TOL = 1e-8

# Fehlberg 4(5) tableau
_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)
_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # one row per accepted step
    method: str
    steps: int = 0
    rejected: int = 0
    min_dt: float = math.inf
    max_dt: float = 0.0
    max_error_ratio: float = 0.0  # largest accepted error / tolerance (rkf45)
    status: str = "ok"  # ok | diverged | max_steps

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def step_stats(self) -> dict:
        return {"steps": self.steps, "rejected": self.rejected, "min_dt": self.min_dt, "max_dt": self.max_dt}


def _escaped(x: np.ndarray) -> bool:
    return not np.all(np.isfinite(x)) or float(np.max(np.abs(x))) > ESCAPE_NORM


def integrate_rhs(
    f: Callable[[float, np.ndarray], np.ndarray],
    x0,
    t_end: float,
    method: str = "rkf45",
    dt: Optional[float] = None,
    abs_tol: float = 1e-9,
    rel_tol: float = 1e-7,
    max_steps: int = MAX_STEPS,
    record: bool = True,
) -> Trajectory:
    """Integrate ``x' = f(t, x)`` from 0 to ``t_end``.

    ``rk4`` takes fixed steps of ``dt`` (the last one shortened to land on
    ``t_end``); ``rkf45`` adapts the step to the mixed tolerance
    ``abs_tol + rel_tol * |x|``.
    """
    x = np.array(x0, dtype=float)
    if not t_end > 0:
        raise NetstabError(f"t_end must be > 0, got {t_end}")
    if method == "rk4":
        if dt is None or not dt > 0:
            raise NetstabError("rk4 needs a fixed step dt > 0")
        return _rk4(f, x, t_end, dt, max_steps, record)
    if method == "rkf45":
        if not (abs_tol > 0 and rel_tol >= 0):
            raise NetstabError("rkf45 needs abs_tol > 0 and rel_tol >= 0")
        return _rkf45(f, x, t_end, dt, abs_tol, rel_tol, max_steps, record)
    raise NetstabError(f"unknown method {method!r}")


def _rk4(f, x, t_end, dt, max_steps, record):
    times, states = [0.0], [x.copy()]
    traj = Trajectory(np.empty(0), np.empty(0), "rk4")
    t = 0.0
    n_steps = math.ceil(t_end / dt - 1e-12)
    for k in range(n_steps):
        if traj.steps >= max_steps:
            traj.status = "max_steps"
            break
        h = min(dt, t_end - t) if k == n_steps - 1 else dt
        k1 = f(t, x)
        k2 = f(t + h / 2, x + h / 2 * k1)
        k3 = f(t + h / 2, x + h / 2 * k2)
        k4 = f(t + h, x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t_end if k == n_steps - 1 else t + h
        traj.steps += 1
        traj.min_dt = min(traj.min_dt, h)
        traj.max_dt = max(traj.max_dt, h)
        if record or k == n_steps - 1:
            times.append(t)
            states.append(x.copy())
        if _escaped(x):
            traj.status = "diverged"
            if not record:
                times.append(t)
                states.append(x.copy())
            break
    traj.times = np.array(times)
    traj.states = np.array(states)
    return traj


def _rkf45(f, x, t_end, dt, atol, rtol, max_steps, record):
    times, states = [0.0], [x.copy()]
    traj = Trajectory(np.empty(0), np.empty(0), "rkf45")
    t = 0.0
    h = dt if dt else min(t_end, 1e-2)
    k = [None] * 6
    while t < t_end:
        if traj.steps >= max_steps:
            traj.status = "max_steps"
            break
        h = min(h, t_end - t)
        try:
            k[0] = f(t, x)
            for s in range(1, 6):
                xs = x + h * sum(a * k[j] for j, a in enumerate(_A[s]))
                k[s] = f(t + _C[s] * h, xs)
        except DomainError:
            # a stage left the model domain; retry with a shorter step
            traj.rejected += 1
            h *= 0.25
            if h < MIN_DT:
                raise
            continue
        x4 = x + h * sum(b * kj for b, kj in zip(_B4, k) if b)
        x5 = x + h * sum(b * kj for b, kj in zip(_B5, k) if b)
        scale = atol + rtol * np.maximum(np.abs(x), np.abs(x4))
        err = float(np.max(np.abs(x5 - x4) / scale))
        if not math.isfinite(err):
            traj.status = "diverged"
            break
        if err <= 1.0:
            t = t + h if t + h < t_end else t_end
            x = x4
            traj.steps += 1
            traj.min_dt = min(traj.min_dt, h)
            traj.max_dt = max(traj.max_dt, h)
            traj.max_error_ratio = max(traj.max_error_ratio, err)
            if record or t >= t_end:
                times.append(t)
                states.append(x.copy())
            if _escaped(x):
                traj.status = "diverged"
                if not record:
                    times.append(t)
                    states.append(x.copy())
                break
        else:
            traj.rejected += 1
        factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        h *= factor
        if h < MIN_DT:
            traj.status = "diverged"
            break
    traj.times = np.array(times)
    traj.states = np.array(states)
    return traj


def integrate(
    system: CoupledSystem,
    x0,
    t_end: float,
    method: str = "rkf45",
    dt: Optional[float] = None,
    abs_tol: float = 1e-9,
    rel_tol: float = 1e-7,
    max_steps: int = MAX_STEPS,
    record: bool = True,
) -> Trajectory:
    x0 = system.check_state(x0)
    lap = system.block_laplacian
    models = system.models
    m = system.m

    def f(t, x):
        out = np.empty_like(x)
        for j, mod in enumerate(models):
            try:
                out[j::m] = mod.rhs(x[j::m])
            except DomainError as exc:
                raise DomainError(f"patch {j + 1}: {exc}") from exc
        return out - lap @ x

    return integrate_rhs(f, x0, t_end, method, dt, abs_tol, rel_tol, max_steps, record)


def write_csv(traj: Trajectory, path, n: int, m: int) -> None:
    """Header ``t,x_1_1,...,x_n_m``; one row per recorded step, 17 significant digits."""
    header = ["t"] + [f"x_{i}_{j}" for i in range(1, n + 1) for j in range(1, m + 1)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, x in zip(traj.times, traj.states):
            w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in x])


CONVERGED, DIVERGED, INCONCLUSIVE = "converged", "diverged", "inconclusive"


@dataclass(frozen=True)
class ConvergenceResult:
    classification: str
    final_distance: float
    initial_distance: float
    horizon: float
    trials: tuple = field(default_factory=tuple)

    @property
    def ratio(self) -> float:
        if self.initial_distance == 0:
            return 0.0 if self.final_distance == 0 else math.inf
        return self.final_distance / self.initial_distance


def classify_distance(initial: float, final: float, escaped: bool = False) -> str:
    if escaped:
        return DIVERGED
    if initial == 0.0:
        return CONVERGED if final <= ZERO_DELTA_TOL else INCONCLUSIVE
    if final <= CONVERGED_FACTOR * initial:
        return CONVERGED
    if final >= DIVERGED_FACTOR * initial:
        return DIVERGED
    return INCONCLUSIVE


def default_horizon(abscissa: float) -> float:
    if abscissa == 0.0:
        return HORIZON_CAP
    return min(10.0 / abs(abscissa), HORIZON_CAP)


def perturb_and_classify(
    system: CoupledSystem,
    eq: HomogeneousEquilibrium,
    delta: float = 1e-3,
    horizon: float = 400.0,
    trials: int = 8,
    seed: int = 0,
    **controls,
) -> ConvergenceResult:
    """Kick the equilibrium in ``trials`` seeded random directions and integrate.

    Aggregate is diverged if any trial diverged, converged if all converged,
    inconclusive otherwise. ``final_distance`` is the worst trial's.
    """
    if delta < 0:
        raise NetstabError(f"delta must be >= 0, got {delta}")
    if trials < 1:
        raise NetstabError("need at least one trial")
    rng = np.random.default_rng(seed)
    results = []
    for _ in range(trials):
        v = rng.standard_normal(system.size)
        v /= np.linalg.norm(v)
        x0 = eq.stacked + delta * v
        init = float(np.linalg.norm(x0 - eq.stacked))
        try:
            traj = integrate(system, x0, horizon, record=False, **controls)
            escaped = traj.status == "diverged"
            final = float(np.linalg.norm(traj.final - eq.stacked))
            label = INCONCLUSIVE if traj.status == "max_steps" else classify_distance(init, final, escaped)
        except DomainError:
            final, label = math.inf, DIVERGED
        results.append((label, init, final))
    labels = [r[0] for r in results]
    if DIVERGED in labels:
        agg = DIVERGED
    elif all(lab == CONVERGED for lab in labels):
        agg = CONVERGED
    else:
        agg = INCONCLUSIVE
    worst = max(results, key=lambda r: (r[2] / r[1]) if r[1] else r[2])
    return ConvergenceResult(agg, worst[2], worst[1], float(horizon), tuple(results))
