"""Local (single-patch) dynamics.

Each model maps a state vector to its time derivative and supplies an
analytic Jacobian. Builtins are two-species predator-prey systems with state
``(prey, predator)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .errors import ConvergenceError, DomainError, NetstabError

logger = logging.getLogger(__name__)

FD_STEP = np.finfo(float).eps ** (1.0 / 3.0)
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 100
NEWTON_MAX_HALVINGS = 20


def _state(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise NetstabError(f"state must have shape ({dim},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NetstabError("state has non-finite entries")
    return x


class PatchModel:
    """Common interface: ``rhs(x)`` and ``jacobian(x)`` on length-``dim`` states."""

    kind = "custom"
    dim: int

    @property
    def params(self) -> dict[str, float]:
        return {}

    def rhs(self, x) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, x) -> np.ndarray:
        return fd_jacobian(self, x)


def _check_positive(kind: str, **values):
    for name, v in values.items():
        if not (math.isfinite(v) and v > 0):
            raise NetstabError(f"{kind}: parameter {name} must be finite and > 0, got {v}")


@dataclass(frozen=True)
class RosenzweigMacArthur(PatchModel):
    """Logistic prey with a Holling type II predator.

    prey' = x (1 - x/gamma) - x y / (1 + x)
    pred' = beta (x / (1 + x) - alpha) y
    """

    gamma: float
    beta: float
    alpha: float
    kind = "rosenzweig_macarthur"
    dim = 2

    def __post_init__(self):
        _check_positive(self.kind, gamma=self.gamma, beta=self.beta)
        if not 0 < self.alpha < 1:
            raise NetstabError(f"{self.kind}: alpha must lie in (0, 1), got {self.alpha}")

    @property
    def params(self):
        return {"gamma": self.gamma, "beta": self.beta, "alpha": self.alpha}

    def _denominator(self, x):
        d = 1.0 + x[0]
        if d == 0.0:
            raise DomainError(f"{self.kind}: singular denominator 1 + prey = 0")
        return d

    def rhs(self, x):
        x = _state(x, 2)
        d = self._denominator(x)
        prey, pred = x
        return np.array([
            prey * (1.0 - prey / self.gamma) - prey * pred / d,
            self.beta * (prey / d - self.alpha) * pred,
        ])

    def jacobian(self, x):
        x = _state(x, 2)
        d = self._denominator(x)
        prey, pred = x
        return np.array([
            [1.0 - 2.0 * prey / self.gamma - pred / d**2, -prey / d],
            [self.beta * pred / d**2, self.beta * (prey / d - self.alpha)],
        ])


@dataclass(frozen=True)
class LotkaVolterra(PatchModel):
    """prey' = r x - c x y, pred' = b x y - m y."""

    r: float
    c: float
    b: float
    m: float
    kind = "lotka_volterra"
    dim = 2

    def __post_init__(self):
        _check_positive(self.kind, r=self.r, c=self.c, b=self.b, m=self.m)

    @property
    def params(self):
        return {"r": self.r, "c": self.c, "b": self.b, "m": self.m}

    def rhs(self, x):
        prey, pred = _state(x, 2)
        return np.array([
            self.r * prey - self.c * prey * pred,
            self.b * prey * pred - self.m * pred,
        ])

    def jacobian(self, x):
        prey, pred = _state(x, 2)
        return np.array([
            [self.r - self.c * pred, -self.c * prey],
            [self.b * pred, self.b * prey - self.m],
        ])

    def first_integral(self, x) -> float:
        """Conserved quantity b x - m ln x + c y - r ln y (positive states)."""
        prey, pred = _state(x, 2)
        return self.b * prey - self.m * math.log(prey) + self.c * pred - self.r * math.log(pred)


@dataclass(frozen=True)
class RatioDependent(PatchModel):
    """Logistic prey (unit capacity) with ratio-dependent predation.

    prey' = x (1 - x) - c x y / (x + y)
    pred' = m (b x / (x + y) - 1) y
    """

    c: float
    b: float
    m: float
    kind = "ratio_dependent"
    dim = 2

    def __post_init__(self):
        _check_positive(self.kind, c=self.c, b=self.b, m=self.m)

    @property
    def params(self):
        return {"c": self.c, "b": self.b, "m": self.m}

    def _total(self, x):
        s = x[0] + x[1]
        if not s > 0:
            raise DomainError(f"{self.kind}: singular denominator prey + predator = {s} (must be > 0)")
        return s

    def rhs(self, x):
        x = _state(x, 2)
        s = self._total(x)
        prey, pred = x
        return np.array([
            prey * (1.0 - prey) - self.c * prey * pred / s,
            self.m * (self.b * prey / s - 1.0) * pred,
        ])

    def jacobian(self, x):
        x = _state(x, 2)
        s = self._total(x)
        prey, pred = x
        s2 = s * s
        return np.array([
            [1.0 - 2.0 * prey - self.c * pred**2 / s2, -self.c * prey**2 / s2],
            [self.m * self.b * pred**2 / s2,
             self.m * (self.b * prey / s - 1.0) - self.m * self.b * prey * pred / s2],
        ])


@dataclass(frozen=True)
class CustomModel(PatchModel):
    """User-supplied right-hand side; Jacobian falls back to central differences."""

    dim: int
    f: Callable[[np.ndarray], np.ndarray]
    jac: Optional[Callable[[np.ndarray], np.ndarray]] = None
    parameters: Mapping[str, float] = field(default_factory=dict)
    kind = "custom"

    def __post_init__(self):
        if self.dim < 1:
            raise NetstabError(f"custom model dim must be >= 1, got {self.dim}")

    @property
    def params(self):
        return dict(self.parameters)

    def rhs(self, x):
        x = _state(x, self.dim)
        out = np.asarray(self.f(x), dtype=float)
        if out.shape != (self.dim,):
            raise NetstabError(f"custom rhs returned shape {out.shape}, expected ({self.dim},)")
        return out

    def jacobian(self, x):
        if self.jac is None:
            return fd_jacobian(self, x)
        out = np.asarray(self.jac(_state(x, self.dim)), dtype=float)
        if out.shape != (self.dim, self.dim):
            raise NetstabError(f"custom Jacobian has shape {out.shape}")
        return out


def linear_model(matrix, center=None) -> CustomModel:
    """``x' = A (x - center)``; handy for tests and synthetic networks."""
    a = np.array(matrix, dtype=float)
    c = np.zeros(a.shape[0]) if center is None else np.array(center, dtype=float)
    return CustomModel(a.shape[0], lambda x: a @ (x - c), lambda x: a.copy())


BUILTINS = {
    RosenzweigMacArthur.kind: (RosenzweigMacArthur, ("gamma", "beta", "alpha")),
    LotkaVolterra.kind: (LotkaVolterra, ("r", "c", "b", "m")),
    RatioDependent.kind: (RatioDependent, ("c", "b", "m")),
}


def make_model(kind: str, params: Mapping[str, float]) -> PatchModel:
    """Instantiate a builtin model from its kind string and named parameters."""
    try:
        cls, names = BUILTINS[kind]
    except KeyError:
        raise NetstabError(f"unknown model kind {kind!r}; expected one of {sorted(BUILTINS)}") from None
    missing = [p for p in names if p not in params]
    extra = [p for p in params if p not in names]
    if missing or extra:
        raise NetstabError(f"{kind}: expected parameters {list(names)}, missing {missing}, unknown {extra}")
    return cls(**{p: float(params[p]) for p in names})


def eval_f(model: PatchModel, state) -> np.ndarray:
    return model.rhs(state)


def eval_jacobian(model: PatchModel, state) -> np.ndarray:
    return model.jacobian(state)


def fd_jacobian(model: PatchModel, state, h=None) -> np.ndarray:
    """Central-difference Jacobian; column q uses step h_q."""
    x = _state(state, model.dim)
    n = model.dim
    out = np.empty((n, n))
    for q in range(n):
        hq = FD_STEP * max(1.0, abs(x[q])) if h is None else float(h)
        xp = x.copy()
        xm = x.copy()
        xp[q] += hq
        xm[q] -= hq
        out[:, q] = (model.rhs(xp) - model.rhs(xm)) / (2.0 * hq)
    return out


def find_equilibrium(model: PatchModel, guess) -> np.ndarray:
    """Damped Newton iteration to ``||f(x)||_inf <= 1e-12``."""
    x = _state(guess, model.dim).copy()
    fx = model.rhs(x)
    res = float(np.max(np.abs(fx)))
    for _ in range(NEWTON_MAX_ITER):
        if res <= NEWTON_TOL:
            break
        jac = model.jacobian(x)
        try:
            step = np.linalg.solve(jac, -fx)
        except np.linalg.LinAlgError:
            raise ConvergenceError(f"singular Jacobian at {x.tolist()}", residual=res) from None
        if not np.all(np.isfinite(step)):
            raise ConvergenceError(f"singular Jacobian at {x.tolist()}", residual=res)
        lam = 1.0
        for _ in range(NEWTON_MAX_HALVINGS + 1):
            trial = x + lam * step
            try:
                ft = model.rhs(trial)
                rt = float(np.max(np.abs(ft)))
            except DomainError:
                rt = math.inf
            if rt < res:
                break
            lam *= 0.5
        else:
            # no decrease found; take the smallest step that stays in the domain
            if not math.isfinite(rt):
                raise ConvergenceError(f"Newton step left the model domain at {x.tolist()}", residual=res)
        x, fx, res = trial, ft, rt
    if res > NEWTON_TOL:
        raise ConvergenceError(
            f"Newton did not converge in {NEWTON_MAX_ITER} iterations (residual {res:.3e})", residual=res
        )
    # one polishing step: the residual test alone can leave ~1e-11 error in x
    try:
        polished = x + np.linalg.solve(model.jacobian(x), -fx)
        if np.all(np.isfinite(polished)) and float(np.max(np.abs(model.rhs(polished)))) <= res:
            x = polished
    except (np.linalg.LinAlgError, DomainError):
        pass
    if np.any(x <= 0):
        logger.warning("equilibrium %s is not component-wise positive", x.tolist())
    return x
