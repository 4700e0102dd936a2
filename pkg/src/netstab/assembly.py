"""Coupling patch models over a layered network.

The stacked state is variable-major: all patches' first variable, then all
patches' second variable, and so on. Flat position of (variable i, patch j)
is ``(i-1)*m + (j-1)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DomainError, NetstabError
from .graph import LaplacianSet, LayeredNetwork, laplacian_set
from .linalg import direct_sum
from .models import PatchModel

logger = logging.getLogger(__name__)

EQ_F_TOL = 1e-10
EQ_L_TOL = 1e-12


def stack_index(i: int, j: int, m: int, n: int | None = None) -> int:
    if m < 1 or not 1 <= j <= m or i < 1 or (n is not None and i > n):
        raise NetstabError(f"(variable {i}, patch {j}) out of range for m={m}, n={n}")
    return (i - 1) * m + (j - 1)


def unstack_index(k: int, m: int) -> tuple[int, int]:
    if k < 0 or m < 1:
        raise NetstabError(f"flat index {k} out of range")
    return k // m + 1, k % m + 1


@dataclass(frozen=True)
class CoupledSystem:
    models: tuple[PatchModel, ...]
    network: LayeredNetwork

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        if len(self.models) != self.network.m:
            raise NetstabError(f"{len(self.models)} models for a network of {self.network.m} patches")
        for j, mod in enumerate(self.models, start=1):
            if mod.dim != self.network.n:
                raise NetstabError(
                    f"patch {j} model has dim {mod.dim} but the network has {self.network.n} layers"
                )

    @property
    def m(self) -> int:
        return self.network.m

    @property
    def n(self) -> int:
        return self.network.n

    @property
    def size(self) -> int:
        return self.m * self.n

    @cached_property
    def laplacians(self) -> LaplacianSet:
        return laplacian_set(self.network)

    @cached_property
    def block_laplacian(self) -> np.ndarray:
        return direct_sum(self.laplacians.matrices)

    def with_network(self, network: LayeredNetwork) -> "CoupledSystem":
        return CoupledSystem(self.models, network)

    def patch_state(self, x: np.ndarray, j: int) -> np.ndarray:
        return x[j - 1::self.m]

    def check_state(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.size,):
            raise NetstabError(f"stacked state must have length {self.size}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise NetstabError("stacked state has non-finite entries")
        return x


def assemble_block_laplacian(system: CoupledSystem) -> np.ndarray:
    return system.block_laplacian.copy()


def _reaction(system: CoupledSystem, x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    for j, mod in enumerate(system.models, start=1):
        try:
            out[j - 1::system.m] = mod.rhs(system.patch_state(x, j))
        except DomainError as exc:
            raise DomainError(f"patch {j}: {exc}") from exc
    return out


def eval_coupled_f(system: CoupledSystem, x) -> np.ndarray:
    """Stacked reaction terms minus ``L x``."""
    x = system.check_state(x)
    return _reaction(system, x) - system.block_laplacian @ x


def eval_coupled_f_edges(system: CoupledSystem, x) -> np.ndarray:
    """Same as :func:`eval_coupled_f`, summing ``w (x_j - x_k)`` edge by edge."""
    x = system.check_state(x)
    out = _reaction(system, x)
    m = system.m
    for i, edges in enumerate(system.network.layers, start=1):
        for e in edges:
            a = (i - 1) * m + e.u - 1
            b = (i - 1) * m + e.v - 1
            out[a] -= e.weight * (x[a] - x[b])
            out[b] -= e.weight * (x[b] - x[a])
    return out


def reaction_jacobian(system: CoupledSystem, x) -> np.ndarray:
    """``Df(x)``: an n x n grid of diagonal m x m blocks."""
    x = system.check_state(x)
    m, n = system.m, system.n
    out = np.zeros((m * n, m * n))
    for j, mod in enumerate(system.models, start=1):
        try:
            jac = mod.jacobian(system.patch_state(x, j))
        except DomainError as exc:
            raise DomainError(f"patch {j}: {exc}") from exc
        idx = np.arange(n) * m + (j - 1)
        out[np.ix_(idx, idx)] = jac
    return out


def coupled_jacobian(system: CoupledSystem, x) -> np.ndarray:
    return reaction_jacobian(system, x) - system.block_laplacian


def patch_jacobians(system: CoupledSystem, x) -> list[np.ndarray]:
    x = system.check_state(x)
    return [mod.jacobian(system.patch_state(x, j)) for j, mod in enumerate(system.models, start=1)]


def average_jacobian(system: CoupledSystem, x) -> np.ndarray:
    """Mean of the per-patch Jacobians, an n x n matrix."""
    return sum(patch_jacobians(system, x)) / system.m


def homogeneous_state(per_patch: Sequence[float], m: int) -> np.ndarray:
    return np.repeat(np.asarray(per_patch, dtype=float), m)


@dataclass(frozen=True)
class HomogeneousEquilibrium:
    per_patch: np.ndarray
    stacked: np.ndarray
    residual_f: float
    residual_L: float


def make_homogeneous_equilibrium(system: CoupledSystem, per_patch) -> HomogeneousEquilibrium:
    per_patch = np.asarray(per_patch, dtype=float)
    if per_patch.shape != (system.n,):
        raise NetstabError(f"per-patch equilibrium must have length {system.n}, got shape {per_patch.shape}")
    stacked = homogeneous_state(per_patch, system.m)
    worst_patch, worst = 0, 0.0
    for j, mod in enumerate(system.models, start=1):
        try:
            r = float(np.max(np.abs(mod.rhs(per_patch))))
        except DomainError as exc:
            raise DomainError(f"patch {j}: {exc}") from exc
        if r > worst or worst_patch == 0:
            worst_patch, worst = j, r
    res_l = float(np.max(np.abs(system.block_laplacian @ stacked)))
    if worst > EQ_F_TOL:
        raise NetstabError(
            f"{per_patch.tolist()} is not an equilibrium of patch {worst_patch} (residual {worst:.3e})"
        )
    if res_l > EQ_L_TOL:
        raise NetstabError(f"coupling residual {res_l:.3e} exceeds {EQ_L_TOL}")
    if np.any(per_patch <= 0):
        logger.warning("homogeneous equilibrium %s is not component-wise positive", per_patch.tolist())
    return HomogeneousEquilibrium(per_patch, stacked, worst, res_l)
