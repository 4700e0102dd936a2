"""Layered patch networks and their graph Laplacians.

Patches are numbered 1..m and layers (one per state variable) 1..n, matching
the ``w^i_jk`` indexing used throughout the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import NetstabError
from .linalg import sym_eigen

ROW_SUM_TOL = 1e-12
PSD_TOL = 1e-10
CONNECTED_TOL = 1e-10


@dataclass(frozen=True)
class LayerEdge:
    u: int
    v: int
    weight: float

    @property
    def key(self) -> tuple[int, int]:
        return (min(self.u, self.v), max(self.u, self.v))


@dataclass(frozen=True)
class LayeredNetwork:
    """``m`` patches coupled through ``n`` undirected weighted layers."""

    m: int
    layers: tuple[tuple[LayerEdge, ...], ...]

    def __post_init__(self):
        if self.m < 1:
            raise NetstabError(f"network needs at least one patch, got m={self.m}")
        if len(self.layers) < 1:
            raise NetstabError("network needs at least one layer")
        layers = []
        for i, edges in enumerate(self.layers, start=1):
            seen = set()
            clean = []
            for k, e in enumerate(edges):
                if not isinstance(e, LayerEdge):
                    e = LayerEdge(*e)
                where = f"layer {i}, edge {k}"
                if e.u == e.v:
                    raise NetstabError(f"{where}: self-loop on patch {e.u}")
                for end in (e.u, e.v):
                    if not 1 <= end <= self.m:
                        raise NetstabError(f"{where}: patch {end} outside 1..{self.m}")
                if not math.isfinite(e.weight):
                    raise NetstabError(f"{where}: weight is not finite")
                if e.weight < 0:
                    raise NetstabError(f"{where}: negative weight {e.weight}")
                if e.key in seen:
                    raise NetstabError(f"{where}: duplicate edge {e.key}")
                seen.add(e.key)
                clean.append(LayerEdge(int(e.u), int(e.v), float(e.weight)))
            layers.append(tuple(clean))
        object.__setattr__(self, "layers", tuple(layers))

    @property
    def n(self) -> int:
        return len(self.layers)

    @classmethod
    def from_edges(cls, m: int, layers: Iterable[Iterable[Sequence]]) -> "LayeredNetwork":
        """Build from nested ``(u, v, w)`` triples, one list per layer."""
        return cls(m, tuple(tuple(LayerEdge(*e) for e in layer) for layer in layers))

    def layer(self, i: int) -> tuple[LayerEdge, ...]:
        if not 1 <= i <= self.n:
            raise NetstabError(f"layer {i} outside 1..{self.n}")
        return self.layers[i - 1]


@dataclass(frozen=True)
class LaplacianSet:
    matrices: tuple[np.ndarray, ...]
    fiedler_per_layer: tuple[float, ...]
    fiedler_min: float


def build_laplacian(network: LayeredNetwork, layer: int) -> np.ndarray:
    m = network.m
    lap = np.zeros((m, m))
    for k, e in enumerate(network.layer(layer)):
        if e.weight < 0:
            raise NetstabError(f"layer {layer}, edge {k}: negative weight {e.weight}")
        if e.weight == 0.0:
            continue
        a, b = e.u - 1, e.v - 1
        lap[a, b] -= e.weight
        lap[b, a] -= e.weight
        lap[a, a] += e.weight
        lap[b, b] += e.weight
    return lap


def check_laplacian(lap) -> np.ndarray:
    lap = np.asarray(lap, dtype=float)
    if lap.ndim != 2 or lap.shape[0] != lap.shape[1]:
        raise NetstabError(f"Laplacian must be square, got shape {lap.shape}")
    if not np.array_equal(lap, lap.T):
        raise NetstabError("Laplacian is not symmetric")
    scale = 1.0 + float(np.max(np.abs(lap), initial=0.0))
    if np.max(np.abs(lap.sum(axis=1)), initial=0.0) > ROW_SUM_TOL * scale:
        raise NetstabError("Laplacian rows do not sum to zero")
    off = lap - np.diag(np.diag(lap))
    if np.any(off > 0) or np.any(np.diag(lap) < 0):
        raise NetstabError("Laplacian has positive off-diagonal or negative diagonal entries")
    return lap


def fiedler_value(lap) -> float:
    """Second-smallest Laplacian eigenvalue (0 for a single patch)."""
    lap = check_laplacian(lap)
    w = sym_eigen(lap).eigenvalues
    if w.size and w[0] < -PSD_TOL * (1.0 + abs(w[-1])):
        raise NetstabError(f"Laplacian is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    if w.size < 2:
        return 0.0
    return float(w[1])


def laplacian_set(network: LayeredNetwork) -> LaplacianSet:
    mats = tuple(build_laplacian(network, i) for i in range(1, network.n + 1))
    per_layer = tuple(fiedler_value(L) for L in mats)
    return LaplacianSet(mats, per_layer, min(per_layer))


def network_fiedler(lset: LaplacianSet) -> float:
    if not lset.fiedler_per_layer:
        raise NetstabError("empty Laplacian set")
    return min(lset.fiedler_per_layer)


def is_connected(network: LayeredNetwork, layer: int) -> bool:
    parent = list(range(network.m))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    components = network.m
    for e in network.layer(layer):
        if e.weight > 0:
            ra, rb = find(e.u - 1), find(e.v - 1)
            if ra != rb:
                parent[ra] = rb
                components -= 1
    return components == 1


def scale_weights(network: LayeredNetwork, s: float) -> LayeredNetwork:
    if not s >= 0:
        raise NetstabError(f"scale factor must be >= 0, got {s}")
    return LayeredNetwork(
        network.m,
        tuple(tuple(LayerEdge(e.u, e.v, e.weight * s) for e in layer) for layer in network.layers),
    )


def add_edges(network: LayeredNetwork, layer: int, edges: Iterable[LayerEdge]) -> LayeredNetwork:
    """Copy of ``network`` with extra weight on ``layer``; existing pairs accumulate."""
    current = {e.key: e.weight for e in network.layer(layer)}
    for e in edges:
        e = e if isinstance(e, LayerEdge) else LayerEdge(*e)
        current[e.key] = current.get(e.key, 0.0) + e.weight
    new_layer = tuple(LayerEdge(u, v, w) for (u, v), w in sorted(current.items()))
    layers = list(network.layers)
    layers[layer - 1] = new_layer
    return LayeredNetwork(network.m, tuple(layers))
