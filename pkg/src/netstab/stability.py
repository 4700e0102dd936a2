"""Sufficient-condition checks and exact spectral verdicts for coupled systems.

The sufficient test has two parts:

* condition (a): the mean of the patch Jacobians is diagonally dominant with
  non-positive diagonal, with slack ``epsilon``;
* condition (b): the network Fiedler value is at least ``tau``, the largest
  Gershgorin right edge over the non-consensus rows of ``P^-1 Df P``, where
  ``P`` stacks each layer's Laplacian eigenvectors (consensus column of ones,
  all other columns scaled by ``c``).

Failing the test is "inconclusive", never "unstable". The exact verdict comes
from the spectrum of the coupled Jacobian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .assembly import (
    CoupledSystem,
    HomogeneousEquilibrium,
    average_jacobian,
    coupled_jacobian,
    reaction_jacobian,
)
from .errors import NetstabError
from .graph import LaplacianSet, LayerEdge, check_laplacian, scale_weights
from .linalg import (
    direct_sum,
    gen_eigenvalues,
    gershgorin_discs,
    similarity_transform,
    spectral_abscissa,
    sym_eigen,
)

VERDICT_TOL = 1e-9
ZERO_EIG_TOL = 1e-10
WEYL_TOL = 1e-10
DEFAULT_C = 1e-6
C_SWEEP = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
STABLE, UNSTABLE, MARGINAL = "stable", "unstable", "marginal"


@dataclass(frozen=True)
class ConditionA:
    holds: bool
    epsilon: float
    row_margins: tuple[float, ...]


@dataclass(frozen=True)
class ConditionB:
    holds: bool
    lambda2: float
    tau: float
    scaling_c: float


@dataclass(frozen=True)
class ConditionReport:
    condition_a: ConditionA
    condition_b: ConditionB
    sufficient_stable: bool
    # largest Gershgorin right edge of P^-1 (Df - L) P at the chosen c
    disc_right_edge: float

    @property
    def verdict(self) -> str:
        return STABLE if self.sufficient_stable else "inconclusive"


@dataclass(frozen=True)
class StabilityReport:
    spectrum: tuple[complex, ...]
    abscissa: float
    spectral_verdict: str
    lambda2: float
    condition: Optional[ConditionReport] = None
    notes: tuple[str, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class SimilarityBasis:
    blocks: tuple[np.ndarray, ...]  # P_1 .. P_n
    eigenvalues: tuple[np.ndarray, ...]  # diagonal of each Lambda_i
    scaling: float

    @property
    def P(self) -> np.ndarray:
        return direct_sum(self.blocks)

    @property
    def Lambda(self) -> np.ndarray:
        return np.diag(np.concatenate(self.eigenvalues))


def classify(abscissa: float) -> str:
    if abscissa < -VERDICT_TOL:
        return STABLE
    if abscissa > VERDICT_TOL:
        return UNSTABLE
    return MARGINAL


def check_condition_a(avg_jac, epsilon: float = 0.0, strict: bool = False) -> ConditionA:
    """Row-wise diagonal dominance of the averaged Jacobian.

    Margin of row p is ``-a_pp - sum_{q != p} |a_pq| - epsilon``. Weak mode
    accepts margins down to a rounding allowance; strict mode needs every
    margin and every diagonal entry strictly on the safe side of zero.
    """
    a = np.asarray(avg_jac, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NetstabError(f"averaged Jacobian must be square, got shape {a.shape}")
    if epsilon < 0:
        raise NetstabError(f"epsilon must be >= 0, got {epsilon}")
    margins = []
    holds = True
    for p in range(a.shape[0]):
        row = np.abs(a[p])
        off = float(np.sum(row) - row[p])
        margin = -a[p, p] - off - epsilon
        allowance = 1e-12 * (1.0 + float(np.sum(row)))
        if strict:
            ok = margin > allowance and a[p, p] < 0
        else:
            ok = margin >= -allowance and a[p, p] <= allowance
        holds = holds and ok
        margins.append(float(margin))
    return ConditionA(bool(holds), float(epsilon), tuple(margins))


def _consensus_first(vectors: np.ndarray, values: np.ndarray) -> np.ndarray:
    # rotate the null-space block so its first vector is the normalized ones vector
    m = vectors.shape[0]
    k0 = max(1, int(np.sum(values <= ZERO_EIG_TOL * (1.0 + abs(values[-1])))))
    ones = np.full((m, 1), 1.0 / math.sqrt(m))
    q, _ = np.linalg.qr(np.hstack([ones, vectors[:, :k0]]))
    out = vectors.copy()
    out[:, :k0] = q[:, :k0]
    out[:, 0] = ones[:, 0]
    return out


def build_basis(laplacians: LaplacianSet, c: float = DEFAULT_C) -> SimilarityBasis:
    if not 0 < c <= 1:
        raise NetstabError(f"basis scaling c must lie in (0, 1], got {c}")
    blocks, values = [], []
    for i, lap in enumerate(laplacians.matrices, start=1):
        spec = sym_eigen(lap)
        u = _consensus_first(spec.eigenvectors, spec.eigenvalues)
        if np.linalg.matrix_rank(u) < u.shape[0]:
            raise NetstabError(f"layer {i}: eigenvector basis is rank deficient")
        p = u.copy()
        p[:, 0] = 1.0
        p[:, 1:] *= c
        blocks.append(p)
        lam = spec.eigenvalues.copy()
        lam[0] = 0.0
        values.append(lam)
    return SimilarityBasis(tuple(blocks), tuple(values), float(c))


def consensus_rows(m: int, n: int) -> list[int]:
    return [i * m for i in range(n)]


def compute_tau(system: CoupledSystem, eq: HomogeneousEquilibrium, basis: SimilarityBasis) -> float:
    """Largest ``M_ss + sum_{t != s} |M_st|`` over non-consensus rows of ``M = P^-1 Df P``.

    Returns ``-inf`` for a single-patch system (no such rows).
    """
    mt = similarity_transform(reaction_jacobian(system, eq.stacked), basis.P)
    skip = set(consensus_rows(system.m, system.n))
    tau = -math.inf
    for s in range(mt.shape[0]):
        if s in skip:
            continue
        row = np.abs(mt[s])
        tau = max(tau, float(mt[s, s] + np.sum(row) - row[s]))
    return tau


def transformed_jacobian(system: CoupledSystem, eq: HomogeneousEquilibrium, basis: SimilarityBasis) -> np.ndarray:
    """``P^-1 (Df - L) P``."""
    return similarity_transform(coupled_jacobian(system, eq.stacked), basis.P)


def theorem_verdict(
    system: CoupledSystem,
    eq: HomogeneousEquilibrium,
    epsilon: float = 0.0,
    c: float = DEFAULT_C,
    strict: bool = False,
) -> ConditionReport:
    cond_a = check_condition_a(average_jacobian(system, eq.stacked), epsilon, strict)
    basis = build_basis(system.laplacians, c)
    tau = compute_tau(system, eq, basis)
    lam2 = system.laplacians.fiedler_min
    holds_b = lam2 > tau if strict else lam2 >= tau
    cond_b = ConditionB(bool(holds_b), float(lam2), float(tau), float(c))
    edge = max(d.right_edge for d in gershgorin_discs(transformed_jacobian(system, eq, basis)))
    return ConditionReport(cond_a, cond_b, cond_a.holds and cond_b.holds, float(edge))


def tau_sweep(
    system: CoupledSystem, eq: HomogeneousEquilibrium, scalings: Iterable[float] = C_SWEEP
) -> list[tuple[float, float]]:
    return [(c, compute_tau(system, eq, build_basis(system.laplacians, c))) for c in scalings]


def spectral_verdict(
    system: CoupledSystem,
    eq: HomogeneousEquilibrium,
    condition: Optional[ConditionReport] = None,
) -> StabilityReport:
    spectrum = tuple(gen_eigenvalues(coupled_jacobian(system, eq.stacked)))
    abscissa = spectral_abscissa(spectrum)
    verdict = classify(abscissa)
    notes = []
    if condition is not None:
        if condition.sufficient_stable:
            notes.append("sufficient condition holds: stability certified")
        else:
            failed = [k for k, ok in (("a", condition.condition_a.holds), ("b", condition.condition_b.holds)) if not ok]
            notes.append(f"sufficient condition inconclusive (failed: {', '.join(failed)})")
        if condition.sufficient_stable and verdict != STABLE:
            notes.append("WARNING: certified system is not spectrally stable")
    if verdict == MARGINAL:
        notes.append(f"spectral abscissa within {VERDICT_TOL:g} of zero")
    return StabilityReport(spectrum, abscissa, verdict, float(system.laplacians.fiedler_min), condition, tuple(notes))


def stability_report(
    system: CoupledSystem,
    eq: HomogeneousEquilibrium,
    epsilon: float = 0.0,
    c: float = DEFAULT_C,
    strict: bool = False,
) -> StabilityReport:
    return spectral_verdict(system, eq, theorem_verdict(system, eq, epsilon, c, strict))


def abscissa_at(system: CoupledSystem, eq: HomogeneousEquilibrium, s: float) -> float:
    """Spectral abscissa with every dispersal weight multiplied by ``s``."""
    scaled = system.with_network(scale_weights(system.network, s))
    return spectral_abscissa(gen_eigenvalues(coupled_jacobian(scaled, eq.stacked)))


@dataclass(frozen=True)
class ThresholdResult:
    s_star: float
    abscissa: float
    lambda2: float
    bracket: tuple[float, float]
    iterations: int


def coupling_threshold(
    system: CoupledSystem,
    eq: HomogeneousEquilibrium,
    s_lo: float,
    s_hi: float,
    tol: float = 1e-6,
) -> ThresholdResult:
    """Bisect on the weight scale for a zero crossing of the spectral abscissa."""
    if not 0 <= s_lo < s_hi:
        raise NetstabError(f"bracket must satisfy 0 <= lo < hi, got [{s_lo}, {s_hi}]")
    f_lo = abscissa_at(system, eq, s_lo)
    f_hi = abscissa_at(system, eq, s_hi)
    if f_lo * f_hi > 0:
        raise NetstabError(
            f"abscissa has the same sign at both ends: a({s_lo})={f_lo:.6g}, a({s_hi})={f_hi:.6g}"
        )
    lo, hi = s_lo, s_hi
    its = 0
    while hi - lo > tol and f_lo != 0.0 and f_hi != 0.0:
        mid = 0.5 * (lo + hi)
        f_mid = abscissa_at(system, eq, mid)
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
        its += 1
    if f_lo == 0.0:
        s = lo
    elif f_hi == 0.0:
        s = hi
    else:
        s = 0.5 * (lo + hi)
    scaled = system.with_network(scale_weights(system.network, s))
    return ThresholdResult(s, abscissa_at(system, eq, s), float(scaled.laplacians.fiedler_min), (lo, hi), its)


def weyl_check(lap, added_edges: Sequence[LayerEdge]) -> bool:
    """True iff adding ``added_edges`` lowers no sorted Laplacian eigenvalue."""
    lap = check_laplacian(lap)
    new = lap.copy()
    for e in added_edges:
        e = e if isinstance(e, LayerEdge) else LayerEdge(*e)
        if e.weight < 0:
            raise NetstabError(f"added edge {e} has negative weight")
        a, b = e.u - 1, e.v - 1
        new[a, a] += e.weight
        new[b, b] += e.weight
        new[a, b] -= e.weight
        new[b, a] -= e.weight
    before = sym_eigen(lap).eigenvalues
    after = sym_eigen(new).eigenvalues
    return bool(np.all(after >= before - WEYL_TOL))
