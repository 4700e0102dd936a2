"""Dense real matrix kernels.

Matrices are plain 2-D float ``numpy`` arrays. The eigensolvers are written
out by hand (cyclic Jacobi for symmetric input, balancing + Householder
Hessenberg reduction + Francis double-shift QR for general input) so that
results are deterministic and do not depend on the LAPACK build.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import lapack
from scipy.sparse.csgraph import connected_components

from .errors import ConvergenceError, NetstabError

SYM_TOL = 1e-10
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 50
SNAP_TOL = 1e-9
COND_LIMIT = 1e12
_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class SymmetricSpectrum:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # orthonormal columns


@dataclass(frozen=True)
class GershgorinDisc:
    center: float
    radius: float
    row_index: int

    @property
    def right_edge(self) -> float:
        return self.center + self.radius

    def distance(self, z: complex) -> float:
        """Distance from ``z`` to the closed disc (0 when inside)."""
        return max(0.0, abs(complex(z) - self.center) - self.radius)


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.array(a, dtype=float)
    if m.ndim != 2:
        raise NetstabError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NetstabError(f"{name} has non-finite entries")
    return m


def _square(a, name: str = "matrix") -> np.ndarray:
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise NetstabError(f"{name} must be square, got shape {m.shape}")
    return m


def inf_norm(a: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(a), axis=1))) if a.size else 0.0


def direct_sum(blocks: Sequence) -> np.ndarray:
    """Block-diagonal matrix with ``blocks`` on the diagonal."""
    mats = []
    for k, b in enumerate(blocks):
        m = as_matrix(b, f"block {k}")
        if m.shape[0] != m.shape[1]:
            raise NetstabError(f"block {k} is not square: shape {m.shape}")
        mats.append(m)
    size = sum(m.shape[0] for m in mats)
    out = np.zeros((size, size))
    at = 0
    for m in mats:
        k = m.shape[0]
        out[at:at + k, at:at + k] = m
        at += k
    return out


def sym_eigen(a) -> SymmetricSpectrum:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi."""
    a = _square(a)
    scale = 1.0 + inf_norm(a)
    if inf_norm(a - a.T) > SYM_TOL * scale:
        raise NetstabError("sym_eigen: matrix is not symmetric")
    n = a.shape[0]
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    target = JACOBI_TOL * np.linalg.norm(a)

    mask = ~np.eye(n, dtype=bool)

    def off(x):
        return float(np.linalg.norm(x[mask]))

    for _ in range(JACOBI_MAX_SWEEPS):
        if off(a) <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < abs(diff) * 1e-36:
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) rotation
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        residual = off(a)
        if residual > target:
            raise ConvergenceError(
                f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps "
                f"(off-diagonal norm {residual:.3e})",
                residual=residual,
            )
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return SymmetricSpectrum(w[order], v[:, order])


def _balance(a: list[list[float]]) -> None:
    # radix-2 row/column equilibration, in place
    radix, sqrdx = 2.0, 4.0
    n = len(a)
    done = False
    while not done:
        done = True
        for i in range(n):
            r = c = 0.0
            for j in range(n):
                if j != i:
                    c += abs(a[j][i])
                    r += abs(a[i][j])
            if c == 0.0 or r == 0.0:
                continue
            g = r / radix
            f = 1.0
            s = c + r
            while c < g:
                f *= radix
                c *= sqrdx
            g = r * radix
            while c > g:
                f /= radix
                c /= sqrdx
            if (c + r) / f < 0.95 * s:
                done = False
                g = 1.0 / f
                for j in range(n):
                    a[i][j] *= g
                for j in range(n):
                    a[j][i] *= f


def hessenberg(a) -> np.ndarray:
    """Upper Hessenberg form of ``a`` by Householder reflections."""
    h = _square(a).copy()
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k]
        big = float(np.max(np.abs(x)))
        if big == 0.0:
            continue
        u = x / big  # guards the norm against under/overflow
        u[0] += math.copysign(np.linalg.norm(u), u[0])
        u /= np.linalg.norm(u)
        h[k + 1:, k:] -= 2.0 * np.outer(u, u @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ u, u)
        h[k + 2:, k] = 0.0
    return h


def _hqr(a: list[list[float]], max_iter: int) -> list[complex]:
    """Eigenvalues of an upper Hessenberg matrix (destroyed) by Francis QR."""
    n = len(a)
    wr = [0.0] * n
    wi = [0.0] * n
    anorm = 0.0
    for i in range(n):
        for j in range(max(i - 1, 0), n):
            anorm += abs(a[i][j])
    nn = n - 1
    t = 0.0
    total = 0
    while nn >= 0:
        its = 0
        while True:
            l = nn
            while l >= 1:
                s = abs(a[l - 1][l - 1]) + abs(a[l][l])
                if s == 0.0:
                    s = anorm
                # second test: normwise floor for graded or mixed-scale input
                if abs(a[l][l - 1]) + s == s or abs(a[l][l - 1]) <= _EPS * anorm:
                    a[l][l - 1] = 0.0
                    break
                l -= 1
            x = a[nn][nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                break
            y = a[nn - 1][nn - 1]
            w = a[nn][nn - 1] * a[nn - 1][nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = math.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + math.copysign(z, p)
                    wr[nn - 1] = wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = wi[nn] = 0.0
                else:
                    wr[nn - 1] = wr[nn] = x + p
                    wi[nn - 1] = -z
                    wi[nn] = z
                nn -= 2
                break
            if total >= max_iter:
                found = [complex(wr[k], wi[k]) for k in range(nn + 1, n)]
                raise ConvergenceError(
                    f"QR iteration did not converge after {total} iterations; "
                    f"{len(found)} of {n} eigenvalues found",
                    residual=abs(a[nn][nn - 1]),
                    partial=found,
                )
            if its == 10 or its == 20:
                # exceptional shift
                t += x
                for i in range(nn + 1):
                    a[i][i] -= x
                s = abs(a[nn][nn - 1]) + abs(a[nn - 1][nn - 2])
                x = y = 0.75 * s
                w = -0.4375 * s * s
            its += 1
            total += 1
            m = nn - 2
            while m >= l:
                z = a[m][m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1][m] + a[m][m + 1]
                q = a[m + 1][m + 1] - z - r - s
                r = a[m + 2][m + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = abs(a[m][m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1][m - 1]) + abs(z) + abs(a[m + 1][m + 1]))
                if u + v == v:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                a[i][i - 2] = 0.0
                if i != m + 2:
                    a[i][i - 3] = 0.0
            for k in range(m, nn):
                if k != m:
                    p = a[k][k - 1]
                    q = a[k + 1][k - 1]
                    r = a[k + 2][k - 1] if k != nn - 1 else 0.0
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
                if s == 0.0:
                    continue
                if k == m:
                    if l != m:
                        a[k][k - 1] = -a[k][k - 1]
                else:
                    a[k][k - 1] = -s * x
                p += s
                x = p / s
                y = q / s
                z = r / s
                q /= p
                r /= p
                for j in range(k, nn + 1):
                    p = a[k][j] + q * a[k + 1][j]
                    if k != nn - 1:
                        p += r * a[k + 2][j]
                        a[k + 2][j] -= p * z
                    a[k + 1][j] -= p * y
                    a[k][j] -= p * x
                for i in range(l, min(nn, k + 3) + 1):
                    p = x * a[i][k] + y * a[i][k + 1]
                    if k != nn - 1:
                        p += z * a[i][k + 2]
                        a[i][k + 2] -= p * r
                    a[i][k + 1] -= p * q
                    a[i][k] -= p
    return [complex(wr[k], wi[k]) for k in range(n)]


def sort_eigenvalues(values) -> list[complex]:
    return sorted((complex(v) for v in values), key=lambda z: (z.real, z.imag))


def _irreducible_eigenvalues(a: np.ndarray) -> list[complex]:
    n = a.shape[0]
    if n == 1:
        return [complex(a[0, 0])]
    big = float(np.max(np.abs(a)))
    if big == 0.0:
        return [complex(0.0)] * n
    # exact power-of-two rescale keeps shift arithmetic clear of under/overflow
    exp = math.frexp(big)[1]
    rows = np.ldexp(a, -exp).tolist()
    _balance(rows)
    h = hessenberg(np.array(rows)).tolist()
    return [complex(math.ldexp(z.real, exp), math.ldexp(z.imag, exp)) for z in _hqr(h, max_iter=30 * n)]


def gen_eigenvalues(a) -> list[complex]:
    """All eigenvalues of a real square matrix, sorted by (re, im).

    The matrix is first split along the strongly connected components of its
    nonzero pattern; a permutation makes it block triangular, so the spectrum
    is the union over the diagonal blocks. Near-real values
    (``|im| <= 1e-9 (1 + |re|)``) are snapped onto the real axis.
    """
    a = _square(a)
    n = a.shape[0]
    if n == 0:
        return []
    count, labels = connected_components(a != 0.0, directed=True, connection="strong")
    values = []
    for k in range(count):
        idx = np.flatnonzero(labels == k)
        values.extend(_irreducible_eigenvalues(a[np.ix_(idx, idx)]))
    out = []
    for z in values:
        if abs(z.imag) <= SNAP_TOL * (1.0 + abs(z.real)):
            z = complex(z.real, 0.0)
        out.append(z)
    return sort_eigenvalues(out)


def gershgorin_discs(a) -> list[GershgorinDisc]:
    a = _square(a)
    discs = []
    for r in range(a.shape[0]):
        row = np.abs(a[r])
        radius = float(np.sum(row) - row[r])
        discs.append(GershgorinDisc(float(a[r, r]), radius, r))
    return discs


def in_disc_union(z: complex, discs: Sequence[GershgorinDisc]) -> float:
    """Distance from ``z`` to the nearest disc; 0 when covered."""
    return min(d.distance(z) for d in discs)


def condition_estimate(p) -> float:
    """1-norm condition number estimate of ``p`` (inf when singular)."""
    p = _square(p)
    if p.shape[0] == 0:
        return 1.0
    lu, piv, info = lapack.dgetrf(p)
    if info > 0 or np.any(np.diag(lu) == 0.0):
        return math.inf
    anorm = float(np.max(np.sum(np.abs(p), axis=0)))
    rcond, _ = lapack.dgecon(lu, anorm, norm="1")
    return math.inf if rcond == 0.0 else 1.0 / rcond


def similarity_transform(a, p) -> np.ndarray:
    """Return ``P^-1 A P`` via an LU solve, rejecting ill-conditioned ``P``."""
    a = _square(a, "A")
    p = _square(p, "P")
    if a.shape != p.shape:
        raise NetstabError(f"A {a.shape} and P {p.shape} differ in size")
    cond = condition_estimate(p)
    if cond > COND_LIMIT:
        raise NetstabError(f"P is numerically singular (condition estimate {cond:.3e})")
    lu, piv, _ = lapack.dgetrf(p)
    x, info = lapack.dgetrs(lu, piv, a @ p)
    return x


def spectral_abscissa(spectrum) -> float:
    values = list(spectrum)
    if not values:
        raise NetstabError("spectral abscissa of an empty spectrum")
    return max(complex(z).real for z in values)
