"""Independent reference computations used only by the tests."""

from fractions import Fraction

import numpy as np
from scipy.optimize import linear_sum_assignment


def match_distance(a, b) -> float:
    """Largest |a_k - b_pi(k)| under the best one-to-one pairing."""
    a = np.asarray(list(a), dtype=complex)
    b = np.asarray(list(b), dtype=complex)
    assert a.shape == b.shape
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def nearest(z, values) -> float:
    return float(min(abs(complex(z) - complex(v)) for v in values))


def dense_laplacian(m, edges):
    """Laplacian straight from the definition D - A."""
    adj = np.zeros((m, m))
    for u, v, w in edges:
        adj[u - 1, v - 1] += w
        adj[v - 1, u - 1] += w
    return np.diag(adj.sum(axis=1)) - adj


def coupled_jacobian_loops(jacs, laps):
    """Entry-by-entry assembly: row (i,j), column (k,l) of Df - L."""
    m = len(jacs)
    n = jacs[0].shape[0]
    out = np.zeros((n * m, n * m))
    for i in range(n):
        for j in range(m):
            for k in range(n):
                for l in range(m):
                    val = jacs[j][i, k] if j == l else 0.0
                    if i == k:
                        val -= laps[i][j, l]
                    out[i * m + j, k * m + l] = val
    return out


# exact Jacobians, differentiated by hand from the two right-hand sides
#   RM:  x(1 - x/gamma) - xy/(1+x),     beta (x/(1+x) - alpha) y
#   RD:  x(1 - x) - c xy/(x+y),         m (b x/(x+y) - 1) y

def rm_jacobian_exact(gamma, beta, alpha, x, y):
    g, b, a, x, y = map(Fraction, (gamma, beta, alpha, x, y))
    return [
        [1 - 2 * x / g - y / (1 + x) ** 2, -x / (1 + x)],
        [b * y / (1 + x) ** 2, b * (x / (1 + x) - a)],
    ]


def rd_jacobian_exact(c, b, m, x, y):
    c, b, m, x, y = map(Fraction, (c, b, m, x, y))
    s = (x + y) ** 2
    return [
        [1 - 2 * x - c * y * y / s, -c * x * x / s],
        [m * b * y * y / s, m * (b * x * x / s - 1)],
    ]


def random_linear_network(rng):
    """Random coupled system of linear patches around x = 1.

    Half the draws use identical patches (where the sufficient test can
    succeed), the rest add heterogeneity.
    """
    from netstab.assembly import CoupledSystem, make_homogeneous_equilibrium
    from netstab.graph import LayeredNetwork
    from netstab.models import linear_model

    m = int(rng.integers(2, 6))
    n = int(rng.integers(1, 4))
    base = rng.normal(size=(n, n))
    np.fill_diagonal(base, 0.0)
    np.fill_diagonal(base, -(np.abs(base).sum(axis=1) + rng.uniform(-0.3, 0.5, n)))
    eta = 0.0 if rng.random() < 0.5 else rng.uniform(0, 0.5)
    models = tuple(linear_model(base + eta * rng.normal(size=(n, n)), np.ones(n)) for _ in range(m))
    layers = [
        [(u, v, float(rng.uniform(0, 2))) for u in range(1, m + 1) for v in range(u + 1, m + 1) if rng.random() < 0.7]
        for _ in range(n)
    ]
    system = CoupledSystem(models, LayeredNetwork.from_edges(m, layers))
    return system, make_homogeneous_equilibrium(system, np.ones(n))
