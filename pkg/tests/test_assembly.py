import numpy as np
import pytest
from hypothesis import given, strategies as st

from netstab.assembly import (
    CoupledSystem,
    average_jacobian,
    coupled_jacobian,
    eval_coupled_f,
    eval_coupled_f_edges,
    homogeneous_state,
    make_homogeneous_equilibrium,
    patch_jacobians,
    reaction_jacobian,
    stack_index,
    unstack_index,
)
from netstab.errors import DomainError, NetstabError
from netstab.graph import LayeredNetwork
from netstab.models import RatioDependent, RosenzweigMacArthur, linear_model

from _oracles import coupled_jacobian_loops, dense_laplacian


@st.composite
def linear_systems(draw, max_m=5, max_n=3):
    m = draw(st.integers(1, max_m))
    n = draw(st.integers(1, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    models = tuple(linear_model(rng.normal(size=(n, n))) for _ in range(m))
    layers = []
    for _ in range(n):
        edges = [(u, v, float(rng.uniform(0, 2))) for u in range(1, m + 1) for v in range(u + 1, m + 1)
                 if rng.random() < 0.6]
        layers.append(edges)
    return CoupledSystem(models, LayeredNetwork.from_edges(m, layers)), rng


@given(st.integers(1, 6), st.integers(1, 6))
def test_stack_index_roundtrip(m, n):
    seen = set()
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            k = stack_index(i, j, m, n)
            assert unstack_index(k, m) == (i, j)
            seen.add(k)
    assert seen == set(range(m * n))


def test_stack_index_errors():
    with pytest.raises(NetstabError):
        stack_index(1, 4, 3)
    with pytest.raises(NetstabError):
        stack_index(3, 1, 3, n=2)
    with pytest.raises(NetstabError):
        unstack_index(-1, 3)


@given(linear_systems())
def test_coupled_jacobian_matches_loop_assembly(sys_rng):
    system, rng = sys_rng
    x = rng.normal(size=system.size)
    jacs = [mod.jacobian(system.patch_state(x, j)) for j, mod in enumerate(system.models, start=1)]
    laps = [dense_laplacian(system.m, [(e.u, e.v, e.weight) for e in layer]) for layer in system.network.layers]
    assert np.allclose(coupled_jacobian(system, x), coupled_jacobian_loops(jacs, laps), atol=1e-13)


@given(linear_systems())
def test_rhs_matrix_and_edge_forms_agree(sys_rng):
    system, rng = sys_rng
    x = rng.normal(size=system.size)
    assert np.allclose(eval_coupled_f(system, x), eval_coupled_f_edges(system, x), atol=1e-12)
    # linear patches: the coupled field is exactly J x
    assert np.allclose(eval_coupled_f(system, x), coupled_jacobian(system, x) @ x, atol=1e-12)


@given(linear_systems())
def test_reaction_jacobian_block_structure(sys_rng):
    system, rng = sys_rng
    df = reaction_jacobian(system, rng.normal(size=system.size))
    m = system.m
    for a in range(system.size):
        for b in range(system.size):
            if a % m != b % m:
                assert df[a, b] == 0.0


def _example1(w_prey=1.0):
    models = (RosenzweigMacArthur(3 / 13, 0.1, 1 / 6), RatioDependent(1.8, 1.8, 0.25),
              RosenzweigMacArthur(3 / 13, 0.1, 1 / 6))
    layer = lambda w23: [(1, 2, 0.0), (1, 3, 0.1), (2, 3, w23)]  # noqa: E731
    return CoupledSystem(models, LayeredNetwork.from_edges(3, [layer(w_prey), layer(1.0)]))


def test_homogeneous_equilibrium_of_example():
    system = _example1()
    eq = make_homogeneous_equilibrium(system, [0.2, 0.16])
    assert np.array_equal(eq.stacked, [0.2, 0.2, 0.2, 0.16, 0.16, 0.16])
    assert eq.residual_f <= 1e-16 and eq.residual_L <= 1e-16
    assert np.max(np.abs(eval_coupled_f(system, eq.stacked))) <= 1e-15


def test_average_jacobian_of_example():
    system = _example1()
    avg = average_jacobian(system, homogeneous_state([0.2, 0.16], 3))
    assert np.allclose(3 * avg, [[-13 / 9, -8 / 9], [1 / 9, -1 / 9]], atol=1e-15)
    assert len(patch_jacobians(system, homogeneous_state([0.2, 0.16], 3))) == 3


def test_non_equilibrium_rejected_with_patch():
    system = _example1()
    with pytest.raises(NetstabError, match="patch 1"):
        make_homogeneous_equilibrium(system, [0.3, 0.16])
    with pytest.raises(NetstabError, match="length 2"):
        make_homogeneous_equilibrium(system, [0.2, 0.16, 0.1])


def test_domain_error_names_patch():
    system = _example1()
    x = homogeneous_state([0.2, 0.16], 3)
    x[1] = -0.16  # patch 2 prey makes x + y = 0
    with pytest.raises(DomainError, match="patch 2"):
        eval_coupled_f(system, x)


def test_system_validation():
    net = LayeredNetwork.from_edges(2, [[(1, 2, 1.0)], [(1, 2, 1.0)]])
    with pytest.raises(NetstabError, match="2 patches"):
        CoupledSystem((linear_model(np.eye(2)),), net)
    with pytest.raises(NetstabError, match="dim 3"):
        CoupledSystem((linear_model(np.eye(3)), linear_model(np.eye(3))), net)
    system = CoupledSystem((linear_model(np.eye(2)), linear_model(np.eye(2))), net)
    with pytest.raises(NetstabError):
        eval_coupled_f(system, np.zeros(3))


def test_average_jacobian_of_second_example(bundled):
    _, system, eq = bundled["example2_set1"]
    avg = average_jacobian(system, eq.stacked)
    # (J_LV + 4 J_RM) / 5 with J_LV = [[0, -21/10], [11/14, 0]] and J_RM = [[3/140, -3/10], [11/100, 0]]
    exact = (np.array([[0.0, -2.1], [11 / 14, 0.0]]) + 4 * np.array([[3 / 140, -0.3], [0.11, 0.0]])) / 5
    assert avg == pytest.approx(exact, abs=1e-14)
    assert avg[0, 0] == pytest.approx(3 / 175, abs=1e-15)
    assert avg[1, 0] == pytest.approx(0.245, abs=2e-4)


def test_rejected_point_reports_residual():
    system = _example1()
    resid = np.max(np.abs(RosenzweigMacArthur(3 / 13, 0.1, 1 / 6).rhs([0.3, 0.16])))
    # prey: 0.3 (1 - 1.3) - 0.048 / 1.3
    assert resid == pytest.approx(0.09 + 0.048 / 1.3, abs=1e-15)
    with pytest.raises(NetstabError) as info:
        make_homogeneous_equilibrium(system, [0.3, 0.16])
    assert "patch 1" in str(info.value)
