import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netstab.assembly import CoupledSystem, coupled_jacobian, make_homogeneous_equilibrium
from netstab.errors import NetstabError
from netstab.graph import LayerEdge, LayeredNetwork, build_laplacian, scale_weights
from netstab.linalg import gen_eigenvalues, gershgorin_discs, in_disc_union
from netstab.models import linear_model
from netstab.stability import (
    C_SWEEP,
    MARGINAL,
    STABLE,
    UNSTABLE,
    build_basis,
    check_condition_a,
    classify,
    compute_tau,
    consensus_rows,
    coupling_threshold,
    spectral_verdict,
    stability_report,
    tau_sweep,
    theorem_verdict,
    transformed_jacobian,
    weyl_check,
)

from _oracles import match_distance, random_linear_network


def _identical(jac, m, layers):
    jac = np.asarray(jac, dtype=float)
    n = jac.shape[0]
    system = CoupledSystem(tuple(linear_model(jac, np.ones(n)) for _ in range(m)), LayeredNetwork.from_edges(m, layers))
    return system, make_homogeneous_equilibrium(system, np.ones(n))


def test_classify_band():
    assert classify(-1e-8) == STABLE
    assert classify(1e-8) == UNSTABLE
    assert classify(0.0) == classify(5e-10) == classify(-5e-10) == MARGINAL


def test_condition_a_margins():
    a = check_condition_a([[-13 / 27, -8 / 27], [1 / 27, -1 / 27]])
    assert a.holds
    assert a.row_margins[0] == pytest.approx(5 / 27, abs=1e-15)
    assert abs(a.row_margins[1]) <= 1e-16
    assert not check_condition_a([[-13 / 27, -8 / 27], [1 / 27, -1 / 27]], strict=True).holds
    assert not check_condition_a([[-13 / 27, -8 / 27], [1 / 27, -1 / 27]], epsilon=0.01).holds
    assert not check_condition_a([[1.0, 0.0], [0.0, -1.0]]).holds
    assert check_condition_a([[-2.0, 1.0], [0.5, -1.0]], epsilon=0.4, strict=True).holds
    with pytest.raises(NetstabError):
        check_condition_a([[-1.0]], epsilon=-1.0)


@given(st.integers(0, 2**32 - 1))
def test_condition_a_implies_left_half_plane(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(4, 4))
    if check_condition_a(a).holds:
        assert max(z.real for z in gen_eigenvalues(a)) <= 1e-12


def test_basis_structure():
    net = LayeredNetwork.from_edges(4, [[(1, 2, 1.0), (2, 3, 2.0), (3, 4, 0.5)], [(1, 3, 1.0), (2, 4, 1.0)]])
    system = CoupledSystem(tuple(linear_model(np.eye(2)) for _ in range(4)), net)
    for c in (1.0, 1e-3):
        basis = build_basis(system.laplacians, c)
        for p, lam, lap in zip(basis.blocks, basis.eigenvalues, system.laplacians.matrices):
            assert np.array_equal(p[:, 0], np.ones(4))
            assert np.allclose(np.linalg.solve(p, lap @ p), np.diag(lam), atol=1e-10)
            assert lam[0] == 0.0
            assert np.all(np.abs(p[:, 1:]) <= c * (1 + 1e-12))
    assert consensus_rows(4, 2) == [0, 4]
    with pytest.raises(NetstabError):
        build_basis(system.laplacians, 0.0)
    with pytest.raises(NetstabError):
        build_basis(system.laplacians, 2.0)


def test_disconnected_layer_keeps_ones_first():
    # layer 2 has two components: two zero eigenvalues, null block must still start with ones
    net = LayeredNetwork.from_edges(4, [[(1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0)], [(1, 2, 1.0), (3, 4, 1.0)]])
    system = CoupledSystem(tuple(linear_model(-np.eye(2)) for _ in range(4)), net)
    basis = build_basis(system.laplacians, 1e-4)
    p = basis.blocks[1]
    assert np.array_equal(p[:, 0], np.ones(4))
    assert np.allclose(np.linalg.solve(p, system.laplacians.matrices[1] @ p), np.diag(basis.eigenvalues[1]), atol=1e-10)


@given(st.integers(0, 2**32 - 1), st.sampled_from(C_SWEEP))
def test_tau_for_identical_patches_is_row_bound(seed, c):
    # with identical patches and layers the transform block-diagonalizes Df,
    # so tau reduces to the Gershgorin right edge of J itself
    rng = np.random.default_rng(seed)
    jac = rng.normal(size=(2, 2))
    layer = [(1, 2, 1.0), (2, 3, 0.5), (1, 3, 0.25)]
    system, eq = _identical(jac, 3, [layer, layer])
    expected = max(jac[p, p] + abs(jac[p, 1 - p]) for p in range(2))
    assert compute_tau(system, eq, build_basis(system.laplacians, c)) == pytest.approx(expected, abs=1e-9)


def test_tau_grows_like_one_over_c_for_heterogeneous_patches(bundled):
    _, system, eq = bundled["example1_set1"]
    sweep = dict(tau_sweep(system, eq))
    for c in C_SWEEP:
        assert sweep[c] * c == pytest.approx(sweep[1e-6] * 1e-6, rel=0.02)
    assert sweep[1e-6] > 1e5
    report = theorem_verdict(system, eq)
    assert report.condition_a.holds
    assert not report.condition_b.holds
    assert report.verdict == "inconclusive"


def test_single_patch_tau():
    system, eq = _identical([[-1.0, 0.5], [0.0, -2.0]], 1, [[], []])
    assert compute_tau(system, eq, build_basis(system.laplacians, 1e-6)) == -math.inf
    assert theorem_verdict(system, eq).sufficient_stable


@given(st.integers(0, 2**32 - 1))
def test_transformed_jacobian_is_similar(seed):
    system, eq = random_linear_network(np.random.default_rng(seed))
    jac = coupled_jacobian(system, eq.stacked)
    mt = transformed_jacobian(system, eq, build_basis(system.laplacians, 1e-2))
    assert match_distance(gen_eigenvalues(mt), np.linalg.eigvals(jac)) <= 1e-6 * (1 + np.abs(jac).max())


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1))
def test_sufficient_condition_is_one_sided(seed):
    system, eq = random_linear_network(np.random.default_rng(seed))
    report = stability_report(system, eq)
    if report.condition.sufficient_stable:
        assert report.spectral_verdict == STABLE


@given(st.integers(0, 2**32 - 1))
def test_gershgorin_contains_coupled_spectrum(seed):
    system, eq = random_linear_network(np.random.default_rng(seed))
    jac = coupled_jacobian(system, eq.stacked)
    discs = gershgorin_discs(jac)
    assert all(in_disc_union(z, discs) <= 1e-9 for z in spectral_verdict(system, eq).spectrum)


def test_certified_identical_network():
    # diagonally dominant J, identical patches: tau <= 0 <= lambda2
    system, eq = _identical([[-2.0, 1.0], [0.5, -1.0]], 4, [[(1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0)]] * 2)
    rep = stability_report(system, eq)
    assert rep.condition.sufficient_stable
    assert rep.spectral_verdict == STABLE
    assert "certified" in rep.notes[0]


def test_example_verdicts(bundled):
    expected = {"example1_set1": STABLE, "example1_set2": UNSTABLE, "example2_set1": STABLE, "example2_set2": UNSTABLE}
    for name, verdict in expected.items():
        _, system, eq = bundled[name]
        rep = spectral_verdict(system, eq)
        assert rep.spectral_verdict == verdict, name
        ref = np.linalg.eigvals(coupled_jacobian(system, eq.stacked))
        assert match_distance(rep.spectrum, ref) <= 1e-10
        assert rep.abscissa == max(z.real for z in rep.spectrum)


def test_example1_fiedler_values(bundled):
    assert bundled["example1_set1"][1].laplacians.fiedler_min == pytest.approx(0.1461, abs=5e-5)
    assert bundled["example1_set2"][1].laplacians.fiedler_min == pytest.approx(0.1, abs=1e-9)


def test_threshold_closed_form():
    # x' = a x on two patches with one edge: det(J - sL) = a1 a2 - s w (a1 + a2)
    a1, a2, w = 1.0, -3.0, 1.0
    system = CoupledSystem((linear_model([[a1]], [1.0]), linear_model([[a2]], [1.0])),
                           LayeredNetwork.from_edges(2, [[(1, 2, w)]]))
    eq = make_homogeneous_equilibrium(system, [1.0])
    res = coupling_threshold(system, eq, 0.5, 4.0, tol=1e-10)
    assert res.s_star == pytest.approx(a1 * a2 / (w * (a1 + a2)), abs=1e-9)
    assert abs(res.abscissa) <= 1e-8
    assert res.lambda2 == pytest.approx(2 * w * res.s_star, rel=1e-9)


def test_threshold_on_example_network(bundled):
    _, system, eq = bundled["example1_set2"]
    res = coupling_threshold(system, eq, 1.0, 20.0)
    assert 1.0 < res.s_star < 20.0
    assert abs(res.abscissa) <= 1e-5
    scaled = system.with_network(scale_weights(system.network, res.s_star))
    assert abs(max(np.linalg.eigvals(coupled_jacobian(scaled, eq.stacked)).real)) <= 1e-5
    lo, hi = res.bracket
    assert spectral_verdict(system.with_network(scale_weights(system.network, lo)), eq).abscissa > 0
    assert spectral_verdict(system.with_network(scale_weights(system.network, hi)), eq).abscissa < 0


def test_threshold_rejects_bad_bracket(bundled):
    _, system, eq = bundled["example1_set1"]
    with pytest.raises(NetstabError, match="same sign"):
        coupling_threshold(system, eq, 1.0, 20.0)
    with pytest.raises(NetstabError):
        coupling_threshold(system, eq, 3.0, 2.0)


@given(st.integers(0, 2**32 - 1))
def test_weyl_random_additions(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 7))
    edges = [(u, v, float(rng.uniform(0, 2))) for u in range(1, m + 1) for v in range(u + 1, m + 1) if rng.random() < 0.5]
    lap = build_laplacian(LayeredNetwork.from_edges(m, [edges]), 1)
    u, v = rng.choice(np.arange(1, m + 1), size=2, replace=False)
    assert weyl_check(lap, [LayerEdge(int(u), int(v), float(rng.uniform(0, 3)))])


def test_weyl_rejects_negative_edge():
    lap = build_laplacian(LayeredNetwork.from_edges(2, [[(1, 2, 1.0)]]), 1)
    with pytest.raises(NetstabError):
        weyl_check(lap, [LayerEdge(1, 2, -0.5)])


# ---- worked values and invariants of the basis / threshold ------------------

def test_condition_a_worked_values():
    avg = np.array([[-13 / 9, -8 / 9], [1 / 9, -1 / 9]]) / 3
    fails = check_condition_a(avg, epsilon=0.05)
    assert not fails.holds
    assert fails.row_margins[1] == pytest.approx(-0.05, abs=1e-15)
    assert fails.row_margins[0] > 0
    for eps in (0.0, 0.5, 1.0):
        assert check_condition_a(-np.eye(3), epsilon=eps).holds


def test_two_patch_basis_closed_form():
    w, c = 0.7, 1e-3
    system, _ = _identical([[-1.0]], 2, [[(1, 2, w)]])
    basis = build_basis(system.laplacians, c)
    p = basis.blocks[0]
    # unit eigenvector times c, so the entries are c/sqrt(2) rather than c
    assert np.array_equal(p[:, 0], [1.0, 1.0])
    assert np.linalg.norm(p[:, 1]) == pytest.approx(c, rel=1e-12)
    assert p[0, 1] == pytest.approx(-p[1, 1], abs=1e-15)
    assert basis.eigenvalues[0] == pytest.approx([0.0, 2 * w], abs=1e-14)


def test_example1_layer_eigenvalues(bundled):
    _, system, _ = bundled["example1_set1"]
    basis = build_basis(system.laplacians, 1e-6)
    for lam, p in zip(basis.eigenvalues, basis.blocks):
        assert lam == pytest.approx([0.0, 0.1461, 2.0539], abs=1e-4)
        assert np.allclose(np.linalg.inv(p)[0], np.full(3, 1 / 3), atol=1e-10)
        assert np.all(np.diff(lam) >= 0)


def test_tau_of_zero_jacobian_is_zero():
    system, eq = _identical(np.zeros((2, 2)), 3, [[(1, 2, 1.0), (2, 3, 1.0)]] * 2)
    assert compute_tau(system, eq, build_basis(system.laplacians, 1e-6)) == 0.0


def test_decoupled_network_fails_condition_b():
    system, eq = _identical([[-1.0, 0.9], [0.2, 0.5]], 3, [[], []])
    report = theorem_verdict(system, eq)
    assert report.condition_b.lambda2 == 0.0
    assert report.condition_b.tau > 0
    assert not report.condition_b.holds and not report.sufficient_stable


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1))
def test_certified_systems_have_negative_disc_edges(seed):
    system, eq = random_linear_network(np.random.default_rng(seed))
    basis = build_basis(system.laplacians, 1e-6)
    mt = transformed_jacobian(system, eq, basis)
    discs = gershgorin_discs(mt)
    for z in gen_eigenvalues(mt):
        assert in_disc_union(z, discs) <= 1e-6 * (1 + np.abs(mt).max())
    report = theorem_verdict(system, eq, c=1e-6)
    if report.sufficient_stable:
        skip = set(consensus_rows(system.m, system.n))
        edges = [d.right_edge for d in discs if d.row_index not in skip]
        assert max(edges, default=-1.0) <= 1e-6


@given(st.integers(0, 2**32 - 1))
def test_verdict_invariant_under_similarity(seed):
    rng = np.random.default_rng(seed)
    system, eq = random_linear_network(rng)
    jac = coupled_jacobian(system, eq.stacked)
    p = rng.normal(size=jac.shape) + 4 * np.eye(len(jac))
    conj = np.linalg.solve(p, jac @ p)
    assert match_distance(gen_eigenvalues(conj), gen_eigenvalues(jac)) <= 1e-7 * (1 + np.abs(jac).max())
    assert classify(max(z.real for z in gen_eigenvalues(conj))) == spectral_verdict(system, eq).spectral_verdict


@pytest.mark.parametrize("s", [0.0, 0.4, 3.0])
def test_identical_patches_decouple_by_laplacian_mode(s):
    # both layers share one graph, so the spectrum is eig(J) - s*lambda_k over all k
    jac = np.array([[0.2, -1.0], [0.8, -0.5]])
    layer = [(1, 2, s * 1.0), (2, 3, s * 0.5), (3, 4, s * 2.0), (1, 4, s * 0.25)]
    system, eq = _identical(jac, 4, [layer, layer])
    lams = np.linalg.eigvalsh(system.laplacians.matrices[0])
    expected = [z - lam for lam in lams for z in np.linalg.eigvals(jac)]
    assert match_distance(spectral_verdict(system, eq).spectrum, expected) <= 1e-10


def test_threshold_scale_equivariance(bundled):
    _, system, eq = bundled["example1_set2"]
    base = coupling_threshold(system, eq, 1.0, 20.0, tol=1e-9).s_star
    for k in (0.5, 3.0):
        scaled = system.with_network(scale_weights(system.network, k))
        assert coupling_threshold(scaled, eq, 1.0 / k, 20.0 / k, tol=1e-9).s_star == pytest.approx(base / k, abs=1e-5)


def test_weyl_on_example_layer(bundled):
    _, system, _ = bundled["example1_set2"]
    lap = system.laplacians.matrices[0]
    assert weyl_check(lap, [])
    assert weyl_check(lap, [LayerEdge(1, 2, 1.0)])
    grown = lap + np.array([[1.0, -1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
    assert np.linalg.eigvalsh(grown)[1] > np.linalg.eigvalsh(lap)[1] + 1e-6
