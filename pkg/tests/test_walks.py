import numpy as np
import pytest

import relwalk as rw
from util import (
    cycle_entries,
    cycle_graphing,
    cycle_relation,
    cycle_walk,
    identity_walk,
    metropolis_entries,
    oracle_kappa,
    oracle_two_step,
    perturbed_walk,
    random_connected_edges,
    random_masses,
    random_reversible_walk,
    schreier_walk,
)


# -- regular walk ---------------------------------------------------------------

def test_regular_walk_uniform_regular_graph():
    rel = cycle_relation(6)
    walk = rw.regular_walk(rel, cycle_graphing(6))
    expected = np.zeros((6, 6))
    for i in range(6):
        expected[i, (i + 1) % 6] = expected[i, (i - 1) % 6] = 0.5
    assert np.allclose(walk.kernel, expected, atol=1e-15)


def test_regular_walk_two_point_class_any_masses():
    rel = rw.build_relation([0.2, 0.8], [0, 0])
    walk = rw.regular_walk(rel, rw.build_graphing([(0, 1)]))
    assert walk.kernel[0, 1] == 1.0
    assert walk.kernel[1, 0] == 1.0


def test_regular_walk_three_cycle_formula_and_balance():
    masses = np.array([1 / 6, 1 / 3, 1 / 2])
    rel = rw.build_relation(masses, [0] * 3)
    walk = rw.regular_walk(rel, rw.build_graphing([(0, 1), (1, 2), (0, 2)]))
    # direct evaluation of the defining formula
    root = np.sqrt(masses)
    for x in range(3):
        others = [y for y in range(3) if y != x]
        denom = sum(root[y] for y in others)
        for y in others:
            assert abs(walk.kernel[x, y] - root[y] / denom) < 1e-15
    # oracle: the unnormalized reweighted measure pairs to sqrt(m(x) m(y))
    tilde = walk.base_mass * walk.base_scale
    for x in range(3):
        for y in range(3):
            if x != y:
                assert abs(tilde[x] * walk.kernel[x, y]
                           - np.sqrt(masses[x] * masses[y])) <= 1e-12
    assert rw.detailed_balance_violation(walk) <= 1e-12


def test_regular_walk_isolated_point():
    rel = rw.build_relation([0.5, 0.25, 0.25], [0, 0, 0])
    with pytest.raises(rw.IsolatedPoint):
        rw.regular_walk(rel, rw.build_graphing([(0, 1)]))


def test_regular_walk_rejects_cross_class_edge():
    rel = rw.build_relation([0.5, 0.5], [0, 1])
    with pytest.raises(rw.NotEquivalent):
        rw.regular_walk(rel, rw.build_graphing([(0, 1)]))


# -- custom walk -----------------------------------------------------------------

def test_identity_walk_valid():
    rel = cycle_relation(4)
    walk = identity_walk(rel)
    assert np.array_equal(walk.kernel, np.eye(4))
    assert walk.eta == 1.0


def test_row_sum_error():
    rel = cycle_relation(2)
    with pytest.raises(rw.RowSumError):
        rw.custom_walk(rel, [(0, 1, 0.9), (1, 0, 1.0)])


def test_asymmetric_support_error():
    rel = cycle_relation(3)
    entries = [(0, 1, 1.0), (1, 0, 0.5), (1, 2, 0.5), (2, 1, 1.0)]
    with pytest.raises(rw.AsymmetricSupport):
        rw.custom_walk(rel, entries)


def test_detailed_balance_rejection():
    rel = rw.build_relation([0.2, 0.8], [0, 0])
    # symmetric kernel is not reversible for these masses
    with pytest.raises(rw.DetailedBalanceViolation) as err:
        rw.custom_walk(rel, [(0, 1, 1.0), (1, 0, 1.0)], base="mu")
    assert err.value.residual > 0


def test_custom_walk_derived_base():
    # birth-death chain on 3 points; derived measure must satisfy balance
    rel = rw.build_relation([1 / 3] * 3, [0] * 3)
    entries = [(0, 0, 0.5), (0, 1, 0.5), (1, 0, 0.25), (1, 1, 0.5), (1, 2, 0.25),
               (2, 1, 0.5), (2, 2, 0.5)]
    walk = rw.custom_walk(rel, entries, base="tilde")
    assert walk.db_residual <= 1e-15
    assert abs(walk.base_mass.sum() - 1.0) <= 1e-12
    # masses 1:2:2 up to scale from the flux equations
    ratio = walk.base_mass / walk.base_mass[0]
    assert np.allclose(ratio, [1.0, 2.0, 2.0], atol=1e-12)


def test_bounded_flag():
    rel = cycle_relation(4)
    walk = rw.custom_walk(rel, cycle_entries(4), declared_eta=0.25)
    assert walk.bounded and walk.eta == 0.5
    strict = rw.with_declared_eta(walk, 0.75)
    assert not strict.bounded


# -- convolution -------------------------------------------------------------------

def test_convolve_identity_neutral():
    rel, walk = cycle_walk(6)
    conv = rw.convolve(walk, identity_walk(rel))
    assert np.allclose(conv.kernel, walk.kernel, atol=1e-15)


def test_convolve_two_point_parity():
    rel = rw.build_relation([0.5, 0.5], [0, 0])
    walk = rw.custom_walk(rel, [(0, 1, 1.0), (1, 0, 1.0)])
    conv = rw.convolve(walk, walk)
    assert np.allclose(conv.kernel, np.eye(2), atol=1e-15)


def test_convolve_c4_two_step_oracle():
    rel, walk = cycle_walk(4)
    conv = rw.convolve(walk, walk)
    oracle = oracle_two_step(walk.kernel)
    assert np.allclose(conv.kernel, oracle, atol=1e-15)
    assert conv.kernel[0, 0] == 0.5
    assert conv.kernel[0, 2] == 0.5


def test_convolve_base_mismatch():
    rel, walk = cycle_walk(4)
    other_rel = rw.build_relation([0.1, 0.2, 0.3, 0.4], [0] * 4)
    other = rw.custom_walk(other_rel, metropolis_entries(
        other_rel, [(0, 1), (1, 2), (2, 3), (0, 3)]))
    with pytest.raises(rw.BaseMeasureMismatch):
        rw.convolve(walk, other)


def test_convolve_associative_on_random_triples():
    rng = np.random.default_rng(7)
    for _ in range(5):
        n = int(rng.integers(4, 10))
        rel = rw.build_relation(random_masses(rng, n), [0] * n)
        triple = []
        for _ in range(3):
            edges = random_connected_edges(rng, range(n), extra=1.0)
            triple.append(rw.custom_walk(rel, metropolis_entries(rel, edges)))
        a, b, c = triple
        left = rw.convolve(rw.convolve(a, b), c)
        right = rw.convolve(a, rw.convolve(b, c))
        assert np.abs(left.kernel - right.kernel).max() <= 1e-12


def test_power_row_sums_stay_stochastic():
    rel, walk = cycle_walk(9)
    for n in (2, 5, 11):
        rows = rw.power(walk, n).kernel.sum(axis=1)
        assert np.abs(rows - 1.0).max() <= n * 1e-12


def test_support_components_match_graphing():
    rng = np.random.default_rng(3)
    rel = rw.build_relation(random_masses(rng, 8), [0, 0, 0, 0, 1, 1, 1, 1])
    edges = (random_connected_edges(rng, range(4), 0.0)
             + random_connected_edges(rng, range(4, 8), 0.0))
    walk = rw.custom_walk(rel, metropolis_entries(rel, edges))
    comp = rw.support_components(walk)
    assert len(set(comp.tolist())) == 2
    for x, y in edges:
        assert comp[x] == comp[y]


# -- detailed balance measurement ---------------------------------------------------

def test_violation_zero_for_construction():
    rel = cycle_relation(5)
    walk = rw.regular_walk(rel, cycle_graphing(5))
    assert rw.detailed_balance_violation(walk) <= 1e-12
    assert rw.detailed_balance_violation(identity_walk(rel)) == 0.0


def test_violation_detects_perturbation():
    _, walk = cycle_walk(4)
    bumped = perturbed_walk(walk, 0, 1, 1e-3)
    # flux asymmetry of the renormalized row: 0.25 * (0.501/1.001 - 0.5)
    assert rw.detailed_balance_violation(bumped) >= 1e-4
    rng = np.random.default_rng(11)
    rel = rw.build_relation(random_masses(rng, 6), [0] * 6)
    edges = random_connected_edges(rng, range(6), 1.0)
    walk = rw.custom_walk(rel, metropolis_entries(rel, edges))
    x, y = edges[0]
    bumped = perturbed_walk(walk, x, y, 1e-3)
    assert rw.detailed_balance_violation(bumped) >= 1e-4 * bumped.base_mass.min()


# -- permutation actions -------------------------------------------------------------

def test_cayley_shift_is_cycle_walk():
    shift = [(i + 1) % 5 for i in range(5)]
    back = [(i - 1) % 5 for i in range(5)]
    rel, walk = rw.cayley_action_walk(5, [shift, back], [0.5, 0.5])
    assert rel.n_classes == 1
    _, expected = cycle_walk(5)
    assert np.allclose(walk.kernel, expected.kernel, atol=1e-15)


def test_cayley_identity_one_orbit_per_point():
    rel, walk = rw.cayley_action_walk(4, [list(range(4))], [1.0])
    assert rel.n_classes == 4
    assert np.array_equal(walk.kernel, np.eye(4))


def test_cayley_prob_sum_error():
    with pytest.raises(rw.ProbSumError):
        rw.cayley_action_walk(3, [[1, 2, 0], [2, 0, 1]], [0.5, 0.4])


def test_cayley_asymmetric_generators():
    with pytest.raises(rw.AsymmetricGeneratorSet):
        rw.cayley_action_walk(3, [[1, 2, 0]], [1.0])


def test_cayley_involution_alone_is_fine():
    swap = [1, 0, 2]
    rel, walk = rw.cayley_action_walk(3, [swap], [1.0])
    assert rel.n_classes == 2
    assert walk.kernel[0, 1] == 1.0 and walk.kernel[2, 2] == 1.0


def test_schreier_walk_has_gap_with_fixed_seed():
    rel, walk = schreier_walk(200, seed=0)
    assert rel.n_classes == 1
    assert walk.eta == 0.25
    kappa = oracle_kappa(walk.kernel, walk.base_mass)
    assert kappa < 1.0 - 1e-3
    report = rw.spectrum(rw.simple_diffusion(walk))
    assert abs(report.kappa - kappa) <= 1e-9
