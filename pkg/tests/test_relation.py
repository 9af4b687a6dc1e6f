import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import relwalk as rw
from relwalk import cli


def test_equal_masses_unit_cocycle():
    rel = rw.build_relation([0.5, 0.5], [0, 0])
    assert rw.cocycle(rel, 0, 1) == 1.0


def test_cocycle_matches_counting_measure_identity():
    # single-pair oracle: the horizontal count of (x, y) is mass(x), the
    # vertical count is mass(y), so the derivative is their ratio
    rel = rw.build_relation([0.25, 0.75], [0, 0])
    horizontal, vertical = 0.25, 0.75
    assert rw.cocycle(rel, 0, 1) == horizontal / vertical
    assert abs(rw.cocycle(rel, 0, 1) - 1.0 / 3.0) < 1e-15
    assert rw.cocycle(rel, 1, 0) == 3.0


def test_mass_sum_mismatch():
    with pytest.raises(rw.MassSumMismatch):
        rw.build_relation([0.3, 0.3], [0, 0])


def test_nonpositive_mass():
    with pytest.raises(rw.NonPositiveMass):
        rw.build_relation([1.0, 0.0], [0, 0])
    with pytest.raises(rw.NonPositiveMass):
        rw.build_relation([1.5, -0.5], [0, 0])


def test_empty_masses():
    with pytest.raises(rw.MassSumMismatch):
        rw.build_relation([], [])


def test_partition_form_and_empty_class():
    rel = rw.build_relation([0.25, 0.25, 0.5], [[0, 2], [1]])
    assert rel.n_classes == 2
    assert rel.same_class(0, 2) and not rel.same_class(0, 1)
    with pytest.raises(rw.EmptyClass):
        rw.build_relation([0.5, 0.5], [[0, 1], []])


def test_labels_normalized_dense():
    rel = rw.build_relation([0.25, 0.25, 0.5], ["b", "a", "b"])
    assert rel.class_of.tolist() == [0, 1, 0]
    assert rel.n_classes == 2


def test_cocycle_requires_same_class():
    rel = rw.build_relation([0.5, 0.5], [0, 1])
    with pytest.raises(rw.NotEquivalent):
        rw.cocycle(rel, 0, 1)


def test_cocycle_identity_pair():
    rel = rw.build_relation([0.25, 0.75], [0, 0])
    assert rw.cocycle(rel, 0, 0) == 1.0
    assert rw.cocycle(rel, 1, 1) == 1.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 10.0), min_size=3, max_size=12))
def test_cocycle_chain_rule(raw):
    masses = np.asarray(raw) / np.sum(raw)
    rel = rw.build_relation(masses, [0] * len(raw))
    rng = np.random.default_rng(0)
    for _ in range(5):
        x, y, z = rng.integers(0, len(raw), 3)
        lhs = rel.cocycle(x, y) * rel.cocycle(y, z)
        rhs = rel.cocycle(x, z)
        assert abs(lhs - rhs) <= 1e-12 * abs(rhs)
        assert abs(rel.cocycle(y, x) - 1.0 / rel.cocycle(x, y)) <= 1e-12 / rel.cocycle(x, y)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 10.0), min_size=2, max_size=10),
       st.integers(1, 4))
def test_serialization_round_trip_bit_exact(raw, n_classes):
    masses = np.asarray(raw) / np.sum(raw)
    labels = [i % n_classes for i in range(len(raw))]
    rel = rw.build_relation(masses, labels)
    back = cli.parse_document(cli.serialize(rel))
    assert np.array_equal(back.mass, rel.mass)
    assert np.array_equal(back.class_of, rel.class_of)


def test_relation_arrays_immutable():
    rel = rw.build_relation([0.5, 0.5], [0, 0])
    with pytest.raises(ValueError):
        rel.mass[0] = 0.7


def test_masses_as_decimal_strings():
    doc = json.dumps({"masses": ["0.25", "0.75"], "classes": [0, 0]})
    rel = cli.parse_document(doc)
    assert rel.mass.tolist() == [0.25, 0.75]


# -- graphings ----------------------------------------------------------------

def test_validate_complete_graphing_connected():
    rel = rw.build_relation([0.25] * 4, [0, 0, 1, 1])
    g = rw.build_graphing([(0, 1), (2, 3)])
    report = rw.validate_graphing(rel, g)
    assert report.per_class_connected == (True, True)
    assert report.cross_class_violations == ()
    assert report.ok


def test_cross_class_edge_reported():
    rel = rw.build_relation([0.25] * 4, [0, 0, 1, 1])
    g = rw.build_graphing([(0, 1), (1, 2), (2, 3)])
    report = rw.validate_graphing(rel, g)
    assert report.cross_class_violations == ((1, 2),)
    assert not report.ok


def test_empty_edges_two_point_class_disconnected():
    rel = rw.build_relation([0.5, 0.5], [0, 0])
    report = rw.validate_graphing(rel, rw.build_graphing([]))
    assert report.per_class_connected == (False,)


def test_degree_bound_and_dedup():
    g = rw.build_graphing([(0, 1), (1, 0), (1, 2)], degree_bound=1)
    assert g.edges == ((0, 1), (1, 2))
    rel = rw.build_relation([1 / 3] * 3, [0] * 3)
    report = rw.validate_graphing(rel, g)
    assert report.max_degree == 2
    assert report.degree_bound_ok is False


def test_self_loop_rejected():
    with pytest.raises(rw.ValidationError):
        rw.build_graphing([(2, 2)])
