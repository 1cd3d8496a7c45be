import dataclasses

import numpy as np
import pytest

from conftest import make_itinerary_sample, synthetic_samples
from utils.utils import GroupError, JudgeError, ConfigError
from utils.properties import PropertyId, N_PROPERTIES, ERROR_DETECTION
from utils.ratings import PropertyVector
from utils.features import compare, sample_feature, build_design_matrix, DesignMatrix


def _vector(values):
    return PropertyVector(tuple(values), (True,) * N_PROPERTIES)


def _with(prop, a, b, base=1):
    va, vb = [base] * N_PROPERTIES, [base] * N_PROPERTIES
    va[prop], vb[prop] = a, b
    return compare(_vector(va), _vector(vb))[prop]


def test_itinerary_feature():
    phi = sample_feature(make_itinerary_sample())
    expected = np.zeros(N_PROPERTIES, dtype=np.int8)
    for prop in (PropertyId.GRAMMARLY_CORRECT, PropertyId.NON_REPETITIVE, PropertyId.CLEAR,
                 PropertyId.SATISFY_CONSTRAINTS, PropertyId.SUPPORT_STANCES,
                 PropertyId.NO_MINOR_ERRORS, PropertyId.NO_MODERATE_ERRORS, PropertyId.NO_SEVERE_ERRORS):
        expected[prop] = 1
    expected[PropertyId.CONTAIN_RICH_INFO] = -1
    expected[PropertyId.LENGTHY] = -1
    assert phi.tolist() == expected.tolist()


def test_identical_vectors_compare_to_zero():
    sample = make_itinerary_sample()
    same = dataclasses.replace(sample, response_b=sample.response_a)
    assert not np.any(sample_feature(same))


def test_lengthy_rule():
    assert _with(PropertyId.LENGTHY, 102, 346) == -1
    assert _with(PropertyId.LENGTHY, 346, 102) == 1
    # shorter/longer exactly 0.7 is not "fewer than"
    assert _with(PropertyId.LENGTHY, 7, 10) == 0
    assert _with(PropertyId.LENGTHY, 69, 100) == -1
    assert _with(PropertyId.LENGTHY, 0, 0) == 0
    assert _with(PropertyId.LENGTHY, 0, 5) == -1


def test_relevant_rule():
    assert _with(PropertyId.RELEVANT, 3, 1) == 0
    assert _with(PropertyId.RELEVANT, 0, 2) == -1
    assert _with(PropertyId.RELEVANT, 1, 0) == 1
    assert _with(PropertyId.RELEVANT, 0, 0) == 0


def test_error_slots_prefer_fewer_errors():
    for prop in ERROR_DETECTION:
        assert _with(prop, 0, 1, base=0) == 1
        assert _with(prop, 4, 1, base=0) == -1
        assert _with(prop, 2, 2, base=0) == 0


def test_inapplicable_slot_is_zero():
    va = PropertyVector((2,) * N_PROPERTIES, (True,) * N_PROPERTIES)
    applicable = [True] * N_PROPERTIES
    applicable[PropertyId.SHOW_EMPATHETIC] = False
    vb = PropertyVector((1,) * N_PROPERTIES, tuple(applicable))
    phi = compare(va, vb)
    assert phi[PropertyId.SHOW_EMPATHETIC] == 0
    assert phi[PropertyId.HARMLESS] == 1


def test_compare_is_antisymmetric():
    rng = np.random.default_rng(0)
    for _ in range(10000):
        a = rng.integers(0, 4, size=N_PROPERTIES).tolist()
        b = rng.integers(0, 4, size=N_PROPERTIES).tolist()
        a[PropertyId.LENGTHY], b[PropertyId.LENGTHY] = rng.integers(0, 400, size=2).tolist()
        phi = compare(_vector(a), _vector(b))
        assert set(np.unique(phi)) <= {-1, 0, 1}
        assert (compare(_vector(b), _vector(a)) == -phi).all()


def test_swapped_sample_negates_feature():
    sample = make_itinerary_sample()
    assert (sample_feature(sample.swapped()) == -sample_feature(sample)).all()


def test_build_design_matrix():
    samples, design, _ = synthetic_samples(30)
    built = build_design_matrix(samples, 'synthetic', 'Others')
    assert built.n_rows == 30
    assert built.sample_ids == design.sample_ids
    np.testing.assert_array_equal(built.features, design.features)
    np.testing.assert_array_equal(built.labels, design.labels)


def test_build_design_matrix_errors():
    samples, _, _ = synthetic_samples(3)
    assert len(build_design_matrix(samples, 'synthetic', 'Others')) == 3
    with pytest.raises(GroupError):
        build_design_matrix(samples, 'synthetic', 'Code')
    with pytest.raises(JudgeError):
        build_design_matrix(samples, 'human', 'Others')
    with pytest.raises(ConfigError):
        build_design_matrix(samples, 'synthetic', 'Others', error_policy='ignore')


def test_error_policy_drop():
    sample = make_itinerary_sample()
    flagged = dataclasses.replace(
        sample, id='flagged',
        response_b=dataclasses.replace(sample.response_b, error_check_applicable=False, errors=()))
    kept = build_design_matrix([sample, flagged], 'human', 'Daily Tasks')
    assert kept.n_rows == 2
    assert not np.any(kept.features[1, list(ERROR_DETECTION)])
    dropped = build_design_matrix([sample, flagged], 'human', 'Daily Tasks', error_policy='drop')
    assert dropped.sample_ids == ['itinerary']
    with pytest.raises(GroupError):
        build_design_matrix([flagged], 'human', 'Daily Tasks', error_policy='drop')


def test_design_matrix_helpers():
    features = np.zeros((4, N_PROPERTIES))
    features[:, 0] = [1, -1, 0, 1]
    design = DesignMatrix(features, [1, 0, 1, 1], ['d', 'b', 'c', 'a'])
    assert design.uninformative[0] == False  # noqa: E712
    assert design.uninformative[1:].all()
    assert design.density() == pytest.approx(3. / (4 * N_PROPERTIES))
    assert design.sorted_by_id().sample_ids == ['a', 'b', 'c', 'd']
    swapped = design.swapped()
    np.testing.assert_array_equal(swapped.features, -design.features)
    np.testing.assert_array_equal(swapped.labels, [0, 1, 0, 0])


def test_iter_folds_partition():
    _, design, _ = synthetic_samples(23)
    folds = list(design.iter_folds(5, np.random.default_rng(1)))
    assert len(folds) == 5
    held = np.concatenate([h for _, _, h in folds])
    assert sorted(held.tolist()) == list(range(23))
    for _, train, h in folds:
        assert not set(train.tolist()) & set(h.tolist())
        assert len(train) + len(h) == 23
    (k, train, h), = design.iter_folds(1, np.random.default_rng(1))
    assert k == 0 and len(train) == 23 and len(h) == 0
