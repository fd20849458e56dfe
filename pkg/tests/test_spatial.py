import warnings
from fractions import Fraction

import numpy as np
import pytest

from oracles import dissimilarity_exact, eig_2x2
from racelike.core import FeatureSchema, GroupAssignment, TractMap, build_population
from racelike.detect import Quantile
from racelike.errors import DegenerateSegregation, EmptyGroup, UnknownGroup
from racelike.fairness import alignment_score
from racelike.linalg import column_center, covariance
from racelike.spatial import (
    EmptyTractWarning,
    aggregate_tracts,
    detect_spatial_groups,
    dissimilarity,
    dissimilarity_for_assignment,
)

SCHEMA2 = FeatureSchema.of(("phenotype_a", "phenotype"), ("class_b", "class"))


def _pop(rows, schema=SCHEMA2):
    return build_population(schema, rows)


def test_aggregate_hand_examples():
    pop = _pop([("a", (1, 0)), ("b", (1, 1)), ("c", (0, 1))])
    tm = TractMap({"a": "t1", "b": "t1", "c": "t2"}, ("t1", "t2", "t3"))
    with pytest.warns(EmptyTractWarning, match="t3"):
        profiles = aggregate_tracts(pop, tm)
    assert [p.tract for p in profiles] == ["t1", "t2"]
    assert profiles[0].profile.tolist() == [1.0, 0.5]
    assert profiles[0].count == 2
    assert profiles[1].profile.tolist() == [0.0, 1.0]


def perfect_two_tract():
    """Feature 0 equals the latent label; feature 1 has the same prevalence in both tracts."""
    rows, tracts = [], {}
    for t, g in (("east", 0), ("west", 1)):
        for i in range(6):
            pid = f"{t}{i}"
            rows.append((pid, (g, i % 2), g))
            tracts[pid] = t
    return _pop(rows), TractMap.from_pairs(tracts.items())


def test_perfect_segregation_recovers_latent():
    pop, tm = perfect_two_tract()
    rows = np.array([p.profile for p in aggregate_tracts(pop, tm)])
    lam, vec = eig_2x2(covariance(column_center(rows)[0]).tolist())[0]
    assert abs(vec[0]) == pytest.approx(1.0)
    A = detect_spatial_groups(pop, tm, 1)
    assert alignment_score(A, pop.latent) == 1.0
    assert A.provenance.components[0].eigenvalue == pytest.approx(lam)
    assert np.allclose(A.provenance.components[0].vector, [1.0, 0.0])
    latent_d = dissimilarity_for_assignment(pop, tm, pop.latent_assignment(), 0, 1).D
    found_d = dissimilarity_for_assignment(pop, tm, A, 0, 1).D
    assert latent_d == found_d == 1.0


def test_identical_tracts_are_degenerate():
    rows = [(f"p{i}", (i % 2, 1)) for i in range(8)]
    tm = TractMap.from_pairs((f"p{i}", "t1" if i < 4 else "t2") for i in range(8))
    with pytest.raises(DegenerateSegregation):
        detect_spatial_groups(_pop(rows), tm, 1)


def test_single_nonempty_tract_is_degenerate():
    rows = [(f"p{i}", (i % 2, 1)) for i in range(4)]
    # the map also covers someone outside the population, who alone lives in t2
    tm = TractMap({**{f"p{i}": "t1" for i in range(4)}, "ghost": "t2"}, ("t1", "t2"))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyTractWarning)
        with pytest.raises(DegenerateSegregation):
            detect_spatial_groups(_pop(rows), tm, 1)


def two_axis_fixture():
    """Four homogeneous-in-a tracts; axis a varies more than axis b, no covariance."""
    rows, tracts, expected = [], {}, {}
    for t, (a, b_bits) in enumerate([(1, (1, 1, 1, 0)), (1, (1, 0, 0, 0)),
                                     (0, (1, 1, 1, 0)), (0, (1, 0, 0, 0))]):
        for i, b in enumerate(b_bits):
            pid = f"t{t}p{i}"
            rows.append((pid, (a, b)))
            tracts[pid] = f"t{t}"
            expected[pid] = a + 2 * b
    return _pop(rows), TractMap.from_pairs(tracts.items()), expected


def test_two_components_give_sign_pattern_groups():
    pop, tm, expected = two_axis_fixture()
    rows = np.array([p.profile for p in aggregate_tracts(pop, tm)])
    (l1, v1), (l2, v2) = eig_2x2(covariance(column_center(rows)[0]).tolist())
    assert (l1, l2) == pytest.approx((0.25, 0.0625))
    A = detect_spatial_groups(pop, tm, 2)
    pcs = A.provenance.components
    assert np.allclose(np.abs(pcs[0].vector), np.abs(v1))
    assert np.allclose(np.abs(pcs[1].vector), np.abs(v2))
    assert A.group_of == expected
    assert A.groups == [0, 1, 2, 3]


def test_quantile_policy_splits_scores():
    pop, tm, expected = two_axis_fixture()
    A = detect_spatial_groups(pop, tm, 1, policy=Quantile(0.25))
    assert A.provenance.policy == "quantile:0.25"
    # a-axis scores are +-0.5, half each; the lower quartile is -0.5 and ties go to bit 0
    assert A.provenance.thresholds == pytest.approx((-0.5,))
    assert A.group_of == {pid: g % 2 for pid, g in expected.items()}


@pytest.mark.parametrize(
    "counts, expected",
    [
        ([(50, 10), (50, 90)], 0.4),
        ([(10, 20), (30, 60)], 0.0),
        ([(100, 0), (0, 100)], 1.0),
    ],
)
def test_dissimilarity_examples(counts, expected):
    rep = dissimilarity(counts)
    assert abs(rep.D - expected) <= 1e-12
    assert rep.D == pytest.approx(float(dissimilarity_exact(counts)), abs=1e-15)
    assert rep.D == pytest.approx(0.5 * sum(abs(w - b) for w, b in rep.terms), abs=1e-12)


def test_dissimilarity_empty_group():
    with pytest.raises(EmptyGroup):
        dissimilarity([(5, 0), (3, 0)])


def test_dissimilarity_for_assignment_errors_and_uniform_mixing():
    pop = _pop([(f"p{i}", (i % 2, 0)) for i in range(8)])
    tm = TractMap.from_pairs((f"p{i}", f"t{i // 4}") for i in range(8))
    A = GroupAssignment(pop.ids, [i % 2 for i in range(8)])
    assert dissimilarity_for_assignment(pop, tm, A, 0, 1).D == 0.0
    with pytest.raises(UnknownGroup):
        dissimilarity_for_assignment(pop, tm, A, 0, 5)


def test_weighted_and_standardized_variants_run():
    pop, tm = perfect_two_tract()
    for kw in ({"weighted": True}, {"standardize": True}):
        A = detect_spatial_groups(pop, tm, 1, **kw)
        assert alignment_score(A, pop.latent) == 1.0
