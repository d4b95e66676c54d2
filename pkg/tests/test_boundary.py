import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqboundary.bayes import FunctionClassifier
from seqboundary.boundary import (
    db_bound, is_boundary, neighbor_profile, ns_from_agreement, ns_from_counts, profile_many, sampled_ns,
)
from seqboundary.seqspace import DNA, Alphabet, Sequence, hamming_distance, neighbors, random_codes, random_sequence

ACG = Alphabet("ACG")
SPACE3 = ["".join(p) for p in itertools.product("ACG", repeat=3)]


def toy_classifier():
    # three classes over length-3 {A,C,G} strings, deliberately lumpy
    return FunctionClassifier(lambda s: min(2, s.count("G")) if s[0] != "C" else 0, ["x", "y", "z"])


def brute_boundary(c, space, alphabet):
    dec = {s: c.classify(s).index for s in space}
    return {s for s in space if any(dec[str(n)] != dec[s] for n in neighbors(s, alphabet))}


def test_ns_examples():
    assert ns_from_counts([404, 0, 0], 0) == 1.0
    # q = 304/404: 1 - sqrt(1 - sqrt(q)) evaluated by hand
    assert ns_from_counts([304, 100, 0], 0) == pytest.approx(0.635931, abs=1e-6)
    assert ns_from_counts([0, 404, 0], 0) == 0.0
    assert ns_from_agreement([0.0, 1.0]).tolist() == [0.0, 1.0]


@given(st.lists(st.integers(0, 50), min_size=3, max_size=3).filter(lambda v: sum(v) > 0), st.integers(0, 2))
def test_ns_properties(counts, d):
    ns = ns_from_counts(counts, d)
    assert 0.0 <= ns <= 1.0
    assert (ns == 1.0) == (sum(counts) == counts[d])
    # a function of the count vector only: permuting the other classes changes nothing
    other = [i for i in range(3) if i != d]
    swapped = list(counts)
    swapped[other[0]], swapped[other[1]] = counts[other[1]], counts[other[0]]
    assert ns_from_counts(swapped, d) == ns


def test_profile_interior_and_statuses(clf):
    x = random_sequence(101, DNA, rng=0)
    p = neighbor_profile(clf, x)
    assert p.neighbor_counts.sum() == 404 and p.evaluations == 405
    assert (p.ns == 1.0) == (p.boundary_status == 0) == (not p.on_boundary)
    assert len(p.neighbor_decisions) == 404
    assert neighbor_profile(clf, x, no_n=True).neighbor_counts.sum() == 303


def test_profile_triple_point():
    c = toy_classifier()
    p = neighbor_profile(c, "AGA", ACG)          # decision 1; neighbors reach classes 0 and 2
    assert p.decision == 1 and p.boundary_status == 2


def test_profile_matches_brute_force_on_toy_space():
    c = toy_classifier()
    bnd = brute_boundary(c, SPACE3, ACG)
    for s in SPACE3:
        p = neighbor_profile(c, s, ACG)
        assert p.on_boundary == (s in bnd)
        assert is_boundary(c, s, ACG) == (s in bnd)


def test_profile_many_matches_single(clf):
    codes = random_codes(30, 101, DNA, rng=3)
    many = profile_many(clf, codes, chunk=7)
    for row, p in zip(codes, many):
        q = neighbor_profile(clf, Sequence.from_codes(row))
        assert (p.decision, p.boundary_status, p.ns) == (q.decision, q.boundary_status, q.ns)
        assert np.array_equal(p.neighbor_counts, q.neighbor_counts)


def test_profile_many_worker_independent(clf):
    codes = random_codes(40, 101, DNA, rng=5)
    a = profile_many(clf, codes, workers=1, chunk=10)
    b = profile_many(clf, codes, workers=2, chunk=10)
    assert [(p.decision, p.ns) for p in a] == [(p.decision, p.ns) for p in b]


def test_sampled_ns(clf):
    x = random_sequence(101, DNA, rng=1)
    full = neighbor_profile(clf, x)
    s = sampled_ns(clf, x, 404, rng=3)
    assert abs(s.ns_estimate - full.ns) <= 1e-15
    assert len(set(s.sampled_indices.tolist())) == 404
    a, b = sampled_ns(clf, x, 20, rng=9), sampled_ns(clf, x, 20, rng=9)
    assert a.ns_estimate == b.ns_estimate and np.array_equal(a.sampled_indices, b.sampled_indices)
    for k in (0, 405):
        with pytest.raises(ValueError):
            sampled_ns(clf, x, k, rng=0)


def test_sampled_ns_k1_agreeing_neighbor():
    c = FunctionClassifier(lambda s: 0, ["only", "never"])
    assert sampled_ns(c, "ACGT", 1, rng=0).ns_estimate == 1.0


def test_db_bound_on_boundary_is_zero():
    c = toy_classifier()
    s = next(iter(brute_boundary(c, SPACE3, ACG)))
    b = db_bound(c, s, alphabet=ACG)
    assert b.lower == 0 and b.exact


def test_db_bound_witness_upper():
    c = FunctionClassifier(lambda s: int(s.count("T") >= 3), ["few", "many"])
    b = db_bound(c, "AAAAAA", witnesses=["TTTAAA"], bfs_budget=5, alphabet=DNA)
    assert b.upper is not None and b.upper <= 3
    assert b.lower <= b.upper and not b.exact
    b = db_bound(c, "AAAAAA", witnesses=[("TTTAAA", 1)], alphabet=DNA)
    assert b.exact and b.lower == 2 and b.upper == 2


@pytest.mark.parametrize("origin", SPACE3)
def test_db_bound_exhaustive_toy_space(origin):
    c = toy_classifier()
    bnd = brute_boundary(c, SPACE3, ACG)
    want = min(hamming_distance(origin, s) for s in bnd)
    b = db_bound(c, origin, bfs_budget=10_000, alphabet=ACG)
    assert b.exact and b.lower == want
    assert (b.lower == 0) == (origin in bnd)


def test_db_bound_constant_classifier_has_no_boundary():
    c = FunctionClassifier(lambda s: 0, ["a", "b"])
    b = db_bound(c, "ACG", alphabet=ACG)
    assert not b.exact and b.upper is None and b.exhausted_radius == 3 and b.lower == 4
