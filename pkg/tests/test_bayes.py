import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqboundary.bayes import (
    BayesClassifier, Classifier, FunctionClassifier, UndefinedPosteriorError, classify, decide, decide_codes,
    log_likelihood, max_posterior, max_posteriors, posterior, posterior_entropies, posterior_entropy,
    posterior_from_likelihoods,
)
from seqboundary.seqspace import DNA, DNA_N, Sequence, neighbor_codes, random_codes, stack_codes
from seqboundary.triplet import TRIPLETS, TripletModel

from conftest import random_model


def brute_loglik(model, read):
    """Sum of P2 * prod T3 over every ACGT completion of the Ns, in plain Python."""
    p3 = dict(zip(TRIPLETS, model.p3.tolist()))
    p2 = {a + b: sum(p3[a + b + c] for c in "ACGT") for a in "ACGT" for b in "ACGT"}
    slots = [i for i, ch in enumerate(read) if ch == "N"]
    total = []
    for fill in itertools.product("ACGT", repeat=len(slots)):
        s = list(read)
        for i, ch in zip(slots, fill):
            s[i] = ch
        s = "".join(s)
        prob = p2[s[:2]]
        for i in range(2, len(s)):
            if prob == 0:
                break
            pair = p2[s[i - 2:i]]
            prob *= p3[s[i - 2:i + 1]] / pair if pair > 0 else 0.0
        total.append(prob)
    t = math.fsum(total)
    return math.log(t) if t > 0 else -math.inf


def test_loglik_hand_example():
    p = np.zeros(64)
    p[TRIPLETS.index("AAA")] = 0.05
    p[TRIPLETS.index("AAC")] = 0.05
    p[TRIPLETS.index("CCC")] = 0.9
    m = TripletModel("x", p)
    assert m.p2[0] == pytest.approx(0.1) and m.t3.row(0, 0)[0] == pytest.approx(0.5)
    assert log_likelihood(m, "AAA") == pytest.approx(math.log(0.05), abs=1e-12)


@pytest.mark.parametrize("length", [3, 10, 101])
def test_loglik_uniform(length):
    m = TripletModel("u", np.full(64, 1 / 64))
    r = Sequence("ACGT" * 30)[:length]
    want = math.log(1 / 16) + (length - 2) * math.log(1 / 4)
    assert log_likelihood(m, r) == pytest.approx(want, abs=1e-10)


def test_loglik_ana_completion_sum(models):
    for m in models:
        want = math.log(sum(m.p2[4 * 0 + b] * m.t3.row(0, b)[0] for b in range(4)))
        assert abs(log_likelihood(m, "ANA") - want) < 1e-12


def test_loglik_all_n_is_zero_log():
    m = random_model(np.random.default_rng(0))
    assert log_likelihood(m, "NNNNN") == pytest.approx(0.0, abs=1e-12)


def test_loglik_too_short_and_illegal(models):
    with pytest.raises(ValueError):
        log_likelihood(models[0], "AC")
    with pytest.raises(ValueError, match="offset 2"):
        log_likelihood(models[0], "AXA")


@pytest.mark.parametrize("sparsity", [0.0, 0.3])
def test_batch_matches_brute_force(sparsity):
    rng = np.random.default_rng(7)
    ms = [random_model(rng, f"m{i}", sparsity) for i in range(3)]
    c = BayesClassifier(ms)
    reads = []
    for length in (3, 4, 6, 8):
        for n_count in range(0, 5):
            for _ in range(3):
                s = list(rng.choice(list("ACGT"), size=length))
                for i in rng.choice(length, size=min(n_count, length), replace=False):
                    s[i] = "N"
                reads.append("".join(s))
    for length in (3, 4, 6, 8):
        codes = stack_codes([r for r in reads if len(r) == length])
        got = c.log_likelihoods(codes)
        for row, r in zip(got, [r for r in reads if len(r) == length]):
            for k, m in enumerate(ms):
                want = brute_loglik(m, r)
                ref = log_likelihood(m, r)
                if math.isinf(want):
                    assert row[k] == -math.inf and ref == -math.inf
                else:
                    assert row[k] == pytest.approx(want, rel=1e-10)
                    assert ref == pytest.approx(want, rel=1e-10)


def test_batch_forward_path_long_reads(clf, models):
    rng = np.random.default_rng(3)
    codes = random_codes(20, 101, DNA_N, rng=rng)           # many Ns per read
    got = clf.log_likelihoods(codes)
    for row, code in zip(got, codes):
        s = Sequence.from_codes(code)
        assert row == pytest.approx([log_likelihood(m, s) for m in models], rel=1e-10)


@pytest.mark.parametrize("lik,prior,want", [
    ([1.0, 1.0, 1.0], None, [1 / 3, 1 / 3, 1 / 3]),
    ([0.2, 0.1, 0.1], None, [0.5, 0.25, 0.25]),
    ([1.0, 1.0, 1.0], [0.5, 0.25, 0.25], [0.5, 0.25, 0.25]),
])
def test_posterior_examples(lik, prior, want):
    assert posterior_from_likelihoods(lik, prior) == pytest.approx(want, abs=1e-15)


def test_posterior_all_zero():
    with pytest.raises(UndefinedPosteriorError):
        posterior_from_likelihoods([0.0, 0.0])


@pytest.mark.parametrize("p,want", [([0.5, 0.25, 0.25], 0), ([0.4, 0.4, 0.2], 0), ([0.2, 0.4, 0.4], 1)])
def test_decide_tie_rule(p, want):
    assert decide(p) == want


@pytest.mark.parametrize("p,mp,pe", [
    ([1 / 3, 1 / 3, 1 / 3], 1 / 3, math.log(3)),
    ([0.5, 0.25, 0.25], 0.5, 1.5 * math.log(2)),
    ([1.0, 0.0, 0.0], 1.0, 0.0),
])
def test_uncertainty_measures(p, mp, pe):
    assert max_posterior(p) == pytest.approx(mp)
    assert posterior_entropy(p) == pytest.approx(pe)
    arr = np.array([p])
    assert max_posteriors(arr)[0] == pytest.approx(mp)
    assert posterior_entropies(arr)[0] == pytest.approx(pe)


@given(st.lists(st.floats(0.001, 1), min_size=2, max_size=6))
def test_uncertainty_bounds(w):
    p = np.array(w) / sum(w)
    assert 1 / len(p) - 1e-12 <= max_posterior(p) <= 1
    assert -1e-12 <= posterior_entropy(p) <= math.log(len(p)) + 1e-12


def test_classifier_posteriors_sum_to_one(clf):
    codes = random_codes(50, 101, DNA, rng=1)
    post = clf.posteriors(codes)
    assert np.allclose(post.sum(axis=1), 1)
    assert np.array_equal(clf.classify_codes(codes), post.argmax(axis=1))


def test_classify_single(clf):
    r = Sequence("ACGT" * 25 + "A")
    lab = classify(clf, r)
    assert lab.index == int(np.argmax(posterior(clf, r)))
    assert str(lab) == clf.names[lab.index]
    assert isinstance(clf, Classifier)


def test_prior_shifts_decision(models):
    codes = random_codes(200, 101, DNA, rng=4)
    flat = BayesClassifier(models).classify_codes(codes)
    heavy = BayesClassifier(models, [0.001, 0.998, 0.001]).classify_codes(codes)
    assert (heavy == 1).sum() > (flat == 1).sum()


def test_undefined_posterior():
    a = TripletModel("a", np.eye(64)[0])        # only AAA
    b = TripletModel("b", np.eye(64)[21])       # only CCC
    c = BayesClassifier([a, b])
    assert c.classify("AAAA").name == "a"
    with pytest.raises(UndefinedPosteriorError):
        c.classify("ACGT")


@pytest.mark.parametrize("bad", [dict(prior=[0.5, 0.5]), dict(prior=[0.2, 0.2, 0.2])])
def test_classifier_validation(models, bad):
    with pytest.raises(ValueError):
        BayesClassifier(models, **bad)


def test_classifier_needs_two_unique_models(models):
    with pytest.raises(ValueError):
        BayesClassifier(models[:1])
    with pytest.raises(ValueError):
        BayesClassifier([models[0], models[0]])


def test_subset(clf):
    sub = clf.subset([0, 2])
    assert sub.names == ["Adeno", "SARS"] and sub.prior == pytest.approx([0.5, 0.5])


@pytest.mark.parametrize("symbols", ["ACGT", "ACGTN"])
def test_neighbor_fast_path_matches_batch(clf, symbols):
    from seqboundary.seqspace import Alphabet
    for x in random_codes(15, 101, DNA, rng=8):
        want = clf.classify_codes(neighbor_codes(x, Alphabet(symbols)))
        assert np.array_equal(clf.neighbor_decisions(x, symbols), want)


@pytest.mark.parametrize("symbols", ["ACGT", "ACGTN"])
def test_neighbor_fast_path_with_n_origins(clf, symbols):
    from seqboundary.seqspace import Alphabet
    rng = np.random.default_rng(12)
    for x in random_codes(10, 101, DNA, rng=rng):
        x[rng.choice(101, size=int(rng.integers(1, 15)), replace=False)] = 4
        want = clf.classify_codes(neighbor_codes(x, Alphabet(symbols)))
        assert np.array_equal(clf.neighbor_decisions(x, symbols), want)


def test_marginal_and_delta_paths_agree(clf):
    x = random_codes(1, 101, DNA, rng=3)[0].astype(np.intp)
    assert np.allclose(clf._marginal_logliks(x), clf._substitution_logliks(x), rtol=0, atol=1e-10)


def test_neighbor_fallback_with_n_origin_and_zero_triplets():
    rng = np.random.default_rng(2)
    p = rng.dirichlet(np.ones(64))
    p[TRIPLETS.index("GTA")] = 0.0
    c = BayesClassifier([TripletModel("a", p / p.sum()), random_model(rng, "b")])
    assert not c._finite
    for read in ("ACGTNACGTA", "ACGTAACGTA"):
        x = Sequence(read).codes
        assert np.array_equal(c.neighbor_decisions(x), c.classify_codes(neighbor_codes(x, DNA_N)))


def test_function_classifier(parity):
    assert parity.classify("AAC").name == "even"
    assert decide_codes(parity, stack_codes(["AAA", "CCC"])).tolist() == [1, 0]
