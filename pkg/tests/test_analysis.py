import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from seqboundary.analysis import (
    barycentric_coords, chi_square_statistic, collapse_status, confusion_matrix, crosstab_boundary, ecdf, ks_statistic,
    least_squares_rmse, ns_sampling_rrmse, pearson, quadratic_fit, roc_curve,
)
from seqboundary.boundary import NeighborProfile, ns_from_counts
from seqboundary.seqspace import Sequence


def test_confusion_examples():
    assert confusion_matrix([0, 1, 2], [0, 1, 2]).correct_rate == 1.0
    cm = confusion_matrix([0, 0, 0], [1, 1, 1], k=2)
    assert cm.correct_rate == 0.0 and cm.counts.tolist() == [[0, 3], [0, 0]]


def test_confusion_rate_on_published_matrix():
    counts = np.array([[1601, 115, 250], [64, 1717, 215], [268, 169, 1470]])
    truths = np.repeat(np.arange(3), counts.sum(axis=1))
    decisions = np.concatenate([np.repeat(np.arange(3), row) for row in counts])
    cm = confusion_matrix(truths, decisions)
    assert np.array_equal(cm.counts, counts)
    # 4788 / 5869; the published caption rounds this to 81.55%
    assert cm.correct_rate == pytest.approx(4788 / 5869, abs=1e-15)
    assert cm.correct_rate == pytest.approx(0.8155, abs=5e-4)


def test_confusion_errors():
    with pytest.raises(ValueError):
        confusion_matrix([0, 1], [0])
    with pytest.raises(ValueError):
        confusion_matrix([], [])


def test_crosstab():
    tab = crosstab_boundary(["a", "b", "a"], [0, 0, 0], 3)
    assert tab.counts.tolist() == [[2, 0, 0], [1, 0, 0]]
    assert tab.rows()[-1] == ["Sum", 3, 0, 0, 3]
    with pytest.raises(ValueError):
        crosstab_boundary(["a"], [0, 1])


def test_crosstab_uniform_labels_roughly_uniform():
    rng = np.random.default_rng(0)
    labels = rng.integers(0, 3, 30_000)
    status = rng.integers(0, 3, 30_000)
    tab = crosstab_boundary(labels.tolist(), status, 3)
    assert np.allclose(tab.counts / 30_000, 1 / 9, atol=0.01)


@pytest.mark.parametrize("table,want", [
    ([[10, 10], [10, 10]], 0.0),
    ([[20, 0], [0, 20]], 40.0),
])
def test_chi_square_examples(table, want):
    assert chi_square_statistic(np.array(table)) == pytest.approx(want)


def test_chi_square_published_table():
    labels = ["No"] * 1081 + ["Yes"] * 4788
    status = [0] * 382 + [1] * 598 + [2] * 101 + [0] * 3696 + [1] * 1003 + [2] * 89
    tab = crosstab_boundary(labels, status, 3)
    assert tab.counts.tolist() == [[382, 598, 101], [3696, 1003, 89]]
    # the published figure is the on/off-boundary 2x2 table with continuity correction
    assert chi_square_statistic(collapse_status(tab), correction=True) == pytest.approx(726.65, abs=0.01)
    # without collapsing, all three status columns give a larger value
    assert chi_square_statistic(tab) == pytest.approx(756.8621, abs=1e-4)


@pytest.mark.parametrize("table,want", [
    ([[1378, 526, 62], [1554, 375, 67], [1146, 700, 61]], 145.6088),
    ([[1408, 491, 34], [1575, 345, 81], [1095, 765, 75]], 242.3458),
])
def test_chi_square_published_on_off_ratios(table, want):
    counts = np.array(table)
    collapsed = np.column_stack([counts[:, 0], counts[:, 1:].sum(axis=1)])
    assert chi_square_statistic(collapsed, correction=True) == pytest.approx(want, abs=1e-4)


def test_yates_correction_2x2():
    # |O - E| = 10 in every cell, reduced to 9.5: 4 * 9.5^2 / 10
    assert chi_square_statistic(np.array([[20, 0], [0, 20]]), correction=True) == pytest.approx(36.1)


def test_chi_square_zero_margin():
    with pytest.raises(ValueError):
        chi_square_statistic(np.array([[1, 0], [1, 0]]))


def test_ecdf():
    vals, f = ecdf([3, 1, 2, 2])
    assert vals.tolist() == [1, 2, 3] and f.tolist() == [0.25, 0.75, 1.0]


@pytest.mark.parametrize("a,b,want", [([1, 2, 3], [1, 2, 3], 0.0), ([1, 2], [5, 6], 1.0), ([1, 2], [1.5, 2.5], 0.5)])
def test_ks_examples(a, b, want):
    assert ks_statistic(a, b) == want


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=20), st.lists(st.floats(-5, 5), min_size=1, max_size=20))
def test_ks_properties(a, b):
    d = ks_statistic(a, b)
    assert 0 <= d <= 1 and d == ks_statistic(b, a)


def test_roc_examples():
    y = np.array([1, 1, 0, 0], dtype=bool)
    assert roc_curve([0.9, 0.8, 0.2, 0.1], y).auc == 1.0
    assert roc_curve([0.5] * 4, y).auc == 0.5
    assert roc_curve([0.1, 0.2, 0.8, 0.9], y).auc == 0.0
    r = roc_curve([0.9, 0.8, 0.2, 0.1], y)
    assert r.points[0] == (0.0, 0.0) and r.points[-1] == (1.0, 1.0)
    with pytest.raises(ValueError):
        roc_curve([0.1, 0.2], [True, True])


@given(st.lists(st.tuples(st.floats(0, 1), st.booleans()), min_size=2, max_size=40))
def test_roc_monotone(data):
    s, y = zip(*data)
    if all(y) or not any(y):
        return
    r = roc_curve(s, y)
    assert (np.diff(r.fpr) >= 0).all() and (np.diff(r.tpr) >= 0).all()
    assert 0 <= r.auc <= 1


def test_quadratic_exact_recovery():
    rng = np.random.default_rng(0)
    ns = rng.random(200)
    cls = rng.integers(0, 3, 200)
    mp = 2 * ns ** 2 - 2 * ns + 1
    fit = quadratic_fit(ns, mp, cls)
    for c in range(3):
        assert fit.coefficients[c] == pytest.approx((2, -2, 1), abs=1e-9)
    assert fit.r_squared == pytest.approx(1.0)
    assert np.allclose(fit.predict(ns, cls), mp)


def test_quadratic_three_points_interpolates():
    ns = np.array([0.0, 0.5, 1.0, 0.0, 0.5, 1.0])
    mp = np.array([1.0, 0.6, 0.9, 0.5, 0.5, 0.8])
    fit = quadratic_fit(ns, mp, np.array([0, 0, 0, 1, 1, 1]))
    assert fit.mse == pytest.approx(0.0, abs=1e-25)
    # through (0,1), (0.5,0.6), (1,0.9): gamma = 1, alpha + beta = -0.1, alpha/4 + beta/2 = -0.4
    assert fit.coefficients[0] == pytest.approx((1.4, -1.5, 1.0))


def test_quadratic_needs_three_distinct():
    with pytest.raises(ValueError):
        quadratic_fit([0.1, 0.1, 0.2], [1, 1, 1], [0, 0, 0])


def test_least_squares_rmse_exact():
    x = np.arange(10.0)[:, None]
    rmse, rank = least_squares_rmse(x, 3 * x[:, 0] + 2)
    assert rmse == pytest.approx(0, abs=1e-12) and rank == 1


def _profiles(rng, n=200, m=30):
    out = []
    for _ in range(n):
        nd = (rng.random(m) < rng.random() * 0.4).astype(np.int64)
        counts = np.bincount(nd, minlength=2)
        out.append(NeighborProfile(Sequence("ACGT"), 0, counts, ns_from_counts(counts, 0),
                                   int(counts[1] > 0), m + 1, nd))
    return out


def test_rrmse_full_sample_is_zero():
    profs = _profiles(np.random.default_rng(1))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rr = dict(ns_sampling_rrmse(profs, [1, 5, 30], rng=0))
    assert rr[30] == pytest.approx(0.0, abs=1e-10)
    assert rr[1] > rr[5] > rr[30]


def test_rrmse_bad_ks():
    profs = _profiles(np.random.default_rng(1), n=10)
    with pytest.raises(ValueError):
        ns_sampling_rrmse(profs, [5, 1])
    with pytest.raises(ValueError):
        ns_sampling_rrmse(profs, [31])


@pytest.mark.parametrize("p,xy", [
    ((1, 0, 0), (0.5, 0.8660254)),
    ((0, 1, 0), (0.0, 0.0)),
    ((0, 0, 1), (1.0, 0.0)),
    ((1 / 3, 1 / 3, 1 / 3), (0.5, 0.2886751)),
])
def test_barycentric(p, xy):
    assert barycentric_coords(p) == pytest.approx(xy, abs=1e-7)


def test_barycentric_invalid():
    with pytest.raises(ValueError):
        barycentric_coords((0.5, 0.5))
    with pytest.raises(ValueError):
        barycentric_coords((0.5, 0.6, 0.0))


def test_pearson():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
