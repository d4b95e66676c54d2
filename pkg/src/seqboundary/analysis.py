"""Reductions over classifier and boundary results.

Statistics only: no p-values are computed.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .boundary import ns_from_agreement


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray          # rows = true source, cols = decision
    names: tuple[str, ...] = ()

    @property
    def correct_rate(self) -> float:
        return float(np.trace(self.counts) / self.counts.sum())

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)


def confusion_matrix(truths, decisions, k: int | None = None, names=()) -> ConfusionMatrix:
    t = np.asarray(truths, dtype=np.int64)
    d = np.asarray(decisions, dtype=np.int64)
    if t.shape != d.shape:
        raise ValueError(f"length mismatch: {t.size} truths, {d.size} decisions")
    if t.size == 0:
        raise ValueError("empty input")
    k = k or int(max(t.max(), d.max())) + 1
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (t, d), 1)
    return ConfusionMatrix(counts, tuple(names))


@dataclass(frozen=True)
class Crosstab:
    row_labels: tuple
    col_labels: tuple
    counts: np.ndarray

    @property
    def row_sums(self):
        return self.counts.sum(axis=1)

    @property
    def col_sums(self):
        return self.counts.sum(axis=0)

    def rows(self):
        """Table rows with sums, ending in a ``Sum`` row."""
        out = [[str(r), *map(int, c), int(c.sum())] for r, c in zip(self.row_labels, self.counts)]
        out.append(["Sum", *map(int, self.col_sums), int(self.counts.sum())])
        return out


def crosstab_boundary(labels, statuses, n_status: int | None = None, row_order=None) -> Crosstab:
    labels = list(labels)
    statuses = np.asarray(statuses, dtype=np.int64)
    if len(labels) != len(statuses):
        raise ValueError("length mismatch")
    rows = list(row_order) if row_order is not None else sorted(set(labels), key=str)
    index = {r: i for i, r in enumerate(rows)}
    n_status = n_status or (int(statuses.max()) + 1 if statuses.size else 1)
    counts = np.zeros((len(rows), n_status), dtype=np.int64)
    for lab, s in zip(labels, statuses):
        counts[index[lab], s] += 1
    return Crosstab(tuple(rows), tuple(range(n_status)), counts)


def collapse_status(table: Crosstab) -> Crosstab:
    """Merge every positive boundary status into one column: off (0) vs on (1)."""
    c = table.counts
    return Crosstab(table.row_labels, (0, 1), np.column_stack([c[:, 0], c[:, 1:].sum(axis=1)]))


def chi_square_statistic(table, correction: bool = False) -> float:
    """Pearson chi-square statistic of independence.

    With ``correction`` a 2x2 table gets Yates' continuity correction
    (``|O - E|`` reduced by 0.5, floored at 0); larger tables are unaffected.
    """
    obs = np.asarray(getattr(table, "counts", table), dtype=float)
    rs, cs = obs.sum(axis=1), obs.sum(axis=0)
    if (rs <= 0).any() or (cs <= 0).any():
        raise ValueError("every row and column sum must be positive")
    expected = np.outer(rs, cs) / obs.sum()
    dev = np.abs(obs - expected)
    if correction and obs.shape == (2, 2):
        dev = np.maximum(dev - 0.5, 0.0)
    return float((dev ** 2 / expected).sum())


def ecdf(sample) -> tuple[np.ndarray, np.ndarray]:
    """Sorted distinct values and the ECDF evaluated at each."""
    x = np.sort(np.asarray(sample, dtype=float))
    vals = np.unique(x)
    return vals, np.searchsorted(x, vals, side="right") / len(x)


def ks_statistic(a, b) -> float:
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.abs(fa - fb).max())


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    @property
    def points(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def roc_curve(scores, correct) -> RocCurve:
    """ROC of the rule "accept when score >= threshold".

    Positives are correct decisions. Thresholds sweep the distinct scores
    from high to low, preceded by +inf (accept nothing).
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(correct, dtype=bool)
    if s.shape != y.shape:
        raise ValueError("length mismatch")
    pos, neg = y.sum(), (~y).sum()
    if pos == 0 or neg == 0:
        raise ValueError("need both correct and incorrect decisions")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    last = np.r_[np.nonzero(np.diff(s))[0], len(s) - 1]     # last index of each distinct score
    tp = np.cumsum(y)[last]
    fp = np.cumsum(~y)[last]
    tpr = np.r_[0.0, tp / pos]
    fpr = np.r_[0.0, fp / neg]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2))
    return RocCurve(fpr, tpr, np.r_[np.inf, s[last]], auc)


@dataclass(frozen=True)
class QuadraticFit:
    coefficients: dict        # class -> (alpha, beta, gamma)
    r_squared: float
    adj_r_squared: float
    mse: float

    def predict(self, ns, classes) -> np.ndarray:
        ns = np.asarray(ns, dtype=float)
        out = np.empty_like(ns)
        for i, (x, c) in enumerate(zip(ns, classes)):
            a, b, g = self.coefficients[c]
            out[i] = a * x * x + b * x + g
        return out


def quadratic_fit(ns, mp, classes) -> QuadraticFit:
    """Per-class least squares of ``mp`` on ``(ns^2, ns, 1)``."""
    ns = np.asarray(ns, dtype=float)
    mp = np.asarray(mp, dtype=float)
    classes = np.asarray(classes)
    if not (ns.shape == mp.shape == classes.shape):
        raise ValueError("length mismatch")
    coefs, resid = {}, np.empty_like(mp)
    for c in np.unique(classes):
        m = classes == c
        if np.unique(ns[m]).size < 3:
            raise ValueError(f"class {c}: need at least 3 distinct ns values for a quadratic")
        x = np.column_stack([ns[m] ** 2, ns[m], np.ones(m.sum())])
        beta, *_ = np.linalg.lstsq(x, mp[m], rcond=None)
        coefs[c.item() if hasattr(c, "item") else c] = tuple(float(v) for v in beta)
        resid[m] = mp[m] - x @ beta
    ssr = float(resid @ resid)
    sst = float(((mp - mp.mean()) ** 2).sum())
    n, p = len(mp), 3 * len(coefs)
    r2 = 1 - ssr / sst if sst > 0 else 1.0
    adj = 1 - (1 - r2) * (n - 1) / (n - p) if n > p else float("nan")
    return QuadraticFit(coefs, r2, adj, ssr / n)


def least_squares_rmse(x: np.ndarray, y: np.ndarray) -> tuple[float, int]:
    """Root mean squared residual of OLS with intercept, and the rank used.

    Columns are centred first; the solve is SVD-based, so collinear columns
    are effectively dropped (a warning reports how many).
    """
    xc = x - x.mean(axis=0)
    yc = y - y.mean()
    beta, _, rank, _ = np.linalg.lstsq(xc, yc, rcond=None)
    if rank < x.shape[1]:
        warnings.warn(f"{x.shape[1] - rank} rank-deficient column(s) dropped", RuntimeWarning, stacklevel=2)
    r = yc - xc @ beta
    return float(np.sqrt(r @ r / len(y))), int(rank)


def partial_ns_matrix(profiles, kmax: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """``NS(R, 1..kmax)`` per read from a random neighbor order, plus full NS."""
    rng = np.random.default_rng(rng)
    x = np.empty((len(profiles), kmax))
    y = np.empty(len(profiles))
    steps = np.arange(1, kmax + 1)
    for i, p in enumerate(profiles):
        if p.neighbor_decisions is None:
            raise ValueError("profiles must retain neighbor decisions")
        if kmax > len(p.neighbor_decisions):
            raise ValueError(f"k = {kmax} exceeds the {len(p.neighbor_decisions)} neighbors")
        agree = p.neighbor_decisions[rng.permutation(len(p.neighbor_decisions))] == p.decision
        x[i] = ns_from_agreement(np.cumsum(agree[:kmax]) / steps)
        y[i] = p.ns
    return x, y


def ns_sampling_rrmse(profiles, ks, rng=None) -> list[tuple[int, float]]:
    """RRMSE of predicting NS from partial NS values ``NS(., 1..k)``.

    For each ``k`` a linear model (with intercept) is fitted by least squares;
    RRMSE is ``sqrt(mean squared residual) / mean(NS)``.
    """
    ks = [int(k) for k in ks]
    if ks != sorted(ks) or not ks or ks[0] < 1:
        raise ValueError("ks must be ascending positive integers")
    x, y = partial_ns_matrix(profiles, ks[-1], rng)
    if np.ptp(y) == 0:
        raise ValueError("degenerate response: every NS value is equal")
    out, deficient = [], []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for k in ks:
            rmse, rank = least_squares_rmse(x[:, :k], y)
            if rank < k:
                deficient.append(k)
            out.append((k, rmse / y.mean()))
    if deficient:
        warnings.warn(f"rank-deficient partial-NS designs at k = {deficient}; collinear columns dropped",
                      RuntimeWarning, stacklevel=2)
    return out


_APEX = np.array([0.5, np.sqrt(3) / 2])


def barycentric_coords(p) -> tuple[float, float]:
    """Class 0 at the apex, class 1 lower left (0, 0), class 2 lower right (1, 0)."""
    p = np.asarray(p, dtype=float)
    if p.shape != (3,):
        raise ValueError("need exactly 3 components")
    if (p < -1e-12).any() or abs(p.sum() - 1) > 1e-9:
        raise ValueError("components must be a probability vector")
    xy = p[0] * _APEX + p[2] * np.array([1.0, 0.0])
    return float(xy[0]), float(xy[1])


def pearson(a, b) -> float:
    return float(np.corrcoef(np.asarray(a, dtype=float), np.asarray(b, dtype=float))[0, 1])
