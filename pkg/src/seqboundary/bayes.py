"""Naive Bayes read classifier built from triplet models.

Two code paths compute likelihoods:

* :func:`log_likelihood` runs the forward recursion over the 16 pair
  states in log space for one sequence. It is the reference.
* :meth:`BayesClassifier.log_likelihoods` works on ``(B, L)`` code arrays.
  N-free rows are a straight gather-and-sum; rows with one or two Ns are
  expanded into their 4 or 16 completions; anything with more Ns goes
  through a scaled forward pass. The tests hold both paths to 1e-10.
"""
from __future__ import annotations

from typing import Callable, NamedTuple, Protocol, runtime_checkable

import numpy as np

from .seqspace import N_CODE, Sequence, as_sequence, encode

_NEG_INF = -np.inf


class UndefinedPosteriorError(ValueError):
    """Every class assigns the read zero likelihood."""


class ClassLabel(NamedTuple):
    index: int
    name: str

    def __str__(self):
        return self.name


@runtime_checkable
class Classifier(Protocol):
    """Anything with labels and a deterministic ``classify``.

    Implementations may add ``classify_codes(codes) -> int array`` for
    vectorised evaluation and ``posterior(seq)`` if they have one.
    """

    labels: list[ClassLabel]

    def classify(self, r) -> ClassLabel: ...


class FunctionClassifier:
    """Wrap ``fn(str) -> class index`` as a :class:`Classifier`."""

    def __init__(self, fn: Callable[[str], int], names):
        self.fn = fn
        self.labels = [ClassLabel(i, str(n)) for i, n in enumerate(names)]

    def classify(self, r) -> ClassLabel:
        return self.labels[int(self.fn(str(r)))]


def decide_codes(c, codes) -> np.ndarray:
    """Decisions (class indices) of every row of an ``(M, L)`` code array."""
    codes = np.asarray(codes)
    fast = getattr(c, "classify_codes", None)
    if fast is not None:
        return np.asarray(fast(codes), dtype=np.int64)
    return np.array([c.classify(Sequence.from_codes(row)).index for row in codes], dtype=np.int64)


# --------------------------------------------------------------------------
# single-sequence reference
# --------------------------------------------------------------------------

def _allowed(code: int) -> np.ndarray:
    mask = np.full(4, _NEG_INF)
    if code == N_CODE:
        mask[:] = 0.0
    else:
        mask[code] = 0.0
    return mask


def _logsumexp(a, axis=None):
    m = np.max(a, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - safe), axis=axis, keepdims=True)) + safe
    return np.squeeze(out, axis=axis) if axis is not None else out.item()


def _codes_of(r) -> np.ndarray:
    codes = r.codes if isinstance(r, Sequence) else encode(str(r))
    if len(codes) < 3:
        raise ValueError(f"sequence of length {len(codes)} is too short (need >= 3)")
    if (codes < 0).any():
        bad = int(np.nonzero(codes < 0)[0][0])
        raise ValueError(f"illegal character {str(r)[bad]!r} at offset {bad + 1}")
    return codes


def log_likelihood(model, r) -> float:
    """Log of the read likelihood, summing over every completion of its Ns.

    Forward recursion with state = last two bases; a leading N is handled by
    weighting the initial pair by the pair distribution.
    """
    codes = _codes_of(r)
    log_t = model.log_t3
    alpha = model.log_p2 + _allowed(codes[0])[:, None] + _allowed(codes[1])[None, :]
    for c in codes[2:]:
        # alpha[x, y] -> alpha[y, z]
        alpha = _logsumexp(alpha[:, :, None] + log_t, axis=0) + _allowed(c)[None, :]
    return float(_logsumexp(alpha))


# --------------------------------------------------------------------------
# classifier
# --------------------------------------------------------------------------

class BayesClassifier:
    """MAP classifier over K triplet models.

    Ties go to the lowest class index. With a uniform prior the decision is
    the maximum-likelihood class.
    """

    def __init__(self, models, prior=None, chunk: int = 8192):
        self.models = list(models)
        k = len(self.models)
        if k < 2:
            raise ValueError("need at least two models")
        names = [m.label for m in self.models]
        if len(set(names)) != k:
            raise ValueError(f"model labels must be unique, got {names}")
        self.labels = [ClassLabel(i, n) for i, n in enumerate(names)]
        prior = np.full(k, 1.0 / k) if prior is None else np.asarray(prior, dtype=float)
        if prior.shape != (k,) or (prior < 0).any() or abs(prior.sum() - 1) > 1e-9:
            raise ValueError(f"prior must be {k} non-negative weights summing to 1")
        self.prior = prior
        self.uniform_prior = bool(np.all(prior == prior[0]))
        with np.errstate(divide="ignore"):
            self.log_prior = np.log(prior)
        self.chunk = chunk
        self._log_p2 = np.stack([m.log_p2.ravel() for m in self.models])         # (K, 16)
        self._log_t3 = np.stack([m.log_t3.ravel() for m in self.models])         # (K, 64)
        self._p2 = np.stack([m.p2.reshape(4, 4) for m in self.models])           # (K, 4, 4)
        self._t3 = np.exp(self._log_t3).reshape(k, 4, 4, 4)

    @property
    def names(self) -> list[str]:
        return [lab.name for lab in self.labels]

    def __len__(self):
        return len(self.models)

    def subset(self, indices) -> "BayesClassifier":
        """Classifier restricted to some classes, prior renormalised."""
        indices = list(indices)
        p = self.prior[indices]
        return BayesClassifier([self.models[i] for i in indices], p / p.sum(), self.chunk)

    # ---- likelihoods ---------------------------------------------------

    def log_likelihoods(self, codes) -> np.ndarray:
        """``(B, K)`` log-likelihoods for an ``(B, L)`` code array."""
        codes = np.atleast_2d(np.asarray(codes))
        if codes.shape[1] < 3:
            raise ValueError("sequences must have length >= 3")
        if codes.size and (codes.min() < 0 or codes.max() > N_CODE):
            raise ValueError("code array contains values outside 0..4")
        codes = codes.astype(np.intp, copy=False)
        out = np.empty((codes.shape[0], len(self.models)))
        n_count = (codes == N_CODE).sum(axis=1)
        for m in np.unique(n_count):
            rows = np.nonzero(n_count == m)[0]
            for s in range(0, len(rows), self.chunk):
                part = rows[s:s + self.chunk]
                if m == 0:
                    out[part] = self._clean(codes[part])
                elif m <= 2:
                    out[part] = self._expanded(codes[part], int(m))
                else:
                    out[part] = self._forward(codes[part])
        return out

    def _clean(self, c: np.ndarray) -> np.ndarray:
        tri = 16 * c[:, :-2] + 4 * c[:, 1:-1] + c[:, 2:]
        pair = 4 * c[:, 0] + c[:, 1]
        ll = self._log_p2[:, pair] + self._log_t3[:, tri].sum(axis=-1)
        return ll.T

    def _expanded(self, c: np.ndarray, m: int) -> np.ndarray:
        b, length = c.shape
        pos = np.nonzero(c == N_CODE)[1].reshape(b, m)
        fills = np.array(np.meshgrid(*[np.arange(4)] * m, indexing="ij")).reshape(m, -1).T  # (4^m, m)
        full = np.repeat(c[:, None, :], len(fills), axis=1)                                # (b, 4^m, L)
        rows = np.arange(b)[:, None, None]
        cols = np.arange(len(fills))[None, :, None]
        full[rows, cols, pos[:, None, :]] = fills[None, :, :]
        ll = self._clean(full.reshape(-1, length)).reshape(b, len(fills), -1)
        return _logsumexp(ll, axis=1)

    def _forward(self, c: np.ndarray) -> np.ndarray:
        onehot = np.vstack([np.eye(4), np.ones(4)])[c]                    # (b, L, 4)
        alpha = self._p2[None] * onehot[:, 0, None, :, None] * onehot[:, 1, None, None, :]
        log_scale = np.zeros(alpha.shape[:2])
        for i in range(2, c.shape[1]):
            alpha = np.einsum("bkxy,kxyz->bkyz", alpha, self._t3) * onehot[:, i, None, None, :]
            s = alpha.sum(axis=(2, 3))
            with np.errstate(divide="ignore"):
                log_scale += np.log(s)
            alpha /= np.where(s > 0, s, 1.0)[:, :, None, None]
        with np.errstate(divide="ignore"):
            return log_scale + np.log(alpha.sum(axis=(2, 3)))

    # ---- posteriors and decisions -----------------------------------------

    def _log_posteriors(self, ll: np.ndarray) -> np.ndarray:
        joint = ll + self.log_prior
        norm = _logsumexp(joint, axis=1)
        dead = ~np.isfinite(norm)
        if dead.any():
            raise UndefinedPosteriorError(
                f"all {len(self.models)} likelihoods are zero for row {int(np.nonzero(dead)[0][0])}")
        return joint - norm[:, None]

    def posteriors(self, codes) -> np.ndarray:
        return np.exp(self._log_posteriors(self.log_likelihoods(codes)))

    def posterior(self, r) -> np.ndarray:
        return self.posteriors(_codes_of(r)[None, :])[0]

    def classify_codes(self, codes) -> np.ndarray:
        ll = self.log_likelihoods(codes)
        joint = ll if self.uniform_prior else ll + self.log_prior
        best = joint.max(axis=1)
        if not np.isfinite(best).all():
            bad = int(np.nonzero(~np.isfinite(best))[0][0])
            raise UndefinedPosteriorError(f"all likelihoods are zero for row {bad}")
        return np.argmax(joint, axis=1)

    def classify(self, r) -> ClassLabel:
        return self.labels[int(self.classify_codes(_codes_of(r)[None, :])[0])]

    # ---- neighbors ---------------------------------------------------------

    def neighbor_decisions(self, codes, symbols: str = "ACGTN") -> np.ndarray:
        """Decisions of every Hamming neighbor, in ``neighbor_codes`` order.

        Under models without zero probabilities, the likelihoods of all
        single-site substitutions come from one pass over the origin: for an
        N-free origin each substitution only changes three transition terms
        (or the initial pair); otherwise a scaled forward-backward pass gives
        every site's marginal. Decisions closer than 1e-8 to a tie are
        recomputed exactly, so results always equal :meth:`classify_codes`.
        """
        from .seqspace import Alphabet, neighbor_codes

        x = np.asarray(codes, dtype=np.intp)
        if not self._finite or symbols not in ("ACGT", "ACGTN") or x.min() < 0 or len(x) < 3:
            return self.classify_codes(neighbor_codes(x, Alphabet(symbols)))
        s = self._substitution_logliks(x) if not (x == N_CODE).any() else self._marginal_logliks(x)
        s5 = np.concatenate([s, _logsumexp(s, axis=1)[:, None, :]], axis=1)    # (L, 5, K); 4 = N
        take = np.zeros((len(x), 5), dtype=bool)
        take[:, Alphabet(symbols).codes] = True
        take[np.arange(len(x)), x] = False
        ll = s5[take]
        joint = ll if self.uniform_prior else ll + self.log_prior
        out = np.argmax(joint, axis=1)
        top2 = np.sort(joint, axis=1)[:, -2:]
        close = np.nonzero(top2[:, 1] - top2[:, 0] < 1e-8)[0]
        if close.size:
            out[close] = self.classify_codes(neighbor_codes(x, Alphabet(symbols))[close])
        return out

    def _marginal_logliks(self, x: np.ndarray) -> np.ndarray:
        """``s[j, b]`` = log-likelihoods of ``x`` with site ``j`` set to ``b``.

        Works for origins containing Ns. ``fwd[j]`` holds the forward
        variables over ``(z[j-1], z[j])`` with every site before ``j``
        constrained and site ``j`` free; ``bwd[j]`` the backward variables
        for the sites after ``j``. Both are rescaled at each step.
        """
        n, k = len(x), len(self.models)
        mask = np.vstack([np.eye(4), np.ones(4)])[x]                   # (n, 4)
        t, p2 = self._t3, self._p2
        fwd = np.empty((n, k, 4, 4))
        fwd_log = np.zeros((n, k))
        fwd[1] = p2 * mask[0][None, :, None]
        a = fwd[1] * mask[1][None, None, :]
        for j in range(2, n):
            c = a.sum(axis=(1, 2))
            a = a / c[:, None, None]
            fwd_log[j] = fwd_log[j - 1] + np.log(c)
            fwd[j] = np.einsum("kca,kcab->kab", a, t)
            a = fwd[j] * mask[j][None, None, :]
        bwd = np.empty((n, k, 4, 4))
        bwd_log = np.zeros((n, k))
        bwd[n - 1] = 1.0
        for j in range(n - 2, 0, -1):
            b = np.einsum("kabc,kbc->kab", t * mask[j + 1][None, None, None, :], bwd[j + 1])
            c = b.sum(axis=(1, 2))
            bwd[j] = b / c[:, None, None]
            bwd_log[j] = bwd_log[j + 1] + np.log(c)
        out = np.empty((n, 4, k))
        with np.errstate(divide="ignore"):
            m = np.einsum("jkab,jkab->jbk", fwd[1:], bwd[1:])
            out[1:] = np.log(m) + (fwd_log[1:] + bwd_log[1:])[:, None, :]
            m0 = np.einsum("kab,b,kab->ak", p2, mask[1], bwd[1])
            out[0] = np.log(m0) + bwd_log[1][None, :]
        return out

    @property
    def _finite(self) -> bool:
        return bool(np.isfinite(self._log_t3).all() and np.isfinite(self._log_p2).all())

    def _substitution_logliks(self, x: np.ndarray) -> np.ndarray:
        """``s[j, b]`` = log-likelihoods of ``x`` with site ``j`` set to ``b``."""
        k = len(self.models)
        lt = np.moveaxis(self._log_t3.reshape(k, 4, 4, 4), 0, -1)    # (4, 4, 4, K)
        lp = np.moveaxis(self._log_p2.reshape(k, 4, 4), 0, -1)       # (4, 4, K)
        n = len(x)
        f = lt[x[:-2], x[1:-1], x[2:]]                                # (n-2, K): term at site i+2
        g = lp[x[0], x[1]]
        total = self._clean(x[None, :])[0]
        delta = np.zeros((n, 4, k))
        # the transition ending at site j
        delta[2:] += lt[x[:-2], x[1:-1]] - f[:, None, :]
        # the transition with site j in the middle
        delta[1:-1] += lt[x[:-2], :, x[2:]] - f[:, None, :]
        # the transition starting at site j
        delta[:-2] += np.transpose(lt[:, x[1:-1], x[2:]], (1, 0, 2)) - f[:, None, :]
        delta[0] += lp[:, x[1]] - g
        delta[1] += lp[x[0], :] - g
        return total[None, None, :] + delta


def posterior(c: BayesClassifier, r) -> np.ndarray:
    return c.posterior(as_sequence(r))


def classify(c, r) -> ClassLabel:
    return c.classify(as_sequence(r))


def posterior_from_likelihoods(likelihoods, prior=None) -> np.ndarray:
    """Posterior over classes from per-class likelihoods (not logs)."""
    lik = np.asarray(likelihoods, dtype=float)
    prior = np.full(lik.shape, 1.0 / lik.size) if prior is None else np.asarray(prior, dtype=float)
    joint = lik * prior
    if joint.sum() <= 0:
        raise UndefinedPosteriorError("every class has zero joint probability")
    return joint / joint.sum()


def decide(p) -> int:
    """Index of the largest posterior; ties go to the lowest index."""
    return int(np.argmax(np.asarray(p)))


def max_posterior(p) -> float:
    return float(np.max(p))


def posterior_entropy(p) -> float:
    """Natural-log entropy with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz))) + 0.0


def max_posteriors(post: np.ndarray) -> np.ndarray:
    return post.max(axis=1)


def posterior_entropies(post: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(post > 0, post * np.log(post), 0.0)
    return -terms.sum(axis=1) + 0.0
