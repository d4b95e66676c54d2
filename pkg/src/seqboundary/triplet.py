"""Second-order Markov (triplet) models of DNA sequences.

A model is stored as its 64-entry triplet distribution; the pair
distribution and the 16x4 transition matrix are always derived from it, so
the three views agree exactly. Index conventions: triplet ``b1b2b3`` has
index ``16*b1 + 4*b2 + b3`` and pair ``b1b2`` has index ``4*b1 + b2`` with
A=0, C=1, G=2, T=3.
"""
from __future__ import annotations

import json
from collections.abc import Mapping
from dataclasses import dataclass, field
from importlib import resources
from itertools import product
from pathlib import Path

import numpy as np

from .seqspace import Sequence, decode, encode

TRIPLETS = ["".join(t) for t in product("ACGT", repeat=3)]
PAIRS = ["".join(t) for t in product("ACGT", repeat=2)]

SUM_TOL = 1e-9
LOAD_TOL = 1e-4


def _check_distribution(probs, size: int, tol: float = SUM_TOL) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.shape != (size,):
        raise ValueError(f"expected {size} probabilities, got shape {p.shape}")
    if (p < 0).any() or not np.isfinite(p).all():
        raise ValueError("probabilities must be finite and non-negative")
    if abs(p.sum() - 1.0) > tol:
        raise ValueError(f"probabilities sum to {p.sum():.12g}, not 1")
    return p


@dataclass(frozen=True)
class TransitionMatrix:
    """Rows indexed by the preceding pair, columns by the next base.

    Rows whose pair has zero probability are undefined (NaN, ``defined``
    False).
    """

    probs: np.ndarray
    defined: np.ndarray

    def row(self, b1: int, b2: int) -> np.ndarray:
        return self.probs[4 * b1 + b2]


def estimate_triplet_distribution(g, pseudocount: float = 0.0) -> np.ndarray:
    """Empirical distribution of the 3-base windows of ``g``.

    Windows touching an N (or anything outside ACGT) are skipped.
    """
    if pseudocount < 0:
        raise ValueError("pseudocount must be non-negative")
    counts = triplet_counts(g)
    total = counts.sum()
    if total == 0 and pseudocount == 0:
        raise ValueError("sequence has no valid ACGT triplet window")
    return (counts + pseudocount) / (total + 64 * pseudocount)


def triplet_counts(g) -> np.ndarray:
    codes = g if isinstance(g, np.ndarray) else encode(str(g))
    codes = np.asarray(codes, dtype=np.int64)
    if codes.ndim == 1:
        codes = codes[None, :]
    if codes.shape[1] < 3:
        raise ValueError("sequence shorter than 3 has no triplet window")
    a, b, c = codes[:, :-2], codes[:, 1:-1], codes[:, 2:]
    ok = (a >= 0) & (a < 4) & (b >= 0) & (b < 4) & (c >= 0) & (c < 4)
    idx = (16 * a + 4 * b + c)[ok]
    return np.bincount(idx, minlength=64).astype(float)


def derive_pair(p3) -> np.ndarray:
    return np.asarray(p3, dtype=float).reshape(16, 4).sum(axis=1)


def derive_transition(p3, p2=None) -> TransitionMatrix:
    p3 = np.asarray(p3, dtype=float).reshape(16, 4)
    p2 = derive_pair(p3.ravel()) if p2 is None else np.asarray(p2, dtype=float)
    defined = p2 > 0
    probs = np.full((16, 4), np.nan)
    probs[defined] = p3[defined] / p2[defined, None]
    return TransitionMatrix(probs, defined)


@dataclass(frozen=True, eq=False)
class TripletModel:
    label: str
    p3: np.ndarray
    p2: np.ndarray = field(init=False, repr=False)
    t3: TransitionMatrix = field(init=False, repr=False)
    genome_length: int | None = None

    def __post_init__(self):
        p3 = _check_distribution(self.p3, 64)
        p3 = p3.copy()
        p3.flags.writeable = False
        object.__setattr__(self, "p3", p3)
        p2 = derive_pair(p3)
        p2.flags.writeable = False
        object.__setattr__(self, "p2", p2)
        object.__setattr__(self, "t3", derive_transition(p3, p2))

    @classmethod
    def from_sequence(cls, label: str, g, pseudocount: float = 0.0) -> "TripletModel":
        return cls(label, estimate_triplet_distribution(g, pseudocount), genome_length=len(g))

    @property
    def log_p2(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.p2).reshape(4, 4)

    @property
    def log_t3(self) -> np.ndarray:
        """``(4, 4, 4)`` log transition array; undefined rows are -inf."""
        t = np.where(self.t3.defined[:, None], self.t3.probs, 0.0)
        with np.errstate(divide="ignore"):
            return np.log(t).reshape(4, 4, 4)

    def to_dict(self) -> dict:
        doc = {"label": self.label, "alphabet": "ACGT"}
        if self.genome_length is not None:
            doc["genome_length"] = int(self.genome_length)
        doc["triplets"] = {t: float(v) for t, v in zip(TRIPLETS, self.p3)}
        return doc


def merge_models(label: str, models, weights=None) -> TripletModel:
    """Pool several models into one (weighted mixture of triplet distributions).

    Default weights are the models' genome lengths when all are known, which
    is the triplet distribution of the concatenated genomes up to edge
    effects; otherwise equal weights.
    """
    models = list(models)
    if weights is None:
        lengths = [m.genome_length for m in models]
        weights = lengths if all(lengths) else [1.0] * len(models)
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    p3 = sum(wi * m.p3 for wi, m in zip(w, models))
    length = sum(m.genome_length or 0 for m in models) or None
    return TripletModel(label, p3 / p3.sum(), genome_length=length)


# --------------------------------------------------------------------------
# distances and simulation
# --------------------------------------------------------------------------

def hellinger(p, q, tol: float = 1e-6) -> float:
    """Hellinger distance between two discrete distributions.

    Accepts arrays over the same index set or mappings with identical keys.
    """
    if isinstance(p, Mapping) or isinstance(q, Mapping):
        if not (isinstance(p, Mapping) and isinstance(q, Mapping)) or set(p) != set(q):
            raise ValueError("distributions are over different index sets")
        keys = sorted(p)
        p = [p[k] for k in keys]
        q = [q[k] for k in keys]
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"index-set mismatch: shapes {p.shape} and {q.shape}")
    for name, d in (("p", p), ("q", q)):
        if (d < 0).any() or abs(d.sum() - 1.0) > tol:
            raise ValueError(f"{name} is not a normalized distribution (sum {d.sum():.9g})")
    h2 = 0.5 * np.sum((np.sqrt(p) - np.sqrt(q)) ** 2)
    return float(min(1.0, np.sqrt(h2)))


def _cdfs(model: TripletModel) -> tuple[np.ndarray, np.ndarray]:
    # the last positive-mass entry of each cdf is pinned to inf so rounding
    # can never select a zero-probability outcome
    pair_cdf = np.cumsum(model.p2)
    pair_cdf[np.nonzero(model.p2 > 0)[0][-1]:] = np.inf
    rows = np.where(model.t3.defined[:, None], model.t3.probs, 0.0)
    row_cdf = np.cumsum(rows, axis=1)
    for r in np.nonzero(model.t3.defined)[0]:
        row_cdf[r, np.nonzero(rows[r] > 0)[0][-1]:] = np.inf
    return pair_cdf, row_cdf


def simulate_chains(model: TripletModel, uniforms: np.ndarray) -> np.ndarray:
    """Run one Markov chain per row of ``uniforms`` (shape ``(R, length-1)``).

    ``uniforms[:, 0]`` picks the initial pair from ``p2``; ``uniforms[:, i]``
    for ``i >= 1`` picks base ``i + 1`` from the transition row of the two
    preceding bases. Returns an ``(R, length)`` int8 code array.
    """
    u = np.atleast_2d(uniforms)
    reps, n = u.shape
    length = n + 1
    pair_cdf, row_cdf = _cdfs(model)
    out = np.empty((reps, length), dtype=np.int8)
    pair = np.searchsorted(pair_cdf, u[:, 0], side="right")
    out[:, 0], out[:, 1] = pair // 4, pair % 4
    defined = model.t3.defined
    for i in range(2, length):
        if not defined[pair].all():
            bad = pair[~defined[pair]][0]
            raise ValueError(
                f"chain reached undefined transition row {decode([bad // 4, bad % 4])} at position {i + 1}"
            )
        nxt = (u[:, i - 1, None] >= row_cdf[pair]).sum(axis=1)
        out[:, i] = nxt
        pair = (pair % 4) * 4 + nxt
    return out


def simulate_genome(model: TripletModel, length: int, rng=None) -> Sequence:
    if length < 3:
        raise ValueError("length must be >= 3")
    if model.p2.sum() <= 0:
        raise ValueError("pair distribution has no mass")
    rng = np.random.default_rng(rng)
    codes = simulate_chains(model, rng.random((1, length - 1)))[0]
    return Sequence(decode(codes))


def null_distances(model: TripletModel, length: int, replicates: int, seed: int = 0,
                   batch: int = 100, method: str = "markov") -> np.ndarray:
    """Hellinger distances from ``model.p3`` of ``replicates`` simulated genomes.

    ``method="markov"`` simulates whole genomes from the chain and estimates
    their triplet distributions; ``"multinomial"`` instead draws the
    ``length - 2`` windows independently from ``p3`` (ignores the overlap
    between neighbouring windows, so its quantiles come out a little lower).

    Replicate ``i`` is driven by ``default_rng(seed + i)`` alone, so the
    result does not depend on how replicates are batched.
    """
    if length < 3:
        raise ValueError("length must be >= 3")
    root_p = np.sqrt(model.p3)
    if method == "multinomial":
        counts = np.stack([np.random.default_rng(seed + i).multinomial(length - 2, model.p3)
                           for i in range(replicates)])
        est = counts / (length - 2)
        return np.sqrt(0.5 * ((np.sqrt(est) - root_p) ** 2).sum(axis=1))
    if method != "markov":
        raise ValueError(f"unknown method {method!r}")
    out = np.empty(replicates)
    for start in range(0, replicates, batch):
        idx = range(start, min(replicates, start + batch))
        u = np.stack([np.random.default_rng(seed + i).random(length - 1) for i in idx])
        genomes = simulate_chains(model, u).astype(np.int64)
        tri = 16 * genomes[:, :-2] + 4 * genomes[:, 1:-1] + genomes[:, 2:]
        tri += 64 * np.arange(len(idx))[:, None]
        counts = np.bincount(tri.ravel(), minlength=64 * len(idx)).reshape(len(idx), 64)
        est = counts / counts.sum(axis=1, keepdims=True)
        out[start:start + len(idx)] = np.sqrt(0.5 * ((np.sqrt(est) - root_p) ** 2).sum(axis=1))
    return out


def null_quantile(model: TripletModel, length: int, replicates: int = 1000, q: float = 0.999,
                  seed: int = 0, method: str = "markov") -> float:
    """Empirical ``q``-quantile of the Hellinger null distribution.

    ``q = 0.999`` gives the cut-off matching an empirical 0.001 p-value.
    """
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    return float(np.quantile(null_distances(model, length, replicates, seed, method=method), q))


# --------------------------------------------------------------------------
# persistence
# --------------------------------------------------------------------------

def model_from_dict(doc: dict) -> TripletModel:
    try:
        label = doc["label"]
        trip = doc["triplets"]
    except KeyError as exc:
        raise ValueError(f"model document lacks field {exc}") from None
    alphabet = doc.get("alphabet", "ACGT")
    if alphabet != "ACGT":
        raise ValueError(f"model alphabet must be ACGT, got {alphabet!r}")
    if set(trip) != set(TRIPLETS):
        missing = sorted(set(TRIPLETS) - set(trip))
        extra = sorted(set(trip) - set(TRIPLETS))
        raise ValueError(f"triplet keys wrong (missing {missing}, unexpected {extra})")
    p3 = np.array([float(trip[t]) for t in TRIPLETS])
    if (p3 < 0).any():
        raise ValueError("negative triplet probability")
    total = p3.sum()
    if abs(total - 1.0) > LOAD_TOL:
        raise ValueError(f"triplet probabilities sum to {total:.8f}; outside load tolerance")
    return TripletModel(label, p3 / total, genome_length=doc.get("genome_length"))


def load_model(path) -> TripletModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def save_model(model: TripletModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, indent=1)
        fh.write("\n")


BUNDLED = ("adeno", "covid", "sars")


def bundled_model(name: str) -> TripletModel:
    """One of the three bundled genome models: ``adeno``, ``covid`` or ``sars``."""
    name = name.lower()
    if name not in BUNDLED:
        raise KeyError(f"no bundled model {name!r}; choose from {BUNDLED}")
    text = resources.files("seqboundary").joinpath("data", f"{name}.json").read_text()
    return model_from_dict(json.loads(text))


def bundled_models() -> list[TripletModel]:
    return [bundled_model(n) for n in BUNDLED]


def data_path(name: str) -> Path:
    return Path(str(resources.files("seqboundary").joinpath("data", name)))
