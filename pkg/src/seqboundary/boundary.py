"""Boundary membership and Neighbor Similarity on the Hamming graph.

A sequence is on the boundary when at least one neighbor is classified
differently. Neighbor Similarity (NS) is one minus the Hellinger distance
between the point mass at the sequence's own decision and the empirical
distribution of its neighbors' decisions. Against a point mass that
distance collapses to ``sqrt(1 - sqrt(q))``, ``q`` being the share of
neighbors that agree, so NS only depends on how many neighbors agree.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bayes import decide_codes
from .seqspace import DNA_N, Alphabet, Sequence, as_sequence, hamming_distance, neighbor_codes


@dataclass(frozen=True)
class NeighborProfile:
    origin: Sequence
    decision: int
    neighbor_counts: np.ndarray
    ns: float
    boundary_status: int
    evaluations: int
    neighbor_decisions: np.ndarray | None = field(default=None, repr=False)

    @property
    def on_boundary(self) -> bool:
        return self.boundary_status > 0


@dataclass(frozen=True)
class SampledNs:
    origin: Sequence
    k: int
    ns_estimate: float
    sampled_indices: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class DbBound:
    origin: Sequence
    lower: int
    upper: int | None
    exhausted_radius: int
    budget_used: int
    exact: bool = False


def ns_from_agreement(agree_fraction):
    """NS from the fraction of neighbors sharing the decision (vectorised)."""
    q = np.clip(np.asarray(agree_fraction, dtype=float), 0.0, 1.0)
    return 1.0 - np.sqrt(1.0 - np.sqrt(q))


def ns_from_counts(counts, decision: int) -> float:
    counts = np.asarray(counts)
    total = counts.sum()
    if total <= 0:
        raise ValueError("no neighbor decisions")
    return float(ns_from_agreement(counts[decision] / total))


def _resolve(alphabet: Alphabet | None, no_n: bool) -> Alphabet:
    if alphabet is not None:
        return alphabet
    return Alphabet("ACGT") if no_n else DNA_N


def _neighbor_decisions(c, codes: np.ndarray, alphabet: Alphabet) -> np.ndarray:
    fast = getattr(c, "neighbor_decisions", None)
    if fast is not None and alphabet.symbols in ("ACGT", "ACGTN"):
        return np.asarray(fast(codes, alphabet.symbols), dtype=np.int64)
    return decide_codes(c, neighbor_codes(codes, alphabet))


def _profile_from(origin: Sequence, decision: int, nd: np.ndarray, k: int, keep: bool) -> NeighborProfile:
    counts = np.bincount(nd, minlength=k)
    ns = ns_from_counts(counts, decision)
    status = int(np.count_nonzero(np.delete(counts, decision)))
    return NeighborProfile(origin, decision, counts, ns, status, len(nd) + 1, nd if keep else None)


def neighbor_profile(c, r, alphabet: Alphabet | None = None, *, no_n: bool = False,
                     keep_decisions: bool = True, decision: int | None = None) -> NeighborProfile:
    """Classify ``r`` and all of its neighbors.

    ``decision`` may be passed when ``C(r)`` is already known; the
    evaluation count still includes it.
    """
    alphabet = _resolve(alphabet, no_n)
    r = as_sequence(r)
    if decision is None:
        decision = int(decide_codes(c, r.codes[None, :])[0])
    nd = _neighbor_decisions(c, r.codes, alphabet)
    return _profile_from(r, decision, nd, len(c.labels), keep_decisions)


def _profile_chunk(args):
    c, rows, symbols, keep = args
    alphabet = Alphabet(symbols)
    decisions = decide_codes(c, rows)
    out = []
    for row, d in zip(rows, decisions):
        nd = _neighbor_decisions(c, row, alphabet)
        out.append(_profile_from(Sequence.from_codes(row), int(d), nd, len(c.labels), keep))
    return out


def profile_many(c, seqs, alphabet: Alphabet | None = None, *, no_n: bool = False,
                 keep_decisions: bool = False, workers: int = 1, chunk: int = 250) -> list[NeighborProfile]:
    """Neighbor profiles for many sequences, optionally across processes.

    Work is split into fixed chunks whatever the worker count, and results
    come back in input order, so output never depends on ``workers``.
    """
    alphabet = _resolve(alphabet, no_n)
    codes = seqs if isinstance(seqs, np.ndarray) else np.stack([as_sequence(s).codes for s in seqs])
    tasks = [(c, codes[i:i + chunk], alphabet.symbols, keep_decisions) for i in range(0, len(codes), chunk)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_profile_chunk, tasks))
    else:
        parts = [_profile_chunk(t) for t in tasks]
    return [p for part in parts for p in part]


def sampled_ns(c, r, k: int, rng=None, alphabet: Alphabet | None = None, *, no_n: bool = False,
               decision: int | None = None) -> SampledNs:
    """NS estimated from ``k`` neighbors drawn without replacement.

    The draw is the first ``k`` entries of a random permutation of the
    neighbors, so estimates for increasing ``k`` under one seed are nested.
    """
    alphabet = _resolve(alphabet, no_n)
    r = as_sequence(r)
    rng = np.random.default_rng(rng)
    nbrs = neighbor_codes(r.codes, alphabet)
    if not 1 <= k <= len(nbrs):
        raise ValueError(f"k must be in 1..{len(nbrs)}, got {k}")
    idx = rng.permutation(len(nbrs))[:k]
    if decision is None:
        decision = int(decide_codes(c, r.codes[None, :])[0])
    nd = decide_codes(c, nbrs[idx])
    ns = float(ns_from_agreement(np.count_nonzero(nd == decision) / k))
    return SampledNs(r, k, ns, idx)


def is_boundary(c, r, alphabet: Alphabet | None = None, *, no_n: bool = False) -> bool:
    return neighbor_profile(c, r, alphabet, no_n=no_n, keep_decisions=False).on_boundary


# --------------------------------------------------------------------------
# distance from the boundary
# --------------------------------------------------------------------------

class _Memo:
    """Classification cache that counts distinct evaluations."""

    def __init__(self, c):
        self.c = c
        self.table: dict[bytes, int] = {}

    def decide(self, rows: np.ndarray) -> np.ndarray:
        keys = [row.tobytes() for row in rows]
        todo = [i for i, key in enumerate(keys) if key not in self.table]
        if todo:
            fresh = decide_codes(self.c, rows[todo])
            for i, d in zip(todo, fresh):
                self.table.setdefault(keys[i], int(d))
        return np.array([self.table[key] for key in keys], dtype=np.int64)

    @property
    def evaluations(self) -> int:
        return len(self.table)


def _shell(codes: np.ndarray, radius: int, alphabet: Alphabet):
    """Sequences at exactly Hamming distance ``radius`` (generator of rows)."""
    from itertools import combinations, product

    sym = alphabet.codes
    for sites in combinations(range(len(codes)), radius):
        choices = [[s for s in sym if s != codes[i]] for i in sites]
        for repl in product(*choices):
            out = codes.copy()
            out[list(sites)] = repl
            yield out


def db_bound(c, r, witnesses=(), bfs_budget: int = 10_000, alphabet: Alphabet | None = None,
             *, no_n: bool = False) -> DbBound:
    """Bounds on the Hamming distance from ``r`` to the nearest boundary point.

    ``witnesses`` holds sequences or ``(sequence, decision)`` pairs. The
    upper bound is the smallest Hamming distance to a witness classified
    differently from ``r``. The lower bound comes from a breadth-first search
    over Hamming shells: a shell is certified boundary-free once every
    member has been profiled. The search stops at the first boundary point
    (then the bound is exact) or when ``bfs_budget`` distinct
    classifications have been spent.
    """
    alphabet = _resolve(alphabet, no_n)
    r = as_sequence(r)
    memo = _Memo(c)
    d0 = int(memo.decide(r.codes[None, :])[0])

    upper = None
    for w in witnesses:
        if isinstance(w, tuple):
            w, dw = w
        else:
            dw = int(memo.decide(as_sequence(w).codes[None, :])[0])
        if int(dw) != d0:
            h = hamming_distance(r, w)
            upper = h if upper is None else min(upper, h)

    def on_boundary(row, d):
        nd = memo.decide(neighbor_codes(row, alphabet))
        return bool((nd != d).any())

    exhausted = -1
    radius = 0
    while radius <= len(r):
        for row in _shell(r.codes.copy(), radius, alphabet):
            if memo.evaluations >= bfs_budget:
                lower = exhausted + 1
                return DbBound(r, lower, upper, exhausted, memo.evaluations)
            d = int(memo.decide(row[None, :])[0])
            if on_boundary(row, d):
                upper = radius if upper is None else min(upper, radius)
                return DbBound(r, radius, upper, exhausted, memo.evaluations, exact=True)
        exhausted = radius
        radius += 1
    return DbBound(r, exhausted + 1, upper, exhausted, memo.evaluations)
