"""Three ways of finding boundary points: Hamming paths, random walks, crawls.

Every strategy returns an :class:`ExplorationTrace` whose
``classifier_evaluations`` follows a fixed accounting rule:

* Hamming paths count distinct sequences classified (paths from one origin
  share a cache).
* Random walks count one evaluation per visited position, ``steps + 1``.
* Crawls count every neighbor of every crawl point, so a crawl of length
  ``n`` over a graph with ``M`` neighbors per point costs ``M * n``.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .bayes import decide_codes
from .boundary import _neighbor_decisions, _resolve
from .seqspace import Alphabet, Sequence, as_sequence, decode, hamming_path_codes, neighbor_at, neighbor_codes, neighbor_count

STRATEGIES = ("hamming_path", "random_walk", "boundary_crawl")


@dataclass(frozen=True)
class BoundaryPair:
    a: Sequence
    b: Sequence
    decision_a: int
    decision_b: int


@dataclass
class ExplorationTrace:
    """Record of one exploration run.

    ``visited`` is an ``(n, L)`` code array. For walks and crawls it is the
    path in order (successive rows are neighbors); for Hamming-path search
    it lists each distinct sequence classified, in first-seen order.
    """

    strategy: str
    visited: np.ndarray = field(repr=False)
    decisions: np.ndarray = field(repr=False)
    boundary_pairs: list[BoundaryPair] = field(repr=False)
    classifier_evaluations: int
    terminated_early: bool = False
    seed: int | None = None
    origin_id: str = ""
    variant: str = ""
    # visited rows found on the boundary by full neighbor profiling
    profiled_boundary: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")

    def __len__(self) -> int:
        return len(self.visited)

    def boundary_points(self) -> set[str]:
        pts = {str(p.a) for p in self.boundary_pairs} | {str(p.b) for p in self.boundary_pairs}
        if self.profiled_boundary is not None:
            pts.update(decode(self.visited[i]) for i in self.profiled_boundary)
        return pts

    def decision_counts(self, k: int) -> np.ndarray:
        return np.bincount(self.decisions, minlength=k)

    @property
    def n_decisions(self) -> int:
        return int(np.unique(self.decisions).size)


def _pairs(rows: np.ndarray, dec: np.ndarray, idx) -> list[BoundaryPair]:
    return [BoundaryPair(Sequence.from_codes(rows[i]), Sequence.from_codes(rows[i + 1]),
                         int(dec[i]), int(dec[i + 1])) for i in idx]


def hamming_path_search(c, origin, targets, *, origin_id: str = "") -> ExplorationTrace:
    """Walk the left-to-right Hamming path from ``origin`` to each target.

    Each adjacent pair of path sequences with different decisions is a
    boundary pair; since the endpoints differ, every path yields at least
    one. Classifications are shared across all paths from the origin.
    """
    origin = as_sequence(origin)
    o = origin.codes
    paths = []
    for t in targets:
        t = as_sequence(t).codes
        if len(t) != len(o):
            raise ValueError(f"length mismatch: origin {len(o)}, target {len(t)}")
        if np.array_equal(t, o):
            raise ValueError("target equals origin")
        paths.append(hamming_path_codes(o, t))
    if not paths:
        return ExplorationTrace("hamming_path", o[None, :].copy(), decide_codes(c, o[None, :]), [], 1,
                                origin_id=origin_id)
    rows = np.concatenate(paths)
    uniq, first, inverse = np.unique(rows.view(np.dtype((np.void, rows.shape[1]))).ravel(),
                                     return_index=True, return_inverse=True)
    order = np.argsort(first)                    # first-seen order
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    distinct = rows[first[order]]
    dec_distinct = decide_codes(c, distinct)
    dec = dec_distinct[rank[inverse.ravel()]]

    pairs: list[BoundaryPair] = []
    start = 0
    for p in paths:
        d = dec[start:start + len(p)]
        if d[0] == d[-1]:
            raise ValueError(f"origin and target {decode(p[-1])} share decision {d[0]}")
        pairs.extend(_pairs(p, d, np.nonzero(d[:-1] != d[1:])[0]))
        start += len(p)
    return ExplorationTrace("hamming_path", distinct, dec_distinct, pairs, len(distinct),
                            origin_id=origin_id)


def random_walk(c, origin, steps: int, rng=None, alphabet: Alphabet | None = None, *,
                no_n: bool = False, full_profile: bool = False, seed: int | None = None,
                origin_id: str = "", variant: str = "") -> ExplorationTrace:
    """Uniform random walk on the Hamming graph.

    A boundary pair is recorded whenever the decision changes between
    consecutive positions; a point whose other neighbors disagree goes
    unnoticed unless ``full_profile`` also profiles every visited point.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    alphabet = _resolve(alphabet, no_n)
    rng = np.random.default_rng(seed if rng is None else rng)
    cur = as_sequence(origin).codes.copy()
    walk = np.empty((steps + 1, len(cur)), dtype=np.int8)
    walk[0] = cur
    for s in range(1, steps + 1):
        cur = neighbor_at(cur, int(rng.integers(neighbor_count(cur, alphabet))), alphabet)
        walk[s] = cur
    dec = decide_codes(c, walk)
    pairs = _pairs(walk, dec, np.nonzero(dec[:-1] != dec[1:])[0])
    evaluations = steps + 1
    flagged = None
    if full_profile:
        hits = []
        for i, row in enumerate(walk):
            nd = _neighbor_decisions(c, row, alphabet)
            evaluations += len(nd)
            if (nd != dec[i]).any():
                hits.append(i)
        flagged = np.array(hits, dtype=np.int64)
    return ExplorationTrace("random_walk", walk, dec, pairs, evaluations, seed=seed,
                            origin_id=origin_id, variant=variant, profiled_boundary=flagged)


def boundary_crawl(c, start, max_steps: int = 250, rng=None, alphabet: Alphabet | None = None, *,
                   no_n: bool = False, seed: int | None = None, origin_id: str = "",
                   start_decision: int | None = None) -> ExplorationTrace:
    """Crawl along the boundary through unvisited, differently-classified neighbors.

    At each crawl point all neighbors are classified. Any unvisited
    neighbor whose decision differs from the current point is itself a
    boundary point (the current point is its differing neighbor), so the
    next point is drawn uniformly from those. The crawl stops when it holds
    ``max_steps`` points or when no candidate is left (a dead end, flagged
    by ``terminated_early``). The start point's own classification is
    taken as known and not counted.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    alphabet = _resolve(alphabet, no_n)
    rng = np.random.default_rng(seed if rng is None else rng)
    cur = as_sequence(start).codes.copy()
    d_cur = int(decide_codes(c, cur[None, :])[0]) if start_decision is None else int(start_decision)
    visited, decisions = [cur], [d_cur]
    seen = {cur.tobytes()}
    evaluations = 0
    early = False
    while True:
        nbrs = neighbor_codes(cur, alphabet)
        nd = _neighbor_decisions(c, cur, alphabet)
        evaluations += len(nbrs)
        differ = np.nonzero(nd != d_cur)[0]
        if len(visited) == 1 and differ.size == 0:
            raise ValueError(f"start {decode(cur)} is not on the boundary")
        if len(visited) >= max_steps:
            break
        cand = [i for i in differ if nbrs[i].tobytes() not in seen]
        if not cand:
            early = True
            break
        pick = cand[int(rng.integers(len(cand)))]
        cur, d_cur = nbrs[pick], int(nd[pick])
        seen.add(cur.tobytes())
        visited.append(cur)
        decisions.append(d_cur)
    rows = np.stack(visited)
    dec = np.array(decisions, dtype=np.int64)
    pairs = _pairs(rows, dec, range(len(rows) - 1))
    return ExplorationTrace("boundary_crawl", rows, dec, pairs, evaluations, terminated_early=early,
                            seed=seed, origin_id=origin_id)


@dataclass(frozen=True)
class EfficiencyRow:
    strategy: str
    variant: str
    traces: int
    evaluations: int
    boundary_points: int

    @property
    def efficiency(self) -> float:
        return self.boundary_points / self.evaluations if self.evaluations else 0.0


def efficiency_report(traces) -> list[EfficiencyRow]:
    """Per strategy (and variant): evaluations, distinct boundary points, efficiency."""
    traces = list(traces)
    if not traces:
        raise ValueError("no traces")
    groups: dict[tuple[str, str], list[ExplorationTrace]] = defaultdict(list)
    for t in traces:
        groups[(t.strategy, t.variant)].append(t)
    rows = []
    for (strategy, variant), ts in sorted(groups.items(), key=lambda kv: (STRATEGIES.index(kv[0][0]), kv[0][1])):
        points: set[str] = set()
        for t in ts:
            points |= t.boundary_points()
        rows.append(EfficiencyRow(strategy, variant, len(ts), sum(t.classifier_evaluations for t in ts), len(points)))
    return rows
