"""Named recipes that rebuild the case-study tables and figure data.

Genome FASTA files are not shipped, so by default each source genome is
simulated from its bundled triplet model at its recorded length and reads
are simulated from that. Users can pass their own genomes instead.

Seed derivation from the global seed ``s``:

* synthetic genome ``i``: ``s + i``
* reads from genome ``i``: ``s + 1000 + i``
* random-sequence datasets: ``s + 2000``, ``s + 2001``...
* exploration traces: ``s + 3000 + trace index`` (walks), ``s + 5000 + i`` (crawls)

Published reference values are attached to reports as comments only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import analysis as an
from .bayes import BayesClassifier, max_posteriors, posterior_entropies
from .boundary import NeighborProfile, profile_many
from .explore import boundary_crawl, efficiency_report, hamming_path_search, random_walk
from .readsim import ReadSimConfig, simulate_read_codes
from .seqspace import DNA, DNA_N, Sequence, decode, random_codes
from .triplet import TripletModel, bundled_models, hellinger, merge_models, null_quantile, simulate_genome


@dataclass
class Report:
    name: str
    header: list[str]
    rows: list[list]
    notes: list[str] = field(default_factory=list)


@dataclass
class ReadSet:
    codes: np.ndarray
    truth: np.ndarray
    ids: list[str]
    offsets: np.ndarray
    sources: list[str]

    def __len__(self):
        return len(self.codes)


def synthetic_read_set(models, seed: int, cfg: ReadSimConfig = ReadSimConfig(), genomes=None,
                       reads_per_source: int | None = None) -> ReadSet:
    """Reads from each source genome (simulated from its model unless given)."""
    codes, truth, ids, offsets = [], [], [], []
    for i, m in enumerate(models):
        if genomes is not None:
            g = genomes[i]
            g = g if isinstance(g, Sequence) else Sequence(str(g))
        else:
            length = m.genome_length or 30_000
            g = simulate_genome(m, length, rng=seed + i)
        r, off = simulate_read_codes(g.codes, cfg, np.random.default_rng(seed + 1000 + i), n=reads_per_source)
        codes.append(r)
        truth += [i] * len(r)
        ids += [f"{m.label}_{j}" for j in range(len(r))]
        offsets.append(off)
    return ReadSet(np.vstack(codes), np.array(truth), ids, np.concatenate(offsets), [m.label for m in models])


@dataclass
class Scores:
    decisions: np.ndarray
    posteriors: np.ndarray
    profiles: list[NeighborProfile]

    @cached_property
    def mp(self):
        return max_posteriors(self.posteriors)

    @cached_property
    def pe(self):
        return posterior_entropies(self.posteriors)

    @cached_property
    def ns(self):
        return np.array([p.ns for p in self.profiles])

    @cached_property
    def status(self):
        return np.array([p.boundary_status for p in self.profiles])

    @cached_property
    def neighbor_counts(self):
        return np.stack([p.neighbor_counts for p in self.profiles])


def score(c: BayesClassifier, codes: np.ndarray, *, no_n: bool = False, workers: int = 1,
          keep_decisions: bool = True) -> Scores:
    profiles = profile_many(c, codes, no_n=no_n, workers=workers, keep_decisions=keep_decisions)
    return Scores(np.array([p.decision for p in profiles]), c.posteriors(codes), profiles)


@dataclass
class Context:
    classifier: BayesClassifier = field(default_factory=lambda: BayesClassifier(bundled_models()))
    seed: int = 0
    workers: int = 1
    no_n: bool = False
    cfg: ReadSimConfig = ReadSimConfig()
    genomes: list | None = None

    @cached_property
    def reads(self) -> ReadSet:
        return synthetic_read_set(self.classifier.models, self.seed, self.cfg, self.genomes)

    @cached_property
    def scores(self) -> Scores:
        return score(self.classifier, self.reads.codes, no_n=self.no_n, workers=self.workers)

    @property
    def names(self):
        return self.classifier.names

    @property
    def correct(self):
        return self.scores.decisions == self.reads.truth


# --------------------------------------------------------------------------
# recipes
# --------------------------------------------------------------------------

PUBLISHED_DISTANCES = {("Adeno", "COVID"): 0.234, ("Adeno", "SARS"): 0.125, ("COVID", "SARS"): 0.161}
PUBLISHED_NULLQ = {"Adeno": 0.01941755, "COVID": 0.02094808, "SARS": 0.02065539}


def recipe_distances(ctx: Context, **_) -> list[Report]:
    ms = ctx.classifier.models
    rows = []
    for i in range(len(ms)):
        for j in range(i + 1, len(ms)):
            ref = PUBLISHED_DISTANCES.get((ms[i].label, ms[j].label), "")
            rows.append([ms[i].label, ms[j].label, hellinger(ms[i].p3, ms[j].p3), ref])
    return [Report("distances", ["model_a", "model_b", "hellinger", "published"], rows)]


def recipe_nullq(ctx: Context, replicates: int = 1000, q: float = 0.999, method: str = "markov", **_) -> list[Report]:
    rows = []
    for i, m in enumerate(ctx.classifier.models):
        length = m.genome_length or 30_000
        v = null_quantile(m, length, replicates, q, seed=ctx.seed + 10_000 * i, method=method)
        rows.append([m.label, length, replicates, q, v, PUBLISHED_NULLQ.get(m.label, "")])
    return [Report("null_quantiles", ["model", "genome_length", "replicates", "q", "quantile", "published"], rows,
                   [f"method={method}"])]


def recipe_table1(ctx: Context, **_) -> list[Report]:
    cm = an.confusion_matrix(ctx.reads.truth, ctx.scores.decisions, len(ctx.names))
    rows = [[src, *map(int, cm.counts[i]), int(cm.row_sums[i])] for i, src in enumerate(ctx.names)]
    rows.append(["Sum", *map(int, cm.col_sums), int(cm.counts.sum())])
    return [Report("confusion", ["source", *ctx.names, "sum"], rows,
                   [f"correct_rate={cm.correct_rate:.6f}", "published: correct_rate=0.8155 (Mason reads)"])]


def recipe_table2(ctx: Context, **_) -> list[Report]:
    k = len(ctx.names)
    st = ctx.scores.status
    out = []
    groups = [
        ("source", [ctx.names[t] for t in ctx.reads.truth], ctx.names,
         "published tables give on/off chi2 145.61 (source), 242.35 (decision)"),
        ("decision", [ctx.names[d] for d in ctx.scores.decisions], ctx.names,
         "published tables give on/off chi2 145.61 (source), 242.35 (decision)"),
        ("correct", ["Yes" if c else "No" for c in ctx.correct], ["No", "Yes"],
         "published: on/off chi2 = 726.65 (2x2, continuity-corrected)"),
    ]
    for name, labels, order, ref in groups:
        order = [o for o in order if o in set(labels)]
        tab = an.crosstab_boundary(labels, st, k, row_order=order)
        out.append(Report(f"boundary_by_{name}", [name, *map(str, range(k)), "sum"], tab.rows(),
                          [_chi_note(tab), ref]))
    ns, ok = ctx.scores.ns, ctx.correct
    summary = [
        ["reads", len(ns)],
        ["boundary_fraction", float(np.mean(st > 0))],
        ["triple_points", int(np.sum(st == 2))],
        ["boundary_fraction_correct", float(np.mean(st[ok] > 0))],
        ["boundary_fraction_incorrect", float(np.mean(st[~ok] > 0)) if (~ok).any() else ""],
        ["ks_ns_correct_vs_incorrect", an.ks_statistic(ns[ok], ns[~ok]) if (~ok).any() else ""],
        ["min_concordant_neighbors", int(min(p.neighbor_counts[p.decision] for p in ctx.scores.profiles))],
    ]
    out.append(Report("boundary_summary", ["statistic", "value"], summary,
                      ["published: boundary 30.52%, triple points 190/5869, 22.81% correct vs 64.66% incorrect, "
                       "min concordant 11"]))
    return out


def _chi_note(tab) -> str:
    """Chi-square over all status columns and over on/off boundary."""
    parts = []
    for label, t, corr in (("chi2_status", tab, False), ("chi2_on_off", an.collapse_status(tab), True)):
        try:
            parts.append(f"{label}={an.chi_square_statistic(t, correction=corr):.4f}")
        except ValueError:
            parts.append(f"{label}=undefined")
    return " ".join(parts)


def recipe_fig1(ctx: Context, **_) -> list[Report]:
    counts = ctx.scores.neighbor_counts
    rows = []
    for rid, t, row in zip(ctx.reads.ids, ctx.reads.truth, counts):
        x, y = an.barycentric_coords(row / row.sum())
        rows.append([rid, x, y, ctx.names[t]])
    return [Report("barycentric", ["read_id", "x", "y", "source"], rows,
                   ["neighbor decision distributions; apex = class 0"])]


def recipe_ns_ecdf(ctx: Context, **_) -> list[Report]:
    ns = ctx.scores.ns
    rows = []
    for group, labels in (("source", [ctx.names[t] for t in ctx.reads.truth]),
                          ("decision", [ctx.names[d] for d in ctx.scores.decisions]),
                          ("correct", ["Yes" if c else "No" for c in ctx.correct])):
        labels = np.array(labels)
        for lab in sorted(set(labels)):
            vals, f = an.ecdf(ns[labels == lab])
            rows += [[group, lab, v, p] for v, p in zip(vals, f)]
    return [Report("ns_ecdf", ["grouping", "group", "ns", "ecdf"], rows)]


def recipe_fig5(ctx: Context, ks=(1, 2, 3, 5, 10, 15, 20, 30, 40, 60, 80, 100, 150, 200, 300), **_) -> list[Report]:
    full = len(ctx.scores.profiles[0].neighbor_decisions)
    ks = sorted({k for k in ks if k < full} | {full})
    rr = an.ns_sampling_rrmse(ctx.scores.profiles, ks, rng=ctx.seed + 4000)
    return [Report("rrmse", ["k", "rrmse"], [[k, v] for k, v in rr],
                   ["published: RRMSE about 5% at k=20, little gain past 80"])]


def recipe_table3(ctx: Context, **_) -> list[Report]:
    s = ctx.scores
    fit = an.quadratic_fit(s.ns, s.mp, s.decisions)
    rows = []
    for c, (a, b, g) in sorted(fit.coefficients.items()):
        rows.append([ctx.names[c], a, b, g])
    pe_fit = an.quadratic_fit(s.ns, s.pe, s.decisions)
    notes = [f"mp_r2={fit.r_squared:.6f} mp_adj_r2={fit.adj_r_squared:.6f} mp_mse={fit.mse:.6g}",
             f"pe_adj_r2={pe_fit.adj_r_squared:.6f}",
             f"corr(mp,ns)={an.pearson(s.mp, s.ns):.6f}",
             "published: adj R2 0.8341 (MP), 0.6928 (PE); corr 0.8488; "
             "alpha/beta/gamma Adeno 2.07873/-2.20866/1.09297"]
    for c in range(len(ctx.names)):
        m = s.decisions == c
        if m.sum() > 2:
            notes.append(f"corr(mp,ns | decision={ctx.names[c]})={an.pearson(s.mp[m], s.ns[m]):.6f}")
    return [Report("quadratic_fit", ["decision", "alpha", "beta", "gamma"], rows, notes)]


def recipe_roc(ctx: Context, **_) -> list[Report]:
    s, ok = ctx.scores, ctx.correct
    mp, nsr = an.roc_curve(s.mp, ok), an.roc_curve(s.ns, ok)
    rows = [["MP", t, f, tp] for t, f, tp in zip(mp.thresholds, mp.fpr, mp.tpr)]
    rows += [["NS", t, f, tp] for t, f, tp in zip(nsr.thresholds, nsr.fpr, nsr.tpr)]
    return [Report("roc", ["score", "threshold", "fpr", "tpr"], rows,
                   [f"auc_mp={mp.auc:.6f} auc_ns={nsr.auc:.6f}", "published: the two curves are essentially identical"])]


def _walk_traces(ctx, idx, steps, variant, seed_base):
    return [random_walk(ctx.classifier, Sequence.from_codes(ctx.reads.codes[j]), steps, seed=seed_base + i,
                        no_n=ctx.no_n, variant=variant, origin_id=ctx.reads.ids[j]) for i, j in enumerate(idx)]


def recipe_table7(ctx: Context, n_origins: int = 25, walks_per_decision: int = 100, walk_steps: int = 2000,
                  n_crawls: int = 100, crawl_length: int = 250, max_targets: int | None = None, **_) -> list[Report]:
    rng = np.random.default_rng(ctx.seed + 2500)
    c, reads, dec = ctx.classifier, ctx.reads, ctx.scores.decisions
    k = len(ctx.names)
    traces, per_origin = [], []
    for i in rng.choice(len(reads), size=min(n_origins, len(reads)), replace=False):
        targets = reads.codes[dec != dec[i]]
        if max_targets is not None:
            targets = targets[:max_targets]
        t = hamming_path_search(c, Sequence.from_codes(reads.codes[i]), [Sequence.from_codes(x) for x in targets],
                                origin_id=reads.ids[i])
        traces.append(t)
        per_origin.append([reads.ids[i], ctx.names[dec[i]], len(t.boundary_points()), t.classifier_evaluations])

    walk_origins = np.concatenate([rng.choice(np.nonzero(dec == d)[0], size=walks_per_decision)
                                   for d in range(k) if (dec == d).any()])
    traces += _walk_traces(ctx, walk_origins, walk_steps, "random origin", ctx.seed + 3000)
    bnd = np.nonzero(ctx.scores.status > 0)[0]
    bnd_origins = np.concatenate([rng.choice(bnd[dec[bnd] == d], size=walks_per_decision)
                                  for d in range(k) if (dec[bnd] == d).any()])
    traces += _walk_traces(ctx, bnd_origins, walk_steps, "boundary origin", ctx.seed + 3000 + len(walk_origins))

    crawl_rows = []
    for i, j in enumerate(rng.choice(bnd, size=n_crawls)):
        t = boundary_crawl(c, Sequence.from_codes(reads.codes[j]), crawl_length, seed=ctx.seed + 5000 + i,
                           no_n=ctx.no_n, start_decision=int(dec[j]), origin_id=reads.ids[j])
        traces.append(t)
        crawl_rows.append([reads.ids[j], len(t), t.classifier_evaluations, *map(int, t.decision_counts(k)),
                           t.n_decisions, int(t.terminated_early)])

    walks = [t for t in traces if t.strategy == "random_walk"]
    eff = [[r.strategy, r.variant, r.traces, r.evaluations, r.boundary_points, r.efficiency]
           for r in efficiency_report(traces)]
    return [
        Report("efficiency", ["strategy", "variant", "traces", "evaluations", "boundary_points", "efficiency"], eff,
               ["published: Hamming 16.73%, walks 5.82% / 5.87%, crawls 0.25%"]),
        Report("hamming_paths", ["origin_id", "decision", "boundary_points", "evaluations"], per_origin),
        Report("walks", ["origin_id", "variant", "length", "evaluations", "boundary_points", "crossings"],
               [[t.origin_id, t.variant, len(t), t.classifier_evaluations, len(t.boundary_points()),
                 len(t.boundary_pairs)] for t in walks],
               [f"walks with no crossing: {sum(1 for t in walks if not t.boundary_pairs)}"]),
        Report("crawls", ["origin_id", "length", "evaluations", *[f"n_{n}" for n in ctx.names], "n_decisions",
                          "terminated_early"], crawl_rows,
               ["published: 64/100 crawls ran the full 250 steps; 58/100 saw all three decisions"]),
    ]


PUBLISHED_TABLE8 = {
    "ReadsOriginal": (32.94, 34.09, 32.97, 69.48, 30.52),
    "ReadsNew": (32.43, 33.82, 33.75, 68.7, 31.3),
    "ReadsMixed2": (33.86, 33.59, 32.55, 69.69, 30.31),
    "ReadsMixed1": (48.1, 26.2, 25.7, 74.1, 25.9),
    "ReadsForeign": (92.767, 2.933, 4.300, 87.35, 12.65),
    "Random6K": (90.8333, 0.3833, 8.7833, 78.75, 21.25),
}


def dataset_row(ctx: Context, name: str, codes: np.ndarray) -> list:
    dec = ctx.classifier.classify_codes(codes)
    prof = profile_many(ctx.classifier, codes, no_n=ctx.no_n, workers=ctx.workers)
    k = len(ctx.names)
    shares = np.bincount(dec, minlength=k) / len(dec) * 100
    bnd = np.mean([p.on_boundary for p in prof]) * 100
    ref = PUBLISHED_TABLE8.get(name, ())
    return [name, len(codes), *shares.tolist(), 100 - bnd, bnd, " ".join(map(str, ref))]


def recipe_table8(ctx: Context, foreign: Sequence | None = None, n_random: int = 6000, **_) -> list[Report]:
    rows = [dataset_row(ctx, "ReadsOriginal", ctx.reads.codes)]
    new = synthetic_read_set(ctx.classifier.models, ctx.seed + 100, ctx.cfg, ctx.genomes, reads_per_source=2000)
    rows.append(dataset_row(ctx, "ReadsNew", new.codes))
    if foreign is not None:
        fr, _ = simulate_read_codes(foreign.codes, ctx.cfg, np.random.default_rng(ctx.seed + 1500), n=6000)
        rows.append(dataset_row(ctx, "ReadsMixed2", np.vstack([ctx.reads.codes, fr[:100]])))
        rows.append(dataset_row(ctx, "ReadsMixed1", np.vstack([ctx.reads.codes, fr[:2000]])))
        rows.append(dataset_row(ctx, "ReadsForeign", fr))
    rnd = random_codes(n_random, ctx.cfg.read_length, DNA, rng=ctx.seed + 2000)
    rows.append(dataset_row(ctx, "Random6K", rnd))
    notes = [f"neighbor graph: {'303 (no N)' if ctx.no_n else '404 (with N)'} neighbors per length-101 read"]
    if foreign is None:
        notes.append("foreign-source rows skipped: pass a foreign genome FASTA to build them")
    return [Report("datasets", ["dataset", "count", *[f"decision_{n}" for n in ctx.names],
                                "boundary_no", "boundary_yes", "published"], rows, notes)]


def vote_split(c: BayesClassifier, n: int, seed: int, length: int = 101) -> dict:
    """How many class-0 decisions on random sequences move to a merged rival class."""
    x = random_codes(n, length, DNA, rng=seed)
    d = c.classify_codes(x)
    first = d == 0
    merged = merge_models("+".join(m.label for m in c.models[1:]), c.models[1:])
    d2 = BayesClassifier([c.models[0], merged]).classify_codes(x)
    post = c.posteriors(x)
    return {
        "sequences": n,
        "class0": int(first.sum()),
        "flipped_pooled_model": int((first & (d2 == 1)).sum()),
        "flipped_posterior_sum": int((first & (post[:, 1:].sum(axis=1) > post[:, 0])).sum()),
    }


def recipe_votesplit(ctx: Context, n: int = 30_000, **_) -> list[Report]:
    r = vote_split(ctx.classifier, n, ctx.seed + 2001)
    rows = [[k, v] for k, v in r.items()]
    rows.append(["flip_fraction_pooled_model", r["flipped_pooled_model"] / max(r["class0"], 1)])
    return [Report("vote_split", ["statistic", "value"], rows, ["published: 77 of 27,492 Adeno decisions change"])]


def recipe_table8_random(ctx: Context, n_random: int = 6000, **_) -> list[Report]:
    rnd = random_codes(n_random, ctx.cfg.read_length, DNA, rng=ctx.seed + 2000)
    row = dataset_row(ctx, "Random6K", rnd)
    return [Report("random6k", ["dataset", "count", *[f"decision_{n}" for n in ctx.names],
                                "boundary_no", "boundary_yes", "published"], [row])]


RECIPES = {
    "distances": recipe_distances,
    "nullq": recipe_nullq,
    "table1": recipe_table1,
    "table2": recipe_table2,
    "fig1": recipe_fig1,
    "ns-ecdf": recipe_ns_ecdf,
    "fig5": recipe_fig5,
    "table3": recipe_table3,
    "roc": recipe_roc,
    "table7": recipe_table7,
    "table8": recipe_table8,
    "random6k": recipe_table8_random,
    "votesplit": recipe_votesplit,
}


def run_recipe(name: str, ctx: Context, **params) -> list[Report]:
    if name not in RECIPES:
        raise KeyError(f"unknown recipe {name!r}; choose from {sorted(RECIPES)}")
    return RECIPES[name](ctx, **params)
