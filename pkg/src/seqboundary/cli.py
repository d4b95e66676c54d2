"""Command-line interface: ``seqboundary <command> ...``.

Every CSV written carries ``#`` comment lines with the package version,
the seed and the parameters. Bodies are deterministic for a fixed seed and
do not depend on ``--workers``.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import analysis as an
from .bayes import UndefinedPosteriorError, max_posteriors, posterior_entropies
from .boundary import profile_many, sampled_ns
from .experiments import RECIPES, Context, Scores, run_recipe
from .explore import boundary_crawl, hamming_path_search, random_walk
from .io import header_lines, load_classifier, write_csv
from .readsim import ReadSimConfig, parse_read_header, simulate_reads
from .seqspace import DNA, Sequence, decode, random_codes, read_sequences, stack_codes
from .triplet import BUNDLED, TRIPLETS, TripletModel, bundled_model, hellinger, load_model, null_quantile, save_model, simulate_genome


class CliError(Exception):
    """Bad user input: reported on stderr with exit status 1."""


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _read_id(header: str) -> str:
    f = parse_read_header(header)
    if "src" in f and "idx" in f:
        return f"{f['src']}_{f['idx']}"
    return header.split()[0]


def _load_reads(path):
    recs = read_sequences(path)
    if not recs:
        raise CliError(f"{path}: no sequences")
    lengths = {len(s) for _, s in recs}
    if len(lengths) > 1:
        raise CliError(f"{path}: reads must share one length, found {sorted(lengths)}")
    return recs


def _one_sequence(path) -> Sequence:
    recs = read_sequences(path)
    if not recs:
        raise CliError(f"{path}: no sequences")
    if len(recs) == 1:
        return recs[0][1]
    return Sequence("".join(str(s) for _, s in recs))


def _truth(recs, names) -> np.ndarray:
    """Class index of each read from its ``src=`` header field."""
    lookup = {n.lower(): i for i, n in enumerate(names)}
    out = []
    for h, _ in recs:
        src = parse_read_header(h).get("src")
        if src is None:
            raise CliError(f"read {h!r} has no src= field; ground truth is needed")
        if src.lower() not in lookup:
            raise CliError(f"read source {src!r} matches no model label {list(names)}")
        out.append(lookup[src.lower()])
    return np.array(out)


def _emit(args, name, header, rows, **params):
    comments = header_lines(args.command_path, args.seed, **params)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        write_csv(Path(args.out) / f"{name}.csv", header, rows, comments)
    else:
        write_csv(sys.stdout, header, rows, comments)


def _classifier(args):
    prior = [float(v) for v in args.prior.split(",")] if getattr(args, "prior", None) else None
    return load_classifier(getattr(args, "models", None), getattr(args, "bundle", None), prior)


def _model(ref: str) -> TripletModel:
    """A model JSON path, or a bundled model name when no such file exists."""
    if ref.lower() in BUNDLED and not Path(ref).exists():
        return bundled_model(ref)
    return load_model(ref)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_model(args):
    if args.action == "distance":
        a, b = _model(args.a), _model(args.b)
        print(f"{hellinger(a.p3, b.p3):.10g}")
    elif args.action == "estimate":
        g = _one_sequence(args.genome)
        m = TripletModel.from_sequence(args.label, g, pseudocount=args.pseudocount)
        if args.output:
            save_model(m, args.output)
        else:
            print(json.dumps(m.to_dict(), indent=1))
    elif args.action == "show":
        m = _model(args.model)
        _emit(args, "model", ["triplet", "p3"], [[t, float(p)] for t, p in zip(TRIPLETS, m.p3)], model=m.label)
    elif args.action == "null-quantile":
        m = _model(args.model)
        length = args.length or m.genome_length
        if not length:
            raise CliError("model has no genome_length; pass --length")
        v = null_quantile(m, length, args.replicates, args.q, seed=args.seed, method=args.method)
        print(f"{v:.10g}")
    return 0


def cmd_classify(args):
    c = _classifier(args)
    recs = _load_reads(args.reads)
    codes = stack_codes([s for _, s in recs])
    post = c.posteriors(codes)
    dec = c.classify_codes(codes)
    mp, pe = max_posteriors(post), posterior_entropies(post)
    rows = [[_read_id(h), int(d), *map(float, p), float(m), float(e)]
            for (h, _), d, p, m, e in zip(recs, dec, post, mp, pe)]
    header = ["read_id", "decision", *[f"p_{i}" for i in range(len(c.labels))], "max_posterior", "entropy"]
    _emit(args, "classify", header, rows, reads=args.reads, classes=",".join(c.names))
    return 0


def cmd_ns(args):
    c = _classifier(args)
    recs = _load_reads(args.reads)
    codes = stack_codes([s for _, s in recs])
    k = len(c.labels)
    if args.sample:
        dec = c.classify_codes(codes)
        rows = []
        for i, ((h, s), d) in enumerate(zip(recs, dec)):
            est = sampled_ns(c, s, args.sample, rng=args.seed + i, no_n=args.no_n, decision=int(d))
            rows.append([_read_id(h), int(d), est.k, est.ns_estimate, est.k + 1])
        header = ["read_id", "decision", "k", "ns", "evaluations"]
    else:
        profs = profile_many(c, codes, no_n=args.no_n, workers=args.workers)
        rows = [[_read_id(h), p.decision, *map(int, p.neighbor_counts), p.ns, p.boundary_status, p.evaluations]
                for (h, _), p in zip(recs, profs)]
        header = ["read_id", "decision", *[f"n_class_{i}" for i in range(k)], "ns", "boundary_status", "evaluations"]
    _emit(args, "ns", header, rows, reads=args.reads, sample=args.sample, no_n=args.no_n)
    return 0


def cmd_explore(args):
    c = _classifier(args)
    origins = _load_reads(args.origins)
    traces = []
    if args.strategy == "hamming":
        if not args.targets:
            raise CliError("explore hamming needs --targets")
        targets = _load_reads(args.targets)
        tcodes = stack_codes([s for _, s in targets])
        tdec = c.classify_codes(tcodes)
        for h, s in origins:
            d = int(c.classify_codes(s.codes[None, :])[0])
            keep = [Sequence.from_codes(t) for t, td in zip(tcodes, tdec) if td != d]
            traces.append(hamming_path_search(c, s, keep, origin_id=_read_id(h)))
    elif args.strategy == "walk":
        for i, (h, s) in enumerate(origins):
            traces.append(random_walk(c, s, args.steps, seed=args.seed + i, no_n=args.no_n, origin_id=_read_id(h)))
    else:
        for i, (h, s) in enumerate(origins):
            try:
                traces.append(boundary_crawl(c, s, args.max_steps, seed=args.seed + i, no_n=args.no_n,
                                             origin_id=_read_id(h)))
            except ValueError as exc:
                print(f"seqboundary: skipping {_read_id(h)}: {exc}", file=sys.stderr)
    rows = [[t.origin_id, len(t), t.classifier_evaluations, len(t.boundary_points()), t.n_decisions,
             int(t.terminated_early)] for t in traces]
    _emit(args, f"explore_{args.strategy}",
          ["origin_id", "length", "evaluations", "boundary_points", "n_decisions", "terminated_early"], rows,
          origins=args.origins, steps=args.steps if args.strategy == "walk" else None,
          max_steps=args.max_steps if args.strategy == "crawl" else None, no_n=args.no_n)
    if args.pairs:
        comments = header_lines(args.command_path, args.seed, origins=args.origins)
        write_csv(args.pairs, ["origin_id", "seq_a", "decision_a", "seq_b", "decision_b"],
                  [[t.origin_id, str(p.a), p.decision_a, str(p.b), p.decision_b]
                   for t in traces for p in t.boundary_pairs], comments)
    return 0


def cmd_simulate(args):
    out = args.output
    if args.kind == "reads":
        g = _one_sequence(args.genome)
        cfg = ReadSimConfig(args.length, args.coverage, args.sub_rate, args.n_rate, args.seed)
        source = args.source or Path(args.genome).stem
        reads = simulate_reads(g, cfg, source=source)
        _write_fasta(out, header_lines(args.command_path, args.seed, genome=args.genome, coverage=args.coverage,
                                       length=args.length),
                     [(r.header(i), str(r.seq)) for i, r in enumerate(reads)])
    elif args.kind == "genome":
        m = _model(args.model)
        length = args.length or m.genome_length
        if not length:
            raise CliError("model has no genome_length; pass --length")
        g = simulate_genome(m, length, rng=args.seed)
        _write_fasta(out, header_lines(args.command_path, args.seed, model=args.model, length=length),
                     [(f"{m.label} simulated length={length}", str(g))])
    else:
        codes = random_codes(args.n, args.length, DNA, rng=args.seed)
        _write_fasta(out, header_lines(args.command_path, args.seed, n=args.n, length=args.length),
                     [(f"random_{i}", decode(r)) for i, r in enumerate(codes)])
    return 0


def _write_fasta(path, comments, records):
    # comment lines use ';' so FASTA readers that skip them stay happy
    text = "".join(f";{c[1:]}\n" for c in comments) + "".join(f">{h}\n{s}\n" for h, s in records)
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _scored(args, c):
    recs = _load_reads(args.reads)
    truth = _truth(recs, c.names)
    codes = stack_codes([s for _, s in recs])
    keep = args.what == "rrmse"
    profs = profile_many(c, codes, no_n=args.no_n, workers=args.workers, keep_decisions=keep)
    s = Scores(np.array([p.decision for p in profs]), c.posteriors(codes), profs)
    return recs, truth, s


def cmd_analyze(args):
    c = _classifier(args)
    recs, truth, s = _scored(args, c)
    ids = [_read_id(h) for h, _ in recs]
    correct = s.decisions == truth
    names = c.names
    params = dict(reads=args.reads, no_n=args.no_n)
    if args.what == "roc":
        mp, ns = an.roc_curve(s.mp, correct), an.roc_curve(s.ns, correct)
        rows = [["MP", t, f, tp] for t, f, tp in zip(mp.thresholds, mp.fpr, mp.tpr)]
        rows += [["NS", t, f, tp] for t, f, tp in zip(ns.thresholds, ns.fpr, ns.tpr)]
        _emit(args, "roc", ["score", "threshold", "fpr", "tpr"], rows, auc_mp=f"{mp.auc:.6f}",
              auc_ns=f"{ns.auc:.6f}", **params)
    elif args.what == "barycentric":
        if len(names) != 3:
            raise CliError("barycentric coordinates need exactly 3 classes")
        rows = []
        for rid, t, cnt in zip(ids, truth, s.neighbor_counts):
            x, y = an.barycentric_coords(cnt / cnt.sum())
            rows.append([rid, x, y, names[t]])
        _emit(args, "barycentric", ["read_id", "x", "y", "source"], rows, **params)
    elif args.what == "confusion":
        cm = an.confusion_matrix(truth, s.decisions, len(names))
        rows = [[names[i], *map(int, cm.counts[i]), int(cm.row_sums[i])] for i in range(len(names))]
        rows.append(["Sum", *map(int, cm.col_sums), int(cm.counts.sum())])
        _emit(args, "confusion", ["source", *names, "sum"], rows, correct_rate=f"{cm.correct_rate:.6f}", **params)
    elif args.what == "crosstab":
        labels = ["Yes" if ok else "No" for ok in correct]
        order = [o for o in ("No", "Yes") if o in labels]
        tab = an.crosstab_boundary(labels, s.status, len(names), row_order=order)
        chi = {}
        for key, t, corr in (("chi2_status", tab, False), ("chi2_on_off", an.collapse_status(tab), True)):
            try:
                chi[key] = f"{an.chi_square_statistic(t, correction=corr):.6f}"
            except ValueError:
                chi[key] = "undefined"
        _emit(args, "crosstab", ["correct", *map(str, range(len(names))), "sum"], tab.rows(), **chi, **params)
    elif args.what == "quadfit":
        fit = an.quadratic_fit(s.ns, s.mp, s.decisions)
        rows = [[names[k], *v] for k, v in sorted(fit.coefficients.items())]
        _emit(args, "quadfit", ["decision", "alpha", "beta", "gamma"], rows,
              r2=f"{fit.r_squared:.6f}", adj_r2=f"{fit.adj_r_squared:.6f}", **params)
    elif args.what == "rrmse":
        ks = [int(k) for k in args.ks.split(",")]
        rr = an.ns_sampling_rrmse(s.profiles, ks, rng=args.seed)
        _emit(args, "rrmse", ["k", "rrmse"], [[k, v] for k, v in rr], ks=args.ks, **params)
    elif args.what == "ks":
        if correct.all() or (~correct).all():
            raise CliError("KS needs both correct and incorrect decisions")
        d = an.ks_statistic(s.ns[correct], s.ns[~correct])
        _emit(args, "ks", ["sample_a", "sample_b", "ks"], [["ns_correct", "ns_incorrect", d]], **params)
    return 0


def cmd_replicate(args):
    c = _classifier(args)
    cfg = ReadSimConfig(coverage=args.coverage)
    genomes = [_one_sequence(p) for p in args.genomes.split(",")] if args.genomes else None
    if genomes is not None and len(genomes) != len(c.labels):
        raise CliError(f"--genomes needs one FASTA per class ({len(c.labels)})")
    ctx = Context(c, seed=args.seed, workers=args.workers, no_n=args.no_n, cfg=cfg, genomes=genomes)
    params = {}
    if args.recipe == "nullq":
        params = dict(replicates=args.replicates, method=args.method)
    elif args.recipe == "table8" and args.foreign:
        params = dict(foreign=_one_sequence(args.foreign))
    elif args.recipe == "votesplit":
        params = dict(n=args.n)
    elif args.recipe == "table7" and args.quick:
        params = dict(n_origins=5, walks_per_decision=10, walk_steps=200, n_crawls=10, crawl_length=50)
    reports = run_recipe(args.recipe, ctx, **params)
    shown = {k: (v if isinstance(v, (int, float, str)) else "given") for k, v in params.items()}
    for r in reports:
        comments = header_lines(args.command_path, args.seed, recipe=args.recipe, report=r.name,
                                coverage=args.coverage, no_n=args.no_n, **shown) + [f"# {n}" for n in r.notes]
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            write_csv(Path(args.out) / f"{args.recipe}_{r.name}.csv", r.header, r.rows, comments)
        else:
            write_csv(sys.stdout, r.header, r.rows, comments)
            sys.stdout.write("\n")
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _globals(parser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=d(0), help="global random seed (default 0)")
    parser.add_argument("--workers", type=int, default=d(1), help="worker processes for profiling")
    parser.add_argument("--no-n", action="store_true", default=d(False),
                        help="use the {A,C,G,T} neighbor graph (3 substitutions per site)")
    parser.add_argument("--out", default=d(None), metavar="DIR", help="write CSV files here instead of stdout")


def _model_args(p):
    p.add_argument("--models", help="comma-separated model JSON files")
    p.add_argument("--bundle", help="classifier bundle JSON")
    p.add_argument("--prior", help="comma-separated prior weights")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqboundary", description="Triplet-Markov read classifier and "
                                     "decision-boundary toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _globals(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _globals(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("model", help="triplet-model utilities", parents=[common])
    ms = p.add_subparsers(dest="action", required=True)
    q = ms.add_parser("distance", help="Hellinger distance between two models", parents=[common])
    q.add_argument("a", help="model JSON path or bundled name (adeno, covid, sars)")
    q.add_argument("b", help="model JSON path or bundled name (adeno, covid, sars)")
    q = ms.add_parser("estimate", help="estimate a model from a genome FASTA", parents=[common])
    q.add_argument("--genome", required=True)
    q.add_argument("--label", required=True)
    q.add_argument("--pseudocount", type=float, default=0.0)
    q.add_argument("--output", help="model JSON path (default stdout)")
    q = ms.add_parser("show", help="list a model's triplet probabilities", parents=[common])
    q.add_argument("model", help="model JSON path or bundled name (adeno, covid, sars)")
    q = ms.add_parser("null-quantile", help="null quantile of the genome distance", parents=[common])
    q.add_argument("model", help="model JSON path or bundled name (adeno, covid, sars)")
    q.add_argument("--length", type=int, help="genome length (default: the model's)")
    q.add_argument("--replicates", type=int, default=1000)
    q.add_argument("--q", type=float, default=0.999)
    q.add_argument("--method", choices=["markov", "multinomial"], default="markov")
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("classify", help="classify reads", parents=[common])
    _model_args(p)
    p.add_argument("--reads", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("ns", help="neighbor similarity and boundary status", parents=[common])
    _model_args(p)
    p.add_argument("--reads", required=True)
    p.add_argument("--sample", type=int, metavar="K", help="estimate NS from K sampled neighbors")
    p.set_defaults(func=cmd_ns)

    p = sub.add_parser("explore", help="boundary exploration", parents=[common])
    p.add_argument("strategy", choices=["hamming", "walk", "crawl"])
    _model_args(p)
    p.add_argument("--origins", required=True)
    p.add_argument("--targets", help="target reads (hamming)")
    p.add_argument("--steps", type=int, default=2000, help="walk length")
    p.add_argument("--max-steps", type=int, default=250, help="crawl length cap")
    p.add_argument("--pairs", help="also write boundary pairs to this CSV")
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("simulate", help="simulate reads, genomes or random sequences", parents=[common])
    p.add_argument("kind", choices=["reads", "genome", "random"])
    p.add_argument("--genome", help="genome FASTA (reads)")
    p.add_argument("--source", help="source id written into read headers (default: genome file stem)")
    p.add_argument("--model", help="model JSON path or bundled name (genome)")
    p.add_argument("--coverage", type=float, default=6.0)
    p.add_argument("--length", type=int, help="read length (default 101) or genome length")
    p.add_argument("--sub-rate", type=float, default=0.004)
    p.add_argument("--n-rate", type=float, default=0.0005)
    p.add_argument("--n", type=int, default=6000, help="number of random sequences")
    p.add_argument("--output", help="FASTA path (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="analyses of reads with known sources", parents=[common])
    p.add_argument("what", choices=["roc", "barycentric", "confusion", "crosstab", "quadfit", "rrmse", "ks"])
    _model_args(p)
    p.add_argument("--reads", required=True, help="reads with src= headers")
    p.add_argument("--ks", default="1,2,5,10,20,40,80,160", help="sample sizes for rrmse")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("replicate", help="rebuild a case-study table or figure", parents=[common])
    p.add_argument("recipe", choices=sorted(RECIPES))
    _model_args(p)
    p.add_argument("--coverage", type=float, default=6.0)
    p.add_argument("--genomes", help="comma-separated genome FASTA files, one per class")
    p.add_argument("--foreign", help="foreign genome FASTA for the mixed rows of table8")
    p.add_argument("--replicates", type=int, default=1000, help="nullq replicates")
    p.add_argument("--method", choices=["markov", "multinomial"], default="markov")
    p.add_argument("--n", type=int, default=30_000, help="votesplit sample size")
    p.add_argument("--quick", action="store_true", help="reduced table7 sizes")
    p.set_defaults(func=cmd_replicate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate":
        if args.kind == "reads" and not args.genome:
            parser.error("simulate reads needs --genome")
        if args.kind == "genome" and not args.model:
            parser.error("simulate genome needs --model")
        if args.length is None and args.kind != "genome":
            args.length = 101
    if args.workers < 1:
        parser.error("--workers must be >= 1")
    args.command_path = " ".join(x for x in (args.command, getattr(args, "action", None),
                                             getattr(args, "strategy", None), getattr(args, "kind", None),
                                             getattr(args, "what", None), getattr(args, "recipe", None)) if x)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError, KeyError, UndefinedPosteriorError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"seqboundary: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
