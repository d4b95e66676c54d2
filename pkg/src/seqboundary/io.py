"""Classifier bundles and CSV report writing."""
from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path

from . import __version__
from .bayes import BayesClassifier
from .triplet import BUNDLED, bundled_models, data_path, load_model

MODEL_DIR_ENV = "SEQBOUNDARY_MODEL_DIR"


def load_bundle(path) -> BayesClassifier:
    """Classifier from a JSON bundle ``{"models": [...], "prior": [...]}``.

    Model paths are resolved relative to the bundle file.
    """
    path = Path(path)
    with open(path) as fh:
        doc = json.load(fh)
    if "models" not in doc or len(doc["models"]) < 2:
        raise ValueError(f"{path}: bundle must list at least two model files")
    models = [load_model(path.parent / m) for m in doc["models"]]
    return BayesClassifier(models, doc.get("prior"))


def load_classifier(models: str | None = None, bundle: str | None = None, prior=None) -> BayesClassifier:
    """Resolve the classifier from CLI-style arguments.

    Precedence: explicit comma-separated model files, then a bundle file,
    then ``$SEQBOUNDARY_MODEL_DIR``, then the three bundled genome models.
    """
    if models:
        return BayesClassifier([load_model(p) for p in models.split(",")], prior)
    if bundle:
        return load_bundle(bundle)
    env = os.environ.get(MODEL_DIR_ENV)
    if env:
        d = Path(env)
        if (d / "classifier.json").exists():
            return load_bundle(d / "classifier.json")
        return BayesClassifier([load_model(d / f"{n}.json") for n in BUNDLED], prior)
    if prior is not None:
        return BayesClassifier(bundled_models(), prior)
    return load_bundle(data_path("classifier.json"))


def header_lines(command: str, seed=None, **params) -> list[str]:
    items = " ".join(f"{k}={v}" for k, v in params.items() if v is not None)
    out = [f"# seqboundary {__version__} command={command}" + (f" seed={seed}" if seed is not None else "")]
    if items:
        out.append(f"# params: {items}")
    return out


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    return v


def write_csv(dest, header, rows, comments=()) -> None:
    """Write comment lines, a header row and data rows to a path or stream."""
    own = isinstance(dest, (str, Path))
    fh = open(dest, "w", newline="") if own else dest
    try:
        for line in comments:
            fh.write(line if line.startswith("#") else f"# {line}")
            fh.write("\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    finally:
        if own:
            fh.close()


def csv_text(header, rows, comments=()) -> str:
    buf = io.StringIO()
    write_csv(buf, header, rows, comments)
    return buf.getvalue()


def read_csv_body(path) -> list[dict]:
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))
