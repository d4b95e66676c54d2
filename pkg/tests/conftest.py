import numpy as np
import pytest

from seqboundary.bayes import BayesClassifier, FunctionClassifier
from seqboundary.triplet import TripletModel, bundled_models


@pytest.fixture(scope="session")
def models():
    return bundled_models()


@pytest.fixture(scope="session")
def clf(models):
    return BayesClassifier(models)


def random_model(rng, label="m", sparsity=0.0) -> TripletModel:
    p = rng.dirichlet(np.ones(64))
    if sparsity:
        p[rng.random(64) < sparsity] = 0.0
        p /= p.sum()
    return TripletModel(label, p)


@pytest.fixture
def parity():
    """Two classes on {A, C}: parity of the number of A's."""
    return FunctionClassifier(lambda s: str(s).count("A") % 2, ["even", "odd"])


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: list[str] = []


def record(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title} | {detail}"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
