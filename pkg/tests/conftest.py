import csv
import sys
from pathlib import Path

import numpy as np
import pytest

from unlearnaudit.data import EncodedDataset

ROOT = Path(__file__).resolve().parents[1]
ADULT = ROOT / "data" / "adult.csv"
ADULT_CATEGORICAL = ["workclass", "education", "marital-status", "occupation",
                     "relationship", "race", "sex", "native-country"]


def make_dataset(n=400, d=5, num_classes=2, seed=0, noise=0.15):
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    score = X[:, 0] + 0.5 * X[:, min(1, d - 1)] + noise * rng.standard_normal(n)
    edges = np.quantile(score, np.linspace(0, 1, num_classes + 1)[1:-1])
    y = np.searchsorted(edges, score)
    return EncodedDataset(X, y, num_classes, [f"f{i}" for i in range(d)])


def write_synthetic_csv(path, n=2400, seed=0):
    """Mixed numeric/categorical table whose label depends on both kinds."""
    rng = np.random.default_rng(seed)
    colors = np.array(["red", "green", "blue"])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["age", "hours", "color", "score", "label"])
        for _ in range(n):
            age = int(rng.integers(18, 80))
            hours = int(rng.integers(1, 60))
            color = colors[rng.integers(0, 3)]
            score = float(np.round(rng.normal(), 3))
            z = (age - 45) / 15 + (color == "red") + 0.5 * score + 0.8 * rng.normal()
            w.writerow([age, hours, color, score, "yes" if z > 0.3 else "no"])
    return path


@pytest.fixture
def small_ds():
    return make_dataset()


@pytest.fixture(scope="session")
def synthetic_csv(tmp_path_factory):
    return write_synthetic_csv(tmp_path_factory.mktemp("data") / "synthetic.csv")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance")
        for line in lines:
            terminalreporter.write_line(line)
