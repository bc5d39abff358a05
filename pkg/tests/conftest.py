"""
Shared fixtures: environment isolation, small datasets and two reference
learner families (an oracle that recalls the original labels and a
majority-class predictor) registered through the public registry.
"""

# pylint: disable=redefined-outer-name

import os

os.environ.setdefault('LOG_TO_FILE', 'false')
os.environ.setdefault('LOG_LEVEL', 'WARNING')

from typing import Callable, Dict

import numpy as np
import pytest

from core.datasets import Dataset, SyntheticSpec, generate
from learners import LEARNER_MAPPING, LearnerBase, register_learner

ORACLE = "oracle"
MAJORITY = "majority"


class OracleLearner(LearnerBase):
    """Predicts the label each feature row carried in the reference datasets"""

    family = ORACLE
    defaults = {}
    lookup: Dict[bytes, int] = {}

    def fit(self, features, labels, class_count):
        return dict(self.lookup)

    def decide(self, parameters, features):
        return np.array([parameters.get(np.ascontiguousarray(row).tobytes(), 0) for row in features],
                        dtype=np.int64)


class MajorityLearner(LearnerBase):
    family = MAJORITY
    defaults = {}

    def fit(self, features, labels, class_count):
        return int(np.argmax(np.bincount(labels, minlength=class_count)))

    def decide(self, parameters, features):
        return np.full(features.shape[0], parameters, dtype=np.int64)


@pytest.fixture
def register_oracle() -> Callable[..., str]:
    """Register the oracle family remembering the labels of the given datasets"""

    def _register(*datasets: Dataset) -> str:
        lookup = {}
        for dataset in datasets:
            for row, label in zip(dataset.features, dataset.labels):
                lookup[np.ascontiguousarray(row).tobytes()] = int(label)
        OracleLearner.lookup = lookup
        register_learner(ORACLE, OracleLearner)
        return ORACLE

    yield _register
    LEARNER_MAPPING.pop(ORACLE, None)
    OracleLearner.lookup = {}


@pytest.fixture
def majority_family() -> str:
    register_learner(MAJORITY, MajorityLearner)
    yield MAJORITY
    LEARNER_MAPPING.pop(MAJORITY, None)


@pytest.fixture
def moon_100() -> Dataset:
    return generate(SyntheticSpec('moon', 100, 0.0, seed=7))


@pytest.fixture
def balanced_binary() -> Callable[[int], Dataset]:
    """Balanced two-class Gaussian blobs with distinct rows"""

    def _make(n: int = 1000, seed: int = 0) -> Dataset:
        rng = np.random.default_rng(seed)
        labels = np.repeat([0, 1], n // 2)
        features = rng.normal(size=(n, 2)) + labels[:, None] * 3.0
        return Dataset(features, labels, 2, f"blobs-{n}")

    return _make


@pytest.fixture
def iris_like() -> Dataset:
    """Three 50-sample classes in four dimensions"""
    rng = np.random.default_rng(11)
    labels = np.repeat([0, 1, 2], 50)
    centres = np.array([[5.0, 3.4, 1.5, 0.2], [5.9, 2.8, 4.3, 1.3], [6.6, 3.0, 5.6, 2.0]])
    features = centres[labels] + rng.normal(scale=0.3, size=(150, 4))
    return Dataset(features, labels, 3, "iris-like", ("setosa", "versicolor", "virginica"))


@pytest.fixture
def iris_csv(tmp_path, iris_like) -> str:
    path = tmp_path / "iris.csv"
    lines = ["sepal_length,sepal_width,petal_length,petal_width,species"]
    for row, label in zip(iris_like.features, iris_like.labels):
        lines.append(",".join(f"{v:.3f}" for v in row) + "," + iris_like.label_names[label])
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)
