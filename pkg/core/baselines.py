# core/baselines.py
# Cross-validation and hold-out accuracy, the validators PV is compared against

from dataclasses import dataclass
from typing import Any, Dict, Tuple

import numpy as np

from config.config import Config
from core.datasets import Dataset
from core.errors import DatasetError, StratificationError
from core.worker_pool import run_keyed_jobs
from learners import LearnerSpec, predict, train
from logger import get_pv_logger

logger = get_pv_logger()


@dataclass(frozen=True)
class CvSpec:
    folds: int = 3
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.folds < 2:
            raise StratificationError(f"cross-validation needs at least 2 folds, got {self.folds}")
        if self.seed < 0:
            raise StratificationError(f"seed must be non-negative, got {self.seed}")

    @classmethod
    def from_config(cls, seed: int = 0) -> "CvSpec":
        return cls(Config.CV_FOLDS, Config.CV_STRATIFIED, seed)

    def to_dict(self) -> Dict[str, Any]:
        return {'folds': self.folds, 'stratified': self.stratified, 'seed': self.seed}


@dataclass(frozen=True)
class CvResult:
    per_fold_accuracies: Tuple[float, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_fold_accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.per_fold_accuracies))

    def to_dict(self) -> Dict[str, Any]:
        return {'per_fold_accuracies': list(self.per_fold_accuracies), 'mean': self.mean, 'std': self.std}


def fold_assignments(data: Dataset, cv: CvSpec) -> np.ndarray:
    """
    Fold id of every row.

    Stratified: rows are listed class by class (each class shuffled) and dealt
    round-robin, so fold sizes differ by at most one and per-fold class counts
    by at most one. Otherwise a single global shuffle is dealt the same way.
    """
    n = data.n_samples
    if cv.folds > n:
        raise StratificationError(f"{cv.folds} folds requested for only {n} samples")
    rng = np.random.default_rng(cv.seed)

    if cv.stratified:
        counts = data.class_counts()
        short = [c for c in range(data.class_count) if 0 < counts[c] < cv.folds]
        if short:
            raise StratificationError(
                f"classes {short} of '{data.name}' have fewer than {cv.folds} members")
        order = np.concatenate([rng.permutation(np.flatnonzero(data.labels == c))
                                for c in range(data.class_count)])
    else:
        order = rng.permutation(n)

    assignment = np.empty(n, dtype=np.int64)
    assignment[order] = np.arange(n) % cv.folds
    return assignment


def cross_validate(spec: LearnerSpec, data: Dataset, cv: CvSpec, max_workers: int = 1) -> CvResult:
    """Train on k-1 folds and score the held-out fold, for each fold"""
    assignment = fold_assignments(data, cv)

    def run_fold(f: int) -> float:
        train_part = data.take(np.flatnonzero(assignment != f), f"{data.name}[cv{f}-train]")
        test_part = data.take(np.flatnonzero(assignment == f), f"{data.name}[cv{f}-test]")
        model = train(spec, train_part)
        return float(np.mean(predict(model, test_part.features) == test_part.labels))

    accuracies = run_keyed_jobs({f: (lambda f=f: run_fold(f)) for f in range(cv.folds)}, max_workers)
    result = CvResult(tuple(accuracies[f] for f in range(cv.folds)))
    logger.debug(f"CV {spec.label} on {data.name}: mean={result.mean:.4f} std={result.std:.4f}")
    return result


def holdout_accuracy(spec: LearnerSpec, train_data: Dataset, test_data: Dataset) -> float:
    """Accuracy on test_data of a model fitted on train_data"""
    if test_data.n_samples == 0:
        raise DatasetError(f"hold-out set '{test_data.name}' is empty")
    if (train_data.sample_ids is not None and test_data.sample_ids is not None
            and train_data.root == test_data.root and train_data.name != test_data.name):
        shared = np.intersect1d(train_data.sample_ids, test_data.sample_ids)
        if shared.size:
            raise DatasetError(
                f"train '{train_data.name}' and test '{test_data.name}' share {shared.size} rows")
    model = train(spec, train_data)
    return float(np.mean(predict(model, test_data.features) == test_data.labels))
