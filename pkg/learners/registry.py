# learners/registry.py
# Family registry plus the train / predict / training_accuracy entry points

from typing import Dict, Type

import numpy as np

from config.config import LearnerFamilies
from core.datasets import Dataset
from core.errors import DegenerateDataError, DimensionMismatchError, InvalidHyperparameterError, LearnerError
from learners.decision_tree import DecisionTreeLearner
from learners.gaussian_nb import GaussianNBLearner
from learners.knn import KNNLearner
from learners.learner_base import LearnerBase, LearnerSpec, TrainedModel
from learners.linear_svm import LinearSVMLearner
from learners.logistic_regression import LogisticRegressionLearner
from logger import get_learner_logger

logger = get_learner_logger()

# Learner family mapping
LEARNER_MAPPING: Dict[str, Type[LearnerBase]] = {
    LearnerFamilies.DECISION_TREE: DecisionTreeLearner,
    LearnerFamilies.GAUSSIAN_NB: GaussianNBLearner,
    LearnerFamilies.LINEAR_SVM: LinearSVMLearner,
    LearnerFamilies.LOGISTIC_REGRESSION: LogisticRegressionLearner,
    LearnerFamilies.KNN: KNNLearner,
}


def register_learner(family: str, learner_class: Type[LearnerBase]) -> None:
    """Make an additional learner family available to specs, configs and the runner"""
    if not issubclass(learner_class, LearnerBase):
        raise TypeError(f"{learner_class!r} does not derive from LearnerBase")
    if family in LEARNER_MAPPING and LEARNER_MAPPING[family] is not learner_class:
        logger.warning(f"Replacing learner family '{family}'")
    LEARNER_MAPPING[family] = learner_class


def resolve_learner(family: str) -> Type[LearnerBase]:
    try:
        return LEARNER_MAPPING[family]
    except KeyError:
        raise InvalidHyperparameterError(
            f"unknown learner family '{family}', expected one of {sorted(LEARNER_MAPPING)}") from None


def train(spec: LearnerSpec, data: Dataset) -> TrainedModel:
    """
    Fit a learner on a dataset.

    Training is a pure function of (spec, data): every random choice inside a
    family is drawn from spec.train_seed.
    """
    learner = resolve_learner(spec.family)(spec)
    if data.n_samples == 0 or np.unique(data.labels).size < 2:
        raise DegenerateDataError(f"cannot train {spec.label} on '{data.name}': fewer than two classes present")

    parameters = learner.fit(data.features, data.labels, data.class_count)
    logger.debug(f"Trained {spec.label} on {data.name} (n={data.n_samples}, d={data.n_features})")
    return TrainedModel(spec, parameters, data.class_count, data.n_features, learner)


def predict(model: TrainedModel, features) -> np.ndarray:
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[1] != model.n_features:
        raise DimensionMismatchError(
            f"{model.spec.label} was trained on {model.n_features} features, got shape {features.shape}")
    if features.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    predictions = np.asarray(model.learner.decide(model.parameters, features), dtype=np.int64)
    if predictions.size and (predictions.min() < 0 or predictions.max() >= model.class_count):
        raise LearnerError(f"{model.spec.label} produced class ids outside [0, {model.class_count})")
    return predictions


def training_accuracy(model: TrainedModel, data: Dataset) -> float:
    """Fraction of rows whose prediction matches the dataset's own labels"""
    if data.n_samples == 0:
        raise LearnerError(f"accuracy is undefined on empty dataset '{data.name}'")
    return float(np.mean(predict(model, data.features) == data.labels))
