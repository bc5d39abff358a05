# learners/learner_base.py
# Uniform train/predict contract shared by every learner family

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from core.errors import InvalidHyperparameterError
from utils import flatten_hyperparams


@dataclass(frozen=True)
class LearnerSpec:
    """
    One hypothesis-search configuration: learner family, hyperparameters and
    the seed that drives any randomness inside training.
    """
    family: str
    hyperparams: Dict[str, Any] = field(default_factory=dict)
    train_seed: int = 0

    @classmethod
    def create(cls, family: str, train_seed: int = 0, **hyperparams) -> "LearnerSpec":
        """Build a spec with the family defaults filled in and validated"""
        from learners.registry import resolve_learner
        learner_class = resolve_learner(family)
        return cls(family, learner_class.complete_hyperparams(hyperparams), int(train_seed))

    def with_seed(self, train_seed: int) -> "LearnerSpec":
        return LearnerSpec(self.family, dict(self.hyperparams), int(train_seed))

    @property
    def label(self) -> str:
        if not self.hyperparams:
            return self.family
        return f"{self.family}({flatten_hyperparams(self.hyperparams)})"

    def to_dict(self) -> Dict[str, Any]:
        return {
            'family': self.family,
            'hyperparams': {key: self.hyperparams[key] for key in sorted(self.hyperparams)},
            'train_seed': self.train_seed,
        }


@dataclass(frozen=True, eq=False)
class TrainedModel:
    """Result of one training run; `parameters` is family specific"""
    spec: LearnerSpec
    parameters: Any
    class_count: int
    n_features: int
    learner: "LearnerBase" = field(repr=False)


class LearnerBase(ABC):
    """
    Base class for all learner families.

    Subclasses declare `family` and `defaults`, check their hyperparameters in
    `validate` and implement `fit`/`decide`. `train` builds a fresh instance
    per fit, so per-fit state may live on the instance.
    """

    family: str = ""
    defaults: Dict[str, Any] = {}

    def __init__(self, spec: LearnerSpec):
        self.spec = spec
        self.hyperparams = self.complete_hyperparams(spec.hyperparams)

    @classmethod
    def complete_hyperparams(cls, hyperparams: Dict[str, Any]) -> Dict[str, Any]:
        unknown = sorted(set(hyperparams) - set(cls.defaults))
        if unknown:
            raise InvalidHyperparameterError(
                f"{cls.family}: unknown hyperparameters {unknown}, expected a subset of {sorted(cls.defaults)}")
        resolved = dict(cls.defaults)
        resolved.update(hyperparams)
        cls.validate(resolved)
        return resolved

    @classmethod
    def validate(cls, hyperparams: Dict[str, Any]):
        """Raise InvalidHyperparameterError for out-of-range values"""

    @classmethod
    def _check_int(cls, hyperparams: Dict[str, Any], key: str, minimum: int, allow_none: bool = False):
        value = hyperparams.get(key)
        if value is None and allow_none:
            return
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < minimum:
            raise InvalidHyperparameterError(f"{cls.family}: {key} must be an integer >= {minimum}, got {value!r}")

    @classmethod
    def _check_float(cls, hyperparams: Dict[str, Any], key: str, minimum: float, strict: bool):
        value = hyperparams.get(key)
        if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
            raise InvalidHyperparameterError(f"{cls.family}: {key} must be a number, got {value!r}")
        if not np.isfinite(value) or (value <= minimum if strict else value < minimum):
            bound = '>' if strict else '>='
            raise InvalidHyperparameterError(f"{cls.family}: {key} must be {bound} {minimum}, got {value!r}")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.spec.train_seed)

    @abstractmethod
    def fit(self, features: np.ndarray, labels: np.ndarray, class_count: int) -> Any:
        """Return the fitted parameters for this family"""

    @abstractmethod
    def decide(self, parameters: Any, features: np.ndarray) -> np.ndarray:
        """Map a feature matrix to class ids using fitted parameters"""
