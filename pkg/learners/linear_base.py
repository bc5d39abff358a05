# learners/linear_base.py
# One-vs-rest linear scorers trained by per-sample stochastic (sub)gradient steps

from abc import abstractmethod
from dataclasses import dataclass

import numpy as np

from learners.learner_base import LearnerBase


@dataclass(frozen=True)
class LinearParameters:
    """Row c holds the weights of class c versus the rest; last column is the bias"""
    weights: np.ndarray


def augment(features: np.ndarray) -> np.ndarray:
    return np.column_stack([features, np.ones(features.shape[0])])


class LinearOvrLearner(LearnerBase):
    """
    Shared training loop for the linear families.

    All k one-vs-rest problems are stepped together on the same sample. Each
    epoch visits the rows in a permutation drawn from the train seed, and the
    returned weights average the iterates of the second half of all steps.
    """

    @classmethod
    def validate(cls, hyperparams):
        cls._check_int(hyperparams, 'epochs', 1)

    @abstractmethod
    def prepare(self, n_samples: int) -> None:
        """Set per-fit constants before the first step"""

    @abstractmethod
    def step(self, weights: np.ndarray, x: np.ndarray, targets: np.ndarray, t: int) -> np.ndarray:
        """Return updated weights after visiting x with +1/-1 targets per class"""

    def fit(self, features, labels, class_count):
        x_aug = augment(features)
        n = x_aug.shape[0]
        targets = np.where(labels[:, None] == np.arange(class_count)[None, :], 1.0, -1.0)
        self.prepare(n)

        rng = self.rng()
        total_steps = n * int(self.hyperparams['epochs'])
        tail_start = total_steps // 2
        weights = np.zeros((class_count, x_aug.shape[1]))
        tail_sum = np.zeros_like(weights)
        t = 0
        for _ in range(int(self.hyperparams['epochs'])):
            for i in rng.permutation(n):
                t += 1
                weights = self.step(weights, x_aug[i], targets[i], t)
                if t > tail_start:
                    tail_sum += weights
        return LinearParameters(tail_sum / (total_steps - tail_start))

    def decide(self, parameters: LinearParameters, features):
        return np.argmax(augment(features) @ parameters.weights.T, axis=1)
