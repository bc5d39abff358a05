# learners/linear_svm.py
# Soft-margin linear SVM, one-vs-rest, Pegasos subgradient steps

import numpy as np

from config.config import LearnerFamilies
from learners.linear_base import LinearOvrLearner


class LinearSVMLearner(LinearOvrLearner):
    """
    Hinge loss with regulariser lambda = 1 / (C * n) and step 1 / (lambda * t).
    After each step the weights are projected onto the ball of radius
    1 / sqrt(lambda), which contains the optimum.
    """

    family = LearnerFamilies.LINEAR_SVM
    defaults = {'C': 1.0, 'epochs': 100}

    @classmethod
    def validate(cls, hyperparams):
        super().validate(hyperparams)
        cls._check_float(hyperparams, 'C', 0.0, strict=True)

    def prepare(self, n_samples):
        self._lam = 1.0 / (float(self.hyperparams['C']) * n_samples)
        self._radius = 1.0 / np.sqrt(self._lam)

    def step(self, weights, x, targets, t):
        eta = 1.0 / (self._lam * t)
        violated = targets * (weights @ x) < 1.0
        weights = weights * (1.0 - eta * self._lam)
        weights[violated] += eta * targets[violated, None] * x[None, :]
        norms = np.linalg.norm(weights, axis=1)
        scale = np.minimum(1.0, self._radius / np.maximum(norms, 1e-300))
        return weights * scale[:, None]
