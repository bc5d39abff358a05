# learners/logistic_regression.py
# L2-regularised logistic regression, one-vs-rest SGD

import numpy as np
from scipy.special import expit

from config.config import LearnerFamilies
from learners.linear_base import LinearOvrLearner


class LogisticRegressionLearner(LinearOvrLearner):
    """
    Minimises l2/2 * |w|^2 + mean log-loss per class; the intercept is not
    penalised.
    """

    family = LearnerFamilies.LOGISTIC_REGRESSION
    defaults = {'l2': 1.0, 'epochs': 100, 'learning_rate': 0.5}

    @classmethod
    def validate(cls, hyperparams):
        super().validate(hyperparams)
        cls._check_float(hyperparams, 'l2', 0.0, strict=False)
        cls._check_float(hyperparams, 'learning_rate', 0.0, strict=True)

    def prepare(self, n_samples):
        self._l2 = float(self.hyperparams['l2'])
        self._eta0 = float(self.hyperparams['learning_rate'])

    def step(self, weights, x, targets, t):
        eta = self._eta0 / (1.0 + self._eta0 * self._l2 * t)
        # d/dw log(1 + exp(-y w.x)) = -y x sigmoid(-y w.x)
        pull = targets * expit(-targets * (weights @ x))
        penalty = self._l2 * weights
        penalty[:, -1] = 0.0
        return weights - eta * (penalty - pull[:, None] * x[None, :])
