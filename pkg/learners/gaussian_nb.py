# learners/gaussian_nb.py
# Gaussian naive Bayes with per-class diagonal covariance

from dataclasses import dataclass

import numpy as np

from config.config import LearnerFamilies
from learners.learner_base import LearnerBase

VARIANCE_FLOOR = 1e-9


@dataclass(frozen=True)
class GaussianNBParameters:
    log_prior: np.ndarray
    means: np.ndarray
    variances: np.ndarray


class GaussianNBLearner(LearnerBase):
    family = LearnerFamilies.GAUSSIAN_NB
    defaults = {}

    def fit(self, features, labels, class_count):
        d = features.shape[1]
        means = np.zeros((class_count, d))
        variances = np.ones((class_count, d))
        counts = np.bincount(labels, minlength=class_count)
        for c in np.flatnonzero(counts):
            members = features[labels == c]
            means[c] = members.mean(axis=0)
            variances[c] = np.maximum(members.var(axis=0), VARIANCE_FLOOR)
        with np.errstate(divide='ignore'):
            # absent classes get -inf and are never predicted
            log_prior = np.log(counts / counts.sum())
        return GaussianNBParameters(log_prior, means, variances)

    def decide(self, parameters: GaussianNBParameters, features):
        diff = features[:, None, :] - parameters.means[None, :, :]
        log_likelihood = -0.5 * (np.sum(np.log(2.0 * np.pi * parameters.variances), axis=1)[None, :]
                                 + np.sum(diff * diff / parameters.variances[None, :, :], axis=2))
        return np.argmax(parameters.log_prior[None, :] + log_likelihood, axis=1)
