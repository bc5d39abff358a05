# learners/knn.py
# k-nearest-neighbour vote under Euclidean distance

from dataclasses import dataclass

import numpy as np

from config.config import LearnerFamilies
from learners.learner_base import LearnerBase

_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class KNNParameters:
    features: np.ndarray
    labels: np.ndarray
    class_count: int
    k: int


class KNNLearner(LearnerBase):
    """
    Lazy learner. Distance ties go to the lower training index (stable sort),
    vote ties to the lowest class id. k larger than the training set falls
    back to a vote over all training rows.
    """

    family = LearnerFamilies.KNN
    defaults = {'k': 5}

    @classmethod
    def validate(cls, hyperparams):
        cls._check_int(hyperparams, 'k', 1)

    def fit(self, features, labels, class_count):
        k = min(int(self.hyperparams['k']), features.shape[0])
        return KNNParameters(features, labels, class_count, k)

    def decide(self, parameters: KNNParameters, features):
        train = parameters.features
        n_train, d = train.shape
        chunk = max(1, _CHUNK_ELEMENTS // max(1, n_train * d))
        predictions = np.empty(features.shape[0], dtype=np.int64)

        for start in range(0, features.shape[0], chunk):
            block = features[start:start + chunk]
            diff = block[:, None, :] - train[None, :, :]
            distances = np.einsum('ijk,ijk->ij', diff, diff)
            nearest = np.argsort(distances, axis=1, kind='stable')[:, :parameters.k]
            votes = np.zeros((block.shape[0], parameters.class_count), dtype=np.int64)
            rows = np.repeat(np.arange(block.shape[0]), parameters.k)
            np.add.at(votes, (rows, parameters.labels[nearest].ravel()), 1)
            predictions[start:start + chunk] = np.argmax(votes, axis=1)
        return predictions
