# learners/__init__.py
# Learner families and the uniform train/predict interface

from learners.learner_base import LearnerBase, LearnerSpec, TrainedModel
from learners.registry import (
    LEARNER_MAPPING,
    predict,
    register_learner,
    resolve_learner,
    train,
    training_accuracy,
)

__all__ = [
    'LearnerBase',
    'LearnerSpec',
    'TrainedModel',
    'LEARNER_MAPPING',
    'register_learner',
    'resolve_learner',
    'train',
    'predict',
    'training_accuracy',
]
