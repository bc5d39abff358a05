# core/errors.py
# Exception hierarchy shared by datasets, learners, perturbation and PV scoring

from typing import Optional


class PvError(Exception):
    """Base class for every error raised by the perturbation validation toolkit"""


class ConfigError(PvError):
    """Invalid environment or experiment configuration"""


class DatasetError(PvError):
    """Dataset construction, loading or sampling failed"""


class CsvFormatError(DatasetError):
    """A CSV cell could not be parsed as a number"""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row = row
        self.column = column
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column '{column}'")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)


class StratificationError(DatasetError):
    """Requested stratified split or fold layout is infeasible"""


class LearnerError(PvError):
    """Training or prediction failed"""


class InvalidHyperparameterError(LearnerError):
    """A learner spec carries missing, unknown or out-of-range hyperparameters"""


class DimensionMismatchError(LearnerError):
    """Feature dimensionality differs from the one seen during training"""


class DegenerateDataError(LearnerError):
    """Training data holds fewer than two distinct classes"""


class PerturbationError(PvError):
    """Label perturbation plan is infeasible or does not match its dataset"""


class CurveBuildError(PvError):
    """Retraining on one perturbed sample failed"""

    def __init__(self, message: str, degree: float, repetition: int):
        self.degree = degree
        self.repetition = repetition
        super().__init__(f"{message} (r={degree}, repetition={repetition})")


class RegressionError(PvError):
    """Accuracy-vs-noise regression is undefined"""
