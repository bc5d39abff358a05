# core/pvcore.py
# Perturbation validation score: retrain under graded label noise and measure
# how fast training accuracy falls

import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import linregress

from config.config import Config
from core.datasets import Dataset
from core.errors import ConfigError, CurveBuildError, PvError, RegressionError
from core.perturbation import apply, plan
from core.worker_pool import run_keyed_jobs
from learners import LearnerSpec, train, training_accuracy
from logger import get_pv_logger
from utils import derive_seed

logger = get_pv_logger()

_BOUND_TOLERANCE = 1e-9


@dataclass(frozen=True)
class NoiseSchedule:
    """
    Noise degrees r_0 = 0 < r_1 < ... < r_m, each retrained `repetitions`
    times. Cell (i, j) draws its perturbation from derive_seed(master_seed, i, j).
    With include_baseline=False the r_0 point is left out of the regression.
    """
    degrees: Tuple[float, ...] = (0.0, 0.1, 0.2, 0.3)
    repetitions: int = 10
    master_seed: int = 0
    include_baseline: bool = True

    def __post_init__(self):
        degrees = tuple(float(r) for r in self.degrees)
        object.__setattr__(self, 'degrees', degrees)
        if len(degrees) < 2:
            raise ConfigError(f"noise schedule needs at least two degrees, got {degrees}")
        if degrees[0] != 0.0:
            raise ConfigError(f"noise schedule must start at r=0, got {degrees[0]}")
        if any(b <= a for a, b in zip(degrees, degrees[1:])):
            raise ConfigError(f"noise degrees must be strictly increasing: {degrees}")
        if degrees[-1] >= 1.0:
            raise ConfigError(f"noise degrees must lie in [0, 1): {degrees}")
        if not self.include_baseline and len(degrees) < 3:
            raise ConfigError("excluding r=0 leaves fewer than two regression degrees")
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.master_seed < 0:
            raise ConfigError(f"master_seed must be non-negative, got {self.master_seed}")

    @classmethod
    def from_config(cls, master_seed: Optional[int] = None) -> "NoiseSchedule":
        return cls(Config.PV_DEGREES, Config.PV_REPETITIONS,
                   Config.PV_MASTER_SEED if master_seed is None else master_seed,
                   Config.PV_INCLUDE_BASELINE)

    def cell_seed(self, degree_index: int, repetition: int) -> int:
        return derive_seed(self.master_seed, degree_index, repetition)

    def regression_indices(self) -> List[int]:
        start = 0 if self.include_baseline else 1
        return list(range(start, len(self.degrees)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'degrees': list(self.degrees),
            'repetitions': self.repetitions,
            'master_seed': self.master_seed,
            'include_baseline': self.include_baseline,
        }


@dataclass(frozen=True)
class CurvePoint:
    degree: float
    accuracy: float
    repetition: int
    seed: int

    def to_dict(self) -> Dict[str, Any]:
        return {'r': self.degree, 'rep': self.repetition, 'acc': self.accuracy, 'seed': self.seed}


@dataclass(frozen=True)
class AccuracyCurve:
    """(r, training accuracy) points ordered by degree then repetition"""
    points: Tuple[CurvePoint, ...]
    retrainings: int = 0
    baseline_accuracy: Optional[float] = None

    @classmethod
    def from_pairs(cls, pairs: Sequence[Tuple[float, float]]) -> "AccuracyCurve":
        return cls(tuple(CurvePoint(float(r), float(a), 0, 0) for r, a in pairs))

    @property
    def degrees(self) -> np.ndarray:
        return np.array([p.degree for p in self.points], dtype=float)

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([p.accuracy for p in self.points], dtype=float)

    def repetitions(self) -> List[int]:
        return sorted({p.repetition for p in self.points})

    def for_repetition(self, repetition: int) -> "AccuracyCurve":
        return AccuracyCurve(tuple(p for p in self.points if p.repetition == repetition))

    def to_list(self) -> List[Dict[str, Any]]:
        return [p.to_dict() for p in self.points]


def evaluate_cell(spec: LearnerSpec, data: Dataset, degree: float, seed: int) -> float:
    """Training accuracy after retraining on one perturbed copy; replays any curve point"""
    perturbed = apply(data, plan(data, degree, seed)) if degree > 0 else data
    model = train(spec, perturbed)
    return training_accuracy(model, perturbed)


def build_curve(spec: LearnerSpec, data: Dataset, schedule: NoiseSchedule,
                max_workers: int = 1) -> AccuracyCurve:
    """
    Retrain on a fresh perturbed sample for every (degree, repetition) cell
    and measure accuracy against the perturbed labels. The r=0 model is
    trained once and replicated over repetitions.
    """
    data.check_complete()
    baseline_accuracy = _run_cell(spec, data, schedule, 0, 0)

    jobs = {}
    for i in range(1, len(schedule.degrees)):
        for j in range(schedule.repetitions):
            jobs[(i, j)] = (lambda i=i, j=j: _run_cell(spec, data, schedule, i, j))
    accuracies = run_keyed_jobs(jobs, max_workers)

    points = []
    for i in schedule.regression_indices():
        for j in range(schedule.repetitions):
            accuracy = baseline_accuracy if i == 0 else accuracies[(i, j)]
            points.append(CurvePoint(schedule.degrees[i], accuracy, j, schedule.cell_seed(i, j)))
    return AccuracyCurve(tuple(points), retrainings=1 + len(jobs), baseline_accuracy=baseline_accuracy)


def _run_cell(spec: LearnerSpec, data: Dataset, schedule: NoiseSchedule, i: int, j: int) -> float:
    degree = schedule.degrees[i]
    try:
        return evaluate_cell(spec, data, degree, schedule.cell_seed(i, j))
    except CurveBuildError:
        raise
    except PvError as e:
        raise CurveBuildError(str(e), degree, j) from e


def fit_slope(curve: AccuracyCurve) -> float:
    """|OLS slope| of accuracy on noise degree over all points"""
    degrees = curve.degrees
    if np.unique(degrees).size < 2:
        raise RegressionError("slope is undefined: fewer than two distinct noise degrees")
    return float(abs(linregress(degrees, curve.accuracies).slope))


def fold(raw_slope_magnitude: float) -> float:
    """1 - |PV - 1|: slopes above 1 are punished like slopes below it"""
    if raw_slope_magnitude < 0:
        raise RegressionError(f"slope magnitude must be >= 0, got {raw_slope_magnitude}")
    return 1.0 - abs(raw_slope_magnitude - 1.0)


def linearity_diagnostic(curve: AccuracyCurve) -> Optional[float]:
    """R^2 of the OLS fit, or None when accuracies are constant"""
    accuracies = curve.accuracies
    if accuracies.size == 0 or np.ptp(accuracies) == 0:
        return None
    if np.unique(curve.degrees).size < 2:
        raise RegressionError("R^2 is undefined: fewer than two distinct noise degrees")
    r_value = linregress(curve.degrees, accuracies).rvalue
    return float(min(1.0, max(0.0, r_value * r_value)))


def slope_upper_bound(curve: AccuracyCurve) -> float:
    """
    Largest |OLS slope| any accuracies with this curve's range could give on
    its abscissae: range(acc) * sum|r - mean(r)| / (2 * sum (r - mean(r))^2).
    """
    degrees = curve.degrees
    centred = degrees - degrees.mean()
    denominator = float(np.sum(centred * centred))
    if denominator == 0:
        raise RegressionError("slope bound is undefined: fewer than two distinct noise degrees")
    return float(np.ptp(curve.accuracies) * np.sum(np.abs(centred)) / (2.0 * denominator))


@dataclass(frozen=True)
class PvResult:
    raw_slope_magnitude: float
    folded_score: float
    r_squared: Optional[float]
    curve: AccuracyCurve
    learner: LearnerSpec
    dataset_name: str
    schedule: NoiseSchedule
    per_repetition_folded: Tuple[float, ...] = ()
    baseline_accuracy: Optional[float] = None
    wall_time: float = field(default=0.0, compare=False)

    @property
    def slope_exceeds_one(self) -> bool:
        return self.raw_slope_magnitude > 1.0

    @property
    def folded_mean(self) -> float:
        return float(np.mean(self.per_repetition_folded)) if self.per_repetition_folded else self.folded_score

    @property
    def folded_std(self) -> float:
        return float(np.std(self.per_repetition_folded)) if self.per_repetition_folded else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'learner': self.learner.to_dict(),
            'dataset': self.dataset_name,
            'schedule': self.schedule.to_dict(),
            'points': self.curve.to_list(),
            'raw_slope': self.raw_slope_magnitude,
            'folded': self.folded_score,
            'r2': self.r_squared,
            'slope_exceeds_one': self.slope_exceeds_one,
            'baseline_accuracy': self.baseline_accuracy,
            'per_repetition_folded': list(self.per_repetition_folded),
        }


def pv_validate(spec: LearnerSpec, data: Dataset, schedule: NoiseSchedule,
                max_workers: int = 1) -> PvResult:
    """build_curve -> fit_slope -> fold -> linearity_diagnostic"""
    started = time.perf_counter()
    curve = build_curve(spec, data, schedule, max_workers)
    raw = fit_slope(curve)

    bound = slope_upper_bound(curve)
    if raw > bound + _BOUND_TOLERANCE:
        raise RegressionError(f"slope {raw} exceeds its bound {bound}")

    per_repetition = tuple(fold(fit_slope(curve.for_repetition(j))) for j in curve.repetitions())
    result = PvResult(raw, fold(raw), linearity_diagnostic(curve), curve, spec, data.name, schedule,
                      per_repetition, curve.baseline_accuracy, time.perf_counter() - started)

    if result.slope_exceeds_one:
        logger.warning(f"PV slope {raw:.4f} > 1 for {spec.label} on {data.name}")
    logger.info(f"PV {spec.label} on {data.name}: raw={raw:.4f} folded={result.folded_score:.4f} "
                f"r2={result.r_squared if result.r_squared is None else round(result.r_squared, 4)}")
    return result
