#!/usr/bin/env python3
"""
core/runner.py

Experiment orchestration for perturbation validation

This module handles:
1. Preparing datasets (synthetic draws, CSV files, hold-out parts) from an ExperimentConfig
2. Model selection: PV, CV and hold-out accuracy for every dataset x learner cell
3. Hyperparameter sweeps (decision-tree depth by default) with repetition-mean curves
4. Training-size sweeps on nested subsamples against a fixed test set
5. Training-noise sensitivity of hold-out accuracy, paired with clean-data PV
6. Writing CSV tables, a JSON manifest and a separate timings table
"""

import threading
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from config.config import LearnerFamilies
from config.experiment_config import CsvDatasetConfig, ExperimentConfig, SyntheticDatasetConfig
from core.baselines import CvSpec, cross_validate, holdout_accuracy
from core.datasets import (
    NOISE_MODE_FEATURES, Dataset, SplitSpec, SyntheticSpec, generate, load_csv, nested_subsamples, split,
)
from core.errors import ConfigError, DatasetError, PvError
from core.perturbation import apply, plan
from core.pvcore import NoiseSchedule, PvResult, pv_validate
from core.worker_pool import run_keyed_jobs
from learners import LearnerSpec
from logger import get_runner_logger, performance_logger, with_context
from utils import (
    STREAM_CV, STREAM_DATA, STREAM_HOLDOUT, STREAM_LEARNER, STREAM_PV, STREAM_SUBSAMPLE,
    STREAM_TEST, STREAM_TRAIN_NOISE, count_local_maxima, derive_seed, ensure_directory_exists,
    flatten_hyperparams, moving_average, read_json, write_json, write_table_csv,
)

STATUS_OK = "ok"
STATUS_ERROR = "error"


@dataclass
class ExperimentRow:
    """One grid cell of an experiment table; wall_time never reaches the result files"""
    experiment: str
    dataset: str
    n: int
    learner: str
    family: str
    hyperparams: str
    train_seed: int
    size: Optional[int] = None
    train_noise: Optional[float] = None
    pv_folded: Optional[float] = None
    pv_raw: Optional[float] = None
    r_squared: Optional[float] = None
    pv_folded_mean: Optional[float] = None
    pv_folded_std: Optional[float] = None
    slope_exceeds_one: Optional[bool] = None
    training_accuracy: Optional[float] = None
    cv_mean: Optional[float] = None
    cv_std: Optional[float] = None
    holdout_accuracy: Optional[float] = None
    pv_seed: Optional[int] = None
    cv_seed: Optional[int] = None
    status: str = STATUS_OK
    error: Optional[str] = None
    wall_time: float = field(default=0.0, repr=False)

    @classmethod
    def columns(cls) -> List[str]:
        return [f.name for f in fields(cls) if f.name != 'wall_time']

    def to_dict(self) -> Dict[str, Any]:
        record = asdict(self)
        record.pop('wall_time')
        return record

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "ExperimentRow":
        known = {f.name for f in fields(cls)}
        return cls(**{key: value for key, value in record.items() if key in known})

    def apply_pv(self, result: PvResult):
        self.pv_folded = result.folded_score
        self.pv_raw = result.raw_slope_magnitude
        self.r_squared = result.r_squared
        self.pv_folded_mean = result.folded_mean
        self.pv_folded_std = result.folded_std
        self.slope_exceeds_one = result.slope_exceeds_one
        self.training_accuracy = result.baseline_accuracy


@dataclass(frozen=True)
class PreparedDataset:
    index: int
    train: Dataset
    test: Optional[Dataset]


class ExperimentRunner:
    """
    Runs experiment grids described by an ExperimentConfig.

    Every random draw descends from config.master_seed through a stream tag and
    the dataset's position in the config, so all learners on one dataset share
    their perturbations, folds and hold-out part, and reruns are bit-identical.
    """

    def __init__(self, config: ExperimentConfig, max_workers: Optional[int] = None):
        self.config = config
        self.max_workers = max_workers or config.max_workers
        self.logger = get_runner_logger()
        self._prepared: Dict[Tuple[int, Optional[int], bool], PreparedDataset] = {}

    # ------------------------------------------------------------------
    # seeds and specs

    def seed(self, stream: int, dataset_index: int, *path: int) -> int:
        return derive_seed(self.config.master_seed, stream, dataset_index, *path)

    def noise_schedule(self, dataset_index: int) -> NoiseSchedule:
        schedule = self.config.schedule
        return NoiseSchedule(tuple(schedule.degrees), schedule.repetitions,
                             self.seed(STREAM_PV, dataset_index), schedule.include_baseline)

    def cv_spec(self, dataset_index: int) -> CvSpec:
        return CvSpec(self.config.cv.folds, self.config.cv.stratified, self.seed(STREAM_CV, dataset_index))

    def learner_specs(self, dataset_index: int) -> List[LearnerSpec]:
        specs = []
        for learner in self.config.learners:
            train_seed = learner.train_seed if learner.train_seed is not None \
                else self.seed(STREAM_LEARNER, dataset_index)
            for hyperparams in learner.expand():
                specs.append(LearnerSpec.create(learner.family, train_seed, **hyperparams))
        return specs

    # ------------------------------------------------------------------
    # datasets

    def prepare_dataset(self, index: int, pool_size: Optional[int] = None,
                        force_split: bool = False) -> PreparedDataset:
        """
        Materialise dataset `index`. Synthetic datasets get a fresh test draw
        from the same distribution without label noise;
        CSV datasets use test_path when given, otherwise a stratified hold-out
        split unless they are smaller than the small-dataset threshold.
        pool_size overrides the synthetic sample size and force_split splits
        CSV data regardless of its size (size sweeps).
        """
        key = (index, pool_size, force_split)
        if key in self._prepared:
            return self._prepared[key]

        source = self.config.datasets[index]
        holdout = self.config.holdout
        if isinstance(source, SyntheticDatasetConfig):
            n = pool_size or source.n_samples
            train = generate(SyntheticSpec(source.family, n, source.feature_noise,
                                           self.seed(STREAM_DATA, index), source.noise_mode))
            test = None
            if holdout.enabled and source.test_samples > 0:
                # the test draw never carries flipped labels
                jitter = source.feature_noise if source.noise_mode == NOISE_MODE_FEATURES else 0.0
                test_spec = SyntheticSpec(source.family, source.test_samples, jitter,
                                          self.seed(STREAM_TEST, index), NOISE_MODE_FEATURES)
                drawn = generate(test_spec)
                test = Dataset(drawn.features, drawn.labels, drawn.class_count,
                               f"{train.name}[test]", drawn.label_names)
        elif isinstance(source, CsvDatasetConfig):
            full = load_csv(source.path, source.label_column, source.header, source.name)
            train, test = full, None
            if holdout.enabled and source.test_path:
                test = align_labels(load_csv(source.test_path, source.label_column, source.header,
                                             f"{full.name}[test]"), full)
            elif holdout.enabled and (full.n_samples >= holdout.small_dataset_threshold or force_split):
                train, test = split(full, SplitSpec(holdout.test_fraction, holdout.stratified,
                                                    self.seed(STREAM_HOLDOUT, index)))
        else:
            raise ConfigError(f"unsupported dataset entry {source!r}")

        prepared = PreparedDataset(index, train, test)
        self._prepared[key] = prepared
        self.logger.info(f"Prepared dataset {train.name}: n={train.n_samples}, "
                         f"test={test.n_samples if test is not None else 'none'}")
        return prepared

    # ------------------------------------------------------------------
    # cells

    def _new_row(self, experiment: str, data: Dataset, spec: LearnerSpec, **extra) -> ExperimentRow:
        return ExperimentRow(experiment, data.name, data.n_samples, spec.label, spec.family,
                             flatten_hyperparams(spec.hyperparams), spec.train_seed, **extra)

    def _run_cell(self, experiment: str, row: ExperimentRow, work) -> ExperimentRow:
        cell_logger = with_context(self.logger, dataset=row.dataset, learner=row.learner,
                                   cell=f"{experiment}:{row.size or row.n}:{row.train_noise}")
        started = time.perf_counter()
        retrainings = 0
        try:
            retrainings = work(row)
        except PvError as e:
            row.status, row.error = STATUS_ERROR, f"{type(e).__name__}: {e}"
            cell_logger.error(f"Cell failed: {row.error}")
        except Exception as e:
            row.status, row.error = STATUS_ERROR, f"{type(e).__name__}: {e}"
            cell_logger.error(f"Unexpected error in cell: {e}", exc_info=True)
        row.wall_time = time.perf_counter() - started
        performance_logger.log_cell_stats(experiment, row.dataset, row.learner, row.wall_time,
                                          retrainings, row.status)
        return row

    def _score_cell(self, prepared: PreparedDataset, spec: LearnerSpec, with_cv: bool = True):
        """Cell work filling PV, CV and hold-out columns; returns the number of models trained"""
        def work(row: ExperimentRow) -> int:
            index = prepared.index
            row.pv_seed = self.noise_schedule(index).master_seed
            pv = pv_validate(spec, prepared.train, self.noise_schedule(index))
            row.apply_pv(pv)
            retrainings = pv.curve.retrainings
            if with_cv:
                cv = self.cv_spec(index)
                row.cv_seed = cv.seed
                result = cross_validate(spec, prepared.train, cv)
                row.cv_mean, row.cv_std = result.mean, result.std
                retrainings += cv.folds
            if prepared.test is not None:
                row.holdout_accuracy = holdout_accuracy(spec, prepared.train, prepared.test)
                retrainings += 1
            return retrainings
        return work

    def _execute(self, experiment: str, cells: Dict[Tuple, Tuple[ExperimentRow, Any]]) -> List[ExperimentRow]:
        started = time.perf_counter()
        jobs = {key: (lambda row=row, work=work: self._run_cell(experiment, row, work))
                for key, (row, work) in cells.items()}
        rows = list(run_keyed_jobs(jobs, self.max_workers).values())
        failed = sum(1 for row in rows if row.status != STATUS_OK)
        performance_logger.log_run_summary(experiment, len(rows), failed, time.perf_counter() - started)
        if failed:
            self.logger.warning(f"{experiment}: {failed} of {len(rows)} cells failed")
        else:
            self.logger.info(f"{experiment}: {len(rows)} cells finished")
        return rows

    def _datasets(self, pool_size: Optional[int] = None) -> Iterable[Tuple[int, Optional[PreparedDataset], Optional[str]]]:
        for index in range(len(self.config.datasets)):
            try:
                yield index, self.prepare_dataset(index, pool_size), None
            except PvError as e:
                self.logger.error(f"Dataset {index} could not be prepared: {e}")
                yield index, None, f"{type(e).__name__}: {e}"

    def _failed_dataset_rows(self, experiment: str, index: int, error: str) -> List[ExperimentRow]:
        source = self.config.datasets[index]
        name = getattr(source, 'name', None) or getattr(source, 'path', None) or getattr(source, 'family', '?')
        return [ExperimentRow(experiment, str(name), 0, learner.family, learner.family,
                              flatten_hyperparams(learner.hyperparams), learner.train_seed or 0,
                              status=STATUS_ERROR, error=error)
                for learner in self.config.learners]

    # ------------------------------------------------------------------
    # experiments

    def run_model_selection(self) -> List[ExperimentRow]:
        """PV, CV and hold-out accuracy for every dataset x learner, sorted by dataset then learner"""
        experiment = "model_selection"
        cells, failed = {}, []
        for index, prepared, error in self._datasets():
            if prepared is None:
                failed.extend(self._failed_dataset_rows(experiment, index, error))
                continue
            for j, spec in enumerate(self.learner_specs(index)):
                cells[(index, j)] = (self._new_row(experiment, prepared.train, spec),
                                     self._score_cell(prepared, spec))
        rows = self._execute(experiment, cells) + failed
        return sorted(rows, key=lambda row: (row.dataset, row.learner))

    def run_hyperparam_sweep(self, family: str = LearnerFamilies.DECISION_TREE, param: str = 'max_depth',
                             grid: Optional[Sequence[Any]] = None) -> List[ExperimentRow]:
        """
        One row per (dataset, grid value). Fixed hyperparameters of the first
        configured learner of `family` are kept; the swept one is overridden.
        """
        experiment = f"sweep_{param}"
        grid = list(grid if grid is not None else self.config.depth_grid)
        if not grid:
            raise ConfigError("hyperparameter grid must not be empty")
        base = next((learner for learner in self.config.learners if learner.family == family), None)
        fixed = {k: v for k, v in (base.hyperparams if base else {}).items() if k != param}

        cells, failed = {}, []
        for index, prepared, error in self._datasets():
            if prepared is None:
                failed.extend(self._failed_dataset_rows(experiment, index, error))
                continue
            train_seed = base.train_seed if base is not None and base.train_seed is not None \
                else self.seed(STREAM_LEARNER, index)
            for j, value in enumerate(grid):
                spec = LearnerSpec.create(family, train_seed, **fixed, **{param: value})
                cells[(index, j)] = (self._new_row(experiment, prepared.train, spec),
                                     self._score_cell(prepared, spec))
        return self._execute(experiment, cells) + failed

    def run_size_sweep(self, sizes: Optional[Sequence[int]] = None) -> List[ExperimentRow]:
        """
        PV and hold-out accuracy per (dataset, size, learner) on nested
        stratified subsamples; the test part is fixed per dataset.
        """
        experiment = "size_sweep"
        sizes = list(sizes if sizes is not None else (self.config.size_grid or []))
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ConfigError(f"size grid must be strictly increasing: {sizes}")

        cells, failed = {}, []
        for index in range(len(self.config.datasets)):
            source = self.config.datasets[index]
            pool_size = max(sizes) if sizes and isinstance(source, SyntheticDatasetConfig) else None
            try:
                prepared = self.prepare_dataset(index, pool_size, force_split=True)
                dataset_sizes = sizes or [prepared.train.n_samples]
                subsets = nested_subsamples(prepared.train, dataset_sizes, self.seed(STREAM_SUBSAMPLE, index))
            except PvError as e:
                failed.extend(self._failed_dataset_rows(experiment, index, f"{type(e).__name__}: {e}"))
                continue
            for s, subset in enumerate(subsets):
                part = PreparedDataset(index, subset, prepared.test)
                for j, spec in enumerate(self.learner_specs(index)):
                    cells[(index, s, j)] = (self._new_row(experiment, subset, spec, size=subset.n_samples),
                                            self._score_cell(part, spec, with_cv=False))
        return self._execute(experiment, cells) + failed

    def run_noise_sensitivity(self, train_noise_grid: Optional[Sequence[float]] = None) -> List[ExperimentRow]:
        """
        Hold-out accuracy after training on label-noised copies, one row per
        (dataset, learner, noise degree); each row also carries the learner's
        PV on the clean training data. Accuracies average over
        config.noise_repetitions independent flips.
        """
        experiment = "noise_sensitivity"
        grid = list(train_noise_grid if train_noise_grid is not None else self.config.train_noise_grid)
        if any(not 0.0 <= r <= 0.5 for r in grid):
            raise ConfigError(f"training-noise degrees must lie in [0, 0.5]: {grid}")

        cells, failed = {}, []
        clean_pv = CleanPvCache()
        for index, prepared, error in self._datasets():
            if prepared is None:
                failed.extend(self._failed_dataset_rows(experiment, index, error))
                continue
            for j, spec in enumerate(self.learner_specs(index)):
                for g, degree in enumerate(grid):
                    row = self._new_row(experiment, prepared.train, spec, train_noise=float(degree))
                    cells[(index, j, g)] = (row, self._noise_cell(prepared, spec, j, g, degree, clean_pv))
        return self._execute(experiment, cells) + failed

    def _noise_cell(self, prepared: PreparedDataset, spec: LearnerSpec, j: int, g: int,
                    degree: float, clean_pv: "CleanPvCache"):
        def work(row: ExperimentRow) -> int:
            if prepared.test is None:
                raise DatasetError(f"'{prepared.train.name}' has no hold-out part for noise sensitivity")
            index = prepared.index
            schedule = self.noise_schedule(index)
            pv, computed = clean_pv.get((index, j), lambda: pv_validate(spec, prepared.train, schedule))
            row.pv_seed = schedule.master_seed
            row.apply_pv(pv)
            accuracies = []
            for rep in range(self.config.noise_repetitions):
                seed = self.seed(STREAM_TRAIN_NOISE, index, g, rep)
                noisy = apply(prepared.train, plan(prepared.train, degree, seed)) if degree > 0 else prepared.train
                accuracies.append(holdout_accuracy(spec, noisy, prepared.test))
            row.holdout_accuracy = float(np.mean(accuracies))
            return len(accuracies) + (pv.curve.retrainings if computed else 0)
        return work


class CleanPvCache:
    """Clean-data PV per (dataset, learner) key, computed once even when cells run concurrently"""

    def __init__(self):
        self._results: Dict[Hashable, PvResult] = {}
        self._locks: Dict[Hashable, threading.Lock] = {}
        self._cache_lock = threading.Lock()

    def get(self, key: Hashable, compute: Callable[[], PvResult]) -> Tuple[PvResult, bool]:
        """Cached result for key and whether this call computed it"""
        with self._cache_lock:
            lock = self._locks.setdefault(key, threading.Lock())
        with lock:
            if key in self._results:
                return self._results[key], False
            result = compute()
            self._results[key] = result
            return result, True


# ----------------------------------------------------------------------
# tables


def align_labels(test: Dataset, reference: Dataset) -> Dataset:
    """Re-encode test labels with the reference dataset's label ids"""
    mapping = {name: i for i, name in enumerate(reference.label_names)}
    unknown = sorted(set(test.label_names) - set(mapping))
    if unknown:
        raise DatasetError(f"test labels {unknown} do not occur in '{reference.name}'")
    if test.n_features != reference.n_features:
        raise DatasetError(f"test file has {test.n_features} features, expected {reference.n_features}")
    remap = np.array([mapping[name] for name in test.label_names], dtype=np.int64)
    return Dataset(test.features, remap[test.labels], reference.class_count, test.name, reference.label_names)


def sweep_curves(rows: Sequence[ExperimentRow], param: str = 'max_depth', window: int = 3) -> List[Dict[str, Any]]:
    """
    Per dataset: repetition-mean PV and training accuracy against the swept
    value, the smoothed PV curve, its local-maximum count and both argmaxes.
    Smoothing uses full windows only, so the end points carry no smoothed
    value and the PV argmax is taken over the smoothed interior.
    """
    by_dataset: Dict[str, List[Tuple[float, ExperimentRow]]] = {}
    for row in rows:
        if row.status != STATUS_OK:
            continue
        value = dict(part.split('=', 1) for part in row.hyperparams.split(';') if part).get(param)
        by_dataset.setdefault(row.dataset, []).append((float(value), row))

    curves = []
    for dataset, entries in by_dataset.items():
        entries.sort(key=lambda entry: entry[0])
        values = [value for value, _ in entries]
        pv_mean = np.array([row.pv_folded_mean for _, row in entries], dtype=float)
        train_acc = np.array([row.training_accuracy for _, row in entries], dtype=float)
        smoothed = moving_average(pv_mean, window)
        for k, (value, row) in enumerate(entries):
            curves.append({
                'dataset': dataset,
                param: value,
                'pv_folded_mean': pv_mean[k],
                'pv_folded_std': row.pv_folded_std,
                'pv_smoothed': None if np.isnan(smoothed[k]) else float(smoothed[k]),
                'training_accuracy': train_acc[k],
                'cv_mean': row.cv_mean,
                'holdout_accuracy': row.holdout_accuracy,
                'local_maxima': count_local_maxima(smoothed),
                'pv_argmax': values[int(np.nanargmax(smoothed))],
                'training_accuracy_argmax': values[int(np.argmax(train_acc))],
            })
    return curves


def emit_scatter(rows: Sequence[ExperimentRow]) -> List[Dict[str, Any]]:
    """(pv_folded, training_accuracy) pairs with identifying columns; no aggregation"""
    return [
        {'dataset': row.dataset, 'learner': row.learner,
         'pv_folded': row.pv_folded, 'training_accuracy': row.training_accuracy}
        for row in rows
        if row.pv_folded is not None and row.training_accuracy is not None
    ]


def write_results(rows: Sequence[ExperimentRow], output_dir: Path, stem: str,
                  config: Optional[ExperimentConfig] = None,
                  extra_tables: Optional[Dict[str, List[Dict[str, Any]]]] = None) -> Dict[str, Path]:
    """
    Write <stem>.csv, <stem>.json (config, seeds and rows) and <stem>_timings.csv.
    The first two contain no timing data, so reruns reproduce them byte for byte.
    """
    output_dir = ensure_directory_exists(output_dir)
    paths = {
        'csv': write_table_csv([row.to_dict() for row in rows], output_dir / f"{stem}.csv",
                               ExperimentRow.columns()),
        'timings': write_table_csv(
            [{'dataset': row.dataset, 'learner': row.learner, 'size': row.size,
              'train_noise': row.train_noise, 'wall_time': row.wall_time} for row in rows],
            output_dir / f"{stem}_timings.csv"),
    }
    manifest = {
        'experiment': stem,
        'config': config.to_dict() if config is not None else None,
        'rows': [row.to_dict() for row in rows],
    }
    for name, table in (extra_tables or {}).items():
        paths[name] = write_table_csv(table, output_dir / f"{stem}_{name}.csv")
        manifest[name] = table
    paths['json'] = write_json(manifest, output_dir / f"{stem}.json")
    return paths


def read_rows(path: Path) -> List[ExperimentRow]:
    """Rows from a manifest written by write_results"""
    payload = read_json(path)
    records = payload.get('rows', payload) if isinstance(payload, dict) else payload
    return [ExperimentRow.from_dict(record) for record in records]


def any_failed(rows: Iterable[ExperimentRow]) -> bool:
    return any(row.status != STATUS_OK for row in rows)
