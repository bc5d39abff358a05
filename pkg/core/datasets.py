# core/datasets.py
# Synthetic distributions, CSV loading, stratified splits and subsamples

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from config.config import SyntheticFamilies
from core.errors import CsvFormatError, DatasetError, StratificationError
from logger import get_datasets_logger
from utils import STREAM_LABEL_NOISE, derive_seed, round_half_up

logger = get_datasets_logger()

NOISE_MODE_FEATURES = "features"
NOISE_MODE_LABELS = "labels"

CIRCLE_INNER_RADIUS = 0.5
LINEAR_MARGIN = 0.1
LINEAR_ALONG_MEAN = 0.9
LINEAR_ALONG_STD = 0.5
LINEAR_ACROSS_STD = 1.0


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    array = np.asarray(array, dtype=dtype)
    if array.flags.writeable:
        array = array.copy()
        array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Immutable labelled sample.

    features is an n x d float matrix, labels a length-n vector of class ids in
    [0, class_count). Derived datasets (splits, perturbed copies) share the
    feature matrix of their parent; `origin` and `sample_ids` tie every row
    back to the dataset it was drawn from.
    """
    features: np.ndarray
    labels: np.ndarray
    class_count: int
    name: str
    label_names: Tuple[str, ...] = ()
    origin: Optional[str] = None
    sample_ids: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        features = np.asarray(self.features)
        if features.ndim != 2:
            raise DatasetError(f"features must be a 2-D matrix, got shape {features.shape}")
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.shape[0] != features.shape[0]:
            raise DatasetError(
                f"labels must be a vector of length {features.shape[0]}, got shape {labels.shape}")
        if labels.size and not np.all(np.equal(np.mod(labels, 1), 0)):
            raise DatasetError("labels must be integer class ids")
        if self.class_count < 2:
            raise DatasetError(f"class_count must be >= 2, got {self.class_count}")
        if labels.size and (labels.min() < 0 or labels.max() >= self.class_count):
            raise DatasetError(f"labels must lie in [0, {self.class_count})")
        if not np.all(np.isfinite(features)):
            raise DatasetError(f"dataset '{self.name}' has non-finite feature values")

        object.__setattr__(self, 'features', _frozen(features, float))
        object.__setattr__(self, 'labels', _frozen(labels, np.int64))
        object.__setattr__(self, 'label_names', tuple(str(n) for n in self.label_names))
        if self.sample_ids is not None:
            sample_ids = _frozen(self.sample_ids, np.int64)
            if sample_ids.shape != self.labels.shape:
                raise DatasetError("sample_ids must align with labels")
            object.__setattr__(self, 'sample_ids', sample_ids)

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    @property
    def root(self) -> str:
        return self.origin or self.name

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)

    def ids(self) -> np.ndarray:
        """Row identifiers relative to the root dataset"""
        if self.sample_ids is not None:
            return self.sample_ids
        return np.arange(self.n_samples)

    def check_complete(self) -> "Dataset":
        """Enforce that every class is represented and n >= k"""
        counts = self.class_counts()
        missing = [c for c in range(self.class_count) if counts[c] == 0]
        if missing:
            raise DatasetError(f"dataset '{self.name}' has no samples for classes {missing}")
        if self.n_samples < self.class_count:
            raise DatasetError(f"dataset '{self.name}' has fewer samples than classes")
        return self

    def with_labels(self, labels: np.ndarray, name: Optional[str] = None) -> "Dataset":
        """Copy sharing this dataset's features but carrying other labels"""
        return Dataset(self.features, labels, self.class_count, name or self.name,
                       self.label_names, self.origin, self.sample_ids)

    def take(self, indices: Sequence[int], name: Optional[str] = None) -> "Dataset":
        """Row subset in the given order, keeping provenance to the root dataset"""
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[indices], self.labels[indices], self.class_count,
                       name or self.name, self.label_names, self.root, self.ids()[indices])


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of one synthetic two-class distribution draw"""
    family: str
    n_samples: int
    feature_noise: float = 0.0
    seed: int = 0
    noise_mode: str = NOISE_MODE_FEATURES

    def __post_init__(self):
        if self.family not in SyntheticFamilies.ALL:
            raise DatasetError(f"unknown synthetic family '{self.family}', expected one of {SyntheticFamilies.ALL}")
        if self.n_samples < 4:
            raise DatasetError(f"n_samples must be >= 4, got {self.n_samples}")
        if self.feature_noise < 0:
            raise DatasetError(f"feature_noise must be >= 0, got {self.feature_noise}")
        if self.seed < 0:
            raise DatasetError(f"seed must be non-negative, got {self.seed}")
        if self.noise_mode not in (NOISE_MODE_FEATURES, NOISE_MODE_LABELS):
            raise DatasetError(f"noise_mode must be '{NOISE_MODE_FEATURES}' or '{NOISE_MODE_LABELS}'")
        if self.noise_mode == NOISE_MODE_LABELS and self.feature_noise >= 0.5:
            raise DatasetError("label-noise fraction must be < 0.5")

    @property
    def name(self) -> str:
        if self.feature_noise > 0:
            suffix = "labelnoise" if self.noise_mode == NOISE_MODE_LABELS else "noise"
            return f"{self.family}-{self.n_samples}-{self.feature_noise:g}{suffix}"
        return f"{self.family}-{self.n_samples}"


@dataclass(frozen=True)
class SplitSpec:
    """Hold-out split parameters"""
    test_fraction: float
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.test_fraction < 1.0:
            raise DatasetError(f"test_fraction must lie in [0, 1), got {self.test_fraction}")
        if self.seed < 0:
            raise DatasetError(f"seed must be non-negative, got {self.seed}")


def _moon_geometry(n0: int, n1: int, rng: np.random.Generator) -> np.ndarray:
    t0 = np.linspace(0.0, np.pi, n0)
    t1 = np.linspace(0.0, np.pi, n1)
    outer = np.column_stack([np.cos(t0), np.sin(t0)])
    inner = np.column_stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)])
    return np.vstack([outer, inner])


def _circle_geometry(n0: int, n1: int, rng: np.random.Generator) -> np.ndarray:
    t0 = np.linspace(0.0, 2.0 * np.pi, n0, endpoint=False)
    t1 = np.linspace(0.0, 2.0 * np.pi, n1, endpoint=False)
    outer = np.column_stack([np.cos(t0), np.sin(t0)])
    inner = CIRCLE_INNER_RADIUS * np.column_stack([np.cos(t1), np.sin(t1)])
    return np.vstack([outer, inner])


def _linear_geometry(n0: int, n1: int, rng: np.random.Generator) -> np.ndarray:
    # two blobs on either side of the anti-diagonal, folded away from it
    along_axis = np.array([1.0, 1.0]) / np.sqrt(2.0)
    across_axis = np.array([-1.0, 1.0]) / np.sqrt(2.0)
    blocks = []
    for sign, count in ((-1.0, n0), (1.0, n1)):
        along = sign * (LINEAR_MARGIN + np.abs(rng.normal(LINEAR_ALONG_MEAN, LINEAR_ALONG_STD, count)))
        across = rng.normal(0.0, LINEAR_ACROSS_STD, count)
        blocks.append(np.outer(along, along_axis) + np.outer(across, across_axis))
    return np.vstack(blocks)


_GEOMETRY = {
    SyntheticFamilies.MOON: _moon_geometry,
    SyntheticFamilies.CIRCLE: _circle_geometry,
    SyntheticFamilies.LINEAR: _linear_geometry,
}


def generate(spec: SyntheticSpec) -> Dataset:
    """
    Draw a balanced two-class synthetic dataset in two dimensions.

    Class 0 receives ceil(n/2) points. With noise_mode='features' the noise
    level is the std-dev of isotropic Gaussian jitter added to coordinates;
    with noise_mode='labels' it is the fraction of labels flipped per class.
    """
    rng = np.random.default_rng(spec.seed)
    n0 = (spec.n_samples + 1) // 2
    n1 = spec.n_samples // 2

    features = _GEOMETRY[spec.family](n0, n1, rng)
    labels = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n1, dtype=np.int64)])

    if spec.noise_mode == NOISE_MODE_FEATURES and spec.feature_noise > 0:
        features = features + rng.normal(0.0, spec.feature_noise, size=features.shape)

    order = rng.permutation(spec.n_samples)
    dataset = Dataset(features[order], labels[order], 2, spec.name, ("0", "1")).check_complete()

    if spec.noise_mode == NOISE_MODE_LABELS and spec.feature_noise > 0:
        from core.perturbation import apply, plan
        noise_plan = plan(dataset, spec.feature_noise, derive_seed(spec.seed, STREAM_LABEL_NOISE))
        dataset = apply(dataset, noise_plan, name=spec.name)

    logger.debug(f"Generated {dataset.name} (seed={spec.seed}, mode={spec.noise_mode})")
    return dataset


def _resolve_label_column(columns: List, label_column: Union[str, int], header: bool):
    if isinstance(label_column, str) and not header:
        if not label_column.lstrip('-').isdigit():
            raise DatasetError(f"label column '{label_column}' given by name but the file has no header")
        label_column = int(label_column)
    if isinstance(label_column, int):
        if not -len(columns) <= label_column < len(columns):
            raise DatasetError(f"label column index {label_column} out of range for {len(columns)} columns")
        return columns[label_column]
    if label_column not in columns:
        raise DatasetError(f"label column '{label_column}' not found; columns are {list(columns)}")
    return label_column


def load_csv(path: Union[str, Path], label_column: Union[str, int] = -1, header: bool = True,
             name: Optional[str] = None) -> Dataset:
    """
    Load a comma-separated tabular dataset.

    Labels are re-encoded to dense ids in order of first appearance; the
    original values are kept in Dataset.label_names. Every other column must
    be numeric. Row numbers in errors are 1-based file lines.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"CSV file not found: {path}")

    try:
        raw = pd.read_csv(path, header=0 if header else None, dtype=str,
                          keep_default_na=False, skipinitialspace=True, encoding='utf-8')
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DatasetError(f"could not parse CSV {path}: {e}") from e

    if raw.shape[0] == 0:
        raise DatasetError(f"CSV file {path} has no data rows")

    label_key = _resolve_label_column(list(raw.columns), label_column, header)
    feature_frame = raw.drop(columns=[label_key])
    if feature_frame.shape[1] == 0:
        raise DatasetError(f"CSV file {path} has no feature columns")

    first_line = 2 if header else 1
    numeric_columns = []
    for column in feature_frame.columns:
        values = pd.to_numeric(feature_frame[column].str.strip(), errors='coerce')
        bad = ~np.isfinite(values.to_numpy(dtype=float))
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise CsvFormatError(
                f"non-numeric feature value '{feature_frame[column].iloc[row]}'",
                row=row + first_line, column=str(column))
        numeric_columns.append(values.to_numpy(dtype=float))

    codes, uniques = pd.factorize(raw[label_key].str.strip(), sort=False)
    if len(uniques) < 2:
        raise DatasetError(f"single-class dataset: {path}")

    dataset = Dataset(np.column_stack(numeric_columns), codes, len(uniques),
                      name or path.stem, tuple(str(u) for u in uniques))
    logger.info(f"Loaded {path}: n={dataset.n_samples}, d={dataset.n_features}, "
                f"classes={list(dataset.label_names)}")
    return dataset.check_complete()


def to_csv(dataset: Dataset, path: Union[str, Path]) -> Path:
    """Export a dataset as CSV with header x0..x{d-1},label"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(dataset.features, columns=[f"x{j}" for j in range(dataset.n_features)])
    if dataset.label_names:
        frame['label'] = [dataset.label_names[label] for label in dataset.labels]
    else:
        frame['label'] = dataset.labels
    frame.to_csv(path, index=False, lineterminator='\n', float_format='%.17g')
    return path


def split(dataset: Dataset, spec: SplitSpec) -> Tuple[Dataset, Dataset]:
    """
    Partition into (train, test), both keeping the original row order.

    Stratified splits take round(test_fraction * n_c) test rows per class and
    refuse layouts that would leave a class without training rows.
    """
    n = dataset.n_samples
    train_name, test_name = f"{dataset.name}[train]", f"{dataset.name}[test]"
    if spec.test_fraction == 0:
        return dataset.take(np.arange(n), train_name), dataset.take(np.array([], dtype=np.int64), test_name)

    rng = np.random.default_rng(spec.seed)
    in_test = np.zeros(n, dtype=bool)
    if spec.stratified:
        for c in range(dataset.class_count):
            members = np.flatnonzero(dataset.labels == c)
            if members.size == 0:
                continue
            n_test = round_half_up(spec.test_fraction * members.size)
            if n_test >= members.size:
                raise StratificationError(
                    f"test_fraction {spec.test_fraction} leaves class {c} without training samples")
            in_test[rng.permutation(members)[:n_test]] = True
    else:
        n_test = round_half_up(spec.test_fraction * n)
        if n_test >= n:
            raise StratificationError(f"test_fraction {spec.test_fraction} leaves no training samples")
        in_test[rng.permutation(n)[:n_test]] = True

    return (dataset.take(np.flatnonzero(~in_test), train_name),
            dataset.take(np.flatnonzero(in_test), test_name))


def _proportional_quotas(counts: np.ndarray, n_target: int) -> np.ndarray:
    """Largest-remainder apportionment of n_target over classes, at least one per present class"""
    total = int(counts.sum())
    numerators = n_target * counts
    quotas = numerators // total
    remainders = numerators % total
    leftover = n_target - int(quotas.sum())
    order = np.lexsort((np.arange(len(counts)), -remainders))
    quotas[order[:leftover]] += 1

    for c in np.flatnonzero((counts > 0) & (quotas == 0)):
        donor = int(np.argmax(quotas))
        quotas[donor] -= 1
        quotas[c] = 1
    return quotas


def subsample(dataset: Dataset, n_target: int, seed: int) -> Dataset:
    """Stratified random subset of n_target rows, returned in shuffled order"""
    present = int(np.count_nonzero(dataset.class_counts()))
    if n_target < present:
        raise DatasetError(f"n_target {n_target} is below the class count {present}")
    if n_target > dataset.n_samples:
        raise DatasetError(f"n_target {n_target} exceeds dataset size {dataset.n_samples}")

    rng = np.random.default_rng(seed)
    quotas = _proportional_quotas(dataset.class_counts(), n_target)
    chosen = []
    for c in range(dataset.class_count):
        members = np.flatnonzero(dataset.labels == c)
        chosen.append(rng.permutation(members)[:quotas[c]])
    order = rng.permutation(np.concatenate(chosen))
    return dataset.take(order, f"{dataset.name}@{n_target}")


def stratified_order(dataset: Dataset, seed: int) -> np.ndarray:
    """
    Permutation of all rows whose every prefix is (approximately) stratified.

    Each class is shuffled, then its j-th member is placed at fractional
    position (j + 0.5) / n_c; rows are ordered by position, ties by class id.
    """
    rng = np.random.default_rng(seed)
    indices, keys, classes = [], [], []
    for c in range(dataset.class_count):
        members = rng.permutation(np.flatnonzero(dataset.labels == c))
        if members.size == 0:
            continue
        indices.append(members)
        keys.append((np.arange(members.size) + 0.5) / members.size)
        classes.append(np.full(members.size, c))
    indices, keys, classes = np.concatenate(indices), np.concatenate(keys), np.concatenate(classes)
    return indices[np.lexsort((classes, keys))]


def nested_subsamples(dataset: Dataset, sizes: Sequence[int], seed: int) -> List[Dataset]:
    """Stratified subsets for increasing sizes where each larger subset contains the smaller ones"""
    sizes = list(sizes)
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise DatasetError(f"sizes must be strictly increasing: {sizes}")
    if sizes and (sizes[0] < dataset.class_count or sizes[-1] > dataset.n_samples):
        raise DatasetError(f"sizes must lie in [{dataset.class_count}, {dataset.n_samples}]: {sizes}")
    order = stratified_order(dataset, seed)
    return [dataset.take(order[:size], f"{dataset.name}@{size}") for size in sizes]
