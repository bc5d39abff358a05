# core/perturbation.py
# Per-class label flipping that builds the perturbed training samples

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from core.datasets import Dataset
from core.errors import PerturbationError
from utils import read_json, round_half_up, write_json


class FlipMode(str, Enum):
    """How flipped labels are redistributed over the other classes"""
    OUTGOING = "outgoing"
    # every class would also receive exactly its share of incoming labels
    BALANCED_SWAP = "balanced_swap"


@dataclass(frozen=True, eq=False)
class PerturbationPlan:
    """
    Which rows of a dataset get which replacement label.

    flip_indices is sorted and unique; replacement_labels[i] is the new label
    of row flip_indices[i].
    """
    noise_degree: float
    per_class_flip_counts: Dict[int, int]
    flip_indices: np.ndarray
    replacement_labels: np.ndarray
    seed: int
    n_samples: int
    class_count: int
    dataset_name: str = ""
    mode: FlipMode = FlipMode.OUTGOING

    @property
    def total_flips(self) -> int:
        return int(self.flip_indices.shape[0])

    @property
    def replacements(self) -> Dict[int, int]:
        return {int(i): int(label) for i, label in zip(self.flip_indices, self.replacement_labels)}

    def to_dict(self) -> Dict[str, Any]:
        return {
            'dataset': self.dataset_name,
            'noise_degree': self.noise_degree,
            'mode': self.mode.value,
            'seed': self.seed,
            'n_samples': self.n_samples,
            'class_count': self.class_count,
            'per_class_flip_counts': {str(c): n for c, n in sorted(self.per_class_flip_counts.items())},
            'flips': [{'index': i, 'label': label} for i, label in self.replacements.items()],
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "PerturbationPlan":
        try:
            flips = sorted(payload['flips'], key=lambda flip: flip['index'])
            return cls(
                noise_degree=float(payload['noise_degree']),
                per_class_flip_counts={int(c): int(n) for c, n in payload['per_class_flip_counts'].items()},
                flip_indices=np.asarray([flip['index'] for flip in flips], dtype=np.int64),
                replacement_labels=np.asarray([flip['label'] for flip in flips], dtype=np.int64),
                seed=int(payload['seed']),
                n_samples=int(payload['n_samples']),
                class_count=int(payload['class_count']),
                dataset_name=payload.get('dataset', ''),
                mode=FlipMode(payload.get('mode', FlipMode.OUTGOING.value)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise PerturbationError(f"malformed perturbation plan: {e}") from e

    def save(self, path: Union[str, Path]) -> Path:
        return write_json(self.to_dict(), path)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "PerturbationPlan":
        return cls.from_dict(read_json(path))


def flip_counts(class_counts: np.ndarray, noise_degree: float) -> Dict[int, int]:
    """round(r * n_c) per class, halves rounding up"""
    return {c: round_half_up(noise_degree * int(n_c)) for c, n_c in enumerate(class_counts)}


def plan(dataset: Dataset, noise_degree: float, seed: int,
         mode: FlipMode = FlipMode.OUTGOING) -> PerturbationPlan:
    """
    Choose round(r * n_c) rows of every class c and a replacement label for
    each, drawn uniformly from the other k - 1 classes.
    """
    if not 0.0 <= noise_degree < 1.0:
        raise PerturbationError(f"noise degree must lie in [0, 1), got {noise_degree}")
    if FlipMode(mode) is not FlipMode.OUTGOING:
        raise PerturbationError(f"flip mode '{FlipMode(mode).value}' is not supported")

    counts = dataset.class_counts()
    per_class = flip_counts(counts, noise_degree)
    for c, n_flip in per_class.items():
        if counts[c] > 0 and n_flip >= counts[c]:
            raise PerturbationError(
                f"noise degree {noise_degree} would flip all {counts[c]} samples of class {c} in '{dataset.name}'")

    rng = np.random.default_rng(seed)
    k = dataset.class_count
    indices, replacements = [], []
    for c in range(k):
        n_flip = per_class[c]
        if n_flip == 0:
            continue
        members = np.flatnonzero(dataset.labels == c)
        indices.append(rng.permutation(members)[:n_flip])
        draws = rng.integers(0, k - 1, size=n_flip)
        replacements.append(draws + (draws >= c))

    if indices:
        flip_indices = np.concatenate(indices)
        replacement_labels = np.concatenate(replacements)
        order = np.argsort(flip_indices)
        flip_indices, replacement_labels = flip_indices[order], replacement_labels[order]
    else:
        flip_indices = np.zeros(0, dtype=np.int64)
        replacement_labels = np.zeros(0, dtype=np.int64)

    return PerturbationPlan(float(noise_degree), per_class, flip_indices.astype(np.int64),
                            replacement_labels.astype(np.int64), int(seed), dataset.n_samples, k,
                            dataset.name, FlipMode.OUTGOING)


def apply(dataset: Dataset, perturbation: PerturbationPlan, name: Optional[str] = None) -> Dataset:
    """Perturbed copy sharing the feature matrix of `dataset`"""
    if perturbation.n_samples != dataset.n_samples or perturbation.class_count != dataset.class_count:
        raise PerturbationError(
            f"plan for n={perturbation.n_samples}, k={perturbation.class_count} does not match "
            f"'{dataset.name}' (n={dataset.n_samples}, k={dataset.class_count})")
    idx = perturbation.flip_indices
    if idx.size and (idx.min() < 0 or idx.max() >= dataset.n_samples):
        raise PerturbationError("plan flips rows outside the dataset")
    if np.any(dataset.labels[idx] == perturbation.replacement_labels):
        raise PerturbationError(f"plan does not match the labels of '{dataset.name}'")

    labels = dataset.labels.copy()
    labels[idx] = perturbation.replacement_labels
    return dataset.with_labels(labels, name or f"{dataset.name}~r{perturbation.noise_degree:g}")
