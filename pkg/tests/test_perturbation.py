"""
Tests for per-class label flipping plans.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.datasets import Dataset
from core.errors import PerturbationError
from core.perturbation import FlipMode, PerturbationPlan, apply, plan


def make_dataset(counts, seed=0) -> Dataset:
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(len(counts)), counts)
    return Dataset(rng.normal(size=(len(labels), 2)), rng.permutation(labels), len(counts), "counts")


class TestPlan:

    def test_zero_degree_is_empty(self):
        p = plan(make_dataset([10, 10]), 0.0, seed=1)
        assert p.total_flips == 0
        assert p.per_class_flip_counts == {0: 0, 1: 0}

    def test_binary_one_flip_per_class(self):
        dataset = make_dataset([10, 10])
        p = plan(dataset, 0.1, seed=3)
        assert p.per_class_flip_counts == {0: 1, 1: 1}
        assert np.all(p.replacement_labels == 1 - dataset.labels[p.flip_indices])

    def test_three_class_counts(self):
        p = plan(make_dataset([50, 30, 20]), 0.2, seed=0)
        assert p.per_class_flip_counts == {0: 10, 1: 6, 2: 4}
        assert p.total_flips == 20

    def test_half_rounds_up(self):
        p = plan(make_dataset([5, 5]), 0.1, seed=0)
        assert p.per_class_flip_counts == {0: 1, 1: 1}

    def test_indices_sorted_unique_and_replacements_differ(self):
        dataset = make_dataset([40, 25, 35])
        p = plan(dataset, 0.3, seed=9)
        assert np.all(np.diff(p.flip_indices) > 0)
        assert np.all(p.replacement_labels != dataset.labels[p.flip_indices])

    def test_seed_determinism(self):
        dataset = make_dataset([30, 30, 30])
        a, b = plan(dataset, 0.2, 5), plan(dataset, 0.2, 5)
        np.testing.assert_array_equal(a.flip_indices, b.flip_indices)
        np.testing.assert_array_equal(a.replacement_labels, b.replacement_labels)

    @pytest.mark.parametrize("degree", [-0.1, 1.0, 1.5])
    def test_degree_out_of_range(self, degree):
        with pytest.raises(PerturbationError):
            plan(make_dataset([10, 10]), degree, 0)

    def test_whole_class_flip_rejected(self):
        with pytest.raises(PerturbationError):
            plan(make_dataset([10, 1]), 0.5, 0)

    def test_balanced_swap_not_supported(self):
        with pytest.raises(PerturbationError):
            plan(make_dataset([10, 10]), 0.1, 0, mode=FlipMode.BALANCED_SWAP)

    def test_json_round_trip(self, tmp_path):
        dataset = make_dataset([20, 20, 20])
        original = plan(dataset, 0.2, seed=4)
        restored = PerturbationPlan.load(original.save(tmp_path / "plan.json"))
        np.testing.assert_array_equal(apply(dataset, restored).labels, apply(dataset, original).labels)


class TestApply:

    def test_zero_plan_is_identity(self):
        dataset = make_dataset([10, 10])
        perturbed = apply(dataset, plan(dataset, 0.0, 2))
        np.testing.assert_array_equal(perturbed.labels, dataset.labels)

    def test_binary_histogram_preserved(self):
        dataset = make_dataset([100, 100])
        perturbed = apply(dataset, plan(dataset, 0.3, 11))
        assert int(np.sum(perturbed.labels != dataset.labels)) == 60
        assert perturbed.class_counts().tolist() == [100, 100]

    def test_features_shared(self):
        dataset = make_dataset([10, 10])
        perturbed = apply(dataset, plan(dataset, 0.2, 1))
        assert perturbed.features is dataset.features
        assert perturbed.class_count == dataset.class_count

    def test_size_mismatch(self):
        with pytest.raises(PerturbationError):
            apply(make_dataset([10, 10]), plan(make_dataset([12, 10]), 0.1, 0))

    def test_label_mismatch(self):
        p = plan(make_dataset([10, 10], seed=0), 0.3, 0)
        other = make_dataset([10, 10], seed=0).with_labels(1 - make_dataset([10, 10], seed=0).labels)
        with pytest.raises(PerturbationError):
            apply(other, p)

    @given(st.lists(st.integers(2, 60), min_size=2, max_size=5),
           st.floats(0.0, 0.45), st.integers(0, 2 ** 32))
    @settings(max_examples=100, deadline=None)
    def test_hamming_equals_planned_flips(self, counts, degree, seed):
        dataset = make_dataset(counts, seed=seed % 1000)
        p = plan(dataset, degree, seed)
        perturbed = apply(dataset, p)
        assert int(np.sum(perturbed.labels != dataset.labels)) == sum(p.per_class_flip_counts.values())
        lost = dataset.class_counts() - np.bincount(dataset.labels[perturbed.labels == dataset.labels],
                                                     minlength=len(counts))
        assert lost.tolist() == [p.per_class_flip_counts[c] for c in range(len(counts))]

    @given(st.floats(0.0, 0.4), st.floats(0.0, 0.4))
    @settings(max_examples=50, deadline=None)
    def test_flip_counts_monotone(self, r1, r2):
        dataset = make_dataset([37, 23, 11])
        low, high = sorted([r1, r2])
        a, b = plan(dataset, low, 0), plan(dataset, high, 0)
        assert all(a.per_class_flip_counts[c] <= b.per_class_flip_counts[c] for c in range(3))
