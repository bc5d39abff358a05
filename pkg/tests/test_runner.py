"""
Tests for experiment orchestration: grid rows, crash isolation, sweeps and result files.
"""

# pylint: disable=redefined-outer-name

from pathlib import Path

import numpy as np
import pytest

from config.experiment_config import load_experiment_config, parse_experiment_config
from core import runner as runner_module
from core.baselines import cross_validate
from core.datasets import SyntheticSpec, generate, to_csv
from core.errors import ConfigError, LearnerError
from core.pvcore import pv_validate
from core.runner import (
    STATUS_ERROR, STATUS_OK, CleanPvCache, ExperimentRow, ExperimentRunner, any_failed, emit_scatter,
    read_rows, sweep_curves, write_results,
)
from learners import LEARNER_MAPPING, LearnerBase, register_learner
from logger import performance_logger
from utils import STREAM_DATA, STREAM_TEST

REFERENCE_CONFIG = Path(__file__).resolve().parent.parent / "config" / "experiment_configurations.json"
EXPLODING = "exploding"


class ExplodingLearner(LearnerBase):
    family = EXPLODING
    defaults = {}

    def fit(self, features, labels, class_count):
        raise LearnerError("fit diverged")

    def decide(self, parameters, features):
        return np.zeros(features.shape[0], dtype=np.int64)


@pytest.fixture
def exploding_family():
    register_learner(EXPLODING, ExplodingLearner)
    yield EXPLODING
    LEARNER_MAPPING.pop(EXPLODING, None)


def tiny_config(**overrides):
    payload = {
        'name': 'tiny',
        'master_seed': 42,
        'datasets': [{'kind': 'synthetic', 'family': 'moon', 'n_samples': 60,
                      'feature_noise': 0.1, 'test_samples': 200}],
        'learners': [{'family': 'gaussian_nb'},
                     {'family': 'decision_tree', 'hyperparams': {'max_depth': 3}}],
        'schedule': {'degrees': [0.0, 0.1, 0.2], 'repetitions': 2},
        'depth_grid': [1, 2, 3],
        'train_noise_grid': [0.0, 0.2],
        'max_workers': 1,
    }
    payload.update(overrides)
    return parse_experiment_config(payload)


def by_family(rows, family):
    return next(row for row in rows if row.family == family)


class TestModelSelection:

    def test_row_matches_direct_computation(self):
        runner = ExperimentRunner(tiny_config())
        rows = runner.run_model_selection()
        assert len(rows) == 2
        assert not any_failed(rows)

        prepared = runner.prepare_dataset(0)
        spec = next(s for s in runner.learner_specs(0) if s.family == 'gaussian_nb')
        expected = pv_validate(spec, prepared.train, runner.noise_schedule(0))
        row = by_family(rows, 'gaussian_nb')
        assert row.pv_folded == expected.folded_score
        assert row.pv_raw == expected.raw_slope_magnitude
        assert row.training_accuracy == expected.baseline_accuracy
        assert row.pv_seed == runner.noise_schedule(0).master_seed
        assert row.cv_mean == cross_validate(spec, prepared.train, runner.cv_spec(0)).mean
        assert row.holdout_accuracy is not None
        assert prepared.test.n_samples == 200

    def test_rows_sorted_by_dataset_then_learner(self):
        config = tiny_config(datasets=[
            {'kind': 'synthetic', 'family': 'moon', 'n_samples': 40, 'test_samples': 0},
            {'kind': 'synthetic', 'family': 'circle', 'n_samples': 40, 'test_samples': 0},
        ])
        rows = ExperimentRunner(config).run_model_selection()
        keys = [(row.dataset, row.learner) for row in rows]
        assert keys == sorted(keys)
        assert len(rows) == 4
        assert all(row.holdout_accuracy is None for row in rows)

    def test_failing_cell_is_isolated(self, exploding_family):
        config = tiny_config(learners=[{'family': 'gaussian_nb'}, {'family': exploding_family}])
        rows = ExperimentRunner(config).run_model_selection()
        failed = by_family(rows, exploding_family)
        assert failed.status == STATUS_ERROR
        assert 'fit diverged' in failed.error
        assert by_family(rows, 'gaussian_nb').status == STATUS_OK
        assert any_failed(rows)

    def test_missing_csv_dataset_yields_error_rows(self, tmp_path):
        config = tiny_config(datasets=[
            {'kind': 'synthetic', 'family': 'moon', 'n_samples': 40},
            {'kind': 'csv', 'path': str(tmp_path / 'absent.csv')},
        ])
        rows = ExperimentRunner(config).run_model_selection()
        assert len(rows) == 4
        assert sum(row.status == STATUS_ERROR for row in rows) == 2

    def test_small_csv_has_no_holdout(self, iris_csv):
        config = tiny_config(datasets=[{'kind': 'csv', 'path': iris_csv, 'label_column': 'species'}])
        runner = ExperimentRunner(config)
        prepared = runner.prepare_dataset(0)
        assert prepared.test is None
        assert prepared.train.n_samples == 150

    def test_csv_with_test_file(self, tmp_path, iris_csv):
        test_path = tmp_path / "iris_test.csv"
        lines = open(iris_csv, encoding='utf-8').read().splitlines()
        # reversed rows reorder first appearance of the species names
        test_path.write_text("\n".join([lines[0]] + lines[:0:-1]) + "\n", encoding='utf-8')
        config = tiny_config(datasets=[{'kind': 'csv', 'path': iris_csv, 'label_column': 'species',
                                        'test_path': str(test_path)}])
        prepared = ExperimentRunner(config).prepare_dataset(0)
        np.testing.assert_array_equal(prepared.test.labels, prepared.train.labels[::-1])

    def test_label_noise_stays_out_of_synthetic_test_draw(self):
        config = tiny_config(datasets=[{'kind': 'synthetic', 'family': 'linear', 'n_samples': 100,
                                        'feature_noise': 0.2, 'noise_mode': 'labels', 'test_samples': 2000}])
        runner = ExperimentRunner(config)
        prepared = runner.prepare_dataset(0)

        clean_test = generate(SyntheticSpec('linear', 2000, 0.0, runner.seed(STREAM_TEST, 0)))
        np.testing.assert_array_equal(prepared.test.labels, clean_test.labels)
        np.testing.assert_array_equal(prepared.test.features, clean_test.features)
        clean_train = generate(SyntheticSpec('linear', 100, 0.0, runner.seed(STREAM_DATA, 0)))
        assert np.count_nonzero(prepared.train.labels != clean_train.labels) == 20

    def test_feature_jitter_kept_in_synthetic_test_draw(self):
        runner = ExperimentRunner(tiny_config())
        jittered = generate(SyntheticSpec('moon', 200, 0.1, runner.seed(STREAM_TEST, 0)))
        np.testing.assert_array_equal(runner.prepare_dataset(0).test.features, jittered.features)

    def test_worker_count_does_not_change_rows(self):
        serial = ExperimentRunner(tiny_config(), max_workers=1).run_model_selection()
        parallel = ExperimentRunner(tiny_config(), max_workers=4).run_model_selection()
        assert [row.to_dict() for row in serial] == [row.to_dict() for row in parallel]


class TestResultFiles:

    def test_reruns_are_byte_identical(self, tmp_path):
        outputs = []
        for run in ('a', 'b'):
            config = tiny_config()
            rows = ExperimentRunner(config).run_model_selection()
            outputs.append(write_results(rows, tmp_path / run, 'model_selection', config,
                                         {'scatter': emit_scatter(rows)}))
        for kind in ('csv', 'json', 'scatter'):
            assert outputs[0][kind].read_bytes() == outputs[1][kind].read_bytes()
        assert outputs[0]['timings'].exists()

    def test_csv_columns_and_manifest_round_trip(self, tmp_path):
        config = tiny_config()
        rows = ExperimentRunner(config).run_model_selection()
        paths = write_results(rows, tmp_path, 'ms', config)
        header = paths['csv'].read_text(encoding='utf-8').splitlines()[0].split(',')
        assert header == ExperimentRow.columns()
        assert 'wall_time' not in header
        assert [row.to_dict() for row in read_rows(paths['json'])] == [row.to_dict() for row in rows]


class TestScatter:

    def test_empty(self):
        assert emit_scatter([]) == []

    def test_one_point_per_scored_row(self):
        rows = ExperimentRunner(tiny_config()).run_model_selection()
        rows.append(ExperimentRow('model_selection', 'x', 0, 'knn', 'knn', 'k=1', 0, status=STATUS_ERROR))
        points = emit_scatter(rows)
        assert len(points) == 2
        assert set(points[0]) == {'dataset', 'learner', 'pv_folded', 'training_accuracy'}


class TestSweeps:

    def test_depth_sweep_rows_and_curve(self):
        runner = ExperimentRunner(tiny_config())
        rows = runner.run_hyperparam_sweep()
        assert [row.hyperparams for row in rows] == ['max_depth=1', 'max_depth=2', 'max_depth=3']
        curves = sweep_curves(rows, 'max_depth')
        assert [entry['max_depth'] for entry in curves] == [1.0, 2.0, 3.0]
        assert curves[0]['local_maxima'] == 1
        assert curves[0]['pv_argmax'] == 2.0
        assert curves[0]['pv_smoothed'] is None and curves[-1]['pv_smoothed'] is None
        assert curves[1]['pv_smoothed'] == pytest.approx(np.mean([entry['pv_folded_mean'] for entry in curves]))

    def test_empty_grid_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentRunner(tiny_config()).run_hyperparam_sweep(grid=[])

    def test_size_sweep_single_size(self):
        rows = ExperimentRunner(tiny_config()).run_size_sweep([40])
        assert len(rows) == 2
        assert all(row.size == 40 and row.n == 40 for row in rows)
        assert all(row.cv_mean is None and row.holdout_accuracy is not None for row in rows)

    def test_size_sweep_nested_sizes(self):
        rows = ExperimentRunner(tiny_config()).run_size_sweep([20, 40, 60])
        assert sorted({row.size for row in rows}) == [20, 40, 60]
        assert not any_failed(rows)

    def test_noise_sensitivity_rows(self):
        rows = ExperimentRunner(tiny_config()).run_noise_sensitivity()
        assert len(rows) == 2 * 2
        assert sorted({row.train_noise for row in rows}) == [0.0, 0.2]
        assert all(row.holdout_accuracy is not None and row.pv_folded is not None for row in rows)

    def test_noise_hurts_memoriser_holdout(self):
        config = tiny_config(
            datasets=[{'kind': 'synthetic', 'family': 'linear', 'n_samples': 200, 'test_samples': 1000}],
            learners=[{'family': 'knn', 'hyperparams': {'k': 1}}],
            train_noise_grid=[0.0, 0.3],
        )
        rows = ExperimentRunner(config).run_noise_sensitivity()
        clean, noisy = sorted(rows, key=lambda row: row.train_noise)
        assert clean.holdout_accuracy - noisy.holdout_accuracy > 0.1

    def test_noise_grid_out_of_range(self):
        with pytest.raises(ConfigError):
            ExperimentRunner(tiny_config()).run_noise_sensitivity([0.6])

    def test_oracle_holdout_flat_under_training_noise(self, register_oracle):
        runner = ExperimentRunner(tiny_config(learners=[{'family': 'oracle'}], train_noise_grid=[0.0, 0.1, 0.3]))
        prepared = runner.prepare_dataset(0)
        register_oracle(prepared.train, prepared.test)
        rows = runner.run_noise_sensitivity()
        assert [row.holdout_accuracy for row in rows] == [1.0, 1.0, 1.0]

    def test_single_value_grid_matches_model_selection(self):
        runner = ExperimentRunner(tiny_config(learners=[{'family': 'decision_tree', 'hyperparams': {'max_depth': 3}}]))
        [swept] = runner.run_hyperparam_sweep(grid=[3])
        [selected] = runner.run_model_selection()
        expected = {**selected.to_dict(), 'experiment': swept.experiment}
        assert swept.to_dict() == expected

    def test_noise_sensitivity_independent_of_worker_count(self):
        config = tiny_config(train_noise_grid=[0.0, 0.1, 0.3])
        serial = ExperimentRunner(config, max_workers=1).run_noise_sensitivity()
        parallel = ExperimentRunner(config, max_workers=4).run_noise_sensitivity()
        assert [row.to_dict() for row in serial] == [row.to_dict() for row in parallel]


class TestCellAccounting:

    @pytest.fixture
    def logged_retrainings(self, monkeypatch):
        counts = []

        def record(experiment, dataset, learner, wall_time, retrainings, status):
            counts.append(retrainings)

        monkeypatch.setattr(performance_logger, 'log_cell_stats', record)
        return counts

    def test_model_selection_counts_pv_cv_and_holdout_fits(self, logged_retrainings):
        config = tiny_config(learners=[{'family': 'gaussian_nb'}], cv={'folds': 3})
        ExperimentRunner(config).run_model_selection()
        # r=0 once, two noisy degrees twice each, three folds, one hold-out fit
        assert logged_retrainings == [1 + 2 * 2 + 3 + 1]

    def test_size_sweep_counts_no_cv_fits(self, logged_retrainings):
        ExperimentRunner(tiny_config(learners=[{'family': 'gaussian_nb'}])).run_size_sweep([40])
        assert logged_retrainings == [1 + 2 * 2 + 1]

    def test_noise_cells_count_shared_clean_pv_once(self, logged_retrainings):
        config = tiny_config(learners=[{'family': 'gaussian_nb'}], train_noise_grid=[0.0, 0.2, 0.3],
                             noise_repetitions=2)
        ExperimentRunner(config).run_noise_sensitivity()
        assert sorted(logged_retrainings) == [2, 2, 2 + 1 + 2 * 2]

    def test_failed_cell_counts_nothing(self, logged_retrainings, exploding_family):
        ExperimentRunner(tiny_config(learners=[{'family': exploding_family}])).run_model_selection()
        assert logged_retrainings == [0]

    def test_clean_pv_computed_once_per_learner_across_threads(self, monkeypatch):
        calls = []

        def counting_pv(spec, data, schedule, *args, **kwargs):
            calls.append(spec.family)
            return pv_validate(spec, data, schedule, *args, **kwargs)

        monkeypatch.setattr(runner_module, 'pv_validate', counting_pv)
        config = tiny_config(train_noise_grid=[0.0, 0.1, 0.2, 0.3])
        rows = ExperimentRunner(config, max_workers=4).run_noise_sensitivity()
        assert len(rows) == 2 * 4
        assert sorted(calls) == ['decision_tree', 'gaussian_nb']

    def test_clean_pv_cache_reports_who_computed(self):
        cache = CleanPvCache()
        first = cache.get('k', lambda: 'computed')
        second = cache.get('k', lambda: 'recomputed')
        assert first == ('computed', True)
        assert second == ('computed', False)


def depth_sweep_curve(dataset, repetitions=10):
    config = tiny_config(datasets=[dataset], schedule={'degrees': [0.0, 0.1, 0.2, 0.3], 'repetitions': repetitions},
                         depth_grid=list(range(1, 13)))
    rows = ExperimentRunner(config).run_hyperparam_sweep()
    assert not any_failed(rows)
    return sweep_curves(rows)


def assert_single_interior_peak(curve):
    depths = [entry['max_depth'] for entry in curve]
    smoothed = [entry['pv_smoothed'] for entry in curve]
    peak = curve[0]['pv_argmax']
    assert curve[0]['local_maxima'] == 1
    assert depths[0] < peak < depths[-1]
    best = max(value for value in smoothed if value is not None)
    assert best > curve[0]['pv_folded_mean']
    assert best > curve[-1]['pv_folded_mean']


@pytest.mark.slow
class TestReferenceExperiments:

    def test_nb_and_svm_rank_top_two_on_noisy_linear(self):
        reference = load_experiment_config(REFERENCE_CONFIG)
        assert [learner.family for learner in reference.learners] == [
            'decision_tree', 'gaussian_nb', 'linear_svm', 'logistic_regression', 'knn']
        scores = {}
        for seed in range(10):
            config = tiny_config(
                master_seed=seed,
                datasets=[{'kind': 'synthetic', 'family': 'linear', 'n_samples': 100, 'feature_noise': 0.2}],
                learners=[learner.model_dump() for learner in reference.learners],
                schedule=reference.schedule.model_dump(),
                holdout={'enabled': False},
            )
            rows = ExperimentRunner(config).run_model_selection()
            assert not any_failed(rows)
            for row in rows:
                scores.setdefault(row.family, []).append(row.pv_folded)

        medians = {family: float(np.median(values)) for family, values in scores.items()}
        top_two = sorted(medians, key=medians.get, reverse=True)[:2]
        assert set(top_two) == {'gaussian_nb', 'linear_svm'}
        assert medians['decision_tree'] == min(medians.values())

    def test_depth_sweep_on_moon_has_single_interior_peak(self):
        curve = depth_sweep_curve({'kind': 'synthetic', 'family': 'moon', 'n_samples': 100, 'feature_noise': 0.0})
        assert_single_interior_peak(curve)
        assert curve[0]['pv_argmax'] <= curve[0]['training_accuracy_argmax']

    def test_depth_sweep_on_csv_has_single_interior_peak(self, tmp_path):
        path = to_csv(generate(SyntheticSpec('moon', 500, 0.2, seed=5)), tmp_path / "moon500.csv")
        curve = depth_sweep_curve({'kind': 'csv', 'path': str(path), 'label_column': 'label'})
        assert curve[0]['dataset'] == 'moon500'
        assert_single_interior_peak(curve)

    def test_larger_samples_raise_deep_tree_pv_not_holdout(self):
        # feature jitter 0.2 keeps the hold-out accuracy of the 100-row tree away from its ceiling
        config = tiny_config(
            datasets=[{'kind': 'synthetic', 'family': 'moon', 'n_samples': 100, 'feature_noise': 0.2,
                       'test_samples': 2000}],
            learners=[{'family': 'decision_tree', 'hyperparams': {'max_depth': 10}}],
            schedule={'degrees': [0.0, 0.1, 0.2, 0.3], 'repetitions': 3},
        )
        small, large = sorted(ExperimentRunner(config).run_size_sweep([100, 10_000]), key=lambda row: row.size)
        assert small.n == 100 and large.n == 10_000
        assert large.pv_folded - small.pv_folded >= 0.1
        assert abs(large.holdout_accuracy - small.holdout_accuracy) <= 0.05

    @pytest.mark.parametrize("seed", range(10))
    def test_memoriser_holdout_drops_faster_than_shallow_tree(self, seed):
        config = tiny_config(
            master_seed=seed,
            datasets=[{'kind': 'synthetic', 'family': 'moon', 'n_samples': 1000, 'feature_noise': 0.2,
                       'test_samples': 2000}],
            learners=[{'family': 'knn', 'hyperparams': {'k': 1}},
                      {'family': 'decision_tree', 'hyperparams': {'max_depth': 3}}],
            train_noise_grid=[0.0, 0.3],
        )
        rows = ExperimentRunner(config).run_noise_sensitivity()
        assert not any_failed(rows)

        def drop(family):
            by_noise = {row.train_noise: row.holdout_accuracy for row in rows if row.family == family}
            return by_noise[0.0] - by_noise[0.3]

        assert drop('knn') > drop('decision_tree')


