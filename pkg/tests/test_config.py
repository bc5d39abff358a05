"""
Tests for environment settings, experiment files, the configuration manager and helpers.
"""

import json

import numpy as np
import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from config.config import Config, validate_config
from config.experiment_config import (
    CsvDatasetConfig, LearnerConfig, SyntheticDatasetConfig, load_experiment_config, parse_experiment_config,
)
from core.errors import ConfigError
from interface.experiment_management import ExperimentConfigurationManager
from utils import (
    count_local_maxima, derive_seed, flatten_hyperparams, moving_average, parse_float_list, parse_int_list,
    round_half_up,
)

MINIMAL = {
    'datasets': [{'kind': 'synthetic', 'family': 'moon'}],
    'learners': [{'family': 'gaussian_nb'}],
}


class TestEnvironmentConfig:

    def test_defaults_are_valid(self):
        assert validate_config()

    @pytest.mark.parametrize("attribute,value", [
        ('PV_DEGREES', (0.1, 0.2)),
        ('PV_DEGREES', (0.0, 0.3, 0.2)),
        ('PV_REPETITIONS', 0),
        ('CV_FOLDS', 1),
        ('MAX_WORKERS', 0),
        ('HOLDOUT_FRACTION', 1.0),
    ])
    def test_invalid_settings(self, monkeypatch, attribute, value):
        monkeypatch.setattr(Config, attribute, value)
        assert not validate_config()


class TestExperimentConfig:

    def test_minimal_defaults(self):
        config = parse_experiment_config(MINIMAL)
        assert isinstance(config.datasets[0], SyntheticDatasetConfig)
        assert config.datasets[0].n_samples == 100
        assert config.schedule.degrees == list(Config.PV_DEGREES)
        assert config.cv.folds == Config.CV_FOLDS

    def test_csv_entry_discriminated(self):
        config = parse_experiment_config({**MINIMAL, 'datasets': [{'kind': 'csv', 'path': 'iris.csv',
                                                                   'label_column': 'species'}]})
        assert isinstance(config.datasets[0], CsvDatasetConfig)
        assert config.datasets[0].label_column == 'species'

    @pytest.mark.parametrize("change", [
        {'datasets': []},
        {'datasets': [{'kind': 'synthetic', 'family': 'spiral'}]},
        {'datasets': [{'kind': 'synthetic', 'family': 'moon', 'n_samples': 2}]},
        {'learners': [{'family': 'knn', 'hyperparams': {'k': 3}, 'grid': {'k': [1, 3]}}]},
        {'size_grid': [100, 50]},
        {'depth_grid': [0, 1]},
        {'train_noise_grid': [0.7]},
        {'unexpected': True},
    ])
    def test_invalid_payloads(self, change):
        with pytest.raises(ConfigError):
            parse_experiment_config({**MINIMAL, **change})

    def test_grid_expansion(self):
        learner = LearnerConfig(family='linear_svm', hyperparams={'epochs': 10}, grid={'C': [0.1, 1.0]})
        assert learner.expand() == [{'epochs': 10, 'C': 0.1}, {'epochs': 10, 'C': 1.0}]
        assert LearnerConfig(family='gaussian_nb').expand() == [{}]

    def test_yaml_and_json_agree(self, tmp_path):
        (tmp_path / "a.yaml").write_text(yaml.safe_dump(MINIMAL), encoding='utf-8')
        (tmp_path / "a.json").write_text(json.dumps(MINIMAL), encoding='utf-8')
        assert load_experiment_config(tmp_path / "a.yaml") == load_experiment_config(tmp_path / "a.json")

    def test_unreadable_files(self, tmp_path):
        with pytest.raises(ConfigError):
            load_experiment_config(tmp_path / "missing.json")
        broken = tmp_path / "broken.json"
        broken.write_text("{not json", encoding='utf-8')
        with pytest.raises(ConfigError):
            load_experiment_config(broken)
        listing = tmp_path / "list.yaml"
        listing.write_text("- 1\n- 2\n", encoding='utf-8')
        with pytest.raises(ConfigError):
            load_experiment_config(listing)

    def test_shipped_configuration_loads(self):
        manager = ExperimentConfigurationManager()
        config = manager.load_configuration()
        assert len(config.datasets) == 6
        assert [learner.family for learner in config.learners] == [
            'decision_tree', 'gaussian_nb', 'linear_svm', 'logistic_regression', 'knn']


class TestConfigurationManager:

    @pytest.fixture
    def manager(self, tmp_path):
        path = tmp_path / "experiment.json"
        path.write_text(json.dumps({**MINIMAL, 'learners': [
            {'family': 'gaussian_nb'}, {'family': 'knn', 'grid': {'k': [1, 3, 5]}}]}), encoding='utf-8')
        manager = ExperimentConfigurationManager(str(path))
        manager.load_configuration()
        return manager

    def test_overrides_take_precedence(self, manager, tmp_path):
        config = manager.apply_overrides(seed=7, reps=2, degrees=[0.0, 0.2], out=str(tmp_path / 'o'), jobs=3)
        assert config.master_seed == 7
        assert config.schedule.repetitions == 2
        assert config.schedule.degrees == [0.0, 0.2]
        assert config.output_dir == str(tmp_path / 'o')
        assert config.max_workers == 3

    def test_invalid_override_rejected(self, manager):
        with pytest.raises(ConfigError):
            manager.apply_overrides(jobs=0)

    def test_tables_and_summary(self, manager):
        assert manager.learner_table()[1] == ['knn', '-', 'k=[1, 3, 5]', 3]
        assert manager.dataset_table()[0][:3] == [0, 'synthetic', 'moon']
        assert manager.summary()['learner_specs'] == 4

    def test_display(self, manager, capsys):
        manager.display_configuration()
        out = capsys.readouterr().out
        assert 'gaussian_nb' in out and 'Noise degrees' in out

    def test_save_resolved(self, manager, tmp_path):
        path = manager.save_resolved(str(tmp_path / 'resolved'))
        assert parse_experiment_config(json.loads(path.read_text(encoding='utf-8'))) == manager.configuration


class TestHelpers:

    def test_derive_seed_is_stable_and_distinct(self):
        assert derive_seed(0, 1, 2) == derive_seed(0, 1, 2)
        assert len({derive_seed(0, 1, 2), derive_seed(0, 2, 1), derive_seed(1, 1, 2), derive_seed(0, 1)}) == 4
        assert 0 <= derive_seed(123, 4) < 2 ** 63

    def test_derive_seed_rejects_negative(self):
        with pytest.raises(ValueError):
            derive_seed(-1)

    @pytest.mark.parametrize("value,expected", [(0.5, 1), (1.5, 2), (2.4999, 2), (0.1 * 5, 1), (0.0, 0)])
    def test_round_half_up(self, value, expected):
        assert round_half_up(value) == expected

    def test_moving_average_uses_full_windows_only(self):
        np.testing.assert_allclose(moving_average([1, 2, 3, 4], 3), [np.nan, 2.0, 3.0, np.nan])
        np.testing.assert_allclose(moving_average([1, 2], 3), [1.0, 2.0])

    def test_smoothed_edges_do_not_hide_an_interior_peak(self):
        # a partial edge window would average 0.59 and 0.73 above the first full window
        smoothed = moving_average([0.592, 0.731, 0.651, 0.502, 0.4, 0.3], 3)
        assert int(np.nanargmax(smoothed)) == 1
        assert count_local_maxima(smoothed) == 1

    @pytest.mark.parametrize("values,expected", [
        ([1, 3, 2], 1), ([1, 2, 3], 1), ([1, 3, 1, 3, 1], 2), ([2, 2, 2], 1), ([], 0), ([1, 3, 3, 1], 1),
        ([np.nan, 3, 2, 1, np.nan], 1), ([np.nan, np.nan], 0),
    ])
    def test_count_local_maxima(self, values, expected):
        assert count_local_maxima(values) == expected

    def test_parse_lists(self):
        assert parse_int_list('1-4') == [1, 2, 3, 4]
        assert parse_int_list('1,2,8') == [1, 2, 8]
        assert parse_float_list('0,0.1, 0.2') == [0.0, 0.1, 0.2]

    @given(st.dictionaries(st.sampled_from(['k', 'C', 'epochs', 'max_depth']), st.integers(0, 99)))
    @settings(max_examples=30)
    def test_flatten_hyperparams_is_order_independent(self, hyperparams):
        reordered = dict(reversed(list(hyperparams.items())))
        assert flatten_hyperparams(hyperparams) == flatten_hyperparams(reordered)
