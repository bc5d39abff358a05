# interface/experiment_management.py
# Loads experiment files, applies command-line overrides and shows what will run

import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from tabulate import tabulate

from config.experiment_config import (
    CsvDatasetConfig,
    ExperimentConfig,
    load_experiment_config,
    parse_experiment_config,
)
from utils import flatten_hyperparams, write_json

DEFAULT_CONFIG_FILE = str(Path(__file__).resolve().parent.parent / "config" / "experiment_configurations.json")


class ExperimentConfigurationManager:
    """Experiment configuration manager"""

    def __init__(self, config_file: str = DEFAULT_CONFIG_FILE):
        self.config_file = config_file
        self.configuration: Optional[ExperimentConfig] = None

    def load_configuration(self) -> ExperimentConfig:
        """Load and validate the experiment file; raises ConfigError"""
        self.configuration = load_experiment_config(self.config_file)
        return self.configuration

    def apply_overrides(self, seed: Optional[int] = None, reps: Optional[int] = None,
                        degrees: Optional[Sequence[float]] = None, out: Optional[str] = None,
                        jobs: Optional[int] = None) -> ExperimentConfig:
        """Re-validate the configuration with command-line values taking precedence"""
        if self.configuration is None:
            self.load_configuration()
        payload = self.configuration.to_dict()
        if seed is not None:
            payload['master_seed'] = seed
        if reps is not None:
            payload['schedule']['repetitions'] = reps
        if degrees is not None:
            payload['schedule']['degrees'] = list(degrees)
        if out is not None:
            payload['output_dir'] = out
        if jobs is not None:
            payload['max_workers'] = jobs
        self.configuration = parse_experiment_config(payload)
        return self.configuration

    def save_resolved(self, output_dir: Optional[str] = None, stem: str = "resolved_config") -> Path:
        """Write the effective configuration next to the results"""
        if self.configuration is None:
            self.load_configuration()
        output_dir = output_dir or self.configuration.output_dir
        os.makedirs(output_dir, exist_ok=True)
        return write_json(self.configuration.to_dict(), Path(output_dir) / f"{stem}.json")

    def dataset_table(self) -> List[List[Any]]:
        rows = []
        for index, dataset in enumerate(self.configuration.datasets):
            if isinstance(dataset, CsvDatasetConfig):
                rows.append([index, 'csv', dataset.name or Path(dataset.path).stem,
                             dataset.path, dataset.test_path or '-'])
            else:
                rows.append([index, 'synthetic', dataset.family,
                             f"n={dataset.n_samples}, noise={dataset.feature_noise} ({dataset.noise_mode})",
                             f"fresh {dataset.test_samples}" if dataset.test_samples else '-'])
        return rows

    def learner_table(self) -> List[List[Any]]:
        rows = []
        for learner in self.configuration.learners:
            grid = ', '.join(f"{key}={values}" for key, values in sorted(learner.grid.items()))
            rows.append([learner.family, flatten_hyperparams(learner.hyperparams) or '-',
                         grid or '-', len(learner.expand())])
        return rows

    def display_configuration(self):
        """Display the datasets, learners and noise schedule that will run"""
        if self.configuration is None:
            print("No experiment configuration loaded")
            return
        config = self.configuration

        print(f"\nExperiment: {config.name} (master seed {config.master_seed})")
        print("=" * 80)
        print(tabulate(self.dataset_table(), headers=['#', 'Kind', 'Name', 'Source', 'Test set'],
                       tablefmt='grid'))
        print(tabulate(self.learner_table(), headers=['Family', 'Hyperparameters', 'Grid', 'Specs'],
                       tablefmt='grid'))
        schedule = config.schedule
        print(f"\nNoise degrees: {schedule.degrees} x {schedule.repetitions} repetitions"
              f"{'' if schedule.include_baseline else ' (r=0 excluded from the fit)'}")
        print(f"CV: {config.cv.folds} folds{' (stratified)' if config.cv.stratified else ''}")
        print(f"Output directory: {config.output_dir}, workers: {config.max_workers}")

    def summary(self) -> Dict[str, Any]:
        config = self.configuration
        return {
            'datasets': len(config.datasets),
            'learner_specs': sum(len(learner.expand()) for learner in config.learners),
            'retrainings_per_cell': config.schedule.repetitions * (len(config.schedule.degrees) - 1) + 1,
        }
