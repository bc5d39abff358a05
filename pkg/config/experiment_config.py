# config/experiment_config.py
# Structured experiment file: datasets, learners (with grids), schedule, CV and hold-out policy

import itertools
import json
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from config.config import Config, SyntheticFamilies
from core.errors import ConfigError


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra='forbid')


class SyntheticDatasetConfig(_StrictModel):
    """Generated two-class distribution; a fresh test sample is drawn for hold-out accuracy"""
    kind: Literal['synthetic'] = 'synthetic'
    family: Literal[SyntheticFamilies.MOON, SyntheticFamilies.CIRCLE, SyntheticFamilies.LINEAR]
    n_samples: int = Field(100, ge=4)
    feature_noise: float = Field(0.0, ge=0.0)
    noise_mode: Literal['features', 'labels'] = 'features'
    test_samples: int = Field(Config.HOLDOUT_TEST_SIZE, ge=0)


class CsvDatasetConfig(_StrictModel):
    kind: Literal['csv']
    path: str
    label_column: Union[int, str] = -1
    header: bool = True
    name: Optional[str] = None
    # external hold-out file with the same columns
    test_path: Optional[str] = None


DatasetConfig = Annotated[Union[SyntheticDatasetConfig, CsvDatasetConfig], Field(discriminator='kind')]


class LearnerConfig(_StrictModel):
    family: str
    hyperparams: Dict[str, Any] = Field(default_factory=dict)
    grid: Dict[str, List[Any]] = Field(default_factory=dict)
    train_seed: Optional[int] = Field(None, ge=0)

    @model_validator(mode='after')
    def _grid_keys_disjoint(self):
        overlap = sorted(set(self.grid) & set(self.hyperparams))
        if overlap:
            raise ValueError(f"hyperparameters {overlap} appear both fixed and in the grid")
        if any(len(values) == 0 for values in self.grid.values()):
            raise ValueError("grid value lists must be non-empty")
        return self

    def expand(self) -> List[Dict[str, Any]]:
        """Cartesian product of the grid merged into the fixed hyperparameters"""
        keys = sorted(self.grid)
        combos = []
        for values in itertools.product(*(self.grid[key] for key in keys)):
            hyperparams = dict(self.hyperparams)
            hyperparams.update(zip(keys, values))
            combos.append(hyperparams)
        return combos


class ScheduleConfig(_StrictModel):
    degrees: List[float] = Field(default_factory=lambda: list(Config.PV_DEGREES))
    repetitions: int = Field(Config.PV_REPETITIONS, ge=1)
    include_baseline: bool = Config.PV_INCLUDE_BASELINE


class CvConfig(_StrictModel):
    folds: int = Field(Config.CV_FOLDS, ge=2)
    stratified: bool = Config.CV_STRATIFIED


class HoldoutConfig(_StrictModel):
    enabled: bool = True
    test_fraction: float = Field(Config.HOLDOUT_FRACTION, gt=0.0, lt=1.0)
    stratified: bool = True
    # datasets smaller than this are scored on all their rows without a hold-out part
    small_dataset_threshold: int = Field(Config.SMALL_DATASET_THRESHOLD, ge=0)


class ExperimentConfig(_StrictModel):
    name: str = 'experiment'
    master_seed: int = Field(Config.PV_MASTER_SEED, ge=0)
    datasets: List[DatasetConfig] = Field(min_length=1)
    learners: List[LearnerConfig] = Field(min_length=1)
    schedule: ScheduleConfig = Field(default_factory=ScheduleConfig)
    cv: CvConfig = Field(default_factory=CvConfig)
    holdout: HoldoutConfig = Field(default_factory=HoldoutConfig)
    size_grid: Optional[List[int]] = None
    depth_grid: List[int] = Field(default_factory=lambda: list(Config.DEPTH_GRID), min_length=1)
    train_noise_grid: List[float] = Field(default_factory=lambda: list(Config.TRAIN_NOISE_GRID), min_length=1)
    noise_repetitions: int = Field(1, ge=1)
    output_dir: str = Config.OUTPUT_DIR
    max_workers: int = Field(Config.MAX_WORKERS, ge=1)

    @field_validator('size_grid')
    @classmethod
    def _sizes_increasing(cls, sizes):
        if sizes is not None:
            if not sizes:
                raise ValueError("size_grid must not be empty")
            if any(b <= a for a, b in zip(sizes, sizes[1:])):
                raise ValueError(f"size_grid must be strictly increasing: {sizes}")
        return sizes

    @field_validator('depth_grid')
    @classmethod
    def _depths_positive(cls, depths):
        if any(d < 1 for d in depths):
            raise ValueError(f"depth_grid values must be >= 1: {depths}")
        return depths

    @field_validator('train_noise_grid')
    @classmethod
    def _noise_in_range(cls, grid):
        if any(not 0.0 <= r <= 0.5 for r in grid):
            raise ValueError(f"train_noise_grid values must lie in [0, 0.5]: {grid}")
        return grid

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode='json')


def parse_experiment_config(payload: Dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(payload)
    except ValidationError as e:
        raise ConfigError(f"invalid experiment configuration:\n{e}") from e


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read a .json or .yaml/.yml experiment file"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"experiment configuration not found: {path}")
    text = path.read_text(encoding='utf-8')
    try:
        if path.suffix.lower() in ('.yaml', '.yml'):
            payload = yaml.safe_load(text)
        else:
            payload = json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as e:
        raise ConfigError(f"could not parse {path}: {e}") from e
    if not isinstance(payload, dict):
        raise ConfigError(f"{path} must hold a mapping at the top level")
    return parse_experiment_config(payload)
