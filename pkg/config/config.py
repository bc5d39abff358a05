# config/config.py
# Environment-driven defaults for perturbation validation runs

import os
import logging
from dotenv import load_dotenv
load_dotenv()
from typing import List, Tuple


def _env_bool(key: str, default: str) -> bool:
    return os.getenv(key, default).lower() == 'true'


def _env_floats(key: str, default: str) -> Tuple[float, ...]:
    return tuple(float(part) for part in os.getenv(key, default).split(',') if part.strip())


class Config:
    """Configuration class for perturbation validation experiments"""

    # Noise schedule - three-fold PV plus the unperturbed baseline point
    PV_DEGREES = _env_floats('PV_DEGREES', '0,0.1,0.2,0.3')
    PV_REPETITIONS = int(os.getenv('PV_REPETITIONS', '10'))
    PV_MASTER_SEED = int(os.getenv('PV_MASTER_SEED', '0'))
    PV_INCLUDE_BASELINE = _env_bool('PV_INCLUDE_BASELINE', 'true')

    # Baselines
    CV_FOLDS = int(os.getenv('CV_FOLDS', '3'))
    CV_STRATIFIED = _env_bool('CV_STRATIFIED', 'true')

    # Hold-out policy
    SMALL_DATASET_THRESHOLD = int(os.getenv('SMALL_DATASET_THRESHOLD', '2000'))
    HOLDOUT_TEST_SIZE = int(os.getenv('HOLDOUT_TEST_SIZE', '2000'))
    HOLDOUT_FRACTION = float(os.getenv('HOLDOUT_FRACTION', '0.5'))

    # Sweeps
    DEPTH_GRID = tuple(int(v) for v in _env_floats('DEPTH_GRID', '1,2,3,4,5,6,7,8,9,10,11,12'))
    TRAIN_NOISE_GRID = _env_floats('TRAIN_NOISE_GRID', '0,0.1,0.2,0.3')

    # Worker pool
    MAX_WORKERS = int(os.getenv('MAX_WORKERS', '4'))

    # Storage Configuration
    OUTPUT_DIR = os.getenv('OUTPUT_DIR', 'outputs')
    LOGS_DIR = os.getenv('LOGS_DIR', 'logs')

    # Logging Configuration
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
    JSON_LOGGING = _env_bool('JSON_LOGGING', 'false')
    LOG_TO_FILE = _env_bool('LOG_TO_FILE', 'true')
    LOG_FILE_MAX_SIZE = int(os.getenv('LOG_FILE_MAX_SIZE', '10485760'))  # 10MB
    LOG_FILE_BACKUP_COUNT = int(os.getenv('LOG_FILE_BACKUP_COUNT', '5'))

    # API server
    API_HOST = os.getenv('API_HOST', '127.0.0.1')
    API_PORT = int(os.getenv('API_PORT', '8000'))


class LearnerFamilies:
    """Learner family names understood by the registry"""
    DECISION_TREE = "decision_tree"
    GAUSSIAN_NB = "gaussian_nb"
    LINEAR_SVM = "linear_svm"
    LOGISTIC_REGRESSION = "logistic_regression"
    KNN = "knn"

    ALL = (DECISION_TREE, GAUSSIAN_NB, LINEAR_SVM, LOGISTIC_REGRESSION, KNN)


class SyntheticFamilies:
    """Synthetic distributions from the model-selection study"""
    MOON = "moon"
    CIRCLE = "circle"
    LINEAR = "linear"

    ALL = (MOON, CIRCLE, LINEAR)


def validate_config() -> bool:
    """Validate configuration settings"""
    logger = logging.getLogger('pv_config')
    errors: List[str] = []

    degrees = Config.PV_DEGREES
    if len(degrees) < 2:
        errors.append(f"PV_DEGREES needs at least two degrees, got {degrees}")
    if degrees and degrees[0] != 0.0:
        errors.append(f"PV_DEGREES must start at 0, got {degrees[0]}")
    if any(b <= a for a, b in zip(degrees, degrees[1:])):
        errors.append(f"PV_DEGREES must be strictly increasing: {degrees}")
    if any(not 0.0 <= r < 1.0 for r in degrees):
        errors.append(f"PV_DEGREES must lie in [0, 1): {degrees}")
    if Config.PV_REPETITIONS < 1:
        errors.append(f"PV_REPETITIONS must be >= 1, got {Config.PV_REPETITIONS}")
    if Config.PV_MASTER_SEED < 0:
        errors.append(f"PV_MASTER_SEED must be non-negative, got {Config.PV_MASTER_SEED}")
    if Config.CV_FOLDS < 2:
        errors.append(f"CV_FOLDS must be >= 2, got {Config.CV_FOLDS}")
    if Config.MAX_WORKERS < 1:
        errors.append(f"MAX_WORKERS must be >= 1, got {Config.MAX_WORKERS}")
    if not 0.0 < Config.HOLDOUT_FRACTION < 1.0:
        errors.append(f"HOLDOUT_FRACTION must lie in (0, 1), got {Config.HOLDOUT_FRACTION}")

    if errors:
        logger.error("Configuration errors:")
        for error in errors:
            logger.error(f"   • {error}")
        return False

    logger.info("Configuration validated successfully")
    return True


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO)
    validate_config()
