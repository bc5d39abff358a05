#!/usr/bin/env python3
"""
utils.py

Perturbation Validation Toolkit - Common Utilities and Helper Functions

This module provides:
1. Seed-stream derivation for reproducible grids
2. Rounding and smoothing helpers used by perturbation and sweeps
3. JSON / CSV persistence of result tables
4. Parsing and formatting of CLI lists and hyperparameters
"""

import json
import math
from pathlib import Path
from datetime import datetime
from typing import Any, Dict, Iterable, List, Sequence, Union

import numpy as np
import pandas as pd

# Seed stream tags. Every random draw in a run descends from the master seed
# through one of these tags so sub-streams never overlap.
STREAM_DATA = 0
STREAM_TEST = 1
STREAM_PV = 2
STREAM_CV = 3
STREAM_HOLDOUT = 4
STREAM_TRAIN_NOISE = 5
STREAM_LEARNER = 6
STREAM_SUBSAMPLE = 7
STREAM_LABEL_NOISE = 8

_MAX_SEED = 2 ** 63 - 1


def derive_seed(master_seed: int, *path: int) -> int:
    """
    Derive an independent 63-bit seed from a master seed and integer coordinates

    Args:
        master_seed: Non-negative master seed
        *path: Non-negative integers identifying the sub-stream (stream tag, grid indices)

    Returns:
        Seed usable with numpy.random.default_rng
    """
    if master_seed < 0 or any(p < 0 for p in path):
        raise ValueError(f"Seeds and stream coordinates must be non-negative: {master_seed}, {path}")
    state = np.random.SeedSequence([int(master_seed), *[int(p) for p in path]]).generate_state(1, dtype=np.uint64)
    return int(state[0]) & _MAX_SEED


def round_half_up(value: float) -> int:
    """Round to the nearest integer, halves going up (tolerant to float noise)"""
    return int(math.floor(value + 0.5 + 1e-9))


def moving_average(values: Sequence[float], window: int = 3) -> np.ndarray:
    """
    Centered moving average over full windows only

    The first and last window // 2 positions, where the window does not fit,
    are NaN. A curve shorter than the window is returned unchanged.
    """
    values = np.asarray(values, dtype=float)
    if window < 1:
        raise ValueError("window must be >= 1")
    if len(values) < window:
        return values.copy()
    half = window // 2
    smoothed = np.full(len(values), np.nan)
    inner = np.convolve(values, np.ones(window) / window, mode='valid')
    smoothed[half:half + inner.size] = inner
    return smoothed


def count_local_maxima(values: Sequence[float]) -> int:
    """
    Count strict local maxima of a curve, treating plateaus as a single point

    NaN entries are skipped. A curve that rises then falls has exactly one
    maximum; a monotone curve has one (at its end).
    """
    values = np.asarray(values, dtype=float)
    values = values[~np.isnan(values)]
    if len(values) == 0:
        return 0
    # collapse plateaus
    keep = np.concatenate(([True], np.diff(values) != 0))
    compact = values[keep]
    if len(compact) == 1:
        return 1
    count = 0
    for i, value in enumerate(compact):
        left = compact[i - 1] if i > 0 else -np.inf
        right = compact[i + 1] if i < len(compact) - 1 else -np.inf
        if value > left and value > right:
            count += 1
    return count


def make_json_serializable(obj: Any) -> Any:
    """Make object JSON serializable - RECURSIVE"""
    if isinstance(obj, datetime):
        return obj.isoformat()
    elif isinstance(obj, np.ndarray):
        return [make_json_serializable(item) for item in obj.tolist()]
    elif isinstance(obj, (list, tuple)):
        return [make_json_serializable(item) for item in obj]
    elif isinstance(obj, dict):
        return {str(key): make_json_serializable(value) for key, value in obj.items()}
    elif isinstance(obj, (np.integer, np.floating, np.bool_)):
        return make_json_serializable(obj.item())
    elif isinstance(obj, float) and not math.isfinite(obj):
        return None
    elif isinstance(obj, Path):
        return str(obj)
    elif hasattr(obj, 'to_dict'):
        return make_json_serializable(obj.to_dict())
    else:
        return obj


def ensure_directory_exists(directory_path: Union[str, Path]) -> Path:
    """Create a directory (and parents) if needed and return it as a Path"""
    path = Path(directory_path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_json(payload: Any, path: Union[str, Path]) -> Path:
    """Write a JSON document with stable formatting"""
    path = Path(path)
    ensure_directory_exists(path.parent)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(make_json_serializable(payload), f, indent=2)
        f.write('\n')
    return path


def read_json(path: Union[str, Path]) -> Any:
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def write_table_csv(records: Iterable[Dict[str, Any]], path: Union[str, Path],
                    columns: Sequence[str] = ()) -> Path:
    """Write flat records to CSV; missing values become empty cells"""
    path = Path(path)
    ensure_directory_exists(path.parent)
    frame = pd.DataFrame(list(records), columns=list(columns) or None)
    frame.to_csv(path, index=False, lineterminator='\n')
    return path


def flatten_hyperparams(hyperparams: Dict[str, Any]) -> str:
    """Render hyperparameters as 'k1=v1;k2=v2' in key order"""
    return ';'.join(f"{key}={hyperparams[key]}" for key in sorted(hyperparams))


def parse_float_list(text: str) -> List[float]:
    """Parse '0,0.1,0.2' into floats"""
    return [float(part) for part in text.split(',') if part.strip()]


def parse_int_list(text: str) -> List[int]:
    """Parse '1,2,3' or a range '1-12' into integers"""
    text = text.strip()
    if '-' in text and ',' not in text:
        lo, hi = text.split('-', 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(part) for part in text.split(',') if part.strip()]
