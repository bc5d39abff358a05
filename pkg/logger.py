#!/usr/bin/env python3
"""
logger.py

Perturbation Validation Toolkit - Logging Configuration

This module handles:
1. Centralized logging configuration for datasets, learners, PV scoring and the runner
2. Structured logging with console, plain-file and JSON formats
3. Log rotation under Config.LOGS_DIR
4. Context adapters carrying dataset / learner / grid-cell identifiers
5. Performance logging for retraining grid cells
"""

import logging
import logging.handlers
import sys
from pathlib import Path
from datetime import datetime
import json
from typing import Optional, Dict, Any, Union

from config.config import Config

CONTEXT_FIELDS = ('dataset', 'learner', 'cell')

_RESERVED_RECORD_KEYS = {
    'name', 'msg', 'args', 'levelname', 'levelno', 'pathname', 'filename', 'module',
    'exc_info', 'exc_text', 'stack_info', 'lineno', 'funcName', 'created', 'msecs',
    'relativeCreated', 'thread', 'threadName', 'processName', 'process', 'message',
    'taskName',
}


class PvLogFormatter(logging.Formatter):
    """Plain formatter that appends experiment context when present"""

    base_format = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

    def __init__(self):
        super().__init__(self.base_format)

    def format(self, record):
        formatted_message = super().format(record)

        context_parts = []
        for field in CONTEXT_FIELDS:
            value = getattr(record, field, None)
            if value is not None:
                context_parts.append(f"{field.upper()}:{value}")

        if context_parts:
            formatted_message = f"{formatted_message} [{' | '.join(context_parts)}]"

        return formatted_message


class PvConsoleFormatter(PvLogFormatter):
    """Console formatter with colors for better readability"""

    colors = {
        'DEBUG': '\033[36m',    # Cyan
        'INFO': '\033[32m',     # Green
        'WARNING': '\033[33m',  # Yellow
        'ERROR': '\033[31m',    # Red
        'CRITICAL': '\033[35m', # Magenta
        'RESET': '\033[0m'
    }

    def format(self, record):
        formatted_message = super().format(record)
        if record.levelname in self.colors:
            formatted_message = f"{self.colors[record.levelname]}{formatted_message}{self.colors['RESET']}"
        return formatted_message


class PvJsonFormatter(logging.Formatter):
    """JSON formatter for structured logging and log analysis"""

    def format(self, record):
        log_data = {
            'timestamp': datetime.fromtimestamp(record.created).isoformat(),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'module': record.module,
            'function': record.funcName,
            'line': record.lineno
        }

        for field in CONTEXT_FIELDS:
            if hasattr(record, field):
                log_data[field] = getattr(record, field)

        if record.exc_info:
            log_data['exception'] = self.formatException(record.exc_info)

        for key, value in record.__dict__.items():
            if key in _RESERVED_RECORD_KEYS or key in CONTEXT_FIELDS or key.startswith('_'):
                continue
            log_data[f'extra_{key}'] = value

        return json.dumps(log_data, default=str)


class PvLoggerAdapter(logging.LoggerAdapter):
    """Adapter to add experiment context to log records"""

    def process(self, msg, kwargs):
        if 'extra' not in kwargs:
            kwargs['extra'] = {}
        for key, value in self.extra.items():
            kwargs['extra'].setdefault(key, value)
        return msg, kwargs


def _resolve_level(level: Union[int, str]) -> int:
    if isinstance(level, int):
        return level
    resolved = logging.getLevelName(str(level).upper())
    return resolved if isinstance(resolved, int) else logging.INFO


def setup_pv_logger(name: str, log_file: Optional[str] = None,
                    level: Union[int, str, None] = None,
                    json_logging: Optional[bool] = None,
                    **context: Any) -> Union[logging.Logger, PvLoggerAdapter]:
    """
    Set up a logger for a toolkit component

    Args:
        name: Logger name (typically component name)
        log_file: Optional log file name, created under Config.LOGS_DIR
        level: Logging level, defaults to Config.LOG_LEVEL
        json_logging: Use JSON formatting, defaults to Config.JSON_LOGGING
        **context: Optional dataset / learner / cell identifiers attached to every record

    Returns:
        Configured logger, wrapped in an adapter when context is given
    """
    level = _resolve_level(level if level is not None else Config.LOG_LEVEL)
    json_logging = Config.JSON_LOGGING if json_logging is None else json_logging

    logger = logging.getLogger(name)
    logger.setLevel(level)
    logger.propagate = False

    # Clear any existing handlers to avoid duplicates
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(PvJsonFormatter() if json_logging else PvConsoleFormatter())
    logger.addHandler(console_handler)

    if log_file and Config.LOG_TO_FILE:
        logs_dir = Path(Config.LOGS_DIR)
        logs_dir.mkdir(parents=True, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            logs_dir / log_file,
            maxBytes=Config.LOG_FILE_MAX_SIZE,
            backupCount=Config.LOG_FILE_BACKUP_COUNT
        )
        file_handler.setLevel(level)
        file_handler.setFormatter(PvJsonFormatter() if json_logging else PvLogFormatter())
        logger.addHandler(file_handler)

    context = {key: value for key, value in context.items() if value is not None}
    if context:
        return PvLoggerAdapter(logger, context)
    return logger


def with_context(logger: Union[logging.Logger, PvLoggerAdapter], **context: Any) -> PvLoggerAdapter:
    """Wrap an existing logger with additional experiment context"""
    if isinstance(logger, PvLoggerAdapter):
        merged = dict(logger.extra)
        merged.update({k: v for k, v in context.items() if v is not None})
        return PvLoggerAdapter(logger.logger, merged)
    return PvLoggerAdapter(logger, {k: v for k, v in context.items() if v is not None})


class PvPerformanceLogger:
    """Specialized logger for grid-cell timings"""

    def __init__(self, log_file: str = "pv_performance.log"):
        self.logger = setup_pv_logger('pv_performance', log_file, json_logging=True)

    def log_cell_stats(self, experiment: str, dataset: str, learner: str,
                       wall_time: float, retrainings: int, status: str,
                       details: Optional[Dict[str, Any]] = None):
        """Log timing of one experiment grid cell"""
        self.logger.info(
            f"Cell finished: {experiment}",
            extra={
                'dataset': dataset,
                'learner': learner,
                'wall_time': wall_time,
                'retrainings': retrainings,
                'status': status,
                'details': details or {},
                'metric_type': 'cell_performance'
            }
        )

    def log_run_summary(self, experiment: str, cells: int, failed_cells: int, wall_time: float):
        """Log totals for a finished experiment"""
        self.logger.info(
            f"Experiment finished: {experiment}",
            extra={
                'cells': cells,
                'failed_cells': failed_cells,
                'wall_time': wall_time,
                'metric_type': 'run_performance'
            }
        )


def get_datasets_logger() -> logging.Logger:
    """Get logger for dataset generation and sampling"""
    return setup_pv_logger('pv_datasets', 'datasets.log')


def get_learner_logger() -> logging.Logger:
    """Get logger for learner training"""
    return setup_pv_logger('pv_learners', 'learners.log')


def get_pv_logger() -> logging.Logger:
    """Get logger for perturbation and PV scoring"""
    return setup_pv_logger('pv_core', 'pv_core.log')


def get_runner_logger() -> logging.Logger:
    """Get logger for experiment orchestration"""
    return setup_pv_logger('pv_runner', 'pv_runner.log')


def get_api_logger() -> logging.Logger:
    """Get logger for API components"""
    return setup_pv_logger('pv_api', 'api.log')


def get_main_logger() -> logging.Logger:
    """Get main application logger"""
    return setup_pv_logger('pv_main', 'pv_main.log')


performance_logger = PvPerformanceLogger()

__all__ = [
    'setup_pv_logger',
    'with_context',
    'get_datasets_logger',
    'get_learner_logger',
    'get_pv_logger',
    'get_runner_logger',
    'get_api_logger',
    'get_main_logger',
    'PvPerformanceLogger',
    'PvLoggerAdapter',
    'performance_logger'
]
