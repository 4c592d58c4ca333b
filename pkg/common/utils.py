"""
Common utility functions.
"""
import logging
import os
from typing import Sequence, Union

import numpy as np

from .constants import DEFAULT_LOG_LEVEL


SeedLike = Union[int, Sequence[int]]


def setup_logger(name: str, level=DEFAULT_LOG_LEVEL) -> logging.Logger:
    """Set up a logger with consistent formatting."""
    logger = logging.getLogger(name)
    logger.setLevel(level)

    if not logger.handlers:
        handler = logging.StreamHandler()
        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )
        handler.setFormatter(formatter)
        logger.addHandler(handler)

    return logger


def set_log_level(level: str):
    """Apply a level to every logger created through setup_logger."""
    for name, logger in logging.Logger.manager.loggerDict.items():
        if isinstance(logger, logging.Logger) and logger.handlers:
            logger.setLevel(level)


def make_rng(seed: SeedLike) -> np.random.Generator:
    """Counter-based (Philox) generator for a seed or a tuple of seed words."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def format_float(value: float) -> str:
    """Format a float with 17 significant digits (round-trip exact)."""
    return format(float(value), '.17g')


def ensure_directory(path: str):
    """Ensure directory exists."""
    os.makedirs(path, exist_ok=True)
