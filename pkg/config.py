#!/usr/bin/env python3
"""
Configuration Module for LPR-ADER
Environment defaults plus the per-run configuration file
"""

import os
import configparser
import logging
from dataclasses import dataclass, fields, replace
from typing import Optional, Tuple

from dotenv import load_dotenv

from errors import ConfigurationError

load_dotenv()

logger = logging.getLogger('LPR-ADER.Config')


class Config:
    """Centralized configuration for LPR-ADER"""

    # Runtime environment
    THREADS = int(os.getenv('LPR_ADER_THREADS', '0')) or (os.cpu_count() or 1)
    LOG_LEVEL = os.getenv('LPR_ADER_LOG_LEVEL', 'INFO')
    DB_PATH = os.getenv('LPR_ADER_DB_PATH')  # run history disabled when unset
    OUTPUT_DIR = os.getenv('LPR_ADER_OUTPUT_DIR', 'output')

    # Solver constants
    DEFAULT_CFL = 0.3
    PREDICTOR_TOLERANCE = 1e-12
    FLATTENER_M1 = 0.1
    SUPPORTED_DEGREES = (1, 2, 3)
    GENERATORS = ('lpr', 'vt', 'et', 'tets')

    # Reference 1D solver
    REFERENCE_POINTS = 15000
    REFERENCE_TF = 0.25


@dataclass
class RunConfig:
    """One simulation: case, mesh, scheme and output controls"""

    case: str = 'steady-vortex'
    degree: int = 1
    cfl: float = Config.DEFAULT_CFL
    t_final: Optional[float] = None  # None: case default
    bounds: Optional[Tuple[float, float, float, float, float, float]] = None  # None: case domain
    h: float = 1.0
    generator: str = 'lpr'
    jitter: float = 0.0
    seed: Optional[int] = None
    gamma: float = 1.4
    gas_constant: float = 1.0
    mu: Optional[float] = None  # None: case viscosity
    kappa: float = 0.0
    limiter: bool = True
    threads: int = Config.THREADS
    out_dir: Optional[str] = None
    vtk_every: int = 0
    csv_path: Optional[str] = None
    limiter_csv: Optional[str] = None
    database: Optional[str] = Config.DB_PATH

    def validate(self) -> 'RunConfig':
        """Raise ConfigurationError on invalid values, return self otherwise"""
        if self.degree not in Config.SUPPORTED_DEGREES:
            raise ConfigurationError(f"Unsupported degree N={self.degree}, expected one of {Config.SUPPORTED_DEGREES}")
        if not (0.0 < self.cfl <= 1.0):
            raise ConfigurationError(f"CFL must lie in (0, 1], got {self.cfl}")
        if self.t_final is not None and self.t_final < 0.0:
            raise ConfigurationError(f"Negative final time {self.t_final} is not supported (one-step explicit scheme)")
        if self.h <= 0.0:
            raise ConfigurationError(f"Mesh spacing must be positive, got {self.h}")
        if self.generator not in Config.GENERATORS:
            raise ConfigurationError(f"Unknown generator '{self.generator}', expected one of {Config.GENERATORS}")
        if self.bounds is not None and len(self.bounds) != 6:
            raise ConfigurationError(f"Box needs 6 numbers x0,y0,z0,x1,y1,z1, got {len(self.bounds)}")
        if self.mu is not None and self.mu < 0.0:
            raise ConfigurationError(f"Viscosity must be non-negative, got {self.mu}")
        if self.threads < 1:
            raise ConfigurationError(f"Thread count must be >= 1, got {self.threads}")
        if self.vtk_every < 0:
            raise ConfigurationError(f"VTK cadence must be >= 0, got {self.vtk_every}")
        return self


def parse_box(text: str) -> Tuple[float, ...]:
    """Parse 'x0,y0,z0,x1,y1,z1' into a 6-tuple"""
    try:
        values = tuple(float(v) for v in text.replace(' ', '').split(','))
    except ValueError as e:
        raise ConfigurationError(f"Invalid box '{text}': {e}")
    if len(values) != 6:
        raise ConfigurationError(f"Box needs 6 numbers x0,y0,z0,x1,y1,z1, got '{text}'")
    return values


def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ('1', 'true', 'yes', 'on'):
        return True
    if value in ('0', 'false', 'no', 'off'):
        return False
    raise ConfigurationError(f"Invalid boolean '{text}'")


# (section, key) -> (RunConfig field, parser)
_FILE_KEYS = {
    ('mesh', 'box'): ('bounds', parse_box),
    ('mesh', 'h'): ('h', float),
    ('mesh', 'generator'): ('generator', str),
    ('mesh', 'jitter'): ('jitter', float),
    ('mesh', 'seed'): ('seed', int),
    ('case', 'name'): ('case', str),
    ('case', 'tf'): ('t_final', float),
    ('case', 'mu'): ('mu', float),
    ('solver', 'degree'): ('degree', int),
    ('solver', 'cfl'): ('cfl', float),
    ('solver', 'gamma'): ('gamma', float),
    ('solver', 'gas_constant'): ('gas_constant', float),
    ('solver', 'kappa'): ('kappa', float),
    ('solver', 'limiter'): ('limiter', _parse_bool),
    ('solver', 'threads'): ('threads', int),
    ('output', 'dir'): ('out_dir', str),
    ('output', 'vtk_every'): ('vtk_every', int),
    ('output', 'csv'): ('csv_path', str),
    ('output', 'limiter_csv'): ('limiter_csv', str),
    ('output', 'database'): ('database', str),
}


def load_run_config(path: str, base: Optional[RunConfig] = None) -> RunConfig:
    """Read a [mesh]/[case]/[solver]/[output] key-value file on top of base

    Args:
        path: configuration file
        base: values to start from (typically built from CLI flags)

    Returns:
        Validated RunConfig
    """
    parser = configparser.ConfigParser()
    try:
        with open(path, 'r', encoding='utf-8') as f:
            parser.read_file(f)
    except OSError as e:
        raise ConfigurationError(f"Cannot read config file {path}: {e}")
    except configparser.Error as e:
        raise ConfigurationError(f"Malformed config file {path}: {e}")

    updates = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            entry = _FILE_KEYS.get((section, key))
            if entry is None:
                raise ConfigurationError(f"Unknown key [{section}] {key} in {path}")
            name, convert = entry
            try:
                updates[name] = convert(raw)
            except ValueError as e:
                raise ConfigurationError(f"Invalid value for [{section}] {key}: {e}")

    logger.debug(f"Loaded {len(updates)} settings from {path}")
    known = {f.name for f in fields(RunConfig)}
    assert set(updates) <= known
    return replace(base or RunConfig(), **updates).validate()
