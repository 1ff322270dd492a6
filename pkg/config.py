"""
Configuration settings for the elderly-treatment model runner
"""

import os
from dotenv import load_dotenv

load_dotenv()

BASE_DIR = os.path.dirname(os.path.abspath(__file__))


class Config:
    """Base configuration"""

    # Logging
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
    LOG_FILE = os.getenv('LOG_FILE', os.path.join(BASE_DIR, 'logs', 'elderculture.log'))

    # Output settings
    OUTPUT_FORMAT = os.getenv('OUTPUT_FORMAT', 'csv')
    CSV_SIGNIFICANT_DIGITS = 12

    # Parallel sweeps
    JOBS = int(os.getenv('JOBS', 1))

    # Perfect-foresight path solver
    PATH_DAMPING = 0.5
    PATH_MAX_ITERATIONS = 10_000
    PATH_TOLERANCE = 1e-8
    PATH_HORIZON = int(os.getenv('PATH_HORIZON', 200))
    K0_FRACTION = 0.5

    # Sweep grids
    PHI_GRID_POINTS = 101
    CAPITAL_INTENSITY_MIN = 0.05
    CAPITAL_INTENSITY_MAX = 3.0
    CAPITAL_INTENSITY_POINTS = 60

    # Grid-search oracle as run by verify
    ORACLE_RESOLUTION = 64
    ORACLE_ROUNDS = 10
    ORACLE_BRACKET_STEPS = 6

    # Verification suite
    VERIFY_DRAWS = int(os.getenv('VERIFY_DRAWS', 1000))
    VERIFY_ORACLE_DRAWS = int(os.getenv('VERIFY_ORACLE_DRAWS', 100))
    VERIFY_SEED = 0

    # Ethnographic indices
    INDEX_SPECS_FILE = os.path.join(BASE_DIR, 'elderculture', 'data', 'index_specs.json')


class DevelopmentConfig(Config):
    """Development configuration"""


class TestingConfig(Config):
    """Testing configuration"""
    LOG_FILE = None
    VERIFY_DRAWS = 200
    VERIFY_ORACLE_DRAWS = 10


class ProductionConfig(Config):
    """Production configuration"""
    JOBS = int(os.getenv('JOBS', -1))
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'WARNING')
