"""
Harness Package

Competition harness for spatio-temporal prediction of sea surface temperature
extremes: preprocessing into anomalies, missing-data masks and validation sets,
the cylinder-minimum ground truth, the pooled-ECDF benchmark, threshold-weighted
CRPS scoring and team ranking.
"""
from harness.utils.logging_config import file_logging_enabled, log_level_from_env, setup_logging

# Logging is configured on import so every module logs consistently,
# including when the package is used as a library or under pytest.
setup_logging(log_level=log_level_from_env(), log_to_file=file_logging_enabled(), log_to_console=True)
