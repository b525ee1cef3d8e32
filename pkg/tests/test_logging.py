import logging

import pytest

from harness.utils import logging_config
from harness.utils.logging_config import (
    PACKAGE_LOGGER, file_logging_enabled, get_logger, log_level_from_env, set_stage, setup_logging,
)


@pytest.fixture
def quiet_package_logger(monkeypatch):
    monkeypatch.setattr(logging_config, "is_running_in_docker", lambda: False)
    yield
    set_stage(None)
    setup_logging(log_level=logging.WARNING, log_to_file=False, log_to_console=True)


def test_records_carry_the_stage(capsys, quiet_package_logger):
    setup_logging(log_level=logging.INFO, log_to_file=False, log_to_console=True)
    set_stage("mask")
    get_logger("harness.preprocess.masking").info("drawing monthly fields")
    err = capsys.readouterr().err
    assert "mask - harness.preprocess.masking - INFO - drawing monthly fields" in err


def test_stdout_stays_clean(capsys, quiet_package_logger):
    setup_logging(log_level=logging.DEBUG, log_to_file=False, log_to_console=True)
    get_logger("harness.cli").warning("something odd")
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "something odd" in captured.err


def test_only_the_package_logger_is_configured(quiet_package_logger):
    root_handlers = list(logging.getLogger().handlers)
    package_logger = setup_logging(log_level=logging.INFO, log_to_file=False, log_to_console=True)
    assert package_logger.name == PACKAGE_LOGGER
    assert len(package_logger.handlers) == 1
    assert logging.getLogger().handlers == root_handlers


def test_rotating_file(tmp_path, monkeypatch, quiet_package_logger):
    monkeypatch.setenv("HARNESS_LOG_DIR", str(tmp_path / "logs"))
    setup_logging(log_level=logging.INFO, log_to_file=True, log_to_console=False)
    get_logger("harness.scoring.twcrps").info("scored 900 points")
    for handler in logging.getLogger(PACKAGE_LOGGER).handlers:
        handler.flush()
    (log_file,) = (tmp_path / "logs").iterdir()
    assert "scored 900 points" in log_file.read_text()


@pytest.mark.parametrize("value, expected", [("DEBUG", logging.DEBUG), ("warning", logging.WARNING),
                                             ("nonsense", logging.INFO), ("", logging.INFO)])
def test_level_from_environment(monkeypatch, value, expected):
    monkeypatch.setenv("HARNESS_LOG_LEVEL", value)
    assert log_level_from_env() == expected


def test_file_logging_switch(monkeypatch):
    monkeypatch.delenv("DOCKER_CONTAINER", raising=False)
    monkeypatch.setenv("HARNESS_LOG_TO_FILE", "false")
    assert not file_logging_enabled()
    monkeypatch.setenv("DOCKER_CONTAINER", "true")
    monkeypatch.setenv("HARNESS_LOG_TO_FILE", "true")
    assert not file_logging_enabled()
