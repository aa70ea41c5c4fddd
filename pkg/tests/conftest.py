"""Shared fixtures."""

import pytest

from src.config import ENV_VARS


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Keep BULLWHIP_* variables from the developer's shell out of every test."""
    for var in ENV_VARS.values():
        monkeypatch.delenv(var, raising=False)


@pytest.fixture
def hand_sequence():
    return [1.0, 3.0, 2.0, 4.0]
