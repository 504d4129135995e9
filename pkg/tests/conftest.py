import json

import pytest

from src.core.alicki_test import PUBLISHED_PARAMS, PUBLISHED_STATE
from src.core.config_resolver import CONFIGS_DIR


@pytest.fixture
def published_params():
    return PUBLISHED_PARAMS


@pytest.fixture
def published_state():
    return PUBLISHED_STATE


@pytest.fixture
def configs_dir():
    return CONFIGS_DIR


@pytest.fixture
def write_config(tmp_path):
    """Write a flat config mapping to a JSON file and return its path."""

    def write(data: dict, name: str = "config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return write
