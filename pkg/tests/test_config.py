"""Tests for engine settings."""

import pytest
from pydantic import ValidationError

from bicomplex.config import Settings


def test_defaults(settings):
    assert settings.jet_cap >= 1
    assert 1 <= settings.max_arity <= 4
    assert settings.report_format in ("text", "json")


def test_validators():
    assert Settings(log_level="debug").log_level == "DEBUG"
    assert Settings(log_format="json").is_json_logging
    with pytest.raises(ValidationError):
        Settings(max_arity=5)
    with pytest.raises(ValidationError):
        Settings(jet_cap=0)
