"""Tests for logging configuration."""
import logging

import pytest

from pdm_spectra.utils.logger import set_level


def test_set_level() -> None:
    """Test raising the package level."""
    set_level("debug")

    assert logging.getLogger("pdm_spectra").level == logging.DEBUG
    set_level("INFO")


def test_unknown_level() -> None:
    """Test rejecting unknown level names."""
    with pytest.raises(ValueError):
        set_level("LOUD")
