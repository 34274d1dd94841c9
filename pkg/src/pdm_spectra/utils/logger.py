"""Logging configuration."""
import logging
import sys

LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def _level(name: str) -> int:
    name = name.upper()
    if name not in LEVELS:
        raise ValueError(f"Unknown log level '{name}', expected one of {', '.join(LEVELS)}")
    return getattr(logging, name)


def setup_logging(level: str = "INFO") -> None:
    """Configure logging for the application.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR)
    """
    logging.basicConfig(
        level=_level(level),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler(sys.stdout)
        ]
    )


def set_level(level: str) -> None:
    """Change the level of the package loggers after setup (the CLI --verbose flag)."""
    logging.getLogger().setLevel(_level(level))
    logging.getLogger("pdm_spectra").setLevel(_level(level))
