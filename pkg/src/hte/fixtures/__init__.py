"""Bundled fixture data for smoke tests and examples."""

from importlib import resources
from pathlib import Path


def fixture_path(name: str = "voice_stand_in.csv") -> Path:
    """Filesystem path of a bundled fixture CSV."""
    return Path(resources.files(__package__) / name)
