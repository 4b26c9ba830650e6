"""Bundled example data."""

from __future__ import annotations

from importlib.resources import files
from pathlib import Path

from .frame import Frame

HEART_TARGET = "HeartDisease"


def heart_path() -> Path:
    """Path of the 918-row heart-disease-style binary dataset."""
    return Path(str(files("arborist") / "data" / "heart.csv"))


def load_heart() -> Frame:
    from .workflow import load_dataset

    return load_dataset(heart_path(), HEART_TARGET)
